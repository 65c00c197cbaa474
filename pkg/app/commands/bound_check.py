"""
Bound Check Command
Measured |H_S - I(S:fE)| against its upper bound on randomized instances.
"""

NAME = "bound-check"


def add_parser(subparsers, parent):
    parser = subparsers.add_parser(NAME, parents=[parent], help="validate the information bound on random couplings")
    parser.add_argument("--configs", type=int, help="number of random instances")
    parser.add_argument("--nt", type=int, help="photon count of the sphere instance")
    return parser
