"""
Oracle Check Command
Factored S:fE functionals against the dense controlled-unitary state.
"""

NAME = "oracle-check"


def add_parser(subparsers, parent):
    parser = subparsers.add_parser(NAME, parents=[parent], help="compare the factored and dense constructions")
    parser.add_argument("--nt", type=int, help="total photon count of the dense build")
    return parser
