"""
Counterexample Command
Entangled two-qubit state that nevertheless satisfies I(A:B) = S(B).
"""

NAME = "counterexample"


def add_parser(subparsers, parent):
    parser = subparsers.add_parser(NAME, parents=[parent], help="entangled state meeting the redundancy condition")
    parser.add_argument("--p", type=float, help="mixing weight in (0, 1), p != 1/2")
    return parser
