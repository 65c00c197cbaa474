"""
Decoherence Command
Coherent-part decay and macro-fraction overlap over a time grid.
"""

NAME = "decoherence"


def add_parser(subparsers, parent):
    parser = subparsers.add_parser(NAME, parents=[parent], help="decay of the coherent part and of macro-fraction overlaps")
    return parser
