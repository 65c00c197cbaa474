"""
Phase Diagram Command
Mutual information across fraction sizes at a fixed time.
"""

NAME = "phase-diagram"


def add_parser(subparsers, parent):
    parser = subparsers.add_parser(NAME, parents=[parent], help="I(S:fE) over the fraction grid")
    return parser
