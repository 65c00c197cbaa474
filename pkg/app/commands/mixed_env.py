"""
Mixed Environment Command
Receptivity and decay laws for a mixed photon spectrum.
"""

NAME = "mixed-env"


def add_parser(subparsers, parent):
    parser = subparsers.add_parser(NAME, parents=[parent], help="receptivity and mixed-environment decay laws")
    return parser
