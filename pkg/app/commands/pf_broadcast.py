"""
Perron-Frobenius Command
Spectra that pass through the broadcast channel undistorted.
"""

NAME = "pf-broadcast"


def add_parser(subparsers, parent):
    parser = subparsers.add_parser(NAME, parents=[parent], help="stationary spectra of unistochastic matrices")
    return parser
