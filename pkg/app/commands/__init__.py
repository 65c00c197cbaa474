"""
Commands Package
One module per experiment subcommand.
"""
