"""
Simulation Errors
Exception hierarchy shared by all services. Each class carries the exit
code the command line reports for it.
"""


class SimulationError(Exception):
    exit_code = 1


class ConfigError(SimulationError, ValueError):
    """Invalid input: bad index sets, mismatched dimensions, broken partitions."""
    exit_code = 2


class RegimeError(SimulationError):
    """A numerical or physical regime assumption does not hold."""
    exit_code = 3


class OutputError(SimulationError):
    exit_code = 4
