"""
Command Router
Registers all subcommand parsers on a single argparse parser.
"""

import argparse
from typing import Any, Dict

from app.commands import (
    bound_check,
    counterexample,
    decoherence,
    mixed_env,
    oracle_check,
    pf_broadcast,
    phase_diagram,
)

COMMANDS = [decoherence, phase_diagram, mixed_env, counterexample, pf_broadcast, oracle_check, bound_check]

# flags that configure the process rather than the experiment
PROCESS_FLAGS = {"command", "config", "verbose"}


def _shared_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON experiment configuration; flags override its values")
    parent.add_argument("--output", help="directory for <kind>.csv and <kind>.json")
    parent.add_argument("--mode", choices=["finite_box", "thermodynamic"], help="photon counting mode")
    parent.add_argument("--tol", type=float, help="broadcast tolerance")
    parent.add_argument("--seed", type=int, help="seed for randomized sweeps")
    parent.add_argument("--verbose", action="store_true", help="debug logging")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbsim",
        description="Spectrum broadcast structures from photon scattering off a dielectric sphere",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = _shared_flags()
    for command in COMMANDS:
        command.add_parser(subparsers, parent)
    return parser


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    """Experiment fields set on the command line; the subcommand selects the kind."""
    overrides = {key: value for key, value in vars(args).items() if key not in PROCESS_FLAGS}
    overrides["kind"] = args.command
    return overrides
