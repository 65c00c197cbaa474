"""
Spectrum Broadcast Simulator - Command Line
Main entry point: parse flags, load the experiment configuration, run it
and write the result files. Library errors are mapped to exit codes here.
"""

import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.commands.router import build_parser, overrides_from
from app.core.exceptions import SimulationError
from app.core.logging import configure_logging
from app.repositories.result_repo import ResultRepository
from app.services.experiment_service import ExperimentService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2


# ============================================================================
# ERROR REPORTING
# ============================================================================

def _report_validation(exc: ValidationError) -> None:
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"]) or "<config>"
        logger.error("config error at %s: %s", location, error["msg"])


# ============================================================================
# ENTRY POINT
# ============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        config = ExperimentService.load_config(args.config, overrides_from(args))
        result = ExperimentService.run(config)
        csv_path, json_path = ResultRepository.save(result, config.output)
    except ValidationError as exc:
        _report_validation(exc)
        return EXIT_CONFIG
    except SimulationError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code

    logger.info("results: %s, %s", csv_path, json_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
