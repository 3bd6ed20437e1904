"""Main module of the atom-wall van der Waals calculator"""

import sys

from atomwall.commands.run import parse_config, run
from atomwall.models.exceptions import AtomwallError
from atomwall.utils.config import get_settings
from atomwall.utils.logging import configure_logging, get_logger

logger = get_logger("application")


def main(argv: list[str] | None = None) -> int:
    """Parse the command line, run it and return the exit code"""
    configure_logging(get_settings().log_level)
    try:
        config = parse_config(argv)
    except AtomwallError as ae:
        sys.stderr.write(f"atomwall: error: {ae}\n")
        return ae.exit_code
    logger.debug("Run configuration: %s", config.model_dump_json())
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
