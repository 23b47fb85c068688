"""Main entry point for the fairrank command."""

import json
import logging
import sys
from collections.abc import Sequence

from .cli import build_parser, dispatch
from .config import get_config
from .errors import FairRankError
from .logging_config import get_logger, setup_logging

# Set up logging before anything else
setup_logging()

logger = get_logger(__name__)


def main(argv: Sequence[str] | None = None) -> None:
    """Parse arguments, run the subcommand and map failures to exit codes."""
    try:
        config = get_config()
        args = build_parser(config).parse_args(argv)
        if args.verbose:
            setup_logging(logging.DEBUG)
        result = dispatch(args)
    except FairRankError as e:
        logger.error("Run failed", error=str(e), kind=type(e).__name__)
        raise SystemExit(e.exit_code) from e
    except ValueError as e:
        logger.error("Configuration error", error=str(e))
        raise SystemExit(1) from e
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        raise SystemExit(130) from None
    except Exception as e:
        logger.error("Unexpected error", exc_info=True, error=str(e))
        raise SystemExit(1) from e

    if isinstance(result, dict):
        for kind, path in result.items():
            print(f"{kind}\t{path}")
    else:
        json.dump(result, sys.stdout, indent=2)
        sys.stdout.write("\n")


if __name__ == "__main__":
    main()
