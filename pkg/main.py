"""
FrechetLab - priors on Fréchet classes of bivariate distributions
"""

import argparse
import logging
import sys
from datetime import datetime

import experiments  # noqa: F401  (registers the subcommands)
from config.logging_config import setup_logging
from config.settings import VERSION, update_setting
from core.execution_loop import run
from experiments.experiment_registry import list_experiments
from models.experiment import ExperimentConfig
from utils.error_handling import EXIT_INVALID_CONFIG, EXIT_LIBRARY_ERROR, ConfigError, FrechetLabError
from utils.metrics import MetricsManager, get_metrics_summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frechetlab", description="FrechetLab - seeded experiments on priors for Fréchet classes")
    parser.add_argument("--config", "-c", type=str, help="JSON config document; flags override its values")
    parser.add_argument("--seed", type=int, help="Master seed (64-bit unsigned integer)")
    parser.add_argument("--out", "-o", type=str, help="Output file")
    parser.add_argument("--format", choices=("csv", "json"), help="Output format (default csv)")
    parser.add_argument("--workers", "-w", type=int, help="Worker threads for Monte Carlo work")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
    parser.add_argument("--list", "-l", action="store_true", help="List available experiments")

    subparsers = parser.add_subparsers(dest="command")
    for name, experiment in sorted(list_experiments().items()):
        sub = subparsers.add_parser(name, help=experiment.help, argument_default=argparse.SUPPRESS)
        experiment.add_arguments(sub)
    return parser


def main(argv=None) -> int:
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Setup logging
    log_level = logging.DEBUG if args.verbose else logging.INFO
    setup_logging(log_level)
    logger = logging.getLogger(__name__)

    # List experiments if requested
    if args.list:
        print("Available experiments:")
        for name, experiment in sorted(list_experiments().items()):
            print(f"- {name}: {experiment.help}")
        return 0

    metrics = MetricsManager()
    metrics.start_session()
    logger.info(f"FrechetLab v{VERSION} - started at {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

    try:
        config = ExperimentConfig.from_args(args)
        update_setting("N_WORKERS", config.workers)
        report = run(config)
        print(report.summary(), file=sys.stderr)
        logger.debug(f"Metrics: {get_metrics_summary()}")
        return report.exit_code
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except FrechetLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Execution interrupted by user")
        return EXIT_LIBRARY_ERROR
    except Exception as e:
        logger.error(f"Error in main execution: {str(e)}", exc_info=True)
        return EXIT_LIBRARY_ERROR
    finally:
        metrics.save_session()


if __name__ == "__main__":
    sys.exit(main())
