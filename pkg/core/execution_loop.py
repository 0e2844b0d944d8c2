"""
Main execution loop: validate a config, run its experiment, write the results
"""

import logging

from config.settings import VERSION
from experiments.experiment_registry import get_experiment
from models.experiment import ExperimentConfig
from models.result import ExperimentOutput, RunReport
from utils.error_handling import ConfigError
from utils.metrics import last_duration_s, track_execution
from utils.output_writer import write_csv, write_json
from utils.random_streams import SeedStreams

logger = logging.getLogger(__name__)


def run(config: ExperimentConfig, write: bool = True) -> RunReport:
    """Run one experiment; the report's exit code is 0 iff every check passed"""
    config.validate()
    experiment = get_experiment(config.command)
    if experiment is None:
        raise ConfigError(f"Unknown experiment: {config.command}")

    config_hash = config.config_hash()
    logger.info(f"Starting {config.command} (seed {config.seed}, {config.workers} workers, config {config_hash[:12]})")

    streams = SeedStreams(config.seed)
    output: ExperimentOutput = track_execution(config.command)(experiment.run)(config, streams)

    report = RunReport(
        config=config.echo(),
        config_hash=config_hash,
        version=VERSION,
        checks=output.checks,
        rows=output.rows,
        document=output.document,
    )

    if write:
        path = config.output_path()
        if config.output_format == "csv" and report.rows:
            report.outputs.append(write_csv(report.rows, path, VERSION, config_hash))
        else:
            if config.output_format == "csv":
                logger.warning(f"{config.command} produced no table; writing JSON to {path}")
            report.outputs.append(write_json(report.result_document(), path, VERSION, config_hash))
        for extra, rows in output.tables.items():
            report.outputs.append(write_csv(rows, extra, VERSION, config_hash))

    report.timings[config.command] = last_duration_s(config.command)

    failed = [check.name for check in report.checks if not check.passed]
    if failed:
        logger.warning(f"{config.command}: failed checks {failed}")
    logger.info(f"Finished {config.command} in {report.timings[config.command]:.2f}s")
    return report
