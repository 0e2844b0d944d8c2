"""
Registry of all available experiments (CLI subcommands)
"""
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Experiment:
    name: str
    run: Callable[..., Any]
    add_arguments: Callable[[Any], None]
    help: str = ""


# Dictionary to store all registered experiments
EXPERIMENT_REGISTRY: Dict[str, Experiment] = {}


def register_experiment(name: str, run: Callable, add_arguments: Callable, help: str = "") -> None:
    """Register an experiment under its subcommand name"""
    logger.debug(f"Registering experiment: {name}")
    EXPERIMENT_REGISTRY[name] = Experiment(name, run, add_arguments, help)


def get_experiment(name: str) -> Optional[Experiment]:
    """Get an experiment by name"""
    experiment = EXPERIMENT_REGISTRY.get(name)
    if experiment is None:
        logger.warning(f"Experiment not found: {name}")
    return experiment


def list_experiments() -> Dict[str, Experiment]:
    """List all registered experiments"""
    return EXPERIMENT_REGISTRY.copy()
