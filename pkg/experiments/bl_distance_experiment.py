"""
bl-distance: bounded-Lipschitz distance between two grid measures
"""

from core.measures import bl_distance_refined
from models.result import ExperimentOutput
from utils.error_handling import ConfigError
from utils.data_io import load_grid2d


def add_arguments(parser) -> None:
    parser.add_argument("--p", type=str, help="First measure (Grid2D JSON)")
    parser.add_argument("--q", type=str, help="Second measure (Grid2D JSON)")
    parser.add_argument("--method", choices=("transport", "potential"), help="LP form (default transport)")
    parser.add_argument("--scale", type=float, help="Metric scale (default 1)")


def run(config, streams) -> ExperimentOutput:
    params = config.params
    if not params.get("p") or not params.get("q"):
        raise ConfigError("bl-distance needs --p and --q")
    p = load_grid2d(params["p"])
    q = load_grid2d(params["q"])
    method = params.get("method", "transport")
    scale = float(params.get("scale", 1.0))
    distance = bl_distance_refined(p, q, metric_scale=scale, method=method)
    row = {"d_bl": distance, "method": method, "metric_scale": scale}
    return ExperimentOutput(rows=[row], document={"p_shape": list(p.shape), "q_shape": list(q.shape)})
