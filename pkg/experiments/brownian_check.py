"""
brownian-check: P_f([0,a]×[0,b]) against ab + 4 U_1(a) U_2(b) on simulated paths
"""

import logging

from core.brownian import BrownianPrior
from models.result import CheckResult, ExperimentOutput
from utils.random_streams import map_chunks

logger = logging.getLogger(__name__)


def add_arguments(parser) -> None:
    parser.add_argument("--phi", type=str, help="Transform of the paths (default half_sine)")
    parser.add_argument("--n-steps", dest="n_steps", type=int, help="Path steps (default 10000)")
    parser.add_argument("--draws", type=int, help="Number of simulated densities (default 100)")
    parser.add_argument("--points", type=int, help="Random (a, b) pairs per density (default 1)")


def run(config, streams) -> ExperimentOutput:
    params = config.params
    prior = BrownianPrior(params.get("phi", "half_sine"), int(params.get("n_steps", 10000)))
    draws = int(params.get("draws", 100))
    points = int(params.get("points", 1))

    def one_draw(rng, size):
        rows = []
        for _ in range(size):
            density = prior.sample(rng)
            rows.extend(density.identity_rows(rng.random((points, 2))))
        return rows

    chunks = map_chunks(one_draw, draws, streams.seed_sequence("brownian"), workers=config.workers, chunk_size=1)
    rows = [dict(row, draw=i) for i, chunk in enumerate(chunks) for row in chunk]

    worst = max((abs(row["residual"]) for row in rows), default=0.0)
    bound = 10.0 / prior.n_steps
    logger.info(f"Brownian identity: worst residual {worst:.3g} over {len(rows)} points (bound {bound:.3g})")
    checks = [CheckResult.bound("brownian_identity", worst, bound, "max |P_f - ab - 4 U_1(a) U_2(b)|")]
    return ExperimentOutput(rows=rows, document={"phi": prior.phi, "n_steps": prior.n_steps}, checks=checks)
