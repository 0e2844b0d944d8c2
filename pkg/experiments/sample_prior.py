"""
sample-prior: draw random densities and check that each lies in its Fréchet class
"""

import logging

import numpy as np

from core.gamma_mu import ProductDPPrior
from core.measures import cdf_rows
from experiments.common import add_prior_arguments, build_prior, marginal_error, marginal_tolerance, prior_spec
from models.grid import Rectangle
from models.result import CheckResult, ExperimentOutput
from utils.error_handling import ConfigError
from utils.random_streams import map_chunks

logger = logging.getLogger(__name__)

CHECK_POINTS = np.linspace(0.05, 0.95, 10)


def add_arguments(parser) -> None:
    add_prior_arguments(parser)
    parser.add_argument("--draws", type=int, help="Number of prior draws (default 100)")
    parser.add_argument("--a", type=float, help="Corner rectangle [0,a]x[0,b] (default 0.5)")
    parser.add_argument("--b", type=float, help="Corner rectangle [0,a]x[0,b] (default 0.5)")
    parser.add_argument("--cdf", type=str, help="CSV of the knots of G for every product_dp draw")


def run(config, streams) -> ExperimentOutput:
    params = config.params
    spec = prior_spec(params)
    prior = build_prior(spec)
    draws = int(params.get("draws", 100))
    corner = Rectangle.corner(float(params.get("a", 0.5)), float(params.get("b", 0.5)))
    cdf_path = params.get("cdf")
    if cdf_path and not isinstance(prior, ProductDPPrior):
        raise ConfigError("--cdf exports the distribution function G of Q and needs the product_dp family")

    def one_draw(rng, size):
        out = []
        for _ in range(size):
            draw = prior.sample(rng)
            knots = cdf_rows(draw.q.to_cdf()) if cdf_path else []
            out.append((draw.rectangle_prob(corner), marginal_error(draw, CHECK_POINTS), marginal_tolerance(draw), knots))
        return out

    results = [r for chunk in map_chunks(one_draw, draws, streams.seed_sequence("prior"), workers=config.workers,
                                         chunk_size=1) for r in chunk]
    rows = [
        {"draw": i, "family": spec["family"], "P_corner": prob, "marginal_error": err}
        for i, (prob, err, _, _) in enumerate(results)
    ]
    violations = sum(1 for _, err, tol, _ in results if err > tol)
    worst = max((err for _, err, _, _ in results), default=0.0)
    tol = max((t for _, _, t, _ in results), default=1e-10)
    logger.info(f"{draws} {spec['family']} draws, worst marginal error {worst:.3g}")

    checks = [CheckResult("marginals", violations == 0, worst, tol, f"{violations} of {draws} draws off their marginals")]
    corner_probs = np.array([r[0] for r in results])
    document = {
        "prior": spec,
        "corner": corner.to_dict(),
        "mean_P_corner": float(corner_probs.mean()) if draws else None,
    }
    tables = {}
    if cdf_path:
        tables[cdf_path] = [{"draw": i, **knot} for i, (_, _, _, knots) in enumerate(results) for knot in knots]
    return ExperimentOutput(rows=rows, document=document, checks=checks, tables=tables)
