"""
predictive: P(Z_{n+1} ∈ H | data) for a list of rectangles
"""

import logging

from core.checkerboard_prior import CheckerboardMixture
from experiments.common import parse_rect
from experiments.posterior_experiment import add_arguments as add_posterior_arguments
from experiments.posterior_experiment import compute_posteriors
from models.grid import Rectangle
from models.result import CheckResult, ExperimentOutput

logger = logging.getLogger(__name__)

MARGINAL_STRIP = Rectangle(0.0, 0.5, 0.0, 1.0)


def add_arguments(parser) -> None:
    add_posterior_arguments(parser)
    parser.add_argument("--rect", action="append", help="Rectangle x0,x1,y0,y1; repeatable (default 0,0.5,0,0.5)")


def run(config, streams) -> ExperimentOutput:
    rects = [parse_rect(r) for r in config.params.get("rect") or ["0,0.5,0,0.5"]]
    spec, data, posteriors = compute_posteriors(config, streams)

    rows, checks = [], []
    for name, post in posteriors.items():
        for rect in rects:
            rows.append({"method": name, **rect.to_dict(), "predictive": post.predictive(rect)})

        total = post.predictive(Rectangle.full())
        checks.append(CheckResult.bound(f"{name}_total_mass", abs(total - 1.0), 1e-10))

        draws = getattr(post, "particles", None)
        if draws is None or isinstance(draws[0], CheckerboardMixture):
            strip = post.predictive(MARGINAL_STRIP)
            checks.append(CheckResult.bound(f"{name}_first_marginal", abs(strip - 0.5), 1e-10,
                                            "P(X_{n+1} <= 1/2) equals m([0,1/2])"))

    logger.info(f"Predictive probabilities for {len(rects)} rectangles after {len(data)} observations")
    return ExperimentOutput(rows=rows, document={"prior": spec, "n_obs": len(data)}, checks=checks)
