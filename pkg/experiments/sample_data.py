"""
sample-data: one density from the prior and n exchangeable observations from it
"""

import logging

from core.posterior import exchangeability_diagnostic, sample_exchangeable
from experiments.common import add_prior_arguments, build_prior, prior_spec
from models.result import CheckResult, ExperimentOutput

logger = logging.getLogger(__name__)

EXCHANGEABILITY_LEVEL = 1e-3


def add_arguments(parser) -> None:
    add_prior_arguments(parser)
    parser.add_argument("--n", type=int, help="Number of observations (default 100)")
    parser.add_argument("--exchangeability", type=int,
                        help="Replications of the (Z_1, Z_2, Z_3) chi-square check (default 2000, 0 to skip)")


def run(config, streams) -> ExperimentOutput:
    spec = prior_spec(config.params)
    prior = build_prior(spec)
    n = int(config.params.get("n", 100))

    draw, data = sample_exchangeable(prior, n, rng=streams.rng("data"))
    logger.info(f"Sampled {len(data)} observations from a {spec['family']} draw")

    document = {"prior": spec, "n": n}
    if hasattr(draw, "to_dict"):
        document["draw"] = draw.to_dict()

    checks = []
    n_rep = int(config.params.get("exchangeability", 2000))
    if n_rep > 0:
        diagnostic = exchangeability_diagnostic(prior, n_rep, seed=streams.seed_sequence("exchangeability"),
                                                level=EXCHANGEABILITY_LEVEL, workers=config.workers)
        document["exchangeability"] = diagnostic
        checks.append(CheckResult("exchangeability", diagnostic["passed"], diagnostic["pvalue"], EXCHANGEABILITY_LEVEL,
                                  f"chi-square {diagnostic['statistic']:.3f} on {diagnostic['df']} df, p-value vs level"))
    return ExperimentOutput(rows=[z.to_dict() for z in data], document=document, checks=checks)
