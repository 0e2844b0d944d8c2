"""
posterior: exact and importance-sampling posteriors, with an optional cross-check
"""

import logging

import numpy as np

from core.checkerboard_prior import CheckerboardPrior
from core.gamma_mu import ProductDPPrior
from core.posterior import exact_checkerboard_posterior, is_posterior
from experiments.common import add_prior_arguments, build_prior, load_or_generate_data, prior_spec
from models.grid import Rectangle
from models.result import CheckResult, ExperimentOutput
from utils.error_handling import ConfigError

logger = logging.getLogger(__name__)

QUADRANT = Rectangle.corner(0.5, 0.5)
METHODS = ("exact", "is", "both")


def add_arguments(parser) -> None:
    add_prior_arguments(parser)
    parser.add_argument("--data", type=str, help="Data CSV with an x,y header")
    parser.add_argument("--n", type=int, help="Generate n observations from a prior draw when no --data is given")
    parser.add_argument("--method", choices=METHODS, help="exact, is or both (default exact)")
    parser.add_argument("--particles", type=int, help="Importance-sampling particles (default 10000)")


def compute_posteriors(config, streams):
    """(spec, data, {method: posterior}) for the configured methods"""
    params = config.params
    spec = prior_spec(params)
    prior = build_prior(spec)
    method = params.get("method", "exact")
    if method not in METHODS:
        raise ConfigError(f"Unknown posterior method {method!r}")
    if isinstance(prior, ProductDPPrior):
        raise ConfigError("Product-DP draws have no density; use gamma-mu fdd with --data for their posterior")
    if method in ("exact", "both") and not isinstance(prior, CheckerboardPrior):
        raise ConfigError("The exact posterior needs a checkerboard prior with a fixed permutation list")

    data = load_or_generate_data(params, prior, streams)
    posteriors = {}
    if method in ("exact", "both"):
        posteriors["exact"] = exact_checkerboard_posterior(prior, data)
    if method in ("is", "both"):
        posteriors["is"] = is_posterior(prior, None, data, int(params.get("particles", 10000)),
                                        seed=streams.seed_sequence("particles"), workers=config.workers)
    return spec, data, posteriors


def _weight_rows(posteriors):
    rows = []
    exact = posteriors.get("exact")
    weighted = posteriors.get("is")
    if exact is not None:
        perms, means = exact.perms, exact.mean_weights()
    else:
        first = weighted.particles[0]
        if not hasattr(first, "perms"):
            return []
        perms, means = first.perms, None
    is_mean = is_se = None
    if weighted is not None and hasattr(weighted.particles[0], "weights"):
        is_mean, is_se = weighted.expectation_of(np.stack([p.weights for p in weighted.particles]))
    for j, sigma in enumerate(perms):
        row = {"index": j, "perm": " ".join(str(s) for s in sigma)}
        if means is not None:
            row["exact_mean"] = float(means[j])
        if is_mean is not None:
            row["is_mean"] = float(is_mean[j])
            row["is_se"] = float(is_se[j])
        rows.append(row)
    return rows


def run(config, streams) -> ExperimentOutput:
    spec, data, posteriors = compute_posteriors(config, streams)
    document = {"prior": spec, "n_obs": len(data)}
    checks = []

    for name, post in posteriors.items():
        document[name] = post.to_dict()
        document[name]["predictive_quadrant"] = post.predictive(QUADRANT)

    if "exact" in posteriors and "is" in posteriors:
        exact, weighted = posteriors["exact"], posteriors["is"]
        mean_exact, _ = exact.rectangle_moments(QUADRANT)
        mean_is, se_is = weighted.rectangle_expectation(QUADRANT)
        checks.append(CheckResult.bound("quadrant_exact_vs_is", abs(mean_exact - mean_is), 3 * max(se_is, 1e-12),
                                        "posterior mean of P_f([0,1/2]^2)"))

        is_mean, is_se = weighted.expectation_of(np.stack([p.weights for p in weighted.particles]))
        gap = np.abs(exact.mean_weights() - is_mean) - 3 * np.maximum(is_se, 1e-12)
        checks.append(CheckResult.bound("weights_exact_vs_is", float(gap.max()), 0.0,
                                        "max over j of |Δ E[U_j]| - 3 s.e."))

        evidence_gap = abs(exact.evidence - weighted.evidence)
        checks.append(CheckResult.bound("evidence_exact_vs_is", evidence_gap, 3 * max(weighted.evidence_se, 1e-300)))

    return ExperimentOutput(rows=_weight_rows(posteriors), document=document, checks=checks)
