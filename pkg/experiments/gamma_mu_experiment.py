"""
gamma-mu: product-prior predictive, finite-dimensional laws and the beta laws
of the copula-composed distribution function
"""

import logging
import math

import numpy as np
from scipy.stats import kstwo

from core.checkerboard_prior import CheckerboardPrior
from core.copulas import CheckerboardCopulaPrior, ProductCopula, copula_from_dict
from core.gamma_mu import (
    SectionPartition,
    beta_law_ks,
    composed_cdf_law,
    composed_cdf_posterior,
    fdd_moments,
    forward_predictive_check,
    posterior_fdd,
    product_prior_predictive,
    random_copula_law,
)
from core.measures import cdf
from experiments.common import build_prior, marginal_grid, parse_list
from models.grid import IntervalSet
from models.observation import to_arrays
from models.result import CheckResult, ExperimentOutput
from utils.data_io import load_interval_set, load_json, load_observations
from utils.error_handling import ConfigError

logger = logging.getLogger(__name__)

KS_LEVEL = 1e-3


def _add_common(parser) -> None:
    parser.add_argument("--c", type=float, help="Concentration of the Dirichlet prior (default 2)")
    parser.add_argument("--nu", type=str, help="Base measure ν (Grid1D JSON); default Lebesgue")
    parser.add_argument("--mu", type=str, help="First marginal μ (Grid1D JSON); default Lebesgue")
    parser.add_argument("--cells", type=int, help="Cells of the default Lebesgue grids (default 16)")
    parser.add_argument("--data", type=str, help="Data CSV with an x,y header")


def add_arguments(parser) -> None:
    modes = parser.add_subparsers(dest="mode", required=True)

    predictive = modes.add_parser("predictive", help="μ(A) ν_n(B) / (c + n)", argument_default=parser.argument_default)
    _add_common(predictive)
    predictive.add_argument("--A", type=str, help="Interval set A (JSON)")
    predictive.add_argument("--B", type=str, help="Interval set B (JSON)")
    predictive.add_argument("--simulate", type=int, help="Forward-simulation replications for a check")

    fdd = modes.add_parser("fdd", help="Laws of (P(H_1), ..., P(H_m))", argument_default=parser.argument_default)
    _add_common(fdd)
    fdd.add_argument("--partition", type=str, help="SectionPartition JSON (default: ν-cells split in halves)")
    fdd.add_argument("--n-mc", dest="n_mc", type=int, help="Monte Carlo draws (default 10000)")

    law = modes.add_parser("cdf-law", help="P(F(x,y) <= a) and its posterior", argument_default=parser.argument_default)
    _add_common(law)
    law.add_argument("--copula", type=str, help="'product', a copula JSON or a checkerboard prior JSON")
    law.add_argument("--x", type=float, help="x with 0 < F_μ(x) < 1 (default 0.5)")
    law.add_argument("--y", type=float, help="y with 0 < F_ν(y) < 1 (default 0.5)")
    law.add_argument("--a", type=str, help="Comma-separated levels in [0, F_μ(x)] (default 11 even levels)")
    law.add_argument("--simulate", type=int, help="Stick-breaking draws for a Kolmogorov-Smirnov check")


def _interval(params, key, default):
    if params.get(key):
        return load_interval_set(params[key])
    return IntervalSet.of(default)


def _y_data(params):
    if not params.get("data"):
        return np.empty(0)
    return to_arrays(load_observations(params["data"]))[1]


def _load_copula(params):
    """(copula or copula sampler, is_random)"""
    source = params.get("copula", "product")
    if source == "product":
        return ProductCopula(), False
    document = load_json(source)
    if document.get("family") == "checkerboard":
        prior = build_prior(document)
        if not isinstance(prior, CheckerboardPrior):
            raise ConfigError("A random copula needs a checkerboard prior document")
        return CheckerboardCopulaPrior(prior), True
    return copula_from_dict(document), False


def run_predictive(config, streams) -> ExperimentOutput:
    params = config.params
    c = float(params.get("c", 2.0))
    mu, nu = marginal_grid(params, "mu"), marginal_grid(params, "nu")
    A = _interval(params, "A", (0.0, 0.5))
    B = _interval(params, "B", (0.0, 0.5))
    y = _y_data(params)

    value = product_prior_predictive(c, nu, mu, y, A, B)
    row = {"c": c, "n": int(y.size), "mu_A": A.measure(mu), "nu_B": B.measure(nu),
           "count_B": int(np.count_nonzero(B.contains(y))), "predictive": value}
    checks = []
    document = {"A": A.to_dict(), "B": B.to_dict()}
    if params.get("simulate"):
        pattern = B.contains(y)
        sim = forward_predictive_check(c, nu, mu, A, B, pattern, int(params["simulate"]),
                                       seed=streams.seed_sequence("forward"), workers=config.workers)
        row.update({"simulated": sim["estimate"], "simulated_se": sim["se"], "kept": sim["kept"]})
        checks.append(CheckResult.bound("forward_simulation", abs(sim["estimate"] - value), 3 * sim["se"]))
    return ExperimentOutput(rows=[row], document=document, checks=checks)


def run_fdd(config, streams) -> ExperimentOutput:
    params = config.params
    c = float(params.get("c", 2.0))
    mu, nu = marginal_grid(params, "mu"), marginal_grid(params, "nu")
    if params.get("partition"):
        partition = SectionPartition.from_dict(load_json(params["partition"]))
    else:
        halves = (np.arange(nu.n_cells) >= nu.n_cells // 2).astype(int)
        partition = SectionPartition.product(mu.n_cells, halves)
    y = _y_data(params)
    n_mc = int(params.get("n_mc", 10000))

    draws = posterior_fdd(c, nu, mu, partition, y, n_mc, seed=streams.seed_sequence("fdd"), workers=config.workers)
    mean, second = fdd_moments(c, nu, mu, partition, y)
    mc_mean = draws.mean(axis=0)
    mc_se = draws.std(axis=0, ddof=1) / math.sqrt(n_mc)
    squares = draws ** 2
    sq_se = squares.std(axis=0, ddof=1) / math.sqrt(n_mc)

    rows, checks = [], []
    for i in range(partition.m):
        rows.append({"set": i, "mean": float(mean[i]), "mc_mean": float(mc_mean[i]), "mc_se": float(mc_se[i]),
                     "second_moment": float(second[i, i]), "mc_second_moment": float(squares[:, i].mean())})
        checks.append(CheckResult.bound(f"mean_H{i}", abs(mc_mean[i] - mean[i]), 3 * max(mc_se[i], 1e-12)))
        checks.append(CheckResult.bound(f"second_moment_H{i}", abs(squares[:, i].mean() - second[i, i]),
                                        3 * max(sq_se[i], 1e-12)))
    return ExperimentOutput(rows=rows, document={"partition": partition.to_dict(), "n": int(y.size)}, checks=checks)


def run_cdf_law(config, streams) -> ExperimentOutput:
    params = config.params
    c = float(params.get("c", 2.0))
    mu, nu = marginal_grid(params, "mu"), marginal_grid(params, "nu")
    F_mu = cdf(mu)
    x, y = float(params.get("x", 0.5)), float(params.get("y", 0.5))
    u = float(F_mu(x))
    levels = parse_list(params["a"]) if params.get("a") else list(np.linspace(0.0, u, 11))
    y_data = _y_data(params)
    copula, is_random = _load_copula(params)

    rows = []
    for i, a in enumerate(levels):
        if is_random:
            n_mc = int(params.get("simulate") or 1000)
            law, law_se = random_copula_law(copula, F_mu, c, nu, x, y, a, n_mc,
                                            seed=streams.seed_sequence(f"copula_{i}"), workers=config.workers)
            post, post_se = random_copula_law(copula, F_mu, c, nu, x, y, a, n_mc, y_data=y_data,
                                              seed=streams.seed_sequence(f"copula_{i}"), workers=config.workers)
            rows.append({"a": a, "law": law, "law_se": law_se, "posterior": post, "posterior_se": post_se})
        else:
            rows.append({"a": a, "law": composed_cdf_law(copula, F_mu, c, nu, x, y, a),
                         "posterior": composed_cdf_posterior(copula, F_mu, c, nu, y_data, x, y, a)})

    checks = []
    if params.get("simulate") and not is_random:
        n_mc = int(params["simulate"])
        critical = float(kstwo.ppf(1.0 - KS_LEVEL, n_mc))
        prior_ks = beta_law_ks(copula, F_mu, c, nu, x, y, n_mc, seed=streams.seed_sequence("ks_prior"),
                               workers=config.workers)
        checks.append(CheckResult.bound("ks_prior", prior_ks["statistic"], critical, "Kolmogorov-Smirnov vs B_y[r(x,.)]"))
        if y_data.size:
            post_ks = beta_law_ks(copula, F_mu, c, nu, x, y, n_mc, seed=streams.seed_sequence("ks_posterior"),
                                  y_data=y_data, workers=config.workers)
            checks.append(CheckResult.bound("ks_posterior", post_ks["statistic"], critical,
                                            "Kolmogorov-Smirnov vs B_{n,y}[r(x,.)]"))

    document = {"x": x, "y": y, "F_mu_x": u, "F_nu_y": float(nu.cdf_at(y)), "n": int(y_data.size),
                "copula": params.get("copula", "product")}
    return ExperimentOutput(rows=rows, document=document, checks=checks)


MODES = {"predictive": run_predictive, "fdd": run_fdd, "cdf-law": run_cdf_law}


def run(config, streams) -> ExperimentOutput:
    mode = config.params.get("mode")
    if mode not in MODES:
        raise ConfigError(f"gamma-mu needs a mode, one of {sorted(MODES)}")
    return MODES[mode](config, streams)
