"""
Helpers shared by the experiments: prior construction, argument parsing and
data loading
"""

import argparse
import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from config.settings import get_setting
from core.brownian import BrownianPrior
from core.checkerboard_prior import CheckerboardMixture, CheckerboardPrior, KLaw, RandomResolutionPrior, all_permutations
from core.gamma_mu import ProductDPPrior, ProductMeasure
from core.posterior import sample_exchangeable
from core.tensor_prior import TensorPrior
from models.grid import Grid1D, Rectangle
from models.observation import Observation
from utils.data_io import load_grid1d, load_json, load_observations
from utils.error_handling import ConfigError
from utils.random_streams import SeedStreams

logger = logging.getLogger(__name__)

FAMILIES = ("tensor", "brownian", "checkerboard", "random_k", "product_dp")


def add_prior_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("prior")
    group.add_argument("--prior", type=str, help="Prior JSON document")
    group.add_argument("--family", choices=FAMILIES, help="Prior family when no --prior file is given")
    group.add_argument("--k", type=int, help="Checkerboard resolution")
    group.add_argument("--alpha", type=float, help="Symmetric Dirichlet parameter")
    group.add_argument("--n-terms", dest="n_terms", type=int, help="Number of tensor basis terms")
    group.add_argument("--v-law", dest="v_law", choices=("uniform", "rademacher", "zero"), help="Tensor coefficient law")
    group.add_argument("--phi", type=str, help="Brownian transform name")
    group.add_argument("--n-steps", dest="n_steps", type=int, help="Brownian path steps")
    group.add_argument("--k-max", dest="k_max", type=int, help="Largest resolution of the random-K prior")
    group.add_argument("--c", type=float, help="Concentration of the product-DP prior")
    group.add_argument("--cells", type=int, help="Cells of the Lebesgue μ and ν of the product-DP prior (default 16)")


def prior_spec(params: Dict[str, Any]) -> Dict[str, Any]:
    """The prior document from --prior, or one assembled from the family flags"""
    if params.get("prior"):
        return load_json(params["prior"])
    family = params.get("family", "checkerboard")
    spec: Dict[str, Any] = {"family": family}
    for key in ("k", "alpha", "n_terms", "v_law", "phi", "n_steps", "k_max", "c", "cells"):
        if params.get(key) is not None:
            spec[key] = params[key]
    return spec


def build_prior(spec: Dict[str, Any]):
    """Sampler object with sample(rng) for a prior document"""
    family = spec.get("family")
    if family == "tensor":
        mu = Grid1D.from_dict(spec["mu"]) if "mu" in spec else None
        nu = Grid1D.from_dict(spec["nu"]) if "nu" in spec else None
        return TensorPrior.haar(int(spec.get("n_terms", 8)), mu, nu,
                                v_law=spec.get("v_law", "uniform"), common=bool(spec.get("common", False)))
    if family == "brownian":
        return BrownianPrior(spec.get("phi", "half_sine"), int(spec.get("n_steps", get_setting("BROWNIAN_STEPS", 1000))))
    if family == "checkerboard":
        if "perms" in spec:
            perms = tuple(tuple(s) for s in spec["perms"])
            k = int(spec.get("k", len(perms[0])))
        else:
            k = int(spec.get("k", 3))
            perms = tuple(all_permutations(k))
        alphas = spec.get("alphas", spec.get("alpha", 1.0))
        return CheckerboardPrior(k, perms, np.atleast_1d(np.asarray(alphas, dtype=float)))
    if family == "random_k":
        law = KLaw(int(spec.get("k_max", get_setting("K_MAX", 8))), float(spec.get("p", get_setting("K_GEOMETRIC_P", 0.5))))
        return RandomResolutionPrior(law, float(spec.get("alpha", 1.0)), spec.get("n_perms"))
    if family == "product_dp":
        cells = int(spec.get("cells", 16))
        mu = Grid1D.from_dict(spec["mu"]) if "mu" in spec else Grid1D.uniform(cells)
        nu = Grid1D.from_dict(spec["nu"]) if "nu" in spec else Grid1D.uniform(cells)
        return ProductDPPrior(float(spec.get("c", 2.0)), nu, mu)
    raise ConfigError(f"Unknown prior family {family!r}; choose from {FAMILIES}")


def marginal_error(draw, points: Sequence[float]) -> float:
    """max_t |P_f([0,t]×[0,1]) - μ([0,t])| and likewise for the second marginal; Γ(μ) draws check the first only"""
    if isinstance(draw, ProductMeasure):
        return draw.marginal_error(points)
    mu = getattr(draw, "mu", None) or getattr(getattr(draw, "tensor", None), "mu", None)
    nu = getattr(draw, "nu", None) or getattr(getattr(draw, "tensor", None), "nu", None)
    worst = 0.0
    for t in points:
        first = mu.cdf_at(t) if mu is not None else t
        second = nu.cdf_at(t) if nu is not None else t
        worst = max(worst,
                    abs(draw.rectangle_prob(Rectangle(0.0, t, 0.0, 1.0)) - float(first)),
                    abs(draw.rectangle_prob(Rectangle(0.0, 1.0, 0.0, t)) - float(second)))
    return worst


def marginal_tolerance(draw) -> float:
    """Exact formulas for checkerboard and product-DP draws, quadrature for the others"""
    return 1e-10 if isinstance(draw, (CheckerboardMixture, ProductMeasure)) else 1e-6


def parse_list(text, cast=float) -> List:
    if isinstance(text, (list, tuple)):
        return [cast(v) for v in text]
    try:
        return [cast(v) for v in str(text).split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"Cannot parse list {text!r}: {e}") from e


def parse_rect(text) -> Rectangle:
    """"x0,x1,y0,y1" or a dict"""
    if isinstance(text, dict):
        return Rectangle.from_dict(text)
    values = parse_list(text)
    if len(values) != 4:
        raise ConfigError(f"A rectangle needs four numbers x0,x1,y0,y1, got {text!r}")
    return Rectangle(*values)


def load_or_generate_data(params: Dict[str, Any], prior, streams: SeedStreams) -> List[Observation]:
    """Observations from --data, or n points from a prior draw on the 'data' stream"""
    if params.get("data"):
        return load_observations(params["data"])
    n = int(params.get("n", 0))
    if n == 0:
        return []
    _, data = sample_exchangeable(prior, n, rng=streams.rng("data"))
    logger.info(f"Generated {n} observations from a prior draw")
    return data


def marginal_grid(params: Dict[str, Any], key: str) -> Grid1D:
    """Grid1D from a file parameter, else Lebesgue on --cells cells"""
    if params.get(key):
        return load_grid1d(params[key])
    return Grid1D.uniform(int(params.get("cells", 16)))
