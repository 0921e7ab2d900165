"""Henon-like maps in n + 1 dimensions: iteration, trapping-domain
certificates, horseshoe checks, Jacobian spectra and periodic orbits."""

from .estimator import HenonLikeMap
from .map_core import (
    Escaped,
    GeneralizedForm,
    MapParams,
    Nonlinearity,
    ParameterError,
    State,
    iterate,
    jacobian_at,
    manhattan_norm,
    step,
    step_array,
    to_generalized_form,
)
from .trapping import TrappingDomain, certified_domain, theorem2_domain, theorem3_domain

__all__ = [
    "Escaped",
    "GeneralizedForm",
    "HenonLikeMap",
    "MapParams",
    "Nonlinearity",
    "ParameterError",
    "State",
    "TrappingDomain",
    "certified_domain",
    "iterate",
    "jacobian_at",
    "manhattan_norm",
    "step",
    "step_array",
    "theorem2_domain",
    "theorem3_domain",
    "to_generalized_form",
]
