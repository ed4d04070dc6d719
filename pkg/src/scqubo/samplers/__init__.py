"""Interchangeable QUBO samplers sharing the SamplerRequest contract."""

from .base import SamplerFn, SamplerRequest, random_sampler
from .exact import BRUTE_FORCE_MAX_N, brute_force, exact_sampler
from .nebm import NebmConfig, NebmState, nebm_sample, nebm_trajectory
from .sa import (
    SaConfig,
    beta_values,
    default_beta_range,
    run_metropolis,
    simulated_annealing,
)

__all__ = [
    "BRUTE_FORCE_MAX_N",
    "NebmConfig",
    "NebmState",
    "SaConfig",
    "SamplerFn",
    "SamplerRequest",
    "beta_values",
    "brute_force",
    "default_beta_range",
    "exact_sampler",
    "make_sampler",
    "nebm_sample",
    "nebm_trajectory",
    "random_sampler",
    "run_metropolis",
    "simulated_annealing",
]


def make_sampler(name: str, *, sa_config=None, nebm_config=None) -> SamplerFn:
    """Bind a sampler name to its config, yielding a plain request -> SampleSet callable."""
    if name == "sa":
        return lambda request: simulated_annealing(request, sa_config)
    if name == "nebm":
        return lambda request: nebm_sample(request, nebm_config)
    if name == "brute":
        return exact_sampler
    if name == "random":
        return random_sampler
    raise ValueError(f"unknown sampler {name!r}; expected sa, nebm, brute, or random")
