"""Stationary distribution of the midnight-count queue."""

from ._midnight import (
    DiffusionParams,
    ModelParams,
    Projection,
    ProxyDensity,
    SolverError,
    compare,
    default_truncation,
    derive_diffusion_params,
    limit_check,
    project,
    proxy_density,
    simulate_diffusion,
    simulate_path,
    stationary_pmf,
)

__all__ = [
    "DiffusionParams",
    "ModelParams",
    "Projection",
    "ProxyDensity",
    "SolverError",
    "compare",
    "default_truncation",
    "derive_diffusion_params",
    "limit_check",
    "project",
    "proxy_density",
    "simulate_diffusion",
    "simulate_path",
    "stationary_pmf",
]
