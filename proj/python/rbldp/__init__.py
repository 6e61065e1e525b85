"""Rough Bergomi simulation, small-noise rate functions and Monte Carlo checks."""

from ._core import (
    DomainError,
    ModelParams,
    NumericalError,
    __version__,
    borell_tis_check,
    cov_zb,
    cov_zw,
    cov_zz,
    exp_equiv_check,
    forward_path,
    gamma,
    holder_check,
    hyp2f1,
    kernel,
    mc_tail,
    rate_endpoint,
    rate_path,
    selfsim_check,
    simulate,
)

__all__ = [
    "DomainError",
    "ModelParams",
    "NumericalError",
    "__version__",
    "borell_tis_check",
    "cov_zb",
    "cov_zw",
    "cov_zz",
    "exp_equiv_check",
    "forward_path",
    "gamma",
    "holder_check",
    "hyp2f1",
    "kernel",
    "mc_tail",
    "rate_endpoint",
    "rate_path",
    "selfsim_check",
    "simulate",
]
