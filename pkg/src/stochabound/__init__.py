"""Stochastic boundedness certificates for stable LTI systems.

Computes Lyapunov-based bounds on ``E||X(t)||`` for
``dX = A X dt + g(X, t) dW`` and checks them against Euler-Maruyama
Monte-Carlo ensembles.
"""

from .certify import (
    BoundReport,
    LyapunovCertificate,
    TailBound,
    certify,
    kappa_derivative,
    limit_bound,
    minimal_bound,
    quadratic_roots,
    sup_bound,
    tail_bound,
)
from .kernel import KernelConstants, KernelSpec, analytic_constants, estimate_constants_bruteforce, eval_kernel
from .linalg import SpectralExtrema, is_hurwitz, is_spd, solve_lyapunov, spectral_extrema_sym
from .montecarlo import EnsembleResult, VerificationVerdict, estimate_limit, exceedance_curve, run_ensemble, verify
from .sde import InitialState, SystemSpec, Trajectory, em_step, simulate_path, wiener_increments

__version__ = "0.1.0"
