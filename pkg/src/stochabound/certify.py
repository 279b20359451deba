"""Boundedness certificates for stable LTI systems with noise kernels.

For ``dX = A X dt + g(X, t) dW`` with a Lyapunov pair ``A^T P + P A = -Q``
and kernel constants ``(gamma, c)``, the drift of ``E V`` with
``V = x^T P x / 2`` is bounded by the quadratic

    L(z) = (gamma^2 lmax_P - lmin_Q) / 2 * z^2 + c gamma lmax_P * z + c^2 lmax_P / 2

in ``z = E||X||``.  When ``gamma^2 lmax_P < lmin_Q`` the parabola opens
downward and its positive root is the limiting bound on ``E||X||``.
With ``kappa = lmax_P / lmin_Q`` that root reads
``(c gamma kappa + c sqrt(kappa)) / (1 - gamma^2 kappa)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import BoundUndefinedError, DegenerateQuadraticError, DomainError, InputError, NotHurwitzError


@dataclass(frozen=True)
class LyapunovCertificate:
    P: np.ndarray
    Q: np.ndarray
    lambda_bar_P: float
    lambda_lo_P: float
    lambda_lo_Q: float
    condition_margin: float
    condition_holds: bool

    @property
    def kappa(self):
        return self.lambda_bar_P / self.lambda_lo_Q


@dataclass(frozen=True)
class TailBound:
    """Supermartingale tail bounds on ``P(sup_t ||X|| > epsilon)``.

    ``p_paper`` uses the factor ``lmin_P * lmax_P``; ``p_derived`` uses
    ``lmax_P / lmin_P``, which is what the change of variable
    ``eps_hat = eps / lmin_P`` actually produces.  Raw values may exceed
    one; the ``*_clamped`` properties are what reports show.
    """

    epsilon: float
    p_paper: float
    p_derived: float

    @property
    def p_paper_clamped(self):
        return min(1.0, max(0.0, self.p_paper))

    @property
    def p_derived_clamped(self):
        return min(1.0, max(0.0, self.p_derived))


@dataclass(frozen=True)
class BoundReport:
    b_limit: float
    b_sup: float
    b_min: float
    kappa: float
    discriminant: float
    root_pos: float
    root_neg: float
    e_x0: float


def certify(A, Q, constants):
    """Build the Lyapunov certificate for drift ``A`` and weight ``Q``.

    Raises
    ------
    NotHurwitzError
        If ``A`` is not Hurwitz; the certificate is then inapplicable.
    """
    stable, abscissa = linalg.is_hurwitz(A)
    if not stable:
        raise NotHurwitzError(f"assumption 1.1 violated: A is not Hurwitz (spectral abscissa {abscissa:.6g})")
    P = linalg.solve_lyapunov(A, Q)
    Q = linalg.check_symmetric(Q, "Q")
    ext_P = linalg.spectral_extrema_sym(P)
    ext_Q = linalg.spectral_extrema_sym(Q)
    margin = ext_Q.lambda_min - constants.gamma**2 * ext_P.lambda_max
    return LyapunovCertificate(
        P=P,
        Q=Q,
        lambda_bar_P=ext_P.lambda_max,
        lambda_lo_P=ext_P.lambda_min,
        lambda_lo_Q=ext_Q.lambda_min,
        condition_margin=float(margin),
        condition_holds=bool(margin > 0.0),
    )


def require_condition(cert):
    if not cert.condition_holds:
        raise BoundUndefinedError(
            f"certificate condition fails (margin {cert.condition_margin:.6g} <= 0); the bound diverges"
        )


def bound_from_kappa(c, gamma, kappa):
    """Limiting bound as a function of ``kappa = lmax_P / lmin_Q``."""
    if gamma * gamma * kappa >= 1.0:
        raise DomainError("gamma^2 * kappa must be < 1")
    return (c * gamma * kappa + c * math.sqrt(kappa)) / (1.0 - gamma * gamma * kappa)


def limit_bound(cert, constants):
    """Bound on ``lim_t E||X(t)||``: the positive root of the drift quadratic.

    Computed as ``(c gamma lmax_P + sqrt(c^2 lmax_P lmin_Q)) / (lmin_Q - gamma^2 lmax_P)``.
    """
    require_condition(cert)
    c, g = constants.c, constants.gamma
    lp, lq = cert.lambda_bar_P, cert.lambda_lo_Q
    return (c * g * lp + math.sqrt(c * c * lp * lq)) / (lq - g * g * lp)


def sup_bound(cert, constants, e_x0):
    if not (math.isfinite(e_x0) and e_x0 >= 0):
        raise InputError("E||X0|| must be finite and nonnegative")
    return max(float(e_x0), limit_bound(cert, constants))


def drift_quadratic(cert, constants):
    """Coefficients ``(a2, a1, a0)`` of the drift bound ``L(z)``."""
    c, g = constants.c, constants.gamma
    lp, lq = cert.lambda_bar_P, cert.lambda_lo_Q
    return 0.5 * (g * g * lp - lq), c * g * lp, 0.5 * c * c * lp


def quadratic_roots(cert, constants):
    """Both roots of the drift quadratic and its discriminant.

    The discriminant is normalized as ``c^2 lmax_P lmin_Q`` (a quarter of
    the textbook ``a1^2 - 4 a2 a0``).

    Returns
    -------
    root_pos, root_neg, discriminant : float
    """
    require_condition(cert)
    if constants.c == 0.0:
        raise DegenerateQuadraticError("c = 0: the drift quadratic has a double root at 0")
    c, g = constants.c, constants.gamma
    lp, lq = cert.lambda_bar_P, cert.lambda_lo_Q
    disc = c * c * lp * lq
    denom = g * g * lp - lq
    root_pos = (-c * g * lp - math.sqrt(disc)) / denom
    # cancellation-free form via Vieta: root_pos * root_neg = a0 / a2
    a2, _, a0 = drift_quadratic(cert, constants)
    root_neg = (a0 / a2) / root_pos
    return root_pos, root_neg, disc


def tail_bound(cert, e_x0, epsilon):
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    if not (math.isfinite(e_x0) and e_x0 >= 0):
        raise InputError("E||X0|| must be finite and nonnegative")
    lp, llo = cert.lambda_bar_P, cert.lambda_lo_P
    return TailBound(
        epsilon=float(epsilon),
        p_paper=llo * lp * e_x0 / epsilon,
        p_derived=(lp / llo) * e_x0 / epsilon,
    )


def minimal_bound(A, constants):
    """Smallest limiting bound over ``Q``, attained at ``Q = I``.

    Returns
    -------
    b_min : float
        ``(c gamma lmax + c sqrt(lmax)) / (1 - gamma^2 lmax)`` where
        ``lmax`` is the top eigenvalue of the solution of
        ``A^T P + P A = -I``.
    cert : LyapunovCertificate
        The certificate built with ``Q = I``.
    """
    A = linalg.as_square(A, "A")
    cert = certify(A, np.eye(A.shape[0]), constants)
    if not cert.condition_holds:
        raise BoundUndefinedError(
            f"gamma^2 * lmax(P_hat) = {constants.gamma**2 * cert.lambda_bar_P:.6g} >= 1; no finite bound"
        )
    c, g, lp = constants.c, constants.gamma, cert.lambda_bar_P
    return (c * g * lp + c * math.sqrt(lp)) / (1.0 - g * g * lp), cert


def kappa_derivative(constants, kappa):
    """Derivative of the limiting bound with respect to ``kappa``.

    ``c sqrt(kappa) (gamma + kappa^-1/2)^2 / (2 (gamma^2 kappa - 1)^2)``,
    strictly positive on its domain.
    """
    c, g = constants.c, constants.gamma
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    if g * g * kappa >= 1.0:
        raise DomainError("gamma^2 * kappa must be < 1")
    if c <= 0:
        raise DomainError("c must be positive")
    return c * math.sqrt(kappa) * (g + kappa**-0.5) ** 2 / (2.0 * (g * g * kappa - 1.0) ** 2)


def bound_report(cert, constants, A, e_x0=0.0):
    """Collect every certificate quantity into one report object."""
    b = limit_bound(cert, constants)
    if constants.c > 0:
        root_pos, root_neg, disc = quadratic_roots(cert, constants)
    else:
        root_pos, root_neg, disc = 0.0, 0.0, 0.0
    try:
        b_min, _ = minimal_bound(A, constants)
    except BoundUndefinedError:
        b_min = math.inf
    return BoundReport(
        b_limit=b,
        b_sup=sup_bound(cert, constants, e_x0),
        b_min=b_min,
        kappa=cert.kappa,
        discriminant=disc,
        root_pos=root_pos,
        root_neg=root_neg,
        e_x0=float(e_x0),
    )


def report_json(cert, constants, A, e_x0=0.0, epsilon=1.0, notes=()):
    """JSON-ready certification report.

    When the condition fails the bound fields are ``None``.
    """
    out = {
        "condition_holds": cert.condition_holds,
        "margin": cert.condition_margin,
        "gamma": constants.gamma,
        "c": constants.c,
        "gamma_g": constants.gamma_g,
        "P": linalg.to_nested(cert.P),
        "lambda_bar_P": cert.lambda_bar_P,
        "lambda_lo_P": cert.lambda_lo_P,
        "lambda_lo_Q": cert.lambda_lo_Q,
        "kappa": cert.kappa,
        "b_limit": None,
        "b_sup": None,
        "b_min": None,
        "discriminant": None,
        "root_pos": None,
        "root_neg": None,
        "e_x0": float(e_x0),
        "tail_bound": None,
        "notes": list(notes),
    }
    if cert.condition_holds:
        rep = bound_report(cert, constants, A, e_x0)
        tb = tail_bound(cert, e_x0, epsilon)
        out.update(
            b_limit=rep.b_limit,
            b_sup=rep.b_sup,
            b_min=rep.b_min if math.isfinite(rep.b_min) else None,
            discriminant=rep.discriminant,
            root_pos=rep.root_pos,
            root_neg=rep.root_neg,
            tail_bound={
                "epsilon": tb.epsilon,
                "p_paper": tb.p_paper_clamped,
                "p_derived": tb.p_derived_clamped,
                "p_paper_raw": tb.p_paper,
                "p_derived_raw": tb.p_derived,
            },
        )
    return out
