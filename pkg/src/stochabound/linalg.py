"""Dense real linear algebra used by the certifier.

All functions accept anything ``numpy.asarray`` understands and return
plain ``ndarray`` / Python scalars.  Matrices serialize as nested lists
(row-major), see :func:`to_nested`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError, NotHurwitzError, NumericalError, SymmetryError

SYMMETRY_RTOL = 1e-10
RESIDUAL_RTOL = 1e-9
HURWITZ_MARGIN = 1e-12
MAX_KRONECKER_DIM = 64


@dataclass(frozen=True)
class SpectralExtrema:
    """Smallest and largest eigenvalue magnitudes of a symmetric matrix."""

    lambda_min: float
    lambda_max: float


def as_matrix(M, name="matrix"):
    """Validate and convert to a finite 2-D float array."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def as_square(M, name="matrix"):
    arr = as_matrix(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def to_nested(M):
    """Row-major nested list, suitable for JSON."""
    return np.asarray(M, dtype=float).tolist()


def check_symmetric(M, name="matrix"):
    """Return ``M`` as an array, raising ``SymmetryError`` if asymmetric.

    The tolerance is relative: ``||M - M^T||_inf <= 1e-10 ||M||_inf``.
    """
    arr = as_square(M, name)
    scale = np.linalg.norm(arr, np.inf)
    if np.linalg.norm(arr - arr.T, np.inf) > SYMMETRY_RTOL * scale:
        raise SymmetryError(f"{name} is not symmetric")
    return arr


def is_hurwitz(A):
    """Test whether every eigenvalue of ``A`` has negative real part.

    Parameters
    ----------
    A : array_like, shape (n, n)

    Returns
    -------
    stable : bool
        True iff the spectral abscissa is below ``-1e-12``.
    abscissa : float
        Largest real part over the spectrum.
    """
    A = as_square(A, "A")
    abscissa = float(np.max(np.linalg.eigvals(A).real))
    return abscissa < -HURWITZ_MARGIN, abscissa


def spectral_extrema_sym(M):
    """Min and max of ``|lambda|`` over the spectrum of a symmetric matrix."""
    M = check_symmetric(M)
    mags = np.abs(np.linalg.eigvalsh(0.5 * (M + M.T)))
    return SpectralExtrema(lambda_min=float(mags.min()), lambda_max=float(mags.max()))


def is_spd(M):
    M = check_symmetric(M)
    return bool(np.linalg.eigvalsh(0.5 * (M + M.T)).min() > 0.0)


def lyapunov_residual(A, P, Q):
    """Frobenius norm of ``A^T P + P A + Q``."""
    A, P, Q = (np.asarray(X, dtype=float) for X in (A, P, Q))
    return float(np.linalg.norm(A.T @ P + P @ A + Q, "fro"))


def solve_lyapunov(A, Q):
    """Solve ``A^T P + P A = -Q`` for the symmetric matrix ``P``.

    The equation is vectorized with the Kronecker identity
    ``(I kron A^T + A^T kron I) vec(P) = -vec(Q)`` (column-major ``vec``)
    and the dense ``n^2 x n^2`` system is solved directly.  Intended for
    ``n <= 64``.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Hurwitz drift matrix.
    Q : array_like, shape (n, n)
        Symmetric positive definite right-hand side.

    Returns
    -------
    P : ndarray, shape (n, n)
        Symmetrized solution, positive definite.

    Raises
    ------
    NotHurwitzError
        If ``A`` is not Hurwitz (no unique solution).
    InputError
        If ``Q`` is not SPD or the dimensions disagree.
    NumericalError
        If the vectorized system is singular or the residual check fails.
    """
    A = as_square(A, "A")
    Q = check_symmetric(Q, "Q")
    n = A.shape[0]
    if Q.shape != (n, n):
        raise DimensionError(f"Q has shape {Q.shape}, expected {(n, n)}")
    if n > MAX_KRONECKER_DIM:
        raise InputError(f"dense Kronecker solver limited to n <= {MAX_KRONECKER_DIM}, got {n}")
    stable, abscissa = is_hurwitz(A)
    if not stable:
        raise NotHurwitzError(f"A is not Hurwitz (spectral abscissa {abscissa:.6g})")
    if not is_spd(Q):
        raise InputError("Q must be symmetric positive definite")

    eye = np.eye(n)
    K = np.kron(eye, A.T) + np.kron(A.T, eye)
    rhs = -Q.reshape(-1, order="F")
    try:
        vecP = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("vectorized Lyapunov system is singular") from exc
    P = vecP.reshape((n, n), order="F")
    P = 0.5 * (P + P.T)

    resid = lyapunov_residual(A, P, Q)
    if resid > RESIDUAL_RTOL * np.linalg.norm(Q, "fro"):
        raise NumericalError(f"Lyapunov residual {resid:.3e} exceeds tolerance")
    return P
