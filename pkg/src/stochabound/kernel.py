"""Perturbation kernels ``g(x, t)`` and their Lipschitz/growth constants.

Four time-invariant families are provided:

``Constant``
    ``g(x) = G0``.
``CosineScalar``
    ``g(x) = a cos(k x)`` for scalar state and noise (``n = m = 1``).
``AffineNorm``
    ``g(x) = G0 + (gamma ||x|| / sqrt(n m)) J`` with ``J`` all ones.
``LinearMatrix``
    ``g(x) = G0 + sum_i x_i G_i``.

Every matrix norm here is the Frobenius norm.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InputError, ResourceError

FAMILIES = ("Constant", "CosineScalar", "AffineNorm", "LinearMatrix")
MAX_BRUTEFORCE_EVALS = 10**7


@dataclass(frozen=True)
class KernelConstants:
    """Lipschitz constant, origin bound and growth constant of a kernel."""

    gamma: float
    c: float
    gamma_g: float

    def __post_init__(self):
        for name in ("gamma", "c", "gamma_g"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise InputError(f"{name} must be finite and nonnegative, got {v}")

    def envelope(self, norm_x):
        """Upper bound ``c + gamma ||x||`` on ``||g(x, t)||``."""
        return self.c + self.gamma * norm_x


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of a perturbation kernel.

    Use the ``constant``/``cosine_scalar``/``affine_norm``/``linear_matrix``
    constructors rather than building ``params`` by hand.
    """

    family: str
    n: int
    m: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if int(self.n) < 1 or int(self.m) < 1:
            raise InputError("kernel dimensions must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "params", _normalize_params(self.family, self.n, self.m, self.params))

    # constructors -----------------------------------------------------

    @classmethod
    def constant(cls, G0):
        G0 = np.atleast_2d(np.asarray(G0, dtype=float))
        return cls("Constant", G0.shape[0], G0.shape[1], {"G0": G0})

    @classmethod
    def cosine_scalar(cls, a, k):
        return cls("CosineScalar", 1, 1, {"a": a, "k": k})

    @classmethod
    def affine_norm(cls, gamma, n, m=1, G0=None):
        if G0 is None:
            G0 = np.zeros((n, m))
        return cls("AffineNorm", n, m, {"gamma": gamma, "G0": G0})

    @classmethod
    def linear_matrix(cls, Gs, G0=None):
        Gs = np.asarray(Gs, dtype=float)
        if Gs.ndim == 2:
            Gs = Gs[None]
        n, m = Gs.shape[1], Gs.shape[2]
        if G0 is None:
            G0 = np.zeros((n, m))
        return cls("LinearMatrix", n, m, {"Gs": Gs, "G0": G0})

    # (de)serialization -------------------------------------------------

    def to_json(self):
        params = {}
        for key, val in self.params.items():
            params[key] = val.tolist() if isinstance(val, np.ndarray) else val
        return {"family": self.family, "params": params, "n": self.n, "m": self.m}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(obj["family"], obj["n"], obj["m"], dict(obj.get("params", {})))
        except KeyError as exc:
            raise InputError(f"kernel spec missing field {exc.args[0]!r}") from None

    # evaluation --------------------------------------------------------

    def __call__(self, x, t=0.0):
        return eval_kernel(self, x, t)

    def __eq__(self, other):
        if not isinstance(other, KernelSpec):
            return NotImplemented
        return self.to_json() == other.to_json()

    def __hash__(self):
        return hash((self.family, self.n, self.m))


def _normalize_params(family, n, m, params):
    p = dict(params)

    def mat(key, shape, default_zero=False):
        if key not in p:
            if default_zero:
                return np.zeros(shape)
            raise InputError(f"{family} kernel requires parameter {key!r}")
        arr = np.array(p[key], dtype=float)
        if arr.ndim < 2 and len(shape) == 2:
            arr = arr.reshape(shape)
        if arr.shape != shape:
            raise DimensionError(f"{family} parameter {key!r} has shape {arr.shape}, expected {shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError(f"{family} parameter {key!r} has non-finite entries")
        arr.setflags(write=False)
        return arr

    def positive(key, allow_zero=False):
        if key not in p:
            raise InputError(f"{family} kernel requires parameter {key!r}")
        v = float(p[key])
        if not math.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
            raise InputError(f"{family} parameter {key!r} must be {'>= 0' if allow_zero else '> 0'}, got {v}")
        return v

    if family == "Constant":
        return {"G0": mat("G0", (n, m))}
    if family == "CosineScalar":
        if n != 1 or m != 1:
            raise DimensionError("CosineScalar requires n = m = 1")
        return {"a": positive("a"), "k": positive("k")}
    if family == "AffineNorm":
        return {"gamma": positive("gamma", allow_zero=True), "G0": mat("G0", (n, m), default_zero=True)}
    # LinearMatrix
    return {"Gs": mat("Gs", (n, n, m)), "G0": mat("G0", (n, m), default_zero=True)}


def _state(spec, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != spec.n:
        raise DimensionError(f"state has dimension {x.shape[0]}, kernel expects {spec.n}")
    return x


def eval_kernel(spec, x, t=0.0):
    """Evaluate ``g(x, t)`` as an ``(n, m)`` array.

    All catalog families are time invariant; ``t`` is accepted for
    interface uniformity and must be nonnegative.
    """
    x = _state(spec, x)
    if t < 0:
        raise InputError("time must be nonnegative")
    p = spec.params
    if spec.family == "Constant":
        return p["G0"].copy()
    if spec.family == "CosineScalar":
        return np.array([[p["a"] * math.cos(p["k"] * x[0])]])
    if spec.family == "AffineNorm":
        scale = p["gamma"] * float(np.linalg.norm(x)) / math.sqrt(spec.n * spec.m)
        return p["G0"] + scale
    return p["G0"] + np.tensordot(x, p["Gs"], axes=1)


def eval_kernel_batch(spec, X):
    """Vectorized evaluation over a batch of states.

    Parameters
    ----------
    X : ndarray, shape (..., n)

    Returns
    -------
    ndarray, shape (..., n, m)
    """
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != spec.n:
        raise DimensionError(f"states have dimension {X.shape[-1]}, kernel expects {spec.n}")
    lead = X.shape[:-1]
    p = spec.params
    if spec.family == "Constant":
        return np.broadcast_to(p["G0"], lead + (spec.n, spec.m)).copy()
    if spec.family == "CosineScalar":
        return (p["a"] * np.cos(p["k"] * X))[..., None]
    if spec.family == "AffineNorm":
        scale = p["gamma"] * np.linalg.norm(X, axis=-1) / math.sqrt(spec.n * spec.m)
        return p["G0"] + scale[..., None, None]
    return p["G0"] + np.tensordot(X, p["Gs"], axes=([-1], [0]))


def analytic_constants(spec):
    """Closed-form Lipschitz constant, origin bound and growth constant.

    For the affine families the growth constant comes from
    ``(c + gamma r)^2 <= 2 c^2 + 2 gamma^2 r^2``.
    """
    p = spec.params
    if spec.family == "Constant":
        c = float(np.linalg.norm(p["G0"]))
        return KernelConstants(gamma=0.0, c=c, gamma_g=c * c)
    if spec.family == "CosineScalar":
        return KernelConstants(gamma=p["a"] * p["k"], c=p["a"], gamma_g=p["a"] ** 2)
    c = float(np.linalg.norm(p["G0"]))
    if spec.family == "AffineNorm":
        gamma = p["gamma"]
    else:
        # x -> vec(sum_i x_i G_i) is linear; its operator 2-norm is the
        # exact Lipschitz constant in the Frobenius norm.
        L = p["Gs"].reshape(spec.n, -1).T
        gamma = float(np.linalg.norm(L, 2))
    return KernelConstants(gamma=gamma, c=c, gamma_g=2.0 * (c * c + gamma * gamma))


def _grid(n, radius, grid_points):
    axis = np.linspace(-radius, radius, grid_points)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def estimate_constants_bruteforce(spec, radius=2.0, grid_points=101):
    """Grid-sweep lower-bound estimates of the kernel constants.

    The Lipschitz estimate is the maximum difference quotient
    ``||g(x) - g(y)|| / ||x - y||`` over all pairs of an axis-aligned
    grid with ``grid_points`` nodes per axis on ``[-radius, radius]^n``.
    Being a maximum over a finite set, every estimate is a lower bound of
    the true constant.

    Raises
    ------
    ResourceError
        If the grid needs more than ``1e7`` kernel evaluations.
    """
    if radius <= 0:
        raise InputError("radius must be positive")
    if grid_points < 2:
        raise InputError("grid_points must be at least 2")
    if float(grid_points) ** spec.n > MAX_BRUTEFORCE_EVALS:
        raise ResourceError(f"grid of {grid_points}^{spec.n} points exceeds {MAX_BRUTEFORCE_EVALS} evaluations")

    X = _grid(spec.n, radius, grid_points)
    G = eval_kernel_batch(spec, X).reshape(len(X), -1)

    # keep each pairwise block near 4e6 entries
    chunk = max(1, 4_000_000 // len(X))
    gamma_hat = 0.0
    for start in range(0, len(X), chunk):
        xs, gs = X[start:start + chunk], G[start:start + chunk]
        dx = np.linalg.norm(xs[:, None, :] - X[None, :, :], axis=-1)
        dg = np.linalg.norm(gs[:, None, :] - G[None, :, :], axis=-1)
        mask = dx > 0
        if np.any(mask):
            gamma_hat = max(gamma_hat, float(np.max(dg[mask] / dx[mask])))

    c_hat = float(np.linalg.norm(eval_kernel(spec, np.zeros(spec.n), 0.0)))
    norm2 = np.sum(X * X, axis=-1)
    gamma_g_hat = float(np.max(np.sum(G * G, axis=-1) / (1.0 + norm2)))
    return KernelConstants(gamma=gamma_hat, c=c_hat, gamma_g=gamma_g_hat)
