"""Euler-Maruyama simulation of ``dX = A X dt + g(X, t) dW``.

Noise is drawn from counter-based Philox streams keyed by
``(master_seed, path_index)``.  Inside a stream the draws are consumed in a
fixed order (initial state first, then increments step by step, component
by component), so every path is reproducible on its own no matter how the
ensemble is split across workers.

The inner loop runs in the compiled ``_emcore`` extension when it is
importable and in the numpy fallback ``_pyem`` otherwise.  Set
``STOCHABOUND_BACKEND=python`` to force the fallback.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _pyem
from . import linalg
from .errors import BlowUpError, DimensionError, InputError
from .kernel import KernelSpec, eval_kernel

try:
    from . import _emcore
except ImportError:  # pragma: no cover - depends on build
    _emcore = None

BLOWUP_THRESHOLD = 1e12
MAX_STEPS = 10**8
SEED_MASK = (1 << 64) - 1

_FAMILY_CODES = {"Constant": 0, "CosineScalar": 1, "AffineNorm": 2, "LinearMatrix": 3}


def available_backends():
    return ("cython", "python") if _emcore is not None else ("python",)


def default_backend():
    forced = os.environ.get("STOCHABOUND_BACKEND", "").strip().lower()
    if forced:
        if forced not in available_backends():
            raise InputError(f"backend {forced!r} not available; have {available_backends()}")
        return forced
    return available_backends()[0]


@dataclass(frozen=True)
class InitialState:
    """Isotropic Gaussian law ``N(mean, std^2 I)``; ``std = 0`` is a fixed start."""

    mean: np.ndarray
    std: float = 0.0

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        if not np.all(np.isfinite(mean)):
            raise InputError("initial mean must be finite")
        if not (math.isfinite(self.std) and self.std >= 0):
            raise InputError("initial std must be finite and nonnegative")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", float(self.std))

    @property
    def is_fixed(self):
        return self.std == 0.0

    def expected_norm(self, n_samples=200_000, seed=0):
        """``E||X0||``: exact for fixed starts, Monte-Carlo for Gaussian ones."""
        if self.is_fixed:
            return float(np.linalg.norm(self.mean))
        rng = np.random.Generator(np.random.Philox(seed))
        draws = self.mean + self.std * rng.standard_normal((n_samples, self.mean.size))
        return float(np.mean(np.linalg.norm(draws, axis=1)))

    def to_json(self):
        return {"mean": self.mean.tolist(), "std": self.std}

    @classmethod
    def from_json(cls, obj, n=None):
        if isinstance(obj, (int, float)):
            obj = {"mean": [float(obj)] * (n or 1)}
        elif isinstance(obj, list):
            obj = {"mean": obj}
        return cls(obj["mean"], obj.get("std", 0.0))


@dataclass(frozen=True)
class SystemSpec:
    """Drift matrix, kernel, initial law and time grid of one SDE."""

    A: np.ndarray
    kernel: KernelSpec
    x0: InitialState
    T: float = 10.0
    dt: float = 1e-3

    def __post_init__(self):
        A = linalg.as_square(self.A, "A")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        x0 = self.x0 if isinstance(self.x0, InitialState) else InitialState(self.x0)
        object.__setattr__(self, "x0", x0)
        n = A.shape[0]
        if self.kernel.n != n:
            raise DimensionError(f"kernel state dimension {self.kernel.n} does not match A ({n})")
        if x0.mean.size != n:
            raise DimensionError(f"initial state has dimension {x0.mean.size}, expected {n}")
        if not (self.T > 0 and self.dt > 0):
            raise InputError("T and dt must be positive")
        if self.dt > self.T:
            raise InputError("dt must not exceed T")
        if self.T / self.dt > MAX_STEPS:
            raise InputError(f"T/dt exceeds the step guard of {MAX_STEPS}")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.kernel.m

    @property
    def steps(self):
        return int(round(self.T / self.dt))

    @property
    def times(self):
        return self.dt * np.arange(self.steps + 1)

    def with_(self, **changes):
        fields = {"A": self.A, "kernel": self.kernel, "x0": self.x0, "T": self.T, "dt": self.dt}
        fields.update(changes)
        return SystemSpec(**fields)

    def to_json(self):
        return {
            "A": linalg.to_nested(self.A),
            "kernel": self.kernel.to_json(),
            "x0": self.x0.to_json(),
            "T": self.T,
            "dt": self.dt,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            A = obj["A"]
            kernel = KernelSpec.from_json(obj["kernel"])
        except KeyError as exc:
            raise InputError(f"system spec missing field {exc.args[0]!r}") from None
        n = linalg.as_square(A, "A").shape[0]
        x0 = InitialState.from_json(obj.get("x0", [0.0] * n), n)
        return cls(A, kernel, x0, float(obj.get("T", 10.0)), float(obj.get("dt", 1e-3)))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    sup_norm: float


def path_rng(seed, path_index=0):
    """Philox generator for one path, keyed by ``(seed, path_index)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(ss))


def draw_path_noise(spec, seed, path_index=0):
    """Initial state and Wiener increments for one path.

    Returns
    -------
    x0 : ndarray, shape (n,)
    dW : ndarray, shape (steps, m)
    """
    rng = path_rng(seed, path_index)
    z0 = rng.standard_normal(spec.n)
    x0 = spec.x0.mean + spec.x0.std * z0
    dW = math.sqrt(spec.dt) * rng.standard_normal((spec.steps, spec.m))
    return x0, dW


def wiener_increments(m, steps, dt, seed, path_index=0):
    """``steps`` independent ``N(0, dt I_m)`` vectors, fixed by the seed."""
    if m < 1 or steps < 1:
        raise InputError("m and steps must be positive")
    if dt <= 0:
        raise InputError("dt must be positive")
    return math.sqrt(dt) * path_rng(seed, path_index).standard_normal((steps, m))


def em_step(x, t, spec, dW):
    """One Euler-Maruyama step ``x + A x dt + g(x, t) dW``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    dW = np.asarray(dW, dtype=float).reshape(-1)
    if x.size != spec.n or dW.size != spec.m:
        raise DimensionError("state or increment dimension mismatch")
    out = x + (spec.A @ x) * spec.dt + eval_kernel(spec.kernel, x, t) @ dW
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite state at t = {t + spec.dt}", step=int(round(t / spec.dt)) + 1)
    return out


def _kernel_args(kernel):
    p = kernel.params
    n, m = kernel.n, kernel.m
    G0 = np.ascontiguousarray(p.get("G0", np.zeros((n, m))), dtype=float)
    Gs = np.ascontiguousarray(p.get("Gs", np.zeros((n, n, m))), dtype=float)
    return (
        _FAMILY_CODES[kernel.family],
        G0,
        Gs,
        float(p.get("a", 0.0)),
        float(p.get("k", 0.0)),
        float(p.get("gamma", 0.0)),
    )


def integrate_batch(spec, x0, dW, backend=None, first_path=0):
    """Run the EM loop on a batch of paths with given noise.

    Parameters
    ----------
    x0 : ndarray, shape (p, n)
    dW : ndarray, shape (p, steps, m)
        Increments need not match ``spec.dt``'s step count; the loop runs
        for ``dW.shape[1]`` steps of size ``spec.dt``.
    backend : {"cython", "python"}, optional
    first_path : int
        Ensemble index of the first row, only used in error messages.

    Returns
    -------
    ndarray, shape (p, steps + 1, n)
    """
    backend = backend or default_backend()
    impl = _emcore if backend == "cython" else _pyem
    if impl is None:
        raise InputError("compiled backend is not available")
    x0 = np.ascontiguousarray(x0, dtype=float)
    dW = np.ascontiguousarray(dW, dtype=float)
    if x0.ndim != 2 or x0.shape[1] != spec.n:
        raise DimensionError(f"x0 must have shape (p, {spec.n})")
    if dW.ndim != 3 or dW.shape[0] != x0.shape[0] or dW.shape[2] != spec.m:
        raise DimensionError(f"dW must have shape ({x0.shape[0]}, steps, {spec.m})")
    A = np.ascontiguousarray(spec.A)
    states, bad_path, bad_step = impl.integrate(
        A, *_kernel_args(spec.kernel), x0, dW, float(spec.dt), BLOWUP_THRESHOLD
    )
    if bad_path >= 0:
        idx = first_path + bad_path
        raise BlowUpError(
            f"path {idx} blew up at step {bad_step} (t = {bad_step * spec.dt:.6g}); "
            f"|x| exceeded {BLOWUP_THRESHOLD:g} or became non-finite",
            step=bad_step,
            path_index=idx,
        )
    return states


def simulate_path(spec, seed, path_index=0, backend=None):
    """Simulate one path; identical to row ``path_index`` of an ensemble."""
    x0, dW = draw_path_noise(spec, seed, path_index)
    states = integrate_batch(spec, x0[None], dW[None], backend, first_path=path_index)[0]
    norms = np.linalg.norm(states, axis=1)
    return Trajectory(times=spec.times, states=states, sup_norm=float(norms.max()))
