"""Ensemble statistics of ``||X(t)||`` and empirical checks of the bounds.

Paths are simulated in fixed blocks of ``CHUNK`` consecutive indices.
Blocks may run on any number of threads; their partial sums are reduced in
block order, so results do not depend on ``STOCHABOUND_THREADS``.
"""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .certify import require_condition, tail_bound
from .errors import InputError
from .kernel import analytic_constants, eval_kernel_batch
from .sde import draw_path_noise, integrate_batch

CHUNK = 64
SLACK_SE = 3.0
DEFAULT_TAIL_FRACTION = 0.2
CSV_DIGITS = 12


def thread_count():
    """Worker cap from ``STOCHABOUND_THREADS`` (default: CPU count)."""
    raw = os.environ.get("STOCHABOUND_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise InputError(f"STOCHABOUND_THREADS must be an integer, got {raw!r}") from None
        return max(1, value)
    return os.cpu_count() or 1


@dataclass
class EnsembleResult:
    """Pointwise ensemble statistics of the state norm.

    ``mean_sq_norm``, ``mean_V``/``sem_V`` and ``envelope_excess`` are
    filled by :func:`run_ensemble`; hand-built results may leave them
    ``None``.  ``time_constant`` is ``1 / |spectral abscissa of A|``.
    """

    times: np.ndarray
    mean_norm: np.ndarray
    sem_norm: np.ndarray
    sup_norms: np.ndarray
    n_paths: int
    master_seed: int
    time_constant: float = 1.0
    mean_sq_norm: np.ndarray = None
    mean_V: np.ndarray = None
    sem_V: np.ndarray = None
    envelope_excess: float = None


@dataclass
class VerificationVerdict:
    b_limit: float
    b_sup: float
    tail_mean: float
    tail_sem: float
    limit_ok: bool
    sup_ok: bool
    exceedance_ok: bool
    supermartingale_ok: bool
    exceedance_applicable: bool
    exceedance: list = field(default_factory=list)
    ensemble: EnsembleResult = None

    @property
    def all_ok(self):
        return self.limit_ok and self.sup_ok and self.exceedance_ok and self.supermartingale_ok

    def to_json(self):
        return {
            "b_limit": self.b_limit,
            "b_sup": self.b_sup,
            "tail_mean": self.tail_mean,
            "tail_sem": self.tail_sem,
            "limit_ok": self.limit_ok,
            "sup_ok": self.sup_ok,
            "exceedance_ok": self.exceedance_ok,
            "exceedance_applicable": self.exceedance_applicable,
            "supermartingale_ok": self.supermartingale_ok,
            "max_mean_norm": float(np.max(self.ensemble.mean_norm)) if self.ensemble is not None else None,
            "n_paths": self.ensemble.n_paths if self.ensemble is not None else None,
            "master_seed": self.ensemble.master_seed if self.ensemble is not None else None,
            "all_ok": self.all_ok,
        }


def _chunk_partials(spec, master_seed, start, stop, P, constants, backend):
    x0 = np.empty((stop - start, spec.n))
    dW = np.empty((stop - start, spec.steps, spec.m))
    for row, idx in enumerate(range(start, stop)):
        x0[row], dW[row] = draw_path_noise(spec, master_seed, idx)
    states = integrate_batch(spec, x0, dW, backend, first_path=start)
    norms = np.linalg.norm(states, axis=2)
    out = {
        "s1": norms.sum(axis=0),
        "s2": (norms * norms).sum(axis=0),
        "sup": norms.max(axis=1),
    }
    if P is not None:
        V = 0.5 * np.einsum("pti,ij,ptj->pt", states, P, states)
        out["v1"] = V.sum(axis=0)
        out["v2"] = (V * V).sum(axis=0)
    if constants is not None:
        gnorm = np.linalg.norm(eval_kernel_batch(spec.kernel, states), axis=(-2, -1))
        out["excess"] = float(np.max(gnorm - constants.envelope(norms)))
    return out


def _mean_sem(s1, s2, n):
    mean = s1 / n
    var = np.maximum(s2 - n * mean * mean, 0.0) / (n - 1)
    return mean, np.sqrt(var / n)


def run_ensemble(spec, n_paths, master_seed, P=None, threads=None, backend=None):
    """Simulate ``n_paths`` trajectories and aggregate norm statistics.

    Parameters
    ----------
    spec : SystemSpec
    n_paths : int
        At least 2.
    master_seed : int
    P : ndarray, optional
        If given, the ensemble mean of ``V = x^T P x / 2`` is tracked too.
    threads : int, optional
        Worker count; defaults to :func:`thread_count`.  Never affects
        the numbers.
    backend : {"cython", "python"}, optional

    Raises
    ------
    BlowUpError
        With ``path_index`` set to the first offending trajectory.
    """
    if n_paths < 2:
        raise InputError("n_paths must be at least 2")
    threads = threads or thread_count()
    bounds = [(s, min(s + CHUNK, n_paths)) for s in range(0, n_paths, CHUNK)]
    constants = analytic_constants(spec.kernel)
    P = None if P is None else np.asarray(P, dtype=float)

    def work(b):
        return _chunk_partials(spec, master_seed, b[0], b[1], P, constants, backend)

    if threads == 1 or len(bounds) == 1:
        parts = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # map preserves submission order, so the reduction below is fixed
            parts = list(pool.map(work, bounds))

    s1 = np.zeros(spec.steps + 1)
    s2 = np.zeros(spec.steps + 1)
    for part in parts:
        s1 += part["s1"]
        s2 += part["s2"]
    mean, sem = _mean_sem(s1, s2, n_paths)
    mean_V = sem_V = None
    if P is not None:
        v1 = np.zeros(spec.steps + 1)
        v2 = np.zeros(spec.steps + 1)
        for part in parts:
            v1 += part["v1"]
            v2 += part["v2"]
        mean_V, sem_V = _mean_sem(v1, v2, n_paths)

    _, abscissa = linalg.is_hurwitz(spec.A)
    tau = 1.0 / abs(abscissa) if abscissa != 0 else math.inf
    return EnsembleResult(
        times=spec.times,
        mean_norm=mean,
        sem_norm=sem,
        sup_norms=np.concatenate([part["sup"] for part in parts]),
        n_paths=int(n_paths),
        master_seed=int(master_seed),
        time_constant=tau,
        mean_sq_norm=s2 / n_paths,
        mean_V=mean_V,
        sem_V=sem_V,
        envelope_excess=max(part["excess"] for part in parts),
    )


def estimate_limit(result, tail_fraction=DEFAULT_TAIL_FRACTION):
    """Tail-window estimate of ``lim_t E||X(t)||``.

    The window is the final ``tail_fraction`` of the horizon.  Its standard
    error treats each path as contributing ``T_window / tau`` independent
    samples, ``tau`` being the drift time constant.

    Returns
    -------
    tail_mean, tail_sem : float
    """
    if not 0 < tail_fraction <= 1:
        raise InputError("tail_fraction must lie in (0, 1]")
    times = np.asarray(result.times)
    start = times[-1] - tail_fraction * (times[-1] - times[0])
    window = times >= start - 1e-12 * max(1.0, abs(times[-1]))
    if np.count_nonzero(window) < 10:
        raise InputError("tail window holds fewer than 10 grid points")
    t_window = times[window][-1] - times[window][0]
    n_eff = max(1.0, t_window / result.time_constant) if math.isfinite(result.time_constant) else 1.0
    tail_mean = float(np.mean(result.mean_norm[window]))
    tail_sem = float(math.sqrt(np.mean(np.square(result.sem_norm[window])) / n_eff))
    return tail_mean, tail_sem


def exceedance_curve(result, epsilons):
    """Fraction of paths whose sup-norm strictly exceeds each epsilon."""
    eps = np.asarray(epsilons, dtype=float).reshape(-1)
    if eps.size == 0:
        raise InputError("epsilon grid is empty")
    if np.any(eps < 0) or np.any(np.diff(eps) < 0):
        raise InputError("epsilons must be nonnegative and sorted")
    sups = np.asarray(result.sup_norms)
    return [(float(e), float(np.count_nonzero(sups > e)) / sups.size) for e in eps]


def supermartingale_check(result, b_limit, slack=SLACK_SE):
    """Is the ensemble-mean Lyapunov value nonincreasing while ``E||X|| > b``?

    Only the initial stretch of the grid before the mean norm first drops
    to ``b_limit`` is examined; an empty stretch passes.
    """
    if result.mean_V is None:
        raise InputError("ensemble was run without a Lyapunov matrix")
    inside = np.flatnonzero(result.mean_norm <= b_limit)
    stop = inside[0] if inside.size else result.mean_norm.size
    if stop < 2:
        return True
    v, se = result.mean_V[:stop], result.sem_V[:stop]
    tol = slack * np.maximum(se[1:], se[:-1])
    return bool(np.all(np.diff(v) <= tol))


def verify(spec, cert, bounds, n_paths=100, master_seed=42, epsilons=(), tail_fraction=DEFAULT_TAIL_FRACTION,
           threads=None, backend=None):
    """Simulate the ensemble and test the three certificate claims.

    ``bounds`` is the :class:`~stochabound.certify.BoundReport` for ``cert``;
    its ``e_x0`` must be ``E||X0||`` under ``spec.x0``.

    * ``limit_ok``: tail mean of ``E||X||`` is at most ``b_limit`` + 3 SE.
    * ``sup_ok``: max over time of ``E||X||`` is at most ``b_sup`` + 3 max SE.
    * ``exceedance_ok``: empirical ``P(sup ||X|| > eps)`` is at most the
      derived tail bound + 3 binomial SE at every ``eps > b_limit`` where
      that bound is at most 1.  Vacuously true when ``E||X0|| <= b_limit``,
      since the tail claim assumes a start outside the bound.
    * ``supermartingale_ok``: see :func:`supermartingale_check`.
    """
    require_condition(cert)
    b_limit, b_sup, e_x0 = bounds.b_limit, bounds.b_sup, bounds.e_x0

    result = run_ensemble(spec, n_paths, master_seed, P=cert.P, threads=threads, backend=backend)
    tail_mean, tail_sem = estimate_limit(result, tail_fraction)
    limit_ok = tail_mean <= b_limit + SLACK_SE * tail_sem
    sup_ok = float(np.max(result.mean_norm)) <= b_sup + SLACK_SE * float(np.max(result.sem_norm))

    applicable = e_x0 > b_limit
    rows = []
    exceed_ok = True
    if len(epsilons):
        for eps, p_hat in exceedance_curve(result, epsilons):
            tb = tail_bound(cert, e_x0, eps) if eps > 0 else None
            rows.append({
                "epsilon": eps,
                "empirical_p": p_hat,
                "bound_p_derived": tb.p_derived_clamped if tb else 1.0,
                "bound_p_paper": tb.p_paper_clamped if tb else 1.0,
            })
            if applicable and tb is not None and eps > b_limit and tb.p_derived <= 1.0:
                se = math.sqrt(p_hat * (1.0 - p_hat) / result.n_paths)
                if p_hat > tb.p_derived + SLACK_SE * se:
                    exceed_ok = False

    return VerificationVerdict(
        b_limit=b_limit,
        b_sup=b_sup,
        tail_mean=tail_mean,
        tail_sem=tail_sem,
        limit_ok=bool(limit_ok),
        sup_ok=bool(sup_ok),
        exceedance_ok=exceed_ok,
        supermartingale_ok=supermartingale_check(result, b_limit),
        exceedance_applicable=bool(applicable),
        exceedance=rows,
        ensemble=result,
    )


def _fmt(x):
    return f"{x:.{CSV_DIGITS}g}"


def write_mean_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mean_norm", "sem_norm"])
        for t, m, s in zip(result.times, result.mean_norm, result.sem_norm):
            w.writerow([_fmt(t), _fmt(m), _fmt(s)])


def write_sup_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_index", "sup_norm"])
        for i, s in enumerate(result.sup_norms):
            w.writerow([i, _fmt(s)])


def write_exceedance_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "empirical_p", "bound_p_derived", "bound_p_paper"])
        for r in rows:
            w.writerow([_fmt(r["epsilon"]), _fmt(r["empirical_p"]), _fmt(r["bound_p_derived"]), _fmt(r["bound_p_paper"])])

