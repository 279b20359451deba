import csv
import math

import numpy as np
import pytest

from stochabound.certify import bound_report, certify, tail_bound
from stochabound.errors import InputError
from stochabound.kernel import KernelSpec, analytic_constants
from stochabound.montecarlo import (
    EnsembleResult,
    estimate_limit,
    exceedance_curve,
    run_ensemble,
    supermartingale_check,
    verify,
    write_exceedance_csv,
    write_mean_csv,
    write_sup_csv,
)
from stochabound.sde import InitialState, SystemSpec

# tail mean of E|X| for the cosine example from x0 = 0: 10^4 paths at dt = 1e-4
# gave 0.12760 +- 0.00055 (scripts/reference_band.py)
REFERENCE_TAIL_MEAN = 0.1276


def certified(spec):
    k = analytic_constants(spec.kernel)
    cert = certify(spec.A, np.eye(spec.n), k)
    return cert, bound_report(cert, k, spec.A, e_x0=spec.x0.expected_norm())


def flat_result(value, n=101, T=10.0, sem=0.01):
    times = np.linspace(0, T, n)
    return EnsembleResult(
        times=times,
        mean_norm=np.full(n, value),
        sem_norm=np.full(n, sem),
        sup_norms=np.array([0.1, 0.4, 0.9]),
        n_paths=3,
        master_seed=0,
    )


@pytest.fixture(scope="module")
def paper_runs():
    from stochabound.cli import paper_system

    return {x0: run_ensemble(paper_system(x0), 100, 42, P=[[0.5]]) for x0 in (0.0, 0.5, 2.0)}


def test_zero_kernel_ensemble_is_zero():
    spec = SystemSpec(-np.eye(2), KernelSpec.constant(np.zeros((2, 2))), InitialState([0.0, 0.0]), 1.0, 1e-2)
    res = run_ensemble(spec, 5, 1)
    assert np.all(res.mean_norm == 0) and np.all(res.sem_norm == 0)
    assert len(res.sup_norms) == 5


def test_paper_ensemble_settles(paper_runs):
    res = paper_runs[0.0]
    tail_mean, tail_sem = estimate_limit(res)
    assert 0.12 <= tail_mean <= 0.15
    assert abs(tail_mean - REFERENCE_TAIL_MEAN) <= 4 * tail_sem
    assert tail_mean < 0.6035533905932737
    assert np.all(res.mean_norm >= 0) and np.all(res.sem_norm >= 0)


def test_ensemble_deterministic_across_threads(paper):
    spec = paper.with_(T=2.0)
    a = run_ensemble(spec, 200, 9, P=[[0.5]], threads=1)
    b = run_ensemble(spec, 200, 9, P=[[0.5]], threads=8)
    c = run_ensemble(spec, 200, 9, P=[[0.5]], threads=3)
    for other in (b, c):
        np.testing.assert_array_equal(a.mean_norm, other.mean_norm)
        np.testing.assert_array_equal(a.sem_norm, other.sem_norm)
        np.testing.assert_array_equal(a.sup_norms, other.sup_norms)
        np.testing.assert_array_equal(a.mean_V, other.mean_V)


def test_ensemble_backends_agree(paper):
    from stochabound.sde import available_backends

    if len(available_backends()) < 2:
        pytest.skip("compiled core not built")
    spec = paper.with_(T=1.0)
    a = run_ensemble(spec, 70, 3, backend="cython")
    b = run_ensemble(spec, 70, 3, backend="python")
    np.testing.assert_allclose(a.mean_norm, b.mean_norm, rtol=1e-12)


def test_n_paths_guard(paper):
    with pytest.raises(InputError):
        run_ensemble(paper, 1, 0)


# -- estimate_limit -------------------------------------------------------------------

def test_estimate_limit_constant():
    res = flat_result(0.5, sem=0.01)
    mean, sem = estimate_limit(res, 0.2)
    assert mean == 0.5
    # window [8, 10] with tau = 1 -> 2 effective samples per path
    assert sem == pytest.approx(0.01 / math.sqrt(2.0), rel=1e-12)


def test_estimate_limit_zero():
    mean, sem = estimate_limit(flat_result(0.0, sem=0.0))
    assert mean == 0.0 and sem == 0.0


def test_estimate_limit_short_window():
    with pytest.raises(InputError):
        estimate_limit(flat_result(0.5, n=21), 0.2)
    with pytest.raises(InputError):
        estimate_limit(flat_result(0.5), 0.0)


# -- exceedance --------------------------------------------------------------------------

def test_exceedance_edges():
    res = flat_result(0.5)
    curve = exceedance_curve(res, [0.0, 0.5, 0.9, 1.0])
    assert curve[0] == (0.0, 1.0)
    assert curve[1][1] == pytest.approx(1 / 3)
    assert curve[2][1] == 0.0  # strict inequality at the max
    assert curve[3][1] == 0.0
    with pytest.raises(InputError):
        exceedance_curve(res, [])
    with pytest.raises(InputError):
        exceedance_curve(res, [1.0, 0.5])


def test_exceedance_dominated_from_half():
    from stochabound.cli import paper_system

    spec = paper_system(0.5)
    cert, _ = certified(spec)
    res = run_ensemble(spec, 1000, 42)
    eps = [0.5, 0.75, 1.0, 1.5, 2.0]
    curve = exceedance_curve(res, eps)
    probs = [p for _, p in curve]
    assert all(a >= b for a, b in zip(probs, probs[1:]))
    assert all(0 <= p <= 1 for p in probs)
    for e, p in curve:
        tb = tail_bound(cert, 0.5, e)
        if tb.p_derived <= 1:
            assert p <= tb.p_derived


# -- property checks on simulated ensembles ------------------------------------------------

def test_jensen_and_envelope(paper_runs):
    for res in paper_runs.values():
        assert np.all(res.mean_norm**2 <= res.mean_sq_norm * (1 + 1e-12) + 1e-300)
        assert res.envelope_excess <= 1e-9


def test_supermartingale_from_two(paper_runs):
    res = paper_runs[2.0]
    assert res.mean_norm[0] == 2.0
    assert supermartingale_check(res, 0.6035533905932737)


def test_supermartingale_detects_growth():
    res = flat_result(1.0)
    res.mean_V = np.linspace(1.0, 2.0, res.times.size)
    res.sem_V = np.full(res.times.size, 1e-4)
    assert not supermartingale_check(res, 0.5)
    # inside the bound the check is vacuous
    assert supermartingale_check(res, 1.0)


# -- verify -----------------------------------------------------------------------------

@pytest.mark.parametrize("x0", [0.0, 0.5, 2.0])
def test_verify_paper(x0):
    from stochabound.cli import PAPER_EPSILONS, paper_system

    spec = paper_system(x0)
    cert, bounds = certified(spec)
    v = verify(spec, cert, bounds, n_paths=100, master_seed=42, epsilons=PAPER_EPSILONS)
    assert v.limit_ok and v.sup_ok and v.exceedance_ok and v.supermartingale_ok
    assert v.exceedance_applicable == (x0 > v.b_limit)
    assert len(v.exceedance) == len(PAPER_EPSILONS)


def test_verify_half_enters_band():
    from stochabound.cli import paper_system

    spec = paper_system(0.5)
    cert, bounds = certified(spec)
    v = verify(spec, cert, bounds, n_paths=100, master_seed=42)
    m = v.ensemble.mean_norm
    assert m[0] == 0.5 and m[-1] < 0.2
    assert v.limit_ok


def test_verify_zero_kernel():
    spec = SystemSpec([[-1.0]], KernelSpec.constant([[0.0]]), InitialState([0.0]), 2.0, 1e-2)
    cert, bounds = certified(spec)
    assert bounds.b_limit == 0.0
    v = verify(spec, cert, bounds, n_paths=10, master_seed=0, epsilons=[0.1, 1.0])
    assert v.all_ok


def test_verify_flags_violation():
    # an artificially tiny bound must be rejected by the limit and sup checks
    from dataclasses import replace

    from stochabound.cli import paper_system

    spec = paper_system(0.0)
    cert, bounds = certified(spec)
    fake = replace(bounds, b_limit=0.01, b_sup=0.01)
    v = verify(spec, cert, fake, n_paths=100, master_seed=42)
    assert not v.limit_ok and not v.sup_ok and not v.all_ok


# -- CSV exports ---------------------------------------------------------------------------

def test_csv_exports(tmp_path, paper):
    spec = paper.with_(T=0.05)
    cert, bounds = certified(spec)
    v = verify(spec, cert, bounds, n_paths=4, master_seed=1, epsilons=[0.01, 0.1], tail_fraction=1.0)
    write_mean_csv(v.ensemble, tmp_path / "m.csv")
    write_sup_csv(v.ensemble, tmp_path / "s.csv")
    write_exceedance_csv(v.exceedance, tmp_path / "e.csv")
    rows = list(csv.reader(open(tmp_path / "m.csv")))
    assert rows[0] == ["t", "mean_norm", "sem_norm"] and len(rows) == spec.steps + 2
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["path_index", "sup_norm"] and len(rows) == 5
    rows = list(csv.reader(open(tmp_path / "e.csv")))
    assert rows[0] == ["epsilon", "empirical_p", "bound_p_derived", "bound_p_paper"] and len(rows) == 3
    assert float(rows[1][0]) == 0.01
