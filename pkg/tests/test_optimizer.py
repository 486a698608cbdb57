import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperuniform.errors import DomainError, NotPositiveDefinite
from hyperuniform.objectives import (
    InnerLoopConfig,
    KernelSpec,
    Kind,
    ObjectiveSpec,
    PolarizationLandscape,
    evaluate,
    mhe_energy,
)
from hyperuniform.optimizer import (
    RECORD_FIELDS,
    OptimizerConfig,
    configuration_measures,
    multistart,
    restart_initials,
    run,
    unroll_inner,
)
from hyperuniform.sphere import Metric, sample_uniform


def geometric(lr0, lr1, iters, pieces=100):
    return tuple((int(k * iters / pieces), lr0 * (lr1 / lr0) ** (k / (pieces - 1))) for k in range(pieces))


def test_config_validation():
    with pytest.raises(DomainError):
        OptimizerConfig(lr_schedule=((1, 0.1),))
    with pytest.raises(DomainError):
        OptimizerConfig(lr_schedule=((0, 0.1), (5, 0.01), (5, 0.001)))
    with pytest.raises(DomainError):
        OptimizerConfig(momentum=1.0)
    with pytest.raises(DomainError):
        OptimizerConfig(max_iters=0)


def test_lr_schedule_lookup():
    opt = OptimizerConfig(lr_schedule=((0, 0.01), (5000, 0.001)))
    assert opt.lr_at(0) == 0.01
    assert opt.lr_at(4999) == 0.01
    assert opt.lr_at(5000) == 0.001
    assert OptimizerConfig.from_dict(opt.to_dict()) == opt


def test_mhs_two_points_reach_antipodes():
    spec = ObjectiveSpec(Kind.MHS, KernelSpec(metric=Metric.GEODESIC))
    opt = OptimizerConfig(lr_schedule=geometric(0.1, 1e-9, 2000), momentum=0.0, max_iters=2000)
    tr = run(sample_uniform(2, 3, 0), spec, opt)
    assert tr.final_value == pytest.approx(np.pi, abs=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_rmhp_odd_count_reaches_zero_sum(seed):
    opt = OptimizerConfig(lr_schedule=geometric(0.05, 1e-9, 2000), momentum=0.0, max_iters=2000)
    tr = run(sample_uniform(5, 3, seed), ObjectiveSpec(Kind.RMHP), opt)
    assert np.linalg.norm(tr.final.sum(axis=0)) < 1e-6


def test_descent_lowers_energy_and_keeps_unit_rows():
    x0 = sample_uniform(20, 3, 1)
    spec = ObjectiveSpec(Kind.MHE, KernelSpec(s=1.0, metric=Metric.CHORDAL))
    tr = run(x0, spec, OptimizerConfig(lr_schedule=((0, 0.001),), max_iters=300, record_every=50))
    values = [r.objective for r in tr.records]
    assert values[-1] < values[0]
    assert np.all(np.diff(values) <= 1e-9)
    assert np.all(np.abs(np.linalg.norm(tr.final, axis=1) - 1) < 1e-12)


def test_maximized_objective_climbs():
    spec = ObjectiveSpec(Kind.MGD)
    tr = run(sample_uniform(15, 3, 2), spec, OptimizerConfig(lr_schedule=((0, 0.01),), max_iters=200))
    assert tr.records[-1].objective > tr.records[0].objective


def test_records_layout():
    spec = ObjectiveSpec(Kind.RMHP)
    tr = run(sample_uniform(6, 3, 0), spec, OptimizerConfig(max_iters=250, record_every=100))
    assert [r.iter for r in tr.records] == [0, 100, 200, 250]
    assert len(tr.records[0].as_tuple()) == len(RECORD_FIELDS)
    e2, sep, mc = configuration_measures(tr.final)
    assert (tr.final_record.energy_s2, tr.final_record.separation_geodesic, tr.final_record.masscenter_norm) == (e2, sep, mc)


@pytest.mark.parametrize("kind", [Kind.MHE, Kind.MHS, Kind.MHC_RELAXED, Kind.MHP])
def test_runs_are_deterministic(kind):
    spec = ObjectiveSpec(kind, KernelSpec(s=1.0, metric=Metric.GEODESIC), inner=InnerLoopConfig(steps=2, restarts=3))
    opt = OptimizerConfig(max_iters=30, seed=4, record_every=10)
    a = run(sample_uniform(10, 3, 5), spec, opt)
    b = run(sample_uniform(10, 3, 5), spec, opt)
    assert np.array_equal(a.final, b.final)
    assert [r.as_tuple() for r in a.records] == [r.as_tuple() for r in b.records]


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 15), st.integers(2, 5), st.integers(0, 2**31), st.integers(1, 6))
def test_mhs_moves_at_most_two_rows_per_step(n, d, seed, steps):
    spec = ObjectiveSpec(Kind.MHS, KernelSpec(metric=Metric.GEODESIC))
    x = sample_uniform(n, d, seed)
    opt = OptimizerConfig(lr_schedule=((0, 0.01),), momentum=0.9, max_iters=1)
    for _ in range(steps):
        y = run(x, spec, opt).final
        changed = np.flatnonzero(np.any(y != x, axis=1))
        assert changed.size <= 2
        x = y


def test_mhs_step_moves_only_the_active_pair():
    spec = ObjectiveSpec(Kind.MHS, KernelSpec(metric=Metric.GEODESIC))
    x = sample_uniform(12, 3, 9)
    pair = evaluate(x, spec).active_rows
    y = run(x, spec, OptimizerConfig(max_iters=1)).final
    assert set(np.flatnonzero(np.any(y != x, axis=1))) == set(pair)


def test_numerical_error_carries_iteration():
    x = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    with pytest.raises(NotPositiveDefinite) as err:
        run(x, ObjectiveSpec(Kind.MGD, jitter=0.0), OptimizerConfig(max_iters=5))
    assert err.value.iteration == 0


def test_multistart_batched_matches_single_runs():
    spec = ObjectiveSpec(Kind.MHE, KernelSpec(s=1.0, metric=Metric.CHORDAL), augment=False)
    opt = OptimizerConfig(max_iters=100, record_every=50)
    inits = restart_initials(6, 3, 2, 4)
    res = multistart(spec, opt, inits)
    for x0, tr in zip(inits, res.runs):
        assert np.allclose(run(x0, spec, opt).final, tr.final, atol=1e-12)
    assert res.best.final_value == min(res.final_values)


def test_multistart_skips_failed_restart():
    spec = ObjectiveSpec(Kind.MHE, KernelSpec(s=2.0, metric=Metric.CHORDAL), augment=False)
    bad = np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 1.0, 0]])
    res = multistart(spec, OptimizerConfig(max_iters=20), [bad, sample_uniform(3, 3, 0)], workers=1)
    assert res.runs[0] is None and res.errors[0]
    assert res.best_index == 1


def test_restart_initials_are_independent():
    a, b = restart_initials(5, 3, 0, 2)
    assert not np.array_equal(a, b)
    assert np.array_equal(restart_initials(5, 3, 0, 2)[1], b)


# --- inner unrolling


def test_unroll_requires_a_step():
    with pytest.raises(DomainError):
        unroll_inner(np.array([1.0, 0.0]), lambda v: v, 0, 0.1)


def test_unroll_stationary_start_for_quadratic_polarization():
    x = sample_uniform(7, 4, 3)
    land = PolarizationLandscape(x, KernelSpec(s=-2.0, metric=Metric.CHORDAL))
    start = -x.sum(axis=0) / np.linalg.norm(x.sum(axis=0))
    assert np.allclose(unroll_inner(start, land, 1, 0.1), start, atol=1e-12)


def test_unroll_constant_landscape_is_identity():
    v = np.array([0.6, 0.8, 0.0])
    assert np.array_equal(unroll_inner(v, lambda u: np.zeros(3), 5, 0.3), v)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31))
def test_unroll_composes(k, seed):
    x = sample_uniform(6, 3, seed)
    land = PolarizationLandscape(x, KernelSpec(s=1.0, metric=Metric.GEODESIC))
    v0 = sample_uniform(1, 3, [seed, 1])[0]
    twice = unroll_inner(unroll_inner(v0, land, k, 0.01), land, k, 0.01)
    assert np.allclose(twice, unroll_inner(v0, land, 2 * k, 0.01), atol=1e-12)


def test_energy_of_final_matches_record():
    spec = ObjectiveSpec(Kind.MHE, KernelSpec(s=1.0, metric=Metric.CHORDAL), augment=False)
    tr = run(sample_uniform(8, 3, 0), spec, OptimizerConfig(max_iters=40, record_every=40))
    assert tr.final_value == pytest.approx(mhe_energy(tr.final, spec.kernel).value, rel=1e-12)
