import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import betainc

from hyperuniform.errors import DomainError, ZeroNormRow
from hyperuniform.sphere import (
    Metric,
    cap_measure,
    distance,
    haar_orthogonal,
    normalize,
    pairwise_distances,
    rng,
    sample_uniform,
    tangent_project,
)
from hyperuniform.uniformity import ajne, rayleigh


def test_normalize_examples():
    assert np.allclose(normalize([[3, 4]]), [[0.6, 0.8]])
    assert np.array_equal(normalize([[1, 0, 0], [0, 2, 0]]), [[1, 0, 0], [0, 1, 0]])


def test_normalize_zero_row_reports_index():
    with pytest.raises(ZeroNormRow) as err:
        normalize([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    assert err.value.row == 1


finite_rows = arrays(
    np.float64,
    st.tuples(st.integers(1, 8), st.integers(2, 6)),
    elements=st.floats(-1e3, 1e3, allow_nan=False),
)


@given(finite_rows)
def test_normalize_gives_unit_rows(raw):
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms < 1e-100):
        return
    x = normalize(raw)
    assert np.all(np.abs(np.linalg.norm(x, axis=1) - 1.0) < 1e-12)


def test_distance_examples():
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert distance(e1, -e1, Metric.GEODESIC) == pytest.approx(np.pi)
    assert distance(e1, e2, Metric.CHORDAL) == pytest.approx(np.sqrt(2))
    assert distance(e1, e1, "geodesic") == 0.0


def test_pairwise_cross_polytope_chordal():
    x = np.vstack([np.eye(3), -np.eye(3)])
    D = pairwise_distances(x, Metric.CHORDAL)
    assert np.all(np.diag(D) == 0)
    off = D[~np.eye(6, dtype=bool)]
    assert np.sum(np.isclose(off, 2.0)) == 6
    assert np.sum(np.isclose(off, np.sqrt(2))) == 24


def test_pairwise_single_point():
    assert np.array_equal(pairwise_distances([[1.0, 0.0]]), np.zeros((1, 1)))


@settings(max_examples=30)
@given(st.integers(2, 12), st.integers(2, 5), st.integers(0, 2**31))
def test_pairwise_symmetric_and_metric_relation(n, d, seed):
    x = sample_uniform(n, d, seed)
    C = pairwise_distances(x, Metric.CHORDAL)
    G = pairwise_distances(x, Metric.GEODESIC)
    assert np.array_equal(C, C.T) and np.array_equal(G, G.T)
    # chord = 2 sin(angle / 2)
    assert np.allclose(C, 2 * np.sin(G / 2), atol=1e-7)


def test_tangent_project_examples():
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert np.allclose(tangent_project(e1, e1), 0)
    assert np.allclose(tangent_project(e1, e2), e2)


@settings(max_examples=30)
@given(st.integers(1, 10), st.integers(2, 6), st.integers(0, 2**31))
def test_tangent_project_is_orthogonal(n, d, seed):
    x = sample_uniform(n, d, seed)
    g = rng(seed, 1).standard_normal((n, d))
    p = tangent_project(x, g)
    assert np.all(np.abs(np.sum(p * x, axis=1)) < 1e-12)
    assert np.allclose(tangent_project(x, p), p)


def test_sample_uniform_deterministic():
    assert np.array_equal(sample_uniform(50, 4, 11), sample_uniform(50, 4, 11))
    assert not np.array_equal(sample_uniform(50, 4, 11), sample_uniform(50, 4, 12))


def test_sample_uniform_rayleigh_mean_near_d():
    vals = [rayleigh(sample_uniform(10_000, 3, seed)) for seed in range(200)]
    assert 2.5 <= np.mean(vals) <= 3.5


def test_sample_uniform_mean_vector_small():
    x = sample_uniform(100_000, 4, 0)
    assert np.linalg.norm(x.mean(axis=0)) < 0.02


def test_sample_uniform_rotation_invariance_of_ajne():
    q = haar_orthogonal(3, rng(99))
    a = np.array([ajne(sample_uniform(40, 3, s)) for s in range(100)])
    b = np.array([ajne(sample_uniform(40, 3, s) @ q.T) for s in range(100, 200)])
    se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    assert abs(a.mean() - b.mean()) < 3 * se


def test_haar_orthogonal_is_orthogonal():
    q = haar_orthogonal(7, rng(3))
    assert np.allclose(q @ q.T, np.eye(7), atol=1e-12)


def test_cap_measure_examples():
    for d in (2, 3, 5, 50, 256):
        assert cap_measure(np.pi / 2, d) == pytest.approx(0.5, abs=1e-10)
        assert cap_measure(np.pi, d) == pytest.approx(1.0, abs=1e-10)
        assert cap_measure(0.0, d) == pytest.approx(0.0, abs=1e-10)
    assert cap_measure(np.pi / 3, 3) == pytest.approx(0.25, abs=1e-10)


def _cap_beta(theta, d):
    # regularized incomplete beta form of the cap area
    half = 0.5 * betainc((d - 1) / 2, 0.5, np.sin(theta) ** 2)
    return half if theta <= np.pi / 2 else 1.0 - half


@pytest.mark.parametrize("d", [3, 4, 7, 20, 100])
@pytest.mark.parametrize("theta", [0.1, 0.7, 1.2, 2.0, 2.9])
def test_cap_measure_matches_incomplete_beta(theta, d):
    assert cap_measure(theta, d) == pytest.approx(_cap_beta(theta, d), abs=1e-10)


@settings(max_examples=40)
@given(st.floats(0, np.pi), st.integers(2, 60))
def test_cap_measure_complement(theta, d):
    assert cap_measure(theta, d) + cap_measure(np.pi - theta, d) == pytest.approx(1.0, abs=1e-9)


@given(st.floats(0, np.pi), st.floats(0, np.pi), st.integers(2, 30))
def test_cap_measure_monotone(a, b, d):
    lo, hi = sorted((a, b))
    assert cap_measure(lo, d) <= cap_measure(hi, d) + 1e-12


def test_cap_measure_rejects_bad_angle():
    with pytest.raises(DomainError):
        cap_measure(-0.1, 3)
    with pytest.raises(DomainError):
        cap_measure(4.0, 3)
