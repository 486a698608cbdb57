"""Geometry of the unit hypersphere S^(d-1) embedded in R^d.

A configuration is an ``(n, d)`` float array whose rows are unit vectors.
Functions here accept plain arrays and return plain arrays; the unit-norm
invariant is established by :func:`normalize` and preserved by every
operation that returns a configuration.

Random numbers come from NumPy's counter-based Philox generator keyed by a
:class:`numpy.random.SeedSequence`, so ``sample_uniform(n, d, seed)`` is
reproducible across platforms.  Sub-streams (restarts, trials) are derived
with :func:`rng` by appending integer keys to the seed.
"""
from __future__ import annotations

from enum import Enum

import numpy as np
from scipy import integrate

from .errors import DomainError, ZeroNormRow

UNIT_TOL = 1e-12
ZERO_NORM = 1e-300


class Metric(str, Enum):
    CHORDAL = "chordal"
    GEODESIC = "geodesic"

    @classmethod
    def parse(cls, value) -> "Metric":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown metric {value!r}; expected 'chordal' or 'geodesic'") from None


def rng(seed, *keys) -> np.random.Generator:
    """Philox generator for ``seed`` and an optional path of sub-stream keys."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
        if keys:
            ss = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(keys))
    else:
        ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def normalize(raw) -> np.ndarray:
    """Project every row of ``raw`` onto the unit sphere.

    Raises :class:`ZeroNormRow` for the first row whose norm is below 1e-300.
    """
    x = np.atleast_2d(np.asarray(raw, dtype=float))
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    if not norms.min() >= ZERO_NORM:
        raise ZeroNormRow(np.flatnonzero(~(norms >= ZERO_NORM))[0])
    return x / norms[:, None]


def ensure_unit(raw) -> np.ndarray:
    """Like :func:`normalize` but returns rows already within ``UNIT_TOL`` of unit norm unchanged."""
    x = np.atleast_2d(np.asarray(raw, dtype=float))
    dev = np.abs(np.sqrt(np.einsum("ij,ij->i", x, x)) - 1.0)
    if np.all(dev <= UNIT_TOL):
        return x.copy()
    return normalize(x)


def check_configuration(points, tol: float = 1e-9) -> np.ndarray:
    """Return ``points`` as a float array after validating shape and row norms."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 2:
        raise DomainError(f"configuration must be n x d with n >= 1, d >= 2; got shape {x.shape}")
    dev = np.abs(np.linalg.norm(x, axis=1) - 1.0)
    if np.any(~(dev <= tol)):
        raise DomainError(f"configuration rows are not unit vectors (max deviation {dev.max():.3e})")
    return x


def distance(u, v, metric=Metric.CHORDAL) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if Metric.parse(metric) is Metric.CHORDAL:
        return float(np.linalg.norm(u - v))
    return float(np.arccos(np.clip(np.dot(u, v), -1.0, 1.0)))


def gram(x: np.ndarray) -> np.ndarray:
    """Exactly symmetric matrix of row dot products."""
    g = x @ x.T
    return 0.5 * (g + g.T)


def squared_chordal(x: np.ndarray) -> np.ndarray:
    """Pairwise ``||x_i - x_j||^2`` for arbitrary (not necessarily unit) rows."""
    g = gram(x)
    sq = np.diag(g)
    d2 = sq[:, None] + sq[None, :] - 2.0 * g
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def pairwise_distances(config, metric=Metric.CHORDAL) -> np.ndarray:
    """Symmetric ``(n, n)`` matrix of distances with an exact zero diagonal."""
    x = np.atleast_2d(np.asarray(config, dtype=float))
    if Metric.parse(metric) is Metric.CHORDAL:
        return np.sqrt(squared_chordal(x))
    out = np.arccos(np.clip(gram(x), -1.0, 1.0))
    np.fill_diagonal(out, 0.0)
    return out


def tangent_project(point, grad) -> np.ndarray:
    """Remove the component of ``grad`` along ``point``.

    Works row-wise when both arguments are ``(n, d)`` arrays.
    """
    point = np.asarray(point, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if point.ndim == 1:
        return grad - np.dot(grad, point) * point
    return grad - np.einsum("ij,ij->i", grad, point)[:, None] * point


def sample_uniform(n: int, d: int, seed=0) -> np.ndarray:
    """``n`` independent uniform points on S^(d-1): normalized standard Gaussians."""
    if n < 1 or d < 2:
        raise DomainError(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    gen = rng(seed)
    x = gen.standard_normal((n, d))
    norms = np.linalg.norm(x, axis=1)
    # measure-zero event; redraw from the same stream
    while np.any(norms < ZERO_NORM):
        bad = norms < ZERO_NORM
        x[bad] = gen.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(x, axis=1)
    return x / norms[:, None]


def haar_orthogonal(d: int, gen: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian with the sign fix)."""
    q, r = np.linalg.qr(gen.standard_normal((d, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :]


def cap_measure(angle: float, d: int) -> float:
    """Normalized surface measure of the cap ``{x : x . c >= cos(angle)}`` on S^(d-1).

    Integrates the polar density ``sin(t)**(d-2)`` by adaptive quadrature.
    """
    angle = float(angle)
    if not (0.0 <= angle <= np.pi):
        raise DomainError(f"cap angle must lie in [0, pi], got {angle}")
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if d == 2:
        return angle / np.pi
    m = d - 2

    def density(t):
        return np.sin(t) ** m

    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=500)
    # the density peaks at pi/2 and is sharp for large d
    total = 2.0 * integrate.quad(density, 0.0, np.pi / 2, **opts)[0]
    if angle <= np.pi / 2:
        part = integrate.quad(density, 0.0, angle, **opts)[0]
    else:
        part = total - integrate.quad(density, angle, np.pi, **opts)[0]
    return float(min(max(part / total, 0.0), 1.0))
