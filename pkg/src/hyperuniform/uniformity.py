"""Classical test statistics for uniformity on the sphere.

Only the statistics are computed; no p-values or critical values.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, DomainError
from .sphere import cap_measure, gram, haar_orthogonal, rng

TWO_PI = 2.0 * np.pi


def ajne(config) -> float:
    """Ajne statistic ``n/4 - (1/(n pi)) sum_{i<j} angle(u_i, u_j)``."""
    x = np.asarray(config, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise DomainError("Ajne statistic needs n >= 2")
    ang = np.arccos(np.clip(gram(x), -1.0, 1.0))
    iu = np.triu_indices(n, 1)
    return float(n / 4.0 - ang[iu].sum() / (n * np.pi))


def rayleigh(config) -> float:
    """Rayleigh statistic ``n d |mean|^2``."""
    x = np.asarray(config, dtype=float)
    n, d = x.shape
    mean = x.mean(axis=0)
    return float(n * d * np.dot(mean, mean))


def range_test(angles) -> float:
    """Circular range statistic: ``2 pi`` minus the largest gap between sorted angles."""
    a = np.sort(np.asarray(angles, dtype=float).ravel())
    if a.size < 2:
        raise DomainError("range test needs at least two angles")
    if a[0] < 0.0 or a[-1] >= TWO_PI or np.isnan(a).any():
        raise DomainError("angles must lie in [0, 2*pi)")
    gaps = np.diff(a)
    wrap = TWO_PI - (a[-1] - a[0])
    return float(TWO_PI - max(gaps.max(), wrap))


def circle_angles(config) -> np.ndarray:
    """Angles in ``[0, 2 pi)`` of points on S^1."""
    x = np.asarray(config, dtype=float)
    if x.shape[1] != 2:
        raise DimensionError("angles are defined for d = 2 only")
    theta = np.mod(np.arctan2(x[:, 1], x[:, 0]), TWO_PI)
    # mod can round up to exactly 2*pi for tiny negative angles
    theta[theta >= TWO_PI] = 0.0
    return theta


def gegenbauer(k: int, alpha: float, t):
    """Gegenbauer polynomial ``C_k^alpha(t)`` by the three-term recurrence."""
    if k < 0:
        raise DomainError("order must be >= 0")
    if alpha <= 0:
        raise DomainError("index must be positive")
    t = np.asarray(t, dtype=float)
    prev = np.ones_like(t)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * alpha * t
    for j in range(2, k + 1):
        prev, cur = cur, (2.0 * t * (j + alpha - 1.0) * cur - (j + 2.0 * alpha - 2.0) * prev) / j
    return cur if cur.ndim else float(cur)


def gegenbauer_all(K: int, alpha: float, t) -> np.ndarray:
    """Stack ``[C_1, ..., C_K]`` evaluated at ``t``; shape ``(K,) + t.shape``."""
    t = np.asarray(t, dtype=float)
    out = np.empty((K,) + t.shape)
    prev = np.ones_like(t)
    cur = 2.0 * alpha * t
    out[0] = cur
    for j in range(2, K + 1):
        prev, cur = cur, (2.0 * t * (j + alpha - 1.0) * cur - (j + 2.0 * alpha - 2.0) * prev) / j
        out[j - 1] = cur
    return out


@dataclass(frozen=True)
class SobolevSpec:
    """Weights ``v_1..v_K`` of a truncated Sobolev statistic on S^(d-1)."""

    weights: tuple
    d: int

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if len(w) < 1:
            raise DomainError("need at least one weight")
        if not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite")
        if self.d <= 2:
            raise DimensionError("the Gegenbauer closed form needs d > 2")

    @property
    def K(self) -> int:
        return len(self.weights)

    @classmethod
    def rayleigh(cls, d: int) -> "SobolevSpec":
        return cls((1.0,), d)

    @classmethod
    def ajne(cls, d: int, K: int = 41) -> "SobolevSpec":
        """``v_k = 1/(pi k)`` for odd ``k`` and zero for even ``k``."""
        return cls(tuple(1.0 / (np.pi * k) if k % 2 else 0.0 for k in range(1, K + 1)), d)


def sobolev_kernel(t, spec: SobolevSpec):
    """``sum_k v_k^2 (1 + 2k/(d-2)) C_k^((d-2)/2)(t)``."""
    alpha = (spec.d - 2) / 2.0
    k = np.arange(1, spec.K + 1)
    coef = np.asarray(spec.weights) ** 2 * (1.0 + 2.0 * k / (spec.d - 2))
    polys = gegenbauer_all(spec.K, alpha, t)
    return np.tensordot(coef, polys, axes=1)


def sobolev(config, spec: Optional[SobolevSpec] = None) -> float:
    """Truncated Sobolev statistic, summing over all ordered pairs including ``i = j``."""
    x = np.asarray(config, dtype=float)
    n, d = x.shape
    if d <= 2:
        raise DimensionError("the Gegenbauer closed form needs d > 2")
    if spec is None:
        spec = SobolevSpec.ajne(d)
    if spec.d != d:
        raise DimensionError(f"spec is for d={spec.d}, configuration has d={d}")
    t = np.clip(gram(x), -1.0, 1.0)
    return float(np.sum(sobolev_kernel(t, spec)) / n)


def sobolev_self_offset(spec: SobolevSpec) -> float:
    """Contribution of the ``n`` self-pairs, which is the same for every configuration."""
    return float(sobolev_kernel(1.0, spec))


@dataclass
class CapRow:
    angle: float
    measure: float
    mean_fraction: float
    mean_abs_deviation: float
    max_abs_deviation: float


@dataclass
class Theorem1Report:
    d: int
    basis_trials: int
    cap_trials: int
    max_abs_deviation: float
    table: list

    def to_dict(self):
        return {
            "d": self.d,
            "basis_trials": self.basis_trials,
            "cap_trials": self.cap_trials,
            "max_abs_deviation": self.max_abs_deviation,
            "table": [vars(r) for r in self.table],
        }


DEFAULT_CAP_ANGLES = (0.0, np.pi / 6, np.pi / 3, np.pi / 2, 2 * np.pi / 3, 5 * np.pi / 6, np.pi)


def theorem1_demo(
    d: int,
    basis_trials: int = 200,
    cap_trials: int = 1,
    seed: int = 0,
    angles: Sequence[float] = DEFAULT_CAP_ANGLES,
) -> Theorem1Report:
    """Fraction of a Haar-random orthonormal basis falling in randomly placed caps.

    For each basis trial a fresh basis is drawn, and for each cap trial a
    uniformly random cap center; the in-cap fraction of the ``d`` basis
    vectors is compared with the normalized cap measure.
    """
    if d < 4:
        raise DomainError("the demonstration needs d >= 4")
    angles = [float(a) for a in angles]
    measures = [cap_measure(a, d) for a in angles]
    cos = np.cos(angles)
    cos[np.isclose(angles, np.pi)] = -np.inf
    cos[np.isclose(angles, 0.0)] = np.inf
    dev = np.empty((basis_trials * cap_trials, len(angles)))
    frac = np.empty_like(dev)
    row = 0
    for b in range(basis_trials):
        gen = rng(seed, b)
        q = haar_orthogonal(d, gen)
        for _ in range(cap_trials):
            c = gen.standard_normal(d)
            c /= np.linalg.norm(c)
            dots = c @ q
            f = (dots[None, :] >= cos[:, None]).mean(axis=1)
            frac[row] = f
            dev[row] = np.abs(f - np.asarray(measures))
            row += 1
    table = [
        CapRow(a, m, float(frac[:, i].mean()), float(dev[:, i].mean()), float(dev[:, i].max()))
        for i, (a, m) in enumerate(zip(angles, measures))
    ]
    return Theorem1Report(d, basis_trials, cap_trials, float(dev.max()), table)
