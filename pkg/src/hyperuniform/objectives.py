"""Uniformity objectives on the sphere, their values and Euclidean gradients.

Every objective takes an ``(n, d)`` array of points and returns an
:class:`ObjectiveValue`.  Gradients are taken with respect to the raw array
entries (no tangent projection); the optimizer projects them.

Objectives with an inner problem over a probe point ``v`` on the sphere
(polarization and the relaxed covering radius) solve it by a few projected
gradient steps and differentiate *through* those steps, see
:func:`unrolled_value_and_grad`.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, IncompatibleObjective, NotPositiveDefinite, SingularDistance
from .sphere import Metric, gram, rng, squared_chordal

DISTANCE_FLOOR = 1e-9
ARCCOS_CLIP = 1.0 - 1e-12


class Kind(str, Enum):
    MHE = "mhe"
    MHS = "mhs"
    MHP = "mhp"
    RMHP = "rmhp"
    MHC = "mhc"
    MHC_RELAXED = "mhc_relaxed"
    MGD = "mgd"


class Sense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


SENSE = {
    Kind.MHE: Sense.MINIMIZE,
    Kind.MHS: Sense.MAXIMIZE,
    Kind.MHP: Sense.MAXIMIZE,
    Kind.RMHP: Sense.MINIMIZE,
    Kind.MHC: Sense.MINIMIZE,
    Kind.MHC_RELAXED: Sense.MINIMIZE,
    Kind.MGD: Sense.MAXIMIZE,
}


@dataclass(frozen=True)
class KernelSpec:
    """Riesz kernel with exponent ``s`` or Gaussian kernel with scale ``epsilon``."""

    family: str = "riesz"
    s: float = 2.0
    epsilon: float = 1.0
    metric: Metric = Metric.CHORDAL

    def __post_init__(self):
        if self.family not in ("riesz", "gaussian"):
            raise DomainError(f"unknown kernel family {self.family!r}")
        if not self.epsilon > 0:
            raise DomainError("Gaussian epsilon must be positive")
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        object.__setattr__(self, "s", float(self.s))

    def to_dict(self):
        out = {"family": self.family, "metric": self.metric.value}
        if self.family == "riesz":
            out["s"] = self.s
        else:
            out["epsilon"] = self.epsilon
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        return cls(**{k: data[k] for k in ("family", "s", "epsilon", "metric") if k in data})


@dataclass(frozen=True)
class InnerLoopConfig:
    steps: int = 1
    lr: float = 0.01
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise DomainError("inner steps must be >= 1")
        if self.restarts < 0:
            raise DomainError("inner restarts must be >= 0")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**dict(data or {}))


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: Kind = Kind.MHE
    kernel: KernelSpec = field(default_factory=KernelSpec)
    augment: bool = False
    inner: InnerLoopConfig = field(default_factory=InnerLoopConfig)
    gamma: float = 5.0
    epsilon: float = 1.0
    jitter: Optional[float] = None
    # positive factor on value and gradient; rescales the step without moving optima
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.scale > 0:
            raise DomainError("scale must be positive")
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.jitter is not None and self.jitter < 0:
            raise DomainError("jitter must be non-negative")
        if self.kind is Kind.RMHP and self.augment:
            raise IncompatibleObjective("the antipodal augmentation cannot be combined with rmhp")

    @property
    def sense(self) -> Sense:
        return SENSE[self.kind]

    @property
    def metric(self) -> Metric:
        return self.kernel.metric

    def to_dict(self):
        out = {
            "objective": self.kind.value,
            "kernel": self.kernel.to_dict(),
            "augment": self.augment,
            "inner": self.inner.to_dict(),
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "jitter": self.jitter,
            "scale": self.scale,
        }
        return out

    @classmethod
    def from_dict(cls, data, require_metric: bool = False):
        """Build from the JSON layout used by config files; omitted fields take defaults.

        The MHE default is the Riesz s=2 kernel on the antipodally augmented set.
        """
        data = dict(data)
        kind = Kind(str(data.get("objective", "mhe")).lower())
        kernel = dict(data.get("kernel") or {})
        if require_metric and kind not in (Kind.RMHP, Kind.MGD) and "metric" not in kernel:
            raise DomainError(f"objective {kind.value!r} needs an explicit kernel.metric")
        return cls(
            kind=kind,
            kernel=KernelSpec.from_dict(kernel),
            augment=bool(data.get("augment", kind is Kind.MHE)),
            inner=InnerLoopConfig.from_dict(data.get("inner")),
            gamma=float(data.get("gamma", 5.0)),
            epsilon=float(data.get("epsilon", 1.0)),
            jitter=None if data.get("jitter") is None else float(data["jitter"]),
            scale=float(data.get("scale", 1.0)),
        )


@dataclass
class ObjectiveValue:
    value: float
    sense: Sense
    gradient: Optional[np.ndarray] = None
    # rows the (sub)gradient touches, when it is sparse (MHS)
    active_rows: Optional[tuple] = None
    # maximizing/minimizing probe point of an inner problem, when there is one
    inner_point: Optional[np.ndarray] = None


# --------------------------------------------------------------------------- kernels


def riesz_kernel(rho, s: float):
    """Riesz s-kernel of a distance: ``rho**-s``, ``-log rho`` or ``-rho**|s|``."""
    rho_arr = np.asarray(rho, dtype=float)
    if s >= 0 and np.any(rho_arr <= DISTANCE_FLOOR):
        raise SingularDistance(rho=float(np.min(rho_arr)))
    k, _, _ = _riesz_terms(rho_arr, s)
    return float(k) if k.ndim == 0 else k


def _riesz_terms(rho, s):
    """Kernel value and first two derivatives in the distance."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if s > 0:
            k = rho ** (-s)
            k1 = -s * rho ** (-s - 1.0)
            k2 = s * (s + 1.0) * rho ** (-s - 2.0)
        elif s == 0:
            k = -np.log(rho)
            k1 = -1.0 / rho
            k2 = 1.0 / rho**2
        else:
            p = -s
            k = -(rho**p)
            k1 = -p * rho ** (p - 1.0)
            k2 = -p * (p - 1.0) * rho ** (p - 2.0)
    return k, k1, k2


def _identity_terms(rho):
    return rho, np.ones_like(rho), np.zeros_like(rho)


def _exact_close_pairs(x, candidates):
    """Chordal distances of candidate pairs recomputed from coordinate differences."""
    ii, jj = np.nonzero(candidates)
    return ii, jj, np.linalg.norm(x[ii] - x[jj], axis=1)


def _check_coincident(x, d2, s):
    """Raise SingularDistance if two rows are closer than the floor and ``s >= 0``."""
    if s < 0:
        return
    cand = d2 < 1e-12
    np.fill_diagonal(cand, False)
    if not cand.any():
        return
    cand = np.triu(cand, k=1)
    ii, jj, r = _exact_close_pairs(x, cand)
    hit = np.flatnonzero(r <= DISTANCE_FLOOR)
    if hit.size:
        a = hit[0]
        raise SingularDistance(ii[a], jj[a], r[a])


# --------------------------------------------------------------------------- MHE


def mhe_energy(config, kernel: KernelSpec = KernelSpec(), augmented: bool = False) -> ObjectiveValue:
    """Riesz energy summed over ordered pairs ``i != j``, with its gradient.

    ``augmented`` marks ``config`` as ``[w; -w]``; see :func:`mhe_energy_batch`.
    """
    x = np.asarray(config, dtype=float)
    if x.shape[0] < 2:
        raise DomainError("energy needs at least two points")
    values, grads = mhe_energy_batch(x[None], kernel, augmented)
    return ObjectiveValue(float(values[0]), Sense.MINIMIZE, grads[0])


def mhe_energy_batch(configs, kernel: KernelSpec = KernelSpec(), augmented: bool = False):
    """Energies and gradients of a stack of configurations shaped ``(r, n, d)``.

    Raises SingularDistance if any member has two coincident rows and ``s >= 0``.

    With ``augmented`` each member is ``[w; -w]``.  A point and its own
    antipode are at geodesic distance pi everywhere on the sphere, so those
    pairs add a constant and get no gradient.  Without this the clipped
    arccos derivative turns rounding error into a huge radial term.
    """
    x = np.asarray(configs, dtype=float)
    if kernel.family != "riesz":
        raise DomainError("energy is defined for the Riesz kernel")
    n = x.shape[1]
    s = kernel.s
    eye = np.eye(n, dtype=bool)
    g = x @ np.swapaxes(x, 1, 2)
    g = 0.5 * (g + np.swapaxes(g, 1, 2))
    if s >= 0:
        sq = np.einsum("rii->ri", g)
        d2 = sq[:, :, None] + sq[:, None, :] - 2.0 * g
        d2[:, eye] = 1.0
        if d2.min() < 1e-12:
            for member, d2m in zip(x, d2):
                d2m = np.maximum(d2m, 0.0)
                d2m[eye] = 0.0
                _check_coincident(member, d2m, s)

    if kernel.metric is Metric.CHORDAL:
        sq = np.einsum("rii->ri", g)
        rho = np.sqrt(np.maximum(sq[:, :, None] + sq[:, None, :] - 2.0 * g, 0.0))
        rho[:, eye] = 1.0
        k, k1, _ = _riesz_terms(rho, s)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = k1 / rho
        a[:, eye] = 0.0
        if not np.isfinite(a).all():
            a[~np.isfinite(a)] = 0.0
        k[:, eye] = 0.0
        grad = 2.0 * (a.sum(axis=2)[:, :, None] * x - a @ x)
    else:
        rho = np.arccos(np.clip(g, -1.0, 1.0))
        rho[:, eye] = 1.0
        k, k1, _ = _riesz_terms(rho, s)
        tc = np.clip(g, -ARCCOS_CLIP, ARCCOS_CLIP)
        b = -k1 / np.sqrt(1.0 - tc * tc)
        b[:, eye] = 0.0
        if augmented:
            half = np.arange(n)
            b[:, half, (half + n // 2) % n] = 0.0
        if not np.isfinite(b).all():
            b[~np.isfinite(b)] = 0.0
        k[:, eye] = 0.0
        grad = 2.0 * (b @ x)
    return k.sum(axis=(1, 2)), grad


def riesz_energy(config, s: float, metric=Metric.CHORDAL) -> float:
    """Energy value only; ``inf`` instead of an exception at coincident points."""
    try:
        return mhe_energy(config, KernelSpec(s=s, metric=metric)).value
    except SingularDistance:
        return float("inf")


# --------------------------------------------------------------------------- MHS


def mhs_separation(config, metric=Metric.GEODESIC):
    """Minimum pairwise distance and the lexicographically first pair attaining it."""
    x = np.asarray(config, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise DomainError("separation needs at least two points")
    metric = Metric.parse(metric)
    if metric is Metric.CHORDAL:
        dist = np.sqrt(squared_chordal(x))
    else:
        dist = np.arccos(np.clip(gram(x), -1.0, 1.0))
    np.fill_diagonal(dist, np.inf)
    # upper triangle only, row-major argmin gives the lexicographic tie-break
    dist[np.tril_indices(n, -1)] = np.inf
    flat = int(np.argmin(dist))
    i, j = divmod(flat, n)
    value = float(dist[i, j])
    if value < DISTANCE_FLOOR:
        # coincident points: report an exact zero
        if np.linalg.norm(x[i] - x[j]) <= DISTANCE_FLOOR:
            value = 0.0
    return value, (i, j)


def _distance_grads(u, w, metric):
    """Gradients of rho(u, w) with respect to u and to w."""
    if metric is Metric.CHORDAL:
        diff = u - w
        r = np.linalg.norm(diff)
        if r <= DISTANCE_FLOOR:
            return np.zeros_like(u), np.zeros_like(w)
        return diff / r, -diff / r
    t = np.clip(np.dot(u, w), -ARCCOS_CLIP, ARCCOS_CLIP)
    q = 1.0 / np.sqrt(1.0 - t * t)
    return -q * w, -q * u


def mhs_objective(config, metric=Metric.GEODESIC) -> ObjectiveValue:
    """Separation as an objective; the subgradient touches only the closest pair."""
    x = np.asarray(config, dtype=float)
    metric = Metric.parse(metric)
    value, (i, j) = mhs_separation(x, metric)
    grad = np.zeros_like(x)
    gi, gj = _distance_grads(x[i], x[j], metric)
    grad[i] += gi
    grad[j] += gj
    return ObjectiveValue(value, Sense.MAXIMIZE, grad, active_rows=(i, j))


# --------------------------------------------------------------------------- R-MHP


def rmhp_value(config) -> ObjectiveValue:
    """Norm of the vector sum of the points."""
    x = np.asarray(config, dtype=float)
    total = x.sum(axis=0)
    norm = float(np.linalg.norm(total))
    grad = np.zeros_like(x)
    if norm > 0:
        grad[:] = total / norm
    return ObjectiveValue(norm, Sense.MINIMIZE, grad)


# --------------------------------------------------------------------------- MGD


def default_jitter(n: int) -> float:
    return 1e-10 * n


def mgd_logdet(config, epsilon: float = 1.0, jitter: Optional[float] = None) -> ObjectiveValue:
    """Log-determinant of the Gaussian-kernel Gram matrix ``exp(-eps^2 |u-v|^2)``."""
    x = np.asarray(config, dtype=float)
    n = x.shape[0]
    if jitter is None:
        jitter = default_jitter(n)
    e2 = float(epsilon) ** 2
    kmat = np.exp(-e2 * squared_chordal(x))
    g = kmat + jitter * np.eye(n)
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"Gram matrix is not positive definite (jitter={jitter:g})") from None
    diag = np.diag(chol)
    if not np.all(diag > 0):
        raise NotPositiveDefinite(f"Gram matrix is singular (jitter={jitter:g})")
    value = float(2.0 * np.sum(np.log(diag)))
    eye = np.eye(n)
    ginv = np.linalg.solve(chol.T, np.linalg.solve(chol, eye))
    a = ginv * kmat
    np.fill_diagonal(a, 0.0)
    grad = -4.0 * e2 * (a.sum(axis=1)[:, None] * x - a @ x)
    return ObjectiveValue(value, Sense.MAXIMIZE, grad)


# --------------------------------------------------------------------------- augmentation


def antipodal_augment(config, kind=None) -> np.ndarray:
    """Stack the points with their antipodes: ``[w_1..w_n, -w_1..-w_n]``."""
    if kind is not None and Kind(kind) is Kind.RMHP:
        raise IncompatibleObjective("the antipodal augmentation cannot be combined with rmhp")
    x = np.asarray(config, dtype=float)
    return np.concatenate([x, -x], axis=0)


def fold_augmented_gradient(grad_aug: np.ndarray, n: int) -> np.ndarray:
    """Pull a gradient on the augmented set back to the original points."""
    return grad_aug[:n] - grad_aug[n:]


# --------------------------------------------------------------------------- inner landscapes


class _PairField:
    """Per-point terms of ``phi_i(v) = f(rho(v, w_i))`` and their derivatives.

    ``gv``/``gw`` are gradients in ``v`` and in ``w_i``; :meth:`hvv` and
    :meth:`hvw_t` apply the weighted second-derivative blocks to a vector.
    """

    def __init__(self, v, w, metric, terms, singular_ok):
        self.metric = metric
        self.v = v
        self.w = w
        if metric is Metric.CHORDAL:
            delta = v[None, :] - w
            r = np.linalg.norm(delta, axis=1)
            close = r <= DISTANCE_FLOOR
            if close.any() and not singular_ok:
                i = int(np.flatnonzero(close)[0])
                raise SingularDistance(rho=float(r[i]))
            rr = np.where(close, 1.0, r)
            self.rho = r
            f, f1, f2 = terms(rr)
            with np.errstate(divide="ignore", invalid="ignore"):
                a = f1 / rr
                c = (f2 - a) / rr**2
            a[close] = 0.0
            c[close] = 0.0
            a[~np.isfinite(a)] = 0.0
            c[~np.isfinite(c)] = 0.0
            if close.any():
                with np.errstate(divide="ignore", invalid="ignore"):
                    f = np.where(close, terms(r)[0], f)
            self.phi = f
            self.delta, self.a, self.c = delta, a, c
            self.gv = a[:, None] * delta
            self.gw = -self.gv
        else:
            t = w @ v
            rho = np.arccos(np.clip(t, -1.0, 1.0))
            if not singular_ok and np.any(rho <= DISTANCE_FLOOR):
                close = np.linalg.norm(w - v[None, :], axis=1) <= DISTANCE_FLOOR
                if close.any():
                    raise SingularDistance(rho=0.0)
            self.rho = rho
            f, f1, f2 = terms(np.maximum(rho, 1e-300))
            tc = np.clip(t, -ARCCOS_CLIP, ARCCOS_CLIP)
            q = 1.0 / np.sqrt(1.0 - tc * tc)
            self.b = -f1 * q
            self.bp = f2 * q * q - f1 * tc * q**3
            self.phi = f
            self.gv = self.b[:, None] * w
            self.gw = self.b[:, None] * v[None, :]

    def hvv(self, weights, u):
        """``sum_i weights_i * d^2 phi_i / dv^2 @ u``."""
        if self.metric is Metric.CHORDAL:
            du = self.delta @ u
            return np.sum(weights * self.a) * u + (weights * self.c * du) @ self.delta
        wu = self.w @ u
        return (weights * self.bp * wu) @ self.w

    def hvw_t(self, weights, u):
        """Rows ``weights_i * (d grad_v phi_i / d w_i)^T @ u``."""
        if self.metric is Metric.CHORDAL:
            du = self.delta @ u
            return -(weights * self.a)[:, None] * u[None, :] - (weights * self.c * du)[:, None] * self.delta
        wu = self.w @ u
        return (weights * self.b)[:, None] * u[None, :] + (weights * self.bp * wu)[:, None] * self.v[None, :]


class PolarizationLandscape:
    """Kernel field ``v -> sum_i K_s(rho(v, w_i))``; minimized over ``v``."""

    ascent = False

    def __init__(self, points, kernel: KernelSpec):
        if kernel.family != "riesz":
            raise DomainError("polarization is defined for the Riesz kernel")
        self.w = np.asarray(points, dtype=float)
        self.kernel = kernel
        s = kernel.s
        self._terms = lambda rho: _riesz_terms(rho, s)
        self._singular_ok = s < 0
        self._cache = (None, None)

    def _field(self, v):
        key, fld = self._cache
        if key is not None and np.array_equal(key, v):
            return fld
        fld = _PairField(v, self.w, self.kernel.metric, self._terms, self._singular_ok)
        self._cache = (v.copy(), fld)
        return fld

    def value(self, v):
        return float(np.sum(self._field(v).phi))

    def grad(self, v):
        return self._field(v).gv.sum(axis=0)

    def grad_w(self, v):
        return self._field(v).gw

    def hvp(self, v, u):
        return self._field(v).hvv(1.0, u)

    def vjp_w(self, v, u):
        return self._field(v).hvw_t(1.0, u)


class SoftminLandscape:
    """Smooth minimum ``-(1/gamma) log sum_i exp(-gamma rho(v, w_i))``; maximized over ``v``."""

    ascent = True

    def __init__(self, points, gamma: float, metric=Metric.GEODESIC):
        self.w = np.asarray(points, dtype=float)
        self.gamma = float(gamma)
        self.metric = Metric.parse(metric)
        self._cache = (None, None)

    def _state(self, v):
        key, st = self._cache
        if key is not None and np.array_equal(key, v):
            return st
        fld = _PairField(v, self.w, self.metric, _identity_terms, True)
        z = -self.gamma * fld.rho
        lse = logsumexp(z)
        p = np.exp(z - lse)
        gbar = p @ fld.gv
        st = (fld, p, -lse / self.gamma, gbar)
        self._cache = (v.copy(), st)
        return st

    def value(self, v):
        return float(self._state(v)[2])

    def grad(self, v):
        return self._state(v)[3]

    def grad_w(self, v):
        fld, p, _, _ = self._state(v)
        return p[:, None] * fld.gw

    def hvp(self, v, u):
        fld, p, _, gbar = self._state(v)
        gu = fld.gv @ u
        return fld.hvv(p, u) - self.gamma * ((p * gu) @ fld.gv - gbar * (gbar @ u))

    def vjp_w(self, v, u):
        fld, p, _, gbar = self._state(v)
        centered = (fld.gv - gbar[None, :]) @ u
        return fld.hvw_t(p, u) - self.gamma * (p * centered)[:, None] * fld.gw


class CoveringLandscape:
    """Distance to the nearest point ``v -> min_i rho(v, w_i)``; maximized over ``v``."""

    ascent = True

    def __init__(self, points, metric=Metric.GEODESIC):
        self.w = np.asarray(points, dtype=float)
        self.metric = Metric.parse(metric)

    def distances(self, v):
        if self.metric is Metric.CHORDAL:
            return np.linalg.norm(self.w - v[None, :], axis=1)
        return np.arccos(np.clip(self.w @ v, -1.0, 1.0))

    def nearest(self, v):
        rho = self.distances(v)
        i = int(np.argmin(rho))
        return i, float(rho[i])

    def value(self, v):
        return self.nearest(v)[1]

    def grad(self, v):
        i, _ = self.nearest(v)
        return _distance_grads(v, self.w[i], self.metric)[0]

    def grad_w(self, v):
        i, _ = self.nearest(v)
        out = np.zeros_like(self.w)
        out[i] = _distance_grads(v, self.w[i], self.metric)[1]
        return out


# --------------------------------------------------------------------------- unrolling


def _step(v, g, lr, ascent):
    q = g - np.dot(g, v) * v
    y = v + lr * q if ascent else v - lr * q
    return y


def unroll_inner(start, landscape, steps: int, lr: float, ascent: Optional[bool] = None):
    """Run exactly ``steps`` projected gradient steps on the sphere from ``start``.

    ``landscape`` is either an object with a ``grad(v)`` method or a callable
    returning the Euclidean gradient at ``v``.  Descent by default; objects
    carrying ``ascent = True`` are climbed instead.
    """
    if steps < 1:
        raise DomainError("unroll_inner needs steps >= 1")
    grad_fn = getattr(landscape, "grad", landscape)
    if ascent is None:
        ascent = bool(getattr(landscape, "ascent", False))
    v = np.asarray(start, dtype=float)
    v = v / np.linalg.norm(v)
    for _ in range(steps):
        y = _step(v, np.asarray(grad_fn(v), dtype=float), lr, ascent)
        v = y / np.linalg.norm(y)
    return v


def unrolled_value_and_grad(landscape, start, steps: int, lr: float):
    """Value after unrolled inner steps and its gradient in the outer points.

    Returns ``(value, v_final, grad_points, grad_start)``; ``grad_start`` is the
    cotangent of the starting point, used when the start depends on the points.
    """
    ascent = landscape.ascent
    v = np.asarray(start, dtype=float)
    vs, ys, gs = [v], [], []
    for _ in range(steps):
        g = landscape.grad(v)
        y = _step(v, g, lr, ascent)
        gs.append(g)
        ys.append(y)
        v = y / np.linalg.norm(y)
        vs.append(v)
    value = landscape.value(v)
    grad_w = np.array(landscape.grad_w(v), dtype=float)
    ubar = landscape.grad(v)
    sign = lr if ascent else -lr
    for t in range(steps - 1, -1, -1):
        v, y, g = vs[t], ys[t], gs[t]
        ny = np.linalg.norm(y)
        yh = y / ny
        ybar = (ubar - yh * np.dot(yh, ubar)) / ny
        pybar = ybar - v * np.dot(v, ybar)
        ubar = ybar + sign * (landscape.hvp(v, pybar) - np.dot(v, g) * ybar - g * np.dot(v, ybar))
        grad_w += sign * landscape.vjp_w(v, pybar)
    return value, vs[-1], grad_w, ubar


def deterministic_start(points):
    """Antipode of the mass center, or a fixed fallback direction when the sum vanishes.

    Returns ``(v, depends_on_points)``.
    """
    x = np.asarray(points, dtype=float)
    total = x.sum(axis=0)
    norm = np.linalg.norm(total)
    if norm > 1e-9:
        return -total / norm, True
    d = x.shape[1]
    candidates = [np.ones(d), np.arange(1.0, d + 1.0)] + list(np.eye(d))
    for c in candidates:
        c = c / np.linalg.norm(c)
        if np.min(np.linalg.norm(x - c[None, :], axis=1)) > 1e-3:
            return c, False
    return candidates[0] / np.linalg.norm(candidates[0]), False


def _starts(points, inner: InnerLoopConfig):
    v0, dep = deterministic_start(points)
    d = points.shape[1]
    starts = [(v0, dep)]
    if inner.restarts:
        gen = rng(inner.seed)
        raw = gen.standard_normal((inner.restarts, d))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        starts += [(r, False) for r in raw]
    return starts


def _start_vjp(points, ubar):
    """Pull the cotangent of ``-S/|S|`` back to every point (S is the row sum)."""
    total = points.sum(axis=0)
    norm = np.linalg.norm(total)
    sh = total / norm
    gs = -(ubar - sh * np.dot(sh, ubar)) / norm
    return np.broadcast_to(gs, points.shape)


def _best_unrolled(points, landscape, inner: InnerLoopConfig, pick_max: bool):
    best = None
    for v0, dep in _starts(points, inner):
        v = unroll_inner(v0, landscape, inner.steps, inner.lr)
        val = landscape.value(v)
        better = best is None or (val > best[0] if pick_max else val < best[0])
        if better:
            best = (val, v0, dep)
    _, v0, dep = best
    value, v, grad_w, ubar = unrolled_value_and_grad(landscape, v0, inner.steps, inner.lr)
    if dep:
        grad_w = grad_w + _start_vjp(points, ubar)
    return value, v, grad_w


# --------------------------------------------------------------------------- MHP / MHC


def mhp_value(config, kernel: KernelSpec = KernelSpec(s=1.0), inner: InnerLoopConfig = InnerLoopConfig()):
    """Polarization: the smallest kernel field over the sphere, found by multi-start descent.

    The returned value is the best inner minimum found, hence an upper bound
    on the true polarization.  The gradient differentiates the unrolled descent.
    """
    x = np.asarray(config, dtype=float)
    land = PolarizationLandscape(x, kernel)
    value, v, grad = _best_unrolled(x, land, inner, pick_max=False)
    return ObjectiveValue(value, Sense.MAXIMIZE, grad, inner_point=v)


def mhc_relaxed(
    config,
    gamma: float = 5.0,
    inner: InnerLoopConfig = InnerLoopConfig(),
    metric=Metric.GEODESIC,
    frozen_point=None,
) -> ObjectiveValue:
    """Relaxed covering radius: the soft-min distance maximized over the probe point.

    With ``frozen_point`` the soft-min is evaluated at that point only, and the
    gradient is the partial derivative with the probe held fixed.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    x = np.asarray(config, dtype=float)
    land = SoftminLandscape(x, gamma, metric)
    if frozen_point is not None:
        v = np.asarray(frozen_point, dtype=float)
        return ObjectiveValue(land.value(v), Sense.MINIMIZE, land.grad_w(v), inner_point=v)
    value, v, grad = _best_unrolled(x, land, inner, pick_max=True)
    return ObjectiveValue(value, Sense.MINIMIZE, grad, inner_point=v)


COVERING_DECAY = 1e-3


def _covering_ascent(land: CoveringLandscape, v, steps, lr):
    """Subgradient ascent with a geometrically decaying step; keeps the best iterate."""
    best_v, best = v, land.value(v)
    ratio = COVERING_DECAY ** (1.0 / max(steps - 1, 1))
    eta = lr
    for _ in range(steps):
        y = _step(v, land.grad(v), eta, True)
        v = y / np.linalg.norm(y)
        val = land.value(v)
        if val > best:
            best, best_v = val, v
        eta *= ratio
    return best_v, best


def mhc_covering(config, metric=Metric.GEODESIC, inner: InnerLoopConfig = InnerLoopConfig()) -> ObjectiveValue:
    """Covering radius estimate: the largest nearest-point distance found by multi-start ascent.

    Any probe point gives a lower bound on the true covering radius.  The
    gradient is the Danskin subgradient through the nearest point of the best probe.
    """
    x = np.asarray(config, dtype=float)
    land = CoveringLandscape(x, metric)
    best_v, best = None, -np.inf
    for v0, _ in _starts(x, inner):
        v, val = _covering_ascent(land, v0, inner.steps, inner.lr)
        if val > best:
            best, best_v = val, v
    return ObjectiveValue(float(best), Sense.MINIMIZE, land.grad_w(best_v), inner_point=best_v)


# --------------------------------------------------------------------------- dispatch


def evaluate(config, spec: ObjectiveSpec) -> ObjectiveValue:
    """Evaluate ``spec`` on a configuration, applying the antipodal augmentation if requested."""
    x = np.asarray(config, dtype=float)
    n = x.shape[0]
    if spec.augment:
        x = antipodal_augment(x, spec.kind)
    out = _evaluate_raw(x, spec, n)
    if spec.scale != 1.0:
        out.value *= spec.scale
        if out.gradient is not None:
            out.gradient = out.gradient * spec.scale
    if spec.augment and out.gradient is not None:
        out.gradient = fold_augmented_gradient(out.gradient, n)
        if out.active_rows is not None:
            out.active_rows = tuple(sorted({r % n for r in out.active_rows}))
    return out


def _evaluate_raw(x, spec: ObjectiveSpec, n_original: int) -> ObjectiveValue:
    kind = spec.kind
    if kind is Kind.MHE:
        return mhe_energy(x, spec.kernel, spec.augment)
    if kind is Kind.MHS:
        return mhs_objective(x, spec.metric)
    if kind is Kind.RMHP:
        return rmhp_value(x)
    if kind is Kind.MGD:
        jitter = spec.jitter if spec.jitter is not None else default_jitter(x.shape[0])
        return mgd_logdet(x, spec.epsilon, jitter)
    if kind is Kind.MHP:
        return mhp_value(x, spec.kernel, spec.inner)
    if kind is Kind.MHC:
        return mhc_covering(x, spec.metric, spec.inner)
    if kind is Kind.MHC_RELAXED:
        return mhc_relaxed(x, spec.gamma, spec.inner, spec.metric)
    raise DomainError(f"unknown objective {kind}")
