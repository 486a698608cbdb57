"""Known optimal configurations and brute-force estimators used to check the optimizers."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from .errors import DimensionError, DomainError, UnsupportedCase
from .objectives import (
    InnerLoopConfig,
    KernelSpec,
    Kind,
    ObjectiveSpec,
    riesz_kernel,
)
from .optimizer import OptimizerConfig, multistart, restart_initials
from .sphere import Metric, check_configuration, normalize, pairwise_distances, sample_uniform


class Method(str, Enum):
    CLOSED_FORM = "closed_form"
    GRID_SEARCH = "grid_search"
    MULTI_START = "multi_start"


@dataclass
class OracleReport:
    quantity: str
    estimate: float
    method: Method
    samples_or_restarts: int
    point: Optional[np.ndarray] = None

    def to_dict(self):
        out = asdict(self)
        out["method"] = self.method.value
        out["point"] = None if self.point is None else self.point.tolist()
        return out


# --------------------------------------------------------------------------- closed forms


def regular_simplex(n: int, d: int) -> np.ndarray:
    """``n`` unit vectors in R^d with pairwise dot ``-1/(n-1)`` and zero sum."""
    if n < 2:
        raise DomainError("a simplex needs n >= 2")
    if n > d + 1:
        raise DimensionError(f"a regular simplex with {n} vertices does not fit in R^{d}")
    centered = np.eye(n) - 1.0 / n
    # orthonormal coordinates of the hyperplane orthogonal to the all-ones vector
    u, _, _ = np.linalg.svd(centered)
    coords = centered @ u[:, : n - 1]
    out = np.zeros((n, d))
    out[:, : n - 1] = coords
    return normalize(out)


def cross_polytope(d: int) -> np.ndarray:
    """The ``2d`` points ``+e_1, -e_1, ..., +e_d, -e_d``."""
    if d < 2:
        raise DomainError("need d >= 2")
    eye = np.eye(d)
    out = np.empty((2 * d, d))
    out[0::2] = eye
    out[1::2] = -eye
    return out


def circle_points(n: int, offset: float = 0.0) -> np.ndarray:
    """``n`` equally spaced points on S^1."""
    theta = offset + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(theta), np.sin(theta)])


# --------------------------------------------------------------------------- sampling oracles


def _field(v, config, kernel: KernelSpec):
    """Summed kernel field at each row of ``v``."""
    if kernel.metric is Metric.CHORDAL:
        d2 = np.maximum(
            np.sum(v * v, axis=1)[:, None] + np.sum(config * config, axis=1)[None, :] - 2.0 * v @ config.T,
            0.0,
        )
        rho = np.sqrt(d2)
    else:
        rho = np.arccos(np.clip(v @ config.T, -1.0, 1.0))
    with np.errstate(divide="ignore"):
        if kernel.s >= 0:
            # the field is +inf on the points themselves
            rho = np.where(rho <= 0.0, 0.0, rho)
            k = np.where(rho > 0.0, riesz_kernel(np.where(rho > 0.0, rho, 1.0), kernel.s), np.inf)
        else:
            k = riesz_kernel(rho, kernel.s)
    return k.sum(axis=1)


def _min_distance(v, config, metric: Metric):
    if metric is Metric.CHORDAL:
        d2 = np.maximum(2.0 - 2.0 * v @ config.T, 0.0)
        return np.sqrt(d2).min(axis=1)
    return np.arccos(np.clip(v @ config.T, -1.0, 1.0)).min(axis=1)


def _tangent_basis(p):
    """Orthonormal basis of the tangent space at ``p`` as columns."""
    q, _ = np.linalg.qr(np.column_stack([p, np.eye(p.size)]))
    return q[:, 1:]


def _polish(f, p0):
    """Nelder-Mead minimization of ``f`` in a local chart around ``p0``."""
    basis = _tangent_basis(p0)

    def lift(z):
        v = p0 + basis @ z
        return v / np.linalg.norm(v)

    res = optimize.minimize(
        lambda z: f(lift(z)[None, :])[0],
        np.zeros(basis.shape[1]),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000, "initial_simplex": _simplex(basis.shape[1])},
    )
    return lift(res.x), float(res.fun)


def _simplex(m, size=0.05):
    return np.vstack([np.zeros(m), size * np.eye(m)])


def _sample_and_polish(f, d, samples, seed, polish):
    """Minimize ``f`` over the sphere: uniform samples, then polish the best few."""
    if samples < 1000:
        raise DomainError("use at least 1000 samples")
    v = sample_uniform(samples, d, seed=seed)
    vals = f(v)
    order = np.argsort(vals, kind="stable")[:polish]
    best_v, best_f = v[order[0]], float(vals[order[0]])
    for idx in order:
        p, val = _polish(f, v[idx])
        if val < best_f:
            best_v, best_f = p, val
    return best_v, best_f


def polarization_grid_oracle(
    config, kernel: KernelSpec = KernelSpec(s=1.0), samples: int = 10_000, seed: int = 0, polish: int = 10
) -> OracleReport:
    """Smallest value of the summed kernel field found by sampling plus derivative-free polish."""
    x = check_configuration(config)
    point, value = _sample_and_polish(lambda v: _field(v, x, kernel), x.shape[1], samples, seed, polish)
    return OracleReport("polarization", value, Method.GRID_SEARCH, samples, point)


def covering_sample_oracle(
    config, metric=Metric.GEODESIC, samples: int = 10_000, seed: int = 0, polish: int = 10
) -> OracleReport:
    """Largest distance from a sphere point to its nearest configuration point."""
    x = check_configuration(config)
    metric = Metric.parse(metric)
    if x.shape[0] == 1:
        antipode = -x[0]
        value = np.pi if metric is Metric.GEODESIC else 2.0
        return OracleReport("covering", value, Method.GRID_SEARCH, samples, antipode)
    point, value = _sample_and_polish(
        lambda v: -_min_distance(v, x, metric), x.shape[1], samples, seed, polish
    )
    return OracleReport("covering", -value, Method.GRID_SEARCH, samples, point)


# --------------------------------------------------------------------------- limit tables


@dataclass
class LimitTable:
    rows: list
    monotone_decreasing: bool
    above_one: bool

    def to_dict(self):
        return {
            "rows": [{"s": s, "product": p} for s, p in self.rows],
            "monotone_decreasing": self.monotone_decreasing,
            "above_one": self.above_one,
        }


def _limit_table(rows):
    prods = [p for _, p in rows]
    mono = all(b < a for a, b in zip(prods, prods[1:]))
    return LimitTable(rows, mono, all(p >= 1.0 for p in prods))


def universal_optimum(n: int, d: int) -> np.ndarray:
    if 2 <= n <= d + 1:
        return regular_simplex(n, d)
    if n == 2 * d:
        return cross_polytope(d)
    raise UnsupportedCase(f"no closed-form optimum known for n={n}, d={d}")


def limit_check_prop1(n: int, d: int, s_values: Sequence[float] = (2.0, 8.0, 64.0, 256.0)) -> LimitTable:
    """``E_s^(1/s) * separation`` at the closed-form optimum, in chordal distance.

    Evaluated in log space so large ``s`` does not overflow.
    """
    x = universal_optimum(n, d)
    rho = pairwise_distances(x, Metric.CHORDAL)[~np.eye(n, dtype=bool)]
    log_rho = np.log(rho)
    log_sep = log_rho.min()
    rows = []
    for s in s_values:
        if s <= 0:
            raise DomainError("s must be positive")
        log_e = logsumexp(-s * log_rho)
        rows.append((float(s), float(np.exp(log_e / s + log_sep))))
    return _limit_table(rows)


def limit_check_prop4(n: int, s_values: Sequence[float] = (4.0, 16.0, 64.0), grid: int = 4001) -> LimitTable:
    """``P_s^(1/s) * covering`` for ``n`` equally spaced points on S^1 (geodesic).

    By symmetry the field minimum lies on one arc between neighbours; it is
    located on a dense grid over that arc and refined by bounded scalar search.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    pts = 2.0 * np.pi * np.arange(n) / n
    alpha = np.pi / n
    step = 2.0 * np.pi / n

    def log_field(phi, s):
        diff = np.abs(np.subtract.outer(np.atleast_1d(phi), pts)) % (2.0 * np.pi)
        rho = np.minimum(diff, 2.0 * np.pi - diff)
        return logsumexp(-s * np.log(rho), axis=1)

    rows = []
    for s in s_values:
        if s <= 0:
            raise DomainError("s must be positive")
        phi = np.linspace(0.0, step, grid)[1:-1]
        vals = log_field(phi, s)
        i = int(np.argmin(vals))
        lo, hi = phi[max(i - 1, 0)], phi[min(i + 1, phi.size - 1)]
        res = optimize.minimize_scalar(
            lambda p: float(log_field(p, s)[0]), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
        )
        log_p = min(float(res.fun), float(vals[i]))
        rows.append((float(s), float(np.exp(log_p / s) * alpha)))
    return _limit_table(rows)


# --------------------------------------------------------------------------- inequality chain


@dataclass
class Prop2Report:
    n: int
    d: int
    s: float
    polarization: float
    energy_next_over: float
    energy_over: float
    margins: tuple
    holds: bool
    tolerance: float
    restarts: int

    def to_dict(self):
        out = asdict(self)
        out["margins"] = list(self.margins)
        return out


def min_energy(n: int, d: int, s: float, restarts: int = 50, seed: int = 0, max_iters: int = 3000) -> OracleReport:
    """Multi-start estimate of the minimal chordal Riesz ``s``-energy of ``n`` points."""
    spec = ObjectiveSpec(Kind.MHE, KernelSpec(s=s, metric=Metric.CHORDAL))
    # the summed energy's gradient grows like n * s, so the step shrinks with it
    lr = 0.05 / max(1.0, n * s)
    opt = OptimizerConfig(
        lr_schedule=((0, lr), (max_iters // 2, lr / 10), (3 * max_iters // 4, lr / 100)),
        momentum=0.9,
        max_iters=max_iters,
        seed=seed,
        record_every=max_iters,
    )
    res = multistart(spec, opt, restart_initials(n, d, seed, restarts), workers=1)
    return OracleReport("energy", res.best.final_value, Method.MULTI_START, restarts, res.best.final)


def max_polarization(
    n: int,
    d: int,
    s: float,
    restarts: int = 6,
    seed: int = 0,
    max_iters: int = 300,
    oracle_samples: int = 10_000,
) -> OracleReport:
    """Multi-start MHP optimization, each final configuration scored by the sampling oracle."""
    kernel = KernelSpec(s=s, metric=Metric.CHORDAL)
    spec = ObjectiveSpec(Kind.MHP, kernel, inner=InnerLoopConfig(steps=15, lr=0.05, restarts=6, seed=seed))
    opt = OptimizerConfig(
        lr_schedule=((0, 0.02), (max_iters // 2, 0.005)),
        momentum=0.5,
        max_iters=max_iters,
        seed=seed,
        record_every=max_iters,
    )
    res = multistart(spec, opt, restart_initials(n, d, seed, restarts), workers=1)
    best, best_x = -np.inf, None
    for run in res.runs:
        if run is None:
            continue
        rep = polarization_grid_oracle(run.final, kernel, samples=oracle_samples, seed=seed)
        if rep.estimate > best:
            best, best_x = rep.estimate, run.final
    return OracleReport("polarization", float(best), Method.MULTI_START, restarts, best_x)


def inequality_check_prop2(
    n: int, d: int, s: float, restarts: int = 50, seed: int = 0, tolerance: float = 1e-3
) -> Prop2Report:
    """Check ``P_s(n) >= eps_s(n+1)/(n+1) >= eps_s(n)/(n-1)`` with numerical estimates.

    Energies come from multi-start MHE and the polarization from multi-start
    MHP; everything uses the chordal Riesz kernel.
    """
    if d not in (2, 3) or not 2 <= n <= 6:
        raise UnsupportedCase("estimates are trusted for d in {2, 3} and 2 <= n <= 6 only")
    if s <= 0:
        raise DomainError("s must be positive")
    e_n = min_energy(n, d, s, restarts, seed).estimate
    e_next = min_energy(n + 1, d, s, restarts, seed).estimate
    pol = max_polarization(n, d, s, seed=seed).estimate
    a, b = e_next / (n + 1), e_n / (n - 1)
    margins = (pol - a, a - b)
    return Prop2Report(n, d, float(s), pol, a, b, margins, all(m >= -tolerance for m in margins), tolerance, restarts)


# --------------------------------------------------------------------------- separation scaling


def separation_scaling_table(ns=(8, 16, 32, 64), d: int = 3, s: float = 1.0, restarts: int = 10, seed: int = 0):
    """``separation * n**(1/(d-1))`` at multi-start MHE optima; a diagnostic, nothing is asserted."""
    rows = []
    for n in ns:
        rep = min_energy(n, d, s, restarts, seed)
        sep = pairwise_distances(rep.point, Metric.CHORDAL)[~np.eye(n, dtype=bool)].min()
        rows.append({"n": n, "separation": float(sep), "scaled": float(sep * n ** (1.0 / (d - 1)))})
    return rows
