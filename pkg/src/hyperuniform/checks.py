"""Named end-to-end checks, each returning ``(passed, details)``."""
from __future__ import annotations

import numpy as np

from .diagnostics import spectral_check_thm8
from .objectives import InnerLoopConfig, KernelSpec, Kind, ObjectiveSpec, mhe_energy
from .optimizer import FIG1_OBJECTIVES, OptimizerConfig, multistart, reproduce_fig1, restart_initials, run
from .reference import (
    cross_polytope,
    inequality_check_prop2,
    limit_check_prop1,
    limit_check_prop4,
    regular_simplex,
)
from .sphere import Metric, gram, sample_uniform
from .uniformity import circle_angles, range_test


def _recovery(n, d, reference, restarts, max_iters, seed):
    spec = ObjectiveSpec(Kind.MHE, KernelSpec(s=1.0, metric=Metric.CHORDAL))
    opt = OptimizerConfig(
        lr_schedule=((0, 0.01), (max_iters // 2, 0.001)),
        momentum=0.9,
        max_iters=max_iters,
        seed=seed,
        record_every=max_iters,
    )
    res = multistart(spec, opt, restart_initials(n, d, seed, restarts))
    target = mhe_energy(reference, spec.kernel).value
    best = res.best.final_value
    return res.best.final, best, target, abs(best - target) / target


def check_thm5(seed: int = 0, restarts: int = 50, max_iters: int = 5000):
    """Multi-start MHE on 4 points in R^3 recovers the regular tetrahedron."""
    x, best, target, rel = _recovery(4, 3, regular_simplex(4, 3), restarts, max_iters, seed)
    off = gram(x)[~np.eye(4, dtype=bool)]
    dot_err = float(np.abs(off + 1.0 / 3.0).max())
    passed = rel <= 1e-6 and dot_err <= 1e-3
    return passed, {"best_energy": best, "target": target, "relative_error": rel,
                    "max_dot_deviation": dot_err, "restarts": restarts, "final": x}


def check_thm6(seed: int = 0, restarts: int = 50, max_iters: int = 5000):
    """Multi-start MHE on 6 points in R^3 recovers the octahedron energy."""
    x, best, target, rel = _recovery(6, 3, cross_polytope(3), restarts, max_iters, seed)
    return rel <= 1e-4, {"best_energy": best, "target": target, "relative_error": rel,
                         "restarts": restarts, "final": x}


def check_prop1(seed: int = 0):
    """Closed-form table; ``seed`` is unused."""
    table = limit_check_prop1(4, 3, (2.0, 8.0, 64.0, 256.0))
    err = max(abs(p - 12.0 ** (1.0 / s)) for s, p in table.rows)
    passed = err <= 1e-9 and table.monotone_decreasing and table.above_one
    return passed, {"table": table.to_dict(), "max_closed_form_error": err}


def check_prop4(seed: int = 0):
    """Closed-form table; ``seed`` is unused."""
    tables = {n: limit_check_prop4(n, (4.0, 16.0, 64.0)) for n in (2, 4)}
    passed = all(t.monotone_decreasing and t.above_one for t in tables.values())
    return passed, {str(n): t.to_dict() for n, t in tables.items()}


PROP2_CASES = ((2, 2, 2.0), (3, 2, 2.0), (4, 3, 2.0))


def check_prop2(seed: int = 0, slack: float = 1e-3):
    """Every margin of the chain must be at least ``slack``."""
    reports = [inequality_check_prop2(n, d, s, seed=seed) for n, d, s in PROP2_CASES]
    passed = all(min(r.margins) >= slack for r in reports)
    return passed, {"slack": slack, "cases": [r.to_dict() for r in reports]}


def geometric_schedule(lr0: float, lr1: float, start: int, length: int, pieces: int = 60):
    """Constant ``lr0`` until ``start``, then geometric decay to ``lr1`` over ``length`` iterations."""
    tail = [(start + k * length // pieces, lr0 * (lr1 / lr0) ** (k / (pieces - 1))) for k in range(1, pieces)]
    return ((0, lr0),) + tuple(tail)


def range_by_optimization(kind: Kind, n: int = 8, seed: int = 0):
    """Range statistic of ``n`` circle points after MHS or hard MHC optimization.

    Both objectives are nonsmooth at equal spacing, so the step decays
    geometrically to 1e-9 to stop the chatter.
    """
    metric = KernelSpec(metric=Metric.GEODESIC)
    if kind is Kind.MHS:
        spec = ObjectiveSpec(Kind.MHS, metric)
        sched, iters = geometric_schedule(0.02, 1e-9, 0, 20000), 20000
    elif kind is Kind.MHC:
        spec = ObjectiveSpec(Kind.MHC, metric, inner=InnerLoopConfig(steps=20, lr=0.1, restarts=4))
        sched, iters = geometric_schedule(0.02, 1e-9, 1500, 2500), 4000
    else:
        raise ValueError(f"range maximization uses mhs or mhc, not {kind.value}")
    opt = OptimizerConfig(lr_schedule=sched, momentum=0.0, max_iters=iters, seed=seed, record_every=iters)
    final = run(sample_uniform(n, 2, seed), spec, opt).final
    return range_test(circle_angles(final)), final


def check_prop5(seed: int = 0, n: int = 8, tol: float = 1e-4):
    """MHS and MHC on the circle both reach the equally spaced range statistic."""
    target = 2 * np.pi - 2 * np.pi / n
    got = {k.value: range_by_optimization(k, n, seed)[0] for k in (Kind.MHS, Kind.MHC)}
    err = {k: abs(v - target) for k, v in got.items()}
    return max(err.values()) <= tol, {"target": target, "range": got, "abs_error": err}


def check_thm8(seed: int = 0):
    rep = spectral_check_thm8(500, 1000, trials=5, seed=seed)
    return rep.violations == 0, rep.to_dict()


def check_fig1(seed: int = 0):
    """MHE ends with the lowest energy and MHS with the largest separation."""
    trajs = reproduce_fig1(seed)
    finals = {k: trajs[k].final_record for k in FIG1_OBJECTIVES}
    energy = {k: r.energy_s2 for k, r in finals.items()}
    sep = {k: r.separation_geodesic for k, r in finals.items()}
    passed = min(energy, key=energy.get) == "mhe" and max(sep, key=sep.get) == "mhs"
    return passed, {"final_energy_s2": energy, "final_separation_geodesic": sep,
                    "final_iter": {k: r.iter for k, r in finals.items()}}


CHECKS = {
    "prop1": check_prop1,
    "prop2": check_prop2,
    "prop4": check_prop4,
    "prop5": check_prop5,
    "thm5": check_thm5,
    "thm6": check_thm6,
    "thm8": check_thm8,
    "fig1": check_fig1,
}
