"""Quality measures of a configuration and the edge singular value check."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError
from .objectives import mhs_separation, riesz_energy
from .reference import covering_sample_oracle
from .sphere import Metric, check_configuration, rng


@dataclass
class DiagnosticsReport:
    energy_s2: float
    separation_geodesic: float
    covering_estimate: float
    masscenter_norm: float
    sigma_max: float
    sigma_min: float
    theorem8_upper: float
    theorem8_lower: float
    column_norm_proxy: bool = True

    def to_dict(self):
        return asdict(self)


def singular_values(config) -> np.ndarray:
    """Singular values of the ``d x n`` matrix whose columns are the points, descending."""
    return np.linalg.svd(np.asarray(config, dtype=float).T, compute_uv=False)


def edge_bounds(n: int, d: int, column_norms) -> tuple:
    """Reference values for the extreme singular values with aspect ratio ``n/d``.

    ``column_norms`` are the norms of the vectors before normalization.
    """
    lam = n / d
    inv = 1.0 / np.asarray(column_norms, dtype=float)
    upper = (np.sqrt(d) + np.sqrt(lam * d)) * inv.max()
    lower = (np.sqrt(d) - np.sqrt(lam * d)) * inv.min()
    return float(upper), float(lower)


def diagnose(config, oracle_samples: int = 10_000, seed: int = 0, raw_norms=None) -> DiagnosticsReport:
    """Energy, separation, covering, mass center and spectrum of a configuration.

    The energy is the geodesic Riesz s=2 energy of the raw set (``inf`` if two
    points coincide).  Without ``raw_norms`` the edge bounds use ``sqrt(d)``
    for every column norm, the expected Gaussian norm.
    """
    x = check_configuration(config)
    n, d = x.shape
    if n < 2:
        raise DomainError("diagnostics need n >= 2")
    sv = singular_values(x)
    proxy = raw_norms is None
    norms = np.full(n, np.sqrt(d)) if proxy else raw_norms
    upper, lower = edge_bounds(n, d, norms)
    return DiagnosticsReport(
        energy_s2=riesz_energy(x, 2.0, Metric.GEODESIC),
        separation_geodesic=mhs_separation(x, Metric.GEODESIC)[0],
        covering_estimate=covering_sample_oracle(x, Metric.GEODESIC, oracle_samples, seed).estimate,
        masscenter_norm=float(np.linalg.norm(x.sum(axis=0))),
        sigma_max=float(sv[0]),
        sigma_min=float(sv[-1]),
        theorem8_upper=upper,
        theorem8_lower=lower,
        column_norm_proxy=proxy,
    )


@dataclass
class SpectralReport:
    n: int
    d: int
    trials: int
    slack: float
    violations: int
    margins: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def spectral_check_thm8(n: int, d: int, trials: int = 5, seed: int = 0, slack: float = 0.05) -> SpectralReport:
    """Compare extreme singular values of normalized Gaussian columns with their edge bounds.

    Each trial draws a ``d x n`` standard Gaussian matrix, normalizes its
    columns and checks ``sigma_max <= upper (1 + slack)`` and
    ``sigma_min >= lower (1 - slack)``.  Margins are relative: positive means
    the bound holds with room to spare.
    """
    lam = n / d
    if not 0.0 < lam < 1.0:
        raise DomainError(f"need 0 < n/d < 1, got {lam}")
    violations = 0
    margins = []
    for t in range(trials):
        raw = rng(seed, t).standard_normal((d, n))
        norms = np.linalg.norm(raw, axis=0)
        sv = np.linalg.svd(raw / norms, compute_uv=False)
        upper, lower = edge_bounds(n, d, norms)
        m_up = (upper * (1.0 + slack) - sv[0]) / upper
        m_lo = (sv[-1] - lower * (1.0 - slack)) / lower
        violations += int(m_up < 0) + int(m_lo < 0)
        margins.append({"trial": t, "sigma_max": float(sv[0]), "sigma_min": float(sv[-1]),
                        "upper": upper, "lower": lower, "upper_margin": float(m_up), "lower_margin": float(m_lo)})
    return SpectralReport(n, d, trials, slack, violations, margins)
