"""Lacunary plane-wave initial data and its frequency geometry."""
import logging
import math
import numbers
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .errors import ParameterError
from .reports import BoundReport, exact_report
from .trig_field import (
    BesovEstimate,
    E3,
    TGridSpec,
    TrigField,
    divergence,
    leray_project,
    maximize_profile,
)
from .types import Frequency

logger = logging.getLogger(__name__)

ETA: Frequency = (0, 1, 0)

# |k|^2 must stay a finite float64
MAX_FREQUENCY_BITS = 511

# Heat-time sups of the data are self-similar past this many waves.
SATURATION = 64

# Sums over waves are evaluated term by term up to here; later terms have
# saturated to their limits at every representable positive time.
EXPLICIT_WAVES = 480

PROPOSITION = "beta > max(0, 1/2 - 3*nu/4)"


def _is_int(value) -> bool:
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


@dataclass(frozen=True)
class LacunaryParams:
    r: int = 4
    beta: float = 0.45
    K: int = 4
    nu: float = 0.2
    delta: float = 0.01
    s: float = 0.5
    amplitude: float = 1.0

    def __post_init__(self):
        if not _is_int(self.r) or self.r < 1:
            raise ParameterError(f"r must be a positive integer, got {self.r!r}")
        if not _is_int(self.K) or self.K < 2:
            raise ParameterError(f"K must be an integer >= 2, got {self.K!r}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ParameterError(f"beta must be positive, got {self.beta!r}")
        if not (math.isfinite(self.nu) and self.nu >= 0):
            raise ParameterError(f"nu must be non-negative, got {self.nu!r}")
        if not 0 < self.delta <= 0.2:
            raise ParameterError(f"delta must lie in (0, 0.2], got {self.delta!r}")
        if not (math.isfinite(self.s) and self.s > 0):
            raise ParameterError(f"s must be positive, got {self.s!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ParameterError(f"amplitude must be positive, got {self.amplitude!r}")

    @property
    def T(self) -> float:
        """The inflation time r^-nu."""
        return float(self.r) ** -self.nu

    @property
    def scale(self) -> float:
        """Mode amplitude factor amplitude * r^-beta."""
        return self.amplitude * float(self.r) ** -self.beta

    @property
    def satisfies_proposition(self) -> bool:
        return self.beta > max(0.0, 0.5 - 0.75 * self.nu)

    def check_proposition(self) -> None:
        if not self.satisfies_proposition:
            raise ParameterError(
                f"beta={self.beta} nu={self.nu} violates {PROPOSITION} "
                f"(needs beta > {max(0.0, 0.5 - 0.75 * self.nu):g})"
            )

    def replace(self, **changes) -> "LacunaryParams":
        return replace(self, **changes)


def k_rule(r: int, nu: float) -> int:
    """Base frequency K = r^(nu/2), rounded and kept integral >= 2."""
    return max(2, int(round(float(r) ** (nu / 2))))


def rule_params(
    r: int, nu: float, delta: float = 0.01, s: float = 0.5, amplitude: float = 1.0
) -> LacunaryParams:
    """Parameters on the inflation path beta = 1/2 - nu/2, K = k_rule(r, nu)."""
    return LacunaryParams(
        r=r,
        beta=0.5 - nu / 2,
        K=k_rule(r, nu),
        nu=nu,
        delta=delta,
        s=s,
        amplitude=amplitude,
    )


class WaveTriple(NamedTuple):
    index: int
    kprime: Frequency
    kfull: Frequency
    v: Tuple[float, float, float]

    @property
    def kbar(self) -> int:
        return self.kprime[2]

    def v_exact(self) -> Tuple[Fraction, Fraction, Fraction]:
        return (Fraction(0), Fraction(1, 2), Fraction(-1, 2 * self.kbar))


@lru_cache(maxsize=64)
def make_frequencies(p: LacunaryParams) -> Tuple[WaveTriple, ...]:
    top = 2 ** (p.r - 1) * p.K
    if top.bit_length() > MAX_FREQUENCY_BITS:
        raise ParameterError(
            f"2^(r-1)K = {p.K}*2^{p.r - 1} overflows float64 |k|^2; "
            f"r={p.r} is too large for explicit fields"
        )
    triples = []
    for i in range(1, p.r + 1):
        kbar = 2 ** (i - 1) * p.K
        kprime = (0, 0, kbar)
        kfull = (0, 1, kbar)
        triples.append(WaveTriple(i, kprime, kfull, (0.0, 0.5, -1.0 / (2 * kbar))))
    return tuple(triples)


@lru_cache(maxsize=64)
def make_initial_data(p: LacunaryParams) -> Tuple[TrigField, TrigField]:
    """u0 = A r^-beta sum |k_s| v_s cos(k_s.x), rho0 = A r^-beta sum |k_s'| cos(k_s'.x)."""
    waves = make_frequencies(p)
    u_modes, rho_modes = [], []
    for w in waves:
        norm = math.hypot(1.0, float(w.kbar))
        c = p.scale * norm * np.array(w.v)
        u_modes.append((w.kfull, c, np.zeros(3)))
        rho_modes.append((w.kprime, p.scale * float(w.kbar), 0.0))
    return TrigField.from_modes(u_modes, dim=3), TrigField.from_modes(rho_modes, dim=1)


def _dot(v, k) -> Fraction:
    return sum((a * b for a, b in zip(v, k)), Fraction(0))


def verify_construction(p: LacunaryParams) -> List[BoundReport]:
    """Check the algebraic relations of the construction exactly."""
    waves = make_frequencies(p)
    u0, rho0 = make_initial_data(p)
    reports = []
    for w in waves:
        v = w.v_exact()
        reports.append(exact_report(f"v{w.index}_dot_k{w.index}", p, _dot(v, w.kfull), 0))
        reports.append(
            exact_report(f"v{w.index}_dot_kprime{w.index}", p, _dot(v, w.kprime), Fraction(-1, 2))
        )
    limit = 1.0 / (2 * p.K ** 2)
    for wi in waves:
        v = wi.v_exact()
        for wj in waves:
            if wi.index == wj.index:
                continue
            reports.append(
                exact_report(
                    f"v{wi.index}_dot_kprime{wj.index}",
                    p,
                    _dot(v, wj.kprime),
                    Fraction(-wj.kbar, 2 * wi.kbar),
                )
            )
            full, prime = _dot(v, wj.kfull), _dot(v, wj.kprime)
            deviation = float(abs(full - prime) / abs(prime))
            within = "within" if deviation <= limit else "exceeds"
            reports.append(
                BoundReport(
                    f"v{wi.index}_dot_k{wj.index}_approx",
                    p,
                    None,
                    float(full),
                    float(prime),
                    deviation,
                    True,
                    f"informational: relative deviation {deviation:.6g} {within} 1/(2K^2)",
                )
            )
    for a, b in zip(waves, waves[1:]):
        reports.append(exact_report(f"lacunarity_{a.index}", p, b.kbar, 2 * a.kbar))
    reports.append(exact_report("divergence_u0_modes", p, len(divergence(u0)), 0))
    reports.append(
        exact_report("leray_rho0_e3_modes", p, len(leray_project(rho0.times(E3))), 0)
    )
    reports.append(
        exact_report("mean_zero", p, int(u0.is_mean_zero and rho0.is_mean_zero), 1)
    )
    return reports


def wave_scales(p: LacunaryParams, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """kbar_s and |k_s| for the first ``count`` waves, as floats."""
    kbar = p.K * np.exp2(np.arange(count, dtype=float))
    return kbar, np.hypot(1.0, kbar)


class DataNorms(NamedTuple):
    u0: BesovEstimate
    rho0: BesovEstimate


def heat_data_linf(p: LacunaryParams, t: float) -> Tuple[float, float]:
    """Closed-form ||e^{t Laplacian} u0||_inf and ||e^{t Laplacian} rho0||_inf.

    Every mode of the evolved data peaks in phase at the origin with a
    nonnegative weight, so the sup norms are the values at x = 0.
    """
    kbar, knorm = wave_scales(p, min(p.r, SATURATION))
    with np.errstate(over="ignore"):
        a = knorm * np.exp(-knorm ** 2 * t)
        b = kbar * np.exp(-kbar ** 2 * t)
    u = p.scale * math.hypot(a.sum() / 2, (a / kbar).sum() / 2)
    rho = p.scale * float(b.sum())
    return float(u), rho


def heat_rho0_linf(p: LacunaryParams, t: float) -> float:
    return heat_data_linf(p, t)[1]


def _scale_grid(p: LacunaryParams, t_max: float, per_decade: int = 40) -> np.ndarray:
    _, knorm = wave_scales(p, min(p.r, SATURATION))
    t_min = 0.01 / float(knorm[-1]) ** 2
    decades = math.log10(t_max / t_min)
    return np.geomspace(t_min, t_max, max(2, int(per_decade * decades)))


def data_norms(
    p: LacunaryParams,
    s: float = 1.0,
    tgrid: Optional[TGridSpec] = None,
    inhomogeneous: bool = False,
) -> DataNorms:
    """B^{-s} norms of (u0, rho0) from the closed-form heat evolution.

    The heat-time grid spans every frequency scale of the data, so this
    stays exact for r far beyond what explicit fields can hold.
    """
    tgrid = TGridSpec() if tgrid is None else tgrid
    t_max = min(tgrid.t_max, 1.0) if inhomogeneous else tgrid.t_max
    times = _scale_grid(p, t_max)
    out = []
    for which in range(2):

        def profile(t: float) -> float:
            return t ** (s / 2) * heat_data_linf(p, t)[which]

        value, argmax_t, edge = maximize_profile(profile, times, tgrid.refine)
        out.append(BesovEstimate(value, argmax_t, float(s), edge))
    return DataNorms(*out)


def explicit_count(p: LacunaryParams) -> int:
    """Number of waves summed term by term, keeping |k|^2 a finite float."""
    return max(1, min(p.r, EXPLICIT_WAVES, 1 + 500 - p.K.bit_length()))
