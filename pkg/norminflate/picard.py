"""Closed-form Duhamel integrals, the bilinear operators and the first Picard iterates.

Inputs are fields at time 0. A source enters the Duhamel integrals as
``s**power * heat(field, s)`` so every time integral reduces, mode by mode,
to an incomplete gamma function.
"""
import logging
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from .errors import ArityError, InvalidArgument
from .lacunary import LacunaryParams, explicit_count, wave_scales
from .trig_field import (
    E3,
    TrigField,
    norm2,
    assemble,
    heat,
    leray_project,
    product,
    tensor_divergence,
)

logger = logging.getLogger(__name__)

# Below this value of |M - A| t the moments switch to their Taylor series.
SERIES_THRESHOLD = 1e-6

KINDS = ("B1", "B2", "B3")


class DuhamelKernel(NamedTuple):
    """int_0^t (t-s)^weight_power s^source_power e^{-(t-s) M} e^{-s A} ds."""

    weight_power: int
    outgoing_decay: float
    incoming_decay: float
    source_power: int = 0


def _moments(n: int, d: np.ndarray, t: float) -> np.ndarray:
    """int_0^t w^n e^{-d w} dw for d >= 0."""
    out = np.empty_like(d)
    small = d * t < SERIES_THRESHOLD
    ds = d[small]
    out[small] = (
        t ** (n + 1) / (n + 1)
        - ds * t ** (n + 2) / (n + 2)
        + ds ** 2 * t ** (n + 3) / (2 * (n + 3))
    )
    dl = d[~small]
    with np.errstate(over="ignore", under="ignore"):
        out[~small] = math.factorial(n) / dl ** (n + 1) * special.gammainc(n + 1, dl * t)
    return out


def _weighted(a: int, b: int, d: np.ndarray, t: float) -> np.ndarray:
    """int_0^t w^a (t - w)^b e^{-d w} dw by binomial expansion of (t - w)^b."""
    total = np.zeros_like(d)
    for j in range(b + 1):
        total += math.comb(b, j) * t ** (b - j) * (-1) ** j * _moments(a + j, d, t)
    return total


def duhamel_values(
    p: int,
    q: int,
    M: np.ndarray,
    A: np.ndarray,
    D: np.ndarray,
    t: float,
) -> np.ndarray:
    """Vectorized Duhamel kernel; ``D = M - A`` is passed separately so it can be exact."""
    M, A, D = (np.asarray(x, dtype=float) for x in (M, A, D))
    M, A, D = np.broadcast_arrays(M, A, D)
    out = np.empty(D.shape)
    up = D >= 0
    # the slower of the two exponentials factors out
    if up.any():
        out[up] = np.exp(-t * A[up]) * _weighted(p, q, D[up], t)
    if (~up).any():
        out[~up] = np.exp(-t * M[~up]) * _weighted(q, p, -D[~up], t)
    return out


def duhamel_integral(kern: DuhamelKernel, t: float) -> float:
    if not (np.isfinite(t) and t > 0):
        raise InvalidArgument(f"t must be positive and finite, got {t}")
    M, A = float(kern.outgoing_decay), float(kern.incoming_decay)
    if not (M >= 0 and A >= 0 and np.isfinite(M) and np.isfinite(A)):
        raise InvalidArgument(f"Decays must be finite and non-negative, got M={M}, A={A}")
    for name in ("weight_power", "source_power"):
        power = getattr(kern, name)
        if int(power) != power or power < 0:
            raise InvalidArgument(f"{name} must be a non-negative integer, got {power}")
    out = duhamel_values(
        int(kern.weight_power), int(kern.source_power), M, A, M - A, float(t)
    )
    return float(out)


class Source(NamedTuple):
    """The time-dependent source ``s**power * heat(field, s)``."""

    field: TrigField
    power: int = 0


SourceLike = Union[TrigField, Source, Sequence[Source]]


def as_sources(x: SourceLike) -> Tuple[List[Source], int]:
    if isinstance(x, TrigField):
        items = [Source(x, 0)]
    elif isinstance(x, Source):
        items = [x]
    else:
        items = list(x)
    if not items:
        raise InvalidArgument("At least one source is required")
    dims = {src.field.dim for src in items}
    if len(dims) > 1:
        raise ArityError("Sources of one argument must share an arity")
    return [src for src in items if len(src.field)], dims.pop()


def _kernel(weight: int, q: int, t: float):
    def kernel(M: np.ndarray, A: np.ndarray, D: np.ndarray) -> np.ndarray:
        return -duhamel_values(weight, q, M, A, D, t)

    return kernel


def _bilinear(
    kind: str, u: SourceLike, f: SourceLike, t: float, branch: Optional[str]
) -> TrigField:
    if kind not in KINDS:
        raise InvalidArgument(f"Unknown bilinear operator {kind!r}; expected one of {KINDS}")
    if not (np.isfinite(t) and t > 0):
        raise InvalidArgument(f"t must be positive and finite, got {t}")
    us, du = as_sources(u)
    fs, df = as_sources(f)
    if du != 3:
        raise ArityError(f"{kind} needs a vector field as first argument")
    want = 3 if kind == "B1" else 1
    if df != want:
        raise ArityError(
            f"{kind} needs a {'vector' if want == 3 else 'scalar'} field as second argument"
        )
    weight = 1 if kind == "B2" else 0
    out = TrigField.zero(1 if kind == "B3" else 3)
    for a in us:
        for b in fs:
            kernel = _kernel(weight, a.power + b.power, t)
            # u_j f_i, divergence over j
            term = tensor_divergence(product(a.field, b.field, kernel=kernel, branch=branch))
            if kind == "B1":
                term = leray_project(term)
            elif kind == "B2":
                term = leray_project(term.times(E3))
            out = out + term
    return out


def bilinear(kind: str, u: SourceLike, f: SourceLike, t: float) -> TrigField:
    """Evaluate B1, B2 or B3 at time t exactly.

    B1(u, v) = -int e^{(t-s)Lap} P div(u (x) v) ds, B2(u, f) carries the extra
    weight (t - s) and the direction e3 before projection, and
    B3(u, f) = -int e^{(t-s)Lap} div(u f) ds is not projected.
    """
    return _bilinear(kind, u, f, t, None)


def bilinear_parts(
    kind: str, u: SourceLike, f: SourceLike, t: float
) -> Tuple[TrigField, TrigField]:
    """The sum-frequency and difference-frequency parts of a bilinear term."""
    return _bilinear(kind, u, f, t, "sum"), _bilinear(kind, u, f, t, "difference")


class PicardState(NamedTuple):
    g: TrigField
    theta: TrigField
    u1: TrigField
    rho1: TrigField
    rho1_parts: Tuple[TrigField, TrigField, TrigField]
    t: float


def _plane_wave_data(u0: TrigField, rho0: TrigField, buoyancy: TrigField) -> bool:
    return (
        not np.any(u0.sin)
        and not np.any(rho0.sin)
        and len(tensor_divergence(u0)) == 0
        and len(buoyancy) == 0
    )


def rho1_split(
    u0: TrigField, rho0: TrigField, t: float
) -> Tuple[TrigField, TrigField, TrigField]:
    """rho1 = B3(heat(u0), heat(rho0)) split by interacting pair.

    Needs cosine-only data with divergence-free u0. Returns the resonant
    diagonal differences k_i - k_i', the off-diagonal differences and all
    sum frequencies, in that order.
    """
    groups: List[List[tuple]] = [[], [], []]
    for i, (k, a) in enumerate(zip(u0.freqs, u0.cos)):
        for j, (m, b) in enumerate(zip(rho0.freqs, rho0.cos[:, 0])):
            c = float(a @ rho0.k[j]) * b / 2
            if c == 0:
                continue
            cross = 2 * (k[0] * m[0] + k[1] * m[1] + k[2] * m[2])
            decay = u0.k2[i] + rho0.k2[j]
            plus = tuple(x + y for x, y in zip(k, m))
            minus = tuple(x - y for x, y in zip(k, m))
            groups[2].append((plus, c, decay, cross, norm2(plus)))
            groups[0 if i == j else 1].append((minus, -c, decay, -cross, norm2(minus)))
    parts = []
    for rows in groups:
        if not rows:
            parts.append(TrigField.zero(1))
            continue
        freqs = [row[0] for row in rows]
        coef = np.array([row[1] for row in rows])
        A = np.array([row[2] for row in rows])
        D = np.array([float(row[3]) for row in rows])
        M = np.array([float(row[4]) for row in rows])
        J = duhamel_values(0, 0, M, A, D, t)
        sin = (coef * J)[:, None]
        parts.append(assemble(freqs, np.zeros_like(sin), sin, 1))
    return tuple(parts)


def first_iterates(u0: TrigField, rho0: TrigField, t: float) -> PicardState:
    if not 0 < t <= 1:
        raise InvalidArgument(f"t must lie in (0, 1], got {t}")
    if u0.dim != 3 or rho0.dim != 1:
        raise ArityError("first_iterates needs a vector u0 and a scalar rho0")
    buoyancy = leray_project(rho0.times(E3))
    g_sources = [Source(u0, 0), Source(buoyancy, 1)]
    theta_sources = [Source(rho0, 0)]
    g = heat(u0 + t * buoyancy, t)
    theta = heat(rho0, t)
    u1 = bilinear("B1", g_sources, g_sources, t) + bilinear("B2", g_sources, theta_sources, t)
    rho1 = bilinear("B3", g_sources, theta_sources, t)
    if _plane_wave_data(u0, rho0, buoyancy):
        parts = rho1_split(u0, rho0, t)
    else:
        logger.debug("Data are not divergence-free cosine waves; splitting rho1 by branch")
        total, difference = bilinear_parts("B3", g_sources, theta_sources, t)
        parts = (TrigField.zero(1), difference, total)
    return PicardState(g, theta, u1, rho1, parts, float(t))


def rho10_coefficient(p: LacunaryParams, t: float, exact: bool = False) -> float:
    """Amplitude of sin(eta . x) in the resonant part of rho1.

    The default evaluates the form
    (r^-2b / 4) sum e^{-t} |k_i|^2 (1 - e^{-t A_i}) / (A_i - 1), with
    A_i = |k_i|^2 + |k_i'|^2; ``exact=True`` gives the Duhamel integral itself,
    (r^-2b / 4) sum |k_i| |k_i'| e^{-t} (1 - e^{-t (A_i - 1)}) / (A_i - 1).
    """
    if not 0 < t <= 1:
        raise InvalidArgument(f"t must lie in (0, 1], got {t}")
    n = explicit_count(p)
    kbar, knorm = wave_scales(p, n)
    A = knorm ** 2 + kbar ** 2
    if exact:
        terms = knorm * kbar * -np.expm1(-t * (A - 1)) / (A - 1)
    else:
        terms = knorm ** 2 * -np.expm1(-t * A) / (A - 1)
    # each later wave contributes its limit 1/2
    total = float(terms.sum()) + (p.r - n) / 2
    return p.scale ** 2 / 4 * math.exp(-t) * total


def eta_besov_factor(s: float, inhomogeneous: bool = False) -> float:
    """sup_tau tau^{s/2} e^{-tau}: the B^{-s} norm of sin(eta . x)."""
    tau = s / 2
    if inhomogeneous:
        tau = min(tau, 1.0)
    return tau ** (s / 2) * math.exp(-tau)


def _check_window(p: LacunaryParams, t: float) -> None:
    p.check_proposition()
    if not (t > 0 and t <= p.T * (1 + 1e-12)):
        raise InvalidArgument(f"t={t} lies outside (0, r^-nu] = (0, {p.T:g}]")


def remainder_terms(p: LacunaryParams, t: float) -> Tuple[float, float, float]:
    r, b, d = float(p.r), p.beta, p.delta
    return (
        r ** (-3 * b),
        r ** (1 - 3 * b) * t ** (1 + d),
        r ** (2 - 4 * b) * t ** (2.5 + d),
    )


def remainder_bound_M(p: LacunaryParams, t: float) -> float:
    """r^-3b + r^{1-3b} t^{1+d} + r^{2-4b} t^{5/2+d}, unit constant."""
    _check_window(p, t)
    return sum(remainder_terms(p, t))


def z_terms(p: LacunaryParams, t: float) -> Tuple[float, float, float]:
    r, b, d = float(p.r), p.beta, p.delta
    return (
        r ** (-3 * b) * t ** (-1 - d),
        r ** (1 - 3 * b),
        r ** (2 - 4 * b) * t ** 1.5,
    )


def z_bound(p: LacunaryParams, t: float) -> float:
    """r^-3b t^{-1-d} + r^{1-3b} + r^{2-4b} t^{3/2}, unit constant."""
    _check_window(p, t)
    return sum(z_terms(p, t))


class AbsorbingCheck(NamedTuple):
    value: float
    exponents: Tuple[float, ...]

    @property
    def all_negative(self) -> bool:
        return all(e < 0 for e in self.exponents)


def absorbing_condition(p: LacunaryParams) -> AbsorbingCheck:
    """C2(T) + C1(T) C3(T) at T = r^-nu, with the exponents of r in each term.

    C1 is the remainder bound, C2 = r^-b + r^{1-2b} t^{3/2} and
    C3 = t^{1/2-d}; the fixed point closes when this is small.
    """
    T, b, nu, d = p.T, p.beta, p.nu, p.delta
    c1 = sum(remainder_terms(p, T))
    c2 = float(p.r) ** -b + float(p.r) ** (1 - 2 * b) * T ** 1.5
    c3 = T ** (0.5 - d)
    exponents = (
        -b,
        1 - 2 * b - 1.5 * nu,
        -3 * b - (0.5 - d) * nu,
        1 - 3 * b - 1.5 * nu,
        2 - 4 * b - 3 * nu,
    )
    return AbsorbingCheck(c2 + c1 * c3, exponents)


class ChainExponents(NamedTuple):
    growth: float
    corrections: Tuple[float, float, float, float, float]

    @property
    def holds(self) -> bool:
        return self.growth > 0 and all(e < 0 for e in self.corrections)


def chain_exponents(p: LacunaryParams) -> ChainExponents:
    """Exponents of r in the lower bound r^{1-2b}(1 - sum_i r^{e_i})."""
    b, nu, d = p.beta, p.nu, p.delta
    return ChainExponents(
        1 - 2 * b,
        (
            -1 + b - nu / 2,
            -1 + nu * d,
            -1 - b + nu + nu * d,
            -b,
            1 - 2 * b - 1.5 * nu,
        ),
    )


def chain_net_unit(p: LacunaryParams) -> Tuple[float, float]:
    """(correction sum, net lower bound) of the chain with unit constants."""
    ce = chain_exponents(p)
    r = float(p.r)
    growth = r ** ce.growth
    corrections = growth * sum(r ** e for e in ce.corrections)
    return corrections, growth - corrections
