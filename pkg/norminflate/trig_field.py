"""Exact algebra of finite trigonometric polynomials on the 3-torus."""
import logging
import math
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ArityError, InvalidArgument, PreconditionError, ResolutionError
from .grid import GridField
from .types import Frequency, Vector

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)

# Sums that cancel to within this many ulps of their terms are exact zeros.
FLUSH_ULPS = 16

# Modes weaker than this fraction of the l1 mass are below float resolution.
PRUNE_RELATIVE = 1e-17

MAX_GRID_POINTS = 2 ** 18
SAMPLE_CHUNK = 256

ZERO: Frequency = (0, 0, 0)
E3 = np.array([0.0, 0.0, 1.0])

Kernel = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class Mode(NamedTuple):
    freq: Frequency
    cos: np.ndarray
    sin: np.ndarray


class LinfEstimate(NamedTuple):
    # maximum over the evaluation grid, a lower bound of the sup norm
    value: float
    # sum of mode amplitudes, an upper bound
    upper: float


class BesovEstimate(NamedTuple):
    value: float
    argmax_t: float
    s: float
    at_endpoint: bool


class TGridSpec(NamedTuple):
    t_min: float = 1e-8
    t_max: float = 4.0
    points: int = 400
    refine: int = 3

    def times(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.points)


def canonical(k: Iterable[int]) -> Tuple[Frequency, int]:
    """Return the stored representative of {k, -k} and the sign taken."""
    k = tuple(int(x) for x in k)
    for x in k:
        if x > 0:
            return k, 1
        if x < 0:
            return (-k[0], -k[1], -k[2]), -1
    return k, 1


def norm2(k: Frequency) -> int:
    return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]


class TrigField(object):
    """A finite sum of cosine and sine plane waves on the 3-torus.

    Each pair {k, -k} is stored once, under the representative whose leading
    nonzero entry is positive, and frequencies are kept sorted. Coefficient
    arrays have shape ``(modes, dim)``: dim 1 for scalar fields, 3 for vector
    fields and 9 for tensors, laid out row-major so that entry ``(i, j)``
    sits at ``3 * i + j``.

    Frequencies are Python integers so lacunary sums far beyond int64 stay
    exact; ``k`` and ``k2`` hold their float64 images.
    """

    def __init__(
        self,
        freqs: Sequence[Frequency],
        cos: np.ndarray,
        sin: np.ndarray,
        dim: int,
    ):
        n = len(freqs)
        self.dim = dim
        self.freqs: Tuple[Frequency, ...] = tuple(freqs)
        self.cos = np.asarray(cos, dtype=float).reshape(n, dim)
        self.sin = np.asarray(sin, dtype=float).reshape(n, dim)
        self.k = np.array(
            [[float(x) for x in k] for k in self.freqs], dtype=float
        ).reshape(n, 3)
        self.k2 = np.array([float(norm2(k)) for k in self.freqs], dtype=float)

    @classmethod
    def zero(cls, dim: int = 1) -> "TrigField":
        return cls((), np.empty((0, dim)), np.empty((0, dim)), dim)

    @classmethod
    def from_modes(
        cls, modes: Iterable[Tuple[Iterable[int], Vector, Vector]], dim: Optional[int] = None
    ) -> "TrigField":
        freqs, cos, sin = [], [], []
        for freq, c, s in modes:
            freqs.append(tuple(int(x) for x in freq))
            cos.append(np.atleast_1d(np.asarray(c, dtype=float)))
            sin.append(np.atleast_1d(np.asarray(s, dtype=float)))
        if dim is None:
            if not cos:
                raise ArityError("Cannot infer the arity of a field without modes")
            dim = cos[0].size
        for c, s in zip(cos, sin):
            if c.size != dim or s.size != dim:
                raise ArityError(f"Mixed coefficient arity in one field (expected {dim})")
        if not freqs:
            return cls.zero(dim)
        return assemble(freqs, np.array(cos), np.array(sin), dim)

    @classmethod
    def cosine(cls, k: Iterable[int], coeff: Vector = 1.0) -> "TrigField":
        c = np.atleast_1d(np.asarray(coeff, dtype=float))
        return cls.from_modes([(k, c, np.zeros_like(c))])

    @classmethod
    def sine(cls, k: Iterable[int], coeff: Vector = 1.0) -> "TrigField":
        c = np.atleast_1d(np.asarray(coeff, dtype=float))
        return cls.from_modes([(k, np.zeros_like(c), c)])

    @property
    def arity(self) -> str:
        return {1: "scalar", 3: "vector"}.get(self.dim, "tensor")

    @property
    def is_mean_zero(self) -> bool:
        return ZERO not in self.freqs

    def __len__(self) -> int:
        return len(self.freqs)

    def __iter__(self):
        for k, c, s in zip(self.freqs, self.cos, self.sin):
            yield Mode(k, c, s)

    def __repr__(self) -> str:
        return f"TrigField({self.arity}, modes={len(self)})"

    def is_zero(self) -> bool:
        return not (np.any(self.cos) or np.any(self.sin))

    def coefficient(self, k: Iterable[int]) -> Tuple[np.ndarray, np.ndarray]:
        """Cosine and sine coefficients of the mode at ``k`` as written."""
        key, sign = canonical(k)
        try:
            i = self.freqs.index(key)
        except ValueError:
            return np.zeros(self.dim), np.zeros(self.dim)
        return self.cos[i].copy(), sign * self.sin[i]

    def as_dict(self) -> Dict[Frequency, Tuple[np.ndarray, np.ndarray]]:
        return {k: (c, s) for k, c, s in self}

    def component(self, i: int) -> "TrigField":
        return _compact(self.freqs, self.cos[:, [i]], self.sin[:, [i]], 1)

    def times(self, direction: Vector) -> "TrigField":
        """Scalar field times a constant vector, e.g. ``rho * e3``."""
        if self.dim != 1:
            raise ArityError("Only scalar fields can be multiplied by a direction")
        d = np.asarray(direction, dtype=float)
        return _compact(self.freqs, self.cos * d, self.sin * d, d.size)

    def scaled(self, factor: float) -> "TrigField":
        return TrigField(self.freqs, self.cos * factor, self.sin * factor, self.dim)

    def __mul__(self, factor: float) -> "TrigField":
        return self.scaled(float(factor))

    __rmul__ = __mul__

    def __neg__(self) -> "TrigField":
        return self.scaled(-1.0)

    def __add__(self, other: "TrigField") -> "TrigField":
        if not isinstance(other, TrigField):
            return NotImplemented
        if other.dim != self.dim:
            raise ArityError(f"Cannot add {self.arity} and {other.arity} fields")
        if not len(other):
            return self
        if not len(self):
            return other
        return assemble(
            self.freqs + other.freqs,
            np.vstack([self.cos, other.cos]),
            np.vstack([self.sin, other.sin]),
            self.dim,
        )

    def __sub__(self, other: "TrigField") -> "TrigField":
        return self + (-other)

    def l1(self) -> float:
        return float(_amplitudes(self).sum())

    def max_frequency(self) -> int:
        """Largest absolute frequency component over all axes."""
        return max((max(abs(x) for x in k) for k in self.freqs), default=0)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Field values at ``points`` of shape (P, 3); returns (P, dim)."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        phase = x @ self.k.T
        return np.cos(phase) @ self.cos + np.sin(phase) @ self.sin


def assemble(
    freqs: Sequence[Iterable[int]], cos: np.ndarray, sin: np.ndarray, dim: int
) -> TrigField:
    """Canonicalize raw terms: fold -k onto k, merge repeats, drop zeros."""
    acc: Dict[Frequency, List[np.ndarray]] = {}
    for k, c, s in zip(freqs, cos, sin):
        key, sign = canonical(k)
        entry = acc.get(key)
        if entry is None:
            acc[key] = [np.array(c, dtype=float), sign * np.asarray(s, dtype=float)]
        else:
            entry[0] += c
            entry[1] += sign * s
    if ZERO in acc:
        # sin(0 . x) vanishes identically
        acc[ZERO][1] = np.zeros(dim)
    keys = sorted(acc)
    if not keys:
        return TrigField.zero(dim)
    c_out = np.array([acc[key][0] for key in keys]).reshape(len(keys), dim)
    s_out = np.array([acc[key][1] for key in keys]).reshape(len(keys), dim)
    return _compact(keys, c_out, s_out, dim)


def _compact(
    freqs: Sequence[Frequency], cos: np.ndarray, sin: np.ndarray, dim: int
) -> TrigField:
    """Drop modes whose coefficients are all exactly zero."""
    cos = np.asarray(cos, dtype=float).reshape(len(freqs), dim)
    sin = np.asarray(sin, dtype=float).reshape(len(freqs), dim)
    keep = np.any(cos != 0, axis=1) | np.any(sin != 0, axis=1)
    if keep.all():
        return TrigField(freqs, cos, sin, dim)
    index = np.flatnonzero(keep)
    return TrigField([freqs[i] for i in index], cos[index], sin[index], dim)


def _flushed_sum(terms: np.ndarray, axis: int) -> np.ndarray:
    total = terms.sum(axis=axis)
    scale = np.abs(terms).sum(axis=axis)
    total[np.abs(total) <= FLUSH_ULPS * EPS * scale] = 0.0
    return total


def _check_time(t: float, name: str = "t") -> float:
    if not np.isfinite(t) or t < 0:
        raise InvalidArgument(f"{name} must be finite and non-negative, got {t}")
    return float(t)


def _require_dim(f: TrigField, dims: Tuple[int, ...], op: str) -> None:
    if f.dim not in dims:
        raise ArityError(f"{op} is undefined for a {f.arity} field")


def heat(f: TrigField, t: float, drop: float = 0.0) -> TrigField:
    """Apply the heat semigroup e^{t Laplacian}.

    Modes whose largest coefficient falls to ``drop`` or below are pruned;
    the default keeps every frequency.
    """
    t = _check_time(t)
    decay = np.exp(-f.k2 * t)[:, None]
    out = TrigField(f.freqs, f.cos * decay, f.sin * decay, f.dim)
    if drop > 0:
        strength = np.maximum(np.abs(out.cos).max(axis=1), np.abs(out.sin).max(axis=1))
        keep = np.flatnonzero(strength > drop)
        out = TrigField(
            [out.freqs[i] for i in keep], out.cos[keep], out.sin[keep], f.dim
        )
    return out


def _project(w: np.ndarray, k: np.ndarray, k2: np.ndarray) -> np.ndarray:
    nonzero = k2 > 0
    safe = np.where(nonzero, k2, 1.0)
    alpha = np.where(nonzero, np.einsum("ni,ni->n", w, k) / safe, 0.0)
    removed = alpha[:, None] * k
    out = w - removed
    out[np.abs(out) <= FLUSH_ULPS * EPS * (np.abs(w) + np.abs(removed))] = 0.0
    return out


def leray_project(f: TrigField) -> TrigField:
    """Project a vector field onto divergence-free fields, mode by mode.

    The zero frequency passes through unchanged.
    """
    _require_dim(f, (3,), "leray_project")
    cos, sin = f.cos, f.sin
    # a second pass removes what rounding left of the gradient part
    for _ in range(2):
        cos = _project(cos, f.k, f.k2)
        sin = _project(sin, f.k, f.k2)
    return _compact(f.freqs, cos, sin, 3)


def gradient(f: TrigField) -> TrigField:
    """Gradient of a scalar (dim 3) or vector field (dim 9, entry (i, j) = d_j f_i)."""
    _require_dim(f, (1, 3), "gradient")
    n = len(f)
    # d_j [c cos(k.x) + s sin(k.x)] = s k_j cos(k.x) - c k_j sin(k.x)
    cos = np.einsum("ni,nj->nij", f.sin, f.k).reshape(n, 3 * f.dim)
    sin = -np.einsum("ni,nj->nij", f.cos, f.k).reshape(n, 3 * f.dim)
    return _compact(f.freqs, cos, sin, 3 * f.dim)


def tensor_divergence(f: TrigField) -> TrigField:
    """Contract the leading index with the derivative: out_m = d_j F_{j m}."""
    if f.dim % 3:
        raise ArityError(f"divergence is undefined for a {f.arity} field")
    n, m = len(f), f.dim // 3
    k = f.k[:, :, None]
    cos = _flushed_sum(f.sin.reshape(n, 3, m) * k, axis=1)
    sin = -_flushed_sum(f.cos.reshape(n, 3, m) * k, axis=1)
    return _compact(f.freqs, cos, sin, m)


def divergence(f: TrigField) -> TrigField:
    _require_dim(f, (3,), "divergence")
    return tensor_divergence(f)


def _object_freqs(freqs: Sequence[Frequency]) -> np.ndarray:
    out = np.empty((len(freqs), 3), dtype=object)
    for i, k in enumerate(freqs):
        for j in range(3):
            out[i, j] = int(k[j])
    return out


def product(
    a: TrigField,
    b: TrigField,
    kernel: Optional[Kernel] = None,
    branch: Optional[str] = None,
) -> TrigField:
    """Expand the pointwise outer product ``a (x) b`` into plane waves.

    Every pair of modes (k, m) yields terms at k + m (the "sum" branch) and
    k - m (the "difference" branch). When ``kernel`` is given, each term is
    weighted by ``kernel(M, A, D)`` before terms are merged, with M = |n|^2 of
    the output frequency, A = |k|^2 + |m|^2 and D = M - A = +-2 k.m computed
    exactly.
    """
    if branch not in (None, "sum", "difference"):
        raise InvalidArgument(f"Unknown branch: {branch}")
    na, nb, dim = len(a), len(b), a.dim * b.dim
    if not na or not nb:
        return TrigField.zero(dim)

    def outer(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("pi,qj->pqij", x, y).reshape(na * nb, dim)

    cc, ss = outer(a.cos, b.cos), outer(a.sin, b.sin)
    cs, sc = outer(a.cos, b.sin), outer(a.sin, b.cos)

    ka = _object_freqs(a.freqs).reshape(na, 1, 3)
    kb = _object_freqs(b.freqs).reshape(1, nb, 3)
    plus = (ka + kb).reshape(na * nb, 3)
    minus = (ka - kb).reshape(na * nb, 3)

    terms = []
    if branch in (None, "sum"):
        terms.append((plus, (cc - ss) / 2, (cs + sc) / 2, 1))
    if branch in (None, "difference"):
        terms.append((minus, (cc + ss) / 2, (sc - cs) / 2, -1))

    if kernel is not None:
        decay = (a.k2[:, None] + b.k2[None, :]).reshape(na * nb)
        cross = (2 * (ka * kb).sum(axis=2)).reshape(na * nb)
        weighted = []
        for freqs, c, s, sign in terms:
            M = (freqs * freqs).sum(axis=1).astype(float)
            D = (sign * cross).astype(float)
            w = np.asarray(kernel(M, decay, D), dtype=float)[:, None]
            weighted.append((freqs, c * w, s * w, sign))
        terms = weighted

    freqs = [tuple(row) for part in terms for row in part[0]]
    cos = np.vstack([part[1] for part in terms])
    sin = np.vstack([part[2] for part in terms])
    return assemble(freqs, cos, sin, dim)


def advect(u: TrigField, f: TrigField) -> TrigField:
    """The transport term u . grad f, expanded exactly."""
    _require_dim(u, (3,), "advect")
    _require_dim(f, (1, 3), "advect")
    grad = gradient(f)
    prod = product(u, grad)
    n, m = len(prod), f.dim
    # contract u_j with d_j f_i
    cos = _flushed_sum(np.diagonal(prod.cos.reshape(n, 3, m, 3), axis1=1, axis2=3), -1)
    sin = _flushed_sum(np.diagonal(prod.sin.reshape(n, 3, m, 3), axis1=1, axis2=3), -1)
    return _compact(prod.freqs, cos, sin, m)


def _amplitudes(f: TrigField) -> np.ndarray:
    if f.dim == 1:
        return np.hypot(f.cos[:, 0], f.sin[:, 0])
    return np.linalg.norm(f.cos, axis=1) + np.linalg.norm(f.sin, axis=1)


def grid_sizes(freqs: Sequence[Frequency], max_points: int = MAX_GRID_POINTS) -> List[int]:
    """Points per axis for sampling a field with the given frequencies."""
    sizes = []
    for axis in range(3):
        top = max((abs(k[axis]) for k in freqs), default=0)
        # a multiple of 4 top puts the peaks of the top mode on the grid
        sizes.append(1 if top == 0 else 4 * top * -(-16 // (4 * top)))
    while math.prod(sizes) > max_points:
        a = sizes.index(max(sizes))
        others = math.prod(sizes) // sizes[a]
        sizes[a] = max(1, min(sizes[a] - 1, max_points // others))
        # odd sizes keep power-of-two frequencies from aliasing to zero
        if sizes[a] > 1 and sizes[a] % 2 == 0:
            sizes[a] -= 1
        logger.debug("Subsampling axis %d to %d points", a, sizes[a])
    return sizes


def _axis_phases(values: Sequence[int], n: int) -> np.ndarray:
    # exact integer phase (k * j mod n) keeps huge frequencies accurate
    kmod = np.array([v % n for v in values], dtype=np.int64)
    j = np.arange(n, dtype=np.int64)
    return np.exp(2j * np.pi * ((kmod[:, None] * j[None, :]) % n) / n)


def sample(f: TrigField, sizes: Sequence[int], chunk: int = SAMPLE_CHUNK) -> np.ndarray:
    """Values on the grid x_j = 2 pi j / n per axis; shape (dim, n1, n2, n3).

    Modes are summed ``chunk`` at a time so memory stays bounded by
    ``chunk * max(sizes)`` phases however many modes the field carries.
    """
    values = np.zeros((f.dim * sizes[0] * sizes[1], sizes[2]))
    for lo in range(0, len(f), chunk):
        freqs = f.freqs[lo : lo + chunk]
        w = f.cos[lo : lo + chunk] - 1j * f.sin[lo : lo + chunk]
        e = [_axis_phases([k[a] for k in freqs], sizes[a]) for a in range(3)]
        lead = (
            w[:, :, None, None] * e[0][:, None, :, None] * e[1][:, None, None, :]
        ).reshape(len(freqs), -1)
        values += (lead.T @ e[2]).real
    return values.reshape(f.dim, sizes[0], sizes[1], sizes[2])


def linf_norm(f: TrigField, max_points: int = MAX_GRID_POINTS) -> LinfEstimate:
    """Estimate sup |f| from below on a sampling grid, and from above by l1.

    Vector and tensor fields use the Euclidean (Frobenius) magnitude.
    """
    if not len(f):
        return LinfEstimate(0.0, 0.0)
    amp = _amplitudes(f)
    upper = float(amp.sum())
    if upper == 0:
        return LinfEstimate(0.0, 0.0)
    keep = np.flatnonzero(amp > PRUNE_RELATIVE * upper)
    live = TrigField([f.freqs[i] for i in keep], f.cos[keep], f.sin[keep], f.dim)
    values = sample(live, grid_sizes(live.freqs, max_points))
    if f.dim == 1:
        value = np.abs(values).max()
    else:
        value = np.sqrt((values ** 2).sum(axis=0)).max()
    return LinfEstimate(float(value), upper)


def maximize_profile(
    profile: Callable[[float], float], times: np.ndarray, refine: int = 3
) -> Tuple[float, float, bool]:
    """Maximize a function of heat time on a log grid with local zooms."""
    values = np.array([profile(t) for t in times])
    i = int(np.argmax(values))
    at_endpoint = i in (0, len(times) - 1)
    best, best_t = float(values[i]), float(times[i])
    grid = times
    for _ in range(refine):
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        if not hi > lo:
            break
        grid = np.geomspace(lo, hi, 21)
        values = np.array([profile(t) for t in grid])
        i = int(np.argmax(values))
        if values[i] > best:
            best, best_t = float(values[i]), float(grid[i])
    return best, best_t, at_endpoint


def besov_norm(
    f: TrigField,
    s: float,
    tgrid: Optional[TGridSpec] = None,
    inhomogeneous: bool = False,
) -> BesovEstimate:
    """sup_t t^(s/2) ||e^{t Laplacian} f||_inf over a log-spaced heat-time grid.

    The homogeneous norm needs a mean-zero field; the inhomogeneous variant
    restricts the heat time to t < 1.
    """
    if not s > 0:
        raise InvalidArgument(f"Besov order s must be positive, got {s}")
    tgrid = TGridSpec() if tgrid is None else tgrid
    if not inhomogeneous and not f.is_mean_zero:
        raise PreconditionError(
            "Homogeneous Besov norm needs a mean-zero field (zero-frequency mode present)"
        )
    if not len(f):
        return BesovEstimate(0.0, float(tgrid.t_min), float(s), False)
    times = tgrid.times()
    if inhomogeneous:
        times = np.geomspace(tgrid.t_min, min(tgrid.t_max, 1.0), tgrid.points)

    def profile(t: float) -> float:
        return t ** (s / 2) * linf_norm(heat(f, t)).value

    value, argmax_t, at_endpoint = maximize_profile(profile, times, tgrid.refine)
    if at_endpoint:
        logger.debug("Besov sup attained at the grid end (t=%g)", argmax_t)
    return BesovEstimate(value, argmax_t, float(s), at_endpoint)


def to_grid(f: TrigField, N: int) -> GridField:
    """Embed a field into normalized spectral coefficients on an N^3 grid."""
    limit = N // 3
    coeffs = np.zeros((f.dim, N, N, N), dtype=complex)
    for k, c, s in f:
        if max(abs(x) for x in k) > limit:
            raise ResolutionError(
                f"Mode {k} does not fit a {N}^3 grid (needs |k_axis| <= {limit})"
            )
        if k == ZERO:
            coeffs[:, 0, 0, 0] += c
            continue
        pos = (slice(None),) + tuple(x % N for x in k)
        neg = (slice(None),) + tuple(-x % N for x in k)
        coeffs[pos] += (c - 1j * s) / 2
        coeffs[neg] += (c + 1j * s) / 2
    return GridField(coeffs)
