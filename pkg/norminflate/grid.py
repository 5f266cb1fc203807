"""Real fields on a uniform N^3 grid, held as normalized Fourier coefficients."""
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import fft

from .errors import ArityError, InvalidArgument

AXES = (-3, -2, -1)


@lru_cache(maxsize=8)
def wavenumbers(N: int) -> np.ndarray:
    """Integer wavenumbers as floats, shape (3, N, N, N)."""
    k = fft.fftfreq(N, 1.0 / N)
    grids = np.meshgrid(k, k, k, indexing="ij")
    out = np.array(grids)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def dealias_mask(N: int) -> np.ndarray:
    """True where every |k_axis| <= N/3; the 2/3 rule zeroes the rest."""
    mask = np.all(np.abs(wavenumbers(N)) <= N / 3, axis=0)
    mask.setflags(write=False)
    return mask


class GridField(object):
    """Coefficients ``C`` with f(x_j) = sum_k C_k exp(i k . x_j), x_j = 2 pi j / N.

    ``coeffs`` has shape (dim, N, N, N); dim 1 is a scalar field and dim 3 a
    vector field.
    """

    def __init__(self, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 4 or not coeffs.shape[1] == coeffs.shape[2] == coeffs.shape[3]:
            raise InvalidArgument(f"Expected (dim, N, N, N) coefficients, got {coeffs.shape}")
        self.coeffs = coeffs

    @classmethod
    def from_values(cls, values: np.ndarray, workers: int = 1) -> "GridField":
        values = np.asarray(values, dtype=float)
        if values.ndim == 3:
            values = values[None]
        return cls(fft.fftn(values, axes=AXES, norm="forward", workers=workers))

    @classmethod
    def zeros(cls, N: int, dim: int = 1) -> "GridField":
        return cls(np.zeros((dim, N, N, N), dtype=complex))

    @property
    def N(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape

    def values(self, workers: int = 1) -> np.ndarray:
        return fft.ifftn(self.coeffs, axes=AXES, norm="forward", workers=workers).real

    def linf(self) -> float:
        values = self.values()
        if self.dim == 1:
            return float(np.abs(values).max())
        return float(np.sqrt((values ** 2).sum(axis=0)).max())

    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0].real.copy()

    def max_divergence(self) -> float:
        """Largest |k . U_k| over the spectrum of a vector field."""
        if self.dim != 3:
            raise ArityError("Divergence needs a vector field")
        k = wavenumbers(self.N)
        return float(np.abs((k * self.coeffs).sum(axis=0)).max())

    def _check(self, other: "GridField") -> None:
        if other.shape != self.shape:
            raise InvalidArgument(f"Grid shapes differ: {self.shape} vs {other.shape}")

    def __add__(self, other: "GridField") -> "GridField":
        self._check(other)
        return GridField(self.coeffs + other.coeffs)

    def __sub__(self, other: "GridField") -> "GridField":
        self._check(other)
        return GridField(self.coeffs - other.coeffs)

    def __mul__(self, factor: float) -> "GridField":
        return GridField(self.coeffs * factor)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"GridField(dim={self.dim}, N={self.N})"
