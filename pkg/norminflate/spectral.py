"""Dealiased pseudo-spectral Boussinesq solver on the 3-torus.

The Laplacian is integrated exactly by Lawson's integrating factor and the
projected nonlinear and buoyancy terms by classical RK4. Products are formed
in physical space in divergence form and truncated by the 2/3 rule.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import fft

from .errors import ArityError, InvalidArgument, SimulationError
from .grid import AXES, GridField, dealias_mask, wavenumbers
from .lacunary import LacunaryParams
from .picard import PicardState, remainder_bound_M
from .trig_field import TrigField, linf_norm, to_grid

logger = logging.getLogger(__name__)

# dt <= CFL_SAFETY / (N * max(1, ||u0||_inf))
CFL_SAFETY = 0.5
# a run aborts once dt * N * max(1, ||u||_inf) exceeds this
CFL_ABORT = 1.0


def stability_bound(N: int, u_linf: float) -> float:
    return CFL_SAFETY / (N * max(1.0, u_linf))


@dataclass(frozen=True)
class SimConfig:
    N: int = 32
    dt: float = 1e-3
    T: float = 0.1
    snapshot_times: Tuple[float, ...] = field(default_factory=tuple)
    scheme: str = "ifrk4"
    workers: int = 1

    def __post_init__(self):
        if self.N < 4 or self.N & (self.N - 1):
            raise InvalidArgument(f"N must be a power of two >= 4, got {self.N}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidArgument(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.T) and 0 < self.T <= 1):
            raise InvalidArgument(f"T must lie in (0, 1], got {self.T}")
        if self.scheme != "ifrk4":
            raise InvalidArgument(f"Unknown scheme {self.scheme!r}; only 'ifrk4' is available")
        times = tuple(float(t) for t in self.snapshot_times)
        if list(times) != sorted(times) or any(t <= 0 or t > self.T for t in times):
            raise InvalidArgument(
                f"snapshot_times must be sorted within (0, T={self.T}], got {times}"
            )
        object.__setattr__(self, "snapshot_times", times)

    @property
    def times(self) -> Tuple[float, ...]:
        return self.snapshot_times or (self.T,)


class Snapshot(NamedTuple):
    t: float
    u: GridField
    rho: GridField
    max_divergence: float


class ResidualReport(NamedTuple):
    t: float
    y_linf: float
    z_linf: float
    picard_linf: float
    bound_M: float


class SpectralSolver(object):
    def __init__(self, N: int, workers: int = 1):
        self.N = N
        self.workers = workers
        self.k = wavenumbers(N)
        self.k2 = (self.k ** 2).sum(axis=0)
        self.k_over_k2 = self.k / np.where(self.k2 == 0, 1.0, self.k2)
        self.mask = dealias_mask(N)

    def project(self, F: np.ndarray) -> np.ndarray:
        return F - self.k * (self.k_over_k2 * F).sum(axis=0)

    def _to_physical(self, F: np.ndarray) -> np.ndarray:
        return fft.ifftn(F, axes=AXES, norm="forward", workers=self.workers).real

    def _to_spectral(self, f: np.ndarray) -> np.ndarray:
        return fft.fftn(f, axes=AXES, norm="forward", workers=self.workers)

    def rhs(self, U: np.ndarray, R: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        """-P div(u (x) u) + P(rho e3) and -div(u rho); also returns max |u|."""
        u = self._to_physical(U)
        rho = self._to_physical(R)
        umax = float(np.sqrt((u ** 2).sum(axis=0)).max())
        uu = np.empty((3, 3) + u.shape[1:], dtype=complex)
        for i in range(3):
            for j in range(i, 3):
                uu[i, j] = self._to_spectral(u[i] * u[j])
                uu[j, i] = uu[i, j]
        ur = self._to_spectral(u * rho)
        uu *= self.mask
        ur *= self.mask
        dU = -1j * np.einsum("jxyz,jixyz->ixyz", self.k, uu)
        dU[2] += R
        dR = -1j * (self.k * ur).sum(axis=0)
        return self.project(dU), dR, umax

    def step(
        self, U: np.ndarray, R: np.ndarray, h: float
    ) -> Tuple[np.ndarray, np.ndarray, float]:
        """One Lawson IF-RK4 step of size h."""
        half = np.exp(-self.k2 * h / 2)
        full = half * half

        k1u, k1r, umax = self.rhs(U, R)
        k2u, k2r, _ = self.rhs(half * (U + h / 2 * k1u), half * (R + h / 2 * k1r))
        k3u, k3r, _ = self.rhs(half * U + h / 2 * k2u, half * R + h / 2 * k2r)
        k4u, k4r, _ = self.rhs(full * U + h * half * k3u, full * R + h * half * k3r)

        U = full * U + h / 6 * (full * k1u + 2 * half * (k2u + k3u) + k4u)
        R = full * R + h / 6 * (full * k1r + 2 * half * (k2r + k3r) + k4r)
        return U, R, umax


def simulate(u0: TrigField, rho0: TrigField, cfg: SimConfig) -> List[Snapshot]:
    if u0.dim != 3 or rho0.dim != 1:
        raise ArityError("simulate needs a vector u0 and a scalar rho0")
    N = cfg.N
    bound = stability_bound(N, linf_norm(u0).value)
    if cfg.dt > bound:
        raise SimulationError(
            f"dt={cfg.dt} exceeds the CFL bound {bound:.3g} = {CFL_SAFETY}/(N max(1, |u0|))"
        )
    solver = SpectralSolver(N, workers=cfg.workers)
    U = solver.project(to_grid(u0, N).coeffs)
    R = to_grid(rho0, N).coeffs[0]

    t = 0.0
    snapshots = []
    for target in cfg.times:
        span = target - t
        steps = max(1, math.ceil(span / cfg.dt - 1e-9)) if span > 0 else 0
        worst = 0.0
        for n in range(steps):
            h = span / steps
            U, R, umax = solver.step(U, R, h)
            now = t + (n + 1) * h
            if not (np.all(np.isfinite(U)) and np.all(np.isfinite(R))):
                raise SimulationError(f"Non-finite values at t={now:.6g}")
            courant = h * N * max(1.0, umax)
            if courant > CFL_ABORT:
                raise SimulationError(
                    f"CFL violated at t={now:.6g}: dt*N*max(1, |u|) = {courant:.3g} > {CFL_ABORT}"
                )
            worst = max(worst, float(np.abs((solver.k * U).sum(axis=0)).max()))
        t = target
        logger.debug("Snapshot t=%g after %d steps, max divergence %.3g", t, steps, worst)
        snapshots.append(Snapshot(t, GridField(U.copy()), GridField(R[None].copy()), worst))
    return snapshots


def residual_decompose(
    snapshot: Snapshot, picard: PicardState, params: Optional[LacunaryParams] = None
) -> ResidualReport:
    """y = u - g - u1 and z = rho - theta - rho1 on the snapshot's grid.

    ``bound_M`` is the remainder bound at the same time when ``params`` are
    given and admissible, NaN otherwise.
    """
    if not math.isclose(snapshot.t, picard.t, rel_tol=1e-12, abs_tol=1e-15):
        raise InvalidArgument(
            f"Snapshot time {snapshot.t} does not match the Picard time {picard.t}"
        )
    N = snapshot.u.N
    y = snapshot.u - to_grid(picard.g, N) - to_grid(picard.u1, N)
    z = snapshot.rho - to_grid(picard.theta, N) - to_grid(picard.rho1, N)
    bound = math.nan
    if params is not None and params.satisfies_proposition and picard.t <= params.T:
        bound = remainder_bound_M(params, picard.t)
    return ResidualReport(
        snapshot.t, y.linf(), z.linf(), linf_norm(picard.rho1_parts[0]).value, bound
    )


class ResolutionVerdict(NamedTuple):
    ok: bool
    minimal_N: int
    max_frequency: int


def validate_resolution(p: LacunaryParams, N: int) -> ResolutionVerdict:
    """Room for the first interaction frequencies: 2^(r-1)K + 2 <= N/3."""
    need = 2 ** (p.r - 1) * p.K + 2
    minimal = 4
    while 3 * need > minimal:
        minimal *= 2
    return ResolutionVerdict(3 * need <= N, minimal, need)
