"""2D wave equation with double-slit boundary forcing, reduced resolution.

u_tt = laplace(u) on the unit square, at rest initially.  The two slit
segments on x = 0 carry the Dirichlet signal mu1 sin(mu2 pi t); all other
boundary points are homogeneous Neumann (mirror ghost cells), so waves
reflect from the walls.  Explicit leapfrog on the 5-point Laplacian; the
time step must satisfy dt <= h / sqrt(2).

Snapshot columns are the grid fields flattened in row-major order with x as
the leading index, at t = k dt for k = 0 .. n_snapshots - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..pod import SnapshotMatrix
from .common import CflViolationError, SolverInstabilityError

__all__ = ["WaveSpec", "run_wave"]

SLIT_1 = (0.25, 0.35)
SLIT_2 = (0.65, 0.75)


@dataclass(frozen=True)
class WaveSpec:
    mu1: float
    mu2: float
    n_side: int = 64
    dt: float = 0.002
    n_snapshots: int = 500

    def __post_init__(self):
        if self.n_side < 8 or self.n_snapshots < 1 or self.dt <= 0.0:
            raise ValueError("invalid grid specification")
        h = 1.0 / (self.n_side - 1)
        if self.dt > h / np.sqrt(2.0):
            raise CflViolationError(
                f"dt = {self.dt} violates the stability limit h/sqrt(2) = {h / np.sqrt(2):.6f}"
            )

    @property
    def h(self) -> float:
        return 1.0 / (self.n_side - 1)


def _slit_rows(spec: WaveSpec) -> np.ndarray:
    y = np.arange(spec.n_side) * spec.h
    mask = ((y >= SLIT_1[0]) & (y <= SLIT_1[1])) | ((y >= SLIT_2[0]) & (y <= SLIT_2[1]))
    return np.nonzero(mask)[0]


def _laplacian(u: np.ndarray, h: float) -> np.ndarray:
    p = np.pad(u, 1, mode="reflect")
    return (
        p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * u
    ) / (h * h)


def run_wave(spec: WaveSpec) -> SnapshotMatrix:
    ns = spec.n_side
    h = spec.h
    dt = spec.dt
    slit = _slit_rows(spec)

    def signal(t: float) -> float:
        return spec.mu1 * np.sin(spec.mu2 * np.pi * t)

    # u[i, j] = u(x_i, y_j); the slits live on the x = 0 edge (i = 0).
    u_prev = np.zeros((ns, ns))
    snapshots = np.empty((ns * ns, spec.n_snapshots))
    snapshots[:, 0] = 0.0

    # First step from rest: u1 = u0 + dt*v0 + dt^2/2 * lap(u0) = 0.
    u = np.zeros((ns, ns))
    u[0, slit] = signal(dt)
    if spec.n_snapshots > 1:
        snapshots[:, 1] = u.ravel()

    coeff = dt * dt
    for k in range(2, spec.n_snapshots):
        u_next = 2.0 * u - u_prev + coeff * _laplacian(u, h)
        u_next[0, slit] = signal(k * dt)
        u_prev, u = u, u_next
        if k % 100 == 0 and not np.all(np.isfinite(u)):
            raise SolverInstabilityError(f"wave run diverged at step {k}")
        snapshots[:, k] = u.ravel()
    if not np.all(np.isfinite(snapshots)):
        raise SolverInstabilityError("wave run produced non-finite snapshots")
    return SnapshotMatrix(
        snapshots, parameter=np.array([spec.mu1, spec.mu2]), meta="wave"
    )
