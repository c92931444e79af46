"""Snapshot matrices and truncated POD bases via thin SVD."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grassmann import PodBasis

__all__ = [
    "SnapshotMatrix",
    "PodResult",
    "compute_pod",
    "projection_error",
    "rank_for_energy",
]


@dataclass(frozen=True)
class SnapshotMatrix:
    """Dense n x n_T matrix of solution snapshots for one parameter point."""

    data: np.ndarray
    parameter: np.ndarray = field(default_factory=lambda: np.zeros(0))
    meta: str = ""

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"snapshot matrix must be 2-D and nonempty, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("snapshot matrix contains non-finite entries")
        param = np.atleast_1d(np.array(self.parameter, dtype=float)).ravel()
        data.flags.writeable = False
        param.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "parameter", param)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def n_t(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PodResult:
    """Truncated POD basis plus the full singular spectrum."""

    basis: PodBasis
    singular_values: np.ndarray
    energy_captured: float


def compute_pod(snapshots: SnapshotMatrix, rank: int) -> PodResult:
    """Rank-r POD basis of a snapshot matrix (first r left singular vectors).

    Optimal in Frobenius norm by Eckart-Young.  Requires
    1 <= rank <= min(n, n_T) and, for a proper subspace, rank < n.
    """
    d = snapshots.data
    limit = min(d.shape)
    if not 1 <= rank <= limit:
        raise ValueError(f"rank {rank} outside [1, {limit}] for shape {d.shape}")
    u, s, _ = np.linalg.svd(d, full_matrices=False)
    basis = PodBasis(u[:, :rank])
    total = float(s @ s)
    captured = float(s[:rank] @ s[:rank])
    energy = captured / total if total > 0.0 else 1.0
    s = s.copy()
    s.flags.writeable = False
    return PodResult(basis=basis, singular_values=s, energy_captured=energy)


def projection_error(snapshots: SnapshotMatrix, basis: PodBasis) -> float:
    """Frobenius norm of D - Phi Phi^T D."""
    d = snapshots.data
    if basis.n != d.shape[0]:
        raise ValueError(
            f"basis ambient dimension {basis.n} does not match snapshots {d.shape[0]}"
        )
    phi = basis.matrix
    residual = d - phi @ (phi.T @ d)
    return float(np.linalg.norm(residual))


def rank_for_energy(singular_values: np.ndarray, energy: float) -> int:
    """Smallest rank capturing at least the requested energy fraction.

    Helper only; reproduction runs always fix the rank explicitly.
    """
    if not 0.0 < energy <= 1.0:
        raise ValueError("energy must lie in (0, 1]")
    s = np.asarray(singular_values, dtype=float)
    total = float(s @ s)
    if total == 0.0:
        return 1
    cum = np.cumsum(s * s) / total
    return int(np.searchsorted(cum, energy - 1e-15) + 1)
