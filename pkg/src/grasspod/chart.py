"""Injective Euclidean chart on G(r, n) around a reference basis.

A basis Psi is embedded as y = F vec(Log_ref(Psi)) where F is a fixed
(nr - r) x nr matrix with orthonormal rows annihilating the block matrix
Phi_tilde = diag(phi_1^T, ..., phi_r^T) built from the reference columns.
vec stacks columns (column-major) everywhere; F's row space depends on that
convention, so it is global.  The chart is injective on the open ball
||y||_2 < pi/2; predicted vectors are wrapped back through

    Z = Mat_{n,r}(F^T y),   Psi = Exp_ref(Z).

Two interchangeable F representations are provided.  The dense one takes the
zero-singular-value right singular vectors of a full SVD of Phi_tilde.  For
large n the same null space is assembled implicitly from one Householder
reflection per reference column, block by block, in O(nr) storage; both span
the identical row space and satisfy the same invariants.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grassmann import (
    CUT_LOCUS_MARGIN,
    HorizontalLift,
    PodBasis,
    exp_map,
    geodesic_distance,
    log_map,
    sign_normalize,
)

__all__ = [
    "RADIUS",
    "ChartError",
    "OutOfChartError",
    "BallViolationError",
    "ChartCoverageError",
    "ChartBoundaryWarning",
    "DenseF",
    "HouseholderF",
    "Chart",
    "EmbeddedSample",
    "build_chart",
    "embed",
    "wrap_back",
    "select_reference",
    "vec",
    "unvec",
]

RADIUS = np.pi / 2
# Largest n*r for which the dense SVD construction is used by default.
DENSE_F_LIMIT = 4096


class ChartError(ValueError):
    """Invalid input to a chart operation."""


class OutOfChartError(ChartError):
    """Embedded vector fell outside the injectivity ball."""


class BallViolationError(ChartError):
    """Wrap-back requested for a vector beyond the closed ball."""


class ChartCoverageError(ChartError):
    """No candidate reference keeps every training basis inside the ball."""


class ChartBoundaryWarning(UserWarning):
    pass


def vec(z: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return z.reshape(-1, order="F")


def unvec(v: np.ndarray, n: int, r: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return v.reshape((n, r), order="F")


def _phi_tilde(phi: np.ndarray) -> np.ndarray:
    """r x nr block matrix diag(phi_1^T, ..., phi_r^T)."""
    n, r = phi.shape
    tilde = np.zeros((r, n * r))
    for i in range(r):
        tilde[i, i * n : (i + 1) * n] = phi[:, i]
    return tilde


class DenseF:
    """Explicit F matrix from the full SVD of Phi_tilde.

    Rows are the right singular vectors for the zero singular values, taken
    in ascending singular-value order and sign-normalized.
    """

    kind = "dense"

    def __init__(self, matrix: np.ndarray, n: int, r: int):
        self.matrix = matrix
        self.n = n
        self.r = r

    @classmethod
    def from_reference(cls, phi: np.ndarray) -> "DenseF":
        n, r = phi.shape
        tilde = _phi_tilde(phi)
        vh = np.linalg.svd(tilde, full_matrices=True)[2]
        rows = vh[r:][::-1]
        rows = sign_normalize(rows.T).T
        rows.flags.writeable = False
        return cls(rows, n, r)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return self.matrix.T @ y

    def to_dense(self) -> np.ndarray:
        return self.matrix


class HouseholderF:
    """Implicit block representation of F for large ambient dimension.

    For reference column phi_i, the Householder reflection H_i with unit
    vector v_i = normalize(phi_i + sign(phi_i[0]) e_1) maps phi_i to
    -sign(phi_i[0]) e_1; rows 2..n of H_i are an orthonormal basis of
    phi_i^perp.  F is the block-diagonal stack of those rows, applied in
    O(nr) without materializing the (nr - r) x nr matrix.
    """

    kind = "householder"

    def __init__(self, vectors: np.ndarray):
        v = np.array(vectors, dtype=float)
        norms = np.linalg.norm(v, axis=0)
        if np.any(norms == 0.0):
            raise ChartError("degenerate Householder vector")
        v /= norms
        v.flags.writeable = False
        self.vectors = v
        self.n, self.r = v.shape

    @classmethod
    def from_reference(cls, phi: np.ndarray) -> "HouseholderF":
        v = phi.copy()
        v[0] += np.where(phi[0] >= 0.0, 1.0, -1.0)
        return cls(v)

    @property
    def shape(self) -> tuple[int, int]:
        return ((self.n - 1) * self.r, self.n * self.r)

    def _reflect(self, z: np.ndarray) -> np.ndarray:
        v = self.vectors
        return z - v * (2.0 * np.einsum("ij,ij->j", v, z))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        z = unvec(np.asarray(x, dtype=float), self.n, self.r)
        return vec(np.ascontiguousarray(self._reflect(z)[1:, :]))

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        w = np.zeros((self.n, self.r))
        w[1:, :] = unvec(np.asarray(y, dtype=float), self.n - 1, self.r)
        return vec(self._reflect(w))

    def to_dense(self) -> np.ndarray:
        f = np.zeros(self.shape)
        eye = np.eye(self.n)
        for i in range(self.r):
            v = self.vectors[:, i]
            block = (eye - 2.0 * np.outer(v, v))[1:, :]
            f[i * (self.n - 1) : (i + 1) * (self.n - 1), i * self.n : (i + 1) * self.n] = block
        return f


@dataclass(frozen=True)
class Chart:
    """Reference basis plus its Euclidean embedding operator."""

    reference: PodBasis
    f: DenseF | HouseholderF
    radius: float = RADIUS

    @property
    def n(self) -> int:
        return self.reference.n

    @property
    def r(self) -> int:
        return self.reference.r

    @property
    def dim(self) -> int:
        """Embedding dimension nr - r."""
        return self.n * self.r - self.r

    def validate(self) -> tuple[float, float]:
        """Numerical residuals of the two chart invariants
        (max |F F^T - I|, max |Phi_tilde F^T|).  Dense F only for the first
        when the matrix is materialized anyway."""
        f = self.f.to_dense()
        orth = float(np.max(np.abs(f @ f.T - np.eye(f.shape[0]))))
        annih = float(np.max(np.abs(_phi_tilde(self.reference.matrix) @ f.T)))
        return orth, annih


@dataclass(frozen=True)
class EmbeddedSample:
    """Parameter point paired with its chart coordinates."""

    theta: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(np.array(self.theta, dtype=float)).ravel()
        y = np.array(self.y, dtype=float).ravel()
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(y))):
            raise ChartError("embedded sample contains non-finite entries")
        if np.linalg.norm(y) >= RADIUS:
            raise OutOfChartError(
                f"||y|| = {np.linalg.norm(y):.6f} >= pi/2 at theta {theta}"
            )
        theta.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "y", y)


def build_chart(reference: PodBasis, method: str = "auto", dense_limit: int = DENSE_F_LIMIT) -> Chart:
    """Construct the chart at a reference basis.

    method "svd" builds the dense F from the full SVD of Phi_tilde (the
    default for n*r <= dense_limit); "householder" builds the implicit block
    form used for large problems.  Both are deterministic for a given
    reference.
    """
    if method == "auto":
        method = "svd" if reference.n * reference.r <= dense_limit else "householder"
    if method == "svd":
        f = DenseF.from_reference(reference.matrix)
        annih = np.max(np.abs(_phi_tilde(reference.matrix) @ f.matrix.T))
        if annih > 1e-10:
            raise ChartError(f"F does not annihilate Phi_tilde: residual {annih:.3e}")
    elif method == "householder":
        f = HouseholderF.from_reference(reference.matrix)
    else:
        raise ChartError(f"unknown chart construction method {method!r}")
    return Chart(reference=reference, f=f)


def embed(chart: Chart, basis: PodBasis) -> np.ndarray:
    """Chart coordinates y = F vec(Log_ref(basis)).

    Raises CutLocusError (propagated) outside the logarithm's domain and
    OutOfChartError when ||y|| >= pi/2.
    """
    lift = log_map(chart.reference, basis)
    y = chart.f.matvec(vec(lift.matrix))
    norm = float(np.linalg.norm(y))
    if norm >= chart.radius:
        raise OutOfChartError(f"||y|| = {norm:.6f} >= pi/2; basis outside the chart")
    return y


def wrap_back(chart: Chart, y: np.ndarray) -> PodBasis:
    """Map chart coordinates back onto the manifold via Exp_ref(Mat(F^T y))."""
    y = np.asarray(y, dtype=float).ravel()
    if y.shape != (chart.dim,):
        raise ChartError(f"expected y of length {chart.dim}, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ChartError("y contains non-finite entries")
    norm = float(np.linalg.norm(y))
    if norm > chart.radius + 1e-9:
        raise BallViolationError(f"||y|| = {norm:.6f} exceeds pi/2")
    if norm >= chart.radius:
        warnings.warn(
            "wrap-back on the ball boundary; injectivity not guaranteed",
            ChartBoundaryWarning,
            stacklevel=2,
        )
    z = unvec(chart.f.rmatvec(y), chart.n, chart.r)
    return exp_map(chart.reference, HorizontalLift(z, chart.reference))


def select_reference(
    bases: list[PodBasis],
    thetas: np.ndarray | None = None,
    policy: str | int = "minimax",
) -> int:
    """Pick the reference basis index among training bases.

    "minimax" (default) minimizes the maximum geodesic distance to the other
    bases, brute force over candidates; "first" takes index 0; an integer is
    used verbatim.  Fails with a diagnostic when the chosen candidate leaves
    some training basis at distance >= pi/2 (for minimax this means no
    candidate covers the training set).
    """
    count = len(bases)
    if count == 0:
        raise ChartError("no training bases")
    dist = np.zeros((count, count))
    for i in range(count):
        for j in range(i + 1, count):
            dist[i, j] = dist[j, i] = geodesic_distance(bases[i], bases[j])
    if policy == "minimax":
        idx = int(np.argmin(dist.max(axis=1)))
    elif policy == "first":
        idx = 0
    elif isinstance(policy, int) and not isinstance(policy, bool):
        if not 0 <= policy < count:
            raise ChartError(f"reference index {policy} outside [0, {count})")
        idx = policy
    else:
        raise ChartError(f"unknown reference policy {policy!r}")
    limit = RADIUS - CUT_LOCUS_MARGIN
    bad = np.nonzero(dist[idx] >= limit)[0]
    if bad.size:
        labels = [
            str(np.asarray(thetas[j]).tolist()) if thetas is not None else f"index {j}"
            for j in bad
        ]
        prefix = (
            "no reference candidate covers the training set"
            if policy == "minimax"
            else f"reference {idx} does not cover the training set"
        )
        raise ChartCoverageError(
            f"{prefix}; offending parameter points: {', '.join(labels)}"
        )
    return idx
