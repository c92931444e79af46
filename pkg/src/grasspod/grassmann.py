"""Riemannian geometry of the Grassmann manifold G(r, n).

Subspaces are handled through orthonormal n x r representatives (Stiefel
matrices).  The exponential map follows the SVD closed form

    Exp_Phi(Z) = span(Phi V cos(S) + U sin(S)),   Z = U S V^T (thin SVD),

and the logarithm is its standard inverse: with M = (I - Phi Phi^T) Psi
(Phi^T Psi)^{-1} and M = U S V^T, the lift is Z = U arctan(S) V^T.  All
outputs are re-orthonormalized and sign-normalized so that equal subspaces
yield identical matrices on a given platform.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "GrassmannError",
    "CutLocusError",
    "PodBasis",
    "HorizontalLift",
    "sign_normalize",
    "tangent_norm",
    "exp_map",
    "log_map",
    "principal_angles",
    "geodesic_distance",
]

ORTHO_TOL = 1e-10
# Largest principal angle must stay this far below pi/2 for the logarithm.
CUT_LOCUS_MARGIN = 1e-8


class GrassmannError(ValueError):
    """Invalid input to a Grassmann geometry operation."""


class CutLocusError(GrassmannError):
    """Logarithm requested at or beyond the cut locus of the base point."""


def sign_normalize(matrix: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry of each column is
    non-negative (ties broken by lowest row index).  Returns a copy."""
    out = np.array(matrix, dtype=float)
    lead = np.argmax(np.abs(out), axis=0)
    flips = out[lead, np.arange(out.shape[1])] < 0.0
    out[:, flips] *= -1.0
    return out


class PodBasis:
    """Orthonormal n x r representative of a point on G(r, n).

    Columns are sign-normalized on construction, which makes representatives
    deterministic per platform.  The wrapped array is read-only.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2:
            raise GrassmannError(f"basis must be 2-D, got shape {m.shape}")
        n, r = m.shape
        if not 1 <= r < n:
            raise GrassmannError(f"need 1 <= r < n, got n={n}, r={r}")
        if not np.all(np.isfinite(m)):
            raise GrassmannError("basis contains non-finite entries")
        gram_err = float(np.max(np.abs(m.T @ m - np.eye(r))))
        if gram_err > ORTHO_TOL:
            raise GrassmannError(
                f"columns not orthonormal: max |Phi^T Phi - I| = {gram_err:.3e}"
            )
        m = sign_normalize(m)
        m.flags.writeable = False
        self.matrix = m

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def r(self) -> int:
        return self.matrix.shape[1]

    def __repr__(self) -> str:
        return f"PodBasis(n={self.n}, r={self.r})"


class HorizontalLift:
    """Matrix representative Z of a tangent vector at ``base``.

    Only the diagonal of Z^T Phi is required to vanish; that is the condition
    the Euclidean chart enforces.  Lifts produced by :func:`log_map` satisfy
    the stronger Z^T Phi = 0.
    """

    __slots__ = ("matrix", "base")

    def __init__(self, matrix: np.ndarray, base: PodBasis):
        z = np.array(matrix, dtype=float)
        if z.shape != base.matrix.shape:
            raise GrassmannError(
                f"lift shape {z.shape} does not match base shape {base.matrix.shape}"
            )
        if not np.all(np.isfinite(z)):
            raise GrassmannError("lift contains non-finite entries")
        diag = np.einsum("ij,ij->j", z, base.matrix)
        worst = float(np.max(np.abs(diag)))
        if worst > ORTHO_TOL:
            raise GrassmannError(
                f"lift not horizontal: max |diag(Z^T Phi)| = {worst:.3e}"
            )
        z.flags.writeable = False
        self.matrix = z
        self.base = base

    @property
    def norm(self) -> float:
        """Frobenius norm sqrt(trace(Z^T Z)), in radians."""
        return float(np.linalg.norm(self.matrix))


def tangent_norm(lift: HorizontalLift) -> float:
    """Norm of a tangent vector under the trace inner product."""
    return lift.norm


def _check_same_point(a: PodBasis, b: PodBasis) -> None:
    if (a.n, a.r) != (b.n, b.r):
        raise GrassmannError(
            f"dimension mismatch: ({a.n}, {a.r}) vs ({b.n}, {b.r})"
        )


def exp_map(base: PodBasis, lift: HorizontalLift) -> PodBasis:
    """Exponential map: follow the geodesic leaving ``base`` with velocity
    ``lift`` for unit time.  The result is re-orthonormalized (thin QR) and
    sign-normalized."""
    if lift.base is not base and not np.array_equal(lift.base.matrix, base.matrix):
        raise GrassmannError("lift is not attached to the given base point")
    u, s, vt = np.linalg.svd(lift.matrix, full_matrices=False)
    b = base.matrix @ (vt.T * np.cos(s)) + u * np.sin(s)
    q = np.linalg.qr(b)[0]
    return PodBasis(q)


def log_map(base: PodBasis, target: PodBasis) -> HorizontalLift:
    """Logarithm map: the unique horizontal lift Z with
    ``exp_map(base, Z)`` spanning the same subspace as ``target``.

    Valid only when all principal angles are strictly below pi/2.
    """
    _check_same_point(base, target)
    angles = principal_angles(base, target)
    if angles[-1] >= np.pi / 2 - CUT_LOCUS_MARGIN:
        raise CutLocusError(
            f"largest principal angle {angles[-1]:.6f} rad is within "
            f"{CUT_LOCUS_MARGIN} of pi/2; logarithm undefined"
        )
    phi, psi = base.matrix, target.matrix
    cross = phi.T @ psi
    try:
        # x = Psi (Phi^T Psi)^{-1}
        x = np.linalg.solve(cross.T, psi.T).T
    except np.linalg.LinAlgError as exc:
        raise GrassmannError("singular cross-Gram matrix Phi^T Psi") from exc
    m = x - phi @ (phi.T @ x)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    z = (u * np.arctan(s)) @ vt
    return HorizontalLift(z, base)


def principal_angles(a: PodBasis, b: PodBasis) -> np.ndarray:
    """Principal angles between the spanned subspaces, ascending, in
    [0, pi/2].

    Defined through the singular values of a^T b clamped into [-1, 1]
    (theta_i = arccos sigma_i); evaluated with the sine-corrected algorithm
    so angles near zero are accurate to machine precision rather than
    sqrt(eps), which the round-trip tolerances require.
    """
    _check_same_point(a, b)
    return scipy.linalg.subspace_angles(a.matrix, b.matrix)[::-1].copy()


def geodesic_distance(a: PodBasis, b: PodBasis) -> float:
    """Geodesic distance sqrt(sum of squared principal angles)."""
    return float(np.linalg.norm(principal_angles(a, b)))
