"""Small dense complex linear algebra: projectors, subspaces, inverses.

Scalar-point routines take 2-D arrays.  The ``batched_*`` helpers take
stacks of shape (..., n, n) or (..., n, r) and are used when fields are
sampled on whole grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import Singular, ZeroSpan

RANK_TOL = 1e-9
PROJ_TOL = 1e-10
COND_MAX = 1e12


def adjoint(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


@dataclass(frozen=True)
class Projector:
    """Hermitian projection of C^n together with its rank."""

    matrix: np.ndarray
    rank: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def perp(self) -> np.ndarray:
        return np.eye(self.n) - self.matrix

    def defects(self) -> tuple[float, float, float]:
        P = self.matrix
        herm = np.linalg.norm(P - adjoint(P))
        idem = np.linalg.norm(P @ P - P)
        tr = abs(np.trace(P) - self.rank)
        return float(herm), float(idem), float(tr)

    def is_valid(self) -> bool:
        h, i, t = self.defects()
        return h < PROJ_TOL and i < PROJ_TOL and t < 1e-8

    def basis(self) -> np.ndarray:
        """Orthonormal basis (n, rank) of the image."""
        return image_basis(self.matrix, self.rank)


def as_matrix(P) -> np.ndarray:
    return P.matrix if isinstance(P, Projector) else np.asarray(P, dtype=complex)


def orthonormal_span(vectors, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span via column-pivoted QR."""
    M = np.asarray(vectors, dtype=complex)
    if M.ndim == 1:
        M = M[:, None]
    norms = np.linalg.norm(M, axis=0)
    if M.size == 0 or np.max(norms) <= tol:
        raise ZeroSpan("all spanning vectors vanish")
    Q, R, _ = sla.qr(M, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    r = int(np.sum(d > tol * d[0]))
    return Q[:, :r]


def projector_from_span(vectors, tol: float = RANK_TOL) -> Projector:
    """Projector onto the span of the given columns (array (n, k) or list)."""
    if isinstance(vectors, (list, tuple)):
        vectors = np.stack([np.asarray(v, dtype=complex).ravel() for v in vectors], axis=1)
    Q = orthonormal_span(vectors, tol)
    return Projector(Q @ adjoint(Q), Q.shape[1])


def complement(P: Projector) -> Projector:
    return Projector(np.eye(P.n) - P.matrix, P.n - P.rank)


def image_basis(P: np.ndarray, rank: int | None = None) -> np.ndarray:
    """Orthonormal basis of Im P for a Hermitian projector matrix."""
    P = np.asarray(P, dtype=complex)
    w, U = np.linalg.eigh(0.5 * (P + adjoint(P)))
    if rank is None:
        rank = int(np.sum(w > 0.5))
    return U[:, ::-1][:, :rank]


def subspace_intersect(P, Q, tol: float = RANK_TOL) -> Projector:
    """Projector onto Im P ∩ Im Q using principal angles."""
    Pm, Qm = as_matrix(P), as_matrix(Q)
    U, s, _ = np.linalg.svd(Pm @ Qm)
    k = int(np.sum(s > 1 - tol))
    B = U[:, :k]
    return Projector(B @ adjoint(B), k)


def subspace_distance(P, Q) -> float:
    """Spectral-norm distance between two projectors."""
    return float(np.linalg.norm(as_matrix(P) - as_matrix(Q), 2))


def membership_defect(P, v) -> float:
    """Relative size of the component of ``v`` outside Im P."""
    v = np.asarray(v, dtype=complex)
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    return float(np.linalg.norm(v - as_matrix(P) @ v) / nv)


def solve_inverse(M) -> np.ndarray:
    """Inverse by partial-pivot LU with a condition guard."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("solve_inverse needs a square matrix")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise Singular(f"condition number {cond:.3e} exceeds {COND_MAX:.0e}")
    lu, piv = sla.lu_factor(M)
    return sla.lu_solve((lu, piv), np.eye(M.shape[0], dtype=complex))


def batched_projectors(frames: np.ndarray, rank: int) -> np.ndarray:
    """Projectors onto the dominant ``rank``-dim span of each frame.

    ``frames`` has shape (..., n, r).  Columns are normalised first so
    that badly scaled witnesses do not distort the span.
    """
    F = np.asarray(frames, dtype=complex)
    if rank == 0:
        return np.zeros(F.shape[:-1] + (F.shape[-2],), dtype=complex)
    norms = np.linalg.norm(F, axis=-2, keepdims=True)
    F = F / np.where(norms == 0, 1.0, norms)
    if F.shape[-1] == 1 and rank == 1:
        v = F[..., 0]
        return v[..., :, None] * np.conj(v[..., None, :])
    U, _, _ = np.linalg.svd(F, full_matrices=False)
    Q = U[..., :rank]
    return Q @ adjoint(Q)


def batched_frame_singular_ratio(frames: np.ndarray, rank: int) -> np.ndarray:
    """sigma_rank / sigma_1 of the column-normalised frames."""
    F = np.asarray(frames, dtype=complex)
    norms = np.linalg.norm(F, axis=-2, keepdims=True)
    F = F / np.where(norms == 0, 1.0, norms)
    s = np.linalg.svd(F, compute_uv=False)
    if rank > s.shape[-1]:
        return np.zeros(s.shape[:-1])
    return s[..., rank - 1] / np.where(s[..., 0] == 0, 1.0, s[..., 0])


def batched_image_basis(P: np.ndarray, rank: int) -> np.ndarray:
    P = np.asarray(P, dtype=complex)
    _, U = np.linalg.eigh(0.5 * (P + adjoint(P)))
    return U[..., ::-1][..., :rank]
