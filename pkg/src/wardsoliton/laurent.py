"""Truncated matrix-valued Laurent series in one variable.

A jet stores the coefficients of (s - center)^e for e = lowest..order.
Coefficient arrays have shape (*batch, n, n) so a single jet can carry
the expansions at many spacetime points.
"""

from __future__ import annotations

import numpy as np

from .errors import NotHolomorphic

HOLO_TOL = 1e-9


class MatrixLaurentJet:
    __slots__ = ("center", "lowest", "coeffs")

    def __init__(self, center: complex, lowest: int, coeffs):
        self.center = complex(center)
        self.lowest = int(lowest)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.ndim < 3:
            raise ValueError("coeffs must have shape (L, ..., n, n)")

    @property
    def order(self) -> int:
        return self.lowest + self.coeffs.shape[0] - 1

    @property
    def n(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[1:-2]

    def coefficient(self, e: int) -> np.ndarray:
        if e < self.lowest or e > self.order:
            if e < self.lowest:
                return np.zeros(self.coeffs.shape[1:], dtype=complex)
            raise IndexError(f"exponent {e} beyond retained order {self.order}")
        return self.coeffs[e - self.lowest]

    @classmethod
    def constant(cls, M, order: int, center: complex = 0.0) -> "MatrixLaurentJet":
        M = np.asarray(M, dtype=complex)
        c = np.zeros((order + 1,) + M.shape, dtype=complex)
        c[0] = M
        return cls(center, 0, c)

    def truncate(self, order: int) -> "MatrixLaurentJet":
        if order >= self.order:
            return self
        return MatrixLaurentJet(self.center, self.lowest, self.coeffs[: order - self.lowest + 1])

    def drop_negative(self) -> "MatrixLaurentJet":
        if self.lowest >= 0:
            return self
        return MatrixLaurentJet(self.center, 0, self.coeffs[-self.lowest :])

    def negative_norms(self) -> list[tuple[int, float]]:
        """Largest Frobenius norm of each negative-exponent coefficient."""
        out = []
        for e in range(self.lowest, min(0, self.order + 1)):
            c = self.coefficient(e)
            out.append((e, float(np.max(np.linalg.norm(c, axis=(-2, -1))))))
        return out

    def __call__(self, h) -> np.ndarray:
        """Evaluate the truncated series at s = center + h (h scalar)."""
        out = np.zeros(self.coeffs.shape[1:], dtype=complex)
        for idx in range(self.coeffs.shape[0]):
            out = out + self.coeffs[idx] * h ** (self.lowest + idx)
        return out

    def __matmul__(self, other: "MatrixLaurentJet") -> "MatrixLaurentJet":
        return jet_mul(self, other)

    def __repr__(self):
        return f"MatrixLaurentJet(center={self.center}, lowest={self.lowest}, order={self.order}, n={self.n})"


def jet_mul(a: MatrixLaurentJet, b: MatrixLaurentJet) -> MatrixLaurentJet:
    """Cauchy product truncated to the exponents both operands determine."""
    if abs(a.center - b.center) > 1e-14 * (1 + abs(a.center)):
        raise ValueError("jets have different centers")
    if a.n != b.n:
        raise ValueError(f"dimension mismatch {a.n} vs {b.n}")
    lo = a.lowest + b.lowest
    hi = min(a.order + b.lowest, b.order + a.lowest)
    L = hi - lo + 1
    shape = np.broadcast_shapes(a.coeffs.shape[1:], b.coeffs.shape[1:])
    out = np.zeros((max(L, 0),) + shape, dtype=complex)
    for i in range(a.coeffs.shape[0]):
        for j in range(b.coeffs.shape[0]):
            e = i + j
            if e >= L:
                break
            out[e] += a.coeffs[i] @ b.coeffs[j]
    return MatrixLaurentJet(a.center, lo, out)


def jet_product(jets) -> MatrixLaurentJet:
    """Left-to-right product of a sequence of jets."""
    jets = list(jets)
    out = jets[0]
    for j in jets[1:]:
        out = jet_mul(out, j)
    return out


def holomorphic_value(j: MatrixLaurentJet, tol: float = HOLO_TOL) -> np.ndarray:
    """Constant term of a jet whose negative part must vanish."""
    for e, nrm in j.negative_norms():
        if nrm >= tol:
            raise NotHolomorphic(e, nrm)
    return j.coefficient(0)


def jet_derivative(j: MatrixLaurentJet) -> MatrixLaurentJet:
    """Term-wise d/ds; the retained order drops by one."""
    if j.order < 1:
        raise ValueError("jet order must be at least 1 to differentiate")
    exps = np.arange(j.lowest, j.order + 1)
    scaled = j.coeffs * exps.reshape((-1,) + (1,) * (j.coeffs.ndim - 1))
    if j.lowest == 0:
        return MatrixLaurentJet(j.center, 0, scaled[1:])
    return MatrixLaurentJet(j.center, j.lowest - 1, scaled)


def pole_jet(a: complex, Q, c: complex, center: complex, order: int) -> MatrixLaurentJet:
    """Jet at ``center`` of I + c/(s - a) Q, valid through exponent ``order``."""
    Q = np.asarray(Q, dtype=complex)
    n = Q.shape[-1]
    eye = np.broadcast_to(np.eye(n, dtype=complex), Q.shape)
    if abs(center - a) <= 1e-14 * (1 + abs(a)):
        coeffs = np.zeros((order + 2,) + Q.shape, dtype=complex)
        coeffs[0] = c * Q
        if order >= 0:
            coeffs[1] = eye
        return MatrixLaurentJet(center, -1, coeffs)
    d = center - a
    coeffs = np.zeros((order + 1,) + Q.shape, dtype=complex)
    for m in range(order + 1):
        coeffs[m] = (c * (-1) ** m / d ** (m + 1)) * Q
    coeffs[0] = coeffs[0] + eye
    return MatrixLaurentJet(center, 0, coeffs)


def simple_element_jet(z0: complex, perp, center: complex, order: int) -> MatrixLaurentJet:
    """Jet of g_{z0,pi} = I + (z0 - conj z0)/(s - z0) pi_perp."""
    return pole_jet(z0, perp, z0 - np.conj(z0), center, order)


def simple_inverse_jet(z0: complex, perp, center: complex, order: int) -> MatrixLaurentJet:
    """Jet of g_{z0,pi}^{-1}, which is the simple element with pole conj z0."""
    z0c = complex(np.conj(z0))
    return pole_jet(z0c, perp, z0c - z0, center, order)


def blaschke_jet(z0: complex, m: int, n: int, center: complex, order: int, batch=()) -> MatrixLaurentJet:
    """Jet of ((s - conj z0)/(s - z0))^m times the identity."""
    eye = np.broadcast_to(np.eye(n, dtype=complex), tuple(batch) + (n, n))
    if m == 0:
        return MatrixLaurentJet.constant(eye, order, center)
    base = simple_element_jet(z0, eye, center, order) if m > 0 else simple_inverse_jet(z0, eye, center, order)
    reps = abs(m)
    poles_here = base.lowest < 0
    budget = order + (reps - 1 if poles_here else 0)
    base = simple_element_jet(z0, eye, center, budget) if m > 0 else simple_inverse_jet(z0, eye, center, budget)
    out = base
    for _ in range(reps - 1):
        out = jet_mul(out, base)
    return out.truncate(order)
