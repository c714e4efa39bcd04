"""Rational unitary loops built from simple elements.

An extended solution is stored as a list of simple-element fields
g_{z,pi}(lambda) = I + (z - conj z)/(lambda - z) pi_perp, applied right to
left with index 0 applied first, times scalar Blaschke powers
((lambda - conj z)/(lambda - z))^m.

Projector fields are evaluated on batches of spacetime points.  Derived
fields (Backlund transforms, limiting chains) need the values of other
fields at the same points, so every evaluation threads a ``cache`` dict that
lives for a single top-level call.  Nothing is cached across calls, which
keeps evaluation observably pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import ForbiddenPolePair, MinimalityViolated, NearPole
from .laurent import MatrixLaurentJet, blaschke_jet, jet_product, simple_element_jet
from .matrix import (
    Projector,
    adjoint,
    as_matrix,
    batched_image_basis,
    batched_projectors,
    solve_inverse,
    subspace_distance,
    subspace_intersect,
)
from .rational import Polynomial, RationalMap, poly_gcd, _exact_div

NEAR_POLE = 1e-6
POLE_MATCH = 1e-12


def poles_equal(a: complex, b: complex) -> bool:
    return abs(a - b) <= POLE_MATCH * (1 + abs(a))


class SpacetimePoint:
    """Batch of points (x, y, t) with light-cone coordinates u, v."""

    __slots__ = ("x", "y", "t")

    def __init__(self, x, y=0.0, t=0.0):
        x, y, t = np.broadcast_arrays(
            np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(t, dtype=float)
        )
        self.x, self.y, self.t = x, y, t

    @classmethod
    def from_xuv(cls, x, u, v) -> "SpacetimePoint":
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        return cls(x, u - v, u + v)

    @property
    def u(self):
        return 0.5 * (self.t + self.y)

    @property
    def v(self):
        return 0.5 * (self.t - self.y)

    @property
    def shape(self) -> tuple:
        return self.x.shape

    @property
    def size(self) -> int:
        return self.x.size

    def w(self, z: complex) -> np.ndarray:
        """The null coordinate x + z u + v / z."""
        return self.x + z * self.u + self.v / z

    def shifted(self, dx=0.0, dy=0.0, dt=0.0) -> "SpacetimePoint":
        return SpacetimePoint(self.x + dx, self.y + dy, self.t + dt)

    def reshape(self, shape) -> "SpacetimePoint":
        return SpacetimePoint(self.x.reshape(shape), self.y.reshape(shape), self.t.reshape(shape))

    def take(self, idx) -> "SpacetimePoint":
        return SpacetimePoint(self.x[idx], self.y[idx], self.t[idx])

    def __repr__(self):
        if self.x.ndim == 0:
            return f"SpacetimePoint(x={float(self.x)}, y={float(self.y)}, t={float(self.t)})"
        return f"SpacetimePoint(shape={self.shape})"


def _cache(cache):
    return {} if cache is None else cache


# ---------------------------------------------------------------------------
# projector fields


class ProjectorField:
    """Rule assigning a Hermitian projection of C^n to every spacetime point."""

    n: int
    rank: int
    label: str = "field"

    def frame(self, p: SpacetimePoint, cache: dict | None = None) -> np.ndarray:
        """Vectors of shape (*p.shape, n, r) spanning the image."""
        raise NotImplementedError

    def projector(self, p: SpacetimePoint, cache: dict | None = None) -> np.ndarray:
        cache = _cache(cache)
        key = (id(self), "P")
        if key not in cache:
            F = self.frame(p, cache)
            if F.shape[-1] == 1 and self.rank == 1:
                P = kernels.rank_one_projectors(F[..., 0])
            else:
                P = batched_projectors(F, self.rank)
            cache[key] = P
        return cache[key]

    def __call__(self, p: SpacetimePoint) -> np.ndarray:
        return self.projector(p)

    def at(self, p: SpacetimePoint) -> Projector:
        """Projector object at a single point."""
        return Projector(self.projector(p), self.rank)


class SpanField(ProjectorField):
    """Projection onto the span of columns V(w), w = x + z u + v/z.

    Each column is a RationalMap.  Only the numerators are used, divided by
    their common polynomial content, so the span extends continuously across
    poles of the denominator and the frame never vanishes identically.
    """

    def __init__(self, z: complex, columns, rank: int | None = None, label: str = "span"):
        if isinstance(columns, RationalMap):
            columns = [columns]
        self.z = complex(z)
        if self.z.imag == 0:
            raise ValueError("pole must be non-real")
        self.columns = tuple(columns)
        self.n = self.columns[0].n
        self.rank = len(self.columns) if rank is None else rank
        self.label = label
        self._polys = tuple(_content_free(c) for c in self.columns)

    def frame(self, p, cache=None):
        w = p.w(self.z)
        cols = []
        for polys in self._polys:
            cols.append(np.stack([np.broadcast_to(q(w), w.shape) for q in polys], axis=-1))
        return np.stack(cols, axis=-1)


def _content_free(m: RationalMap) -> tuple[Polynomial, ...]:
    nums = [p for p in m.numerators]
    nonzero = [p for p in nums if not p.is_zero()]
    if not nonzero:
        return tuple(nums)
    g = nonzero[0].monic()
    for p in nonzero[1:]:
        if g.degree <= 0:
            break
        g = poly_gcd(g, p)
    if g.degree > 0:
        nums = [_exact_div(p, g) for p in nums]
    return tuple(nums)


class FrameField(ProjectorField):
    """Field given by an evaluator returning spanning frames."""

    def __init__(self, fn: Callable, n: int, rank: int, label: str = "derived"):
        self.fn = fn
        self.n = n
        self.rank = rank
        self.label = label

    def frame(self, p, cache=None):
        cache = _cache(cache)
        key = (id(self), "F")
        if key not in cache:
            cache[key] = self.fn(p, cache)
        return cache[key]


class ConstantField(ProjectorField):
    def __init__(self, vectors, label: str = "constant"):
        V = np.asarray(vectors, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        self.vectors = V
        self.n = V.shape[0]
        self.rank = int(np.linalg.matrix_rank(V, tol=1e-9)) if V.size else 0
        self.label = label

    @classmethod
    def from_projector(cls, P) -> "ConstantField":
        P = as_matrix(P)
        r = int(round(np.trace(P).real))
        return cls(batched_image_basis(P, r))

    def frame(self, p, cache=None):
        return np.broadcast_to(self.vectors, p.shape + self.vectors.shape)


class ComplementField(ProjectorField):
    """pi_perp as a field."""

    def __init__(self, base: ProjectorField):
        self.base = base
        self.n = base.n
        self.rank = base.n - base.rank
        self.label = f"perp({base.label})"

    def projector(self, p, cache=None):
        cache = _cache(cache)
        key = (id(self), "P")
        if key not in cache:
            cache[key] = np.eye(self.n) - self.base.projector(p, cache)
        return cache[key]

    def frame(self, p, cache=None):
        return batched_image_basis(self.projector(p, cache), self.rank)


class PerturbedField(ProjectorField):
    """Base field with its frame pushed by I + eps*cos(x + y)*K.

    The position-dependent factor is not holomorphic in w, so the result is
    no longer part of a solution.  Used as a negative control.
    """

    def __init__(self, base: ProjectorField, eps: float, seed: int = 0):
        rng = np.random.default_rng(seed)
        K = rng.normal(size=(base.n, base.n)) + 1j * rng.normal(size=(base.n, base.n))
        self.K = eps * K / np.linalg.norm(K, 2)
        self.base = base
        self.n = base.n
        self.rank = base.rank
        self.label = f"perturbed({base.label})"

    def frame(self, p, cache=None):
        F = self.base.frame(p, cache)
        mod = np.cos(p.x + p.y)[..., None, None]
        return F + mod * (self.K @ F)


# ---------------------------------------------------------------------------
# simple elements and extended solutions


def simple_value(z: complex, P: np.ndarray, lam: complex) -> np.ndarray:
    """g_{z,pi}(lambda) from projector matrices P (..., n, n)."""
    n = P.shape[-1]
    return np.eye(n) + ((z - np.conj(z)) / (lam - z)) * (np.eye(n) - P)


@dataclass(frozen=True)
class SimpleElementField:
    z: complex
    pi: ProjectorField

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if self.z.imag == 0:
            raise ValueError("simple element pole must be non-real")

    @property
    def n(self) -> int:
        return self.pi.n

    def value(self, p, lam, cache=None) -> np.ndarray:
        return simple_value(self.z, self.pi.projector(p, cache), lam)


@dataclass(frozen=True, eq=False)
class ExtendedSolution:
    """Product B * g_{k-1} ... g_0 of Blaschke scalars and simple elements."""

    factors: tuple
    n: int
    prefactors: tuple = ()
    provenance: str = "one-soliton"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "prefactors", tuple((complex(z), int(m)) for z, m in self.prefactors if m != 0))
        for f in self.factors:
            if f.n != self.n:
                raise ValueError("factor dimension mismatch")

    @classmethod
    def identity(cls, n: int) -> "ExtendedSolution":
        return cls((), n, provenance="identity")

    @property
    def k(self) -> int:
        return len(self.factors)

    def poles(self) -> list[complex]:
        out: list[complex] = []
        for z in [f.z for f in self.factors] + [z if m > 0 else np.conj(z) for z, m in self.prefactors]:
            if not any(poles_equal(z, q) for q in out):
                out.append(complex(z))
        return out

    def has_pole(self, z: complex) -> bool:
        return any(poles_equal(z, q) for q in self.poles())

    def projectors(self, p, cache=None) -> list[np.ndarray]:
        cache = _cache(cache)
        return [f.pi.projector(p, cache) for f in self.factors]

    def scalar(self, lam: complex) -> complex:
        s = 1.0 + 0j
        for z, m in self.prefactors:
            s *= ((lam - np.conj(z)) / (lam - z)) ** m
        return s

    def value(self, p, lam, cache=None) -> np.ndarray:
        cache = _cache(cache)
        lam = complex(lam)
        key = (id(self), "val", lam)
        if key in cache:
            return cache[key]
        for z in self.poles():
            if abs(lam - z) < NEAR_POLE:
                raise NearPole(f"lambda={lam} within {NEAR_POLE} of pole {z}")
        if self.k == 0:
            out = np.broadcast_to(np.eye(self.n, dtype=complex), p.shape + (self.n, self.n)).copy()
        else:
            perps = np.stack([np.eye(self.n) - P for P in self.projectors(p, cache)])
            coeffs = np.array([(f.z - np.conj(f.z)) / (lam - f.z) for f in self.factors])
            coeffs = coeffs.reshape((-1,) + (1,) * len(p.shape))
            out = kernels.chain_product(perps, coeffs)
        if self.prefactors:
            out = out * self.scalar(lam)
        cache[key] = out
        return out

    def __call__(self, p, lam, cache=None):
        return evaluate(self, p, lam, cache)

    def tail(self, l: int) -> "ExtendedSolution":
        """g_{l-1} ... g_0, the first l factors."""
        return ExtendedSolution(self.factors[:l], self.n, provenance=f"tail:{self.provenance}")


def evaluate(psi: ExtendedSolution, p: SpacetimePoint, lam, cache=None, at_infinity: bool = False) -> np.ndarray:
    """psi(p, lambda).  ``lam=math.inf`` or ``at_infinity`` gives the limit I."""
    if at_infinity or (isinstance(lam, (int, float)) and math.isinf(lam)):
        return np.broadcast_to(np.eye(psi.n, dtype=complex), p.shape + (psi.n, psi.n)).copy()
    return psi.value(p, lam, cache)


def ward_map(psi: ExtendedSolution, p: SpacetimePoint, normalize_su: bool = False, cache=None) -> np.ndarray:
    """J = psi(p, 0)^{-1}, optionally scaled into SU(n) by the principal root."""
    M = psi.value(p, 0.0, cache)
    if M.ndim == 2:
        J = solve_inverse(M)
    else:
        J = np.linalg.inv(M)
    if normalize_su:
        J = su_normalize(J)
    return J


def su_normalize(J: np.ndarray) -> np.ndarray:
    n = J.shape[-1]
    det = np.linalg.det(J)
    return J * np.exp(-np.log(det) / n)[..., None, None]


def ward_evaluator(psi: ExtendedSolution, normalize_su: bool = False) -> Callable:
    """Callable J(x, y, t) on arrays."""

    def J(x, y, t):
        return ward_map(psi, SpacetimePoint(x, y, t), normalize_su)

    J.n = psi.n
    return J


@dataclass(frozen=True)
class PoleData:
    poles: tuple

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.poles)

    def multiplicity(self, z: complex) -> int:
        return sum(m for q, m in self.poles if poles_equal(q, z))

    def __str__(self):
        return "[" + ", ".join(f"({_fmt_pole(z)},{m})" for z, m in self.poles) + "]"


def _fmt_pole(z: complex) -> str:
    re, im = z.real, z.imag

    def num(v):
        return f"{v:.12g}"

    mag = "" if abs(im) == 1 else num(abs(im))
    if re == 0:
        return f"{'-' if im < 0 else ''}{mag}i"
    sign = "+" if im >= 0 else "-"
    return f"{num(re)}{sign}{mag}i"


def pole_data(psi: ExtendedSolution, p: SpacetimePoint | None = None) -> PoleData:
    """Poles with multiplicities.

    Without ``p`` the nominal data are read from the factor list.  With a
    single point ``p``, each maximal run of consecutive same-pole factors is
    minimally factorized there first, so cancellations are accounted for.
    """
    counts: list[list] = []

    def add(z, m):
        for entry in counts:
            if poles_equal(entry[0], z):
                entry[1] += m
                return
        counts.append([complex(z), m])

    if p is None:
        for f in psi.factors:
            add(f.z, 1)
    else:
        cache: dict = {}
        runs = _same_pole_runs(psi)
        for z, idx in runs:
            chain = [psi.factors[i].pi.projector(p, cache) for i in idx]
            m, reduced = minimal_factorize_matrices(z, chain)
            add(z, m + len(reduced))
    for z, m in psi.prefactors:
        add(z, m)
    return PoleData(tuple((z, m) for z, m in counts if m != 0))


def _same_pole_runs(psi: ExtendedSolution):
    runs = []
    for i, f in enumerate(psi.factors):
        if runs and poles_equal(runs[-1][0], f.z):
            runs[-1][1].append(i)
        else:
            runs.append((f.z, [i]))
    return runs


def velocity(z: complex) -> tuple[float, float]:
    """Constant velocity (v_x, v_y) of a 1-soliton with pole z."""
    z = complex(z)
    if z.imag == 0:
        raise ValueError("velocity is defined only for non-real poles")
    r, th = abs(z), math.atan2(z.imag, z.real)
    return (-2 * r * math.cos(th) / (1 + r * r), (1 - r * r) / (1 + r * r))


def laurent_expand(psi: ExtendedSolution, p: SpacetimePoint, center: complex, order: int, cache=None) -> MatrixLaurentJet:
    """Jet of psi(p, lambda) at lambda = center through exponent ``order``."""
    cache = _cache(cache)
    center = complex(center)
    Ps = psi.projectors(p, cache)
    neg = sum(1 for f in psi.factors if poles_equal(f.z, center))
    neg += sum(m for z, m in psi.prefactors if m > 0 and poles_equal(z, center))
    neg += sum(-m for z, m in psi.prefactors if m < 0 and poles_equal(np.conj(z), center))
    budget = order + neg
    n = psi.n
    jets = [simple_element_jet(f.z, np.eye(n) - P, center, budget) for f, P in zip(psi.factors, Ps)]
    jets = jets[::-1]
    if not jets:
        eye = np.broadcast_to(np.eye(n, dtype=complex), p.shape + (n, n))
        jets = [MatrixLaurentJet.constant(eye, budget, center)]
    for z, m in psi.prefactors:
        jets.append(blaschke_jet(z, m, n, center, budget, batch=p.shape))
    return jet_product(jets).truncate(order)


def permute(g1: SimpleElementField, g2: SimpleElementField):
    """Factors (g2~, g1~) with g_{z1,pi1~} g_{z2,pi2} = g_{z2,pi2~} g_{z1,pi1}."""
    z1, z2 = g1.z, g2.z
    if poles_equal(z1, z2) or poles_equal(z1, np.conj(z2)):
        raise ForbiddenPolePair(f"poles {z1} and {z2} are equal or conjugate")
    n = g1.n

    def f1(p, cache):
        return simple_value(z2, g2.pi.projector(p, cache), z1) @ g1.pi.frame(p, cache)

    def f2(p, cache):
        return simple_value(z1, g1.pi.projector(p, cache), z2) @ g2.pi.frame(p, cache)

    t1 = SimpleElementField(z1, FrameField(f1, n, g1.pi.rank, "permuted"))
    t2 = SimpleElementField(z2, FrameField(f2, n, g2.pi.rank, "permuted"))
    return t2, t1


# ---------------------------------------------------------------------------
# minimal factorization (pointwise)


def _rank(P: np.ndarray) -> int:
    return int(round(float(np.trace(P).real)))


def minimal_factorize_matrices(z: complex, chain: Sequence[np.ndarray], tol: float = 1e-9):
    """Reduce g_{z,P_{k-1}} ... g_{z,P_0} to B^m g_{z,tau_{l-1}} ... g_{z,tau_0}.

    ``chain`` lists projector matrices in application order.  Returns
    (m, taus) with every tau a proper nonzero projector and consecutive
    pairs satisfying Im tau_{j+1} ∩ Im tau_j^perp = 0.
    """
    n = chain[0].shape[-1] if len(chain) else 0
    eye = np.eye(n)

    def insert(cur: list, P: np.ndarray):
        r = _rank(P)
        if r >= n:
            return cur, 0
        if r == 0:
            return cur, 1
        if not cur:
            return [P], 0
        top = cur[-1]
        inter = subspace_intersect(P, eye - top, tol)
        if inter.rank == 0:
            return cur + [P], 0
        V = inter.matrix
        tau2 = _clean(P - V)
        tau1 = _clean(top + V)
        c2, m1 = insert(cur[:-1], tau1)
        c3, m2 = insert(c2, tau2)
        return c3, m1 + m2

    m = 0
    cur: list = []
    for P in chain:
        cur, dm = insert(cur, np.asarray(P, dtype=complex))
        m += dm
    return m, cur


def _clean(P: np.ndarray) -> np.ndarray:
    """Re-project onto the nearest orthogonal projector."""
    r = _rank(P)
    if r == 0:
        return np.zeros_like(P)
    B = batched_image_basis(P, r)
    return B @ adjoint(B)


def minimal_factorize(factors, p: SpacetimePoint | None = None):
    """Minimal factorization of a same-pole chain at a single point.

    ``factors`` is a sequence of SimpleElementField sharing one pole (then
    ``p`` is required) or a pair (z, list of projector matrices).  Returns
    (exponent, [Projector, ...]) in application order.
    """
    if isinstance(factors, tuple) and len(factors) == 2 and not isinstance(factors[0], SimpleElementField):
        z, mats = factors
    else:
        factors = list(factors)
        z = factors[0].z
        if any(not poles_equal(f.z, z) for f in factors):
            raise ValueError("minimal_factorize needs a same-pole chain")
        cache: dict = {}
        mats = [f.pi.projector(p, cache) for f in factors]
    m, taus = minimal_factorize_matrices(z, [np.asarray(P) for P in mats])
    return m, [Projector(t, _rank(t)) for t in taus]


def chain_value(z: complex, chain: Sequence, lam: complex, exponent: int = 0) -> np.ndarray:
    """B^exponent g_{z,P_{k-1}} ... g_{z,P_0} at one point."""
    mats = [as_matrix(P) for P in chain]
    n = mats[0].shape[0] if mats else None
    if n is None:
        raise ValueError("empty chain needs an explicit dimension")
    out = np.eye(n, dtype=complex)
    for P in mats:
        out = simple_value(z, P, lam) @ out
    return out * ((lam - np.conj(z)) / (lam - z)) ** exponent


def is_minimal(chain: Sequence, tol: float = 1e-9) -> bool:
    mats = [as_matrix(P) for P in chain]
    n = mats[0].shape[0]
    for lower, upper in zip(mats, mats[1:]):
        if subspace_intersect(upper, np.eye(n) - lower, tol).rank:
            return False
    return True


def ranks(chain: Sequence, tol: float = 1e-8) -> list[int]:
    """Ranks of a minimal chain; checks monotonicity and the kernel law."""
    mats = [as_matrix(P) for P in chain]
    if not mats:
        return []
    rs = [_rank(P) for P in mats]
    if any(a < b for a, b in zip(rs, rs[1:])):
        raise MinimalityViolated(f"ranks {rs} are not non-increasing")
    n = mats[0].shape[0]
    K = np.eye(n, dtype=complex)
    for P in mats:
        K = (np.eye(n) - P) @ K
    _, s, Vh = np.linalg.svd(K)
    small = s < 1e-9
    null_count = int(np.sum(small))
    N = Vh[small].conj().T
    PN = N @ adjoint(N)
    if null_count != rs[0] or subspace_distance(PN, mats[0]) > tol:
        raise MinimalityViolated("kernel of the composed complements differs from Im pi_1")
    return rs


def normalize_upper(psi: ExtendedSolution):
    """Move every factor pole into the upper half plane.

    Uses g_{z,pi} = ((lambda - conj z)/(lambda - z)) g_{conj z, pi_perp}.
    Returns (psi', phase) with psi = f psi', f the product of the Blaschke
    scalars removed, and phase = f(0).
    """
    factors = []
    phase = 1.0 + 0j
    for f in psi.factors:
        if f.z.imag < 0:
            factors.append(SimpleElementField(np.conj(f.z), ComplementField(f.pi)))
            phase *= np.conj(f.z) / f.z
        else:
            factors.append(f)
    pre = [(z, m) if z.imag > 0 else (np.conj(z), -m) for z, m in psi.prefactors]
    if phase == 1.0:
        return psi, 1.0 + 0j
    out = ExtendedSolution(tuple(factors), psi.n, tuple(pre), psi.provenance, dict(psi.meta))
    return out, complex(phase)
