"""Unitons: stationary solitons with all poles at lambda = i.

A uniton is specified by families of rational maps.  A family
(a_0, ..., a_{L-1}) with top index T contributes to level p <= T the vectors

    D^(j) v_p = sum_{m<p} (2i)^m P_{p-1,m} a_m^(j),    0 <= j <= T - p,

where a^(j) is the j-th w-derivative.  Partition families have
T = r + k - 1; an extra spanner family of length L has T = L.  The chain is
built with the limiting machinery, taking as column sequences the derivative
sequences (a_0^(j), a_1^(j), ...), so that stationarity is a property to be
checked and not something imposed by the formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .backlund import probe_points
from .errors import ConstraintViolated, NearPole, StrictDecreaseViolated
from .limiting import LimitingData, build_chain, chain_probes
from .loopgroup import ExtendedSolution, SpacetimePoint, ranks, ward_map
from .matrix import adjoint, subspace_intersect
from .rational import RationalMap

ZI = 1j
MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class UnitonSpec:
    """Data of a k-uniton in U(n).

    ``maps[i]`` is the list a_{i,0}..a_{i,k-1} of the i-th partition
    family (missing trailing maps count as zero).  ``extra_spanners`` are
    families (b_0, ..., b_{L-1}); a bare map is a family of length one.  ``ranks`` optionally fixes the rank of
    every level; surplus family vectors must then lie in the level's span.
    """

    n: int
    k: int
    partition: tuple
    maps: tuple
    extra_spanners: tuple = ()
    ranks: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "partition", tuple(int(r) for r in self.partition))
        object.__setattr__(self, "maps", tuple(tuple(m) for m in self.maps))
        extras = tuple((m,) if isinstance(m, RationalMap) else tuple(m) for m in self.extra_spanners)
        object.__setattr__(self, "extra_spanners", extras)
        if any(r <= 0 for r in self.partition):
            raise ValueError("partition entries must be positive")
        if len(self.partition) != len(self.maps):
            raise ValueError("one map family per partition entry")
        if any(len(fam) > self.k for fam in self.maps):
            raise ValueError("partition families carry at most k maps")
        for fam in self.maps + extras:
            if not fam or any(m.n != self.n for m in fam):
                raise ValueError("map dimensions must equal n")
        if self.ranks is not None:
            object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
            if len(self.ranks) != self.k:
                raise ValueError("ranks must have k entries")


@dataclass(frozen=True)
class FamilyVector:
    family: int
    order: int
    top: int


def _families(spec: UnitonSpec):
    fams = []
    for r, maps in zip(spec.partition, spec.maps):
        fams.append((list(maps), r + spec.k - 1))
    for maps in spec.extra_spanners:
        fams.append((list(maps), len(maps)))
    return fams


def _zero_map(n: int) -> RationalMap:
    return RationalMap([[0.0]] * n)


def uniton_limiting_data(spec: UnitonSpec) -> tuple[LimitingData, list[FamilyVector]]:
    """Column sequences and nested level sets for the limiting builder."""
    fams = _families(spec)
    columns, info = [], []
    for fi, (maps, top) in enumerate(fams):
        for j in range(top):
            depth = min(top - j, spec.k)
            seq = []
            for m in range(depth):
                base = maps[m] if m < len(maps) else _zero_map(spec.n)
                seq.append(base.derivative(j))
            columns.append(tuple(seq))
            info.append(FamilyVector(fi, j, top))
    depth = [min(fv.top - fv.order, spec.k) for fv in info]
    order = sorted(range(len(columns)), key=lambda i: -depth[i])
    columns = [columns[i] for i in order]
    info = [info[i] for i in order]
    depth = [depth[i] for i in order]
    levels = tuple(tuple(i for i in range(len(columns)) if depth[i] > p) for p in range(spec.k))
    if any(not lv for lv in levels):
        raise ConstraintViolated(0, 0, float("nan"), "some level receives no spanning vectors")
    data = LimitingData(ZI, tuple(columns), spec.k, spec.ranks, levels)
    return data, info


def uniton_build(spec: UnitonSpec) -> ExtendedSolution:
    """Build g_{i,pi_k} ... g_{i,pi_1} and check the membership constraints."""
    if spec.k >= spec.n:
        raise ConstraintViolated(spec.k, 0, float("nan"), f"k={spec.k} must be below n={spec.n}")
    data, info = uniton_limiting_data(spec)
    if spec.ranks is not None:
        # check before building so over-counted levels fail with a clear reason
        _, probe_psi = _unchecked_chain(data)
        defects = membership_defects(probe_psi, data, info)
        for level, order, d in defects:
            if d > MEMBERSHIP_TOL:
                raise ConstraintViolated(level, order, d)
    chain, psi = build_chain(data)
    meta = dict(psi.meta)
    meta["uniton"] = {"spec": spec, "info": info}
    out = ExtendedSolution(psi.factors, psi.n, (), "uniton", meta)
    for level, order, d in membership_defects(out, data, info):
        if d > MEMBERSHIP_TOL:
            raise ConstraintViolated(level, order, d)
    return out


def _unchecked_chain(data: LimitingData):
    from .limiting import HatChain
    from .loopgroup import SimpleElementField

    chain = HatChain(data)
    psi = ExtendedSolution(tuple(SimpleElementField(data.z, lvl) for lvl in chain.levels), data.n, (), "limiting", {"chain": chain})
    return chain, psi


def membership_defects(psi: ExtendedSolution, data: LimitingData, info, p: SpacetimePoint | None = None):
    """(level, derivative order, defect) for every family vector at every level.

    The vectors are the stationary formulas D^(j) v_p built from the chain's
    own projectors; the defect is the worst relative distance from Im pi_p
    over the probe points.
    """
    p = chain_probes() if p is None else p
    chain = psi.meta["chain"]
    run = chain.run(p)
    projs = run["projectors"]
    n = data.n
    zz = 2j
    out = []
    eye = np.broadcast_to(np.eye(n, dtype=complex), p.shape + (n, n))
    Pkm = [eye]
    for lvl in range(data.k):
        P = projs[lvl]
        for col in data.level_columns[lvl]:
            seq = data.columns[col]
            v = np.zeros(p.shape + (n,), dtype=complex)
            w = p.w(ZI)
            for m in range(lvl + 1):
                a = seq[m](w, cleared=False) if m < len(seq) else 0.0
                v = v + zz**m * np.einsum("...ab,...b->...a", Pkm[m], a)
            nv = np.linalg.norm(v, axis=-1)
            res = np.linalg.norm(v - np.einsum("...ab,...b->...a", P, v), axis=-1)
            rel = np.where(nv > 0, res / np.where(nv > 0, nv, 1.0), 0.0)
            out.append((lvl + 1, info[col].order, float(np.max(rel))))
        perp = np.eye(n) - P
        nxt = [eye]
        for m in range(1, lvl + 2):
            prev = Pkm[m] if m < len(Pkm) else 0.0
            nxt.append(prev + perp @ Pkm[m - 1])
        Pkm = nxt
    return out


@dataclass
class StationarityReport:
    max_t_drift: float
    violated_constraints: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_t_drift < 1e-8 and not self.violated_constraints


def stationarity_check(psi, t_samples: Sequence[float] = (-3, -1, 0, 1, 3), grid=None) -> StationarityReport:
    """Drift of J over time plus membership defects for uniton-built chains.

    ``psi`` may be an ExtendedSolution or a callable J(x, y, t).
    """
    if grid is None:
        g = np.linspace(-2.0, 2.0, 5)
        X, Y = np.meshgrid(g, g)
        grid = list(zip(X.ravel(), Y.ravel()))
    xs = np.array([q[0] for q in grid], dtype=float)
    ys = np.array([q[1] for q in grid], dtype=float)
    if isinstance(psi, ExtendedSolution):
        def J(x, y, t):
            return ward_map(psi, SpacetimePoint(x, y, t))
    else:
        J = psi
    J0 = J(xs, ys, np.zeros_like(xs))
    drift = 0.0
    for t in t_samples:
        Jt = J(xs, ys, np.full_like(xs, float(t)))
        drift = max(drift, float(np.max(np.linalg.norm(Jt - J0, axis=(-2, -1)))))
    violated = []
    if isinstance(psi, ExtendedSolution) and "uniton" in psi.meta:
        spec = psi.meta["uniton"]["spec"]
        data, info = uniton_limiting_data(spec)
        for level, order, d in membership_defects(psi, data, info):
            if d > MEMBERSHIP_TOL:
                violated.append((level, order, d))
    return StationarityReport(drift, violated)


def validate_rank_law(psi: ExtendedSolution, points: SpacetimePoint | None = None) -> list[int]:
    """Ranks of a uniton chain, which must strictly decrease.

    Requires Im pi_1 to contain no constant vector, tested by intersecting
    Im pi_1 over several points.
    """
    pts = probe_points(7, 99) if points is None else points
    P1 = psi.factors[0].pi.projector(pts)
    common = P1[0]
    for idx in range(1, pts.size):
        common = subspace_intersect(common, P1[idx]).matrix
    if int(round(np.trace(common).real)):
        raise ConstraintViolated(1, 0, 0.0, "Im pi_1 contains constant vectors; normalize the chain first")
    cache: dict = {}
    one = pts.take(0)
    rs = ranks([f.pi.projector(one, cache) for f in psi.factors])
    if any(a <= b for a, b in zip(rs, rs[1:])):
        raise StrictDecreaseViolated(f"ranks {rs} are not strictly decreasing")
    return rs


def lambda_of_xi(xi: complex) -> complex:
    xi = complex(xi)
    if xi == 1:
        raise ValueError("xi = 1 corresponds to lambda = infinity")
    return 1j * (1 + xi) / (1 - xi)


def harmonic_extended(psi: ExtendedSolution, xi: complex) -> Callable:
    """Evaluator (x, y) -> E(x, y, xi) = psi(x, y, 0, lambda(xi))^{-1}."""
    lam = lambda_of_xi(xi)
    if abs(lam - ZI) < 1e-6:
        raise NearPole("xi = 0 sits on the pole lambda = i")

    def E(x, y):
        M = psi.value(SpacetimePoint(x, y, 0.0), lam)
        return np.linalg.inv(M)

    return E


def harmonic_residual(s: Callable, x, y, h: float = 1e-4) -> np.ndarray:
    """|| P_zbar + [P, P*] || with P = s^{-1} s_z / 2, by central differences.

    ``s`` maps arrays (x, y) to unitary matrices.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def P(xx, yy):
        s0 = s(xx, yy)
        sx = (s(xx + h, yy) - s(xx - h, yy)) / (2 * h)
        sy = (s(xx, yy + h) - s(xx, yy - h)) / (2 * h)
        return 0.5 * np.linalg.inv(s0) @ (0.5 * (sx - 1j * sy))

    P0 = P(x, y)
    Px = (P(x + h, y) - P(x - h, y)) / (2 * h)
    Py = (P(x, y + h) - P(x, y - h)) / (2 * h)
    Pzb = 0.5 * (Px + 1j * Py)
    Ps = adjoint(P0)
    res = Pzb + (P0 @ Ps - Ps @ P0)
    return np.linalg.norm(res, axis=(-2, -1))
