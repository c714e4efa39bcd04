"""Order-k limiting construction of solitons with a single pole of order k.

A column sequence (a_0, a_1, ...) of rational maps produces, through the
epsilon-expansion of sum_l eps^l a_l(w_{z+eps}), coefficient vectors c_l.
Level j of the chain is spanned by the witnesses

    v_j = sum_{m<j} (z - conj z)^m P_{j-1,m} c_m,

where P_{l,m} sums ordered products of m complements among the first l
levels.  Several column sequences give higher-rank levels; level j uses the
first n_j of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .backlund import bt_apply, probe_points
from .errors import MinimalityViolated, RankCollapse
from .laurent import MatrixLaurentJet
from .loopgroup import (
    ExtendedSolution,
    ProjectorField,
    SimpleElementField,
    SpacetimePoint,
    SpanField,
    is_minimal,
    laurent_expand,
    ranks,
)
from .matrix import batched_frame_singular_ratio, batched_projectors
from .rational import MAX_ORDER, RationalMap, maps_lcm_clear, poly_taylor, series_mul, taylor_jet

N_CHAIN_PROBES = 7
CHAIN_PROBE_SEED = 7351
COLLAPSE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LimitingData:
    """Input of the limiting method.

    ``columns`` is a list of column sequences; sequence i is the list
    (a_{i,0}, a_{i,1}, ...) of RationalMaps.  By default every level uses
    every sequence.  ``rank_data`` (n_1 >= ... >= n_k) makes level j use the
    first n_j sequences.  ``level_columns`` lists the sequence indices of each
    level explicitly; levels must be nested so that every witness at level j
    was already a witness at level j - 1.  When both are given, ``rank_data``
    is the projector rank imposed at each level.
    """

    z: complex
    columns: tuple
    k: int
    rank_data: tuple | None = None
    level_columns: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if self.z.imag == 0:
            raise ValueError("pole must be non-real")
        cols = tuple(tuple(seq) for seq in self.columns)
        if not cols or any(len(s) == 0 for s in cols):
            raise ValueError("each column sequence needs at least a_0")
        n = cols[0][0].n
        if any(m.n != n for s in cols for m in s):
            raise ValueError("inconsistent map dimensions")
        object.__setattr__(self, "columns", cols)
        if self.k < 1 or self.k > MAX_ORDER:
            raise ValueError(f"k must be in [1, {MAX_ORDER}]")
        rd = self.rank_data
        lc = self.level_columns
        if lc is None:
            if rd is None:
                rd = (len(cols),) * self.k
            rd = tuple(int(r) for r in rd)
            if len(rd) != self.k:
                raise ValueError("rank_data must have k entries")
            if any(a < b for a, b in zip(rd, rd[1:])) or rd[-1] < 1 or rd[0] > len(cols):
                raise ValueError("rank_data must be non-increasing, positive and at most the number of sequences")
            lc = tuple(tuple(range(r)) for r in rd)
        else:
            lc = tuple(tuple(int(i) for i in level) for level in lc)
            if len(lc) != self.k or any(not level for level in lc):
                raise ValueError("level_columns must list k nonempty levels")
            if any(i < 0 or i >= len(cols) for level in lc for i in level):
                raise ValueError("level_columns index out of range")
            for lower, upper in zip(lc, lc[1:]):
                if not set(upper) <= set(lower):
                    raise ValueError("level_columns must be nested")
            rd = tuple(len(level) for level in lc) if rd is None else tuple(int(r) for r in rd)
            if len(rd) != self.k or any(r < 1 or r > len(level) for r, level in zip(rd, lc)):
                raise ValueError("rank_data incompatible with level_columns")
        object.__setattr__(self, "rank_data", rd)
        object.__setattr__(self, "level_columns", lc)

    @classmethod
    def scalar(cls, z: complex, maps: Sequence[RationalMap], k: int | None = None) -> "LimitingData":
        """One column sequence (a_0, ..., a_{k-1})."""
        return cls(z, (tuple(maps),), k or len(maps))

    @property
    def n(self) -> int:
        return self.columns[0][0].n


def _delta_series(z: complex, p: SpacetimePoint, order: int) -> np.ndarray:
    """Coefficients of w_{z+eps} - w_z in eps, shape (order+1, *p.shape)."""
    u, v = p.u, p.v
    d = np.zeros((order + 1,) + p.shape, dtype=complex)
    if order >= 1:
        d[1] = u - v / z**2
    for l in range(2, order + 1):
        d[l] = (-1) ** l * v / z ** (l + 1)
    return d


def _map_taylor(m: RationalMap, w: np.ndarray, order: int) -> np.ndarray:
    """a^{(l)}(w)/l! for l = 0..order, shape (order+1, *w.shape, n)."""
    if m.den.degree == 0:
        cols = [poly_taylor(q, w, order) / m.den.coeffs[0] for q in m.numerators]
    else:
        cols = [taylor_jet(f, w, order).coeffs for f in m.components()]
    return np.stack([np.broadcast_to(c, (order + 1,) + w.shape) for c in cols], axis=-1)


def epsilon_coeffs(seq: Sequence[RationalMap], z: complex, p: SpacetimePoint, k: int) -> list[np.ndarray]:
    """c_0..c_k of sum_j eps^j a_j(w_{z+eps}) by power-series composition."""
    z = complex(z)
    w = p.w(z)
    delta = _delta_series(z, p, k)
    powers = [np.zeros_like(delta)]
    powers[0][0] = 1.0
    for _ in range(k):
        powers.append(series_mul(powers[-1], delta, k))
    n = seq[0].n
    c = [np.zeros(p.shape + (n,), dtype=complex) for _ in range(k + 1)]
    for j, a in enumerate(seq[: k + 1]):
        rem = k - j
        T = _map_taylor(a, w, rem)
        for m in range(rem + 1):
            b = np.zeros(p.shape + (n,), dtype=complex)
            for l in range(m + 1):
                b = b + T[l] * powers[l][m][..., None]
            c[j + m] = c[j + m] + b
    return c


class HatChain:
    """Levels of a limiting chain evaluated together at a batch of points."""

    def __init__(self, data: LimitingData):
        self.data = data
        self.z = data.z
        self.k = data.k
        self.n = data.n
        self.rank_data = data.rank_data
        self.cleared = [tuple(maps_lcm_clear(list(seq))) for seq in data.columns]
        self.levels = [ChainLevelField(self, j) for j in range(self.k)]

    def _depth(self, i: int) -> int:
        return sum(1 for level in self.data.level_columns if i in level)

    def coefficients(self, p: SpacetimePoint, cache: dict) -> list[list[np.ndarray]]:
        key = (id(self), "c")
        if key not in cache:
            cache[key] = [
                epsilon_coeffs(seq, self.z, p, max(self._depth(i) - 1, 0)) for i, seq in enumerate(self.cleared)
            ]
        return cache[key]

    def run(self, p: SpacetimePoint, cache: dict | None = None) -> dict:
        cache = {} if cache is None else cache
        key = (id(self), "run")
        if key in cache:
            return cache[key]
        cs = self.coefficients(p, cache)
        n, zz = self.n, self.z - np.conj(self.z)
        eye = np.broadcast_to(np.eye(n, dtype=complex), p.shape + (n, n))
        Pkm = [eye]
        frames, projs = [], []
        for j in range(self.k):
            cols = []
            for i in self.data.level_columns[j]:
                v = np.zeros(p.shape + (n,), dtype=complex)
                for m in range(j + 1):
                    v = v + zz**m * np.einsum("...ab,...b->...a", Pkm[m], cs[i][m])
                cols.append(v)
            F = np.stack(cols, axis=-1)
            if F.shape[-1] == 1:
                P = kernels.rank_one_projectors(F[..., 0])
            else:
                P = batched_projectors(F, self.rank_data[j])
            frames.append(F)
            projs.append(P)
            perp = np.eye(n) - P
            nxt = [eye]
            for m in range(1, j + 2):
                prev = Pkm[m] if m < len(Pkm) else 0.0
                nxt.append(prev + perp @ Pkm[m - 1])
            Pkm = nxt
        out = {"frames": frames, "projectors": projs}
        cache[key] = out
        return out

    def witnesses(self, p: SpacetimePoint) -> list[np.ndarray]:
        return self.run(p)["frames"]


class ChainLevelField(ProjectorField):
    def __init__(self, chain: HatChain, j: int):
        self.chain = chain
        self.j = j
        self.n = chain.n
        self.rank = chain.rank_data[j]
        self.label = f"level{j + 1}"

    def frame(self, p, cache=None):
        return self.chain.run(p, cache)["frames"][self.j]

    def projector(self, p, cache=None):
        return self.chain.run(p, cache)["projectors"][self.j]


def chain_probes() -> SpacetimePoint:
    return probe_points(N_CHAIN_PROBES, CHAIN_PROBE_SEED)


def build_chain(data: LimitingData) -> tuple[HatChain, ExtendedSolution]:
    chain = HatChain(data)
    probes = chain_probes()
    run = chain.run(probes)
    for j, F in enumerate(run["frames"]):
        ratio = batched_frame_singular_ratio(F, chain.rank_data[j])
        norms = np.linalg.norm(F, axis=-2).min(axis=-1)
        if np.all((ratio < COLLAPSE_TOL) | (norms == 0)):
            raise RankCollapse(f"witnesses at level {j + 1} are dependent at every probe point")
    factors = tuple(SimpleElementField(data.z, lvl) for lvl in chain.levels)
    psi = ExtendedSolution(factors, data.n, (), "limiting", {"chain": chain, "data": data})
    for idx in range(probes.size):
        mats = [P[idx] for P in run["projectors"]]
        if not is_minimal(mats):
            raise MinimalityViolated(f"limiting chain not minimal at probe point {idx}")
    return chain, psi


def rank_data_of(chain: HatChain, p: SpacetimePoint | None = None) -> list[int]:
    """Ranks of the levels at a point, with the monotonicity/kernel checks."""
    p = chain_probes().take(0) if p is None else p
    run = chain.run(p)
    return ranks(run["projectors"])


def pole_cancellation_defect(chain: HatChain, p: SpacetimePoint, level: int) -> float:
    """Size of negative eps-powers in psi_{level-1}(z+eps) b_eps.

    ``level`` counts from 1.  The inputs b_eps are the column series of the
    sequences used at that level.  Returns the largest negative coefficient
    norm relative to the witness norm.
    """
    j = level - 1
    cache: dict = {}
    psi_prev = ExtendedSolution(
        tuple(SimpleElementField(chain.z, lvl) for lvl in chain.levels[:j]), chain.n
    )
    jet = laurent_expand(psi_prev, p, chain.z, j, cache)
    cs = chain.coefficients(p, cache)
    worst = 0.0
    for col, i in enumerate(chain.data.level_columns[j]):
        c = cs[i]
        scale = max(float(np.max(np.linalg.norm(chain.run(p, cache)["frames"][j][..., col], axis=-1))), 1e-300)
        for e in range(-j, 0):
            acc = 0.0
            for m in range(0, j + 1):
                ex = e - m
                if ex < jet.lowest:
                    continue
                acc = acc + np.einsum("...ab,...b->...a", jet.coefficient(ex), c[m])
            worst = max(worst, float(np.max(np.linalg.norm(acc, axis=-1))) / scale)
    return worst


def perturbed_chain(data: LimitingData, eps: float) -> ExtendedSolution:
    """Genuine BT of the order-(k-1) chain at the shifted pole z + eps.

    The new line is spanned by sum_{l<k} eps^l a_l evaluated at w_{z+eps};
    as eps -> 0 the result tends to the order-k chain.
    """
    k = data.k
    sub = (
        LimitingData(data.z, data.columns, k - 1, data.rank_data[: k - 1], data.level_columns[: k - 1])
        if k > 1
        else None
    )
    base = build_chain(sub)[1] if sub else ExtendedSolution.identity(data.n)
    cleared = [maps_lcm_clear(list(seq)) for seq in data.columns]
    cols = []
    for seq in [cleared[i] for i in data.level_columns[-1]]:
        total = None
        for l, a in enumerate(seq[:k]):
            term = a.scale(eps**l)
            total = term if total is None else _poly_map_add(total, term)
        cols.append(total)
    ze = data.z + eps
    return bt_apply(base, ze, SpanField(ze, cols, rank=data.rank_data[-1]))


def _poly_map_add(a: RationalMap, b: RationalMap) -> RationalMap:
    return RationalMap([p + q for p, q in zip(a.numerators, b.numerators)], None, normalize=False)
