"""Algebraic and generalized Backlund transformations.

Transformed projector fields are derived evaluators: they close over the
seed solution and recompute psi(p, z) Im(pi) at whatever points they are
asked about.  No closed form of the new data is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, NotHolomorphic, PoleClash
from .laurent import HOLO_TOL, jet_mul, simple_element_jet, simple_inverse_jet
from .loopgroup import (
    ExtendedSolution,
    FrameField,
    ProjectorField,
    SimpleElementField,
    SpacetimePoint,
    is_minimal,
    laurent_expand,
    poles_equal,
)
from .matrix import batched_projectors

PROBE_SEED = 20240611
N_PROBES = 5
COND_LIMIT = 1e12


def probe_points(count: int = N_PROBES, seed: int = PROBE_SEED, scale: float = 2.0) -> SpacetimePoint:
    """Fixed pseudo-random spacetime points used for construction checks."""
    rng = np.random.default_rng(seed)
    x, y, t = rng.uniform(-scale, scale, size=(3, count))
    return SpacetimePoint(x, y, t)


@dataclass(frozen=True, eq=False)
class BTRecord:
    z: complex
    source_pi: ProjectorField
    transformed_pi: ProjectorField
    parent: ExtendedSolution


def _check_seed(psi: ExtendedSolution, z: complex):
    if z.imag == 0:
        raise ValueError("transformation pole must be non-real")
    if psi.has_pole(z):
        raise PoleClash(f"pole {z} already belongs to the seed solution")
    if psi.has_pole(np.conj(z)):
        raise PoleClash(f"conjugate pole {np.conj(z)} belongs to the seed solution; seed is degenerate at {z}")


def bt_apply(psi: ExtendedSolution, z: complex, pi: ProjectorField) -> ExtendedSolution:
    """g_{z,pi~} psi with Im pi~ = psi(z) Im pi."""
    z = complex(z)
    _check_seed(psi, z)
    probes = probe_points()
    cond = np.linalg.cond(psi.value(probes, z))
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise Degenerate(f"seed is singular at lambda={z} on a probe point")

    def frame(p, cache):
        return psi.value(p, z, cache) @ pi.frame(p, cache)

    tilde = FrameField(frame, psi.n, pi.rank, label="bt")
    record = BTRecord(z, pi, tilde, psi)
    meta = dict(psi.meta)
    meta["bt"] = meta.get("bt", ()) + (record,)
    return ExtendedSolution(
        psi.factors + (SimpleElementField(z, tilde),), psi.n, psi.prefactors, "bt", meta
    )


class _GBTState:
    """Shared recursion producing all π̃_j frames at a batch of points."""

    def __init__(self, phi: ExtendedSolution, psi: ExtendedSolution, z: complex):
        self.phi = phi
        self.psi = psi
        self.z = z
        self.k = phi.k

    def run(self, p: SpacetimePoint, cache: dict):
        key = (id(self), "gbt")
        if key in cache:
            return cache[key]
        z, n, k = self.z, self.psi.n, self.k
        jet = laurent_expand(self.psi, p, z, k, cache)
        frames, defects, values = [], [], []
        for j, f in enumerate(self.phi.factors):
            val = jet.coefficient(0)
            values.append(val)
            F = val @ f.pi.frame(p, cache)
            Pt = batched_projectors(F, f.pi.rank)
            frames.append(F)
            if j == k - 1:
                break
            P = f.pi.projector(p, cache)
            o = jet.order
            left = simple_element_jet(z, np.eye(n) - Pt, z, o)
            right = simple_inverse_jet(z, np.eye(n) - P, z, o)
            prod = jet_mul(jet_mul(left, jet), right)
            neg = prod.coefficient(-1)
            scale = 1.0 + np.linalg.norm(val, axis=(-2, -1))
            defects.append(np.linalg.norm(neg, axis=(-2, -1)) / scale)
            jet = prod.drop_negative()
        out = (frames, defects, values)
        cache[key] = out
        return out


def gbt_apply(phi: ExtendedSolution, psi: ExtendedSolution) -> ExtendedSolution:
    """Dress ``psi`` by a single-pole soliton ``phi``: returns phi~ psi."""
    if phi.k == 0:
        raise ValueError("phi must contain at least one simple element")
    z = phi.factors[0].z
    if any(not poles_equal(f.z, z) for f in phi.factors):
        raise ValueError("phi must have a single pole")
    if any(not (poles_equal(q, z) or poles_equal(np.conj(q), z)) for q, _ in phi.prefactors):
        raise ValueError("phi prefactors must sit at its pole")
    _check_seed(psi, z)
    for q in psi.poles():
        if poles_equal(q, np.conj(z)):
            raise PoleClash("poles must be non-conjugate")
    probes = probe_points()
    cond = np.linalg.cond(psi.value(probes, z))
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise Degenerate(f"seed is singular at lambda={z} on a probe point")

    state = _GBTState(phi, psi, z)
    _, defects, _ = state.run(probes, {})
    for j, d in enumerate(defects):
        worst = float(np.max(d)) if np.size(d) else 0.0
        if worst > HOLO_TOL:
            raise NotHolomorphic(-1, worst)

    cache0: dict = {}
    minimal = is_minimal([f.pi.projector(probes.take(0), cache0) for f in phi.factors])

    tilde = []
    for j, f in enumerate(phi.factors):
        fn = (lambda jj: (lambda p, cache: state.run(p, cache)[0][jj]))(j)
        tilde.append(SimpleElementField(z, FrameField(fn, psi.n, f.pi.rank, label=f"gbt[{j}]")))
    meta = dict(psi.meta)
    meta["gbt"] = meta.get("gbt", ()) + ({"z": z, "k": phi.k, "phi_minimal": minimal, "state": state},)
    return ExtendedSolution(
        psi.factors + tuple(tilde), psi.n, psi.prefactors + phi.prefactors, "gbt", meta
    )


def gbt_values(psi_k: ExtendedSolution, p: SpacetimePoint, which: int = -1):
    """Intermediate values psi~_j(z) of a GBT recursion (for inspection)."""
    state = psi_k.meta["gbt"][which]["state"]
    return state.run(p, {})[2]


def compose_multi(parts) -> ExtendedSolution:
    """phi_r * (... * (phi_2 * phi_1)) for single-pole parts."""
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one part")
    poles = [p.factors[0].z for p in parts if p.k]
    for i, a in enumerate(poles):
        for b in poles[i + 1 :]:
            if poles_equal(a, b) or poles_equal(a, np.conj(b)):
                raise PoleClash(f"parts share pole {a} or its conjugate")
    out = parts[0]
    for part in parts[1:]:
        out = gbt_apply(part, out)
    return out
