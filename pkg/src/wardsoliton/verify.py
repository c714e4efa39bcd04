"""Numerical certification of constructed solutions.

Every derivative is a central finite difference.  The Ward residual is
measured at ``fd_step`` and its convergence order is estimated separately at
two coarser steps, where truncation error dominates rounding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import NonDecaying, PoleClash, PoleHit
from .loopgroup import ExtendedSolution, ProjectorField, SpacetimePoint, ward_evaluator
from .matrix import adjoint

DEFAULT_TOLERANCES = {
    "reality": 1e-9,
    "ward_residual": 1e-4,
    "lax_independence": 1e-5,
    "analytic_bt": 1e-4,
    "fundamental": 1e-5,
    "rationality": 1e-7,
    "energy_conservation": 2e-2,
}


@dataclass
class VerifyConfig:
    fd_step: float = 1e-4
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    sample_seed: int = 0
    n_points: int = 50
    n_lambdas: int = 5
    box: float = 3.0
    order_steps: tuple = (1e-2, 5e-3)
    quad_radius: float = 40.0
    quad_nodes: int = 48
    quad_rtol: float = 1e-3
    quad_max_nodes: int = 384

    def __post_init__(self):
        if not (1e-6 <= self.fd_step <= 1e-2):
            raise ValueError(f"fd_step must lie in [1e-6, 1e-2], got {self.fd_step}")
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(self.tolerances)
        self.tolerances = tol

    def tol(self, name: str) -> float:
        return self.tolerances[name]


@dataclass
class CheckReport:
    name: str
    max_residual: float
    samples: int
    passed: bool
    convergence_order: float | None = None
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{self.name} {self.max_residual:.2e} {'pass' if self.passed else 'fail'}"


def _report(name, values, tol, **kw) -> CheckReport:
    values = np.asarray(values, dtype=float)
    worst = float(np.max(values)) if values.size else 0.0
    if not np.isfinite(worst):
        worst = math.inf
    return CheckReport(name, worst, int(values.size), worst < tol, **kw)


# ---------------------------------------------------------------------------
# sampling


def sample_points(cfg: VerifyConfig, count: int | None = None, seed_offset: int = 0) -> SpacetimePoint:
    rng = np.random.default_rng(cfg.sample_seed + seed_offset)
    count = cfg.n_points if count is None else count
    x, y, t = rng.uniform(-cfg.box, cfg.box, size=(3, count))
    return SpacetimePoint(x, y, t)


def sample_lambdas(psi: ExtendedSolution, cfg: VerifyConfig, count: int | None = None, margin: float = 1.0):
    """Spectral parameters at distance >= margin from the poles and their conjugates.

    Near a conjugate pole psi is badly conditioned and finite differences of
    psi^-1 lose accuracy, hence the generous default margin.
    """
    rng = np.random.default_rng(cfg.sample_seed + 17)
    count = cfg.n_lambdas if count is None else count
    bad = list(psi.poles()) + [np.conj(z) for z in psi.poles()]
    out = []
    while len(out) < count:
        lam = complex(*rng.uniform(-3.0, 3.0, size=2))
        if all(abs(lam - q) >= margin for q in bad):
            out.append(lam)
    return out


# ---------------------------------------------------------------------------
# algebraic and PDE checks


def reality(psi: ExtendedSolution, p: SpacetimePoint, lambdas: Sequence[complex], cfg: VerifyConfig | None = None) -> CheckReport:
    """|| psi(conj lam)^* psi(lam) - I || over points and lambdas."""
    cfg = cfg or VerifyConfig()
    eye = np.eye(psi.n)
    res = []
    cache: dict = {}
    for lam in lambdas:
        a = psi.value(p, lam, cache)
        b = psi.value(p, np.conj(lam), cache)
        res.append(np.linalg.norm(adjoint(b) @ a - eye, axis=(-2, -1)).ravel())
    return _report("reality", np.concatenate(res), cfg.tol("reality"))


def _ward_stencil(J: Callable, p: SpacetimePoint, h: float) -> np.ndarray:
    j0 = J(p.x, p.y, p.t)
    jp = np.stack([J(p.x, p.y, p.t + h), J(p.x + h, p.y, p.t), J(p.x, p.y + h, p.t)])
    jm = np.stack([J(p.x, p.y, p.t - h), J(p.x - h, p.y, p.t), J(p.x, p.y - h, p.t)])
    if not (np.all(np.isfinite(j0)) and np.all(np.isfinite(jp)) and np.all(np.isfinite(jm))):
        raise PoleHit("finite-difference stencil reaches a singular point")
    return kernels.ward_residual(j0, jp, jm, h)


def ward_residual(J: Callable, p: SpacetimePoint, cfg: VerifyConfig | None = None) -> CheckReport:
    """(J^-1 J_t)_t - (J^-1 J_x)_x - (J^-1 J_y)_y - [J^-1 J_t, J^-1 J_y]."""
    cfg = cfg or VerifyConfig()
    r = _ward_stencil(J, p, cfg.fd_step)
    h1, h2 = cfg.order_steps
    r1 = _ward_stencil(J, p, h1)
    r2 = _ward_stencil(J, p, h2)
    good = r1 > 1e-11
    order = None
    if np.any(good):
        order = float(np.median(np.log(r1[good] / np.maximum(r2[good], 1e-300)) / math.log(h1 / h2)))
    return _report("ward_residual", r, cfg.tol("ward_residual"), convergence_order=order)


def ward_residual_at_steps(J: Callable, p: SpacetimePoint, steps: Sequence[float]) -> list[float]:
    return [float(np.max(_ward_stencil(J, p, h))) for h in steps]


# xyz components of the light-cone directions: u moves (y, t) by (1, 1)
_U_DIR = (0.0, 1.0, 1.0)
_V_DIR = (0.0, -1.0, 1.0)


def _shift(p: SpacetimePoint, d, s: float) -> SpacetimePoint:
    return p.shifted(d[0] * s, d[1] * s, d[2] * s)


def _fd(fn: Callable, p: SpacetimePoint, d, h: float):
    return (fn(_shift(p, d, h)) - fn(_shift(p, d, -h))) / (2 * h)


def lax_matrices(psi: ExtendedSolution, p: SpacetimePoint, lam: complex, h: float):
    """A = (lam psi_x - psi_u) psi^-1 and B = (lam psi_v - psi_x) psi^-1 by FD."""
    def val(q):
        return psi.value(q, lam)

    v0 = val(p)
    px = _fd(val, p, (1.0, 0.0, 0.0), h)
    pu = _fd(val, p, _U_DIR, h)
    pv = _fd(val, p, _V_DIR, h)
    inv = np.linalg.inv(v0)
    return (lam * px - pu) @ inv, (lam * pv - px) @ inv


def lax_independence(psi: ExtendedSolution, p: SpacetimePoint, lambdas: Sequence[complex] | None = None,
                     cfg: VerifyConfig | None = None, name: str = "lax_independence") -> CheckReport:
    """Largest pairwise deviation of A(lam), B(lam) across the lambda samples."""
    cfg = cfg or VerifyConfig()
    lambdas = sample_lambdas(psi, cfg) if lambdas is None else list(lambdas)
    for lam in lambdas:
        for z in psi.poles():
            if abs(lam - z) < 1e-6:
                raise PoleHit(f"lambda {lam} sits on pole {z}")
    mats = [lax_matrices(psi, p, lam, cfg.fd_step) for lam in lambdas]
    dev = np.zeros(p.shape)
    for (A1, B1), (A2, B2) in itertools.combinations(mats, 2):
        dev = np.maximum(dev, np.linalg.norm(A1 - A2, axis=(-2, -1)))
        dev = np.maximum(dev, np.linalg.norm(B1 - B2, axis=(-2, -1)))
    return _report(name, dev.ravel(), cfg.tol("lax_independence"))


def tail_check(psi: ExtendedSolution, cfg: VerifyConfig | None = None, p: SpacetimePoint | None = None) -> list[CheckReport]:
    """Lax check of each proper tail g_{l-1} ... g_0, l = 1..k-1."""
    cfg = cfg or VerifyConfig()
    p = sample_points(cfg) if p is None else p
    out = []
    for l in range(1, psi.k):
        tail = psi.tail(l)
        out.append(lax_independence(tail, p, sample_lambdas(tail, cfg), cfg, name=f"tail[{l}]"))
    return out


def analytic_bt_residual(psi: ExtendedSolution, z: complex, pi_field: ProjectorField, p: SpacetimePoint,
                         cfg: VerifyConfig | None = None) -> CheckReport:
    """pi^perp (z pi_x - pi_u - A pi) and pi^perp (z pi_v - pi_x - B pi) for seed psi."""
    cfg = cfg or VerifyConfig()
    h = cfg.fd_step
    lam = sample_lambdas(psi, cfg, 1)[0] if psi.k else 0.0
    A, B = lax_matrices(psi, p, lam, h)

    def proj(q):
        return pi_field.projector(q)

    P = proj(p)
    Px = _fd(proj, p, (1.0, 0.0, 0.0), h)
    Pu = _fd(proj, p, _U_DIR, h)
    Pv = _fd(proj, p, _V_DIR, h)
    perp = np.eye(P.shape[-1]) - P
    r1 = np.linalg.norm(perp @ (z * Px - Pu - A @ P), axis=(-2, -1))
    r2 = np.linalg.norm(perp @ (z * Pv - Px - B @ P), axis=(-2, -1))
    return _report("analytic_bt", np.maximum(r1, r2).ravel(), cfg.tol("analytic_bt"))


def fundamental_residual(psi: ExtendedSolution, z: complex, p: SpacetimePoint, cfg: VerifyConfig | None = None) -> CheckReport:
    """z V_x - V_u - A V and z V_v - V_x - B V for V = psi(., z)."""
    cfg = cfg or VerifyConfig()
    z = complex(z)
    if psi.has_pole(z):
        raise PoleClash(f"{z} is a pole of psi")
    h = cfg.fd_step
    lam = next(l for l in sample_lambdas(psi, cfg, 3) if abs(l - z) > 1e-3)
    A, B = lax_matrices(psi, p, lam, h)

    def val(q):
        return psi.value(q, z)

    V = val(p)
    Vx = _fd(val, p, (1.0, 0.0, 0.0), h)
    Vu = _fd(val, p, _U_DIR, h)
    Vv = _fd(val, p, _V_DIR, h)
    r1 = np.linalg.norm(z * Vx - Vu - A @ V, axis=(-2, -1))
    r2 = np.linalg.norm(z * Vv - Vx - B @ V, axis=(-2, -1))
    det = np.abs(np.linalg.det(V))
    return _report("fundamental", np.maximum(r1, r2).ravel(), cfg.tol("fundamental"),
                   extra={"min_abs_det": float(np.min(det))})


# ---------------------------------------------------------------------------
# energy


def energy_density_grid(J: Callable, x, y, t: float, h: float) -> np.ndarray:
    """Half the summed squared norms of J^-1 J_t, J^-1 J_x, J^-1 J_y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tt = np.full_like(x, float(t))
    return kernels.energy_density(
        J(x + h, y, tt), J(x - h, y, tt), J(x, y + h, tt), J(x, y - h, tt),
        J(x, y, tt + h), J(x, y, tt - h), h,
    )


def _graded_rule(radius: float, nodes: int, grading: float = 4.0):
    """Gauss-Legendre nodes in s mapped by x = c sinh(s) onto [-radius, radius]."""
    s, w = np.polynomial.legendre.leggauss(nodes)
    c = radius / math.sinh(grading)
    x = c * np.sinh(grading * s)
    return x, w * c * grading * np.cosh(grading * s)


def energy(J: Callable, t: float, cfg: VerifyConfig | None = None) -> float:
    """Energy on [-R, R]^2 by a refined tensor-product rule, with a tail guard."""
    cfg = cfg or VerifyConfig()
    R = cfg.quad_radius
    nodes = cfg.quad_nodes
    prev = None
    while True:
        x, w = _graded_rule(R, nodes)
        X, Y = np.meshgrid(x, x, indexing="ij")
        rho = energy_density_grid(J, X, Y, t, cfg.fd_step)
        val = float(np.sum(rho * np.outer(w, w)))
        if prev is not None and abs(val - prev) <= cfg.quad_rtol * max(abs(val), 1e-300):
            break
        if nodes >= cfg.quad_max_nodes:
            break
        prev = val
        nodes *= 2
    # density ~ r^-4 outside the window leaves about pi R^2 rho(R)
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    ring = energy_density_grid(J, R * np.cos(th), R * np.sin(th), t, cfg.fd_step)
    tail = math.pi * R * R * float(np.mean(ring))
    if val > 0 and tail > 0.05 * val:
        raise NonDecaying(f"energy tail estimate {tail:.3g} exceeds 5% of {val:.3g} at t={t}")
    return val


def energy_series(J: Callable, times: Sequence[float], cfg: VerifyConfig | None = None) -> list[tuple[float, float]]:
    return [(float(t), energy(J, t, cfg)) for t in times]


def energy_conservation(J: Callable, times: Sequence[float] = (-2.0, 0.0, 2.0), cfg: VerifyConfig | None = None) -> CheckReport:
    cfg = cfg or VerifyConfig()
    series = energy_series(J, times, cfg)
    vals = np.array([e for _, e in series])
    scale = float(np.max(np.abs(vals)))
    var = 0.0 if scale == 0 else float((vals.max() - vals.min()) / scale)
    return CheckReport("energy_conservation", var, len(vals), var < cfg.tol("energy_conservation"),
                       extra={"series": series})


# ---------------------------------------------------------------------------
# decay and rationality


def boundary_decay(J: Callable, t: float = 0.0, radii: Sequence[float] = (10, 20, 40, 80),
                   cfg: VerifyConfig | None = None, angles: int = 64) -> CheckReport:
    """Slope of log ||J - J_0|| against log r; J_0 is the mean over the largest circle."""
    radii = [float(r) for r in radii]
    if any(r < 10 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing and at least 10")
    th = np.linspace(0, 2 * np.pi, angles, endpoint=False)

    def ring(r):
        vals = J(r * np.cos(th), r * np.sin(th), np.full_like(th, float(t)))
        if not np.all(np.isfinite(vals)):
            raise PoleHit(f"J is singular on the circle r={r}")
        return vals

    J0 = ring(radii[-1]).mean(axis=0)
    dev = np.array([float(np.mean(np.linalg.norm(ring(r) - J0, axis=(-2, -1)))) for r in radii])
    if np.max(dev) < 1e-12:
        return CheckReport("boundary_decay", 0.0, len(radii), True, extra={"slope": "flat"})
    slope = float(np.polyfit(np.log(radii), np.log(np.maximum(dev, 1e-300)), 1)[0])
    ok = -1.5 <= slope <= -0.7
    return CheckReport("boundary_decay", abs(slope + 1.0), len(radii), ok, extra={"slope": slope})


def rationality_fit(f: Callable, degree_budget: int, half_length: float = 20.0, samples: int | None = None,
                    cfg: VerifyConfig | None = None, name: str = "rationality_fit",
                    extension: float = 0.5) -> CheckReport:
    """Fit p/q of type (d, d), d <= degree_budget, to a scalar f(s) on [-L, L].

    The linearized problem p(s_i) - f(s_i) q(s_i) = 0 is solved by SVD in a
    Chebyshev basis.  The fit is scored at the midpoints between nodes and
    on the extensions [L, (1 + extension) L] and its mirror: a rational
    identity keeps holding outside the window, while a good approximation of
    a transcendental function does not.
    """
    cfg = cfg or VerifyConfig()
    tol = cfg.tol("rationality")
    M = samples or max(4 * degree_budget + 16, 2 * degree_budget + 3)
    k = np.arange(M)
    sn = np.cos(np.pi * (k + 0.5) / M)[::-1]
    ext = np.linspace(1.0, 1.0 + extension, 17)[1:] if extension > 0 else np.zeros(0)
    sv = np.concatenate([0.5 * (sn[1:] + sn[:-1]), ext, -ext])
    fn = np.asarray(f(half_length * sn), dtype=complex)
    fv = np.asarray(f(half_length * sv), dtype=complex)
    if not (np.all(np.isfinite(fn)) and np.all(np.isfinite(fv))):
        raise PoleHit("insufficient regular samples on the line")
    scale = max(float(np.max(np.abs(fn))), float(np.max(np.abs(fv))), 1e-300)
    best, best_d = math.inf, None
    cheb = np.polynomial.chebyshev.chebvander
    for d in range(0, degree_budget + 1):
        Vn = cheb(sn, d)
        A = np.hstack([Vn, -fn[:, None] * Vn])
        _, _, Vh = np.linalg.svd(A)
        c = Vh[-1].conj()
        p_c, q_c = c[: d + 1], c[d + 1 :]
        Vv = cheb(sv, d)
        q = Vv @ q_c
        if np.min(np.abs(q)) < 1e-14 * np.max(np.abs(q)):
            continue
        res = float(np.max(np.abs(Vv @ p_c / q - fv))) / scale
        if res < best:
            best, best_d = res, d
        if res < tol:
            break
    return CheckReport(name, best, M, best < tol, extra={"degree": best_d})


def line_entry(J: Callable, i: int, j: int, origin, direction) -> Callable:
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)

    def f(s):
        s = np.asarray(s, dtype=float)
        return J(o[0] + s * d[0], o[1] + s * d[1], o[2] + s * d[2])[..., i, j]

    return f


def rationality_lines(n: int, cfg: VerifyConfig, count: int = 3):
    """(entry, origin, direction) triples used by the suite."""
    rng = np.random.default_rng(cfg.sample_seed + 29)
    entries = [(0, 0), (0, n - 1), (n - 1, 0)]
    out = []
    for idx in range(count):
        origin = rng.uniform(-1, 1, size=3)
        direction = rng.normal(size=3)
        out.append((entries[idx % len(entries)], origin, direction))
    return out


# ---------------------------------------------------------------------------
# suite


def _bt_fields(psi: ExtendedSolution):
    """(seed, z, transformed field) for every recorded algebraic BT."""
    return [(rec.parent, rec.z, rec.transformed_pi) for rec in psi.meta.get("bt", ())]


def run_suite(psi: ExtendedSolution, cfg: VerifyConfig | None = None, normalize_su: bool = False,
              energy_times: Sequence[float] | None = (-2.0, 0.0, 2.0), degree_budget: int = 16) -> list[CheckReport]:
    """All checks that apply to a constructed extended solution."""
    cfg = cfg or VerifyConfig()
    p = sample_points(cfg)
    J = ward_evaluator(psi, normalize_su)
    reports = [
        reality(psi, p, sample_lambdas(psi, cfg, 2), cfg),
        ward_residual(J, p, cfg),
        lax_independence(psi, p, None, cfg),
    ]
    reports += tail_check(psi, cfg, p)
    for seed, z, fld in _bt_fields(psi):
        reports.append(analytic_bt_residual(seed, z, fld, p, cfg))
    zf = _regular_lambda(psi)
    reports.append(fundamental_residual(psi, zf, p, cfg))
    reports.append(boundary_decay(J, 0.0, cfg=cfg))
    for (i, j), o, d in rationality_lines(psi.n, cfg):
        reports.append(rationality_fit(line_entry(J, i, j, o, d), degree_budget, cfg=cfg, name=f"rationality_fit[{i},{j}]"))
    if energy_times:
        reports.append(energy_conservation(J, energy_times, cfg))
    return reports


def _regular_lambda(psi: ExtendedSolution) -> complex:
    for cand in (2.5 + 2.5j, -2.5 + 2.5j, 3.0 + 0.5j, -3.0 - 0.5j, 4.0 + 4.0j):
        if all(abs(cand - q) > 1.0 and abs(cand - np.conj(q)) > 1.0 for q in psi.poles()):
            return cand
    raise PoleClash("no regular spectral parameter found")


def suite_passed(reports: Sequence[CheckReport]) -> bool:
    return all(r.passed for r in reports)


__all__ = [
    "VerifyConfig",
    "CheckReport",
    "sample_points",
    "sample_lambdas",
    "reality",
    "ward_residual",
    "ward_residual_at_steps",
    "lax_matrices",
    "lax_independence",
    "tail_check",
    "analytic_bt_residual",
    "fundamental_residual",
    "energy_density_grid",
    "energy",
    "energy_series",
    "energy_conservation",
    "boundary_decay",
    "rationality_fit",
    "line_entry",
    "run_suite",
    "suite_passed",
]
