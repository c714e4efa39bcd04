"""Command-line front end: build, verify, sample, frames, factor.

Exit codes: 0 success, 1 verification failure, 2 input or construction error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import specfile
from .backlund import probe_points
from .errors import WardSolitonError
from .loopgroup import (
    ExtendedSolution,
    PerturbedField,
    SimpleElementField,
    _same_pole_runs,
    _fmt_pole,
    is_minimal,
    minimal_factorize,
    pole_data,
    ward_evaluator,
)
from .verify import VerifyConfig, energy_density_grid, run_suite, suite_passed

DEFAULT_GRID = (-10.0, 10.0, 201, -10.0, 10.0, 201)
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def parse_grid(text: str | None):
    if text is None:
        return DEFAULT_GRID
    parts = text.split(",")
    if len(parts) != 6:
        raise InputError("--grid expects xmin,xmax,nx,ymin,ymax,ny")
    try:
        x0, x1, nx, y0, y1, ny = (float(parts[0]), float(parts[1]), int(parts[2]),
                                  float(parts[3]), float(parts[4]), int(parts[5]))
    except ValueError as exc:
        raise InputError(f"--grid: {exc}") from exc
    if nx < 2 or ny < 2 or not (x1 > x0) or not (y1 > y0):
        raise InputError("--grid needs counts >= 2 and nonempty ranges")
    return x0, x1, nx, y0, y1, ny


def parse_times(text: str | None) -> list[float]:
    if text is None:
        return [0.0]
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(f"--t: {exc}") from exc
    if not vals:
        raise InputError("--t needs at least one value")
    return vals


_ENTRY = re.compile(r"^entry\((\d+),(\d+),(re|im|abs)\)$")


def parse_quantity(text: str):
    text = text.replace(" ", "")
    if text in ("energy_density", "drift"):
        return (text,)
    m = _ENTRY.match(text)
    if not m:
        raise InputError(f"--quantity must be energy_density, drift or entry(i,j,re|im|abs), got {text!r}")
    return ("entry", int(m.group(1)), int(m.group(2)), m.group(3))


def resolve_seed(arg: int | None) -> int:
    env = os.environ.get("WSF_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"WSF_SEED must be an integer, got {env!r}") from exc
    return 0 if arg is None else int(arg)


def load_solution(path: str, su_flag: bool = False):
    """(doc, psi, su) from a construction file or a persisted record."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    doc = raw["spec"] if isinstance(raw, dict) and raw.get("format") == "wardsoliton-record/1" else raw
    psi = specfile.build(doc)
    return doc, psi, bool(su_flag or doc.get("su_normalize", False))


def corrupt(psi: ExtendedSolution, seed: int, eps: float = 1e-2) -> ExtendedSolution:
    """Replace the last factor's projector by a perturbed one (negative control)."""
    last = psi.factors[-1]
    bad = SimpleElementField(last.z, PerturbedField(last.pi, eps, seed))
    return ExtendedSolution(psi.factors[:-1] + (bad,), psi.n, psi.prefactors, psi.provenance, {})


# ---------------------------------------------------------------------------
# summaries and grids


def summary(psi: ExtendedSolution) -> dict:
    pd = pole_data(psi)
    return {
        "degree": pd.degree,
        "poles": str(pd),
        "ranks": [f.pi.rank for f in psi.factors],
        "provenance": psi.provenance,
        "n": psi.n,
    }


def summary_line(s: dict) -> str:
    ranks = "[" + ",".join(str(r) for r in s["ranks"]) + "]"
    return f"degree {s['degree']}, poles {s['poles']}, ranks {ranks}"


def grid_axes(grid):
    x0, x1, nx, y0, y1, ny = grid
    return np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)


def sample_grid(J, grid, t: float, quantity, h: float) -> np.ndarray:
    """Values on the grid, shape (ny, nx); cells that fail to evaluate are nan."""
    xs, ys = grid_axes(grid)
    X, Y = np.meshgrid(xs, ys)
    with np.errstate(all="ignore"):
        if quantity[0] == "energy_density":
            out = energy_density_grid(J, X, Y, t, h)
        elif quantity[0] == "drift":
            T = np.full_like(X, float(t))
            out = np.linalg.norm(J(X, Y, T) - J(X, Y, np.zeros_like(X)), axis=(-2, -1))
        else:
            _, i, j, part = quantity
            vals = J(X, Y, np.full_like(X, float(t)))
            n = vals.shape[-1]
            if i >= n or j >= n:
                raise InputError(f"entry ({i},{j}) outside a {n}x{n} matrix")
            e = vals[..., i, j]
            out = {"re": e.real, "im": e.imag, "abs": np.abs(e)}[part]
    out = np.asarray(out, dtype=float)
    return np.where(np.isfinite(out), out, np.nan)


def _fmt(v: float) -> str:
    return "nan" if np.isnan(v) else f"{v:.12e}"


def grid_csv(values: np.ndarray, grid, t: float, quantity_text: str) -> str:
    x0, x1, nx, y0, y1, ny = grid
    lines = [f"# {x0!r} {x1!r} {nx} {y0!r} {y1!r} {ny} {float(t)!r} {quantity_text}"]
    for row in values:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def read_grid_csv(path) -> tuple[dict, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    head = text[0][2:].split(" ")
    meta = {"x_min": float(head[0]), "x_max": float(head[1]), "nx": int(head[2]),
            "y_min": float(head[3]), "y_max": float(head[4]), "ny": int(head[5]),
            "t": float(head[6]), "quantity": head[7]}
    vals = np.array([[float(v) for v in row.split(",")] for row in text[1:]])
    return meta, vals


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _sample_paths(out: str, count: int) -> list[Path]:
    p = Path(out)
    if count == 1:
        return [p]
    stem, suf = (p.stem, p.suffix) if p.suffix else (p.name, ".csv")
    return [p.with_name(f"{stem}_{i:04d}{suf}") for i in range(count)]


# ---------------------------------------------------------------------------
# commands


def cmd_build(args) -> int:
    doc, psi, _ = load_solution(args.spec, args.su_normalize)
    s = summary(psi)
    print(summary_line(s))
    print(f"provenance {s['provenance']}")
    if args.out:
        _atomic_write(Path(args.out), json.dumps(specfile.record(doc, psi, s), indent=2, sort_keys=True) + "\n")
        print(f"record {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    doc, psi, su = load_solution(args.spec, args.su_normalize)
    seed = resolve_seed(args.seed)
    try:
        cfg = VerifyConfig(fd_step=args.fd_step, sample_seed=seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.debug_corrupt:
        psi = corrupt(psi, seed)
    energy_times = None if args.skip_energy else (-2.0, 0.0, 2.0)
    reports = run_suite(psi, cfg, su, energy_times=energy_times)
    for r in reports:
        print(r.line())
    ok = suite_passed(reports)
    print("suite pass" if ok else "suite fail")
    return EXIT_OK if ok else EXIT_FAIL


def _sampler(args):
    _, psi, su = load_solution(args.spec, args.su_normalize)
    grid = parse_grid(args.grid)
    q = parse_quantity(args.quantity)
    if not (1e-6 <= args.fd_step <= 1e-2):
        raise InputError("--fd-step must lie in [1e-6, 1e-2]")
    return ward_evaluator(psi, su), grid, q


def cmd_sample(args) -> int:
    J, grid, q = _sampler(args)
    times = parse_times(args.t)
    paths = _sample_paths(args.out, len(times))
    qtext = args.quantity.replace(" ", "")
    for t, path in zip(times, paths):
        vals = sample_grid(J, grid, t, q, args.fd_step)
        _atomic_write(path, grid_csv(vals, grid, t, qtext))
        frac = float(np.mean(np.isnan(vals)))
        print(f"{path} t={t!r} masked={frac:.4f}")
    return EXIT_OK


def frame_times(t_start: float, t_end: float, steps: int) -> list[float]:
    """``steps`` intervals, hence steps + 1 frames; a zero-length range gives one frame."""
    if steps < 0:
        raise InputError("--steps must be non-negative")
    if steps == 0 or t_end == t_start:
        return [float(t_start)]
    return [float(v) for v in np.linspace(t_start, t_end, steps + 1)]


def cmd_frames(args) -> int:
    J, grid, q = _sampler(args)
    times = frame_times(args.t_start, args.t_end, args.steps)
    out = Path(args.out)
    qtext = args.quantity.replace(" ", "")
    files = []
    for idx, t in enumerate(times):
        name = f"frame_{idx:04d}.csv"
        vals = sample_grid(J, grid, t, q, args.fd_step)
        _atomic_write(out / name, grid_csv(vals, grid, t, qtext))
        files.append({"file": name, "t": t})
    x0, x1, nx, y0, y1, ny = grid
    manifest = {"grid": {"x_min": x0, "x_max": x1, "nx": nx, "y_min": y0, "y_max": y1, "ny": ny},
                "quantity": qtext, "frames": files}
    _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    print(f"{len(files)} frames in {out}")
    return EXIT_OK


def cmd_factor(args) -> int:
    _, psi, _ = load_solution(args.spec, False)
    p = probe_points(1).take(0)
    cache: dict = {}
    for z, idx in _same_pole_runs(psi):
        chain = [psi.factors[i] for i in idx]
        mats = [f.pi.projector(p, cache) for f in chain]
        m, taus = minimal_factorize(chain, p)
        minimal = is_minimal(mats)
        rk = ",".join(str(t.rank) for t in taus)
        print(f"pole {_fmt_pole(z)}: prefactor exponent {m}, factors: {len(taus)}, ranks [{rk}], "
              f"input minimal {'yes' if minimal else 'no'}")
    for z, mult in psi.prefactors:
        print(f"blaschke {_fmt_pole(z)}: exponent {mult}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wardsoliton", description="Exact Ward solitons and unitons from rational data.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="construction file or build record (JSON)")
        p.add_argument("--seed", type=int, default=None, help="sampling seed (WSF_SEED overrides)")
        p.add_argument("--fd-step", type=float, default=1e-4, help="finite-difference step")
        p.add_argument("--su-normalize", action="store_true", help="scale J into SU(n)")
        return p

    b = common(sub.add_parser("build", help="construct and summarize"))
    b.add_argument("--out", help="write a reloadable construction record")
    b.set_defaults(func=cmd_build)

    v = common(sub.add_parser("verify", help="run the verification suite"))
    v.add_argument("--skip-energy", action="store_true", help="omit the energy conservation check")
    v.add_argument("--debug-corrupt", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    for name, fn, helptext in (("sample", cmd_sample, "sample a quantity onto grids"),
                               ("frames", cmd_frames, "write an animation frame sequence")):
        s = common(sub.add_parser(name, help=helptext))
        s.add_argument("--grid", help="xmin,xmax,nx,ymin,ymax,ny (default -10,10,201,-10,10,201)")
        s.add_argument("--quantity", default="energy_density", help="energy_density | drift | entry(i,j,re|im|abs)")
        s.add_argument("--out", required=True, help="output file (sample) or directory (frames)")
        s.set_defaults(func=fn)
        if name == "sample":
            s.add_argument("--t", help="comma-separated times (default 0)")
        else:
            s.add_argument("--t-start", type=float, default=0.0)
            s.add_argument("--t-end", type=float, default=1.0)
            s.add_argument("--steps", type=int, default=10)

    f = common(sub.add_parser("factor", help="minimal factorization listing"))
    f.set_defaults(func=cmd_factor)
    return ap


_VALUE_FLAGS = ("--t", "--grid", "--t-start", "--t-end")


def _join_values(argv: list[str]) -> list[str]:
    """Glue values starting with '-' to their flag so argparse accepts them."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = ap.parse_args(_join_values(argv))
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, WardSolitonError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
