"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --points 20000 --repeat 5

Prints one line per kernel with the best time of each backend, the speedup
and the largest absolute difference between the two results.
"""

import argparse
import time

import numpy as np

from wardsoliton import kernels


def _inputs(N: int, n: int, k: int, seed: int):
    rng = np.random.default_rng(seed)

    def cmat(*shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    v = cmat(k, N, n)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    perps = np.eye(n) - v[..., :, None] * v[..., None, :].conj()
    coeffs = cmat(k, N)
    q, _ = np.linalg.qr(cmat(N, n, n))
    jets = [q + 1e-3 * cmat(N, n, n) for _ in range(6)]
    jp = np.stack([q + 1e-3 * cmat(N, n, n) for _ in range(3)])
    jm = np.stack([q + 1e-3 * cmat(N, n, n) for _ in range(3)])
    return {
        "chain_product": (perps, coeffs),
        "rank_one_projectors": (v[0],),
        "energy_density": (*jets, 1e-3),
        "ward_residual": (q, jp, jm, 1e-3),
    }


def _best(fn, args, repeat: int) -> tuple[float, np.ndarray]:
    out = fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(points: int = 20000, n: int = 2, k: int = 4, repeat: int = 5, seed: int = 1) -> list[dict]:
    data = _inputs(points, n, k, seed)
    np_mod, nb_mod = kernels.backend_module("numpy"), kernels.backend_module("numba")
    rows = []
    for name, args in data.items():
        wrapper = getattr(kernels, name)
        t_np, r_np = _best(lambda *a: wrapper(*a, impl=np_mod), args, repeat)
        t_nb, r_nb = _best(lambda *a: wrapper(*a, impl=nb_mod), args, repeat)
        rows.append({"kernel": name, "numpy_s": t_np, "numba_s": t_nb, "speedup": t_np / t_nb,
                     "max_abs_diff": float(np.max(np.abs(r_np - r_nb)))})
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--n", type=int, default=2, help="matrix size")
    ap.add_argument("--k", type=int, default=4, help="factors in the chain product")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"points={args.points} n={args.n} k={args.k}")
    print(f"{'kernel':22s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for r in run(args.points, args.n, args.k, args.repeat):
        print(f"{r['kernel']:22s} {1e3 * r['numpy_s']:11.3f} {1e3 * r['numba_s']:11.3f} "
              f"{r['speedup']:8.2f} {r['max_abs_diff']:10.2e}")


if __name__ == "__main__":
    main()
