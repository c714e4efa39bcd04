"""numba versions of the hot kernels; same signatures as the numpy ones."""

import numpy as np
from numba import njit


@njit(cache=True)
def chain_product(perps, coeffs):
    k, N, n, _ = perps.shape
    out = np.zeros((N, n, n), dtype=np.complex128)
    acc = np.empty((n, n), dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    for p in range(N):
        for a in range(n):
            for b in range(n):
                acc[a, b] = 1.0 if a == b else 0.0
        for j in range(k):
            c = coeffs[j, p]
            for a in range(n):
                for b in range(n):
                    s = 0.0j
                    for m in range(n):
                        s += perps[j, p, a, m] * acc[m, b]
                    tmp[a, b] = acc[a, b] + c * s
            for a in range(n):
                for b in range(n):
                    acc[a, b] = tmp[a, b]
        out[p] = acc
    return out


@njit(cache=True)
def rank_one_projectors(v):
    N, n = v.shape
    out = np.empty((N, n, n), dtype=np.complex128)
    for p in range(N):
        s = 0.0
        for a in range(n):
            s += v[p, a].real ** 2 + v[p, a].imag ** 2
        s = 1.0 if s == 0.0 else s
        for a in range(n):
            for b in range(n):
                out[p, a, b] = v[p, a] * np.conj(v[p, b]) / s
    return out


@njit(cache=True)
def energy_density(jxp, jxm, jyp, jym, jtp, jtm, h):
    N, n, _ = jxp.shape
    out = np.empty(N)
    w = 1.0 / (2.0 * h)
    for p in range(N):
        s = 0.0
        for a in range(n):
            for b in range(n):
                d = (jxp[p, a, b] - jxm[p, a, b]) * w
                s += d.real ** 2 + d.imag ** 2
                d = (jyp[p, a, b] - jym[p, a, b]) * w
                s += d.real ** 2 + d.imag ** 2
                d = (jtp[p, a, b] - jtm[p, a, b]) * w
                s += d.real ** 2 + d.imag ** 2
        out[p] = 0.5 * s
    return out


@njit(cache=True)
def _matmul_into(a, b, out):
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            s = 0.0j
            for k in range(n):
                s += a[i, k] * b[k, j]
            out[i, j] = s


@njit(cache=True)
def _inverse_into(m, work, out):
    """Gauss-Jordan with partial pivoting; avoids a LAPACK call per point."""
    n = m.shape[0]
    for i in range(n):
        for j in range(n):
            work[i, j] = m[i, j]
            out[i, j] = 1.0 if i == j else 0.0
    for c in range(n):
        piv = c
        best = abs(work[c, c])
        for r in range(c + 1, n):
            if abs(work[r, c]) > best:
                piv, best = r, abs(work[r, c])
        if piv != c:
            for j in range(n):
                work[c, j], work[piv, j] = work[piv, j], work[c, j]
                out[c, j], out[piv, j] = out[piv, j], out[c, j]
        d = 1.0 / work[c, c]
        for j in range(n):
            work[c, j] *= d
            out[c, j] *= d
        for r in range(n):
            if r != c:
                f = work[r, c]
                if f != 0:
                    for j in range(n):
                        work[r, j] -= f * work[c, j]
                        out[r, j] -= f * out[c, j]


@njit(cache=True)
def ward_residual(j0, jp, jm, h):
    N, n, _ = j0.shape
    out = np.empty(N)
    inv = np.empty((n, n), dtype=np.complex128)
    work = np.empty((n, n), dtype=np.complex128)
    d1 = np.empty((n, n), dtype=np.complex128)
    d2 = np.empty((n, n), dtype=np.complex128)
    a = np.empty((3, n, n), dtype=np.complex128)
    t1 = np.empty((n, n), dtype=np.complex128)
    t2 = np.empty((n, n), dtype=np.complex128)
    res = np.empty((n, n), dtype=np.complex128)
    w1 = 1.0 / (2 * h)
    w2 = 1.0 / (h * h)
    for p in range(N):
        _inverse_into(j0[p], work, inv)
        res[:, :] = 0.0
        for d in range(3):
            for i in range(n):
                for j in range(n):
                    d1[i, j] = (jp[d, p, i, j] - jm[d, p, i, j]) * w1
                    d2[i, j] = (jp[d, p, i, j] - 2 * j0[p, i, j] + jm[d, p, i, j]) * w2
            _matmul_into(inv, d1, a[d])
            _matmul_into(inv, d2, t1)
            _matmul_into(a[d], a[d], t2)
            sign = 1.0 if d == 0 else -1.0
            for i in range(n):
                for j in range(n):
                    res[i, j] += sign * (t1[i, j] - t2[i, j])
        # commutator [A_t, A_y]
        _matmul_into(a[0], a[2], t1)
        _matmul_into(a[2], a[0], t2)
        s = 0.0
        for i in range(n):
            for j in range(n):
                r = res[i, j] - (t1[i, j] - t2[i, j])
                s += r.real ** 2 + r.imag ** 2
        out[p] = np.sqrt(s)
    return out
