"""Pure-numpy reference implementations of the hot kernels."""

import numpy as np


def chain_product(perps, coeffs):
    """prod_{j=k-1..0} (I + coeffs[j] perps[j]) for stacks (k, N, n, n), (k, N)."""
    k, N, n, _ = perps.shape
    out = np.broadcast_to(np.eye(n, dtype=complex), (N, n, n)).copy()
    for j in range(k):
        out = out + coeffs[j][:, None, None] * (perps[j] @ out)
    return out


def rank_one_projectors(v):
    """Projectors onto the lines spanned by the rows of v (N, n)."""
    nrm = np.sqrt(np.sum(np.abs(v) ** 2, axis=1))
    u = v / np.where(nrm == 0, 1.0, nrm)[:, None]
    return u[:, :, None] * np.conj(u[:, None, :])


def energy_density(jxp, jxm, jyp, jym, jtp, jtm, h):
    """Half the summed squared FD derivative norms of a unitary field."""
    s = 0.0
    for a, b in ((jxp, jxm), (jyp, jym), (jtp, jtm)):
        d = (a - b) / (2 * h)
        s = s + np.sum(np.abs(d) ** 2, axis=(1, 2))
    return 0.5 * s


def ward_residual(j0, jp, jm, h):
    """Frobenius norm of the Ward operator from a 7-point stencil.

    jp[d], jm[d] hold J at p +/- h e_d for d = t, x, y; shapes (3, N, n, n).
    """
    inv = np.linalg.inv(j0)
    terms = []
    firsts = []
    for d in range(3):
        d1 = (jp[d] - jm[d]) / (2 * h)
        d2 = (jp[d] - 2 * j0 + jm[d]) / (h * h)
        a = inv @ d1
        firsts.append(a)
        terms.append(inv @ d2 - a @ a)
    at, ay = firsts[0], firsts[2]
    res = terms[0] - terms[1] - terms[2] - (at @ ay - ay @ at)
    return np.sqrt(np.sum(np.abs(res) ** 2, axis=(1, 2)))
