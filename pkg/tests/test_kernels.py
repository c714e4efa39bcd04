import os
import subprocess
import sys

import numpy as np
import pytest

from wardsoliton import kernels

numba_impl = pytest.importorskip("wardsoliton.kernels._numba")
numpy_impl = kernels.backend_module("numpy")


def cmat(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def unitary_batch(rng, m, n):
    Q, _ = np.linalg.qr(cmat(rng, m, n, n))
    return Q


@pytest.fixture
def rng():
    return np.random.default_rng(3)


def test_chain_product_backends_agree(rng):
    perps = cmat(rng, 3, 4, 5, 2, 2)
    coeffs = cmat(rng, 3, 4, 5)
    a = kernels.chain_product(perps, coeffs, impl=numpy_impl)
    b = kernels.chain_product(perps, coeffs, impl=numba_impl)
    assert a.shape == (4, 5, 2, 2)
    assert np.max(np.abs(a - b)) < 1e-12
    ref = np.eye(2) + coeffs[0, 1, 2] * perps[0, 1, 2]
    ref = (np.eye(2) + coeffs[1, 1, 2] * perps[1, 1, 2]) @ ref
    ref = (np.eye(2) + coeffs[2, 1, 2] * perps[2, 1, 2]) @ ref
    assert np.allclose(a[1, 2], ref)


def test_rank_one_projectors_backends_agree(rng):
    v = cmat(rng, 7, 3)
    a = kernels.rank_one_projectors(v, impl=numpy_impl)
    b = kernels.rank_one_projectors(v, impl=numba_impl)
    assert np.max(np.abs(a - b)) < 1e-12
    assert np.allclose(a @ a, a) and np.allclose(np.trace(a, axis1=-2, axis2=-1), 1)


def test_energy_density_backends_agree(rng):
    Js = [unitary_batch(rng, 6, 2) for _ in range(6)]
    a = kernels.energy_density(*Js, 1e-3, impl=numpy_impl)
    b = kernels.energy_density(*Js, 1e-3, impl=numba_impl)
    assert a.shape == (6,) and np.all(a >= 0)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(a)


def test_ward_residual_backends_agree(rng):
    j0 = unitary_batch(rng, 5, 3)
    jp = np.stack([unitary_batch(rng, 5, 3) for _ in range(3)])
    jm = np.stack([unitary_batch(rng, 5, 3) for _ in range(3)])
    a = kernels.ward_residual(j0, jp, jm, 1e-2, impl=numpy_impl)
    b = kernels.ward_residual(j0, jp, jm, 1e-2, impl=numba_impl)
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(a)


def test_empty_chain_is_identity():
    out = kernels.chain_product(np.zeros((0, 4, 2, 2)), np.zeros((0, 4)))
    assert np.allclose(out, np.eye(2))


def _run(env_value):
    env = dict(os.environ, WSF_KERNELS=env_value)
    code = "import wardsoliton.kernels as k; print(k.BACKEND)"
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)


def test_env_flag_selects_backend():
    assert _run("numpy").stdout.strip() == "numpy"
    assert _run("numba").stdout.strip() == "numba"


def test_env_flag_rejects_unknown_value():
    res = _run("fortran")
    assert res.returncode != 0 and "WSF_KERNELS" in res.stderr
