import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ulch import _pykernels
from ulch._backend import BACKEND

ck = pytest.importorskip("ulch._ckernels")

floats = st.floats(-3, 3, allow_nan=False)


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(3, 40)), elements=floats),
       st.integers(0, 6), st.floats(0, 1))
def test_window_sum_backends_agree(a, half, edge):
    w = np.ones(2 * half + 1)
    w[0] = w[-1] = edge
    assert np.allclose(ck.periodic_window_sum(a, w), _pykernels.periodic_window_sum(a, w), atol=1e-12)


def test_window_sum_wraps_longer_than_row():
    a = np.arange(5.0)[None, :]
    w = np.ones(9)
    # every tap covers the whole row, some entries twice
    out = _pykernels.periodic_window_sum(a, w)
    assert np.allclose(out, ck.periodic_window_sum(a, w))
    assert np.allclose(out.sum(), 9 * a.sum())


@given(arrays(np.float64, st.integers(1, 50), elements=floats),
       st.lists(st.floats(-2, 2), min_size=1, max_size=8))
def test_poly_backends_agree(u, coeffs):
    f1, d1 = ck.poly_f_fprime(u, coeffs)
    f2, d2 = _pykernels.poly_f_fprime(u, coeffs)
    assert np.allclose(f1, f2, rtol=1e-12, atol=1e-12)
    assert np.allclose(d1, d2, rtol=1e-12, atol=1e-12)


def test_poly_matches_numpy_polyval():
    u = np.linspace(-2, 2, 11)
    c = (0.5, -1.0, 0.0, 2.0)
    f, fp = _pykernels.poly_f_fprime(u, c)
    assert np.allclose(f, np.polyval(c[::-1], u))
    assert np.allclose(fp, np.polyval(np.polyder(np.array(c[::-1])), u))


@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(-0.999, 0.999)),
       st.floats(1.01, 4.0), st.floats(0, 3))
def test_singular_backends_agree(u, l, alpha):
    f1, d1 = ck.singular_f_fprime(u, l, alpha)
    f2, d2 = _pykernels.singular_f_fprime(u, l, alpha)
    assert np.allclose(f1, f2, rtol=1e-11)
    assert np.allclose(d1, d2, rtol=1e-11)


def test_kernels_accept_read_only_and_shaped_input():
    u = np.linspace(-0.5, 0.5, 12).reshape(3, 4)
    u.setflags(write=False)
    f, fp = ck.poly_f_fprime(u, (0.0, -1.0, 0.0, 1.0))
    assert f.shape == (3, 4)
    assert np.allclose(f, u**3 - u)


@pytest.mark.skipif(bool(os.environ.get("ULCH_PURE_PYTHON")), reason="fallback forced")
def test_compiled_backend_selected():
    assert BACKEND == "cython"


def test_pure_python_fallback_env():
    env = dict(os.environ, ULCH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ulch; print(ulch.BACKEND)"], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
