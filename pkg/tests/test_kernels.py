import os
import subprocess
import sys

import numpy as np
import pytest

from liptree import _kernels
from liptree.gibbsmc import tree_graph
from liptree.treesampler import level_tables


def test_env_flag_disables_numba():
    env = dict(os.environ, LIPTREE_NUMBA="0")
    out = subprocess.run([sys.executable, "-c",
                          "from liptree import _kernels; print(_kernels.NUMBA_ENABLED)"],
                         env=env, capture_output=True, text=True, check=True).stdout
    assert out.strip() == "False"


@pytest.mark.parametrize("d", [2, 5, 8])
def test_psi_iterate_backends_agree(d):
    x0 = np.zeros(32)
    kind = _kernels.norm_kind(d)
    a = _kernels.psi_iterate(x0, d, 300, kind, use_numba=False)
    b = _kernels.psi_iterate(x0, d, 300, kind, use_numba=True)
    assert np.allclose(a[0], b[0], rtol=0, atol=1e-13)
    assert np.allclose(a[1], b[1], rtol=0, atol=1e-13)
    assert a[4] == b[4]


def test_norm_kind():
    assert [_kernels.norm_kind(d) for d in (2, 3, 7, 8)] == [
        _kernels.NORM_SUP, _kernels.NORM_FIRST_PLUS_SUP, _kernels.NORM_FIRST_PLUS_SUP,
        _kernels.NORM_SUP]


@pytest.mark.parametrize("M", [1, 2])
def test_expand_level_backends_agree(M):
    tab = level_tables(5, 3, {0}, M=M)
    rng = np.random.default_rng(M)
    parent = np.full((200, 9), -tab.offset, dtype=np.int64)
    u = rng.random((200, 27))
    a = _kernels.expand_level(parent, tab.cum[2], u, 3, M, use_numba=False)
    b = _kernels.expand_level(parent, tab.cum[2], u, 3, M, use_numba=True)
    assert (a == b).all()
    assert (np.abs(a - parent[:, :1]) <= M).all()


def test_heat_bath_backends_agree():
    g = tree_graph(2, 4).with_ab(0, 1)
    lo, _ = g.propagate()
    klo, khi = g.intervals()
    indptr, indices = g.csr()
    rng = np.random.default_rng(0)
    a = np.tile(lo, (8, 1))
    b = a.copy()
    for _ in range(10):
        u = rng.random((8, g.n))
        _kernels.heat_bath_sweep(a, indptr, indices, klo, khi, 1, u, use_numba=False)
        _kernels.heat_bath_sweep(b, indptr, indices, klo, khi, 1, u, use_numba=True)
    assert (a == b).all()


def test_benchmark_runs():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = subprocess.run([sys.executable, os.path.join(root, "benchmarks", "bench_kernels.py"),
                          "--repeat", "1"], capture_output=True, text=True, check=True,
                         timeout=600).stdout
    assert "psi_iterate" in out and "heat_bath" in out
