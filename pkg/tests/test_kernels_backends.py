import os
import subprocess
import sys

import numpy as np
import pytest

from fembem.kernels import (OPERATOR_NAMES, assemble_operators, get_backend)
from fembem.meshes import cube_mesh, extract_boundary
from fembem.tracespace import TraceSpaces


def _spaces(n=2, p=1):
    return TraceSpaces(extract_boundary(cube_mesh(1.0, n)), p)


def _have_cython():
    try:
        get_backend("cython")
        return True
    except ImportError:
        return False


needs_cython = pytest.mark.skipif(not _have_cython(),
                                  reason="compiled backend not built")


def test_operator_name_set():
    spaces = _spaces()
    ops = assemble_operators(spaces, 1.0, backend="python")
    assert set(ops) == set(OPERATOR_NAMES)
    assert ops["V_ww"].shape == (spaces.nw, spaces.nw)
    assert ops["W_zz"].shape == (spaces.nz, spaces.nz)
    assert ops["K_wz"].shape == (spaces.nw, spaces.nz)
    assert ops["Kp_zw"].shape == (spaces.nz, spaces.nw)


@needs_cython
@pytest.mark.parametrize("k", [0.0, 2.0, 1.5 + 0.3j])
def test_backend_equivalence(k):
    spaces = _spaces(2)
    a = assemble_operators(spaces, k, backend="python")
    b = assemble_operators(spaces, k, backend="cython")
    for name in OPERATOR_NAMES:
        diff = (np.linalg.norm(a[name] - b[name])
                / max(np.linalg.norm(a[name]), 1e-300))
        assert diff < 1e-12, f"{name}: {diff:.2e}"


@needs_cython
def test_thread_determinism():
    spaces = _spaces(2)
    serial = assemble_operators(spaces, 2.0, backend="cython", threads=1)
    for threads in (2, 4):
        par = assemble_operators(spaces, 2.0, backend="cython",
                                 threads=threads)
        for name in OPERATOR_NAMES:
            assert np.array_equal(serial[name], par[name]), name


@needs_cython
def test_higher_degree_equivalence():
    spaces = _spaces(2, p=2)
    a = assemble_operators(spaces, 1.5, backend="python")
    b = assemble_operators(spaces, 1.5, backend="cython")
    for name in OPERATOR_NAMES:
        diff = (np.linalg.norm(a[name] - b[name])
                / max(np.linalg.norm(a[name]), 1e-300))
        assert diff < 1e-12, f"{name}: {diff:.2e}"


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_pure_python_env_override():
    code = ("import fembem.kernels as K; "
            "print(K.get_backend()[1])")
    env = dict(os.environ, FEMBEM_PURE_PY="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_singular_quadrature_refinement_converges():
    # independently assembled K' approaches K^T as the singular order grows
    spaces = _spaces(2)
    errs = []
    for so in (3, 5):
        ops = assemble_operators(spaces, 0.0, sing_order=so)
        errs.append(np.linalg.norm(ops["Kp_zw"] - ops["K_wz"].T)
                    / np.linalg.norm(ops["K_wz"]))
    assert errs[1] < 0.5 * errs[0]
