import os
import subprocess
import sys

import numpy as np
import pytest

from kcontract import _kernels
from kcontract.space import IndexBasis


@pytest.mark.skipif(not _kernels.USE_JIT, reason="numba path disabled")
def test_jit_matches_python(rng):
    a = 1.0 / np.arange(1, 40)
    np.testing.assert_allclose(_kernels.reciprocal_series_jit(a), _kernels.reciprocal_series_py(a), rtol=1e-14)
    b = IndexBasis(3, 5)
    np.testing.assert_array_equal(_kernels.shift_targets(b.indices), _kernels.shift_targets_py(b.indices))
    pts = rng.normal(size=(7, 3)) + 1j * rng.normal(size=(7, 3))
    np.testing.assert_allclose(_kernels.monomials(pts, b.indices), _kernels.monomials_py(pts, b.indices), rtol=1e-13)
    t_star = (rng.normal(size=(3, 4, 4)) + 1j * rng.normal(size=(3, 4, 4))) / 4
    parent, direction = b.parents
    np.testing.assert_allclose(_kernels.adjoint_powers(t_star, parent, direction),
                               _kernels.adjoint_powers_py(t_star, parent, direction), atol=1e-13)


def test_adjoint_powers_are_products(rng):
    b = IndexBasis(2, 4)
    t_star = (rng.normal(size=(2, 3, 3)) + 1j * rng.normal(size=(2, 3, 3))) / 3
    # commuting pair so products are order independent
    t_star[1] = t_star[0] @ t_star[0] + 0.5 * t_star[0]
    parent, direction = b.parents
    out = _kernels.adjoint_powers(t_star, parent, direction)
    for k, (i, j) in enumerate(b.indices):
        expected = np.linalg.matrix_power(t_star[0], i) @ np.linalg.matrix_power(t_star[1], j)
        np.testing.assert_allclose(out[k], expected, atol=1e-12)


def test_disable_flag_selects_python_path():
    env = dict(os.environ, KCONTRACT_DISABLE_JIT="1")
    code = ("from kcontract import _kernels as k; "
            "assert not k.USE_JIT; assert k.monomials is k.monomials_py; print('ok')")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "ok"


def test_benchmark_script_runs(capsys):
    import importlib.util
    import pathlib
    path = pathlib.Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--d", "2", "--N", "4", "--points", "5", "--repeat", "1", "--number", "1"]) == 0
    out = capsys.readouterr().out
    assert "adjoint_powers" in out or "nothing to compare" in out
