from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from specround import _pykernels
from specround.kernels import BACKEND, available_backends, get_backend

BACKENDS = available_backends()
compiled_only = pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")


def test_backend_selection():
    assert BACKEND in BACKENDS
    assert get_backend("python") is _pykernels
    with pytest.raises(ValueError):
        get_backend("fortran")


@pytest.mark.parametrize("name", BACKENDS)
def test_solve_shift_single_eigenvalue(name):
    s, _, ok = get_backend(name).solve_shift(np.zeros(1), 1e-12, 200)
    assert ok and s == 1.0


@pytest.mark.parametrize("name", BACKENDS)
def test_solve_shift_equal_eigenvalues(name):
    s, _, ok = get_backend(name).solve_shift(np.zeros(9), 1e-12, 200)
    assert ok and s == 3.0


@pytest.mark.parametrize("name", BACKENDS)
def test_inverse_cdf_boundaries(name):
    k = get_backend(name)
    masses = np.array([0.125, 0.0, 0.25, 0.375])
    assert k.inverse_cdf(masses, 0.0) == 0
    assert k.inverse_cdf(masses, 0.125) == 2
    assert k.inverse_cdf(masses, 0.7) == 3
    assert k.inverse_cdf(masses, 0.75) == -1
    assert k.inverse_cdf(np.zeros(0), 0.5) == -1


@pytest.mark.parametrize("name", BACKENDS)
def test_swap_masses_rules(name):
    k = get_backend(name)
    ah = np.array([0.1, 0.3, 0.05, 0.2])
    x = np.array([0.5, 0.5, 0.2, 0.8])
    in_s = np.array([1, 1, 0, 0], dtype=np.uint8)
    rem, add = np.empty(4), np.empty(4)
    rt, at = k.swap_masses(ah, x, in_s, 2.0, 0.1, rem, add)
    # g = 2 ah; index 1 has g = 0.6 >= 1/2, so it cannot be removed.
    np.testing.assert_allclose(rem, [0.1 * 0.5 * 0.8, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(add, [0.0, 0.0, 0.1 * 0.2 * 1.1, 0.1 * 0.8 * 1.4])
    assert rt == pytest.approx(rem.sum()) and at == pytest.approx(add.sum())


mu_arrays = arrays(
    np.float64,
    st.integers(1, 12),
    elements=st.floats(0, 1e3, allow_nan=False, allow_infinity=False),
)


@settings(max_examples=150, deadline=None)
@given(mu_arrays)
def test_solve_shift_root_is_accurate(mu):
    mu = np.sort(mu)
    mu -= mu[0]
    s, _, ok = _pykernels.solve_shift(mu, 1e-12, 200)
    assert ok
    assert 1.0 <= s <= math.sqrt(mu.size)
    h = float(np.sum((mu + s) ** -2.0))
    assert abs(h - 1.0) <= 1e-11


@compiled_only
@settings(max_examples=150, deadline=None)
@given(mu_arrays)
def test_backends_agree_bitwise_on_shift(mu):
    mu = np.ascontiguousarray(np.sort(mu) - np.min(mu))
    a = get_backend("compiled").solve_shift(mu, 1e-12, 200)
    b = get_backend("python").solve_shift(mu, 1e-12, 200)
    assert a == b


@compiled_only
@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 30).flatmap(
        lambda m: st.tuples(
            arrays(np.float64, m, elements=st.floats(0, 2, allow_nan=False)),
            arrays(np.float64, m, elements=st.floats(0, 1, allow_nan=False)),
            arrays(np.uint8, m, elements=st.integers(0, 1)),
            st.floats(0, 1, exclude_max=True),
        )
    ),
    st.floats(0.1, 20),
    st.floats(1e-3, 1),
)
def test_backends_agree_bitwise_on_masses(data, two_alpha, inv_k):
    ah, x, in_s, u = data
    m = ah.size
    out = []
    for name in ("compiled", "python"):
        rem, add = np.empty(m), np.empty(m)
        tot = get_backend(name).swap_masses(ah, x, in_s, two_alpha, inv_k, rem, add)
        out.append((tot, rem.tobytes(), add.tobytes()))
        out.append(get_backend(name).inverse_cdf(rem, u * tot[0]))
    assert out[0] == out[2] and out[1] == out[3]


@compiled_only
def test_backends_agree_bitwise_on_edge_scores():
    rng = np.random.default_rng(5)
    n = 7
    b = rng.standard_normal((n, n))
    c = rng.standard_normal((n, n))
    b, c = b + b.T, c + c.T
    us = np.array([0, 0, 1, 2, 3, 5], dtype=np.int64)
    vs = np.array([1, 4, 2, 6, 4, 6], dtype=np.int64)
    taken = np.array([0, 1, 0, 0, 1, 0], dtype=np.uint8)
    res = []
    for name in ("compiled", "python"):
        out = np.empty(6)
        get_backend(name).edge_scores(b, c, us, vs, taken, 0.7, 6.0, out)
        res.append(out.tobytes())
    assert res[0] == res[1]
    assert np.isneginf(np.frombuffer(res[0])[1])


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    module = runpy.run_path(str(script), run_name="bench")
    module["main"](["--repeat", "1"])
    out = capsys.readouterr().out
    assert "solve_shift" in out and "MISMATCH" not in out


def test_environment_forces_python_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, SPECROUND_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import specround; print(specround.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
