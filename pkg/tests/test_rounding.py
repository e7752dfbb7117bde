from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from specround.errors import IterationCapExceeded, NotIsotropic
from specround.instance import LinearRows, VectorInstance
from specround.instances import random_isotropic_instance, tight_lower_bound_example
from specround.kernels import available_backends, get_backend
from specround.linalg import lambda_min, whiten
from specround.regret import compute_action_matrix
from specround.rounding import (
    EXACT_SLACK,
    SwapState,
    exact_round,
    make_rng,
    randomized_swap,
    swap_step_distributions,
)


@pytest.fixture(scope="module")
def inst():
    return random_isotropic_instance(6, 60, seed=11)


def _integral_instance():
    rng = np.random.default_rng(0)
    V = rng.standard_normal((12, 3))
    x = np.array([1, 0] * 6, dtype=float)
    w = whiten(VectorInstance(V, x, np.ones(12)))
    return w


def test_integral_instance_returns_its_support():
    w = _integral_instance()
    for fn in (randomized_swap, exact_round):
        cert = fn(w, 0.2, seed=7)
        assert cert.selected == tuple(range(0, 12, 2))
        assert cert.iterations == 0


def test_exact_round_range_collapse_reports_slack():
    cert = exact_round(_integral_instance(), 0.2, seed=1)
    assert cert.extras["range_collapsed"] is True
    assert cert.regret_slack == pytest.approx(cert.lambda_min + 0.4)


def test_randomized_swap_certificate(inst):
    eps = 0.2
    cert = randomized_swap(inst, eps, seed=3)
    assert cert.lambda_min >= 1 - 2 * eps
    assert cert.regret_slack >= -1e-7
    sel = list(cert.selected)
    assert cert.lambda_min == pytest.approx(lambda_min(inst.vectors[sel].T @ inst.vectors[sel]))
    assert cert.cost == pytest.approx(inst.c[sel].sum())
    assert cert.alpha == pytest.approx(math.sqrt(6) / eps)
    assert cert.k == pytest.approx(60 + 12 / eps)
    assert len(cert.history) == cert.iterations
    total = sum(s.delta_plus - s.delta_minus for s in cert.history)
    assert total == pytest.approx(cert.delta_sum)
    if cert.history:
        assert cert.history[-1].lambda_min == pytest.approx(cert.lambda_min, abs=1e-9)


def test_same_seed_same_run(inst):
    a = randomized_swap(inst, 0.2, seed=5)
    b = randomized_swap(inst, 0.2, seed=5)
    assert a.to_dict() == b.to_dict()


@pytest.mark.skipif(len(available_backends()) < 2, reason="extension not built")
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_backends_give_identical_runs(inst, seed):
    a = exact_round(inst, 0.2, seed, backend="compiled")
    b = exact_round(inst, 0.2, seed, backend="python")
    assert a.to_dict() == b.to_dict()
    assert [(s.removed, s.added, s.delta_plus) for s in a.history] == [
        (s.removed, s.added, s.delta_plus) for s in b.history
    ]


def test_first_step_follows_rng_protocol(inst):
    eps, seed = 0.2, 9
    n, m = inst.n, inst.m
    alpha, k = math.sqrt(n) / eps, m + 2 * n / eps
    rng = make_rng(seed)
    selected = rng.random(m) < inst.x
    V = inst.vectors
    Z = V[selected].T @ V[selected]
    if lambda_min(Z) >= 1 - 2 * eps:
        pytest.skip("initial sample already certified")
    state = SwapState(selected=selected.copy(), Z=Z, t=0, rng=rng)
    am = compute_action_matrix(Z, alpha)
    dist = swap_step_distributions(state, inst, am, alpha, k)
    u_rem, u_add = rng.random(2)
    kern = get_backend()
    want = (kern.inverse_cdf(dist.removal, u_rem), kern.inverse_cdf(dist.addition, u_add))
    step = randomized_swap(inst, eps, seed).history[0]
    assert (step.removed, step.added) == want


def test_step_distributions_are_valid(inst):
    eps = 0.2
    alpha, k = math.sqrt(inst.n) / eps, inst.m + 2 * inst.n / eps
    rng = make_rng(1)
    selected = rng.random(inst.m) < 0.3
    Z = inst.vectors[selected].T @ inst.vectors[selected]
    state = SwapState(selected=selected, Z=Z, t=0, rng=rng)
    am = compute_action_matrix(Z, alpha)
    dist = swap_step_distributions(state, inst, am, alpha, k)
    rem, add = dist.as_maps()
    assert sum(rem.values()) == pytest.approx(1.0)
    assert sum(add.values()) == pytest.approx(1.0)
    assert all(p >= 0 for p in rem.values()) and all(p >= 0 for p in add.values())
    for i in range(inst.m):
        g = 2 * alpha * dist.ah[i]
        if selected[i]:
            assert dist.addition[i] == 0.0
            if g >= 0.5:
                assert dist.removal[i] == 0.0
            else:
                assert dist.removal[i] == pytest.approx((1 - inst.x[i]) * (1 - g) / k)
        else:
            assert dist.removal[i] == 0.0
            assert dist.addition[i] == pytest.approx(inst.x[i] * (1 + g) / k)


def test_iteration_cap_carries_state(inst):
    with pytest.raises(IterationCapExceeded) as exc:
        randomized_swap(inst, 0.05, seed=0, q_cap=1e-4)
    state = exc.value.state
    assert isinstance(state, SwapState)
    assert state.t >= 1


def test_input_validation(inst):
    with pytest.raises(ValueError):
        randomized_swap(inst, 0.5, seed=0)
    with pytest.raises(ValueError):
        exact_round(inst, 0.25, seed=0)
    bad = inst.with_fields(x=inst.x * 0.9)
    with pytest.raises(NotIsotropic):
        randomized_swap(bad, 0.2, seed=0)


def test_exact_round_dominates_identity(inst):
    cert = exact_round(inst, 0.2, seed=4)
    assert cert.lambda_min >= 1 - EXACT_SLACK
    assert cert.threshold == 1.0
    assert set(cert.extras["big"]) <= set(cert.selected)


def test_tight_example_takes_everything():
    ex = tight_lower_bound_example(8, 0.2)
    cert = exact_round(ex, 0.2, seed=0)
    assert cert.selected == tuple(range(16))
    assert cert.cost == 8.0


def test_linear_rows_are_reported(inst):
    A = LinearRows(np.ones((1, inst.m)), [inst.m])
    B = LinearRows(np.ones((1, inst.m)), [0.0])
    with_rows = inst.with_fields(packing=A, covering=B)
    cert = exact_round(with_rows, 0.2, seed=2)
    size = len(cert.selected)
    assert cert.packing_residuals == [pytest.approx(inst.m - size)]
    assert cert.covering_residuals == [pytest.approx(size)]


@st.composite
def small_instances(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(n + 2, 18))
    seed = draw(st.integers(0, 2**32))
    return random_isotropic_instance(n, m, seed)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_instances(), st.integers(0, 2**63), st.sampled_from([0.1, 0.15, 0.2]))
def test_exact_round_invariants(inst, seed, eps):
    cert = exact_round(inst, eps, seed)
    z = cert.indicator()
    assert lambda_min(inst.moment(z)) >= 1 - EXACT_SLACK
    assert np.all(inst.x[z > 0] > 0)
    assert cert.regret_slack >= -1e-7


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_instances(), st.integers(0, 2**63))
def test_swap_never_selects_zero_weight(inst, seed):
    x = inst.x.copy()
    cert = randomized_swap(inst, 0.2, seed)
    assert np.all(x[list(cert.selected)] > 0)
    assert cert.lambda_min >= 1 - 0.4
