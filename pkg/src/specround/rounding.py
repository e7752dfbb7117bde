"""Randomized swap rounding and the exact one-sided rounding wrapper.

The swap loop keeps a selected set ``S`` and its moment matrix
``Z = sum_{i in S} v_i v_i^T``. While ``lambda_min(Z) < 1 - 2 eps`` it forms
the action matrix of ``Z``, samples one removal from ``S`` and one addition
from its complement (each possibly empty) and applies the swap. Every run
returns a :class:`RoundingCertificate` whose inequalities are re-checked from
scratch rather than trusted from the loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    CertificateViolation,
    InvalidInstance,
    IterationCapExceeded,
    NotIsotropic,
    NumericalFailure,
)
from .instance import ISOTROPY_TOL, VectorInstance
from .linalg import lambda_min, range_basis, sym, sym_eig
from .regret import ActionMatrix, compute_action_matrix, leverages

#: Rebuild ``Z`` from ``S`` this often to stop floating-point drift.
REBUILD_EVERY = 100

#: Allowed Frobenius drift between the running and rebuilt ``Z``.
DRIFT_TOL = 1e-8

#: Slack on probability masses.
MASS_TOL = 1e-12

#: Slack on the exact-rounding lower bound ``lambda_min >= 1``.
EXACT_SLACK = 1e-7


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) % (1 << 64)))


@dataclass
class SwapStep:
    """One iteration of the swap loop.

    ``removed``/``added`` are instance indices or ``-1`` for the empty choice.
    ``lambda_min`` and ``cost`` describe the state after the swap;
    ``cost_before`` the state before it. ``drift`` and ``second_moment`` are
    the exact conditional mean and second moment of ``c_added - c_removed``.
    """

    t: int
    removed: int
    added: int
    delta_plus: float
    delta_minus: float
    lambda_min: float
    cost: float
    cost_before: float
    drift: float
    second_moment: float


@dataclass
class SwapState:
    """Mutable state of one swap run."""

    selected: np.ndarray
    Z: np.ndarray
    t: int
    rng: np.random.Generator
    history: list = field(default_factory=list)
    delta_sum: float = 0.0

    @property
    def S(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.selected))


@dataclass
class StepDistributions:
    """Removal and addition distributions of one iteration.

    ``removal[i]`` and ``addition[j]`` are the masses on instance indices;
    ``removal_empty``/``addition_empty`` are the masses on the empty choice.
    ``a`` and ``ah`` are the leverages ``v^T A v`` and ``v^T A^{1/2} v``.
    """

    removal: np.ndarray
    addition: np.ndarray
    removal_empty: float
    addition_empty: float
    a: np.ndarray
    ah: np.ndarray
    two_alpha: float

    def as_maps(self) -> tuple[dict, dict]:
        """Both distributions as ``{index or None: probability}`` maps."""
        rem = {int(i): float(p) for i, p in enumerate(self.removal) if p > 0}
        add = {int(j): float(p) for j, p in enumerate(self.addition) if p > 0}
        rem[None] = self.removal_empty
        add[None] = self.addition_empty
        return rem, add


@dataclass
class RoundingCertificate:
    """Outcome of a rounding run together with its checked inequalities.

    ``packing_residuals[i] = a_i - <A_i, z>`` and
    ``covering_residuals[j] = <B_j, z> - b_j``; nonnegative means the row
    holds at its original right-hand side.
    """

    kind: str
    selected: tuple[int, ...]
    lambda_min: float
    cost: float
    iterations: int
    regret_slack: float
    delta_sum: float
    eps: float
    seed: int
    q_cap: float
    n: int
    m: int
    alpha: float
    k: float
    threshold: float
    fractional_cost: float
    packing_residuals: list = field(default_factory=list)
    covering_residuals: list = field(default_factory=list)
    history: list = field(default_factory=list, repr=False)
    extras: dict = field(default_factory=dict)

    def indicator(self) -> np.ndarray:
        z = np.zeros(self.m)
        z[list(self.selected)] = 1.0
        return z

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "selected": list(self.selected),
            "lambda_min": self.lambda_min,
            "cost": self.cost,
            "fractional_cost": self.fractional_cost,
            "iterations": self.iterations,
            "regret_slack": self.regret_slack,
            "delta_sum": self.delta_sum,
            "eps": self.eps,
            "seed": self.seed,
            "q_cap": self.q_cap,
            "n": self.n,
            "m": self.m,
            "alpha": self.alpha,
            "k": self.k,
            "threshold": self.threshold,
            "packing_residuals": list(self.packing_residuals),
            "covering_residuals": list(self.covering_residuals),
            "extras": dict(self.extras),
        }


def linear_residuals(inst: VectorInstance, z) -> tuple[list, list]:
    """Packing slack ``a - A z`` and covering slack ``B z - b`` of a selection."""
    z = np.asarray(z, dtype=float)
    pack = cover = []
    if inst.packing is not None:
        pack = (inst.packing.rhs - inst.packing.matrix @ z).tolist()
    if inst.covering is not None:
        cover = (inst.covering.matrix @ z - inst.covering.rhs).tolist()
    return pack, cover


def _require_isotropic(inst: VectorInstance) -> None:
    if inst.n == 0:
        raise InvalidInstance("instance dimension must be at least one")
    err = inst.isotropy_error()
    if err > ISOTROPY_TOL:
        raise NotIsotropic(f"||sum x v v^T - I||_op = {err:.3e} exceeds {ISOTROPY_TOL:g}")


def swap_step_distributions(
    state: SwapState,
    inst: VectorInstance,
    am: ActionMatrix,
    alpha: float,
    k: float,
    backend: str | None = None,
) -> StepDistributions:
    """Exact removal and addition distributions for the current state."""
    kern = kernels.get_backend(backend)
    a, ah = leverages(inst.vectors, am)
    m = inst.m
    removal = np.empty(m)
    addition = np.empty(m)
    in_s = np.ascontiguousarray(state.selected, dtype=np.uint8)
    two_alpha = 2.0 * alpha
    inv_k = 1.0 / k
    rtot, atot = kern.swap_masses(
        np.ascontiguousarray(ah), inst.x, in_s, two_alpha, inv_k, removal, addition
    )
    if m and (removal.min() < -MASS_TOL or addition.min() < -MASS_TOL):
        raise NumericalFailure("negative probability mass")
    # Well-definedness: even summed over every index the addition weights
    # stay below one. Isotropy holds only to ISOTROPY_TOL, hence the slack.
    full = inv_k * float(np.sum(inst.x * (1.0 + two_alpha * ah)))
    slack = MASS_TOL + two_alpha * math.sqrt(inst.n) * ISOTROPY_TOL * inv_k
    if rtot > 1.0 + MASS_TOL or full > 1.0 + slack:
        raise NumericalFailure(
            f"distribution mass exceeds one (removal {rtot!r}, addition bound {full!r})"
        )
    return StepDistributions(
        removal=removal,
        addition=addition,
        removal_empty=max(0.0, 1.0 - rtot),
        addition_empty=max(0.0, 1.0 - atot),
        a=a,
        ah=ah,
        two_alpha=two_alpha,
    )


def _validate_eps(eps: float, hi: float) -> float:
    eps = float(eps)
    if not (0.0 < eps < hi):
        raise ValueError(f"eps must lie in (0, {hi:g}), got {eps!r}")
    return eps


def randomized_swap(
    inst: VectorInstance,
    eps: float,
    seed: int,
    q_cap: float = 4.0,
    backend: str | None = None,
    record_history: bool = True,
) -> RoundingCertificate:
    """Round an isotropic instance to a set with ``lambda_min >= 1 - 2 eps``.

    Raises :class:`IterationCapExceeded` (carrying the partial
    :class:`SwapState`) after ``q_cap * k / eps`` iterations.
    """
    eps = _validate_eps(eps, 0.5)
    if not q_cap > 0:
        raise ValueError("q_cap must be positive")
    _require_isotropic(inst)
    kern = kernels.get_backend(backend)
    V, x, c = inst.vectors, inst.x, inst.c
    n, m = inst.n, inst.m
    alpha = math.sqrt(n) / eps
    k = m + 2.0 * n / eps
    cap = q_cap * k / eps
    target = 1.0 - 2.0 * eps
    frac_cost = inst.cost()

    rng = make_rng(seed)
    selected = rng.random(m) < x
    Z = sym(V[selected].T @ V[selected])
    state = SwapState(selected=selected, Z=Z, t=0, rng=rng)
    cost_now = float(c[selected].sum())

    while True:
        spec = sym_eig(state.Z)
        lam_now = float(spec.eigenvalues[0])
        if state.history:
            state.history[-1].lambda_min = lam_now
        if lam_now >= target:
            break
        if state.t >= cap:
            raise IterationCapExceeded(
                f"no certificate after {state.t} iterations (cap {cap:.1f})", state
            )
        am = compute_action_matrix(state.Z, alpha, spec, backend)
        dist = swap_step_distributions(state, inst, am, alpha, k, backend)
        u_rem, u_add = rng.random(2)
        i = int(kern.inverse_cdf(dist.removal, u_rem))
        j = int(kern.inverse_cdf(dist.addition, u_add))

        d_plus = d_minus = 0.0
        if j >= 0:
            d_plus = float(dist.a[j] / (1.0 + dist.two_alpha * dist.ah[j]))
        if i >= 0:
            g = dist.two_alpha * dist.ah[i]
            if not g < 0.5:
                raise CertificateViolation(f"removed index {i} is outside the eligible set")
            d_minus = float(dist.a[i] / (1.0 - g))

        if record_history:
            mean_add = float(dist.addition @ c)
            mean_rem = float(dist.removal @ c)
            second = float(dist.addition @ c**2) - 2.0 * mean_add * mean_rem
            second += float(dist.removal @ c**2)
        cost_before = cost_now
        if j >= 0:
            state.selected[j] = True
            state.Z += np.outer(V[j], V[j])
            cost_now += float(c[j])
        if i >= 0:
            state.selected[i] = False
            state.Z -= np.outer(V[i], V[i])
            cost_now -= float(c[i])
        state.t += 1
        state.delta_sum += d_plus - d_minus
        if record_history:
            state.history.append(
                SwapStep(
                    t=state.t,
                    removed=i,
                    added=j,
                    delta_plus=d_plus,
                    delta_minus=d_minus,
                    lambda_min=float("nan"),
                    cost=cost_now,
                    cost_before=cost_before,
                    drift=mean_add - mean_rem,
                    second_moment=second,
                )
            )
        if state.t % REBUILD_EVERY == 0:
            fresh = sym(V[state.selected].T @ V[state.selected])
            drift = float(np.linalg.norm(state.Z - fresh))
            if drift > DRIFT_TOL * max(1.0, float(np.linalg.norm(fresh))):
                raise NumericalFailure(f"moment matrix drifted by {drift:.3e}")
            state.Z = fresh
            cost_now = float(c[state.selected].sum())
        else:
            state.Z = sym(state.Z)

    sel = np.flatnonzero(state.selected)
    lam_fresh = lambda_min(V[sel].T @ V[sel]) if sel.size else 0.0
    slack = lam_fresh - (state.delta_sum - 2.0 * math.sqrt(n) / alpha)
    pack, cover = linear_residuals(inst, state.selected.astype(float))
    return RoundingCertificate(
        kind="randomized_swap",
        selected=tuple(int(i) for i in sel),
        lambda_min=lam_fresh,
        cost=float(c[sel].sum()),
        iterations=state.t,
        regret_slack=float(slack),
        delta_sum=float(state.delta_sum),
        eps=eps,
        seed=int(seed),
        q_cap=float(q_cap),
        n=n,
        m=m,
        alpha=alpha,
        k=k,
        threshold=target,
        fractional_cost=frac_cost,
        packing_residuals=pack,
        covering_residuals=cover,
        history=state.history,
    )


def exact_round(
    inst: VectorInstance,
    eps: float,
    seed: int,
    q_cap: float = 4.0,
    backend: str | None = None,
    record_history: bool = True,
) -> RoundingCertificate:
    """Round an isotropic instance to a set with ``sum_S v v^T >= I``.

    Weights are inflated by ``1 / (1 - 2 eps)``. Indices whose inflated weight
    exceeds one are kept outright; the rest are whitened against what those
    leave uncovered and passed to :func:`randomized_swap`.
    """
    eps = _validate_eps(eps, 0.25)
    _require_isotropic(inst)
    V, x, c = inst.vectors, inst.x, inst.c
    n, m = inst.n, inst.m
    scale = 1.0 - 2.0 * eps
    y = x / scale
    big = y > 1.0
    small_idx = np.flatnonzero(~big)
    # What the big indices leave uncovered, I - sum_big x v v^T, equals the
    # moment of the small ones; summing PSD terms keeps it PSD in floating point.
    residual = inst.moment(np.where(big, 0.0, x))
    U, lam = range_basis(residual)

    extras = {"big": [int(i) for i in np.flatnonzero(big)], "inner_dim": int(lam.size)}
    if lam.size == 0:
        # The large weights already span everything; nothing left to round.
        chosen = np.flatnonzero(big)
        inner = None
        extras["range_collapsed"] = True
    else:
        W = (math.sqrt(scale) * V[small_idx]) @ U / np.sqrt(lam)
        sub = VectorInstance(W, np.minimum(y[small_idx], 1.0), c[small_idx])
        inner = randomized_swap(sub, eps, seed, q_cap, backend, record_history)
        chosen = np.union1d(np.flatnonzero(big), small_idx[list(inner.selected)])
        extras["range_collapsed"] = False

    chosen = np.asarray(chosen, dtype=np.int64)
    lam_min = lambda_min(V[chosen].T @ V[chosen]) if chosen.size else 0.0
    if lam_min < 1.0 - EXACT_SLACK:
        raise CertificateViolation(
            f"exact rounding produced lambda_min {lam_min!r} below 1 - {EXACT_SLACK:g}"
        )
    z = np.zeros(m)
    z[chosen] = 1.0
    pack, cover = linear_residuals(inst, z)
    return RoundingCertificate(
        kind="exact_round",
        selected=tuple(int(i) for i in chosen),
        lambda_min=lam_min,
        cost=float(c[chosen].sum()),
        iterations=inner.iterations if inner else 0,
        # With no inner run the regret bound reduces to lambda_min + 2 eps.
        regret_slack=inner.regret_slack if inner else lam_min + 2.0 * eps,
        delta_sum=inner.delta_sum if inner else 0.0,
        eps=eps,
        seed=int(seed),
        q_cap=float(q_cap),
        n=n,
        m=m,
        alpha=inner.alpha if inner else math.sqrt(n) / eps,
        k=inner.k if inner else m + 2.0 * n / eps,
        threshold=1.0,
        fractional_cost=inst.cost(),
        packing_residuals=pack,
        covering_residuals=cover,
        history=inner.history if inner else [],
        extras=extras,
    )
