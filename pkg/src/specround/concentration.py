"""Tail bounds for martingale-like and self-adjusting processes, with a checker.

A self-adjusting process ``Y_t`` has increments ``X_t`` with ``|X_t| <= 1``,
conditional drift between ``-gamma Y - beta_l`` and ``-gamma Y + beta_u``,
conditional second moment at most ``gamma Y + sigma``, and an initial value
whose moment generating function on ``[-1, 1]`` is at most
``exp(a^2 sigma / gamma)``. Under those hypotheses both tails of ``Y_t``
decay like a Freedman bound. This module evaluates the closed forms and
validates them by simulating chains that satisfy the hypotheses exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HypothesisViolation, InvalidParams

#: Slack used when asserting chain hypotheses in floating point.
HYPOTHESIS_TOL = 1e-9


@dataclass(frozen=True)
class SelfAdjustingParams:
    gamma: float
    beta_u: float
    beta_l: float
    sigma: float
    eta: float

    def __post_init__(self):
        vals = (self.gamma, self.beta_u, self.beta_l, self.sigma, self.eta)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParams("parameters must be finite")
        if not 0.0 < self.gamma <= 0.5:
            raise InvalidParams("gamma must lie in (0, 1/2]")
        if self.beta_u < 0 or self.beta_l < 0:
            raise InvalidParams("beta_u and beta_l must be nonnegative")
        if not self.sigma > 0:
            raise InvalidParams("sigma must be positive")
        if not self.eta > 0:
            raise InvalidParams("eta must be positive")

    def with_eta(self, eta: float) -> "SelfAdjustingParams":
        return SelfAdjustingParams(self.gamma, self.beta_u, self.beta_l, self.sigma, eta)

    @property
    def upper_threshold(self) -> float:
        return self.beta_u / self.gamma + self.eta

    @property
    def lower_threshold(self) -> float:
        return -self.beta_l / self.gamma - self.eta


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def self_adjusting_upper_bound(p: SelfAdjustingParams) -> float:
    """``Pr[Y_t >= beta_u/gamma + eta] <= exp(-eta^2 / (4 (sigma + beta_u)/gamma + 2 eta))``."""
    denom = 4.0 * (p.sigma + p.beta_u) / p.gamma + 2.0 * p.eta
    return _clamp(math.exp(-(p.eta**2) / denom))


def self_adjusting_lower_bound(p: SelfAdjustingParams) -> float:
    """``Pr[Y_t <= -beta_l/gamma - eta] <= exp(-eta^2 / (4 sigma/gamma + eta))``."""
    denom = 4.0 * p.sigma / p.gamma + p.eta
    return _clamp(math.exp(-(p.eta**2) / denom))


def freedman_bound(delta: float, sigma_sq: float, R: float) -> float:
    """``exp(-(delta^2 / 2) / (sigma^2 + R delta / 3))``."""
    if delta < 0 or sigma_sq < 0 or R < 0:
        raise InvalidParams("delta and the variance terms must be nonnegative")
    if delta == 0:
        return 1.0
    denom = sigma_sq + R * delta / 3.0
    if denom == 0:
        return 0.0
    return _clamp(math.exp(-(delta**2 / 2.0) / denom))


class Chain:
    """Interface for simulated self-adjusting chains.

    Subclasses draw ``Y_0`` for many trials at once, step all trials in
    parallel, and expose the exact conditional mean and second moment of the
    next increment so the hypotheses can be asserted on every visited state.
    """

    name = "chain"

    def params(self) -> tuple[float, float, float, float]:
        """``(gamma, beta_u, beta_l, sigma)``."""
        raise NotImplementedError

    def horizon(self) -> int:
        raise NotImplementedError

    def initial(self, rng: np.random.Generator, trials: int) -> np.ndarray:
        raise NotImplementedError

    def initial_log_mgf(self, a: float) -> float:
        raise NotImplementedError

    def moments(self, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Exact ``E[X]``, ``E[X^2]`` and ``max |X|`` given each state."""
        raise NotImplementedError

    def step(self, Y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass
class DeterministicChain(Chain):
    """Noise-free chain ``X_t = -gamma Y_{t-1}`` started at zero."""

    gamma: float = 0.5
    sigma: float = 1e-3
    steps: int = 10
    name: str = "deterministic"

    def params(self):
        return self.gamma, 0.0, 0.0, self.sigma

    def horizon(self):
        return self.steps

    def initial(self, rng, trials):
        return np.zeros(trials)

    def initial_log_mgf(self, a):
        return 0.0

    def moments(self, Y):
        X = -self.gamma * Y
        return X, X**2, np.abs(X)

    def step(self, Y, rng):
        return -self.gamma * Y


@dataclass
class UrnSwapChain(Chain):
    """Swap chain on ``m`` unit-cost items of weight ``p``.

    ``K`` items are held; ``Y = K - m p``. Each step independently adds one
    of the ``m - K`` absent items with total probability
    ``(m - K) p (1 + add_boost) / k`` and removes one of the ``K`` held items
    with total probability ``K (1 - p) (1 + remove_boost) / k``. The boosts
    create upward and downward drift offsets. With
    ``gamma = 1/k``, ``beta_u = m p add_boost / k``,
    ``beta_l = m (1 - p) remove_boost / k`` and ``sigma`` as in
    :meth:`params`, all four hypotheses hold.
    """

    m: int = 10
    p: float = 0.3
    k: float = 20.0
    add_boost: float = 0.0
    remove_boost: float = 0.0
    steps_per_k: float = 10.0
    name: str = "urn"

    def __post_init__(self):
        top = max(self.m * self.p * (1 + self.add_boost), self.m * (1 - self.p) * (1 + self.remove_boost))
        if top > self.k or self.k < 2:
            raise InvalidParams("k too small: step probabilities would exceed one")

    def params(self):
        m, p, k = self.m, self.p, self.k
        gamma = 1.0 / k
        beta_u = m * p * self.add_boost / k
        beta_l = m * (1 - p) * self.remove_boost / k
        sigma = max(m * p * (2 + self.add_boost), m * (1 - p) * self.remove_boost) / k
        return gamma, beta_u, beta_l, sigma

    def horizon(self):
        return int(math.ceil(self.steps_per_k * self.k))

    def initial(self, rng, trials):
        return rng.binomial(self.m, self.p, size=trials) - self.m * self.p

    def initial_log_mgf(self, a):
        return self.m * math.log1p(self.p * math.expm1(a)) - a * self.m * self.p

    def _probs(self, Y):
        K = Y + self.m * self.p
        pa = (self.m - K) * self.p * (1 + self.add_boost) / self.k
        pr = K * (1 - self.p) * (1 + self.remove_boost) / self.k
        return pa, pr

    def moments(self, Y):
        pa, pr = self._probs(Y)
        mean = pa - pr
        second = pa + pr - 2.0 * pa * pr
        return mean, second, np.ones_like(Y)

    def step(self, Y, rng):
        pa, pr = self._probs(Y)
        add = rng.random(Y.shape) < pa
        rem = rng.random(Y.shape) < pr
        return add.astype(float) - rem.astype(float)


def default_chains() -> list[Chain]:
    """The three parameterizations of the validation suite."""
    return [
        UrnSwapChain(m=10, p=0.3, k=20.0, name="urn-plain"),
        UrnSwapChain(m=20, p=0.5, k=60.0, add_boost=0.5, name="urn-upward"),
        UrnSwapChain(m=16, p=0.25, k=48.0, remove_boost=1.0, name="urn-downward"),
    ]


def check_hypotheses(chain: Chain, Y: np.ndarray) -> None:
    """Raise :class:`HypothesisViolation` if any state breaks an assumption."""
    gamma, bu, bl, sigma = chain.params()
    mean, second, bound = chain.moments(Y)
    tol = HYPOTHESIS_TOL
    if np.any(bound > 1.0 + tol):
        raise HypothesisViolation("increment exceeds one in absolute value")
    if np.any(mean > -gamma * Y + bu + tol) or np.any(mean < -gamma * Y - bl - tol):
        raise HypothesisViolation("conditional drift leaves the self-adjusting band")
    if np.any(second > gamma * Y + sigma + tol):
        raise HypothesisViolation("conditional second moment exceeds gamma Y + sigma")


def check_initial_mgf(chain: Chain, grid: int = 201) -> None:
    gamma, _, _, sigma = chain.params()
    for a in np.linspace(-1.0, 1.0, grid):
        if chain.initial_log_mgf(float(a)) > a * a * sigma / gamma + HYPOTHESIS_TOL:
            raise HypothesisViolation(f"initial moment generating function too large at a={a:.3f}")


@dataclass
class TailRow:
    eta: float
    empirical_upper: float
    bound_upper: float
    empirical_lower: float
    bound_lower: float
    trials: int

    def _se(self, bound: float) -> float:
        return math.sqrt(bound * (1.0 - bound) / self.trials)

    @property
    def passed(self) -> bool:
        up = self.empirical_upper <= self.bound_upper + 3.0 * self._se(self.bound_upper)
        lo = self.empirical_lower <= self.bound_lower + 3.0 * self._se(self.bound_lower)
        return up and lo


@dataclass
class ConcentrationReport:
    chain: str
    params: tuple
    horizon: int
    trials: int
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def write_csv(self, path, append: bool = False) -> None:
        write_rows_csv(path, self.rows, append)


CSV_COLUMNS = ("eta", "empirical_upper", "bound_upper", "empirical_lower", "bound_lower")


def write_rows_csv(path, rows, append: bool = False) -> None:
    path = Path(path)
    new = not (append and path.exists())
    with path.open("a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([repr(float(getattr(r, col))) for col in CSV_COLUMNS])


def simulate_and_check(
    chain: Chain,
    etas=(1.0, 2.0, 4.0),
    trials: int = 100_000,
    seed: int = 0,
    horizon: int | None = None,
) -> ConcentrationReport:
    """Run ``trials`` copies of ``chain`` to ``horizon`` and compare both tails.

    Hypotheses are asserted on every visited state; a row passes when each
    empirical tail is at most its bound plus three binomial standard errors
    (computed at the bound).
    """
    gamma, bu, bl, sigma = chain.params()
    T = chain.horizon() if horizon is None else int(horizon)
    check_initial_mgf(chain)
    rng = np.random.Generator(np.random.Philox(seed))
    Y = chain.initial(rng, trials).astype(float)
    for _ in range(T):
        check_hypotheses(chain, Y)
        Y = Y + chain.step(Y, rng)
    rows = []
    for eta in etas:
        prm = SelfAdjustingParams(gamma, bu, bl, sigma, float(eta))
        rows.append(
            TailRow(
                eta=float(eta),
                empirical_upper=float(np.mean(Y >= prm.upper_threshold)),
                bound_upper=self_adjusting_upper_bound(prm),
                empirical_lower=float(np.mean(Y <= prm.lower_threshold)),
                bound_lower=self_adjusting_lower_bound(prm),
                trials=trials,
            )
        )
    return ConcentrationReport(chain.name, (gamma, bu, bl, sigma), T, trials, rows)


@dataclass
class DriftReport:
    """Worst slacks of the cost drift and second-moment inequalities over a run.

    All slacks are nonnegative when the inequalities hold; ``passed`` allows
    ``tol`` of floating-point error.
    """

    steps: int
    lower_slack: float
    upper_slack: float
    variance_slack: float
    tol: float

    @property
    def passed(self) -> bool:
        return min(self.lower_slack, self.upper_slack, self.variance_slack) >= -self.tol


def check_cost_drift(history, inst, eps: float, k: float | None = None, tol: float = 1e-9) -> DriftReport:
    """Check the exact cost drift sandwich at every logged swap step.

    With ``C = <c, x>`` and ``c(S)`` the cost before a step, the exact mean
    of ``c_added - c_removed`` must lie in
    ``[(C - c(S)) / k, (C - c(S) + 14 n c_inf / eps) / k]`` and its second
    moment must be at most ``c_inf (C + c(S) + 2 n c_inf / eps) / k``.
    ``inst`` is the instance the swap loop ran on.
    """
    n, m = inst.n, inst.m
    if k is None:
        k = m + 2.0 * n / eps
    C = inst.cost()
    cinf = inst.c_inf
    lo = up = var = math.inf
    for step in history:
        base = (C - step.cost_before) / k
        lo = min(lo, step.drift - base)
        up = min(up, base + 14.0 * n * cinf / (eps * k) - step.drift)
        var = min(var, cinf * (C + step.cost_before + 2.0 * n * cinf / eps) / k - step.second_moment)
    if not history:
        lo = up = var = 0.0
    scale = max(1.0, cinf)
    return DriftReport(len(history), lo / scale, up / scale, var / scale**2, tol)
