"""Weighted experimental design: objectives, relaxation solver, budgeted rounding.

The information matrix of weights ``x`` is ``Sigma(x) = sum_i x_i v_i v_i^T``.
The relaxation minimizes an optimality criterion of ``Sigma(x)`` over
``x in [0, 1]^m`` with ``<c, x> <= C`` by conditional gradient; each linear
step is a fractional knapsack solved exactly. Rounding scales the fractional
point down by ``1 - 2 eps`` after whitening and runs the swap loop.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    BudgetTooSmall,
    CertificateViolation,
    Infeasible,
    InvalidInstance,
    IterationCapExceeded,
    UnluckyRun,
)
from .graph import Graph
from .instance import VectorInstance
from .instances import helmert_basis
from .linalg import FLOOR_REL, sym, whiten
from .rounding import RoundingCertificate, randomized_swap

TAGS = ("A", "D", "E", "V", "G")

#: Eigenvalues within this distance of the bottom one share the E subgradient.
E_DEGENERACY = 1e-8


@dataclass
class DesignProblem:
    """Vectors and costs (``instance``), budget ``C``, criterion tag and optional ``V`` rows."""

    instance: VectorInstance
    budget: float
    tag: str
    V: np.ndarray | None = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise InvalidInstance(f"tag must be one of {TAGS}, got {self.tag!r}")
        if not (math.isfinite(self.budget) and self.budget > 0):
            raise InvalidInstance("budget must be positive and finite")
        if self.tag in ("V", "G"):
            if self.V is None:
                raise InvalidInstance(f"tag {self.tag} needs V rows")
        if self.V is not None:
            V = np.asarray(self.V, dtype=float)
            if V.ndim != 2 or V.shape[1] != self.instance.n or not np.all(np.isfinite(V)):
                raise InvalidInstance(f"V must be a finite (k, {self.instance.n}) array")
            self.V = V

    def sigma(self, x) -> np.ndarray:
        return sym(self.instance.moment(x))

    def value(self, x) -> float:
        return objective(self.tag, self.sigma(x), self.V)

    def to_dict(self) -> dict:
        out = self.instance.to_dict()
        out["budget"] = self.budget
        out["tag"] = self.tag
        if self.V is not None:
            out["V"] = self.V.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DesignProblem":
        data = dict(data)
        if "x" not in data and "m" in data:
            data["x"] = [0.0] * int(data["m"])
        try:
            inst = VectorInstance.from_dict(data)
            return cls(inst, float(data["budget"]), str(data["tag"]), data.get("V"))
        except KeyError as exc:
            raise InvalidInstance(f"missing field {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path) -> "DesignProblem":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInstance(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(data)


def _eig(Sigma) -> tuple[np.ndarray, np.ndarray, bool]:
    lam, U = np.linalg.eigh(sym(Sigma))
    singular = lam.size == 0 or lam[0] <= FLOOR_REL * max(1.0, float(lam[-1]))
    return lam, U, singular


def objective(tag: str, Sigma, V=None) -> float:
    """Optimality criterion of an information matrix; ``inf`` when singular."""
    if tag not in TAGS:
        raise ValueError(f"unknown tag {tag!r}")
    lam, U, singular = _eig(Sigma)
    if singular:
        return math.inf
    n = lam.size
    if tag == "A":
        return float(np.sum(1.0 / lam) / n)
    if tag == "D":
        return float(math.exp(-np.mean(np.log(lam))))
    if tag == "E":
        return float(1.0 / lam[0])
    if V is None:
        raise ValueError(f"tag {tag} needs V rows")
    P = np.asarray(V, dtype=float) @ U / np.sqrt(lam)
    diag = np.einsum("ij,ij->i", P, P)
    return float(diag.sum()) if tag == "V" else float(diag.max())


def gradient(tag: str, Sigma, V=None) -> np.ndarray:
    """Gradient (a subgradient for E and G) of the criterion in ``Sigma``."""
    lam, U, singular = _eig(Sigma)
    if singular:
        raise ValueError("gradient is undefined at a singular information matrix")
    n = lam.size
    inv = (U / lam) @ U.T
    if tag == "A":
        return -(inv @ inv) / n
    if tag == "D":
        f = math.exp(-float(np.mean(np.log(lam))))
        return -(f / n) * inv
    if tag == "E":
        bottom = lam <= lam[0] + E_DEGENERACY
        Ub = U[:, bottom]
        return -(Ub @ Ub.T) / (bottom.sum() * lam[0] ** 2)
    V = np.asarray(V, dtype=float)
    P = V @ inv
    if tag == "V":
        return -(P.T @ P)
    diag = np.einsum("ij,ij->i", P, V)
    r = int(np.argmax(diag))
    return -np.outer(P[r], P[r])


def knapsack_direction(g: np.ndarray, c: np.ndarray, budget: float) -> np.ndarray:
    """Minimize ``<g, s>`` over ``s in [0, 1]^m`` with ``<c, s> <= budget``.

    Negative-gradient items are taken in order of ``g_i / c_i`` (free items
    first), the last one fractionally.
    """
    s = np.zeros_like(g)
    helpful = g < 0
    free = helpful & (c <= 0)
    s[free] = 1.0
    paid = np.flatnonzero(helpful & (c > 0))
    order = paid[np.argsort(g[paid] / c[paid], kind="stable")]
    left = float(budget)
    for i in order:
        if left <= 0:
            break
        take = min(1.0, left / c[i])
        s[i] = take
        left -= take * c[i]
    return s


@dataclass
class RelaxationResult:
    x: np.ndarray
    objective: float
    gap: float
    iterations: int
    history: list = field(default_factory=list)


def _fit_budget(x: np.ndarray, c: np.ndarray, budget: float) -> np.ndarray:
    """Shrink ``x`` until ``<c, x> <= budget`` holds in floating point."""
    spend = float(c @ x)
    while spend > budget:
        x = x * np.nextafter(budget / spend, 0.0)
        spend = float(c @ x)
    return x


def solve_relaxation(p: DesignProblem, iters: int = 500, tol: float = 1e-6) -> RelaxationResult:
    """Conditional gradient with exact knapsack steps and a bounded line search."""
    inst = p.instance
    c = inst.c
    total = float(c.sum())
    start = 1.0 if total <= p.budget else p.budget / total
    x = _fit_budget(np.full(inst.m, start), c, p.budget)
    f = p.value(x)
    if not math.isfinite(f):
        raise Infeasible("no weighting of the vectors has a finite objective")
    Sx = p.sigma(x)
    history = [f]
    gap = math.inf
    it = 0
    for it in range(1, iters + 1):
        G = gradient(p.tag, Sx, p.V)
        grad = np.einsum("ij,jk,ik->i", inst.vectors, G, inst.vectors)
        s = knapsack_direction(grad, c, p.budget)
        gap = float(grad @ (x - s))
        if gap <= tol:
            break
        Ss = p.sigma(s)

        def along(t, Sx=Sx, Ss=Ss):
            return objective(p.tag, Sx + t * (Ss - Sx), p.V)

        res = minimize_scalar(along, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
        candidates = [(float(res.fun), float(res.x)), (along(1.0), 1.0)]
        f_new, t = min(candidates)
        if not f_new < f:
            break
        x = _fit_budget(np.clip(x + t * (s - x), 0.0, 1.0), c, p.budget)
        Sx = p.sigma(x)
        f = p.value(x)
        history.append(f)
    return RelaxationResult(x=x, objective=f, gap=gap, iterations=it, history=history)


@dataclass
class DesignRounding:
    z: np.ndarray
    cost: float
    budget: float
    lambda_ratio: float
    seed_used: int
    attempts: int
    certificate: RoundingCertificate | None
    objective_x: float
    objective_z: float

    def to_dict(self) -> dict:
        return {
            "kind": "design",
            "z": [int(v) for v in self.z],
            "cost": self.cost,
            "budget": self.budget,
            "lambda_ratio": self.lambda_ratio,
            "seed_used": self.seed_used,
            "attempts": self.attempts,
            "objective_x": self.objective_x,
            "objective_z": self.objective_z,
            "certificate": self.certificate.to_dict() if self.certificate else None,
        }


def budget_threshold(inst: VectorInstance, eps: float) -> float:
    """Smallest budget accepted by :func:`round_design`: ``15 n c_inf / eps^2``."""
    return 15.0 * inst.n * inst.c_inf / eps**2


def moment_ratio(inst: VectorInstance, x, z) -> float:
    """Largest ``r`` with ``Sigma(z) >= r Sigma(x)``, measured on ``range(Sigma(x))``."""
    w = whiten(inst.with_fields(x=np.asarray(x, dtype=float)))
    M = w.moment(np.asarray(z, dtype=float))
    return float(np.linalg.eigvalsh(sym(M))[0])


def round_design(
    p: DesignProblem,
    x,
    eps: float,
    seed: int,
    max_retries: int = 5,
    q_cap: float = 4.0,
    backend: str | None = None,
) -> DesignRounding:
    """Round fractional ``x`` to ``z`` with ``<c, z> <= <c, x>`` and ``Sigma(z) >= (1 - 4 eps) Sigma(x)``.

    The budget of the guarantee is the fractional spend ``C = <c, x>``, which
    must be at least ``15 n c_inf / eps^2``. A run that overshoots the budget,
    or hits the iteration cap, is retried with the next seed.
    """
    eps = float(eps)
    if not (0.0 < eps < 0.5):
        raise ValueError(f"eps must lie in (0, 0.5), got {eps!r}")
    inst = p.instance
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != inst.m or np.any(x < 0) or np.any(x > 1):
        raise InvalidInstance("x must be a vector in [0, 1]^m")
    spend = float(inst.c @ x)
    obj_x = p.value(x)
    if np.all((x == 0) | (x == 1)):
        return DesignRounding(x.copy(), spend, spend, 1.0, int(seed), 0, None, obj_x, obj_x)
    need = budget_threshold(inst, eps)
    if spend < need:
        raise BudgetTooSmall(
            f"budget <c, x> = {spend:.6g} is below 15 n c_inf / eps^2 = {need:.6g}"
        )
    white = whiten(inst.with_fields(x=x))
    shrink = 1.0 - 2.0 * eps
    sub = VectorInstance(white.vectors / math.sqrt(shrink), shrink * x, inst.c)
    floor = 1.0 - 4.0 * eps - 1e-7
    for attempt in range(max_retries + 1):
        s = int(seed) + attempt
        try:
            cert = randomized_swap(sub, eps, s, q_cap, backend, record_history=False)
        except IterationCapExceeded:
            continue
        z = cert.indicator()
        cost = float(inst.c @ z)
        if cost > spend:
            continue
        ratio = float(np.linalg.eigvalsh(sym(white.moment(z)))[0])
        if ratio < floor:
            raise CertificateViolation(f"moment ratio {ratio!r} is below 1 - 4 eps")
        return DesignRounding(z, cost, spend, ratio, s, attempt + 1, cert, obj_x, p.value(z))
    raise UnluckyRun(f"all {max_retries + 1} seeds overshot the budget or the iteration cap")


def _edge_vectors(G: Graph) -> np.ndarray:
    return G.incidence() @ helmert_basis(G.n)


def lambda2_problem(G: Graph, budget: float) -> DesignProblem:
    """E-design whose objective is ``1 / lambda_2(L_x)`` over edge weights ``x``."""
    vecs = _edge_vectors(G)
    inst = VectorInstance(vecs, np.zeros(G.m), G.cost)
    return DesignProblem(inst, budget, "E")


def total_reff_problem(G: Graph, budget: float) -> DesignProblem:
    """A-design whose objective is ``tr(L_x^+) / (n - 1)``.

    Total effective resistance equals ``n tr(L_x^+)``, i.e. ``n (n - 1)`` times
    this objective (see :func:`total_reff_from_objective`).
    """
    vecs = _edge_vectors(G)
    inst = VectorInstance(vecs, np.zeros(G.m), G.cost)
    return DesignProblem(inst, budget, "A")


def total_reff_from_objective(G: Graph, value: float) -> float:
    return G.n * (G.n - 1) * value
