"""Network design: reduce a fractional edge solution to vectors, round, verify.

Edge ``e`` with incidence vector ``b_e`` becomes ``L_x^{+1/2} b_e`` written in
an orthonormal basis of the range of ``L_x`` (the complement of the all-ones
vector when the support is connected). The instance is isotropic and
``||v_e||^2`` is the effective resistance of ``e`` under conductances ``x``.
A zero-one ``z`` whose vectors dominate the identity has ``L_z >= L_x``, which
carries the cut and spectral constraints of ``x`` over to ``z``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import DisconnectedSupport, InvalidInstance
from .graph import (
    Graph,
    algebraic_connectivity,
    cut_edges,
    is_connected,
    laplacian,
    resistance_matrix,
)
from .instance import LinearRows, VectorInstance
from .linalg import range_basis, sym
from .rounding import RoundingCertificate, exact_round

#: Largest vertex count for the exhaustive cut check.
EXHAUSTIVE_CUT_LIMIT = 12

#: Absolute slack used when comparing PSD orders.
PSD_SLACK = 1e-9


@dataclass
class NetworkDesignInstance:
    """A fractional edge solution with the constraints it satisfies.

    Edge weights of ``graph`` hold the fractional ``x_e`` and its costs the
    ``c_e``. ``requirements`` maps vertex pairs ``(u, v)`` to connectivity
    demands ``f_uv``; ``reff_bounds`` maps pairs to resistance caps.
    """

    graph: Graph
    requirements: dict = field(default_factory=dict)
    degree_bounds: np.ndarray | None = None
    reff_bounds: dict = field(default_factory=dict)
    M: np.ndarray | None = None
    lambda2: float | None = None
    packing: LinearRows | None = None
    covering: LinearRows | None = None

    def __post_init__(self):
        G = self.graph
        if np.any(G.weight > 1.0):
            raise InvalidInstance("fractional edge weights must lie in [0, 1]")
        reqs = {}
        for (u, v), f in dict(self.requirements).items():
            self._check_pair(u, v)
            if not (math.isfinite(f) and f >= 0):
                raise InvalidInstance("requirements must be finite and nonnegative")
            reqs[(int(min(u, v)), int(max(u, v)))] = float(f)
        self.requirements = reqs
        rb = {}
        for (u, v), r in dict(self.reff_bounds).items():
            self._check_pair(u, v)
            if not (math.isfinite(r) and r >= 0):
                raise InvalidInstance("resistance bounds must be finite and nonnegative")
            rb[(int(min(u, v)), int(max(u, v)))] = float(r)
        self.reff_bounds = rb
        if self.degree_bounds is not None:
            db = np.asarray(self.degree_bounds, dtype=float).reshape(-1)
            if db.shape[0] != G.n or not np.all(np.isfinite(db)) or np.any(db < 0):
                raise InvalidInstance("degree bounds must be n finite nonnegative numbers")
            self.degree_bounds = db
        if self.M is not None:
            M = sym(self.M)
            if M.shape != (G.n, G.n):
                raise InvalidInstance("M must be n x n")
            self.M = M
        if self.lambda2 is not None and not (math.isfinite(self.lambda2) and self.lambda2 >= 0):
            raise InvalidInstance("lambda2 bound must be finite and nonnegative")
        for name in ("packing", "covering"):
            rows = getattr(self, name)
            if rows is not None and rows.matrix.shape[1] != G.m:
                raise InvalidInstance(f"{name} rows must have one column per edge")

    def _check_pair(self, u, v):
        if not (0 <= u < self.graph.n and 0 <= v < self.graph.n) or u == v:
            raise InvalidInstance(f"invalid vertex pair ({u}, {v})")

    @property
    def x(self) -> np.ndarray:
        return self.graph.weight

    def cut_requirement(self, side: np.ndarray) -> float:
        """``f(S)``: the largest demand separated by the cut."""
        best = 0.0
        for (u, v), f in self.requirements.items():
            if side[u] != side[v]:
                best = max(best, f)
        return best

    @classmethod
    def from_sidecar(cls, graph: Graph, data: dict) -> "NetworkDesignInstance":
        """Build from the JSON sidecar structure (see :func:`load_sidecar`)."""
        try:
            reqs = {(int(u), int(v)): float(f) for u, v, f in data.get("requirements", [])}
            reff = {(int(u), int(v)): float(r) for u, v, r in data.get("reff_bounds", [])}
            packing = covering = None
            if data.get("packing") is not None:
                packing = LinearRows(data["packing"]["A"], data["packing"]["a"])
            if data.get("covering") is not None:
                covering = LinearRows(data["covering"]["B"], data["covering"]["b"])
            return cls(
                graph=graph,
                requirements=reqs,
                degree_bounds=data.get("degree_bounds"),
                reff_bounds=reff,
                M=data.get("M"),
                lambda2=data.get("lambda2"),
                packing=packing,
                covering=covering,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInstance):
                raise
            raise InvalidInstance(f"bad sidecar: {exc}") from None


def load_sidecar(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None


def _whitening(nd: NetworkDesignInstance) -> tuple[np.ndarray, np.ndarray]:
    """Basis of ``range(L_x)`` and the matching eigenvalues."""
    return range_basis(laplacian(nd.graph))


def graph_to_vectors(nd: NetworkDesignInstance) -> VectorInstance:
    """Isotropic vector instance of dimension ``n - 1`` for a connected support."""
    G = nd.graph
    if G.n < 2:
        raise InvalidInstance("network design needs at least two vertices")
    if not is_connected(G):
        raise DisconnectedSupport("support of x is not connected")
    U, lam = _whitening(nd)
    vectors = (G.incidence() @ U) / np.sqrt(lam)
    return VectorInstance(vectors, G.weight, G.cost, nd.packing, nd.covering)


@dataclass
class FamilyResult:
    """Outcome of one constraint family; ``passed`` is ``None`` when not applicable."""

    name: str
    passed: bool | None
    residual: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "residual": self.residual,
            "detail": self.detail,
        }


@dataclass
class ConstraintReport:
    families: list

    @property
    def passed(self) -> bool:
        return all(f.passed is not False for f in self.families)

    def family(self, name: str) -> FamilyResult:
        for f in self.families:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "families": [f.to_dict() for f in self.families]}


def _pencil_extremes(nd: NetworkDesignInstance, z: np.ndarray) -> tuple[float, float] | None:
    """Extreme eigenvalues of ``L_z`` whitened by ``L_x`` on ``range(L_x)``.

    Returns ``None`` when the support of ``x`` is disconnected, in which case
    the range of ``L_x`` is not the whole complement of the ones vector.
    """
    if not is_connected(nd.graph):
        return None
    U, lam = _whitening(nd)
    W = U / np.sqrt(lam)
    Lz = laplacian(nd.graph, weights=z)
    w = np.linalg.eigvalsh(sym(W.T @ Lz @ W))
    return float(w[0]), float(w[-1])


def verify_spectral_implications(
    nd: NetworkDesignInstance, z, eps_band: float = 1e-7
) -> ConstraintReport:
    """Check the constraint families that ``L_z >= L_x`` transfers to ``z``."""
    G = nd.graph
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != G.m:
        raise ValueError(f"z must have length {G.m}")
    fams: list[FamilyResult] = []
    Lx = laplacian(G)
    Lz = laplacian(G, weights=z)
    ext = _pencil_extremes(nd, z)

    # (i) L_z >= (1 - eps) L_x
    if ext is not None:
        res = ext[0] - (1.0 - eps_band)
        fams.append(FamilyResult("spectral_lower", res >= 0.0, res, "whitened lambda_min"))
    else:
        scale = max(1.0, float(np.abs(Lx).max()))
        res = float(np.linalg.eigvalsh(sym(Lz - (1.0 - eps_band) * Lx))[0])
        fams.append(
            FamilyResult("spectral_lower", res >= -PSD_SLACK * scale, res, "direct difference")
        )

    # (ii) effective resistances
    if nd.reff_bounds:
        R = resistance_matrix(G, weights=z)
        worst = math.inf
        for (u, v), r in nd.reff_bounds.items():
            worst = min(worst, (1.0 + 2.0 * eps_band) * r - R[u, v])
        fams.append(FamilyResult("reff", worst >= 0.0, float(worst), f"{len(nd.reff_bounds)} pairs"))
    else:
        fams.append(FamilyResult("reff", None, 0.0, "no bounds declared"))

    # (iii) L_z >= (1 - eps) M
    if nd.M is not None:
        scale = max(1.0, float(np.abs(nd.M).max()))
        res = float(np.linalg.eigvalsh(sym(Lz - (1.0 - eps_band) * nd.M))[0])
        fams.append(FamilyResult("spectral_M", res >= -PSD_SLACK * scale, res))
    else:
        fams.append(FamilyResult("spectral_M", None, 0.0, "no M declared"))

    # (iv) algebraic connectivity
    if nd.lambda2 is not None:
        res = algebraic_connectivity(G, weights=z) - (1.0 - eps_band) * nd.lambda2
        fams.append(FamilyResult("lambda2", res >= -PSD_SLACK, float(res)))
    else:
        fams.append(FamilyResult("lambda2", None, 0.0, "no bound declared"))

    # (v) cut requirements
    fams.append(_check_cuts(nd, z, eps_band))

    # (vi) degree bounds, implied when L_z <= (1 + eps) L_x
    if nd.degree_bounds is not None:
        upper_ok = ext is not None and ext[1] <= 1.0 + eps_band
        deg = np.zeros(G.n)
        np.add.at(deg, G.u, z)
        np.add.at(deg, G.v, z)
        res = float(np.min((1.0 + eps_band) * nd.degree_bounds - deg))
        detail = "implied by spectral upper bound" if upper_ok else "spectral upper bound fails"
        fams.append(FamilyResult("degree", (res >= 0.0) if upper_ok else None, res, detail))
    else:
        fams.append(FamilyResult("degree", None, 0.0, "no bounds declared"))
    return ConstraintReport(fams)


def _check_cuts(nd: NetworkDesignInstance, z: np.ndarray, eps_band: float) -> FamilyResult:
    G = nd.graph
    n = G.n
    if not nd.requirements:
        return FamilyResult("cuts", None, 0.0, "no requirements declared")
    if n <= EXHAUSTIVE_CUT_LIMIT:
        # Every cut up to complement: subsets of {1..n-1} joined with vertex 0.
        sides = []
        for size in range(0, n - 1):
            for rest in combinations(range(1, n), size):
                sides.append((0,) + rest)
        detail = f"exhaustive over {len(sides)} cuts"
    else:
        sides = [(v,) for v in range(n)]
        detail = f"singletons only ({n} > {EXHAUSTIVE_CUT_LIMIT}); pairs rely on spectral_lower"
    worst = math.inf
    for S in sides:
        side = np.zeros(n, dtype=bool)
        side[list(S)] = True
        need = nd.cut_requirement(side)
        if need == 0:
            continue
        have = float(z[cut_edges(G, S)].sum())
        worst = min(worst, have - (1.0 - eps_band) * need)
    if worst is math.inf:
        worst = 0.0
    return FamilyResult("cuts", worst >= -PSD_SLACK, float(worst), detail)


@dataclass
class NetworkSolution:
    z: np.ndarray
    certificate: RoundingCertificate
    report: ConstraintReport
    cost_bound: float
    packing_bounds: list
    covering_deltas: list

    def to_dict(self) -> dict:
        return {
            "kind": "netdesign",
            "z": [int(v) for v in self.z],
            "certificate": self.certificate.to_dict(),
            "report": self.report.to_dict(),
            "cost": self.certificate.cost,
            "cost_bound": self.cost_bound,
            "cost_within_bound": self.certificate.cost <= self.cost_bound,
            "packing_bounds": self.packing_bounds,
            "covering_deltas": self.covering_deltas,
        }


def round_network(
    nd: NetworkDesignInstance,
    eps: float,
    seed: int,
    q_cap: float = 4.0,
    eps_band: float = 1e-7,
    backend: str | None = None,
) -> NetworkSolution:
    """Round a connected fractional solution and verify what it implies."""
    inst = graph_to_vectors(nd)
    cert = exact_round(inst, eps, seed, q_cap, backend)
    z = cert.indicator()
    report = verify_spectral_implications(nd, z, eps_band)
    n = nd.graph.n
    c_inf = inst.c_inf
    cost_bound = (1.0 + 6.0 * eps) * inst.cost() + 15.0 * n * c_inf / eps
    pack_bounds = []
    if nd.packing is not None:
        A, a = nd.packing.matrix, nd.packing.rhs
        for i in range(A.shape[0]):
            bound = (1.0 + 6.0 * eps) * a[i] + 15.0 * n * float(A[i].max()) / eps
            pack_bounds.append({"value": float(A[i] @ z), "bound": bound})
    cover = []
    if nd.covering is not None:
        B, b = nd.covering.matrix, nd.covering.rhs
        for j in range(B.shape[0]):
            top = float(B[j].max())
            val = float(B[j] @ z)
            delta = (b[j] - val) / (n * top) if top > 0 else 0.0
            cover.append({"value": val, "rhs": float(b[j]), "delta": max(delta, 0.0)})
    return NetworkSolution(z, cert, report, cost_bound, pack_bounds, cover)
