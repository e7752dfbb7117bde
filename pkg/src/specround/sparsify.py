"""Deterministic greedy additive sparsification of unweighted graphs.

Each round scores every unused edge ``e`` by
``<A, diag(L_G - m L_e, L+_G - m L+_e)>`` where ``A`` is the action matrix of
the accumulated feedback. The best edge is taken and
``diag(L_G - m L_e, L+_G - m L+_e) - 2 d I`` is fed back. The feedback is block diagonal,
so the accumulators and the action matrix are kept as two ``n x n`` blocks
sharing one trace normalizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CertificateViolation, EmptySparsifier, GraphError
from .graph import Graph, degree_matrix, laplacian, signless_laplacian
from .linalg import Spectrum, op_norm, sym, sym_eig
from .regret import compute_action_matrix

#: Slack on the per-round selection bound.
SELECTION_TOL = 1e-9

#: Largest width allowed by the width lemma.
WIDTH_LIMIT = 0.25

#: Tolerance on the off-diagonal blocks of the action matrix.
BLOCK_TOL = 1e-9


@dataclass
class SparsifierCertificate:
    """Selected edges with the scaled residual bounds.

    ``upper_residual = lambda_max(scale L_F - L_G) / d`` and
    ``lower_residual = lambda_min(scale L_F - L_G - 2 scale D_F + 2 D_G) / d``.
    """

    edges: tuple[int, ...]
    m: int
    m_tilde: int
    scale: float
    upper_residual: float
    lower_residual: float
    iterations: int
    eps: float
    q: float
    d: int
    alpha: float
    selection_threshold: float
    selection_scores: list = field(default_factory=list)
    widths: list = field(default_factory=list)
    block_offdiag: list = field(default_factory=list)

    @property
    def width_constant(self) -> float:
        """Largest observed width divided by ``eps``."""
        return max(self.widths) / self.eps if self.widths else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": "sparsify",
            "edges": list(self.edges),
            "m": self.m,
            "m_tilde": self.m_tilde,
            "scale": self.scale,
            "upper_residual": self.upper_residual,
            "lower_residual": self.lower_residual,
            "iterations": self.iterations,
            "eps": self.eps,
            "q": self.q,
            "d": self.d,
            "alpha": self.alpha,
            "selection_threshold": self.selection_threshold,
            "min_selection_score": min(self.selection_scores) if self.selection_scores else None,
            "max_width": max(self.widths) if self.widths else None,
            "width_constant": self.width_constant,
        }


def _residuals(G: Graph, F: np.ndarray) -> tuple[float, float, float, int, float]:
    """Extreme eigenvalues of the residual matrices for edge set ``F``.

    Returns ``(upper, lower_plain, lower_shifted, d, scale)`` without dividing
    by ``d``.
    """
    mask = np.zeros(G.m)
    mask[F] = 1.0
    scale = G.m / len(F)
    LG = laplacian(G, use_weights=False)
    LF = laplacian(G, weights=mask)
    DG = degree_matrix(G, use_weights=False)
    DF = degree_matrix(G, weights=mask)
    diff = sym(scale * LF - LG)
    w = np.linalg.eigvalsh(diff)
    shifted = np.linalg.eigvalsh(sym(diff - 2.0 * scale * DF + 2.0 * DG))
    return float(w[-1]), float(w[0]), float(shifted[0]), G.max_degree(), scale


def _block_spectrum(s1: Spectrum, s2: Spectrum) -> Spectrum:
    """Spectrum of ``diag(Z1, Z2)`` assembled from the two block spectra."""
    n1, n2 = s1.dim, s2.dim
    lam = np.concatenate([s1.eigenvalues, s2.eigenvalues])
    U = np.zeros((n1 + n2, n1 + n2))
    U[:n1, :n1] = s1.eigenvectors
    U[n1:, n1:] = s2.eigenvectors
    order = np.argsort(lam, kind="stable")
    return Spectrum(lam[order], U[:, order])


def greedy_additive_sparsify(
    G: Graph,
    eps: float,
    q: float = 0.1,
    backend: str | None = None,
    check_blocks: bool = True,
) -> SparsifierCertificate:
    """Pick ``ceil(n / eps^2)`` distinct edges approximating ``L_G`` additively.

    Edge weights are ignored: the graph is treated as unweighted. When
    ``m < 2 n / eps^2`` the graph is already small and is returned whole.
    ``check_blocks`` also builds the full ``2n x 2n`` action matrix each round
    and asserts it matches the blockwise one.
    """
    eps = float(eps)
    if not (0.0 < eps < 1.0) and eps != 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps!r}")
    if not q > 0:
        raise ValueError("q must be positive")
    n, m = G.n, G.m
    if m == 0:
        raise GraphError("graph has no edges")
    d = G.max_degree()
    if m < 2.0 * n / eps**2:
        return SparsifierCertificate(
            edges=tuple(range(m)),
            m=m,
            m_tilde=m,
            scale=1.0,
            upper_residual=0.0,
            lower_residual=0.0,
            iterations=0,
            eps=eps,
            q=float(q),
            d=d,
            alpha=0.0,
            selection_threshold=0.0,
        )

    kern = kernels.get_backend(backend)
    tau = math.ceil(n / eps**2)
    alpha = q * eps / math.sqrt(d * m)
    threshold = -2.0 * math.sqrt(n) / (alpha * m)
    LG = laplacian(G, use_weights=False)
    LGp = signless_laplacian(G, use_weights=False)
    eye = np.eye(n)
    Z1 = np.zeros((n, n))
    Z2 = np.zeros((n, n))
    taken = np.zeros(m, dtype=np.uint8)
    us = np.ascontiguousarray(G.u, dtype=np.int64)
    vs = np.ascontiguousarray(G.v, dtype=np.int64)
    scores = np.empty(m)
    chosen: list[int] = []
    sel_scores: list[float] = []
    widths: list[float] = []
    offdiag: list[float] = []

    for _ in range(tau):
        s1, s2 = sym_eig(Z1), sym_eig(Z2)
        spec = _block_spectrum(s1, s2)
        am = compute_action_matrix(_blockdiag(Z1, Z2), alpha, spec, backend)
        A = am.A
        B, C = A[:n, :n], A[n:, n:]
        if check_blocks:
            full = compute_action_matrix(_blockdiag(Z1, Z2), alpha, None, backend).A
            off = float(max(np.abs(full[:n, n:]).max(), np.abs(full[n:, :n]).max()))
            if off > BLOCK_TOL or not np.allclose(full, A, rtol=0.0, atol=1e-9):
                raise CertificateViolation("action matrix lost its block structure")
            offdiag.append(off)
        base = float(np.sum(B * LG) + np.sum(C * LGp))
        kern.edge_scores(
            np.ascontiguousarray(B), np.ascontiguousarray(C), us, vs, taken, base, float(m), scores
        )
        e = int(np.argmax(scores))
        best = float(scores[e])
        if not best >= threshold - SELECTION_TOL:
            raise CertificateViolation(
                f"best edge score {best!r} is below the guaranteed {threshold!r}"
            )
        u, v = int(G.u[e]), int(G.v[e])
        Le = np.zeros((n, n))
        Le[u, u] = Le[v, v] = 1.0
        Lep = Le.copy()
        Le[u, v] = Le[v, u] = -1.0
        Lep[u, v] = Lep[v, u] = 1.0
        F1 = LG - m * Le - 2.0 * d * eye
        F2 = LGp - m * Lep - 2.0 * d * eye
        Q = am.A_quarter
        Q1, Q2 = Q[:n, :n], Q[n:, n:]
        width = alpha * max(op_norm(Q1 @ F1 @ Q1), op_norm(Q2 @ F2 @ Q2))
        if width > WIDTH_LIMIT:
            raise CertificateViolation(f"width {width!r} exceeds {WIDTH_LIMIT}; lower q")
        Z1 += F1
        Z2 += F2
        taken[e] = 1
        chosen.append(e)
        sel_scores.append(best)
        widths.append(width)

    F = np.asarray(chosen, dtype=np.int64)
    upper, _, lower, _, scale = _residuals(G, F)
    return SparsifierCertificate(
        edges=tuple(chosen),
        m=m,
        m_tilde=len(chosen),
        scale=scale,
        upper_residual=upper / d,
        lower_residual=lower / d,
        iterations=tau,
        eps=eps,
        q=float(q),
        d=d,
        alpha=alpha,
        selection_threshold=threshold,
        selection_scores=sel_scores,
        widths=widths,
        block_offdiag=offdiag,
    )


def _blockdiag(Z1: np.ndarray, Z2: np.ndarray) -> np.ndarray:
    n1, n2 = Z1.shape[0], Z2.shape[0]
    out = np.zeros((n1 + n2, n1 + n2))
    out[:n1, :n1] = Z1
    out[n1:, n1:] = Z2
    return out


@dataclass(frozen=True)
class AdditiveReport:
    """Residual spectra of a candidate sparsifier and the implied error levels.

    ``eps_additive`` is the smallest ``eps`` with
    ``-eps d I <= scale L_F - L_G <= eps d I``; ``eps_two_sided`` is the
    smallest with ``2 scale D_F - 2 D_G - eps d I <= scale L_F - L_G <= eps d I``.
    """

    m: int
    m_tilde: int
    d: int
    scale: float
    upper: float
    lower: float
    lower_shifted: float
    eps_additive: float
    eps_two_sided: float
    eps_claimed: float

    @property
    def passes_additive(self) -> bool:
        return self.eps_additive <= self.eps_claimed

    @property
    def passes_two_sided(self) -> bool:
        return self.eps_two_sided <= self.eps_claimed

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "m_tilde": self.m_tilde,
            "d": self.d,
            "scale": self.scale,
            "upper": self.upper,
            "lower": self.lower,
            "lower_shifted": self.lower_shifted,
            "eps_additive": self.eps_additive,
            "eps_two_sided": self.eps_two_sided,
            "eps_claimed": self.eps_claimed,
            "passes_additive": self.passes_additive,
            "passes_two_sided": self.passes_two_sided,
        }


def verify_additive(G: Graph, F, eps_claimed: float) -> AdditiveReport:
    """Measure how well edge subset ``F`` (treated as unweighted) sparsifies ``G``."""
    F = np.asarray(list(F), dtype=np.int64)
    if F.size == 0:
        raise EmptySparsifier("edge set is empty")
    if F.min() < 0 or F.max() >= G.m:
        raise GraphError("edge index out of range")
    if np.unique(F).size != F.size:
        raise GraphError("edge set repeats an index")
    upper, lower, lower_shifted, d, scale = _residuals(G, F)
    dd = float(max(d, 1))
    return AdditiveReport(
        m=G.m,
        m_tilde=int(F.size),
        d=d,
        scale=scale,
        upper=upper,
        lower=lower,
        lower_shifted=lower_shifted,
        eps_additive=max(upper, -lower, 0.0) / dd,
        eps_two_sided=max(upper, -lower_shifted, 0.0) / dd,
        eps_claimed=float(eps_claimed),
    )
