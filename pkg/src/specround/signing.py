"""Cost-coordinate signing and the two-sided certificate verifier.

Appending ``s_i sqrt(c_i lam / <c,x>)`` to each vector turns cost control into
a spectral condition. The cross term of the augmented moment matrix is the
vector ``sum_i s_i w_i`` with ``w_i = x_i sqrt(c_i lam / <c,x>) v_i``; we pick
signs greedily so that the exact conditional expectation of its squared norm
never increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CertificateViolation, DegenerateCosts
from .instance import VectorInstance
from .rounding import _require_isotropic


@dataclass(frozen=True)
class SignedAugmentation:
    """Signs, augmented vectors in ``R^{n+1}`` and the achieved cross-term norm."""

    signs: np.ndarray
    vectors: np.ndarray
    norm: float
    expected_sq_norm: float
    max_vector_norm: float
    lam: float

    def moment(self, x) -> np.ndarray:
        """``sum_i x_i u_i u_i^T`` of the augmented vectors."""
        return (self.vectors.T * np.asarray(x, dtype=float)) @ self.vectors


def derandomized_signing(inst: VectorInstance, lam: float) -> SignedAugmentation:
    """Fix signs in index order by the method of conditional expectations.

    With the first ``j`` signs fixed, the expected squared norm over uniform
    remaining signs is ``||p_j||^2 + sum_{i > j} ||w_i||^2`` where ``p_j`` is
    the signed partial sum. Choosing ``s_j`` to minimize ``||p_{j-1} + s w_j||``
    therefore never increases it; ties go to ``+1``.
    """
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError("lam must be a positive finite number")
    total = inst.cost()
    if total <= 0:
        raise DegenerateCosts("<c, x> must be positive")
    coeff = np.sqrt(inst.c * lam / total)
    W = (inst.x * coeff)[:, None] * inst.vectors
    sq = np.einsum("ij,ij->i", W, W)
    remaining = float(sq.sum())
    start = remaining
    partial = np.zeros(inst.n)
    signs = np.ones(inst.m)
    current = remaining
    for i in range(inst.m):
        remaining -= sq[i]
        dot = float(partial @ W[i])
        s = 1.0 if dot <= 0.0 else -1.0
        partial = partial + s * W[i]
        nxt = float(partial @ partial) + max(remaining, 0.0)
        if nxt > current * (1.0 + 1e-12) + 1e-300:
            raise CertificateViolation("conditional expectation increased while signing")
        current = nxt
        signs[i] = s
    U = np.hstack([inst.vectors, (signs * coeff)[:, None]])
    lmax = float(np.sqrt(np.einsum("ij,ij->i", inst.vectors, inst.vectors)).max()) if inst.m else 0.0
    return SignedAugmentation(
        signs=signs,
        vectors=U,
        norm=float(np.linalg.norm(partial)),
        expected_sq_norm=start,
        max_vector_norm=lmax,
        lam=float(lam),
    )


@dataclass(frozen=True)
class TwoSidedReport:
    lambda_min: float
    lambda_max: float
    cost_ratio: float
    lower: float
    upper: float
    spectral_pass: bool
    cost_pass: bool

    @property
    def passed(self) -> bool:
        return self.spectral_pass and self.cost_pass

    def to_dict(self) -> dict:
        return {
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "cost_ratio": self.cost_ratio,
            "lower": self.lower,
            "upper": self.upper,
            "spectral_pass": self.spectral_pass,
            "cost_pass": self.cost_pass,
            "passed": self.passed,
        }


def verify_two_sided(
    inst: VectorInstance, z, eps: float, band_constant: float = 8.0
) -> TwoSidedReport:
    """Check ``(1 - b eps) I <= sum z v v^T <= (1 + b eps) I`` and the same band on cost.

    ``b`` is ``band_constant`` (default 8). The cost ratio of an instance
    with zero fractional cost is 1 if ``z`` is free as well, else infinite.
    """
    _require_isotropic(inst)
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != inst.m:
        raise ValueError(f"z must have length {inst.m}")
    lam = np.linalg.eigvalsh(inst.moment(z))
    lo, hi = 1.0 - band_constant * eps, 1.0 + band_constant * eps
    frac = inst.cost()
    got = inst.cost(z)
    if frac > 0:
        ratio = got / frac
    else:
        ratio = 1.0 if got == 0 else math.inf
    return TwoSidedReport(
        lambda_min=float(lam[0]),
        lambda_max=float(lam[-1]),
        cost_ratio=float(ratio),
        lower=lo,
        upper=hi,
        spectral_pass=bool(lam[0] >= lo and lam[-1] <= hi),
        cost_pass=bool(lo <= ratio <= hi),
    )
