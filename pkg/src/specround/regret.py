"""Action matrices of the square-root-regularized regret player.

Given an accumulated symmetric matrix ``Z`` and a learning rate ``alpha``,
the action matrix is ``A = (alpha Z - l I)^{-2}`` where ``l < alpha
lambda_min(Z)`` is the unique value making ``tr(A) = 1``. Writing
``s = alpha lambda_min(Z) - l`` and ``mu_i = alpha (lambda_i - lambda_min)``,
the trace condition reads ``sum_i (mu_i + s)^{-2} = 1``. The leading term is
``s^{-2}`` and every term is at most ``s^{-2}``, so the root lies in
``[1, sqrt(n)]``; the kernels bisect on that bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DimensionError, InvalidMatrix, NumericalFailure
from .linalg import Spectrum, sym, sym_eig

#: Residual target for the trace normalizer.
NORMALIZER_TOL = 1e-12

#: Iteration limit for the bisection.
MAX_BISECTIONS = 200


@dataclass(frozen=True, eq=False)
class ActionMatrix:
    """Density matrix ``(alpha Z - l I)^{-2}`` stored in ``Z``'s eigenbasis.

    ``half_eigs`` are the eigenvalues of ``A^{1/2} = (alpha Z - l I)^{-1}``,
    aligned with ``spectrum.eigenvectors``.
    """

    Z: np.ndarray
    alpha: float
    l: float
    spectrum: Spectrum
    half_eigs: np.ndarray
    shift: float
    bisections: int

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def eigs(self) -> np.ndarray:
        """Eigenvalues of ``A``."""
        return self.half_eigs**2

    @cached_property
    def A(self) -> np.ndarray:
        return self.spectrum.apply(self.eigs)

    @cached_property
    def A_half(self) -> np.ndarray:
        return self.spectrum.apply(self.half_eigs)

    @cached_property
    def A_quarter(self) -> np.ndarray:
        return self.spectrum.apply(np.sqrt(self.half_eigs))

    @property
    def lambda_min_Z(self) -> float:
        return float(self.spectrum.eigenvalues[0])

    def normalizer_residual(self, l: float) -> float:
        """``sum_i (alpha lambda_i - l)^{-2} - 1`` for a trial ``l``."""
        gaps = self.alpha * self.spectrum.eigenvalues - l
        return float(np.sum(gaps**-2.0) - 1.0)


def compute_action_matrix(
    Z, alpha: float, spectrum: Spectrum | None = None, backend: str | None = None
) -> ActionMatrix:
    """Build the action matrix for accumulated matrix ``Z``.

    ``spectrum`` may carry a precomputed eigendecomposition of ``Z`` so the
    caller can reuse it for its own ``lambda_min`` checks.
    """
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError("alpha must be a positive finite number")
    Zs = sym(Z)
    n = Zs.shape[0]
    if n == 0:
        raise InvalidMatrix("action matrix needs dimension at least one")
    if spectrum is None:
        spectrum = sym_eig(Zs)
    elif spectrum.dim != n:
        raise DimensionError("spectrum dimension does not match Z")
    lam = spectrum.eigenvalues
    mu = np.ascontiguousarray(alpha * (lam - lam[0]))
    kern = kernels.get_backend(backend)
    s, iterations, converged = kern.solve_shift(mu, NORMALIZER_TOL, MAX_BISECTIONS)
    if not converged:
        raise NumericalFailure(f"trace normalizer did not converge in {iterations} steps")
    half = 1.0 / (mu + s)
    return ActionMatrix(
        Z=Zs,
        alpha=float(alpha),
        l=float(alpha * lam[0] - s),
        spectrum=spectrum,
        half_eigs=half,
        shift=float(s),
        bisections=int(iterations),
    )


def leverage(v, am: ActionMatrix) -> tuple[float, float]:
    """Return ``(v^T A v, v^T A^{1/2} v)``."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != am.n:
        raise DimensionError(f"vector has length {v.shape[0]}, expected {am.n}")
    p2 = (am.spectrum.eigenvectors.T @ v) ** 2
    return float(p2 @ am.eigs), float(p2 @ am.half_eigs)


def leverages(V, am: ActionMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`leverage` for an ``(m, n)`` array of vectors."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[1] != am.n:
        raise DimensionError(f"vectors must be (m, {am.n}), got {V.shape}")
    P2 = (V @ am.spectrum.eigenvectors) ** 2
    return P2 @ am.eigs, P2 @ am.half_eigs


def cospectral_bounds(Z, am: ActionMatrix) -> tuple[float, float]:
    """Return ``<Z, A>`` and ``alpha <Z, A^{1/2}>``.

    When ``Z`` is the matrix ``am`` was built from, both products are read off
    the shared eigenbasis; otherwise they are plain Frobenius products.
    """
    Zs = sym(Z)
    if Zs.shape != am.Z.shape:
        raise DimensionError(f"Z has shape {Zs.shape}, action matrix is {am.Z.shape}")
    if np.array_equal(Zs, am.Z):
        lam = am.spectrum.eigenvalues
        return float(lam @ am.eigs), float(am.alpha * (lam @ am.half_eigs))
    return float(np.sum(Zs * am.A)), float(am.alpha * np.sum(Zs * am.A_half))
