"""Dense symmetric-matrix calculus.

Matrices are plain ``numpy`` arrays. :func:`sym` validates and symmetrizes
an input by averaging it with its transpose; every routine in this module
calls it first, so downstream code never sees accumulated asymmetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInstance, InvalidMatrix, NotPSD
from .instance import VectorInstance

#: Relative eigenvalue floor: ``lam <= FLOOR_REL * max(1, lam_max)`` counts as zero.
FLOOR_REL = 1e-10

#: Default relative tolerance for declaring a matrix not PSD.
PSD_TOL = 1e-9


def sym(M) -> np.ndarray:
    """Return ``(M + M^T) / 2`` as a float array, rejecting bad input."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix("matrix has non-finite entries")
    return 0.5 * (arr + arr.T)


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with an orthonormal eigenvector basis (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.T

    def apply(self, values) -> np.ndarray:
        """``U diag(values) U^T`` in this eigenbasis."""
        U = self.eigenvectors
        return sym((U * np.asarray(values, dtype=float)) @ U.T)

    def floor(self) -> float:
        """Threshold at or below which an eigenvalue is treated as zero."""
        top = float(self.eigenvalues[-1]) if self.dim else 0.0
        return FLOOR_REL * max(1.0, top)


def sym_eig(M) -> Spectrum:
    """Eigendecomposition of a symmetric matrix with ascending eigenvalues."""
    S = sym(M)
    w, U = np.linalg.eigh(S)
    return Spectrum(w, U)


def lambda_min(M) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    S = sym(M)
    return float(np.linalg.eigvalsh(S)[0]) if S.shape[0] else 0.0


def lambda_max(M) -> float:
    """Largest eigenvalue of a symmetric matrix."""
    S = sym(M)
    return float(np.linalg.eigvalsh(S)[-1]) if S.shape[0] else 0.0


def op_norm(M) -> float:
    """Spectral norm of a symmetric matrix."""
    S = sym(M)
    if S.shape[0] == 0:
        return 0.0
    w = np.linalg.eigvalsh(S)
    return float(max(abs(w[0]), abs(w[-1])))


def _check_psd(spec: Spectrum, tol: float) -> None:
    if spec.dim == 0:
        return
    scale = float(max(abs(spec.eigenvalues[0]), abs(spec.eigenvalues[-1])))
    if spec.eigenvalues[0] < -tol * scale:
        raise NotPSD(f"smallest eigenvalue {spec.eigenvalues[0]:.3e} is negative")


def psd_fn(M, f: str, tol: float = PSD_TOL) -> np.ndarray:
    """Apply ``sqrt``, ``pinv`` or ``pinv_sqrt`` to a PSD matrix.

    Eigenvalues at or below the floor are treated as zero: ``sqrt`` maps them
    to zero and the pseudo-inverse variants leave them in the nullspace.
    """
    spec = sym_eig(M)
    _check_psd(spec, tol)
    lam = spec.eigenvalues
    keep = lam > spec.floor()
    out = np.zeros_like(lam)
    if f == "sqrt":
        out[keep] = np.sqrt(lam[keep])
    elif f == "pinv":
        out[keep] = 1.0 / lam[keep]
    elif f == "pinv_sqrt":
        out[keep] = 1.0 / np.sqrt(lam[keep])
    else:
        raise ValueError(f"unknown psd function {f!r}")
    return spec.apply(out)


def range_basis(M, tol: float = PSD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the range of a PSD matrix and its eigenvalues.

    Returns ``(U_r, lam_r)`` with ``M ~= U_r diag(lam_r) U_r^T``. Each basis
    column is sign-normalized so its largest-magnitude entry is positive,
    which makes the output deterministic across LAPACK builds.
    """
    spec = sym_eig(M)
    _check_psd(spec, tol)
    keep = spec.eigenvalues > spec.floor()
    U = spec.eigenvectors[:, keep].copy()
    lam = spec.eigenvalues[keep].copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            U[:, j] = -col
    return U, lam


def whiten(inst: VectorInstance) -> VectorInstance:
    """Map vectors by ``M^{+1/2}`` onto the range of ``M = sum x_i v_i v_i^T``.

    The output lives in ``R^r`` with ``r = rank(M)`` and is isotropic. Weights,
    costs and linear rows are unchanged.
    """
    if inst.m == 0 or not np.any(inst.vectors) or not np.any(inst.x):
        raise DegenerateInstance("weighted moment matrix is zero")
    U, lam = range_basis(inst.moment())
    if lam.size == 0:
        raise DegenerateInstance("weighted moment matrix is zero")
    new_vectors = (inst.vectors @ U) / np.sqrt(lam)
    return inst.with_fields(vectors=new_vectors)
