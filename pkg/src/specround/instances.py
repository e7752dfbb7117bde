"""Instance generators shared by the tests and benchmarks."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .errors import InvalidInstance
from .instance import VectorInstance
from .linalg import whiten


def helmert_basis(n: int) -> np.ndarray:
    """``(n, n-1)`` orthonormal basis of the complement of the all-ones vector."""
    H = np.zeros((n, n - 1))
    for j in range(1, n):
        H[:j, j - 1] = 1.0
        H[j, j - 1] = -float(j)
        H[:, j - 1] /= math.sqrt(j * (j + 1))
    return H


def random_isotropic_instance(
    n: int,
    m: int,
    seed: int,
    cost_range: tuple[float, float] = (1.0, 2.0),
    x_range: tuple[float, float] = (0.0, 1.0),
) -> VectorInstance:
    """Gaussian vectors with uniform weights and costs, whitened to isotropy."""
    rng = np.random.Generator(np.random.Philox(seed))
    vectors = rng.standard_normal((m, n))
    x = rng.uniform(*x_range, size=m)
    c = rng.uniform(*cost_range, size=m)
    return whiten(VectorInstance(vectors, x, c))


def tight_lower_bound_example(n: int, eps_prime: float, c_inf: float = 1.0) -> VectorInstance:
    """Pairs ``sqrt(1 - eps') e_i`` (weight 1, free) and ``e_i`` (weight eps', cost c_inf).

    The fractional point is isotropic, yet the only zero-one selection whose
    moment matrix dominates the identity takes every vector. Vector ``2 i``
    is the free copy along ``e_i`` and vector ``2 i + 1`` the costly one.
    """
    if not 0.0 < eps_prime < 1.0:
        raise InvalidInstance("eps_prime must lie in (0, 1)")
    vectors = np.zeros((2 * n, n))
    x = np.empty(2 * n)
    c = np.empty(2 * n)
    for i in range(n):
        vectors[2 * i, i] = math.sqrt(1.0 - eps_prime)
        vectors[2 * i + 1, i] = 1.0
        x[2 * i], c[2 * i] = 1.0, 0.0
        x[2 * i + 1], c[2 * i + 1] = eps_prime, c_inf
    return VectorInstance(vectors, x, c)


def complete_graph_example(n: int, k: float) -> VectorInstance:
    """Edges of ``K_n`` as vectors ``sqrt((n-1)/(2k)) P(chi_i - chi_j)`` in ``R^{n-1}``.

    All weights equal ``2k / (n(n-1))`` and all costs are one. The weights
    are only valid when ``k <= n(n-1)/2``.
    """
    m = n * (n - 1) // 2
    weight = 2.0 * k / (n * (n - 1))
    if weight > 1.0:
        raise InvalidInstance(
            f"k={k} exceeds the edge count {m}: weights would be {weight:.4f} > 1"
        )
    H = helmert_basis(n)
    scale = math.sqrt((n - 1) / (2.0 * k))
    vectors = np.empty((m, n - 1))
    for e, (i, j) in enumerate(combinations(range(n), 2)):
        vectors[e] = scale * (H[i] - H[j])
    return VectorInstance(vectors, np.full(m, weight), np.ones(m))
