"""
1D Gauss-Lobatto Lagrange basis on the reference cell [0, 1].

Nodes and weights:
    lobatto_rule(K) returns the K+1 Gauss-Lobatto points on [0, 1]
    (endpoints included) and the matching quadrature weights, normalized
    so the weights sum to 1.

Local operator blocks (cell size dx, collocated quadrature):
    mass        diag(w_s)                        [(K+1) diagonal, exact lumping]
    deriv       (1/dx)  int phi_s phi_p' dx      [derivative on the trial side]
    deriv_test  (1/dx)  int phi_s' phi_p dx      [derivative on the test side = deriv.T]
    stiffness   (1/dx^2) int phi_s' phi_p' dx
    integrator  dx * int_0^{x_s} phi_p dx        [rows s = 1..K; the s = 0 row is 0]

All weak-form blocks carry the 1/dx normalization so that assembled
operators behave like finite-difference stencils: mass is dimensionless,
deriv scales as 1/dx, stiffness as 1/dx^2, the antiderivative table as dx.
Integrals of degree <= 2K-1 are exact under the collocated rule; mass is
the standard collocation lumping.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 200


class LobattoRule(NamedTuple):
    """Gauss-Lobatto nodes/weights on [0, 1], weights summing to 1."""
    nodes: np.ndarray
    weights: np.ndarray


class LocalBlocks(NamedTuple):
    """Per-cell operator blocks for degree K on a cell of size dx."""
    mass: np.ndarray        # (K+1,) diagonal entries
    deriv: np.ndarray       # (K+1, K+1)
    deriv_test: np.ndarray  # (K+1, K+1)
    stiffness: np.ndarray   # (K+1, K+1)
    integrator: np.ndarray  # (K, K+1), rows s = 1..K
    nodes: np.ndarray       # (K+1,) reference nodes
    weights: np.ndarray     # (K+1,) reference weights
    degree: int
    dx: float


def lobatto_rule(K: int) -> LobattoRule:
    """Gauss-Lobatto rule with K+1 points on [0, 1].

    Newton iteration on [-1, 1] for the extrema of the degree-K Legendre
    polynomial, started from the Chebyshev-Gauss-Lobatto points. Endpoints
    are fixed points of the update.
    """
    if K < 1:
        raise ValueError(f"degree must be >= 1, got {K}")
    n = K + 1
    x = np.cos(np.pi * np.arange(n) / K)
    P = np.zeros((n, n))
    xold = 2.0 * np.ones(n)
    for _ in range(_NEWTON_MAXIT):
        if np.max(np.abs(x - xold)) < _NEWTON_TOL:
            break
        xold = x
        P[:, 0] = 1.0
        P[:, 1] = x
        for k in range(2, n):
            P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k
        x = xold - (x * P[:, K] - P[:, K - 1]) / (n * P[:, K])
    else:
        raise RuntimeError(f"Lobatto Newton iteration did not converge for K={K}")
    # refresh the Legendre values at the converged nodes before weighting
    P[:, 0] = 1.0
    P[:, 1] = x
    for k in range(2, n):
        P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k
    w = 2.0 / (K * n * P[:, K] ** 2)
    # cos ordering is descending; flip to ascending and map to [0, 1]
    nodes = (x[::-1] + 1.0) / 2.0
    weights = w[::-1] / 2.0
    nodes[0], nodes[-1] = 0.0, 1.0
    return LobattoRule(nodes, weights)


def lagrange_eval(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Values of all cardinal Lagrange bases at points x.

    Returns an array of shape (len(x), len(nodes)); column j is phi_j.
    Direct product form; query points coinciding with a node are handled
    exactly.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = nodes.size
    out = np.ones((x.size, n))
    for j in range(n):
        for m in range(n):
            if m != j:
                out[:, j] *= (x - nodes[m]) / (nodes[j] - nodes[m])
    return out


def lagrange_diff_matrix(nodes: np.ndarray) -> np.ndarray:
    """Differentiation matrix D[i, j] = phi_j'(x_i) on the given nodes.

    Barycentric-weight form; off-diagonal entries w_j/(w_i (x_i - x_j)),
    diagonal by the zero-row-sum property.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    D = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bw[j] / bw[i]) / (nodes[i] - nodes[j])
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))
    return D


def _gauss_legendre(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [0, 1]."""
    z, w = np.polynomial.legendre.leggauss(npts)
    return (z + 1.0) / 2.0, w / 2.0


def local_blocks(K: int, dx: float) -> LocalBlocks:
    """Assemble the per-cell operator blocks for degree K, cell size dx."""
    if dx <= 0:
        raise ValueError(f"cell size must be positive, got {dx}")
    rule = lobatto_rule(K)
    nodes, weights = rule.nodes, rule.weights
    Dmat = lagrange_diff_matrix(nodes)

    mass = weights.copy()
    # int phi_s phi_p' : degree 2K-1, exact under the collocated rule
    deriv = (weights[:, None] * Dmat) / dx
    deriv_test = deriv.T.copy()
    stiffness = (Dmat.T @ np.diag(weights) @ Dmat) / dx**2

    # antiderivative table: row s holds dx * int_0^{x_s} phi_p, s = 1..K
    gz, gw = _gauss_legendre(K + 1)
    integ = np.zeros((K, K + 1))
    for s in range(1, K + 1):
        pts = nodes[s] * gz
        vals = lagrange_eval(nodes, pts)
        integ[s - 1, :] = dx * nodes[s] * (gw @ vals)
    return LocalBlocks(mass, deriv, deriv_test, stiffness, integ,
                       nodes, weights, K, dx)


def reversed_integrator(blocks: LocalBlocks) -> np.ndarray:
    """Antiderivative table integrated from the right end instead.

    Row s holds -dx * int_{x_s}^{1} phi_p for s = 1..K. Differs from the
    forward table by a constant per column (the full-cell integral), so any
    derivative-type composition gives the identical operator.
    """
    K = blocks.degree
    full = blocks.dx * blocks.weights  # dx * int_0^1 phi_p, exact (degree K)
    out = np.empty_like(blocks.integrator)
    for s in range(1, K + 1):
        out[s - 1, :] = blocks.integrator[s - 1, :] - full
    return out
