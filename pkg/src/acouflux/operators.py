"""
Cartesian tensor-product grids and 1D operator algebra.

Layout. The 2D grid is a tensor product of two 1D node lines of degree K.
Per direction, cell i covers [i*dx, (i+1)*dx] with K+1 Lobatto nodes; the
shared node between neighboring cells is a single degree of freedom.

    periodic:   N*K nodes per direction; node g = i*K + (p-1) for local
                p = 1..K; the cell's left node (p = 0) is the previous
                cell's p = K.
    dirichlet:  N*K + 1 nodes; node g = i*K + p, boundary nodes included.

Operators. An Operator1D wraps one assembled 1D matrix (CSR, the production
apply path). Periodic operators additionally carry their block Laurent
stencil {k -> K x K} so that symbol extraction and stencil composition stay
exact; the symbol convention is F(t) = sum_k B_k t^k for a nodal plane wave
q_g = v_(g mod K) * t^(block index).

Composition. compose(A, B) is the stencil (or sparse) product, under which
symbols multiply -- except when B is the antiderivative table ("integrator"),
where the product is element-local: the K x (K+1) table is extended by a
zero row (value at the cell's left node) and multiplied against A's local
cell block, then assembled. This is the composition the flux-quadrature
schemes are built from; it is NOT the matrix product with the assembled
antiderivative, whose per-cell starting values live on shared nodes.

2D application. A term c * (Ax tensor Ay) acts on a field F[ix, iy] as
c * Ax @ F @ Ay^T; a TensorOp is a sum of such terms. The dense oracle is
the matching sum of Kronecker products on the C-order flattening (x index
first) and is size-guarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .basis import LocalBlocks, local_blocks, reversed_integrator
from .errors import ConfigError

DENSE_DOF_GUARD = 20_000

OPERATOR_KINDS = ("mass", "lumped", "deriv", "deriv_test", "stiffness",
                  "integrator", "identity")


# =====================================================================
# grids
# =====================================================================

@dataclass(frozen=True)
class Grid2D:
    """Tensor-product Cartesian grid on [0, Lx] x [0, Ly]."""
    K: int
    nx_cells: int
    ny_cells: int
    bc: str = "periodic"
    Lx: float = 1.0
    Ly: float = 1.0
    # derived, filled in __post_init__
    dx: float = field(init=False)
    dy: float = field(init=False)
    x_nodes: np.ndarray = field(init=False, repr=False)
    y_nodes: np.ndarray = field(init=False, repr=False)
    x_weights: np.ndarray = field(init=False, repr=False)  # quadrature, includes dx
    y_weights: np.ndarray = field(init=False, repr=False)
    ref: LocalBlocks = field(init=False, repr=False)
    ref_y: LocalBlocks = field(init=False, repr=False)

    def __post_init__(self):
        if self.bc not in ("periodic", "dirichlet"):
            raise ConfigError(f"unknown bc {self.bc!r}")
        if self.K < 1 or self.nx_cells < 2 or self.ny_cells < 2:
            raise ConfigError("need K >= 1 and at least 2 cells per direction")
        object.__setattr__(self, "dx", self.Lx / self.nx_cells)
        object.__setattr__(self, "dy", self.Ly / self.ny_cells)
        object.__setattr__(self, "ref", local_blocks(self.K, self.dx))
        object.__setattr__(self, "ref_y", local_blocks(self.K, self.dy))
        xs, wx = _node_line(self.ref, self.nx_cells, self.bc, self.dx)
        ys, wy = _node_line(self.ref_y, self.ny_cells, self.bc, self.dy)
        object.__setattr__(self, "x_nodes", xs)
        object.__setattr__(self, "y_nodes", ys)
        object.__setattr__(self, "x_weights", wx)
        object.__setattr__(self, "y_weights", wy)

    @property
    def nnx(self) -> int:
        return self.x_nodes.size

    @property
    def nny(self) -> int:
        return self.y_nodes.size

    @property
    def h(self) -> float:
        return min(self.dx, self.dy)

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates X[ix, iy], Y[ix, iy]."""
        return np.meshgrid(self.x_nodes, self.y_nodes, indexing="ij")

    def quad_weights_2d(self) -> np.ndarray:
        """W[ix, iy] with sum(W) = Lx*Ly."""
        return np.outer(self.x_weights, self.y_weights)

    def cell_nodes(self, i: int, axis: int) -> np.ndarray:
        """Global node indices of cell i along an axis, local order p = 0..K."""
        n_cells = self.nx_cells if axis == 0 else self.ny_cells
        nn = self.nnx if axis == 0 else self.nny
        if not 0 <= i < n_cells:
            raise IndexError(f"cell {i} out of range")
        if self.bc == "periodic":
            idx = np.empty(self.K + 1, dtype=int)
            idx[0] = (i * self.K - 1) % nn
            idx[1:] = i * self.K + np.arange(self.K)
            return idx
        return i * self.K + np.arange(self.K + 1)

    def boundary_mask(self) -> np.ndarray:
        """Boolean (nnx, nny) array marking boundary nodes (empty if periodic)."""
        mask = np.zeros((self.nnx, self.nny), dtype=bool)
        if self.bc == "dirichlet":
            mask[0, :] = mask[-1, :] = True
            mask[:, 0] = mask[:, -1] = True
        return mask


def _node_line(ref: LocalBlocks, n_cells: int, bc: str,
               dx: float) -> tuple[np.ndarray, np.ndarray]:
    K = ref.degree
    if bc == "periodic":
        coords = np.concatenate([(i + ref.nodes[1:]) * dx for i in range(n_cells)])
        w = np.tile(ref.weights[1:], n_cells).astype(float)
        w[K - 1::K] += ref.weights[0]  # shared nodes collect both half-weights
        return coords, w * dx
    coords = np.concatenate([[0.0]] + [(i + ref.nodes[1:]) * dx for i in range(n_cells)])
    w = np.zeros(n_cells * K + 1)
    for i in range(n_cells):
        w[i * K:(i + 1) * K + 1] += ref.weights
    return coords, w * dx


class StateField(NamedTuple):
    """Acoustic state (u, v, p) as (nnx, nny) nodal arrays."""
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray

    def copy(self) -> "StateField":
        return StateField(self.u.copy(), self.v.copy(), self.p.copy())

    @staticmethod
    def zeros(grid: Grid2D) -> "StateField":
        shape = (grid.nnx, grid.nny)
        return StateField(np.zeros(shape), np.zeros(shape), np.zeros(shape))


# =====================================================================
# 1D operators
# =====================================================================

@dataclass(frozen=True)
class Operator1D:
    """One assembled 1D operator along a grid direction.

    blocks is the reduced Laurent stencil (periodic only); mat is the
    assembled CSR matrix used for application. local_table keeps the
    per-cell block for operators that admit element-local composition.
    """
    kind: str
    K: int
    n_cells: int
    bc: str
    dx: float
    mat: sp.csr_matrix
    blocks: dict[int, np.ndarray] | None = None
    local_table: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.mat.toarray()


def _blocks_from_local(Aloc: np.ndarray, K: int) -> dict[int, np.ndarray]:
    """Reduced periodic Laurent blocks of a one-cell (K+1)^2 local block."""
    B0 = np.array(Aloc[1:, 1:])
    B0[K - 1, K - 1] += Aloc[0, 0]
    Bp = np.zeros((K, K))
    Bp[K - 1, :] = Aloc[0, 1:]
    Bm = np.zeros((K, K))
    Bm[:, K - 1] = Aloc[1:, 0]
    out = {0: B0}
    if np.any(Bp):
        out[1] = Bp
    if np.any(Bm):
        out[-1] = Bm
    return out


def _circulant_csr(blocks: dict[int, np.ndarray], K: int, n_cells: int) -> sp.csr_matrix:
    n = n_cells
    acc = None
    for k, B in blocks.items():
        rows = np.arange(n)
        cols = (rows + k) % n
        P = sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, n))
        term = sp.kron(P, sp.csr_matrix(B), format="csr")
        acc = term if acc is None else acc + term
    return acc.tocsr()


def _assemble_local_full(Aloc: np.ndarray, K: int, n_cells: int,
                         rows_from: int = 0) -> sp.csr_matrix:
    """Dirichlet-style assembly of a local block over the full node line.

    rows_from = 1 assembles only test rows s = 1..K (antiderivative tables,
    whose s = 0 row is identically zero).
    """
    n = K * n_cells + 1
    sub = Aloc[rows_from:, :]
    rr, cc, vv = [], [], []
    for i in range(n_cells):
        g = i * K + np.arange(K + 1)
        R, C = np.meshgrid(g[rows_from:], g, indexing="ij")
        rr.append(R.ravel())
        cc.append(C.ravel())
        vv.append(sub.ravel())
    mat = sp.coo_matrix((np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))),
                        shape=(n, n))
    return mat.tocsr()


def assemble_1d(kind: str, grid: Grid2D, axis: int = 0) -> Operator1D:
    """Build one of the primitive 1D operators along a grid axis."""
    if kind not in OPERATOR_KINDS:
        raise ConfigError(f"unknown operator kind {kind!r}")
    ref = grid.ref if axis == 0 else grid.ref_y
    n_cells = grid.nx_cells if axis == 0 else grid.ny_cells
    K, dx, bc = grid.K, ref.dx, grid.bc

    if kind in ("mass", "lumped"):
        Aloc = np.diag(ref.mass)
    elif kind == "deriv":
        Aloc = ref.deriv
    elif kind == "deriv_test":
        Aloc = ref.deriv_test
    elif kind == "stiffness":
        Aloc = ref.stiffness
    elif kind == "identity":
        n = K * n_cells if bc == "periodic" else K * n_cells + 1
        return Operator1D(kind, K, n_cells, bc, dx, sp.identity(n, format="csr"),
                          blocks={0: np.eye(K)} if bc == "periodic" else None,
                          local_table=np.eye(K + 1))
    elif kind == "integrator":
        table = ref.integrator
        if bc == "periodic":
            B0 = np.array(table[:, 1:])
            Bm = np.zeros((K, K))
            Bm[:, K - 1] = table[:, 0]
            blocks = {0: B0, -1: Bm}
            mat = _circulant_csr(blocks, K, n_cells)
            return Operator1D(kind, K, n_cells, bc, dx, mat, blocks, table)
        ext = np.vstack([np.zeros(K + 1), table])
        mat = _assemble_local_full(ext, K, n_cells, rows_from=1)
        return Operator1D(kind, K, n_cells, bc, dx, mat, None, table)
    else:  # pragma: no cover
        raise ConfigError(kind)

    if bc == "periodic":
        blocks = _blocks_from_local(Aloc, K)
        mat = _circulant_csr(blocks, K, n_cells)
        return Operator1D(kind, K, n_cells, bc, dx, mat, blocks, Aloc)
    mat = _assemble_local_full(Aloc, K, n_cells)
    return Operator1D(kind, K, n_cells, bc, dx, mat, None, Aloc)


def mass_diag(grid: Grid2D, axis: int = 0) -> np.ndarray:
    """Diagonal of the collocated 1D mass operator (dimensionless)."""
    w = grid.x_weights if axis == 0 else grid.y_weights
    dx = grid.dx if axis == 0 else grid.dy
    return w / dx


# =====================================================================
# composition
# =====================================================================

def _convolve_blocks(A: dict[int, np.ndarray],
                     B: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
    out: dict[int, np.ndarray] = {}
    for ka, Ba in A.items():
        for kb, Bb in B.items():
            k = ka + kb
            prod = Ba @ Bb
            if k in out:
                out[k] = out[k] + prod
            else:
                out[k] = prod
    return {k: B for k, B in out.items() if np.any(np.abs(B) > 0)}


def compose(A: Operator1D, B: Operator1D) -> Operator1D:
    """Operator product A o B.

    If B is the antiderivative table the product is element-local (see
    module docstring); otherwise it is the plain stencil/sparse product.
    """
    if A.bc != B.bc or A.K != B.K or A.n_cells != B.n_cells:
        raise ConfigError("compose requires operators on the same node line")
    K, n_cells, bc, dx = A.K, A.n_cells, A.bc, A.dx
    if B.kind == "integrator":
        if A.local_table is None or A.local_table.shape != (K + 1, K + 1):
            raise ConfigError(
                f"element-local composition needs a one-cell left factor, got {A.kind!r}")
        ext = np.vstack([np.zeros(K + 1), B.local_table])
        Cloc = A.local_table @ ext
        if bc == "periodic":
            blocks = _blocks_from_local(Cloc, K)
            mat = _circulant_csr(blocks, K, n_cells)
            return Operator1D("composed", K, n_cells, bc, dx, mat, blocks, Cloc)
        mat = _assemble_local_full(Cloc, K, n_cells)
        return Operator1D("composed", K, n_cells, bc, dx, mat, None, Cloc)
    mat = (A.mat @ B.mat).tocsr()
    blocks = None
    if bc == "periodic" and A.blocks is not None and B.blocks is not None:
        blocks = _convolve_blocks(A.blocks, B.blocks)
    return Operator1D("composed", K, n_cells, bc, dx, mat, blocks)


def op_lincomb(coeffs_ops: list[tuple[float, Operator1D]],
               kind: str = "composed") -> Operator1D:
    """Linear combination of operators on one node line."""
    c0, A0 = coeffs_ops[0]
    mat = (c0 * A0.mat).tolil()
    for c, Ai in coeffs_ops[1:]:
        mat = mat + c * Ai.mat
    blocks = None
    if A0.bc == "periodic" and all(op.blocks is not None for _, op in coeffs_ops):
        blocks = {}
        for c, Ai in coeffs_ops:
            for k, B in Ai.blocks.items():
                blocks[k] = blocks.get(k, 0) + c * B
        blocks = {k: B for k, B in blocks.items() if np.any(np.abs(B) > 0)}
    return Operator1D(kind, A0.K, A0.n_cells, A0.bc, A0.dx, mat.tocsr(), blocks)


def diag_operator(diag: np.ndarray, template: Operator1D,
                  kind: str = "composed") -> Operator1D:
    """Diagonal operator (e.g. an inverse mass) on the same node line."""
    mat = sp.diags(diag).tocsr()
    blocks = None
    if template.bc == "periodic":
        K = template.K
        # a nodal diagonal is translation-invariant iff it repeats per block
        rep = diag.reshape(template.n_cells, K)
        if np.allclose(rep, rep[0]):
            blocks = {0: np.diag(rep[0])}
    return Operator1D(kind, template.K, template.n_cells, template.bc,
                      template.dx, mat, blocks)


def reversed_integrator_operator(grid: Grid2D, axis: int = 0) -> Operator1D:
    """Antiderivative table integrated from the right end (diagnostic twin)."""
    ref = grid.ref if axis == 0 else grid.ref_y
    n_cells = grid.nx_cells if axis == 0 else grid.ny_cells
    K, dx, bc = grid.K, ref.dx, grid.bc
    table = reversed_integrator(ref)
    if bc == "periodic":
        B0 = np.array(table[:, 1:])
        Bm = np.zeros((K, K))
        Bm[:, K - 1] = table[:, 0]
        blocks = {0: B0, -1: Bm}
        return Operator1D("integrator", K, n_cells, bc, dx,
                          _circulant_csr(blocks, K, n_cells), blocks, table)
    ext = np.vstack([np.zeros(K + 1), table])
    return Operator1D("integrator", K, n_cells, bc, dx,
                      _assemble_local_full(ext, K, n_cells, rows_from=1), None, table)


# =====================================================================
# 2D tensor application
# =====================================================================

@dataclass(frozen=True)
class TensorOp:
    """Sum of separable terms c * (Ax tensor Ay) acting on (nnx, nny) fields."""
    terms: tuple[tuple[float, Operator1D, Operator1D], ...]

    def apply(self, F: np.ndarray) -> np.ndarray:
        out = None
        for c, Ax, Ay in self.terms:
            G = Ax.mat @ F
            G = (Ay.mat @ G.T).T
            out = c * G if out is None else out + c * G
        return out if out is not None else np.zeros_like(F)

    def dense(self) -> np.ndarray:
        nx = self.terms[0][1].n
        ny = self.terms[0][2].n
        if nx * ny > DENSE_DOF_GUARD:
            raise ConfigError(
                f"dense assembly guarded at {DENSE_DOF_GUARD} DoFs, got {nx * ny}")
        out = np.zeros((nx * ny, nx * ny))
        for c, Ax, Ay in self.terms:
            out += c * np.kron(Ax.to_dense(), Ay.to_dense())
        return out


def tensor(coeff: float, Ax: Operator1D, Ay: Operator1D) -> TensorOp:
    return TensorOp(((coeff, Ax, Ay),))


def tensor_sum(*ops: TensorOp) -> TensorOp:
    terms: tuple = ()
    for op in ops:
        terms = terms + op.terms
    return TensorOp(terms)


def apply_tensor(op: TensorOp, F: np.ndarray) -> np.ndarray:
    return op.apply(F)


def dense_assemble(op: TensorOp) -> np.ndarray:
    """Dense Kronecker oracle of a TensorOp (C-order flatten, x index first)."""
    return op.dense()


# =====================================================================
# norms
# =====================================================================

def l2_norm(grid: Grid2D, F: np.ndarray) -> float:
    """Quadrature L2 norm of a nodal field."""
    W = grid.quad_weights_2d()
    return float(np.sqrt(np.sum(W * F * F)))


def weighted_residual_norm(grid: Grid2D, R: np.ndarray) -> float:
    """L2 norm of the strong residual M^{-1} R for a weak-form row vector R.

    Equals sqrt(sum R^2 / W) with W the 2D quadrature weights; used for the
    divergence diagnostics.
    """
    W = grid.quad_weights_2d()
    return float(np.sqrt(np.sum(R * R / W)))
