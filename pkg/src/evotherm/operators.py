"""
Staggered-grid differential operators with homogeneous Dirichlet conditions.

Layout
------
1D, interval ``[0, L]`` with ``N`` cells of width ``h``::

    node:  0     1     2    ...   N-1    N        (0 and N carry the Dirichlet zero)
    face:     0     1     ...   N-1               (cell midpoints)

Scalar and vector node fields live on the ``N - 1`` interior nodes; fluxes
and (1x1) symmetric tensors live on the ``N`` cells.

2D, rectangle with ``Nx x Ny`` cells:

* ``scalar-node``: interior nodes, index ``ix + (Nx-1) * iy``.
* ``vector-node``: two stacked scalar-node blocks ``(u1, u2)``.
* ``vector-face``: x-edges between horizontally adjacent nodes on interior
  rows, then y-edges between vertically adjacent nodes on interior columns.
* ``symtensor-cell``: three stacked cell blocks ``(e11, e22, sqrt(2) e12)``;
  the sqrt(2) makes the Euclidean product equal the Frobenius product.

All weights are the cell area (or width), so the discrete L2 product of each
space is ``sum_i w_i a_i b_i``. Divergences are *defined* as negative weighted
adjoints of the gradients, which makes the Green identities exact.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .exceptions import NotSquare
from .linalg import as_dense, op_norm, weighted_adjoint

KINDS = ("scalar-node", "vector-node", "vector-face", "symtensor-cell")


@dataclass(frozen=True)
class Grid:
    """Uniform grid on an interval (``dimension=1``) or rectangle (``dimension=2``)."""

    cells: tuple
    lengths: tuple

    def __post_init__(self):
        cells = tuple(int(c) for c in np.atleast_1d(self.cells))
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        if len(cells) not in (1, 2) or len(cells) != len(lengths):
            raise ValueError("grid needs 1 or 2 axes with one length per axis")
        if any(c < 2 for c in cells):
            raise ValueError("each axis needs at least 2 cells")
        if any(not np.isfinite(x) or x <= 0 for x in lengths):
            raise ValueError("axis lengths must be positive")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "lengths", lengths)

    @property
    def dimension(self):
        return len(self.cells)

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def space(self, kind):
        return FieldSpace(kind, self)

    def node_coordinates(self):
        """Coordinates of interior nodes, shape ``(n_nodes, dimension)``."""
        axes = [np.arange(1, n) * h for n, h in zip(self.cells, self.spacing)]
        if self.dimension == 1:
            return axes[0][:, None]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    def cell_coordinates(self):
        """Cell centres, shape ``(n_cells, dimension)``."""
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.cells, self.spacing)]
        if self.dimension == 1:
            return axes[0][:, None]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    def face_coordinates(self):
        """Midpoints of the flux degrees of freedom, shape ``(n_faces, dimension)``."""
        if self.dimension == 1:
            return self.cell_coordinates()
        (nx, ny), (hx, hy) = self.cells, self.spacing
        xe, ye = np.meshgrid((np.arange(nx) + 0.5) * hx, np.arange(1, ny) * hy, indexing="xy")
        xn, yn = np.meshgrid(np.arange(1, nx) * hx, (np.arange(ny) + 0.5) * hy, indexing="xy")
        return np.vstack([
            np.column_stack([xe.ravel(), ye.ravel()]),
            np.column_stack([xn.ravel(), yn.ravel()]),
        ])

    @property
    def n_nodes(self):
        return int(np.prod([n - 1 for n in self.cells]))

    @property
    def n_cells(self):
        return int(np.prod(self.cells))


@dataclass(frozen=True)
class FieldSpace:
    """A discrete L2 space: a field kind on a grid plus its quadrature weights."""

    kind: str
    grid: Grid

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}; expected one of {KINDS}")

    @cached_property
    def dof_count(self):
        g = self.grid
        if g.dimension == 1:
            return g.n_nodes if self.kind.endswith("node") else g.n_cells
        nx, ny = g.cells
        return {
            "scalar-node": g.n_nodes,
            "vector-node": 2 * g.n_nodes,
            "vector-face": nx * (ny - 1) + (nx - 1) * ny,
            "symtensor-cell": 3 * g.n_cells,
        }[self.kind]

    @cached_property
    def weights(self):
        w = np.full(self.dof_count, self.grid.cell_volume)
        w.flags.writeable = False
        return w

    @property
    def components(self):
        """Number of stacked component blocks."""
        if self.grid.dimension == 1:
            return 1
        return {"scalar-node": 1, "vector-node": 2, "vector-face": 1, "symtensor-cell": 3}[self.kind]

    def inner(self, a, b):
        return float(np.sum(self.weights * a * b))

    def norm(self, a):
        return float(np.sqrt(self.inner(a, a)))

    def __repr__(self):
        return f"FieldSpace({self.kind!r}, cells={self.grid.cells})"


class DiscreteOperator:
    """Sparse matrix between two :class:`FieldSpace` objects.

    ``A @ B`` composes operators (``B`` applied first); ``A @ x`` applies to a
    coefficient vector. ``adjoint()`` is taken in the weighted inner products.
    """

    __array_priority__ = 20

    def __init__(self, matrix, domain, codomain, label=""):
        matrix = sp.csr_matrix(matrix) if not sp.issparse(matrix) else matrix.tocsr()
        if matrix.shape != (codomain.dof_count, domain.dof_count):
            raise ValueError(
                f"{label or 'operator'}: matrix shape {matrix.shape} does not match "
                f"({codomain.dof_count}, {domain.dof_count})"
            )
        self.matrix = matrix
        self.domain = domain
        self.codomain = codomain
        self.label = label

    @property
    def shape(self):
        return self.matrix.shape

    def dense(self):
        return self.matrix.toarray()

    def adjoint(self):
        M = weighted_adjoint(self.matrix, self.domain.weights, self.codomain.weights)
        label = self.label[:-1] if self.label.endswith("*") else self.label + "*"
        return DiscreteOperator(M, self.codomain, self.domain, label)

    def norm(self):
        return op_norm(self.matrix, self.domain.weights, self.codomain.weights)

    def __matmul__(self, other):
        if isinstance(other, DiscreteOperator):
            if other.codomain != self.domain:
                raise ValueError(f"cannot compose {self.label} after {other.label}: space mismatch")
            return DiscreteOperator(
                self.matrix @ other.matrix, other.domain, self.codomain, f"{self.label}{other.label}"
            )
        return self.matrix @ np.asarray(other)

    def __neg__(self):
        return DiscreteOperator(-self.matrix, self.domain, self.codomain, f"-{self.label}")

    def __mul__(self, scalar):
        return DiscreteOperator(self.matrix * float(scalar), self.domain, self.codomain, self.label)

    __rmul__ = __mul__

    def __repr__(self):
        return f"DiscreteOperator({self.label!r}, {self.domain.kind} -> {self.codomain.kind}, shape={self.shape})"


def identity(space):
    return DiscreteOperator(sp.identity(space.dof_count, format="csr"), space, space, "1")


def multiplication(space, values, label="m"):
    """Diagonal multiplication operator by nodal/cell samples."""
    values = np.broadcast_to(np.asarray(values, dtype=float), (space.dof_count,))
    return DiscreteOperator(sp.diags(values, format="csr"), space, space, label)


def _difference_1d(n, h):
    """(n x n-1) matrix of (u[i+1] - u[i]) / h with zero boundary values."""
    main = np.full(n - 1, 1.0 / h)
    return sp.diags([main, -main], [0, -1], shape=(n, n - 1), format="csr")


def _average_1d(n):
    """(n x n-1) matrix of (u[i+1] + u[i]) / 2 with zero boundary values."""
    main = np.full(n - 1, 0.5)
    return sp.diags([main, main], [0, -1], shape=(n, n - 1), format="csr")


def _identity_rows(n):
    """(n-1 x n-1) identity: restriction to interior rows/columns."""
    return sp.identity(n - 1, format="csr")


def build_grad(grid):
    """grad with zero Dirichlet values on the scalar argument (nodes -> faces)."""
    if grid.dimension == 1:
        (n,), (h,) = grid.cells, grid.spacing
        G = _difference_1d(n, h)
    else:
        (nx, ny), (hx, hy) = grid.cells, grid.spacing
        # index = ix + (nx-1) * iy, so x acts on the fast axis
        Gx = sp.kron(_identity_rows(ny), _difference_1d(nx, hx))
        Gy = sp.kron(_difference_1d(ny, hy), _identity_rows(nx))
        G = sp.vstack([Gx, Gy]).tocsr()
    return DiscreteOperator(G, grid.space("scalar-node"), grid.space("vector-face"), "grad°")


def build_div(grid):
    """div = -W_node^{-1} grad°^T W_face (faces -> nodes, no boundary condition)."""
    grad = build_grad(grid)
    D = -weighted_adjoint(grad.matrix, grad.domain.weights, grad.codomain.weights)
    return DiscreteOperator(D, grad.codomain, grad.domain, "div")


def build_Grad(grid):
    """Symmetric gradient with zero Dirichlet values (vector nodes -> symmetric tensors on cells).

    In 2D each cell uses its four corners: derivatives are averages of the
    two parallel edge differences, exact for affine fields.
    """
    if grid.dimension == 1:
        (n,), (h,) = grid.cells, grid.spacing
        E = _difference_1d(n, h)
    else:
        (nx, ny), (hx, hy) = grid.cells, grid.spacing
        dx = sp.kron(_average_1d(ny), _difference_1d(nx, hx))
        dy = sp.kron(_difference_1d(ny, hy), _average_1d(nx))
        shear = np.sqrt(2.0) * 0.5
        E = sp.bmat([
            [dx, None],
            [None, dy],
            [shear * dy, shear * dx],
        ]).tocsr()
    return DiscreteOperator(E, grid.space("vector-node"), grid.space("symtensor-cell"), "Grad°")


def build_Div(grid):
    """Div = -W_vec^{-1} Grad°^T W_tens (symmetric tensors -> vector nodes)."""
    Grad = build_Grad(grid)
    D = -weighted_adjoint(Grad.matrix, Grad.domain.weights, Grad.codomain.weights)
    return DiscreteOperator(D, Grad.codomain, Grad.domain, "Div")


def trace_embedding(grid):
    """Scalar nodes -> symmetric tensors: cell average times the identity tensor."""
    if grid.dimension == 1:
        (n,) = grid.cells
        T = _average_1d(n)
    else:
        nx, ny = grid.cells
        avg = sp.kron(_average_1d(ny), _average_1d(nx))
        T = sp.vstack([avg, avg, sp.csr_matrix((nx * ny, grid.n_nodes))]).tocsr()
    return DiscreteOperator(T, grid.space("scalar-node"), grid.space("symtensor-cell"), "ι")


def sym_part(M):
    M = as_dense(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSquare(f"sym_part needs a square matrix, got {M.shape}")
    return 0.5 * (M + M.T)


def skew_part(M):
    M = as_dense(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSquare(f"skew_part needs a square matrix, got {M.shape}")
    return 0.5 * (M - M.T)
