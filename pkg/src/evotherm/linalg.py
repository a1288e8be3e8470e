"""
Dense and sparse real linear-algebra kernels.

Every matrix here is a plain ``numpy.ndarray`` or a ``scipy.sparse`` matrix.
Operators that live on weighted spaces (the discrete L2 inner products built
in :mod:`evotherm.operators`) are handled by passing the positive weight
vectors explicitly; the unweighted case is ``weights=None``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .exceptions import NoConvergence, NotPSD, NotSquare, NotSymmetric, Singular

SYMMETRY_TOL = 1e-12
PSD_CLAMP = 1e-10
PIVOT_TOL = 1e-14
DENSE_LIMIT = 2048


def as_dense(M):
    if sp.issparse(M):
        return M.toarray()
    return np.asarray(M, dtype=float)


def _check_square(M):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {M.shape}")


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T

    def apply(self, func):
        """Return ``V diag(func(eigenvalues)) V^T``, symmetrized."""
        V = self.eigenvectors
        X = (V * func(self.eigenvalues)) @ V.T
        return 0.5 * (X + X.T)


def sym_eig(M):
    """Eigendecomposition of a real symmetric matrix.

    Raises
    ------
    NotSymmetric
        If ``||M - M^T||_F / ||M||_F >= 1e-12``.
    NoConvergence
        If LAPACK fails to converge.
    """
    M = as_dense(M)
    _check_square(M)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    norm = np.linalg.norm(M)
    if norm > 0 and np.linalg.norm(M - M.T) / norm >= SYMMETRY_TOL:
        raise NotSymmetric(
            f"relative asymmetry {np.linalg.norm(M - M.T) / norm:.3e} exceeds {SYMMETRY_TOL}"
        )
    try:
        lam, V = np.linalg.eigh(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"symmetric eigensolver failed: {exc}", iterations=None) from exc
    return EigenDecomposition(lam, V)


def _clamped(lam, scale):
    threshold = -PSD_CLAMP * scale
    if lam.size and lam[0] < threshold:
        raise NotPSD(f"eigenvalue {lam[0]:.6e} below clamp threshold {threshold:.3e}")
    return np.clip(lam, 0.0, None)


def spd_sqrt(M):
    """Unique symmetric positive semidefinite square root of ``M``.

    Eigenvalues in ``[-1e-10 ||M||, 0)`` are treated as round-off and clamped.
    """
    eig = sym_eig(M)
    scale = np.max(np.abs(eig.eigenvalues)) if eig.eigenvalues.size else 0.0
    lam = _clamped(eig.eigenvalues, scale)
    return EigenDecomposition(lam, eig.eigenvectors).apply(np.sqrt)


def weighted_adjoint(M, w_domain=None, w_codomain=None):
    """Adjoint of ``M: (R^n, w_domain) -> (R^m, w_codomain)``.

    Entry ``(i, j)`` of the result is ``M[j, i] * (w_codomain[j] / w_domain[i])``.
    Every adjoint in the package goes through this one formula, so blocks
    built as adjoints of other blocks cancel bit-exactly.
    """
    if w_domain is None and w_codomain is None:
        return M.T.copy() if not sp.issparse(M) else M.T.tocsr()
    n_rows, n_cols = M.shape
    wd = np.ones(n_cols) if w_domain is None else np.asarray(w_domain, dtype=float)
    wc = np.ones(n_rows) if w_codomain is None else np.asarray(w_codomain, dtype=float)
    if sp.issparse(M):
        T = M.T.tocoo()
        data = T.data * (wc[T.col] / wd[T.row])
        return sp.csr_matrix((data, (T.row, T.col)), shape=T.shape)
    return np.asarray(M, dtype=float).T * (wc[None, :] / wd[:, None])


def normalize(M, w_domain=None, w_codomain=None):
    """Matrix of ``M`` in orthonormal coordinates of the weighted spaces."""
    M = as_dense(M)
    if w_domain is None and w_codomain is None:
        return M.copy()
    sd = np.sqrt(np.ones(M.shape[1]) if w_domain is None else np.asarray(w_domain, float))
    sc = np.sqrt(np.ones(M.shape[0]) if w_codomain is None else np.asarray(w_codomain, float))
    return M * (sc[:, None] / sd[None, :])


def denormalize(X, w_domain=None, w_codomain=None):
    """Inverse of :func:`normalize`."""
    if w_domain is None and w_codomain is None:
        return X
    sd = np.sqrt(np.ones(X.shape[1]) if w_domain is None else np.asarray(w_domain, float))
    sc = np.sqrt(np.ones(X.shape[0]) if w_codomain is None else np.asarray(w_codomain, float))
    return X * (sd[None, :] / sc[:, None])


def spectral_function(M, func, weights=None, psd=False):
    """Apply ``func`` to a matrix that is selfadjoint in the ``weights`` inner product.

    With ``psd=True`` the spectrum is clamped like :func:`spd_sqrt` and
    :class:`NotPSD` is raised for genuinely negative eigenvalues.
    """
    Mh = normalize(M, weights, weights)
    eig = sym_eig(Mh)
    lam = eig.eigenvalues
    if psd:
        scale = np.max(np.abs(lam)) if lam.size else 0.0
        lam = _clamped(lam, scale)
    X = EigenDecomposition(lam, eig.eigenvectors).apply(func)
    return denormalize(X, weights, weights)


def op_norm(M, w_domain=None, w_codomain=None):
    """Largest singular value, taken between the weighted spaces if given."""
    Mh = normalize(M, w_domain, w_codomain)
    if Mh.size == 0:
        return 0.0
    G = Mh.T @ Mh if Mh.shape[1] <= Mh.shape[0] else Mh @ Mh.T
    lam = sym_eig(G).eigenvalues
    return float(np.sqrt(max(lam[-1], 0.0)))


class Factorization:
    """LU factorization of a square matrix, reusable across right-hand sides.

    Dense LU with partial pivoting up to ``DENSE_LIMIT`` unknowns, SuperLU
    above that.
    """

    def __init__(self, M):
        if sp.issparse(M) and M.shape[0] <= DENSE_LIMIT:
            M = M.toarray()
        if not sp.issparse(M):
            M = np.asarray(M, dtype=float)
        _check_square(M)
        self.shape = M.shape
        self.norm = scipy.sparse.linalg.norm(M, 1) if sp.issparse(M) else np.linalg.norm(M, 1)
        self._matrix = M
        if sp.issparse(M):
            try:
                self._lu = scipy.sparse.linalg.splu(M.tocsc())
            except RuntimeError as exc:
                raise Singular(f"sparse factorization failed: {exc}") from exc
            pivots = np.abs(self._lu.U.diagonal())
            self._dense = False
        else:
            self._lu = scipy.linalg.lu_factor(M, check_finite=True)
            pivots = np.abs(np.diag(self._lu[0]))
            self._dense = True
        if pivots.size and (self.norm == 0 or pivots.min() < PIVOT_TOL * self.norm):
            raise Singular(
                f"pivot {pivots.min():.3e} below {PIVOT_TOL:g} * ||M|| = {PIVOT_TOL * self.norm:.3e}"
            )

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"right-hand side has {b.shape[0]} rows, expected {self.shape[0]}")
        if self._dense:
            return scipy.linalg.lu_solve(self._lu, b)
        return self._lu.solve(b)

    def residual(self, x, b):
        """Relative residual ``||Mx - b|| / (||M|| ||x|| + ||b||)``."""
        r = self._matrix @ x - b
        denom = self.norm * np.linalg.norm(x) + np.linalg.norm(b)
        return float(np.linalg.norm(r) / denom) if denom > 0 else float(np.linalg.norm(r))


def solve_linear(M, b):
    """Solve ``M x = b``; raises :class:`Singular` for a vanishing pivot."""
    return Factorization(M).solve(b)


def inv(M):
    """Dense inverse via :func:`solve_linear`."""
    M = as_dense(M)
    _check_square(M)
    return Factorization(M).solve(np.eye(M.shape[0]))
