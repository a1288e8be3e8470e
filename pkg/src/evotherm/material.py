"""Material coefficients on a grid."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import MaterialError
from .linalg import as_dense, inv, normalize, spectral_function, sym_eig
from .operators import Grid, trace_embedding


def isotropic_stiffness(lame_lambda, lame_mu):
    """3x3 isotropic elasticity tensor on ``(e11, e22, sqrt(2) e12)`` components."""
    l, m = float(lame_lambda), float(lame_mu)
    return np.array([[2 * m + l, l, 0.0], [l, 2 * m + l, 0.0], [0.0, 0.0, 2 * m]])


def stiffness_matrix(grid, elasticity):
    """Elasticity operator on the symmetric-tensor space of ``grid``.

    ``elasticity`` may be a scalar (1D modulus, or ``lambda = mu`` scaling
    in 2D), a per-cell list (1D), a ``{"lame_lambda", "lame_mu"}`` mapping
    (2D) or an explicit 3x3 component matrix (2D).
    """
    n = grid.n_cells
    if grid.dimension == 1:
        if isinstance(elasticity, dict):
            raise MaterialError("1D elasticity is a scalar modulus or a per-cell list")
        values = np.broadcast_to(np.asarray(elasticity, dtype=float), (n,))
        return np.diag(values)
    if isinstance(elasticity, dict):
        local = isotropic_stiffness(elasticity["lame_lambda"], elasticity["lame_mu"])
    else:
        arr = np.asarray(elasticity, dtype=float)
        local = isotropic_stiffness(arr, arr) if arr.ndim == 0 else arr
    if local.shape != (3, 3) or not np.allclose(local, local.T, rtol=0, atol=1e-14):
        raise MaterialError("2D elasticity matrix must be symmetric 3x3")
    return np.kron(local, np.eye(n))


@dataclass(frozen=True, eq=False)
class MaterialData:
    """Coefficients of the thermoelastic system on a fixed grid.

    Operators are dense matrices on the grid spaces: ``C`` on symmetric
    tensors, ``kappa`` on fluxes, ``gamma`` from scalar nodes to symmetric
    tensors. ``alpha`` is a positive scalar or an SPD matrix on fluxes.
    ``beta`` and ``eps`` are only needed by the two-strain and the
    resolvent-based variants.
    """

    grid: Grid
    rho0: np.ndarray
    C: np.ndarray
    kappa: np.ndarray
    gamma: np.ndarray
    lam: float = 1.0
    alpha: object = 0.1
    beta: float = None
    eps: float = None
    T0: float = 1.0
    check_elasticity: bool = True
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        g = self.grid
        rho0 = np.broadcast_to(np.asarray(self.rho0, dtype=float), (g.n_nodes,)).copy()
        object.__setattr__(self, "rho0", rho0)
        for name in ("C", "kappa", "gamma"):
            object.__setattr__(self, name, as_dense(getattr(self, name)))
        ns = g.space("symtensor-cell").dof_count
        nf = g.space("vector-face").dof_count
        if self.C.shape != (ns, ns):
            raise MaterialError(f"C has shape {self.C.shape}, expected {(ns, ns)}")
        if self.kappa.shape != (nf, nf):
            raise MaterialError(f"kappa has shape {self.kappa.shape}, expected {(nf, nf)}")
        if self.gamma.shape != (ns, g.n_nodes):
            raise MaterialError(f"gamma has shape {self.gamma.shape}, expected {(ns, g.n_nodes)}")
        if not np.all(np.isfinite(rho0)) or rho0.min() <= 0:
            raise MaterialError("rho0 must be positive")
        for name in ("lam", "T0"):
            if not float(getattr(self, name)) > 0:
                raise MaterialError(f"{name} must be positive")
        for name in ("beta", "eps"):
            value = getattr(self, name)
            if value is not None and not float(value) > 0:
                raise MaterialError(f"{name} must be positive")
        if np.ndim(self.alpha) == 0:
            if not float(self.alpha) > 0:
                raise MaterialError("alpha must be positive")
        else:
            a = as_dense(self.alpha)
            if a.shape != (nf, nf):
                raise MaterialError(f"operator alpha must be {(nf, nf)}")
            object.__setattr__(self, "alpha", a)
            self._require_spd(a, "alpha", self.flux_weights)
        self._require_spd(self.kappa, "kappa", self.flux_weights)
        if self.check_elasticity:
            self._require_spd(self.C, "C", self.tensor_weights)

    @staticmethod
    def _require_spd(M, name, weights):
        Mh = normalize(M, weights, weights)
        if np.linalg.norm(Mh - Mh.T) > 1e-12 * max(np.linalg.norm(Mh), 1.0):
            raise MaterialError(f"{name} must be selfadjoint")
        lam = sym_eig(Mh).eigenvalues
        if lam[0] <= 0:
            raise MaterialError(f"{name} must be positive definite (smallest eigenvalue {lam[0]:.3e})")

    @property
    def flux_weights(self):
        return self.grid.space("vector-face").weights

    @property
    def tensor_weights(self):
        return self.grid.space("symtensor-cell").weights

    @property
    def scalar_alpha(self):
        return np.ndim(self.alpha) == 0

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def C_inv(self):
        def build():
            X = inv(self.C)
            return 0.5 * (X + X.T)
        return self._cached("C_inv", build)

    @property
    def sqrt_C(self):
        return self._cached(
            "sqrt_C", lambda: spectral_function(self.C, np.sqrt, self.tensor_weights, psd=True)
        )

    @property
    def inv_sqrt_C(self):
        return self._cached(
            "inv_sqrt_C",
            lambda: spectral_function(self.C, lambda x: 1.0 / np.sqrt(x), self.tensor_weights, psd=True),
        )

    @property
    def sqrt_kappa(self):
        return self._cached(
            "sqrt_kappa", lambda: spectral_function(self.kappa, np.sqrt, self.flux_weights, psd=True)
        )

    @property
    def kappa_alpha(self):
        """``sqrt(alpha) kappa sqrt(alpha)``."""
        def build():
            if self.scalar_alpha:
                return float(self.alpha) * self.kappa
            s = spectral_function(self.alpha, np.sqrt, self.flux_weights, psd=True)
            return s @ self.kappa @ s
        return self._cached("kappa_alpha", build)

    def replace(self, **changes):
        """Copy with some coefficients changed (derived caches are not shared)."""
        values = {
            name: getattr(self, name)
            for name in ("grid", "rho0", "C", "kappa", "gamma", "lam", "alpha", "beta", "eps", "T0",
                         "check_elasticity")
        }
        values.update(changes)
        return MaterialData(**values)


def material_from_parameters(grid, rho0=1.0, elasticity=1.0, kappa=1.0, coupling=0.5, lam=1.0,
                             alpha=0.1, beta=None, eps=None, T0=1.0, check_elasticity=True):
    """Build :class:`MaterialData` from scalar (isotropic, homogeneous) parameters.

    ``gamma = coupling * iota`` where ``iota`` embeds a nodal scalar as the
    cell-averaged trace part of a symmetric tensor.
    """
    nf = grid.space("vector-face").dof_count
    kappa_arr = np.asarray(kappa, dtype=float)
    K = kappa_arr * np.eye(nf) if kappa_arr.ndim == 0 else kappa_arr
    gamma = float(coupling) * trace_embedding(grid).dense()
    return MaterialData(
        grid=grid,
        rho0=rho0,
        C=stiffness_matrix(grid, elasticity),
        kappa=K,
        gamma=gamma,
        lam=float(lam),
        alpha=alpha,
        beta=beta,
        eps=eps,
        T0=float(T0),
        check_elasticity=check_elasticity,
    )


DEFAULT_PARAMETERS = dict(
    rho0=1.0, kappa=1.0, coupling=0.5, lam=1.0, alpha=0.1, beta=0.5, eps=0.1, T0=1.0,
)


def default_material(grid, **overrides):
    """Nondimensional reference material used by the bundled scenarios and tests."""
    params = dict(DEFAULT_PARAMETERS)
    params["elasticity"] = 1.0 if grid.dimension == 1 else {"lame_lambda": 1.0, "lame_mu": 1.0}
    params.update(overrides)
    return material_from_parameters(grid, **params)
