"""
Block systems ``(d/dt M0 + M1 + A) U = J`` for the thermoelastic model variants.

State layout is always four fields::

    v      vector-node      velocity
    sigma  symtensor-cell   stress (two_strain: its regularized, rescaled version)
    theta  scalar-node      thermodynamic temperature
    w      vector-face      heat-flux variable (definition depends on the variant)
"""

from dataclasses import dataclass, field

import numpy as np

from .calculus import resolvent_inverse_sqrt
from .exceptions import VariantMismatch
from .linalg import inv, spectral_function, sym_eig, weighted_adjoint
from .operators import build_Div, build_Grad, build_grad

VARIANTS = ("two_temperature", "two_strain", "yosida", "classical_limit")
FIELDS = ("v", "sigma", "theta", "w")
SPACE_KINDS = ("vector-node", "symtensor-cell", "scalar-node", "vector-face")


def _selfadjoint(X, w):
    return 0.5 * (X + weighted_adjoint(X, w, w))


@dataclass(frozen=True, eq=False)
class BlockSystem:
    """Dense block matrices ``M0``, ``M1``, ``A`` plus the field layout.

    ``parts`` keeps the individual operators the assembly produced (for
    example ``M1_32``) so that field recovery can invert state definitions
    without redoing the spectral work.
    """

    M0: np.ndarray
    M1: np.ndarray
    A: np.ndarray
    layout: tuple
    variant: str
    material: object
    parts: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.material.grid

    @property
    def sizes(self):
        return tuple(space.dof_count for _, space in self.layout)

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.sizes)])

    @property
    def size(self):
        return int(sum(self.sizes))

    @property
    def weights(self):
        return np.concatenate([space.weights for _, space in self.layout])

    def index(self, name):
        return [n for n, _ in self.layout].index(name)

    def slice(self, name):
        i = self.index(name)
        o = self.offsets
        return slice(o[i], o[i + 1])

    def block(self, M, i, j):
        o = self.offsets
        return M[o[i]:o[i + 1], o[j]:o[j + 1]]

    def adjoint(self, M):
        w = self.weights
        return weighted_adjoint(M, w, w)

    def sym(self, M):
        return 0.5 * (M + self.adjoint(M))

    def skew(self, M):
        return 0.5 * (M - self.adjoint(M))

    def pattern(self, M, tol=0.0):
        """4x4 boolean array marking blocks with an entry larger than ``tol``."""
        n = len(self.layout)
        return np.array([[np.max(np.abs(self.block(M, i, j)), initial=0.0) > tol
                          for j in range(n)] for i in range(n)])

    def split(self, U):
        """Dictionary of field views of a state vector (or a stack of states)."""
        U = np.asarray(U)
        return {name: U[..., self.slice(name)] for name, _ in self.layout}


def _layout(grid):
    return tuple((name, grid.space(kind)) for name, kind in zip(FIELDS, SPACE_KINDS))


def _assemble(blocks, sizes):
    n = sum(sizes)
    M = np.zeros((n, n))
    o = np.concatenate([[0], np.cumsum(sizes)])
    for (i, j), B in blocks.items():
        M[o[i]:o[i + 1], o[j]:o[j + 1]] = B
    return M


class _Pieces:
    """Shared operators of one grid/material pair."""

    def __init__(self, material):
        g = material.grid
        self.material = material
        self.layout = _layout(g)
        self.sizes = tuple(s.dof_count for _, s in self.layout)
        self.wv, self.ws, self.wn, self.wf = (s.weights for _, s in self.layout)
        self.grad = build_grad(g)
        self.Grad = build_Grad(g)
        self.Div = build_Div(g)
        self.G = self.grad.dense()
        self.gamma = material.gamma
        self.gamma_adj = weighted_adjoint(self.gamma, self.wn, self.ws)
        ncomp = g.space("vector-node").components
        self.rho_v = np.diag(np.tile(material.rho0, ncomp))
        self.rho_n = np.diag(material.rho0)

    def adj(self, X, w_dom, w_cod):
        return weighted_adjoint(X, w_dom, w_cod)

    def m0_thermoelastic(self):
        """M0 of the two-temperature model (shared by yosida and classical_limit)."""
        m = self.material
        Cinv = m.C_inv
        Cg = Cinv @ self.gamma
        heat = self.rho_n * (m.lam / m.T0) + self.gamma_adj @ Cg
        nf = self.sizes[3]
        return _assemble({
            (0, 0): self.rho_v,
            (1, 1): _selfadjoint(Cinv, self.ws),
            (1, 2): Cg,
            (2, 1): self.adj(Cg, self.wn, self.ws),
            (2, 2): _selfadjoint(heat, self.wn),
            (3, 3): np.zeros((nf, nf)),
        }, self.sizes)

    def a_elastic(self):
        return _assemble({
            (0, 1): -self.Div.dense(),
            (1, 0): -self.Grad.dense(),
        }, self.sizes)

    def heat_blocks(self, M132):
        m = self.material
        nf = self.sizes[3]
        return {
            (2, 3): -self.adj(M132, self.wn, self.wf),
            (3, 2): M132,
            (3, 3): m.T0 * np.eye(nf),
        }

    def m1_32(self):
        """Both forms of ``sqrt(kappa) grad (1 - div kappa_alpha grad)^(-1/2)``.

        With ``B = sqrt(kappa_alpha) grad`` and ``T = sqrt(kappa) sqrt(kappa_alpha)^-1``:

        * right form ``sqrt(kappa) grad (1 + B* B)^(-1/2)`` (root on scalar nodes),
        * left form ``T (1 + B B*)^(-1/2) B`` (root on faces).

        For scalar ``alpha`` the factor ``T`` is a multiple of the identity and
        the left form is ``(1 + B B*)^(-1/2) sqrt(kappa) grad``.
        ``flux_recovery`` maps the state ``w`` back to the heat flux ``q``.
        """
        m = self.material
        sqrt_ka = _sqrt_flux(m)
        B = sqrt_ka @ self.G
        B_adj = self.adj(B, self.wn, self.wf)
        L_nodes = B_adj @ B
        L_faces = B @ B_adj
        R_nodes = resolvent_inverse_sqrt(_selfadjoint(L_nodes, self.wn), self.wn)
        R_faces = resolvent_inverse_sqrt(_selfadjoint(L_faces, self.wf), self.wf)
        SG = m.sqrt_kappa @ self.G
        if m.scalar_alpha:
            left = R_faces @ SG
            recovery = m.sqrt_kappa @ R_faces
        else:
            T = m.sqrt_kappa @ inv(sqrt_ka)
            T_inv = sqrt_ka @ inv(m.sqrt_kappa)
            left = T @ R_faces @ B
            recovery = m.sqrt_kappa @ T @ R_faces @ T_inv
        return {
            "M1_32": SG @ R_nodes,
            "M1_32_left": left,
            "R_nodes": R_nodes,
            "R_faces": R_faces,
            "L_nodes": L_nodes,
            "flux_recovery": recovery,
        }


def _sqrt_flux(m):
    if m.scalar_alpha:
        return np.sqrt(float(m.alpha)) * m.sqrt_kappa
    return spectral_function(m.kappa_alpha, np.sqrt, m.flux_weights, psd=True)


def assemble_two_temperature(grid, material):
    """Two-temperature system with ``w = (1 - sqrt(k_a) grad div sqrt(k_a))^(1/2) sqrt(k)^-1 q / T0``."""
    _check_grid(grid, material)
    p = _Pieces(material)
    heat = p.m1_32()
    M1 = _assemble(p.heat_blocks(heat["M1_32"]), p.sizes)
    return BlockSystem(p.m0_thermoelastic(), M1, p.a_elastic(), p.layout, "two_temperature",
                       material, parts=heat)


def assemble_two_strain(grid, material):
    """Two-temperature, two-strain system; the spatial operator ``A`` vanishes.

    The second field is ``(1 - sqrt(C_b) Grad Div sqrt(C_b))^(1/2) C^(-1/2) sigma``
    with ``C_b = sqrt(beta) C sqrt(beta)``.
    """
    _check_grid(grid, material)
    m = material
    if m.beta is None:
        raise VariantMismatch("two_strain needs beta")
    if not m.scalar_alpha:
        raise VariantMismatch("operator-valued alpha is only supported by two_temperature")
    p = _Pieces(m)
    heat = p.m1_32()
    Cis = m.inv_sqrt_C
    Cg = Cis @ p.gamma
    thermal = p.rho_n * (m.lam / m.T0) + p.gamma_adj @ m.C_inv @ p.gamma
    M0 = _assemble({
        (0, 0): p.rho_v,
        (1, 1): np.eye(p.sizes[1]),
        (1, 2): Cg,
        (2, 1): p.adj(Cg, p.wn, p.ws),
        (2, 2): _selfadjoint(thermal, p.wn),
        (3, 3): np.zeros((p.sizes[3], p.sizes[3])),
    }, p.sizes)

    E = p.Grad.dense()
    SE = m.sqrt_C @ E
    Bb = np.sqrt(float(m.beta)) * SE
    Bb_adj = p.adj(Bb, p.wv, p.ws)
    R_tensor = resolvent_inverse_sqrt(_selfadjoint(Bb @ Bb_adj, p.ws), p.ws)
    R_vector = resolvent_inverse_sqrt(_selfadjoint(Bb_adj @ Bb, p.wv), p.wv)
    M110 = -(R_tensor @ SE)
    blocks = p.heat_blocks(heat["M1_32"])
    blocks[(1, 0)] = M110
    blocks[(0, 1)] = -p.adj(M110, p.wv, p.ws)
    M1 = _assemble(blocks, p.sizes)
    A = np.zeros_like(M1)
    parts = dict(heat, M1_10=M110, M1_10_right=-(SE @ R_vector), R_tensor=R_tensor)
    return BlockSystem(M0, M1, A, p.layout, "two_strain", m, parts=parts)


def assemble_yosida(grid, material):
    """Resolvent-based alternative with ``D = sqrt(kappa) grad`` and no square roots of ``D``.

    Fourth field: ``(1 + eps^2 D D*) sqrt(kappa)^-1 q / T0 + eps D theta``.
    """
    _check_grid(grid, material)
    m = material
    if m.eps is None:
        raise VariantMismatch("yosida needs eps")
    p = _Pieces(m)
    eps = float(m.eps)
    D = m.sqrt_kappa @ p.G
    D_adj = p.adj(D, p.wn, p.wf)
    nn, nf = p.sizes[2], p.sizes[3]
    P_nodes = inv(np.eye(nn) + eps**2 * (D_adj @ D))
    P_faces = inv(np.eye(nf) + eps**2 * (D @ D_adj))
    blocks = {
        (2, 2): _selfadjoint(eps * (D_adj @ D) @ P_nodes, p.wn),
        (2, 3): -(D_adj @ P_faces),
        (3, 2): D @ P_nodes,
        (3, 3): _selfadjoint(eps * (D @ D_adj) @ P_faces, p.wf) + m.T0 * np.eye(nf),
    }
    M1 = _assemble(blocks, p.sizes)
    parts = {"D": D, "P_nodes": P_nodes, "P_faces": P_faces}
    return BlockSystem(p.m0_thermoelastic(), M1, p.a_elastic(), p.layout, "yosida", m, parts=parts)


def assemble_classical_limit(grid, material):
    """Classical thermoelasticity (two-temperature parameter zero), ``w = sqrt(kappa)^-1 q / T0``.

    The coupling ``sqrt(kappa) grad`` sits in the skew operator ``A``.
    """
    _check_grid(grid, material)
    m = material
    p = _Pieces(m)
    D = m.sqrt_kappa @ p.G
    A = p.a_elastic()
    o = np.concatenate([[0], np.cumsum(p.sizes)])
    A[o[2]:o[3], o[3]:o[4]] = -p.adj(D, p.wn, p.wf)
    A[o[3]:o[4], o[2]:o[3]] = D
    M1 = _assemble({(3, 3): m.T0 * np.eye(p.sizes[3])}, p.sizes)
    return BlockSystem(p.m0_thermoelastic(), M1, A, p.layout, "classical_limit", m,
                       parts={"D": D})


ASSEMBLERS = {
    "two_temperature": assemble_two_temperature,
    "two_strain": assemble_two_strain,
    "yosida": assemble_yosida,
    "classical_limit": assemble_classical_limit,
}


def assemble(variant, grid, material):
    try:
        return ASSEMBLERS[variant](grid, material)
    except KeyError:
        raise VariantMismatch(f"unknown variant {variant!r}; expected one of {VARIANTS}") from None


def _check_grid(grid, material):
    if grid != material.grid:
        raise ValueError("material was built for a different grid")


def gauss_transform(system):
    """Symmetric Gauss elimination of the thermoelastic ``M0``.

    Returns ``(S, reduced)`` with ``S`` the unit block-triangular matrix
    carrying ``gamma`` in block (2, 3) (1-based) and
    ``reduced = (S^-1)* M0 S^-1``.
    """
    if system.variant == "two_strain":
        raise VariantMismatch("gauss_transform applies to the two-temperature M0 only")
    n = system.size
    o = system.offsets
    S = np.eye(n)
    S_inv = np.eye(n)
    gamma = system.material.gamma
    S[o[1]:o[2], o[2]:o[3]] = gamma
    S_inv[o[1]:o[2], o[2]:o[3]] = -gamma
    reduced = system.adjoint(S_inv) @ system.M0 @ S_inv
    return S, reduced


def gauss_expected(system):
    """Closed form ``blockdiag(rho0, C^-1, rho0 lambda / T0, 0)``."""
    m = system.material
    p = _Pieces(m)
    return _assemble({
        (0, 0): p.rho_v,
        (1, 1): m.C_inv,
        (2, 2): p.rho_n * (m.lam / m.T0),
    }, p.sizes)


@dataclass(frozen=True)
class WellPosednessCertificate:
    c_range: float
    c_kernel: float
    skew_residual: float
    nu0_estimate: float = None
    symmetry_residual: float = 0.0
    kernel_dim: int = 0

    @property
    def valid(self):
        return self.c_range > 0 and self.c_kernel > 0 and self.skew_residual < 1e-12

    def as_dict(self):
        return {
            "c_range": self.c_range,
            "c_kernel": self.c_kernel,
            "skew_residual": self.skew_residual,
            "nu0_estimate": self.nu0_estimate,
            "symmetry_residual": self.symmetry_residual,
            "kernel_dim": self.kernel_dim,
            "valid": self.valid,
        }


def _normalized(M, w):
    s = np.sqrt(w)
    return M * (s[:, None] / s[None, :])


def check_wellposedness(system):
    """Positivity constants of ``M0`` on its range and of ``sym M1`` on ``N(M0)``.

    Exactly vanishing rows/columns of ``M0`` form the structural kernel; any
    further eigenvalues below ``1e-12 ||M0||`` are added to it.
    """
    w = system.weights
    M0h = _normalized(system.M0, w)
    M0h = 0.5 * (M0h + M0h.T)
    scale = np.max(np.abs(M0h)) if M0h.size else 0.0
    zero = np.all(system.M0 == 0, axis=0) & np.all(system.M0 == 0, axis=1)
    live = np.flatnonzero(~zero)
    eig = sym_eig(M0h[np.ix_(live, live)])
    norm = np.max(np.abs(eig.eigenvalues)) if eig.eigenvalues.size else 0.0
    tol = 1e-12 * max(norm, scale)
    on_range = np.abs(eig.eigenvalues) > tol
    c_range = float(np.min(eig.eigenvalues[on_range])) if on_range.any() else 0.0

    n = system.size
    basis = [np.eye(n)[:, np.flatnonzero(zero)]]
    extra = eig.eigenvectors[:, ~on_range]
    if extra.shape[1]:
        lifted = np.zeros((n, extra.shape[1]))
        lifted[live] = extra
        basis.append(lifted)
    K = np.hstack(basis)
    symM1h = _normalized(system.sym(system.M1), w)
    symM1h = 0.5 * (symM1h + symM1h.T)
    if K.shape[1]:
        c_kernel = float(sym_eig(K.T @ symM1h @ K).eigenvalues[0])
    else:
        c_kernel = float("inf")
    skew_residual = float(np.linalg.norm(system.A + system.adjoint(system.A)))
    symmetry_residual = float(np.linalg.norm(system.M0 - system.adjoint(system.M0)))
    cert = WellPosednessCertificate(c_range, c_kernel, skew_residual, None, symmetry_residual,
                                    int(K.shape[1]))
    if cert.valid:
        cert = WellPosednessCertificate(c_range, c_kernel, skew_residual, 0.0, symmetry_residual,
                                        int(K.shape[1]))
    return cert
