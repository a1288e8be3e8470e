"""
Causal implicit-Euler integration of ``(d/dt M0 + M1 + A) U = J`` and
recovery of the physical fields.

States are stored at ``t_n = t_start + n dt`` for ``n = 0..steps`` with
``U_0 = 0`` (zero history). Each step solves::

    (M0/dt + M1 + A) U_n = J_n + (M0/dt) U_{n-1}

with one LU factorization reused for every step. The exponential weight
``nu`` only enters norms.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .assembly import _Pieces
from .exceptions import Singular, Unstable, VariantMismatch
from .linalg import Factorization, weighted_adjoint

STEP_RESIDUAL_TOL = 1e-9
BLOWUP_FACTOR = 1e12


@dataclass(frozen=True)
class TimeAxis:
    t_start: float = 0.0
    dt: float = 1e-3
    steps: int = 200
    nu: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")

    @property
    def times(self):
        return self.t_start + self.dt * np.arange(self.steps + 1)

    @property
    def horizon(self):
        return self.dt * self.steps

    def with_(self, **changes):
        values = dict(t_start=self.t_start, dt=self.dt, steps=self.steps, nu=self.nu)
        values.update(changes)
        return TimeAxis(**values)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``U_n`` (rows) on a :class:`TimeAxis` with a field layout."""

    axis: TimeAxis
    states: np.ndarray
    layout: tuple
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        n = sum(space.dof_count for _, space in self.layout)
        if states.shape != (self.axis.steps + 1, n):
            raise ValueError(f"states have shape {states.shape}, expected {(self.axis.steps + 1, n)}")
        if not np.all(np.isfinite(states)):
            raise ValueError("trajectory contains non-finite values")
        object.__setattr__(self, "states", states)

    @property
    def names(self):
        return [name for name, _ in self.layout]

    @property
    def weights(self):
        return np.concatenate([space.weights for _, space in self.layout])

    def _slice(self, name):
        sizes = [space.dof_count for _, space in self.layout]
        i = self.names.index(name)
        start = sum(sizes[:i])
        return slice(start, start + sizes[i])

    def field(self, name):
        return self.states[:, self._slice(name)]

    def restrict(self, names):
        layout = tuple((n, s) for n, s in self.layout if n in names)
        states = np.hstack([self.field(n) for n, _ in layout])
        return Trajectory(self.axis, states, layout)

    def __sub__(self, other):
        if [n for n, _ in self.layout] != [n for n, _ in other.layout]:
            raise ValueError("trajectories have different layouts")
        return Trajectory(self.axis, self.states - other.states, self.layout)

    def scaled(self, c):
        return Trajectory(self.axis, c * self.states, self.layout)


def weighted_norm(traj):
    """``sqrt(sum_n ||U_n||_W^2 exp(-2 nu t_n) dt)``."""
    ax = traj.axis
    per_step = np.sum(traj.weights * traj.states**2, axis=1)
    return float(np.sqrt(np.sum(per_step * np.exp(-2.0 * ax.nu * ax.times)) * ax.dt))


def field_norm(values, weights, axis):
    """Weighted space-time norm of a ``(steps+1, dofs)`` array."""
    per_step = np.sum(weights * np.asarray(values) ** 2, axis=1)
    return float(np.sqrt(np.sum(per_step * np.exp(-2.0 * axis.nu * axis.times)) * axis.dt))


def causal_integral(values, dt=None):
    """Discrete inverse time derivative: ``u_0 = 0``, ``u_n = u_{n-1} + dt f_n``.

    Accepts a :class:`Trajectory` (returns one, ``dt`` from its axis) or an
    array with time along axis 0.
    """
    if isinstance(values, Trajectory):
        return Trajectory(values.axis, causal_integral(values.states, values.axis.dt), values.layout)
    if dt is None:
        raise ValueError("dt is required for array input")
    f = np.asarray(values, dtype=float)
    u = np.zeros_like(f)
    u[1:] = np.cumsum(f[1:], axis=0) * dt
    return u


def source_vector(system, F=None, Q=None, axis=None):
    """Right-hand side ``J = (rho0 F, 0, rho0 Q / T0, 0)`` stacked over time."""
    m = system.material
    steps = axis.steps + 1
    J = np.zeros((steps, system.size))
    ncomp = system.layout[0][1].components
    if F is not None:
        J[:, system.slice("v")] = np.asarray(F) * np.tile(m.rho0, ncomp)
    if Q is not None:
        J[:, system.slice("theta")] = np.asarray(Q) * (m.rho0 / m.T0)
    return J


def solve(system, J, axis):
    """Integrate the block system with implicit Euler from zero history.

    Raises
    ------
    Singular
        If the step matrix cannot be factorized.
    Unstable
        If a state exceeds ``1e12`` times the source scale.
    """
    J = np.asarray(J, dtype=float)
    if J.shape != (axis.steps + 1, system.size):
        raise ValueError(f"source has shape {J.shape}, expected {(axis.steps + 1, system.size)}")
    if not np.all(np.isfinite(J)):
        raise ValueError("source contains non-finite values")
    mass = system.M0 / axis.dt
    step = Factorization(mass + system.M1 + system.A)
    scale = float(np.max(np.linalg.norm(J, axis=1), initial=0.0))
    U = np.zeros_like(J)
    worst = 0.0
    for n in range(1, axis.steps + 1):
        rhs = J[n] + mass @ U[n - 1]
        U[n] = step.solve(rhs)
        r = step.residual(U[n], rhs)
        worst = max(worst, r)
        if not np.isfinite(r) or r > STEP_RESIDUAL_TOL:
            raise Singular(f"step {n}: relative residual {r:.3e} exceeds {STEP_RESIDUAL_TOL:g}")
        if np.linalg.norm(U[n]) > BLOWUP_FACTOR * max(scale, np.finfo(float).tiny):
            raise Unstable(f"step {n}: state norm {np.linalg.norm(U[n]):.3e} exceeds "
                           f"{BLOWUP_FACTOR:g} x source scale {scale:.3e}")
    return Trajectory(axis, U, system.layout,
                      info={"variant": system.variant, "max_step_residual": worst})


@dataclass(frozen=True, eq=False)
class RecoveredFields:
    """Physical fields along a trajectory, each of shape ``(steps+1, dofs)``.

    ``phi`` is the conductive temperature including the reference offset
    ``T0``; ``psi = phi - T0`` is the Dirichlet-zero deviation.
    """

    axis: TimeAxis
    phi: np.ndarray
    q: np.ndarray
    eta: np.ndarray
    strain: np.ndarray
    displacement: np.ndarray
    theta: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    variant: str
    T0: float
    spaces: dict

    @property
    def psi(self):
        return self.phi - self.T0

    def as_dict(self):
        return {
            "phi": self.phi, "q": self.q, "eta": self.eta, "strain": self.strain,
            "displacement": self.displacement, "theta": self.theta,
        }


def recover_fields(traj, system):
    """Invert the state definition of ``system.variant`` to get ``phi``, ``q``, ``eta``, strain and ``u``."""
    variant = traj.info.get("variant", system.variant)
    if variant != system.variant or traj.layout != system.layout:
        raise VariantMismatch(f"trajectory from {variant!r} cannot be recovered with {system.variant!r}")
    m = system.material
    p = _Pieces(m)
    U = system.split(traj.states)
    v, s, theta, w = U["v"], U["sigma"], U["theta"], U["w"]
    T0 = m.T0
    nn = theta.shape[1]

    if system.variant == "two_strain":
        sigma = s @ (m.sqrt_C @ system.parts["R_tensor"]).T
    else:
        sigma = s

    if system.variant in ("two_temperature", "two_strain"):
        # w = (1 + B B*)^(1/2) sqrt(kappa)^-1 q / T0 with B = sqrt(kappa_alpha) grad
        q = T0 * w @ system.parts["flux_recovery"].T
        L = np.eye(nn) + system.parts["L_nodes"]
        psi = Factorization(L).solve(theta.T).T
    elif system.variant == "yosida":
        eps = float(m.eps)
        D = system.parts["D"]
        D_adj = weighted_adjoint(D, p.wn, p.wf)
        pflux = T0 * (w - eps * theta @ D.T) @ system.parts["P_faces"].T
        q = pflux @ m.sqrt_kappa.T
        psi = ((1 + eps * T0) * theta + eps * pflux @ D_adj.T / T0) @ system.parts["P_nodes"].T
    else:
        q = T0 * w @ m.sqrt_kappa.T
        psi = theta.copy()

    strain = (sigma + theta @ p.gamma.T) @ m.C_inv.T
    eta = m.lam * theta / T0 + (strain @ p.gamma_adj.T) / m.rho0
    spaces = {name: space for name, space in system.layout}
    spaces = {
        "phi": spaces["theta"], "theta": spaces["theta"], "eta": spaces["theta"],
        "q": spaces["w"], "strain": spaces["sigma"], "sigma": spaces["sigma"],
        "displacement": spaces["v"], "v": spaces["v"],
    }
    return RecoveredFields(
        axis=traj.axis, phi=psi + T0, q=q, eta=eta, strain=strain,
        displacement=causal_integral(v, traj.axis.dt), theta=theta, sigma=sigma, v=v,
        variant=system.variant, T0=T0, spaces=spaces,
    )


def _div_matrix(p):
    return -weighted_adjoint(p.G, p.wn, p.wf)


def two_temperature_residual(fields, system):
    """``theta - (phi - T0) - alpha div q`` over time (scalar alpha).

    This is the sign for which substituting Fourier's law gives
    ``theta = (1 - div kappa_alpha grad)(phi - T0)``, the relation the block
    system is built from.
    """
    m = system.material
    if not m.scalar_alpha:
        raise ValueError("the two-temperature relation residual needs a scalar alpha")
    div = _div_matrix(_Pieces(m))
    return fields.theta - fields.psi - float(m.alpha) * fields.q @ div.T


def fourier_residual(fields, system):
    """``q + kappa grad (phi - T0)`` over time."""
    m = system.material
    p = _Pieces(m)
    return fields.q + fields.psi @ (m.kappa @ p.G).T


def final_relation_residual(fields, system):
    """``theta - (1 - eps T0 / (1 + eps T0)) (phi - T0) - (eps / T0) div q`` for the yosida variant."""
    if fields.variant != "yosida" or system.variant != "yosida":
        raise VariantMismatch("final relation residual needs yosida fields")
    m = system.material
    eps, T0 = float(m.eps), m.T0
    div = _div_matrix(_Pieces(m))
    factor = 1.0 - eps * T0 / (1.0 + eps * T0)
    return fields.theta - factor * fields.psi - (eps / T0) * fields.q @ div.T


ORACLE_FIELDS = ("v", "sigma", "theta", "q", "psi")


def original_form_oracle(grid, material, F, Q, axis):
    """Implicit Euler on the untransformed equations, unknowns ``(v, sigma, theta, q, psi)``.

    ``psi = phi - T0``. Momentum balance, the time-differentiated
    stress-strain law and the heat equation carry time derivatives; the
    two-temperature relation and Fourier's law are algebraic rows of the
    same monolithic step matrix. No operator square roots are used.
    """
    m = material
    if not m.scalar_alpha:
        raise ValueError("oracle needs a scalar alpha")
    p = _Pieces(m)
    nv, ns, nn, nf = p.sizes
    sizes = (nv, ns, nn, nf, nn)
    o = np.concatenate([[0], np.cumsum(sizes)])
    N = int(o[-1])
    dt, T0, alpha = axis.dt, m.T0, float(m.alpha)
    G = p.G
    div = _div_matrix(p)
    Grad = p.Grad.dense()
    Div = p.Div.dense()
    Cinv = m.C_inv
    heat_theta = p.rho_n * (m.lam / T0) + p.gamma_adj @ Cinv @ p.gamma
    heat_sigma = p.gamma_adj @ Cinv

    def put(M, i, j, B):
        M[o[i]:o[i + 1], o[j]:o[j + 1]] += B

    # time-derivative part (mass) and instantaneous part
    mass = np.zeros((N, N))
    put(mass, 0, 0, p.rho_v)
    put(mass, 1, 1, Cinv)
    put(mass, 1, 2, Cinv @ p.gamma)
    put(mass, 2, 1, heat_sigma)
    put(mass, 2, 2, heat_theta)
    inst = np.zeros((N, N))
    put(inst, 0, 1, -Div)
    put(inst, 1, 0, -Grad)
    put(inst, 2, 3, div / T0)
    # algebraic rows: Fourier's law, then the two-temperature relation
    put(inst, 3, 3, np.eye(nf))
    put(inst, 3, 4, m.kappa @ G)
    put(inst, 4, 2, np.eye(nn))
    put(inst, 4, 4, -np.eye(nn))
    put(inst, 4, 3, -alpha * div)

    step = Factorization(mass / dt + inst)
    rhs_src = np.zeros((axis.steps + 1, N))
    ncomp = grid.space("vector-node").components
    if F is not None:
        rhs_src[:, o[0]:o[1]] = np.asarray(F) * np.tile(m.rho0, ncomp)
    if Q is not None:
        rhs_src[:, o[2]:o[3]] = np.asarray(Q) * (m.rho0 / T0)
    X = np.zeros((axis.steps + 1, N))
    for n in range(1, axis.steps + 1):
        X[n] = step.solve(rhs_src[n] + mass @ X[n - 1] / dt)
    layout = (
        ("v", grid.space("vector-node")),
        ("sigma", grid.space("symtensor-cell")),
        ("theta", grid.space("scalar-node")),
        ("q", grid.space("vector-face")),
        ("psi", grid.space("scalar-node")),
    )
    return Trajectory(axis, X, layout, info={"variant": "original_form"})


def energy(traj, system):
    """``0.5 <M0 U_n, U_n>_W`` per step."""
    w = system.weights
    MU = traj.states @ system.M0.T
    return 0.5 * np.sum(w * MU * traj.states, axis=1)


def write_trajectory_csv(path, traj, fields=None):
    """One row per stored component: ``step,time,field,component_index,value``."""
    names = traj.names if fields is None else [n for n in traj.names if n in fields]
    times = traj.axis.times
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "time", "field", "component_index", "value"])
        for n in range(traj.axis.steps + 1):
            t = f"{times[n]:.17g}"
            for name in names:
                for k, value in enumerate(traj.field(name)[n]):
                    writer.writerow([n, t, name, k, f"{value:.17g}"])


def write_fields_csv(path, fields, names=None):
    """Recovered fields in the trajectory CSV format."""
    data = fields.as_dict()
    names = list(data) if names is None else [n for n in data if n in names]
    times = fields.axis.times
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "time", "field", "component_index", "value"])
        for n in range(fields.axis.steps + 1):
            t = f"{times[n]:.17g}"
            for name in names:
                for k, value in enumerate(data[name][n]):
                    writer.writerow([n, t, name, k, f"{value:.17g}"])


def read_trajectory_csv(path):
    """Parse a trajectory CSV into ``{field: array(steps+1, dofs)}`` and the time column."""
    rows = {}
    times = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            n, k = int(rec["step"]), int(rec["component_index"])
            times[n] = float(rec["time"])
            rows.setdefault(rec["field"], {})[(n, k)] = float(rec["value"])
    steps = max(times) + 1
    out = {}
    for name, entries in rows.items():
        dofs = max(k for _, k in entries) + 1
        arr = np.zeros((steps, dofs))
        for (n, k), value in entries.items():
            arr[n, k] = value
        out[name] = arr
    return out, np.array([times[n] for n in range(steps)])
