"""
Verification reports: every check carries its measured value and threshold.

Items compare with ``<=`` (residuals, bounds) or ``>`` (positivity
constants). A report passes iff every item passes.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .assembly import _Pieces, assemble_yosida, check_wellposedness, gauss_expected, gauss_transform
from .calculus import commuted_sqrt, grid_sqrt_calls, hs_norm, product_adjoint_check
from .linalg import op_norm, spectral_function
from .operators import build_Div, build_div, build_Grad, build_grad
from .solver import (
    field_norm,
    final_relation_residual,
    fourier_residual,
    original_form_oracle,
    recover_fields,
    two_temperature_residual,
    weighted_norm,
)


@dataclass(frozen=True)
class ReportItem:
    item: str
    value: float
    threshold: float
    comparison: str = "<="

    @property
    def passed(self):
        v = self.value
        if v is None or not np.isfinite(v):
            return False
        return v <= self.threshold if self.comparison == "<=" else v > self.threshold

    def as_dict(self):
        return {
            "item": self.item,
            "value": _json_float(self.value),
            "threshold": _json_float(self.threshold),
            "comparison": self.comparison,
            "pass": self.passed,
        }


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else str(x)


@dataclass
class VerificationReport:
    scenario: str
    variant: str
    certificate: dict = None
    items: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, item, value, threshold, comparison="<="):
        self.items.append(ReportItem(item, float(value), float(threshold), comparison))

    @property
    def passed(self):
        return all(i.passed for i in self.items) and not any(n.startswith("error") for n in self.notes)

    def failures(self):
        return [i.item for i in self.items if not i.passed]

    def as_dict(self):
        return {
            "scenario": self.scenario,
            "variant": self.variant,
            "pass": self.passed,
            "certificate": self.certificate,
            "items": [i.as_dict() for i in self.items],
            "notes": list(self.notes),
        }

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"


def _adjointness(report, grid):
    g, d = build_grad(grid), build_div(grid)
    wn, wf = g.domain.weights, g.codomain.weights
    res = np.abs(wn[:, None] * d.dense() + g.dense().T * wf[None, :]).max()
    report.add("adjoint.grad_div", res, 1e-13)
    E, D = build_Grad(grid), build_Div(grid)
    wv, ws = E.domain.weights, E.codomain.weights
    res = np.abs(wv[:, None] * D.dense() + E.dense().T * ws[None, :]).max()
    report.add("adjoint.Grad_Div", res, 1e-13)


def certify_static(system, name="scenario"):
    """Checks that need no time stepping: certificate, identities, structure."""
    m = system.material
    grid = system.grid
    report = VerificationReport(name, system.variant)
    cert = check_wellposedness(system)
    report.certificate = {k: _json_float(v) if isinstance(v, float) else v
                          for k, v in cert.as_dict().items()}
    report.add("certificate.c_range", cert.c_range, 0.0, ">")
    report.add("certificate.c_kernel", cert.c_kernel, 0.0, ">")
    report.add("certificate.skew_residual", cert.skew_residual, 1e-12)
    report.add("certificate.m0_symmetry", cert.symmetry_residual, 1e-13)
    _adjointness(report, grid)

    p = _Pieces(m)
    sqrt_ka = spectral_function(m.kappa_alpha, np.sqrt, m.flux_weights, psd=True)
    B = sqrt_ka @ p.G
    pair = commuted_sqrt(B, 1.0, p.wn, p.wf)
    report.add("commutation.mismatch", pair.mismatch, 1e-10 * (1 + hs_norm(B, p.wn, p.wf)))
    report.add("commutation.norm", pair.right_norm, 1 + 1e-10)
    res = product_adjoint_check(m.kappa, build_grad(grid))
    scale = 1 + op_norm(p.G, p.wn, p.wf) * op_norm(m.kappa, p.wf, p.wf)
    report.add("product_adjoint", res, 1e-12 * scale)

    if system.variant != "two_strain":
        _, reduced = gauss_transform(system)
        report.add("gauss.reduction", np.abs(reduced - gauss_expected(system)).max(), 1e-12)

    if system.variant in ("two_temperature", "two_strain"):
        M132 = system.parts["M1_32"]
        diff = hs_norm(M132 - system.parts["M1_32_left"], p.wn, p.wf)
        report.add("m1_32.forms", diff, 1e-10 * (1 + hs_norm(M132, p.wn, p.wf)))
        if m.scalar_alpha:
            report.add("m1_32.bound", op_norm(M132, p.wn, p.wf), float(m.alpha) ** -0.5 + 1e-9)
    if system.variant == "two_strain":
        M110 = system.parts["M1_10"]
        diff = hs_norm(M110 - system.parts["M1_10_right"], p.wv, p.ws)
        report.add("m1_10.forms", diff, 1e-10 * (1 + hs_norm(M110, p.wv, p.ws)))
        report.add("m1_10.bound", op_norm(M110, p.wv, p.ws), float(m.beta) ** -0.5 + 1e-9)
        report.add("two_strain.A_zero", np.abs(system.A).max(), 0.0)
    if system.variant == "yosida":
        before = grid_sqrt_calls()
        assemble_yosida(grid, m)
        report.add("yosida.sqrt_calls", grid_sqrt_calls() - before, 0.0)
    return report


def add_solution_checks(report, system, traj, F=None, Q=None):
    """Residuals of the original relations after a solve."""
    m = system.material
    axis = traj.axis
    report.add("solver.max_step_residual", traj.info.get("max_step_residual", np.nan), 1e-9)
    fields = recover_fields(traj, system)
    wn = system.layout[2][1].weights
    wf = system.layout[3][1].weights
    report.add("residual.fourier", field_norm(fourier_residual(fields, system), wf, axis), 1e-8)
    if system.variant in ("two_temperature", "two_strain") and m.scalar_alpha:
        res = field_norm(two_temperature_residual(fields, system), wn, axis)
        report.add("residual.two_temperature", res, 1e-8)
    if system.variant == "yosida":
        res = field_norm(final_relation_residual(fields, system), wn, axis)
        report.add("residual.final_relation", res, 1e-7)
    if system.variant == "two_temperature" and m.scalar_alpha:
        oracle = original_form_oracle(system.grid, m, F, Q, axis).restrict(["v", "sigma", "theta"])
        mine = traj.restrict(["v", "sigma", "theta"])
        ref = weighted_norm(oracle)
        diff = weighted_norm(mine - oracle)
        report.add("oracle.relative_difference", diff / ref if ref > 0 else diff, 1e-7)
    return fields
