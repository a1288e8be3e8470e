"""
Parameter studies built from independent solves.

Each study returns a :class:`StudyResult` table. Deviations are weighted
space-time norms of the physical ``(v, sigma, theta)`` fields. Solves run
on a thread pool whose size is capped by ``EVOTHERM_THREADS``.
"""

import csv
import io
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonMonotone, ValidationError
from .solver import Trajectory, recover_fields, solve, weighted_norm

KINDS = ("alpha_limit", "eps_limit", "dt_refine", "model_compare")
COMPARED = ("two_strain", "yosida", "classical_limit")


@dataclass
class StudyResult:
    kind: str
    columns: tuple
    rows: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "" if np.isnan(x) else f"{x:.17g}"
    return str(x)


def max_workers(n_tasks):
    cap = os.environ.get("EVOTHERM_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_tasks, limit))


def _map(func, items):
    items = list(items)
    with ThreadPoolExecutor(max_workers=max_workers(len(items))) as pool:
        return list(pool.map(func, items))


def physical(scenario, variant, axis=None, **overrides):
    """Solve ``variant`` and return the ``(v, sigma, theta)`` trajectory in physical variables."""
    axis = axis or scenario.axis
    system = scenario.build_system(variant, **overrides)
    traj = solve(system, scenario.source(system, axis), axis)
    fields = recover_fields(traj, system)
    layout = tuple((n, s) for n, s in system.layout if n in ("v", "sigma", "theta"))
    states = np.hstack([fields.v, fields.sigma, fields.theta])
    return Trajectory(axis, states, layout, info=dict(traj.info))


def check_values(values):
    values = [float(v) for v in values]
    if not values:
        raise ValidationError("at least one sweep value is required", "values")
    if any(not np.isfinite(v) or v <= 0 for v in values):
        raise ValidationError("sweep values must be positive", "values")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValidationError("sweep values must be sorted in strictly descending order", "values")
    return values


def _flag_monotone(result, deviations):
    bad = [i for i in range(1, len(deviations)) if deviations[i] > deviations[i - 1]]
    if bad:
        msg = (f"{result.kind}: deviation increases at value index {bad[0]} "
               f"({deviations[bad[0] - 1]:.3e} -> {deviations[bad[0]]:.3e})")
        result.warnings.append(msg)
        warnings.warn(msg, NonMonotone, stacklevel=3)
    return not bad


def _limit_study(kind, scenario, values, variant, parameter):
    values = check_values(values)
    result = StudyResult(kind, ("value", "deviation", "ratio", "monotone"))
    tasks = [("classical_limit", {})] + [(variant, {parameter: v}) for v in values]
    trajs = _map(lambda t: physical(scenario, t[0], **t[1]), tasks)
    ref = trajs[0]
    devs = [weighted_norm(tr - ref) for tr in trajs[1:]]
    ok = _flag_monotone(result, devs)
    for i, (v, d) in enumerate(zip(values, devs)):
        ratio = devs[i - 1] / d if i and d > 0 else float("nan")
        result.rows.append([v, d, ratio, ok])
    return result


def alpha_limit(scenario, values):
    """Two-temperature solutions against the classical system as ``alpha`` decreases."""
    return _limit_study("alpha_limit", scenario, values, "two_temperature", "alpha")


def eps_limit(scenario, values):
    """Resolvent-based solutions against the classical system as ``eps`` decreases."""
    return _limit_study("eps_limit", scenario, values, "yosida", "eps")


def dt_refine(scenario, values):
    """Self-convergence of the scenario variant under time-step refinement.

    The horizon of the scenario is kept fixed. Every step size must divide
    the coarsest one, and all comparisons use the coarsest time grid.
    ``deviation`` is measured against the finest step size,
    ``consecutive`` between a row and the next finer one, and ``ratio``
    between consecutive deviations (about 2 for first-order stepping).
    """
    values = check_values(values)
    horizon = scenario.axis.horizon
    coarse = values[0]
    steps = [int(round(horizon / dt)) for dt in values]
    strides = [int(round(coarse / dt)) for dt in values]
    for dt, n, k in zip(values, steps, strides):
        if abs(n * dt - horizon) > 1e-9 * horizon or abs(k * dt - coarse) > 1e-9 * coarse:
            raise ValidationError(f"dt = {dt:g} does not divide the horizon and the coarsest step", "values")
    axes = [scenario.axis.with_(dt=dt, steps=n) for dt, n in zip(values, steps)]
    trajs = _map(lambda ax: physical(scenario, scenario.variant, ax), axes)
    coarse_axis = axes[0]
    on_coarse = [Trajectory(coarse_axis, tr.states[::k], tr.layout) for tr, k in zip(trajs, strides)]
    to_finest = [weighted_norm(tr - on_coarse[-1]) for tr in on_coarse]
    consecutive = [weighted_norm(a - b) for a, b in zip(on_coarse, on_coarse[1:])] + [float("nan")]
    result = StudyResult("dt_refine", ("value", "steps", "deviation", "consecutive", "ratio"))
    for i, dt in enumerate(values):
        nxt = consecutive[i + 1] if i + 1 < len(consecutive) else float("nan")
        ratio = consecutive[i] / nxt if np.isfinite(nxt) and nxt > 0 else float("nan")
        result.rows.append([dt, steps[i], to_finest[i], consecutive[i], ratio])
    return result


def model_compare(scenario, values):
    """Each alternative model against the two-temperature model.

    Every sweep value ``s`` is used as ``alpha = beta = eps = s``.
    """
    values = check_values(values)
    tasks = [(s, variant) for s in values for variant in ("two_temperature",) + COMPARED]
    trajs = _map(lambda t: physical(scenario, t[1], alpha=t[0], beta=t[0], eps=t[0]), tasks)
    by_key = dict(zip(tasks, trajs))
    result = StudyResult("model_compare", ("value", "variant", "deviation"))
    for s in values:
        ref = by_key[(s, "two_temperature")]
        for variant in COMPARED:
            result.rows.append([s, variant, weighted_norm(by_key[(s, variant)] - ref)])
    return result


STUDIES = {
    "alpha_limit": alpha_limit,
    "eps_limit": eps_limit,
    "dt_refine": dt_refine,
    "model_compare": model_compare,
}


def run_study(kind, scenario, values):
    if kind not in STUDIES:
        raise ValidationError(f"unknown study {kind!r}; expected one of {KINDS}", "kind")
    return STUDIES[kind](scenario, values)
