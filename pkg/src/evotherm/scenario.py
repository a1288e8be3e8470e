"""
Scenario documents: strict JSON descriptions of a simulation.

A scenario fixes the grid, the material, the model variant, the sources
``F`` (body force per unit mass) and ``Q`` (heat source per unit mass), the
time axis and the outputs. Unknown keys are rejected. Scalar positivity
constraints are checked at parse time; definiteness of the elasticity
operator is left to the well-posedness certificate so that an indefinite
``C`` surfaces as a failing report rather than a parse error.

Example::

    {
      "name": "demo",
      "variant": "two_temperature",
      "grid": {"cells": [12], "lengths": [1.0]},
      "material": {"alpha": 0.1},
      "sources": {"Q": {"profile": "gaussian-pulse", "center": [0.5], "width": 0.1}},
      "time": {"steps": 200}
    }
"""

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .assembly import VARIANTS, assemble
from .exceptions import ParseError, ValidationError
from .material import material_from_parameters
from .operators import Grid
from .solver import TimeAxis, source_vector

PROFILES = ("gaussian-pulse", "constant-patch", "zero")
TRAJECTORY_FIELDS = ("v", "sigma", "theta", "w")
RECOVERED_FIELDS = ("phi", "q", "eta", "strain", "displacement", "theta")

_TOP_KEYS = {"name", "variant", "grid", "material", "sources", "time", "outputs"}
_GRID_KEYS = {"dimension", "cells", "lengths"}
_MATERIAL_KEYS = {"rho0", "elasticity", "kappa", "coupling", "lambda", "alpha", "beta", "eps", "T0"}
_TIME_KEYS = {"t_start", "dt", "steps", "nu"}
_OUTPUT_KEYS = {"fields", "recovered", "report"}
_SOURCE_KEYS = {
    "profile", "amplitude", "center", "width", "onset", "duration", "lower", "upper", "direction",
}

MATERIAL_DEFAULTS = {
    "rho0": 1.0, "kappa": 1.0, "coupling": 0.5, "lambda": 1.0, "alpha": 0.1, "T0": 1.0,
}


@dataclass(frozen=True)
class SourceProfile:
    """Space-time profile ``amplitude * g(x) * h(t)``.

    ``gaussian-pulse``: ``g`` is a Gaussian of standard deviation ``width``
    around ``center``; ``h = sin^2(pi (t - onset) / duration)`` on
    ``[onset, onset + duration]`` and zero elsewhere.

    ``constant-patch``: ``g`` is the indicator of the box
    ``[lower, upper]``; ``h`` is 1 on ``[onset, onset + duration)`` (no end
    if ``duration`` is omitted).

    ``zero``: identically zero.

    For the vector-valued force ``direction`` selects the components.
    """

    profile: str = "zero"
    amplitude: float = 1.0
    center: tuple = None
    width: float = 0.1
    onset: float = 0.0
    duration: float = None
    lower: tuple = None
    upper: tuple = None
    direction: tuple = None

    def time_factor(self, t):
        t = np.asarray(t, dtype=float)
        if self.profile == "gaussian-pulse":
            duration = 0.1 if self.duration is None else self.duration
            s = (t - self.onset) / duration
            inside = (s >= 0.0) & (s <= 1.0)
            return np.where(inside, np.sin(np.pi * np.clip(s, 0.0, 1.0)) ** 2, 0.0)
        if self.profile == "constant-patch":
            on = t >= self.onset
            if self.duration is not None:
                on &= t < self.onset + self.duration
            return on.astype(float)
        return np.zeros_like(t)

    def space_factor(self, x):
        """Spatial shape at points ``x`` of shape ``(n, dimension)``."""
        x = np.asarray(x, dtype=float)
        if self.profile == "gaussian-pulse":
            r2 = np.sum((x - np.asarray(self.center)) ** 2, axis=1)
            return np.exp(-r2 / (2.0 * self.width**2))
        if self.profile == "constant-patch":
            inside = np.all((x >= np.asarray(self.lower)) & (x <= np.asarray(self.upper)), axis=1)
            return inside.astype(float)
        return np.zeros(x.shape[0])

    def sample(self, times, points, components=1):
        """Array ``(len(times), components * len(points))`` of stacked component blocks."""
        base = self.amplitude * np.outer(self.time_factor(times), self.space_factor(points))
        if components == 1:
            return base
        direction = np.zeros(components)
        direction[0] = 1.0
        if self.direction is not None:
            direction = np.asarray(self.direction, dtype=float)
        return np.hstack([c * base for c in direction])


@dataclass(frozen=True)
class Scenario:
    name: str
    variant: str
    grid: Grid
    material: dict
    sources: dict
    axis: TimeAxis
    outputs: dict = field(default_factory=dict)

    def build_material(self, **overrides):
        """:class:`MaterialData` for this scenario, with optional parameter overrides."""
        params = dict(self.material)
        params.update(overrides)
        params["lam"] = params.pop("lambda")
        return material_from_parameters(self.grid, check_elasticity=False, **params)

    def build_system(self, variant=None, **overrides):
        return assemble(variant or self.variant, self.grid, self.build_material(**overrides))

    def forcing(self, axis=None):
        """Sampled ``(F, Q)`` on ``axis`` (default: the scenario axis)."""
        axis = axis or self.axis
        g = self.grid
        t = axis.times
        nodes = g.node_coordinates()
        F = self.sources["F"].sample(t, nodes, components=g.dimension)
        Q = self.sources["Q"].sample(t, nodes)
        return F, Q

    def source(self, system, axis=None):
        """Right-hand side ``J`` for ``system`` on ``axis``."""
        axis = axis or self.axis
        F, Q = self.forcing(axis)
        return source_vector(system, F, Q, axis)


def _reject_duplicates(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ParseError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def _obj(value, path, allowed):
    if not isinstance(value, dict):
        raise ParseError("expected an object", path)
    unknown = sorted(set(value) - allowed)
    if unknown:
        raise ParseError(f"unknown key {unknown[0]!r}", path or "<root>")
    return value


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError("expected a number", path)
    if not math.isfinite(value):
        raise ParseError("expected a finite number", path)
    return float(value)


def _positive(value, path, name=None):
    x = _number(value, path)
    if not x > 0:
        raise ValidationError(f"{name or path.rsplit('.', 1)[-1]} must be positive", path)
    return x


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError("expected an integer", path)
    return value


def _vector(value, path, length):
    if not isinstance(value, list) or len(value) != length:
        raise ParseError(f"expected a list of {length} numbers", path)
    return tuple(_number(x, f"{path}[{i}]") for i, x in enumerate(value))


def _parse_grid(doc):
    g = _obj(doc, "grid", _GRID_KEYS)
    if "cells" not in g:
        raise ParseError("missing key 'cells'", "grid")
    cells = g["cells"]
    if not isinstance(cells, list) or not cells:
        raise ParseError("expected a list of cell counts", "grid.cells")
    dim = g.get("dimension", len(cells))
    dim = _int(dim, "grid.dimension")
    if dim not in (1, 2):
        raise ValidationError("dimension must be 1 or 2", "grid.dimension")
    if len(cells) != dim:
        raise ValidationError(f"cells must have {dim} entries", "grid.cells")
    counts = []
    for i, c in enumerate(cells):
        c = _int(c, f"grid.cells[{i}]")
        if c < 2:
            raise ValidationError("each axis needs at least 2 cells", f"grid.cells[{i}]")
        counts.append(c)
    lengths = g.get("lengths", [1.0] * dim)
    if not isinstance(lengths, list) or len(lengths) != dim:
        raise ParseError(f"expected a list of {dim} lengths", "grid.lengths")
    lengths = [_positive(x, f"grid.lengths[{i}]", "length") for i, x in enumerate(lengths)]
    return Grid(tuple(counts), tuple(lengths))


def _parse_elasticity(value, dim):
    path = "material.elasticity"
    if isinstance(value, dict):
        if dim != 2:
            raise ValidationError("Lame parameters need a 2D grid", path)
        _obj(value, path, {"lame_lambda", "lame_mu"})
        missing = {"lame_lambda", "lame_mu"} - set(value)
        if missing:
            raise ParseError(f"missing key {sorted(missing)[0]!r}", path)
        return {k: _number(v, f"{path}.{k}") for k, v in value.items()}
    if isinstance(value, list):
        if dim == 1:
            return [_number(x, f"{path}[{i}]") for i, x in enumerate(value)]
        if len(value) != 3 or not all(isinstance(r, list) and len(r) == 3 for r in value):
            raise ParseError("expected a 3x3 matrix", path)
        M = [[_number(x, f"{path}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(value)]
        if not np.allclose(M, np.transpose(M), rtol=0, atol=1e-14):
            raise ValidationError("elasticity matrix must be symmetric", path)
        return M
    return _number(value, path)


def _parse_material(doc, variant, grid):
    m = _obj(doc, "material", _MATERIAL_KEYS)
    out = dict(MATERIAL_DEFAULTS)
    out["elasticity"] = 1.0 if grid.dimension == 1 else {"lame_lambda": 1.0, "lame_mu": 1.0}
    for key in ("rho0", "kappa", "lambda", "alpha", "T0", "beta", "eps"):
        if key in m:
            out[key] = _positive(m[key], f"material.{key}", key)
    if "coupling" in m:
        out["coupling"] = _number(m["coupling"], "material.coupling")
    if "elasticity" in m:
        out["elasticity"] = _parse_elasticity(m["elasticity"], grid.dimension)
    if isinstance(out["elasticity"], list) and grid.dimension == 1 and len(out["elasticity"]) != grid.n_cells:
        raise ValidationError(f"per-cell elasticity needs {grid.n_cells} values", "material.elasticity")
    if variant == "two_strain" and "beta" not in out:
        raise ValidationError("beta required for two_strain", "material.beta")
    if variant == "yosida" and "eps" not in out:
        raise ValidationError("eps required for yosida", "material.eps")
    return out


def _parse_source(doc, path, dim, vector):
    s = _obj(doc, path, _SOURCE_KEYS)
    profile = s.get("profile", "zero")
    if profile not in PROFILES:
        raise ValidationError(f"unknown profile {profile!r}; expected one of {PROFILES}", f"{path}.profile")
    kw = {"profile": profile}
    if "amplitude" in s:
        kw["amplitude"] = _number(s["amplitude"], f"{path}.amplitude")
    if "onset" in s:
        kw["onset"] = _number(s["onset"], f"{path}.onset")
    if "duration" in s:
        kw["duration"] = _positive(s["duration"], f"{path}.duration", "duration")
    if profile == "gaussian-pulse":
        if "center" not in s:
            raise ValidationError("gaussian-pulse needs a center", f"{path}.center")
        kw["center"] = _vector(s["center"], f"{path}.center", dim)
        if "width" in s:
            kw["width"] = _positive(s["width"], f"{path}.width", "width")
    elif profile == "constant-patch":
        for key in ("lower", "upper"):
            if key not in s:
                raise ValidationError(f"constant-patch needs {key}", f"{path}.{key}")
            kw[key] = _vector(s[key], f"{path}.{key}", dim)
    if "direction" in s:
        if not vector:
            raise ParseError("direction only applies to the force F", f"{path}.direction")
        kw["direction"] = _vector(s["direction"], f"{path}.direction", dim)
    return SourceProfile(**kw)


def _parse_time(doc):
    t = _obj(doc, "time", _TIME_KEYS)
    kw = {}
    if "t_start" in t:
        kw["t_start"] = _number(t["t_start"], "time.t_start")
    for key in ("dt", "nu"):
        if key in t:
            kw[key] = _positive(t[key], f"time.{key}", key)
    if "steps" in t:
        steps = _int(t["steps"], "time.steps")
        if steps < 1:
            raise ValidationError("steps must be positive", "time.steps")
        kw["steps"] = steps
    return TimeAxis(**kw)


def _parse_outputs(doc):
    o = _obj(doc, "outputs", _OUTPUT_KEYS)
    out = {"fields": list(TRAJECTORY_FIELDS), "recovered": list(RECOVERED_FIELDS), "report": True}
    for key, allowed in (("fields", TRAJECTORY_FIELDS), ("recovered", RECOVERED_FIELDS)):
        if key in o:
            names = o[key]
            if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
                raise ParseError("expected a list of field names", f"outputs.{key}")
            bad = [n for n in names if n not in allowed]
            if bad:
                raise ValidationError(f"unknown field {bad[0]!r}; expected one of {allowed}", f"outputs.{key}")
            out[key] = names
    if "report" in o:
        if not isinstance(o["report"], bool):
            raise ParseError("expected true or false", "outputs.report")
        out["report"] = o["report"]
    return out


def parse_scenario(text):
    """Parse and validate a scenario JSON document.

    Raises
    ------
    ParseError
        Malformed JSON (path ``line L column C``), wrong types or unknown keys.
    ValidationError
        A constraint is violated, e.g. ``alpha must be positive``.
    """
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    _obj(doc, "", _TOP_KEYS)
    if "grid" not in doc:
        raise ParseError("missing key 'grid'", "<root>")
    name = doc.get("name", "scenario")
    if not isinstance(name, str) or not name:
        raise ParseError("expected a non-empty string", "name")
    variant = doc.get("variant", "two_temperature")
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}; expected one of {VARIANTS}", "variant")
    grid = _parse_grid(doc["grid"])
    material = _parse_material(doc.get("material", {}), variant, grid)
    src = _obj(doc.get("sources", {}), "sources", {"F", "Q"})
    sources = {
        "F": _parse_source(src.get("F", {}), "sources.F", grid.dimension, vector=True),
        "Q": _parse_source(src.get("Q", {}), "sources.Q", grid.dimension, vector=False),
    }
    axis = _parse_time(doc.get("time", {}))
    outputs = _parse_outputs(doc.get("outputs", {}))
    return Scenario(name, variant, grid, material, sources, axis, outputs)


def bundled_scenarios():
    """Names of the scenarios shipped with the package."""
    root = resources.files("evotherm") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(path_or_name):
    """Read a scenario from a file path or a bundled scenario name."""
    if os.path.exists(path_or_name):
        with open(path_or_name) as fh:
            return parse_scenario(fh.read())
    name = path_or_name[:-5] if path_or_name.endswith(".json") else path_or_name
    if name in bundled_scenarios():
        text = (resources.files("evotherm") / "scenarios" / f"{name}.json").read_text()
        return parse_scenario(text)
    raise FileNotFoundError(f"no scenario file or bundled scenario named {path_or_name!r}")
