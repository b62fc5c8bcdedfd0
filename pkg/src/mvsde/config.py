"""Experiment config files: a flat key/value format with sections.

Three sections are recognized.  ``[experiment]`` holds the run parameters,
``[solver]`` the implicit-stage tolerances, and ``[model]`` a custom
coefficient bundle composed from the built-in primitives (``powerlaw(c,k)``
for c x|x|^(k-1), ``linear(matrix)``, ``const(vector-or-matrix)``,
``diaglinear(c)`` for diagonal state-proportional diffusions, ``square(c)``
for the one-dimensional quadratic diffusion kernel, and ``zero``).  Sums of
primitives are written with ``+``.  Unknown sections or keys are errors.

Manifests written by the runner are JSON files holding the resolved config;
``load_config`` accepts either format.
"""

from __future__ import annotations

import ast
import configparser
import json
import re
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid
from .model import (LinearKernel, Model, ModelConstants,
                    PowerLawKernel, SquareKernel, SumKernel, ZeroKernel,
                    const_drift, const_sigma, diag_linear_sigma, linear_drift,
                    powerlaw_drift, sum_coefficients, zero_drift)

__all__ = ["load_config", "parse_config_text", "build_custom_model"]

_FLOAT_LIST = ("h_grid", "observe_times", "hist_range")
_INT_LIST = ("N_grid",)
_FLOATS = ("T", "h", "h_proxy", "h_fine", "alpha")
_INTS = ("seed", "N", "N_proxy", "bins", "tracks")
_BOOLS = ("enforce_h_constraint", "tame_confinement")
_STRS = ("task", "x0", "z0")

_EXPERIMENT_KEYS = set(_FLOAT_LIST) | set(_INT_LIST) | set(_FLOATS) | set(_INTS) \
    | set(_BOOLS) | set(_STRS) | {"model", "d", "schemes"}

_SOLVER_KEYS = {"tol", "max_outer", "max_newton", "damping"}

_MODEL_KEYS = {"name", "d", "l", "f", "f_sigma", "u", "b", "sigma",
               "L_f1", "L_us1", "L_us2", "L_b1", "L_b2", "L_b3", "q", "m", "L3"}


def _convert(section, key, raw):
    raw = raw.strip()
    try:
        if key in _FLOATS:
            return float(raw)
        if key in _INTS or key == "d":
            return int(raw)
        if key in _BOOLS:
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if key in _FLOAT_LIST:
            return [float(v) for v in raw.split(",") if v.strip()]
        if key in _INT_LIST:
            return [int(v) for v in raw.split(",") if v.strip()]
        if key == "schemes":
            return [v.strip() for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigInvalid(f"{section}.{key}: cannot parse value {raw!r}") from exc
    return raw


def parse_config_text(text: str) -> dict:
    """Parse the sectioned key/value format into a resolved config dict."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (T vs t, L_f1, N_grid)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalid(f"config parse error: {exc}") from exc
    unknown_sections = set(parser.sections()) - {"experiment", "solver", "model"}
    if unknown_sections:
        raise ConfigInvalid(f"unknown config sections: {sorted(unknown_sections)}")
    if "experiment" not in parser:
        raise ConfigInvalid("config needs an [experiment] section")
    cfg: dict = {}
    model_name = None
    model_dim = None
    for key, raw in parser["experiment"].items():
        if key not in _EXPERIMENT_KEYS:
            raise ConfigInvalid(f"experiment.{key}: unknown key")
        if key == "model":
            model_name = raw.strip()
        elif key == "d":
            model_dim = _convert("experiment", key, raw)
        else:
            cfg[key] = _convert("experiment", key, raw)
    if "solver" in parser:
        solver = {}
        for key, raw in parser["solver"].items():
            if key not in _SOLVER_KEYS:
                raise ConfigInvalid(f"solver.{key}: unknown key")
            try:
                solver[key] = int(raw) if key.startswith("max_") else float(raw)
            except ValueError as exc:
                raise ConfigInvalid(f"solver.{key}: cannot parse {raw!r}") from exc
        cfg["solver"] = solver
    if model_name == "custom" or (model_name is None and "model" in parser):
        if "model" not in parser:
            raise ConfigInvalid("model = custom needs a [model] section")
        spec = {}
        for key, raw in parser["model"].items():
            if key not in _MODEL_KEYS:
                raise ConfigInvalid(f"model.{key}: unknown key")
            spec[key] = raw.strip()
        build_custom_model(spec)  # fail loud at parse time
        cfg["model"] = {"custom": spec}
    elif model_name is not None:
        cfg["model"] = {"name": model_name}
        if model_dim is not None:
            cfg["model"]["d"] = model_dim
    else:
        raise ConfigInvalid("experiment.model is required")
    return cfg


def load_config(path) -> dict:
    """Load a config file (sectioned text) or a manifest (.json)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: invalid manifest JSON: {exc}") from exc
        if "config" in payload:
            return payload["config"]
        return payload
    return parse_config_text(text)


# ---------------------------------------------------------------------------
# Custom models from primitive compositions
# ---------------------------------------------------------------------------

_TERM_RE = re.compile(r"^\s*([a-z]+)\s*(?:\((.*)\))?\s*$", re.DOTALL)


def _split_terms(expr: str):
    terms, depth, cur = [], 0, []
    for ch in expr:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "+" and depth == 0:
            terms.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    terms.append("".join(cur))
    return [t for t in terms if t.strip()]


def _parse_term(field, term):
    match = _TERM_RE.match(term)
    if not match:
        raise ConfigInvalid(f"model.{field}: cannot parse term {term.strip()!r}")
    name, args = match.group(1), match.group(2)
    if args is None or not args.strip():
        return name, ()
    try:
        values = ast.literal_eval(f"({args},)")
    except (ValueError, SyntaxError) as exc:
        raise ConfigInvalid(f"model.{field}: bad arguments in {term.strip()!r}") from exc
    return name, values


def _build_kernel(field, expr, d, l):
    parts = []
    for term in _split_terms(expr):
        name, args = _parse_term(field, term)
        if name == "zero":
            parts.append(ZeroKernel(d, l if field == "f_sigma" else None))
        elif name == "powerlaw" and field == "f":
            parts.append(PowerLawKernel(*args))
        elif name == "linear" and field == "f":
            parts.append(LinearKernel(*args))
        elif name == "square" and field == "f_sigma":
            if d != 1 or l != 1:
                raise ConfigInvalid("model.f_sigma: square(c) needs d = l = 1")
            parts.append(SquareKernel(*args))
        else:
            raise ConfigInvalid(f"model.{field}: unsupported primitive '{name}'")
    return parts[0] if len(parts) == 1 else SumKernel(parts)


def _build_drift(field, expr, d):
    parts = []
    for term in _split_terms(expr):
        name, args = _parse_term(field, term)
        if name == "zero":
            parts.append(zero_drift(d))
        elif name == "powerlaw":
            parts.append(powerlaw_drift(*args))
        elif name == "linear":
            parts.append(linear_drift(*args))
        elif name == "const":
            parts.append(const_drift(*args))
        else:
            raise ConfigInvalid(f"model.{field}: unsupported primitive '{name}'")
    return sum_coefficients(parts)


def _build_sigma(expr, d, l):
    parts = []
    for term in _split_terms(expr):
        name, args = _parse_term("sigma", term)
        if name == "zero":
            parts.append(const_sigma(np.zeros((d, l))))
        elif name == "const":
            parts.append(const_sigma(*args))
        elif name == "diaglinear":
            if d != l:
                raise ConfigInvalid("model.sigma: diaglinear needs l = d")
            parts.append(diag_linear_sigma(*args))
        else:
            raise ConfigInvalid(f"model.sigma: unsupported primitive '{name}'")
    return sum_coefficients(parts)


def build_custom_model(spec: dict) -> Model:
    """Assemble a Model from a custom [model] section (string-valued dict)."""
    missing = {"d", "l"} - set(spec)
    if missing:
        raise ConfigInvalid(f"custom model needs keys {sorted(missing)}")
    try:
        d, l = int(spec["d"]), int(spec["l"])
    except ValueError as exc:
        raise ConfigInvalid("model.d / model.l must be integers") from exc
    consts = {}
    for key in ("L_f1", "L_us1", "L_us2", "L_b1", "L_b2", "L_b3", "q", "m", "L3"):
        if key in spec:
            try:
                consts[key] = float(spec[key])
            except ValueError as exc:
                raise ConfigInvalid(f"model.{key}: not a number") from exc
    try:
        constants = ModelConstants(**consts)
    except ValueError as exc:
        raise ConfigInvalid(f"model constants: {exc}") from exc
    return Model(
        name=spec.get("name", "custom"),
        d=d, l=l,
        f=_build_kernel("f", spec.get("f", "zero"), d, l),
        f_sigma=_build_kernel("f_sigma", spec.get("f_sigma", "zero"), d, l),
        u=_build_drift("u", spec.get("u", "zero"), d),
        b=_build_drift("b", spec.get("b", "zero"), d),
        sigma=_build_sigma(spec.get("sigma", "zero"), d, l),
        constants=constants,
    )
