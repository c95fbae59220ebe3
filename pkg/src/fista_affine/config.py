"""Experiment configuration: strict JSON schema, parsing, and problem assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .affine import AffineSubspace, NoFixedPointError
from .fista import TSequenceError, make_t_sequence
from .instances import build_alternating, build_diagonal, build_friedrichs, build_shift
from .linalg import Dense
from .problem import SmoothnessError, least_squares, quadratic_form

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "build_problem",
    "resolve_x0",
    "resolve_t_sequence",
]

SCHEMA_VERSION = 1

_number = {"type": "number"}
_vector = {"type": "array", "items": _number, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}
_subspace = {
    "type": "object",
    "additionalProperties": False,
    "required": ["anchor"],
    "properties": {"anchor": _vector, "directions": {"type": "array", "items": _vector}},
}
_schedule = {
    "anyOf": [
        _vector,
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["geometric", "harmonic", "explicit"]},
                "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "start": {"type": "number", "exclusiveMinimum": 0},
                "values": _vector,
            },
        },
    ]
}


def _kind_schema(kind, required, props):
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["kind", *required],
        "properties": {"kind": {"const": kind}, **props},
    }


PROBLEM_SCHEMAS = {
    "friedrichs": _kind_schema("friedrichs", ["m"], {
        "m": {"type": "integer", "minimum": 1}, "gamma_schedule": _schedule}),
    "shift": _kind_schema("shift", ["m"], {"m": {"type": "integer", "minimum": 2}}),
    "diagonal": _kind_schema("diagonal", ["m"], {
        "m": {"type": "integer", "minimum": 1}, "gamma_schedule": _schedule}),
    "alt_projections": _kind_schema("alt_projections", ["U", "V"], {
        "U": _subspace, "V": _subspace}),
    "dense": _kind_schema("dense", ["A", "b"], {"A": _matrix, "b": _vector, "V": _subspace}),
    "quadratic_form": _kind_schema("quadratic_form", ["A", "b"], {
        "A": _matrix, "b": _vector, "V": _subspace}),
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "problem", "x0", "t_sequence", "max_iter"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "problem": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": sorted(PROBLEM_SCHEMAS)}},
        },
        "x0": {
            "anyOf": [
                _vector,
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["random"],
                    "properties": {
                        "random": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["seed"],
                            "properties": {
                                "seed": {"type": "integer", "minimum": 0},
                                "scale": {"type": "number", "exclusiveMinimum": 0},
                            },
                        }
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["unit"],
                    "properties": {"unit": {"type": "integer", "minimum": 0}},
                },
            ]
        },
        "t_sequence": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": ["nesterov_recursive", "linear_half", "custom_explicit"]},
                "values": _vector,
            },
        },
        "beta": {"anyOf": [{"const": "auto"}, {"type": "number", "exclusiveMinimum": 0}]},
        "max_iter": {"type": "integer", "minimum": 1},
        "residual_tol": {"type": "number", "minimum": 0},
        "convergence_tol": {"type": "number", "exclusiveMinimum": 0},
        "baseline": {"type": "boolean"},
        "output_prefix": {"type": "string", "minLength": 1},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; `field` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


def _field_path(error, prefix=()):
    parts = [*prefix, *[str(p) for p in error.absolute_path]]
    if error.validator == "required":
        # name the missing property itself
        missing = error.message.split("'")[1] if "'" in error.message else ""
        parts.append(missing)
    return ".".join(p for p in parts if p) or "<root>"


def _validate(instance, schema, prefix=()):
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(instance),
                    key=lambda e: (list(e.absolute_path), e.validator))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(_field_path(err, prefix), err.message)


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    x0: object
    t_sequence: dict
    max_iter: int
    beta: object = "auto"
    residual_tol: float = 1e-10
    convergence_tol: float = 1e-6
    baseline: bool = False
    output_prefix: str | None = None
    schema: int = field(default=SCHEMA_VERSION)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        _validate(data, CONFIG_SCHEMA)
        kind = data["problem"]["kind"]
        _validate(data["problem"], PROBLEM_SCHEMAS[kind], ("problem",))
        return cls(
            problem=json.loads(json.dumps(data["problem"])),
            x0=json.loads(json.dumps(data["x0"])),
            t_sequence=dict(data["t_sequence"]),
            max_iter=int(data["max_iter"]),
            beta=data.get("beta", "auto"),
            residual_tol=float(data.get("residual_tol", 1e-10)),
            convergence_tol=float(data.get("convergence_tol", 1e-6)),
            baseline=bool(data.get("baseline", False)),
            output_prefix=data.get("output_prefix"),
            schema=data["schema"],
        )

    def to_dict(self):
        d = {
            "schema": self.schema,
            "problem": self.problem,
            "x0": self.x0,
            "t_sequence": self.t_sequence,
            "beta": self.beta,
            "max_iter": self.max_iter,
            "residual_tol": self.residual_tol,
            "convergence_tol": self.convergence_tol,
            "baseline": self.baseline,
        }
        if self.output_prefix is not None:
            d["output_prefix"] = self.output_prefix
        return d

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return ExperimentConfig.from_dict(data)


def _subspace(desc, dim, name):
    anchor = np.asarray(desc["anchor"], dtype=np.float64)
    if dim is not None and anchor.size != dim:
        raise ConfigError(f"problem.{name}.anchor", f"has {anchor.size} entries, expected {dim}")
    dirs = desc.get("directions", [])
    for i, d in enumerate(dirs):
        if len(d) != anchor.size:
            raise ConfigError(f"problem.{name}.directions.{i}",
                              f"has {len(d)} entries, expected {anchor.size}")
    return AffineSubspace.from_spanning(anchor, dirs)


def _matrix(rows, name):
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigError(f"problem.{name}", "rows have different lengths")
    return Dense(rows)


def build_problem(config):
    """Assemble the problem described by `config`; raises :class:`ConfigError`."""
    desc = config.problem
    kind = desc["kind"]
    beta = config.beta
    try:
        if kind == "friedrichs":
            _fixed_beta(beta)
            return build_friedrichs(desc["m"], desc.get("gamma_schedule"))
        if kind == "shift":
            return build_shift(desc["m"], beta)
        if kind == "diagonal":
            return build_diagonal(desc["m"], desc.get("gamma_schedule"), beta)
        if kind == "alt_projections":
            _fixed_beta(beta)
            U = _subspace(desc["U"], None, "U")
            V = _subspace(desc["V"], U.ambient_dim, "V")
            return build_alternating(U, V)
        A = _matrix(desc["A"], "A")
        if len(desc["b"]) != A.out_dim:
            raise ConfigError("problem.b", f"has {len(desc['b'])} entries, expected {A.out_dim}")
        V = _subspace(desc["V"], A.in_dim, "V") if "V" in desc else None
        if kind == "dense":
            return least_squares(A, desc["b"], V, beta)
        return quadratic_form(A, desc["b"], V, beta)
    except ConfigError:
        raise
    except SmoothnessError as exc:
        raise ConfigError("beta", str(exc)) from exc
    except NoFixedPointError as exc:
        raise ConfigError("problem", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError("problem", str(exc)) from exc


def _fixed_beta(beta):
    if beta != "auto" and float(beta) != 1.0:
        raise ConfigError("beta", "alternating projections use beta = 1; give 'auto' or 1")


def resolve_x0(config, dim):
    desc = config.x0
    if isinstance(desc, list):
        if len(desc) != dim:
            raise ConfigError("x0", f"has {len(desc)} entries, problem dimension is {dim}")
        return np.asarray(desc, dtype=np.float64)
    if "unit" in desc:
        if desc["unit"] >= dim:
            raise ConfigError("x0.unit", f"index {desc['unit']} out of range for dimension {dim}")
        x = np.zeros(dim)
        x[desc["unit"]] = 1.0
        return x
    rnd = desc["random"]
    rng = np.random.default_rng(rnd["seed"])
    return float(rnd.get("scale", 1.0)) * rng.standard_normal(dim)


def resolve_t_sequence(config):
    desc = config.t_sequence
    family = desc["family"]
    try:
        if family == "custom_explicit":
            if "values" not in desc:
                raise ConfigError("t_sequence.values", "custom_explicit needs 'values'")
            ts = make_t_sequence(family, desc["values"])
            if len(desc["values"]) < config.max_iter + 1:
                raise ConfigError("t_sequence.values",
                                  f"{len(desc['values'])} values given, max_iter "
                                  f"{config.max_iter} needs {config.max_iter + 1}")
            return ts
        if "values" in desc:
            raise ConfigError("t_sequence.values", f"not allowed for family {family!r}")
        return make_t_sequence(family)
    except TSequenceError as exc:
        raise ConfigError("t_sequence.values", str(exc)) from exc
