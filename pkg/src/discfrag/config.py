"""JSON run configuration: schema, validation and object builders."""

from __future__ import annotations

import json
from dataclasses import dataclass

import jsonschema
import numpy as np

from .coefficients import (
    AffineRates,
    Generator,
    SineModulation,
    becker_doring_family,
    power_law_family,
)
from .solver import SolverConfig
from .weights import certify_kappa, construct_weight, power_weight

SCHEMA_VERSION = 1

_number = {"type": "number"}
_generator = {
    "oneOf": [
        {"type": "object", "properties": {"const": {"type": "number", "minimum": 0}},
         "required": ["const"], "additionalProperties": False},
        {"type": "object", "properties": {"linear": {"type": "number", "minimum": 0}},
         "required": ["linear"], "additionalProperties": False},
        {"type": "object", "properties": {"power": {
            "type": "array", "prefixItems": [{"type": "number", "minimum": 0}, _number],
            "minItems": 2, "maxItems": 2}},
         "required": ["power"], "additionalProperties": False},
    ]
}
_rates = {
    "type": "object",
    "properties": {
        "c": _generator,
        "d": _generator,
        "phi": {
            "type": "object",
            "properties": {"gamma": _number, "delta": {"type": "number", "minimum": 0},
                           "omega": {"type": "number", "minimum": 0}},
            "required": ["gamma"],
            "additionalProperties": False,
        },
        "monomer_inert": {"type": "boolean"},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "family": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["power_law", "becker_doring"]},
                "nu": {"type": "number", "minimum": -1},
                "rates": _rates,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "truncation": {"type": "integer", "minimum": 1},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "initial": {
            "oneOf": [
                {"type": "object", "properties": {
                    "kind": {"const": "basis"}, "index": {"type": "integer", "minimum": 1},
                    "scale": _number}, "required": ["kind", "index"], "additionalProperties": False},
                {"type": "object", "properties": {
                    "kind": {"const": "geometric"},
                    "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    "scale": _number}, "required": ["kind", "ratio"], "additionalProperties": False},
                {"type": "object", "properties": {
                    "kind": {"const": "explicit"},
                    "values": {"type": "array", "items": _number, "minItems": 1}},
                 "required": ["kind", "values"], "additionalProperties": False},
            ]
        },
        "weight": {
            "oneOf": [
                {"type": "object", "properties": {
                    "kind": {"const": "iterative"},
                    "kappa_target": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                 "required": ["kind", "kappa_target"], "additionalProperties": False},
                {"type": "object", "properties": {
                    "kind": {"const": "power"}, "p": {"type": "number", "minimum": 1}},
                 "required": ["kind", "p"], "additionalProperties": False},
                {"type": "object", "properties": {
                    "kind": {"const": "explicit"},
                    "values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}},
                 "required": ["kind", "values"], "additionalProperties": False},
            ]
        },
        "solver": {
            "type": "object",
            "properties": {
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "abs_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_step": {"type": "number", "exclusiveMinimum": 0},
                "min_step": {"type": "number", "exclusiveMinimum": 0},
                "quadrature_points": {"type": "integer", "minimum": 2},
                "method": {"enum": ["adaptive_rk", "voc_recursion", "product_oracle"]},
                "oracle_steps": {"type": "integer", "minimum": 1},
                "oracle_rule": {"enum": ["midpoint", "left"]},
                "max_refinements": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "properties": {"points": {"type": "integer", "minimum": 2}},
            "additionalProperties": False,
        },
        "outputs": {
            "type": "object",
            "properties": {"points": {"type": "integer", "minimum": 2}},
            "additionalProperties": False,
        },
        "matrix": {
            "type": "object",
            "properties": {"s": {"type": "number", "minimum": 0}, "t": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
        "checks": {
            "type": "object",
            "properties": {
                "sigma": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "require_mass_conserving": {"type": "boolean"},
                "random_vectors": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
        "workers": {"type": "integer", "minimum": 1},
    },
    "required": ["schema_version", "family", "truncation", "horizon"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    def __init__(self, message, details=()):
        super().__init__(message)
        self.details = list(details)


@dataclass(frozen=True, eq=False)
class RunConfig:
    raw: dict

    @property
    def N(self):
        return self.raw["truncation"]

    @property
    def horizon(self):
        return float(self.raw["horizon"])

    @property
    def seed(self):
        return self.raw.get("seed", 0)

    @property
    def workers(self):
        return self.raw.get("workers", 1)

    def family(self):
        spec = self.raw["family"]
        rates = build_rates(spec.get("rates", {}))
        if spec["kind"] == "power_law":
            return power_law_family(spec.get("nu", 0.0), rates, self.horizon)
        return becker_doring_family(rates, self.horizon)

    def solver(self):
        return SolverConfig(**self.raw.get("solver", {}), workers=self.workers)

    def grid(self):
        return np.linspace(0.0, self.horizon, self.raw.get("grid", {}).get("points", 11))

    def output_times(self):
        return np.linspace(0.0, self.horizon, self.raw.get("outputs", {}).get("points", 51))

    def checks(self):
        return {"sigma": 1.0, "require_mass_conserving": False, "random_vectors": 1000,
                **self.raw.get("checks", {})}

    def initial(self):
        spec = self.raw.get("initial", {"kind": "geometric", "ratio": 0.5})
        n = np.arange(1, self.N + 1)
        if spec["kind"] == "basis":
            if spec["index"] > self.N:
                raise ConfigError("initial basis index exceeds truncation")
            u = np.zeros(self.N)
            u[spec["index"] - 1] = spec.get("scale", 1.0)
            return u
        if spec["kind"] == "geometric":
            return spec.get("scale", 1.0) * spec["ratio"] ** (n - 1.0)
        values = np.asarray(spec["values"], dtype=float)
        if values.size > self.N:
            raise ConfigError("explicit initial data longer than truncation")
        return np.pad(values, (0, self.N - values.size))

    def weight(self, family):
        """Weight certificate on ``N + 1`` indices so the shifted system fits."""
        spec = self.raw.get("weight", {"kind": "iterative", "kappa_target": 0.5})
        M = self.N + 1
        grid = self.grid()
        if spec["kind"] == "iterative":
            return construct_weight(family, spec["kappa_target"], M, grid)
        if spec["kind"] == "power":
            return certify_kappa(power_weight(spec["p"], M), family, M, grid,
                                 construction={"kind": "power", "p": spec["p"]})
        values = np.asarray(spec["values"], dtype=float)
        if values.size < M:
            raise ConfigError(f"explicit weight needs {M} entries (truncation + 1)")
        return certify_kappa(values[:M], family, M, grid)


def build_rates(spec):
    defaults = AffineRates()
    phi = spec.get("phi")
    try:
        return AffineRates(
            c=Generator.from_dict(spec["c"]) if "c" in spec else defaults.c,
            d=Generator.from_dict(spec["d"]) if "d" in spec else defaults.d,
            phi=SineModulation(**phi) if phi else defaults.phi,
            monomer_inert=spec.get("monomer_inert", True),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def validate(raw):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        details = [{"path": "/".join(map(str, e.path)), "message": e.message} for e in errors]
        raise ConfigError("configuration does not match schema", details)
    cfg = RunConfig(raw)
    fam = raw["family"]
    if fam["kind"] != "power_law" and "nu" in fam:
        raise ConfigError("'nu' applies only to power_law families")
    cfg.family()
    try:
        cfg.solver()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.initial()
    return cfg


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return validate(raw)


