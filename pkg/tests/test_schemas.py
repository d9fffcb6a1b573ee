"""CLI JSON outputs validate against the published schemas in schemas/.

A minimal structural checker covers the subset of JSON Schema the published
documents use (type, required, additionalProperties, enum/const, numeric
bounds, items, oneOf); no third-party validator is needed.
"""

import json
import os

import pytest

from modalbridge.cli import main

SCHEMA_DIR = os.path.join(os.path.dirname(__file__), "..", "schemas")

MODEL = {"H": 0.3, "rho": 0.5, "x0": 0.0, "y0": 0.0, "T": 0.5,
         "h1": "0.2", "h2": "-0.1"}


def check(instance, schema, where="$"):
    if "const" in schema:
        assert instance == schema["const"], f"{where}: expected {schema['const']}"
        return
    if "oneOf" in schema:
        for sub in schema["oneOf"]:
            try:
                check(instance, sub, where)
                return
            except AssertionError:
                continue
        raise AssertionError(f"{where}: no oneOf branch matched {instance!r}")
    if "enum" in schema:
        assert instance in schema["enum"], f"{where}: {instance!r} not in enum"
        return
    kind = schema.get("type")
    if kind == "object":
        assert isinstance(instance, dict), f"{where}: expected object"
        for key in schema.get("required", ()):
            assert key in instance, f"{where}: missing {key}"
        props = schema.get("properties", {})
        if schema.get("additionalProperties") is False:
            extra = set(instance) - set(props)
            assert not extra, f"{where}: unexpected keys {sorted(extra)}"
        for key, sub in props.items():
            if key in instance:
                check(instance[key], sub, f"{where}.{key}")
    elif kind == "array":
        assert isinstance(instance, list), f"{where}: expected array"
        if "minItems" in schema:
            assert len(instance) >= schema["minItems"], f"{where}: too few items"
        if "maxItems" in schema:
            assert len(instance) <= schema["maxItems"], f"{where}: too many items"
        for i, item in enumerate(instance):
            check(item, schema["items"], f"{where}[{i}]")
    elif kind == "number":
        assert isinstance(instance, (int, float)) and not isinstance(instance, bool)
        if "minimum" in schema:
            assert instance >= schema["minimum"], f"{where}: below minimum"
        if "exclusiveMinimum" in schema:
            assert instance > schema["exclusiveMinimum"], f"{where}: not above bound"
    elif kind == "integer":
        assert isinstance(instance, int) and not isinstance(instance, bool)
        if "minimum" in schema:
            assert instance >= schema["minimum"]
        if "maximum" in schema:
            assert instance <= schema["maximum"]
    elif kind == "boolean":
        assert isinstance(instance, bool), f"{where}: expected boolean"
    elif kind == "string":
        assert isinstance(instance, str), f"{where}: expected string"


def load_schema(name):
    with open(os.path.join(SCHEMA_DIR, name), "r", encoding="utf-8") as fh:
        return json.load(fh)


def run_to_json(tmp_path, args, filename):
    out = str(tmp_path / "out")
    assert main([*args, "--out", out]) == 0
    with open(os.path.join(out, filename), "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_density_output_schema(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": MODEL,
                               "density": {"n": 64,
                                           "endpoints": [[0.1, 0.2], [0.0, 0.0]]}}))
    payload = run_to_json(tmp_path, ["density", "--config", str(cfg)], "density.json")
    check(payload, load_schema("density.schema.json"))


def test_simulate_output_schema(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "model": MODEL,
        "simulate": {"n_paths": 500, "n_steps": 8, "point": [0.0, 0.0],
                     "estimator": {"type": "bin", "width_x": 0.2, "width_y": 0.2}},
    }))
    payload = run_to_json(tmp_path, ["simulate", "--config", str(cfg), "--seed", "1"],
                          "simulate.json")
    check(payload, load_schema("simulate.schema.json"))


def test_bridge_mc_output_schema(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "model": MODEL,
        "bridge_mc": {"n_paths": 400, "n_steps": 8, "endpoint": [0.1, 0.0]},
    }))
    payload = run_to_json(tmp_path, ["bridge-mc", "--config", str(cfg), "--seed", "1"],
                          "bridge_mc.json")
    check(payload, load_schema("bridge_mc.schema.json"))


def test_validation_output_schema(tmp_path):
    payload = run_to_json(tmp_path, ["validate", "--quick"], "validation.json")
    check(payload, load_schema("validation.schema.json"))
