"""JSON file formats for every artifact the toolkit reads or writes.

Matrices are row-major nested lists; tables are flat lists indexed
lexicographically over the support (first listed bit most significant).
Floats are written with ``repr`` precision, so a write/read round trip is
exact and reruns produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .boltzmann import DeepBoltzmannMachine, IsingModel
from .hamcore import ClassicalHamiltonian, ClassicalTerm, LocalHamiltonian, LocalTerm
from .hbm import Hyperedge, HyperBoltzmannMachine, canonical
from .pseq import Factor, PSequence


class SchemaError(ValueError):
    pass


_INTS = {"type": "array", "items": {"type": "integer", "minimum": 0}}
_FLOATS = {"type": "array", "items": {"type": "number"}}
_MATRIX = {"type": "array", "items": _FLOATS}

SCHEMAS = {
    "hamiltonian": {
        "type": "object",
        "required": ["n", "kind", "terms"],
        "properties": {
            "n": {"type": "integer", "minimum": 0},
            "kind": {"enum": ["quantum", "classical"]},
            "terms": {"type": "array", "items": {
                "type": "object",
                "required": ["support"],
                "properties": {"support": _INTS, "matrix": _MATRIX, "table": _FLOATS},
            }},
        },
    },
    "psequence": {
        "type": "object",
        "required": ["n", "alpha", "factors"],
        "properties": {
            "n": {"type": "integer", "minimum": 0},
            "alpha": {"type": "number", "exclusiveMinimum": 0},
            "meta": {"type": "object"},
            "factors": {"type": "array", "items": {
                "type": "object", "required": ["support", "matrix"],
                "properties": {"support": _INTS, "matrix": _MATRIX},
            }},
        },
    },
    "hbm": {
        "type": "object",
        "required": ["n", "m", "hyperedges", "node_roles"],
        "properties": {
            "n": {"type": "integer", "minimum": 0},
            "m": {"type": "integer", "minimum": 0},
            "copies": {"type": "integer", "minimum": 1},
            "node_roles": {"type": "array", "items": {"enum": ["visible", "hidden"]}},
            "hyperedges": {"type": "array", "items": {
                "type": "object", "required": ["nodes", "table"],
                "properties": {"nodes": _INTS, "table": _FLOATS, "n_out": {"type": "integer", "minimum": 0}},
            }},
        },
    },
    "dbm": {
        "type": "object",
        "required": ["a", "b", "c", "W", "U"],
        "properties": {"a": _FLOATS, "b": _FLOATS, "c": _FLOATS, "W": _MATRIX, "U": _MATRIX},
    },
    "ising": {
        "type": "object",
        "required": ["fields", "edges", "hidden_spins"],
        "properties": {
            "fields": _FLOATS,
            "edges": {"type": "array", "items": {"type": "array", "minItems": 3, "maxItems": 3}},
            "hidden_spins": _INTS,
            "offset": {"type": "number"},
        },
    },
}


def validate(kind: str, data: dict):
    try:
        jsonschema.validate(data, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{kind}: {exc.message}") from exc


def detect_kind(data: dict) -> str:
    if "kind" in data and "terms" in data:
        return "hamiltonian"
    if "factors" in data:
        return "psequence"
    if "hyperedges" in data:
        return "hbm"
    if "fields" in data:
        return "ising"
    if {"a", "b", "c", "W", "U"} <= set(data):
        return "dbm"
    if "final_metric" in data:
        return "report"
    raise SchemaError("unrecognised artifact")


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def _matrix(a) -> list:
    return [[float(v) for v in row] for row in np.asarray(a, dtype=float)]


# --- Hamiltonians ------------------------------------------------------------------

def hamiltonian_to_dict(h) -> dict:
    if isinstance(h, LocalHamiltonian):
        terms = [{"support": list(t.support), "matrix": _matrix(t.matrix)} for t in h.terms]
        return {"n": h.n, "kind": "quantum", "terms": terms}
    terms = [{"support": list(t.support), "table": _floats(t.table)} for t in h.terms]
    return {"n": h.n, "kind": "classical", "terms": terms}


def hamiltonian_from_dict(data: dict):
    validate("hamiltonian", data)
    try:
        if data["kind"] == "quantum":
            return LocalHamiltonian(data["n"], tuple(LocalTerm(tuple(t["support"]), np.array(t["matrix"], dtype=float))
                                                     for t in data["terms"]))
        return ClassicalHamiltonian(data["n"], tuple(ClassicalTerm(tuple(t["support"]), t["table"])
                                                     for t in data["terms"]))
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"hamiltonian: {exc}") from exc


# --- P-sequences -------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else None
    return v


def psequence_to_dict(p: PSequence) -> dict:
    return {"n": p.n, "alpha": float(p.alpha), "meta": _jsonable(p.meta),
            "factors": [{"support": list(f.support), "matrix": _matrix(f.matrix)} for f in p.factors]}


def psequence_from_dict(data: dict) -> PSequence:
    validate("psequence", data)
    factors = []
    for f in data["factors"]:
        m = np.array(f["matrix"], dtype=float)
        if m.shape != (2 ** len(f["support"]),) * 2:
            raise SchemaError("psequence: factor matrix does not match its support")
        if any(q >= data["n"] for q in f["support"]):
            raise SchemaError("psequence: support out of range")
        factors.append(Factor(tuple(f["support"]), m))
    return PSequence(data["n"], factors, data["alpha"], dict(data.get("meta", {})))


# --- HBMs ---------------------------------------------------------------------------

def hbm_to_dict(hbm: HyperBoltzmannMachine) -> dict:
    hbm = canonical(hbm)
    edges = []
    for e in hbm.hyperedges:
        entry = {"nodes": list(e.nodes), "table": _floats(e.table)}
        if e.n_out:
            entry["n_out"] = e.n_out
        edges.append(entry)
    return {"n": hbm.n, "m": hbm.m, "copies": hbm.copies, "hyperedges": edges,
            "node_roles": ["visible"] * hbm.n + ["hidden"] * hbm.m}


def hbm_from_dict(data: dict) -> HyperBoltzmannMachine:
    validate("hbm", data)
    roles = data["node_roles"]
    visible = [i for i, r in enumerate(roles) if r == "visible"]
    hidden = [i for i, r in enumerate(roles) if r == "hidden"]
    if len(visible) != data["n"] or len(hidden) != data["m"]:
        raise SchemaError("hbm: node_roles disagree with n and m")
    try:
        edges = tuple(Hyperedge(tuple(e["nodes"]), e["table"], e.get("n_out", 0)) for e in data["hyperedges"])
        return HyperBoltzmannMachine(tuple(visible), tuple(hidden), edges, data.get("copies", 1))
    except ValueError as exc:
        raise SchemaError(f"hbm: {exc}") from exc


# --- DBMs and Ising models ----------------------------------------------------------

def dbm_to_dict(dbm: DeepBoltzmannMachine) -> dict:
    return {"a": _floats(dbm.a), "b": _floats(dbm.b), "c": _floats(dbm.c),
            "W": _matrix(dbm.W), "U": _matrix(dbm.U)}


def dbm_from_dict(data: dict) -> DeepBoltzmannMachine:
    validate("dbm", data)
    n, p, q = len(data["a"]), len(data["b"]), len(data["c"])
    W = np.array(data["W"], dtype=float).reshape(-1)
    U = np.array(data["U"], dtype=float).reshape(-1)
    if W.size != n * p or U.size != p * q:
        raise SchemaError("dbm: weight matrix shapes disagree with the bias vectors")
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(U))):
        raise SchemaError("dbm: non-finite weights")
    return DeepBoltzmannMachine(data["a"], data["b"], data["c"], W.reshape(n, p), U.reshape(p, q))


def ising_to_dict(model: IsingModel) -> dict:
    return {"fields": _floats(model.fields), "edges": [[i, j, float(w)] for i, j, w in model.edges],
            "hidden_spins": [int(s) for s in model.hidden_spins], "offset": float(model.offset)}


def ising_from_dict(data: dict) -> IsingModel:
    validate("ising", data)
    return IsingModel(data["fields"], [tuple(e) for e in data["edges"]], data["hidden_spins"], data.get("offset", 0.0))


# --- files --------------------------------------------------------------------------

_WRITERS = {
    LocalHamiltonian: hamiltonian_to_dict,
    ClassicalHamiltonian: hamiltonian_to_dict,
    PSequence: psequence_to_dict,
    HyperBoltzmannMachine: hbm_to_dict,
    DeepBoltzmannMachine: dbm_to_dict,
    IsingModel: ising_to_dict,
}

_READERS = {
    "hamiltonian": hamiltonian_from_dict,
    "psequence": psequence_from_dict,
    "hbm": hbm_from_dict,
    "dbm": dbm_from_dict,
    "ising": ising_from_dict,
}


def dumps(data) -> str:
    return json.dumps(_jsonable(data), indent=1) + "\n"


def write_json(path, data):
    Path(path).write_text(dumps(data))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def save(obj, path):
    write_json(path, _WRITERS[type(obj)](obj))


def load(path, kind: str = None):
    data = read_json(path)
    kind = kind or detect_kind(data)
    if kind not in _READERS:
        raise SchemaError(f"{path}: cannot load a {kind} artifact as an object")
    return _READERS[kind](data)
