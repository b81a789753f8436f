"""JSON encoding of operators, noise specifications, codes and analysis results.

Operators are ``{"dim": N, "re": [[...]], "im": [[...]]}``, a Pauli string
``{"pauli": "XIZ", "coeff": [re, im]}``, or ``{"sum": [op, ...]}``.
Code isometries are flattened column-major as ``[[re, im], ...]``.
"""

from __future__ import annotations

import math
from typing import Any

import jsonschema
import numpy as np

from graded_qec.algebra import ChannelFamily, DiscreteSpec, InteractionSpec, MarkovSpec, NoiseSpec, complete_drift
from graded_qec.codes import Code
from graded_qec.operators import pauli_to_operator
from graded_qec.search import PartitionCertificate, SearchReport
from graded_qec.structure import AlgebraDecomposition, NoiselessSubsystem

_COMPLEX_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

OPERATOR_SCHEMA: dict = {
    "$id": "operator.schema.json",
    "title": "Operator",
    "oneOf": [
        {
            "type": "object",
            "required": ["dim", "re", "im"],
            "properties": {"dim": {"type": "integer", "minimum": 1}, "re": _MATRIX, "im": _MATRIX},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["pauli"],
            "properties": {"pauli": {"type": "string", "pattern": "^[IXYZ]+$"}, "coeff": _COMPLEX_PAIR},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["sum"],
            "properties": {"sum": {"type": "array", "items": {"$ref": "#"}, "minItems": 1}},
            "additionalProperties": False,
        },
    ],
}

_VECTOR = {
    "type": "object",
    "required": ["re", "im"],
    "properties": {
        "re": {"type": "array", "items": {"type": "number"}},
        "im": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}

SPEC_SCHEMA: dict = {
    "$id": "spec.schema.json",
    "title": "NoiseSpec",
    "definitions": {"operator": OPERATOR_SCHEMA, "vector": _VECTOR},
    "oneOf": [
        {
            "type": "object",
            "required": ["kind", "system_dim", "env_dim", "couplings"],
            "properties": {
                "kind": {"const": "hamiltonian"},
                "name": {"type": "string"},
                "system_dim": {"type": "integer", "minimum": 1},
                "env_dim": {"type": "integer", "minimum": 1},
                "couplings": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["system", "env"],
                        "properties": {
                            "system": {"$ref": "#/definitions/operator"},
                            "env": {"$ref": "#/definitions/operator"},
                        },
                        "additionalProperties": False,
                    },
                },
                "env_hamiltonian": {"$ref": "#/definitions/operator"},
                "env_initial_state": {"$ref": "#/definitions/vector"},
            },
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["kind", "lindblad_ops"],
            "properties": {
                "kind": {"const": "markov"},
                "name": {"type": "string"},
                "lindblad_ops": {"type": "array", "minItems": 1, "items": {"$ref": "#/definitions/operator"}},
                "drift": {"$ref": "#/definitions/operator"},
                "hamiltonian": {"$ref": "#/definitions/operator"},
            },
            "not": {"required": ["drift", "hamiltonian"]},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["kind", "operations"],
            "properties": {
                "kind": {"const": "discrete"},
                "name": {"type": "string"},
                "operations": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["v", "kraus_tail"],
                        "properties": {
                            "v": {"$ref": "#/definitions/operator"},
                            "kraus_tail": {"type": "array", "items": {"$ref": "#/definitions/operator"}},
                        },
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
    ],
}

CODE_SCHEMA: dict = {
    "$id": "code.schema.json",
    "title": "Code",
    "type": "object",
    "required": ["system_dim", "logical_dim", "isometry"],
    "properties": {
        "name": {"type": "string"},
        "system_dim": {"type": "integer", "minimum": 1},
        "logical_dim": {"type": "integer", "minimum": 1},
        "isometry": {"type": "array", "items": _COMPLEX_PAIR},
        "transmission_basis": {"oneOf": [{"type": "null"}, {"type": "array", "items": _COMPLEX_PAIR}]},
    },
    "additionalProperties": False,
}

SCHEMAS = {"operator": OPERATOR_SCHEMA, "spec": SPEC_SCHEMA, "code": CODE_SCHEMA}


class FormatError(ValueError):
    """Malformed input document."""


def _validate(doc: Any, schema: dict, what: str) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise FormatError(f"invalid {what}: {exc.message}") from exc


def _pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def operator_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def operator_from_json(doc: dict) -> np.ndarray:
    _validate(doc, OPERATOR_SCHEMA, "operator")
    return _operator(doc)


def _operator(doc: dict) -> np.ndarray:
    if "sum" in doc:
        terms = [_operator(t) for t in doc["sum"]]
        if len({t.shape for t in terms}) != 1:
            raise FormatError("summands have different dimensions")
        return sum(terms)
    if "pauli" in doc:
        re, im = doc.get("coeff", [1.0, 0.0])
        return pauli_to_operator(doc["pauli"], complex(re, im))
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc["im"], dtype=float)
    n = doc["dim"]
    if re.shape != (n, n) or im.shape != (n, n):
        raise FormatError(f"operator arrays must be {n}x{n}")
    return re + 1j * im


def _vector_to_json(v: np.ndarray) -> dict:
    v = np.asarray(v, dtype=complex)
    return {"re": v.real.tolist(), "im": v.imag.tolist()}


def _vector(doc: dict) -> np.ndarray:
    re, im = np.asarray(doc["re"], dtype=float), np.asarray(doc["im"], dtype=float)
    if re.shape != im.shape:
        raise FormatError("vector re/im lengths differ")
    return re + 1j * im


def spec_to_json(spec: NoiseSpec) -> dict:
    if isinstance(spec, InteractionSpec):
        doc = {
            "kind": "hamiltonian",
            "name": spec.name,
            "system_dim": spec.system_dim,
            "env_dim": spec.env_dim,
            "couplings": [{"system": operator_to_json(j), "env": operator_to_json(b)} for j, b in spec.couplings],
        }
        if spec.env_hamiltonian is not None:
            doc["env_hamiltonian"] = operator_to_json(spec.env_hamiltonian)
        if spec.env_initial_state is not None:
            doc["env_initial_state"] = _vector_to_json(spec.env_initial_state)
        return doc
    if isinstance(spec, MarkovSpec):
        return {
            "kind": "markov",
            "name": spec.name,
            "lindblad_ops": [operator_to_json(op) for op in spec.lindblad_ops],
            "drift": operator_to_json(spec.drift),
        }
    if isinstance(spec, DiscreteSpec):
        return {
            "kind": "discrete",
            "name": spec.name,
            "operations": [
                {"v": operator_to_json(f.v), "kraus_tail": [operator_to_json(k) for k in f.kraus_tail]}
                for f in spec.operations
            ],
        }
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


def spec_from_json(doc: dict, validate: bool = True) -> NoiseSpec:
    """Parse and (unless ``validate`` is false) validate a noise specification.

    A Markov document may give ``hamiltonian`` instead of ``drift``; the
    drift is then completed to a trace-preserving generator.
    """
    _validate(doc, SPEC_SCHEMA, "spec")
    name = doc.get("name", "")
    kind = doc["kind"]
    if kind == "hamiltonian":
        spec = InteractionSpec(
            doc["system_dim"],
            [(_operator(c["system"]), _operator(c["env"])) for c in doc["couplings"]],
            doc["env_dim"],
            env_hamiltonian=_operator(doc["env_hamiltonian"]) if "env_hamiltonian" in doc else None,
            env_initial_state=_vector(doc["env_initial_state"]) if "env_initial_state" in doc else None,
            name=name,
        )
    elif kind == "markov":
        ops = [_operator(o) for o in doc["lindblad_ops"]]
        if "drift" in doc:
            drift = _operator(doc["drift"])
        else:
            drift = complete_drift(ops, _operator(doc["hamiltonian"]) if "hamiltonian" in doc else None)
        spec = MarkovSpec(ops, drift, name=name)
    else:
        fams = [ChannelFamily(_operator(o["v"]), [_operator(k) for k in o["kraus_tail"]]) for o in doc["operations"]]
        spec = DiscreteSpec(fams, name=name)
    if validate:
        spec.validate()
    return spec


def _column_major(m: np.ndarray) -> list[list[float]]:
    return [_pair(z) for z in np.asarray(m).reshape(-1, order="F")]


def _from_column_major(pairs: list, rows: int, cols: int) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (rows * cols, 2):
        raise FormatError(f"expected {rows * cols} complex entries, got {arr.shape[0]}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape((rows, cols), order="F")


def code_to_json(code: Code) -> dict:
    return {
        "name": code.name,
        "system_dim": code.system_dim,
        "logical_dim": code.logical_dim,
        "isometry": _column_major(code.isometry),
        "transmission_basis": None if code.transmission_basis is None else _column_major(code.transmission_basis),
    }


def code_from_json(doc: dict) -> Code:
    _validate(doc, CODE_SCHEMA, "code")
    n, k = doc["system_dim"], doc["logical_dim"]
    basis = doc.get("transmission_basis")
    try:
        return Code(
            _from_column_major(doc["isometry"], n, k),
            transmission_basis=None if basis is None else _from_column_major(basis, n, k),
            name=doc.get("name", ""),
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def decomposition_to_json(dec: AlgebraDecomposition, subsystems: list[NoiselessSubsystem] | None = None) -> dict:
    doc = {
        "ambient_dim": dec.ambient_dim,
        "seed": dec.seed,
        "residual": dec.residual,
        "algebra_dim": dec.algebra_dim,
        "commutant_dim": dec.commutant_dim,
        "blocks": [
            {"d_c": b.d_c, "d_z": b.d_z, "isometry": _column_major(b.isometry)} for b in dec.blocks
        ],
    }
    if subsystems is not None:
        doc["noiseless_subsystems"] = [
            {"block": s.block_index, "d_c": s.d_c, "d_z": s.d_z, "is_subspace": s.is_subspace} for s in subsystems
        ]
    return doc


def certificate_to_json(cert: PartitionCertificate | None) -> dict | None:
    if cert is None:
        return None
    return {
        "subsets": [list(s) for s in cert.subsets],
        "gamma": np.asarray(cert.gamma, dtype=float).tolist(),
        "weights": [np.asarray(w, dtype=float).tolist() for w in cert.weights],
        "residual": cert.residual,
    }


def search_report_to_json(report: SearchReport) -> dict:
    return {
        "status": report.status,
        "code": None if report.code is None else code_to_json(report.code),
        "certificate": certificate_to_json(report.certificate),
        "bound_report": report.bound_report(),
        "c_code_dim": report.c_code_dim,
        **({"extra": report.extra} if report.extra else {}),
    }


def json_number(x: float) -> float | str:
    """Finite floats pass through; infinities become ``"inf"`` so output stays strict JSON."""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x
