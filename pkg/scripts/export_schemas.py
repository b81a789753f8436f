"""Write the JSON schemas and a few example input documents under specs/."""

import argparse
import json
from pathlib import Path

from graded_qec import fixtures
from graded_qec.serialize import SCHEMAS, code_to_json, spec_to_json

EXAMPLE_SPECS = {
    "dephasing-qubit": fixtures.dephasing_qubit_spec,
    "three-qubit-collective": lambda: fixtures.collective_spec(3),
    "amplitude-damping": fixtures.amplitude_damping_spec,
    "bit-flip": fixtures.bit_flip_spec,
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "specs")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, schema in SCHEMAS.items():
        (args.out / f"{name}.schema.json").write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n")
    examples = args.out / "examples"
    examples.mkdir(exist_ok=True)
    for name, make in EXAMPLE_SPECS.items():
        (examples / f"{name}.json").write_text(json.dumps(spec_to_json(make()), indent=2) + "\n")
    (examples / "five-qubit-code.json").write_text(json.dumps(code_to_json(fixtures.five_qubit_code())) + "\n")
    pauli_doc = {
        "kind": "hamiltonian",
        "name": "two-qubit-zz-pauli-form",
        "system_dim": 4,
        "env_dim": 2,
        "couplings": [
            {"system": {"sum": [{"pauli": "ZI"}, {"pauli": "IZ"}]}, "env": {"pauli": "X", "coeff": [0.5, 0.0]}}
        ],
    }
    (examples / "collective-dephasing-pauli.json").write_text(json.dumps(pauli_doc, indent=2) + "\n")
    print(f"wrote schemas and examples to {args.out}")


if __name__ == "__main__":
    main()
