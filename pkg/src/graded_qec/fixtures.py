"""Named test systems: standard codes, interaction models and the three-qubit example.

The codes here are external test vectors (stabilizer constructions); nothing
in the library uses them as defaults.
"""

from __future__ import annotations

import numpy as np

from graded_qec.algebra import (
    ChannelFamily,
    DiscreteSpec,
    InteractionSpec,
    MarkovSpec,
    collective_operator,
    complete_drift,
)
from graded_qec.codes import Code
from graded_qec.config import DEFAULT_SEED
from graded_qec.operators import PAULI, pauli_to_operator, single_qubit_pauli

FIVE_QUBIT_STABILIZERS = ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")


def stabilizer_code(generators: tuple[str, ...] | list[str], logical_x: str | None = None, name: str = "") -> Code:
    """Code space of commuting Pauli generators (one logical qubit when ``logical_x`` is given).

    Codewords are ``P|0...0>`` normalised and, if ``logical_x`` is given,
    ``X_L`` applied to it.
    """
    n_qubits = len(generators[0])
    n = 2**n_qubits
    proj = np.eye(n, dtype=complex)
    for g in generators:
        proj = proj @ (np.eye(n) + pauli_to_operator(g)) / 2
    if logical_x is None:
        w, v = np.linalg.eigh((proj + proj.conj().T) / 2)
        return Code(v[:, w > 0.5], name=name)
    zero = proj[:, 0] / np.linalg.norm(proj[:, 0])
    one = pauli_to_operator(logical_x) @ zero
    return Code(np.stack([zero, one], axis=1), name=name)


def five_qubit_code() -> Code:
    return stabilizer_code(FIVE_QUBIT_STABILIZERS, "XXXXX", name="[[5,1,3]]")


def repetition_code(n_qubits: int = 3) -> Code:
    v = np.zeros((2**n_qubits, 2), dtype=complex)
    v[0, 0] = 1.0
    v[-1, 1] = 1.0
    return Code(v, transmission_basis=v, name=f"repetition-{n_qubits}")


def singlet_pair_code() -> Code:
    """Two-qubit code ``span{|01>, |10>}``: the zero-magnetisation sector."""
    v = np.zeros((4, 2), dtype=complex)
    v[1, 0] = 1.0
    v[2, 1] = 1.0
    return Code(v, transmission_basis=v, name="two-qubit-m0")


def scalar_invariants_three_qubit() -> tuple[np.ndarray, np.ndarray]:
    """Rotation scalars ``s1 = sigma^A . sigma^B`` and ``s2 = sigma^A . sigma^C``."""
    s1 = sum(pauli_to_operator(u + u + "I") for u in "XYZ")
    s2 = sum(pauli_to_operator(u + "I" + u) for u in "XYZ")
    return s1, s2


def _random_traceless_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (g + g.conj().T) / 2
    return h - np.trace(h) / n * np.eye(n)


def dephasing_qubit_spec(g: float = 1.0) -> InteractionSpec:
    """One qubit coupled by ``g sigma_z (x) sigma_x`` to a one-qubit environment."""
    return InteractionSpec(2, [(g * PAULI["Z"], PAULI["X"])], 2, name="dephasing-qubit")


def collective_spec(n_qubits: int, env_qubits: int = 1, seed: int = DEFAULT_SEED) -> InteractionSpec:
    """Collective coupling ``sum_u J_u (x) B_u`` with seeded random Hermitian ``B_u``."""
    rng = np.random.default_rng(seed)
    env_dim = 2**env_qubits
    couplings = [
        (collective_operator(n_qubits, u), _random_traceless_hermitian(env_dim, rng) / np.sqrt(env_dim))
        for u in "XYZ"
    ]
    return InteractionSpec(2**n_qubits, couplings, env_dim, name=f"collective-{n_qubits}")


def linear_one_qubit_env_spec(n_qubits: int = 5, seed: int = DEFAULT_SEED) -> InteractionSpec:
    """Linear coupling to a single environment qubit.

    ``J = sum_u (sum_k c_{k,u} sigma_u^(k)) (x) sigma_u`` with seeded random
    real weights, so the ``B_u = sigma_u`` are independent and every ``J_u``
    is a combination of one-qubit Paulis.
    """
    rng = np.random.default_rng(seed)
    couplings = []
    for u in "XYZ":
        weights = rng.normal(size=n_qubits)
        j = sum(w * single_qubit_pauli(n_qubits, k, u) for k, w in enumerate(weights))
        couplings.append((j, PAULI[u]))
    return InteractionSpec(2**n_qubits, couplings, 2, name=f"linear-{n_qubits}-env1")


def zero_coupling_spec(n_qubits: int = 2) -> InteractionSpec:
    n = 2**n_qubits
    return InteractionSpec(n, [(np.zeros((n, n)), PAULI["Z"])], 2, name="zero-coupling")


def amplitude_damping_spec(gamma: float = 1.0) -> MarkovSpec:
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    ops = [np.sqrt(gamma) * lower]
    return MarkovSpec(ops, complete_drift(ops), name="amplitude-damping")


def collective_lindblad_spec(n_qubits: int = 3, gamma: float = 1.0) -> MarkovSpec:
    ops = [np.sqrt(gamma) * collective_operator(n_qubits, u) for u in "XYZ"]
    return MarkovSpec(ops, complete_drift(ops), name=f"collective-lindblad-{n_qubits}")


def collective_dephasing_lindblad_spec(n_qubits: int = 2, gamma: float = 1.0) -> MarkovSpec:
    ops = [np.sqrt(gamma) * collective_operator(n_qubits, "Z")]
    return MarkovSpec(ops, complete_drift(ops), name=f"collective-dephasing-{n_qubits}")


def bit_flip_family(p: float, n_qubits: int = 1, qubit: int = 0) -> ChannelFamily:
    n = 2**n_qubits
    v = (np.sqrt(1 - p) - 1) * np.eye(n)
    return ChannelFamily(v, [np.sqrt(p) * single_qubit_pauli(n_qubits, qubit, "X")])


def bit_flip_spec(p: float = 0.01) -> DiscreteSpec:
    return DiscreteSpec([bit_flip_family(p)], name="bit-flip")


def independent_bit_flip_spec(p: float = 0.01, n_qubits: int = 2) -> DiscreteSpec:
    return DiscreteSpec(
        [bit_flip_family(p, n_qubits, k) for k in range(n_qubits)], name=f"independent-bit-flip-{n_qubits}"
    )


BUILTIN_SPECS = {
    "three-qubit-collective": lambda: collective_spec(3),
    "dephasing-qubit": dephasing_qubit_spec,
    "five-qubit-linear-env1": linear_one_qubit_env_spec,
    "zero-coupling": zero_coupling_spec,
    "amplitude-damping": amplitude_damping_spec,
    "collective-lindblad-3": collective_lindblad_spec,
    "bit-flip": bit_flip_spec,
    "independent-bit-flip-2": independent_bit_flip_spec,
}

BUILTIN_CODES = {
    "five-qubit": five_qubit_code,
    "repetition-3": repetition_code,
    "full-space-2": lambda: Code.full_space(2),
}
