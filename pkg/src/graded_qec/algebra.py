"""Interaction specifications, the graded interaction algebra and noise strengths.

Three noise descriptions are supported:

* :class:`InteractionSpec` -- system-environment Hamiltonian ``J = sum_i J_i (x) B_i``
  plus an optional environment Hamiltonian,
* :class:`MarkovSpec` -- Lindblad operators ``L_i`` and drift ``V``,
* :class:`DiscreteSpec` -- a sequence of channels ``(I+V_i) . (I+V_i)^dagger + sum_j L_ij . L_ij^dagger``.

Each yields a degree-one space ``J_1`` (always containing the identity and
closed under adjoints) and a noise strength ``lambda``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from graded_qec.config import tolerances
from graded_qec.operators import (
    OperatorSpace,
    as_operator,
    contains,
    dagger,
    dagger_closure,
    op_norm,
    pauli_to_operator,
    single_qubit_pauli,
    space_product,
    span,
    union,
)


class SpecError(ValueError):
    """An interaction/noise specification violates its invariants."""


@dataclass
class InteractionSpec:
    system_dim: int
    couplings: list[tuple[np.ndarray, np.ndarray]]
    env_dim: int
    env_hamiltonian: np.ndarray | None = None
    env_initial_state: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.couplings = [
            (as_operator(j, self.system_dim), as_operator(b, self.env_dim)) for j, b in self.couplings
        ]
        if self.env_hamiltonian is not None:
            self.env_hamiltonian = as_operator(self.env_hamiltonian, self.env_dim)
        if self.env_initial_state is not None:
            psi = np.asarray(self.env_initial_state, dtype=complex).reshape(-1)
            if psi.shape != (self.env_dim,):
                raise SpecError(f"env_initial_state has length {psi.size}, expected {self.env_dim}")
            self.env_initial_state = psi / np.linalg.norm(psi)

    def validate(self) -> None:
        tol = tolerances()
        for i, (j, _) in enumerate(self.couplings):
            scale = self.system_dim * max(1.0, float(np.max(np.abs(j))) if j.size else 1.0)
            if abs(np.trace(j)) > tol.traceless * scale:
                raise SpecError(
                    f"coupling {i}: tr(J_i) = {np.trace(j):.3g} is not zero; "
                    "use project_traceless() to move it into the internal evolution"
                )
        if self.couplings:
            bs = np.stack([b.reshape(-1) for _, b in self.couplings])
            s = np.linalg.svd(bs, compute_uv=False)
            if s[0] == 0 or np.sum(s > tol.rank_rel * s[0]) < len(self.couplings):
                raise SpecError("environment operators B_i are linearly dependent")
        jt = self.interaction()
        if np.linalg.norm(jt - dagger(jt)) > tol.contains * (1.0 + np.linalg.norm(jt)):
            raise SpecError("interaction Hamiltonian sum_i J_i (x) B_i is not Hermitian")

    def interaction(self) -> np.ndarray:
        """``J = sum_i J_i (x) B_i`` on the joint (system (x) environment) space."""
        n = self.system_dim * self.env_dim
        out = np.zeros((n, n), dtype=complex)
        for j, b in self.couplings:
            out += np.kron(j, b)
        return out

    def joint_hamiltonian(self, env_hamiltonian: np.ndarray | None = None) -> np.ndarray:
        hb = self.env_hamiltonian if env_hamiltonian is None else as_operator(env_hamiltonian, self.env_dim)
        h = self.interaction()
        if hb is not None:
            h = h + np.kron(np.eye(self.system_dim), hb)
        return h

    def project_traceless(self) -> tuple[InteractionSpec, list[complex]]:
        """Subtract ``tr(J_i)/N`` from each ``J_i``; return the new spec and the shifts."""
        shifts = [complex(np.trace(j)) / self.system_dim for j, _ in self.couplings]
        couplings = [(j - s * np.eye(self.system_dim), b) for (j, b), s in zip(self.couplings, shifts)]
        spec = InteractionSpec(
            self.system_dim, couplings, self.env_dim, self.env_hamiltonian, self.env_initial_state, self.name
        )
        return spec, shifts


@dataclass
class MarkovSpec:
    lindblad_ops: list[np.ndarray]
    drift: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.drift = as_operator(self.drift)
        self.lindblad_ops = [as_operator(op, self.dim) for op in self.lindblad_ops]

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    def trace_defect(self) -> float:
        """``||V + V^dagger + sum_i L_i^dagger L_i||``; zero for a trace-preserving generator."""
        m = self.drift + dagger(self.drift)
        for op in self.lindblad_ops:
            m = m + dagger(op) @ op
        return float(np.linalg.norm(m))

    def validate(self) -> None:
        if self.trace_defect() > tolerances().trace_preservation:
            raise SpecError(
                f"generator is not trace preserving (defect {self.trace_defect():.3g}); "
                "see complete_drift()"
            )


def complete_drift(lindblad_ops: Sequence[np.ndarray], hamiltonian: np.ndarray | None = None) -> np.ndarray:
    """Drift ``V = -iH - (1/2) sum L^dagger L`` making the generator trace preserving."""
    ops = [as_operator(op) for op in lindblad_ops]
    if not ops and hamiltonian is None:
        raise ValueError("need at least one operator to infer the dimension")
    n = ops[0].shape[0] if ops else as_operator(hamiltonian).shape[0]
    v = np.zeros((n, n), dtype=complex)
    if hamiltonian is not None:
        v = v - 1j * as_operator(hamiltonian, n)
    for op in ops:
        v = v - 0.5 * dagger(op) @ op
    return v


@dataclass
class ChannelFamily:
    """One operation ``rho -> (I+V) rho (I+V)^dagger + sum_j L_j rho L_j^dagger``."""

    v: np.ndarray
    kraus_tail: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.v = as_operator(self.v)
        self.kraus_tail = [as_operator(op, self.v.shape[0]) for op in self.kraus_tail]

    def kraus(self) -> list[np.ndarray]:
        return [np.eye(self.v.shape[0]) + self.v, *self.kraus_tail]

    def completeness_defect(self) -> float:
        m = sum(dagger(k) @ k for k in self.kraus())
        return float(np.linalg.norm(m - np.eye(self.v.shape[0])))


@dataclass
class DiscreteSpec:
    operations: list[ChannelFamily]
    name: str = ""

    @property
    def dim(self) -> int:
        return self.operations[0].v.shape[0]

    def validate(self) -> None:
        if not self.operations:
            raise SpecError("discrete spec has no operations")
        for i, fam in enumerate(self.operations):
            if fam.v.shape[0] != self.dim:
                raise SpecError(f"operation {i} acts on dimension {fam.v.shape[0]}, expected {self.dim}")
            if fam.completeness_defect() > tolerances().trace_preservation:
                raise SpecError(f"operation {i} is not trace preserving (defect {fam.completeness_defect():.3g})")


NoiseSpec = InteractionSpec | MarkovSpec | DiscreteSpec


def build_j1(spec: NoiseSpec) -> OperatorSpace:
    """Degree-one space ``J_1``: identity, first-order operators and their adjoints."""
    spec.validate()
    if isinstance(spec, InteractionSpec):
        n = spec.system_dim
        ops = [j for j, _ in spec.couplings]
    elif isinstance(spec, MarkovSpec):
        n = spec.dim
        ops = [*spec.lindblad_ops, spec.drift]
    elif isinstance(spec, DiscreteSpec):
        n = spec.dim
        ops = [op for fam in spec.operations for op in (fam.v, *fam.kraus_tail)]
    else:
        raise TypeError(f"unsupported spec type {type(spec).__name__}")
    ops = [np.eye(n, dtype=complex), *ops]
    return dagger_closure(span(ops, n))


def collective_operator(n_qubits: int, letter: str) -> np.ndarray:
    """``sum_k sigma_letter^(k)``."""
    return sum(single_qubit_pauli(n_qubits, k, letter) for k in range(n_qubits))


def standard_interaction(n_qubits: int, kind: str) -> OperatorSpace:
    """``J_1`` for the linear, collective or classical interaction on qubits."""
    n = 2**n_qubits
    if kind == "linear":
        ops = [np.eye(n)]
        for k in range(n_qubits):
            for u in "XYZ":
                ops.append(single_qubit_pauli(n_qubits, k, u))
    elif kind == "collective":
        ops = [np.eye(n), *(collective_operator(n_qubits, u) for u in "XYZ")]
    elif kind == "classical":
        ops = []
        for mask in range(2**n_qubits):
            base = ["Z" if (mask >> (n_qubits - 1 - k)) & 1 else "I" for k in range(n_qubits)]
            ops.append(pauli_to_operator("".join(base)))
            for k in range(n_qubits):
                for u in "XY":
                    letters = list(base)
                    letters[k] = u
                    ops.append(pauli_to_operator("".join(letters)))
    else:
        raise ValueError(f"unknown interaction kind {kind!r}; expected linear, collective or classical")
    return span(ops, n)


@dataclass
class GradedAlgebra:
    """Degree filtration ``J_1 <= J_2 <= ...``.

    ``j[d-1]`` is ``J_d``.  Levels beyond those computed are produced on demand
    by :meth:`level`; once saturated, every higher level equals the last one.
    """

    j: list[OperatorSpace]
    saturated: bool = False
    saturation_degree: int | None = None
    max_degree: int | None = None

    @property
    def j1(self) -> OperatorSpace:
        return self.j[0]

    @property
    def ambient_dim(self) -> int:
        return self.j1.ambient_dim

    def ranks(self) -> list[int]:
        return [s.rank for s in self.j]

    def _extend(self) -> None:
        nxt = space_product(self.j[-1], self.j1)
        if nxt.rank == self.j[-1].rank:
            # guard: a second step must also leave the rank unchanged
            again = space_product(nxt, self.j1)
            if again.rank == nxt.rank:
                self.saturated = True
                self.saturation_degree = len(self.j)
                return
        self.j.append(nxt)

    def level(self, d: int) -> OperatorSpace:
        """``J_d``, with ``J_0 = span{I}``."""
        if d < 0:
            raise ValueError("degree must be non-negative")
        if d == 0:
            return span([np.eye(self.ambient_dim)])
        ceiling = self.ambient_dim**2
        while len(self.j) < d and not self.saturated and len(self.j) < ceiling:
            self._extend()
        return self.j[min(d, len(self.j)) - 1]

    def saturate(self) -> OperatorSpace:
        ceiling = self.ambient_dim**2
        while not self.saturated and len(self.j) < ceiling:
            self._extend()
        if not self.saturated:
            self.saturated = True
            self.saturation_degree = len(self.j)
        return self.j[-1]

    def is_saturated_at(self, d: int) -> bool:
        """True when ``J_d`` already equals the full interaction algebra."""
        self.level(d + 1)
        return self.saturated and d >= self.saturation_degree


def grade(j1: OperatorSpace, d_max: int) -> GradedAlgebra:
    """Compute ``J_1, ..., J_{d_max}``, stopping early at saturation.

    One level past ``d_max`` is probed so that a space which is already
    closed at ``d_max`` is reported as saturated.
    """
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    g = GradedAlgebra([j1], max_degree=d_max)
    g.level(min(d_max, j1.ambient_dim**2) + 1)
    del g.j[d_max:]
    return g


def full_algebra(j1: OperatorSpace) -> tuple[OperatorSpace, int]:
    """The algebra generated by ``j1`` and the degree at which grading saturates."""
    g = GradedAlgebra([j1])
    alg = g.saturate()
    return alg, g.saturation_degree


def noise_strength_hamiltonian(spec: InteractionSpec) -> float:
    """``lambda = |J|`` on the joint space."""
    return op_norm(spec.interaction())


def noise_strength_markov(spec: MarkovSpec) -> float:
    """``lambda = 2|V| + sum_i |L_i|^2``."""
    return 2 * op_norm(spec.drift) + sum(op_norm(op) ** 2 for op in spec.lindblad_ops)


def noise_strength_discrete(spec: DiscreteSpec) -> float:
    """``lambda = max_i (2|V_i| + |V_i|^2 + sum_j |L_ij|^2)``."""
    vals = []
    for fam in spec.operations:
        nv = op_norm(fam.v)
        vals.append(2 * nv + nv**2 + sum(op_norm(op) ** 2 for op in fam.kraus_tail))
    return max(vals) if vals else 0.0


def noise_strength(spec: NoiseSpec) -> float:
    if isinstance(spec, InteractionSpec):
        return noise_strength_hamiltonian(spec)
    if isinstance(spec, MarkovSpec):
        return noise_strength_markov(spec)
    if isinstance(spec, DiscreteSpec):
        return noise_strength_discrete(spec)
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


def time_dependent_envelope(specs: Sequence[tuple[float, InteractionSpec]]) -> tuple[OperatorSpace, float]:
    """Union of the sampled ``J_1`` spaces and the largest sampled ``lambda``."""
    if not specs:
        raise ValueError("need at least one (time, spec) sample")
    spaces = [build_j1(s) for _, s in specs]
    lam = max(noise_strength_hamiltonian(s) for _, s in specs)
    return union(*spaces), lam


def check_grading(g: GradedAlgebra) -> list[str]:
    """List of violated grading invariants (empty when all hold)."""
    problems = []
    if not contains(g.j1, np.eye(g.ambient_dim)):
        problems.append("identity not in J_1")
    for d, s in enumerate(g.j, start=1):
        if any(not contains(s, dagger(b)) for b in s.basis):
            problems.append(f"J_{d} is not dagger-closed")
        if d < len(g.j) and any(not contains(g.j[d], b) for b in s.basis):
            problems.append(f"J_{d} is not contained in J_{d + 1}")
    return problems
