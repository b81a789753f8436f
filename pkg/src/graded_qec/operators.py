"""Dense operators and Hilbert-Schmidt orthonormal operator spaces.

Operators are plain square complex ``numpy`` arrays.  An
:class:`OperatorSpace` stores an orthonormal basis under
``<A, B> = tr(A^dagger B)`` as a ``(D, N, N)`` array; with row-major
vectorisation that inner product is the ordinary vector inner product, so
most routines work on the ``(D, N*N)`` matrix of flattened basis elements.
"""

from __future__ import annotations

import functools
import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from graded_qec.config import tolerances

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# columns per SVD pass when orthonormalising very large operator families
_CHUNK_ELEMENTS = 2**24


def as_operator(a, dim: int | None = None) -> np.ndarray:
    """Validate and convert ``a`` into a square complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"operator must be square, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"operator has dim {m.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def kron(*ops: np.ndarray) -> np.ndarray:
    return functools.reduce(np.kron, ops, np.ones((1, 1), dtype=complex))


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, b))


def hs_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def op_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    a = as_operator(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values, ``tr sqrt(A^dagger A)``."""
    a = as_operator(a)
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


@dataclass(frozen=True)
class PauliString:
    letters: str
    coeff: complex = 1.0

    def __post_init__(self):
        bad = set(self.letters) - set(PAULI)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)


def pauli_to_operator(p: PauliString | str, coeff: complex | None = None) -> np.ndarray:
    if isinstance(p, str):
        p = PauliString(p, 1.0 if coeff is None else coeff)
    return p.coeff * kron(*(PAULI[ch] for ch in p.letters))


def single_qubit_pauli(n_qubits: int, qubit: int, letter: str) -> np.ndarray:
    letters = ["I"] * n_qubits
    letters[qubit] = letter
    return pauli_to_operator("".join(letters))


def pauli_strings(n_qubits: int, max_weight: int | None = None) -> list[str]:
    """All Pauli strings on ``n_qubits`` with weight at most ``max_weight``."""
    out = []
    for letters in itertools.product("IXYZ", repeat=n_qubits):
        s = "".join(letters)
        if max_weight is None or sum(ch != "I" for ch in s) <= max_weight:
            out.append(s)
    return out


@dataclass(frozen=True, eq=False)
class OperatorSpace:
    """Linear space of ``N x N`` operators with an HS-orthonormal basis."""

    ambient_dim: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 3 or b.shape[1:] != (self.ambient_dim, self.ambient_dim):
            b = b.reshape(-1, self.ambient_dim, self.ambient_dim)
        object.__setattr__(self, "basis", b)

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    def __len__(self) -> int:
        return self.rank

    def __iter__(self):
        return iter(self.basis)

    def __repr__(self) -> str:
        return f"OperatorSpace(ambient_dim={self.ambient_dim}, rank={self.rank})"

    @functools.cached_property
    def vectors(self) -> np.ndarray:
        """Basis as rows of a ``(D, N*N)`` matrix."""
        return self.basis.reshape(self.rank, -1)

    def gram(self) -> np.ndarray:
        v = self.vectors
        return v.conj() @ v.T

    def coefficients(self, a: np.ndarray) -> np.ndarray:
        return self.vectors.conj() @ np.asarray(a, dtype=complex).reshape(-1)

    def project(self, a: np.ndarray) -> np.ndarray:
        n = self.ambient_dim
        return (self.coefficients(a) @ self.vectors).reshape(n, n)

    def residual(self, a: np.ndarray) -> float:
        a = np.asarray(a, dtype=complex)
        return hs_norm(a - self.project(a))

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the space, acting on vectorised operators."""
        v = self.vectors
        return v.T @ v.conj()

    def same_space(self, other: OperatorSpace, tol: float = 1e-8) -> bool:
        if self.ambient_dim != other.ambient_dim or self.rank != other.rank:
            return False
        if self.rank == 0:
            return True
        return bool(np.linalg.norm(self.projector() - other.projector()) <= tol)


def _as_stack(ops: Iterable[np.ndarray] | np.ndarray, dim: int | None) -> np.ndarray:
    if isinstance(ops, np.ndarray) and ops.ndim == 3:
        stack = ops.astype(complex, copy=False)
    else:
        ops = [as_operator(o) for o in ops]
        if not ops:
            if dim is None:
                raise ValueError("cannot infer ambient dimension of an empty operator list")
            return np.zeros((0, dim, dim), dtype=complex)
        stack = np.stack(ops)
    if dim is not None and stack.shape[1:] != (dim, dim):
        raise ValueError(f"operators have shape {stack.shape[1:]}, expected {(dim, dim)}")
    return stack


def _orthonormal_rows(rows: np.ndarray, rel_tol: float) -> np.ndarray:
    """Orthonormal basis (as rows) of the row space, SVD with relative cutoff."""
    m, n = rows.shape
    if m == 0:
        return np.zeros((0, n), dtype=complex)
    if m * n <= _CHUNK_ELEMENTS:
        _, s, vh = np.linalg.svd(rows, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return np.zeros((0, n), dtype=complex)
        r = int(np.sum(s > rel_tol * s[0]))
        return vh[:r]
    # incremental path: project each chunk off the current basis, keep new directions
    chunk = max(1, _CHUNK_ELEMENTS // n)
    basis = np.zeros((0, n), dtype=complex)
    scale = 0.0
    for start in range(0, m, chunk):
        block = rows[start : start + chunk]
        s_block = np.linalg.svd(block, compute_uv=False)
        scale = max(scale, float(s_block[0]) if s_block.size else 0.0)
        if scale == 0.0:
            continue
        for _ in range(2):
            block = block - (block @ basis.conj().T) @ basis
        _, s, vh = np.linalg.svd(block, full_matrices=False)
        keep = vh[s > rel_tol * scale]
        if keep.shape[0]:
            keep = keep - (keep @ basis.conj().T) @ basis
            q, _ = np.linalg.qr(keep.T)
            basis = np.vstack([basis, q.T])
        if basis.shape[0] == n:
            break
    return basis


def span(ops: Iterable[np.ndarray] | np.ndarray, dim: int | None = None) -> OperatorSpace:
    """Orthonormal basis of the linear span of ``ops``."""
    stack = _as_stack(ops, dim)
    n = stack.shape[1]
    rows = _orthonormal_rows(stack.reshape(stack.shape[0], -1), tolerances().rank_rel)
    return OperatorSpace(n, rows.reshape(-1, n, n))


def identity_space(n: int) -> OperatorSpace:
    return span([np.eye(n, dtype=complex)])


def full_matrix_space(n: int) -> OperatorSpace:
    return OperatorSpace(n, np.eye(n * n, dtype=complex).reshape(n * n, n, n))


def space_product(s1: OperatorSpace, s2: OperatorSpace) -> OperatorSpace:
    """Span of all products ``b1 @ b2``."""
    if s1.ambient_dim != s2.ambient_dim:
        raise ValueError(f"dimension mismatch: {s1.ambient_dim} vs {s2.ambient_dim}")
    n = s1.ambient_dim
    prods = np.einsum("aij,bjk->abik", s1.basis, s2.basis).reshape(-1, n, n)
    return span(prods, n)


def dagger_closure(s: OperatorSpace) -> OperatorSpace:
    return span(np.concatenate([s.basis, dagger(s.basis)]), s.ambient_dim)


def is_dagger_closed(s: OperatorSpace) -> bool:
    return all(contains(s, dagger(b)) for b in s.basis)


def union(*spaces: OperatorSpace) -> OperatorSpace:
    dims = {s.ambient_dim for s in spaces}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")
    return span(np.concatenate([s.basis for s in spaces]), dims.pop())


def contains(s: OperatorSpace, a: np.ndarray) -> bool:
    a = as_operator(a, s.ambient_dim)
    return s.residual(a) <= tolerances().contains * (1.0 + hs_norm(a))


def hermitian_parts(ops: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Stack of Hermitian and anti-Hermitian parts (as Hermitian matrices)."""
    ops = np.asarray(ops, dtype=complex)
    return np.concatenate([(ops + dagger(ops)) / 2, (ops - dagger(ops)) / 2j])


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * trace_norm(rho - sigma)
