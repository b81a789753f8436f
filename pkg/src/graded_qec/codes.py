"""Codes and their certification: detection, (c-)distance, correctability, recovery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from graded_qec.algebra import GradedAlgebra
from graded_qec.config import DEFAULT_SEED, tolerances
from graded_qec.operators import (
    OperatorSpace,
    contains,
    dagger,
    hs_norm,
    random_density,
    span,
    trace_distance,
)
from graded_qec.structure import Block, commutant_of_operators, decompose


class CertificationError(ValueError):
    pass


@dataclass
class Code:
    """Isometry from a ``K``-dimensional logical space into the system space.

    For a c-code the transmission basis is the list of codewords (columns);
    it spans the same space as the isometry.
    """

    isometry: np.ndarray = field(repr=False)
    transmission_basis: np.ndarray | None = field(default=None, repr=False)
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.isometry, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        self.isometry = v
        err = np.linalg.norm(v.conj().T @ v - np.eye(v.shape[1]))
        if err > tolerances().orthonormal * max(1, v.shape[1]) * 100:
            raise ValueError(f"code isometry columns are not orthonormal (defect {err:.3g})")
        if self.transmission_basis is not None:
            t = np.asarray(self.transmission_basis, dtype=complex)
            if t.shape != v.shape:
                raise ValueError(f"transmission basis shape {t.shape} does not match isometry {v.shape}")
            self.transmission_basis = t

    @property
    def system_dim(self) -> int:
        return self.isometry.shape[0]

    @property
    def logical_dim(self) -> int:
        return self.isometry.shape[1]

    def projector(self) -> np.ndarray:
        return self.isometry @ self.isometry.conj().T

    def compress(self, op: np.ndarray) -> np.ndarray:
        """``V^dagger op V``: the logical-space matrix of ``Pi op Pi``."""
        return self.isometry.conj().T @ op @ self.isometry

    def encode(self, rho_logical: np.ndarray) -> np.ndarray:
        return self.isometry @ rho_logical @ self.isometry.conj().T

    @classmethod
    def full_space(cls, n: int) -> Code:
        return cls(np.eye(n, dtype=complex), name=f"full-space-{n}")

    @classmethod
    def c_code(cls, codewords: np.ndarray, name: str = "") -> Code:
        return cls(codewords, transmission_basis=codewords, name=name)


@dataclass
class QuantumOperation:
    kraus: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        self.kraus = [np.asarray(k, dtype=complex) for k in self.kraus]

    @property
    def completeness_defect(self) -> float:
        n = self.kraus[0].shape[1]
        m = sum(dagger(k) @ k for k in self.kraus)
        return float(np.linalg.norm(m - np.eye(n)))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    @classmethod
    def identity(cls, n: int) -> QuantumOperation:
        return cls([np.eye(n, dtype=complex)])


def detects(code: Code, e: np.ndarray) -> tuple[bool, complex]:
    """Whether ``Pi E Pi = alpha Pi`` and the trace-average ``alpha``."""
    c = code.compress(e)
    alpha = complex(np.trace(c)) / code.logical_dim
    residual = np.linalg.norm(c - alpha * np.eye(code.logical_dim))
    return bool(residual <= tolerances().detect * (1.0 + hs_norm(e))), alpha


def detects_all(code: Code, space: OperatorSpace) -> bool:
    tol = tolerances().detect
    k = code.logical_dim
    c = np.einsum("ia,bij,jc->bac", code.isometry.conj(), space.basis, code.isometry)
    alpha = np.trace(c, axis1=1, axis2=2) / k
    residual = np.linalg.norm(c - alpha[:, None, None] * np.eye(k), axis=(1, 2))
    norms = np.linalg.norm(space.vectors, axis=1)
    return bool(np.all(residual <= tol * (1.0 + norms)))


def _require_basis(code: Code) -> np.ndarray:
    if code.transmission_basis is None:
        raise ValueError("code has no transmission basis")
    return code.transmission_basis


def c_detects(code: Code, e: np.ndarray) -> bool:
    """Whether ``<c_i|E|c_j> = 0`` for ``i != j`` in the transmission basis."""
    t = _require_basis(code)
    m = t.conj().T @ e @ t
    off = m - np.diag(np.diag(m))
    return bool(np.max(np.abs(off), initial=0.0) <= tolerances().detect * (1.0 + hs_norm(e)))


def c_detects_all(code: Code, space: OperatorSpace) -> bool:
    return all(c_detects(code, e) for e in space.basis)


def _compressions_commute(code: Code, space: OperatorSpace) -> bool:
    c = np.einsum("ia,bij,jc->bac", code.isometry.conj(), space.basis, code.isometry)
    tol = tolerances().commute
    for i in range(c.shape[0]):
        comm = np.einsum("ab,kbc->kac", c[i], c[i:]) - np.einsum("kab,bc->kac", c[i:], c[i])
        if np.max(np.linalg.norm(comm, axis=(1, 2)), initial=0.0) > tol:
            return False
    return True


def _ascending_distance(g: GradedAlgebra, predicate) -> float:
    d = 1
    while True:
        level = g.level(d)
        if not predicate(level):
            return d
        if g.is_saturated_at(d):
            return math.inf
        d += 1


def min_distance(code: Code, g: GradedAlgebra) -> float:
    """Largest ``d`` with ``J_{d-1}`` detected; ``inf`` if the whole algebra is."""
    return _ascending_distance(g, lambda s: detects_all(code, s))


def min_c_distance(code: Code, g: GradedAlgebra) -> float:
    """Largest ``d`` such that compressions of ``J_{d-1}`` pairwise commute."""
    return _ascending_distance(g, lambda s: _compressions_commute(code, s))


def transmission_basis(code: Code, space: OperatorSpace) -> np.ndarray:
    """Codewords simultaneously diagonalising every compression of ``space``.

    Degenerate eigenspaces are refined operator by operator in basis order,
    using the Hermitian and anti-Hermitian parts of each compression.
    """
    if not _compressions_commute(code, space):
        raise CertificationError("compressions do not commute; no transmission basis exists")
    k = code.logical_dim
    groups = [np.eye(k, dtype=complex)]
    gap = tolerances().cluster_gap
    for e in space.basis:
        c = code.compress(e)
        for h in ((c + dagger(c)) / 2, (c - dagger(c)) / 2j):
            refined = []
            for u in groups:
                if u.shape[1] == 1:
                    refined.append(u)
                    continue
                w, v = np.linalg.eigh(u.conj().T @ h @ u)
                scale = max(1.0, float(np.max(np.abs(w))))
                cuts = np.nonzero(np.diff(w) > gap * scale)[0] + 1
                refined.extend(u @ part for part in np.split(v, cuts, axis=1))
            groups = refined
    return code.isometry @ np.concatenate(groups, axis=1)


def _kl_matrix(code: Code, je: OperatorSpace) -> np.ndarray:
    """``M[a, b] = V^dagger E_a^dagger E_b V`` as ``(D, D, K, K)``."""
    f = np.einsum("bij,jk->bik", je.basis, code.isometry)
    return np.einsum("aik,bil->abkl", f.conj(), f)


def kl_correctable(code: Code, je: OperatorSpace, classical: bool = False) -> bool:
    """Knill-Laflamme test: the code detects every product ``E_a^dagger E_b``.

    With ``classical=True`` detection is taken in the transmission basis
    (diagonal compressions rather than scalar ones).
    """
    tol = tolerances().detect
    k = code.logical_dim
    if classical:
        t = _require_basis(code)
        f = np.einsum("bij,jk->bik", je.basis, t)
        m = np.einsum("aik,bil->abkl", f.conj(), f)
        off = m - np.einsum("abkk,kl->abkl", m, np.eye(k))
        worst = np.max(np.abs(off), axis=(2, 3))
    else:
        m = _kl_matrix(code, je)
        alpha = np.trace(m, axis1=2, axis2=3) / k
        worst = np.linalg.norm(m - alpha[:, :, None, None] * np.eye(k), axis=(2, 3))
    prod_norms = np.linalg.norm(
        np.einsum("aji,bjk->abik", je.basis.conj(), je.basis).reshape(je.rank, je.rank, -1), axis=2
    )
    return bool(np.all(worst <= tol * (1.0 + prod_norms)))


def build_recovery(code: Code, je: OperatorSpace) -> QuantumOperation:
    """Trace-preserving recovery undoing every error in ``je``.

    The Knill-Laflamme matrix ``beta`` is diagonalised to get error operators
    with mutually orthogonal images of the code; each image is rotated back
    onto the code, and the remaining subspace is kept by a projector.
    """
    if not kl_correctable(code, je):
        raise CertificationError("code does not satisfy the Knill-Laflamme conditions for this error space")
    k = code.logical_dim
    m = _kl_matrix(code, je)
    beta = np.trace(m, axis1=2, axis2=3) / k
    beta = (beta + beta.conj().T) / 2
    mu, u = np.linalg.eigh(beta)
    keep = mu > tolerances().rank_rel * max(float(mu[-1]), 1e-300)
    f = np.einsum("bij,bm->mij", je.basis, u[:, keep])
    kraus = []
    used = np.zeros((code.system_dim, code.system_dim), dtype=complex)
    for fm, mu_m in zip(f, mu[keep]):
        r = fm @ code.isometry / np.sqrt(mu_m)
        kraus.append(code.isometry @ r.conj().T)
        used += r @ r.conj().T
    rest = np.eye(code.system_dim) - used
    if np.linalg.norm(rest) > tolerances().trace_preservation:
        w, v = np.linalg.eigh((rest + rest.conj().T) / 2)
        basis = v[:, w > 0.5]
        kraus.append(basis @ basis.conj().T)
    return QuantumOperation(kraus)


def noiseless_subsystem_code(block: Block, c_index: int = 0) -> tuple[Code, QuantumOperation]:
    """Code storing the ``Z`` factor of ``block`` with the ``C`` factor fixed, plus its decoder.

    The decoder resets the ``C`` factor to the fixed state and projects the
    rest of the space onto itself, so it is trace preserving.
    """
    n = block.isometry.shape[0]
    w = block.isometry.reshape(n, block.d_c, block.d_z)
    code = Code(w[:, c_index, :], name=f"noiseless-subsystem-{block.d_c}x{block.d_z}")
    kraus = []
    for a in range(block.d_c):
        kraus.append(w[:, c_index, :] @ w[:, a, :].conj().T)
    rest = np.eye(n) - block.support_projector()
    if np.linalg.norm(rest) > 1e-12:
        kraus.append(rest)
    return code, QuantumOperation(kraus)


def verify_as_noiseless_subsystem(
    code: Code,
    protect: QuantumOperation,
    je: OperatorSpace,
    seed: int = DEFAULT_SEED,
    n_states: int = 5,
) -> bool:
    """Check that, after ``protect``, the code's information sits in a noiseless
    subsystem of the adjoint-closed algebra generated by ``{E A_i}``.

    Requires ``I`` in the span of ``{A_i^dagger A_j}``.  The generated algebra
    is obtained as the double commutant of the generators, decomposed, and a
    block with ``d_z >= K`` is accepted when (a) the protected code states are
    supported on it, (b) its ``Z``-reduced states preserve trace distances
    between logical states, and (c) those reduced states are unchanged by
    generator actions.
    """
    n = code.system_dim
    kraus = protect.kraus
    if any(a.shape != (n, n) for a in kraus):
        raise ValueError("protecting operation must act on the system space")
    pairs = span([dagger(a) @ b for a in kraus for b in kraus], n)
    if not contains(pairs, np.eye(n)):
        return False
    gens = np.stack([e @ a for e in je.basis for a in kraus])
    gens = np.concatenate([gens, dagger(gens), np.eye(n, dtype=complex)[None]])
    comm = commutant_of_operators(gens, n)
    alg = commutant_of_operators(comm.basis, n)
    dec = decompose(alg, seed=seed)
    rng = np.random.default_rng(seed)
    logical = [random_density(code.logical_dim, rng) for _ in range(n_states)]
    protected = [protect.apply(code.encode(r)) for r in logical]
    tol = tolerances().subsystem
    gen_sample = [gens[i] for i in rng.choice(len(gens), size=min(len(gens), 24), replace=False)]
    for block in dec.blocks:
        if block.d_z < code.logical_dim:
            continue
        p = block.support_projector()
        if any(abs(1.0 - np.trace(p @ rho).real) > tol for rho in protected):
            continue
        reduced = [block.reduced_z(rho) for rho in protected]
        faithful = all(
            abs(trace_distance(reduced[i], reduced[j]) - trace_distance(logical[i], logical[j])) <= tol
            for i in range(len(logical))
            for j in range(i + 1, len(logical))
        )
        if not faithful:
            continue
        stable = True
        for rho, red in zip(protected, reduced):
            for x in gen_sample:
                out = block.reduced_z(x @ rho @ dagger(x))
                tr = np.trace(out).real
                if tr > 1e-12 and trace_distance(out / tr, red) > tol:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            return True
    return False

