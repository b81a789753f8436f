"""Block structure of unital, adjoint-closed operator algebras.

A unital ``*``-algebra ``A`` on ``C^N`` splits the space as a direct sum of
tensor products ``C_i (x) Z_i`` with ``A`` acting as the full matrix algebra on
each ``C_i`` and trivially on each ``Z_i``; the commutant acts the other way
round.  :func:`decompose` finds the isometries realising this splitting with
seeded random elements of the centre and of the commutant, then verifies the
block form explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from graded_qec.config import DEFAULT_SEED, tolerances
from graded_qec.operators import (
    OperatorSpace,
    contains,
    dagger,
    is_dagger_closed,
    trace_distance,
)


class DecompositionError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (worst residual {residual:.3g})")
        self.residual = residual


@dataclass
class Block:
    isometry: np.ndarray = field(repr=False)
    d_c: int
    d_z: int

    @property
    def dim(self) -> int:
        return self.d_c * self.d_z

    def support_projector(self) -> np.ndarray:
        return self.isometry @ self.isometry.conj().T

    def compress(self, op: np.ndarray) -> np.ndarray:
        """``W^dagger op W`` as a ``(d_c, d_z, d_c, d_z)`` tensor."""
        m = self.isometry.conj().T @ op @ self.isometry
        return m.reshape(self.d_c, self.d_z, self.d_c, self.d_z)

    def reduced_z(self, rho: np.ndarray) -> np.ndarray:
        """Partial trace over the ``C`` factor of the block-compressed state."""
        return np.einsum("azaw->zw", self.compress(rho))

    def reduced_c(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("azbz->ab", self.compress(rho))

    def embed(self, c_state: np.ndarray, z_state: np.ndarray) -> np.ndarray:
        """``W (c (x) z)`` for vectors, ``W (c (x) z) W^dagger`` for density matrices."""
        c, z = np.asarray(c_state), np.asarray(z_state)
        if c.ndim != z.ndim:
            raise ValueError("c_state and z_state must both be vectors or both be matrices")
        if c.ndim == 1:
            return self.isometry @ np.kron(c, z)
        return self.isometry @ np.kron(c, z) @ self.isometry.conj().T


@dataclass
class AlgebraDecomposition:
    blocks: list[Block]
    ambient_dim: int
    seed: int = DEFAULT_SEED
    residual: float = 0.0

    def dims(self) -> list[tuple[int, int]]:
        return [(b.d_c, b.d_z) for b in self.blocks]

    @property
    def algebra_dim(self) -> int:
        return sum(b.d_c**2 for b in self.blocks)

    @property
    def commutant_dim(self) -> int:
        return sum(b.d_z**2 for b in self.blocks)


@dataclass
class NoiselessSubsystem:
    block_index: int
    d_c: int
    d_z: int
    is_subspace: bool
    isometry: np.ndarray = field(repr=False)
    observables: list[np.ndarray] = field(default_factory=list, repr=False)


def _commutator_map(ops: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``[B, X]`` for every ``B`` in ``ops`` and ``X`` in ``x`` -> ``(len(ops), len(x), N, N)``."""
    return np.einsum("bij,cjk->bcik", ops, x) - np.einsum("cij,bjk->bcik", x, ops)


def _restricted_gram(ops: np.ndarray, q: np.ndarray, n: int) -> np.ndarray:
    x = q.T.reshape(-1, n, n)
    g = np.zeros((x.shape[0], x.shape[0]), dtype=complex)
    step = max(1, 2**22 // max(1, x.shape[0] * n * n))
    for start in range(0, ops.shape[0], step):
        c = _commutator_map(ops[start : start + step], x).reshape(-1, x.shape[0], n * n)
        g += np.einsum("bci,bdi->cd", c.conj(), c)
    return g


def _all_scalar(ops: np.ndarray, rel: float) -> bool:
    """True when every operator is a multiple of the identity up to ``rel``.

    The Gram spectrum is pure round-off in that case, so no relative cut applies.
    """
    n = ops.shape[-1]
    traces = np.trace(ops, axis1=1, axis2=2) / n
    traceless = ops - traces[:, None, None] * np.eye(n)
    return bool(np.all(np.linalg.norm(traceless, axis=(1, 2)) <= rel * (1e-300 + np.linalg.norm(ops, axis=(1, 2)))))


def commutant_of_operators(ops: np.ndarray, n: int) -> OperatorSpace:
    """Orthonormal basis of ``{X : [B, X] = 0 for all B in ops}``.

    The null space of the stacked commutator map is read off its Gram matrix in
    two passes: a loose eigenvalue cut gives a candidate subspace, and a second
    Gram restricted to that subspace (where all entries are tiny, so rounding
    is relative to them) applies the requested relative cutoff accurately.
    """
    ops = np.asarray(ops, dtype=complex).reshape(-1, n, n)
    rel = tolerances().commutant_rel
    # sum_B M_B^H M_B with M_B = B (x) I - I (x) B^T for row-major vec
    s1 = np.einsum("bki,bkj->ij", ops.conj(), ops)
    s2 = np.einsum("bik,bjk->ij", ops, ops.conj()).conj()
    bh = dagger(ops).reshape(ops.shape[0], -1)
    bt = np.swapaxes(ops, -1, -2).reshape(ops.shape[0], -1)
    t = (bh.T @ bt).reshape(n, n, n, n).transpose(0, 2, 1, 3).reshape(n * n, n * n)
    eye = np.eye(n)
    gram = np.kron(s1, eye) + np.kron(eye, s2) - t - t.conj().T
    gram = (gram + gram.conj().T) / 2
    w, u = np.linalg.eigh(gram)
    w_max = max(float(w[-1]), 0.0)
    if w_max == 0.0 or _all_scalar(ops, rel):
        return OperatorSpace(n, np.eye(n * n, dtype=complex).reshape(-1, n, n))
    cand = u[:, w <= max(1e-12, rel**2) * w_max]
    if cand.shape[1] == 0:
        return OperatorSpace(n, np.zeros((0, n, n), dtype=complex))
    wc, vc = np.linalg.eigh(_restricted_gram(ops, cand, n))
    null = cand @ vc[:, wc <= (rel**2) * w_max]
    q, _ = np.linalg.qr(null)
    return OperatorSpace(n, q.T.reshape(-1, n, n))


def commutant(alg: OperatorSpace) -> OperatorSpace:
    """Operators commuting with every element of a unital adjoint-closed space."""
    n = alg.ambient_dim
    if not contains(alg, np.eye(n)):
        raise ValueError("commutant: space does not contain the identity")
    if not is_dagger_closed(alg):
        raise ValueError("commutant: space is not closed under adjoints")
    return commutant_of_operators(alg.basis, n)


def intersection(s1: OperatorSpace, s2: OperatorSpace, tol: float = 1e-8) -> OperatorSpace:
    n = s1.ambient_dim
    if s1.rank == 0 or s2.rank == 0:
        return OperatorSpace(n, np.zeros((0, n, n), dtype=complex))
    m = s1.vectors.conj() @ s2.vectors.T
    _, s, wh = np.linalg.svd(m)
    k = int(np.sum(s >= 1.0 - tol))
    rows = wh[:k].conj() @ s2.vectors
    q, _ = np.linalg.qr(rows.T)
    return OperatorSpace(n, q.T.reshape(-1, n, n))


def center(alg: OperatorSpace) -> OperatorSpace:
    return intersection(alg, commutant(alg))


def is_product_closed(alg: OperatorSpace, samples: int = 50, seed: int = DEFAULT_SEED) -> bool:
    rng = np.random.default_rng(seed)
    d = alg.rank
    for _ in range(samples):
        i, j = rng.integers(d, size=2)
        if not contains(alg, alg.basis[i] @ alg.basis[j]):
            return False
    return True


def _random_element(space: OperatorSpace, rng: np.random.Generator) -> np.ndarray:
    c = rng.normal(size=space.rank) + 1j * rng.normal(size=space.rank)
    return np.tensordot(c, space.basis, axes=1)


def _random_hermitian_element(space: OperatorSpace, rng: np.random.Generator) -> np.ndarray:
    x = _random_element(space, rng)
    return (x + dagger(x)) / 2


def eigen_clusters(h: np.ndarray, gap_rel: float | None = None) -> list[np.ndarray]:
    """Orthonormal bases of eigenvalue clusters of a Hermitian matrix, in ascending order."""
    gap_rel = tolerances().cluster_gap if gap_rel is None else gap_rel
    w, v = np.linalg.eigh(h)
    spread = float(w[-1] - w[0]) if w.size else 0.0
    if spread <= 1e-12 * (1.0 + float(np.max(np.abs(w)))):
        return [v]
    cuts = np.nonzero(np.diff(w) > gap_rel * spread)[0] + 1
    return np.split(v, cuts, axis=1)


def _polar_unitary(t: np.ndarray) -> tuple[np.ndarray, float]:
    u, s, vh = np.linalg.svd(t)
    quality = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    return u @ vh, quality


def _decompose_once(
    alg: OperatorSpace, comm: OperatorSpace, cent: OperatorSpace, rng: np.random.Generator
) -> list[Block]:
    n = alg.ambient_dim
    supports = eigen_clusters(_random_hermitian_element(cent, rng))
    blocks = []
    for v in supports:
        kz = v.conj().T @ _random_hermitian_element(comm, rng) @ v
        copies = [v @ c for c in eigen_clusters(kz)]
        sizes = {c.shape[1] for c in copies}
        if len(sizes) != 1:
            raise DecompositionError(f"unequal irreducible copies {sorted(sizes)}", np.inf)
        d_c, d_z = sizes.pop(), len(copies)
        first = copies[0]
        matched = [first]
        if d_z > 1:
            y = _random_element(comm, rng)
            for c in copies[1:]:
                u, quality = _polar_unitary(c.conj().T @ y @ first)
                if quality < 1e-6:
                    raise DecompositionError("degenerate intertwiner draw", np.inf)
                matched.append(c @ u)
        w = np.stack(matched, axis=2).reshape(n, d_c * d_z)
        blocks.append(Block(w, d_c, d_z))

    def key(b: Block):
        support = np.nonzero(np.sum(np.abs(b.isometry) ** 2, axis=1) > 1e-12)[0]
        return (-b.d_c, -b.d_z, int(support[0]) if support.size else n)

    return sorted(blocks, key=key)


def verify_decomposition(dec: AlgebraDecomposition | list[Block], alg: OperatorSpace) -> float:
    """Largest deviation from the block-diagonal ``M (x) I`` form over the basis of ``alg``."""
    blocks = dec.blocks if isinstance(dec, AlgebraDecomposition) else dec
    n = alg.ambient_dim
    if sum(b.dim for b in blocks) != n:
        return np.inf
    w = np.concatenate([b.isometry for b in blocks], axis=1)
    worst = float(np.linalg.norm(w.conj().T @ w - np.eye(n)))
    offsets = np.cumsum([0] + [b.dim for b in blocks])
    for op in alg.basis:
        x = w.conj().T @ op @ w
        for i, bi in enumerate(blocks):
            for j, bj in enumerate(blocks):
                sub = x[offsets[i] : offsets[i + 1], offsets[j] : offsets[j + 1]]
                if i != j:
                    worst = max(worst, float(np.linalg.norm(sub)))
                    continue
                t = sub.reshape(bi.d_c, bi.d_z, bi.d_c, bi.d_z)
                m = np.einsum("azbz->ab", t) / bi.d_z
                worst = max(worst, float(np.linalg.norm(sub - np.kron(m, np.eye(bi.d_z)))))
    return worst


def decompose(alg: OperatorSpace, seed: int = DEFAULT_SEED, retries: int = 5) -> AlgebraDecomposition:
    """Split the space into blocks ``C_i (x) Z_i`` for a unital ``*``-algebra.

    The input must already be closed under products; pass the output of
    :func:`graded_qec.algebra.full_algebra` for a generating set.
    """
    n = alg.ambient_dim
    if not contains(alg, np.eye(n)):
        raise ValueError("decompose: algebra does not contain the identity")
    if not is_dagger_closed(alg):
        raise ValueError("decompose: algebra is not closed under adjoints")
    if not is_product_closed(alg, seed=seed):
        raise ValueError("decompose: space is not closed under products; call full_algebra first")
    comm = commutant(alg)
    cent = intersection(alg, comm)
    rng = np.random.default_rng(seed)
    tol = tolerances().decomposition
    worst = np.inf
    for _ in range(retries + 1):
        try:
            blocks = _decompose_once(alg, comm, cent, rng)
        except DecompositionError as exc:
            worst = min(worst, exc.residual)
            continue
        residual = verify_decomposition(blocks, alg)
        if residual <= tol:
            return AlgebraDecomposition(blocks, n, seed, residual)
        worst = min(worst, residual)
    raise DecompositionError(f"no verified decomposition after {retries + 1} attempts", worst)


def noiseless_subsystems(dec: AlgebraDecomposition) -> list[NoiselessSubsystem]:
    """Blocks whose ``Z`` factor can hold information untouched by the algebra.

    Every block with ``d_z >= 2`` is reported, as is every ``d_c = 1`` block
    (a noiseless subspace, possibly one-dimensional).
    """
    out = []
    for i, b in enumerate(dec.blocks):
        if b.d_z < 2 and b.d_c != 1:
            continue
        iso = b.isometry.reshape(dec.ambient_dim, b.d_c, b.d_z)[:, 0, :]
        observables = []
        for p in range(b.d_z):
            for q in range(b.d_z):
                unit = np.zeros((b.d_z, b.d_z), dtype=complex)
                unit[p, q] = 1.0
                observables.append(b.isometry @ np.kron(np.eye(b.d_c), unit) @ b.isometry.conj().T)
        out.append(NoiselessSubsystem(i, b.d_c, b.d_z, b.d_c == 1, iso, observables))
    return out


def subsystem_state_change(block: Block, rho: np.ndarray, ops: list[np.ndarray]) -> float:
    """Largest trace-distance change of the ``Z``-reduced state under ``rho -> X rho X^dagger``."""
    ref = block.reduced_z(rho)
    ref = ref / np.trace(ref)
    worst = 0.0
    for x in ops:
        out = x @ rho @ dagger(x)
        red = block.reduced_z(out)
        tr = np.trace(red).real
        if tr <= 1e-14:
            continue
        worst = max(worst, trace_distance(ref, red / tr))
    return worst
