"""Constructive code search.

* :func:`greedy_c_code` grows an orthonormal codeword list in which every
  operator of a given error space is diagonal.
* :func:`convex_partition` looks for disjoint groups of codeword expectation
  vectors whose convex hulls share a point; superposing each group with the
  hull weights gives mutually orthogonal states that every error sees with the
  same expectation, i.e. a quantum code (:func:`quantum_code_from_c_code`).
* :func:`tverberg_bound` is the group count guaranteed by the Tverberg
  argument for a given number of points.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from graded_qec.codes import Code, c_detects_all, detects_all
from graded_qec.config import DEFAULT_SEED, tolerances
from graded_qec.operators import OperatorSpace, contains, is_dagger_closed


@dataclass
class AlphaVector:
    index: int
    coords: np.ndarray


@dataclass
class PartitionCertificate:
    subsets: list[tuple[int, ...]]
    gamma: np.ndarray
    weights: list[np.ndarray]
    residual: float = 0.0

    @property
    def r(self) -> int:
        return len(self.subsets)


@dataclass
class PartitionResult:
    """Outcome of a partition search.

    ``status`` is ``"feasible"``, ``"infeasible"`` (no partition of any kind
    works) or ``"cap_exhausted"`` (the candidate budget ran out before either
    was established, so the bound was not constructively achieved).
    """

    status: str
    certificate: PartitionCertificate | None = None
    candidates_tested: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


@dataclass
class SearchReport:
    code: Code
    certificate: PartitionCertificate | None
    n: int
    d: int
    ceil_n_over_d: int
    tverberg_r: int
    achieved_dim: int
    status: str
    c_code_dim: int = 0
    extra: dict = field(default_factory=dict)

    def bound_report(self) -> dict:
        return {
            "N": self.n,
            "D": self.d,
            "ceil_N_over_D": self.ceil_n_over_d,
            "tverberg_r": self.tverberg_r,
            "achieved_dim": self.achieved_dim,
        }


def _require_error_space(e: OperatorSpace) -> None:
    if not contains(e, np.eye(e.ambient_dim)):
        raise ValueError("error space must contain the identity")
    if not is_dagger_closed(e):
        raise ValueError("error space must be closed under adjoints")


def greedy_c_code(e: OperatorSpace, n: int | None = None, seed: int = DEFAULT_SEED, max_retries: int = 10) -> Code:
    """Greedy c-code for the error space ``e``.

    Each new codeword is a seeded random vector projected off every
    ``E_i |c_j>`` found so far; the loop runs until that span fills the space.
    """
    _require_error_space(e)
    n = e.ambient_dim if n is None else n
    if n != e.ambient_dim:
        raise ValueError(f"N = {n} does not match the error space dimension {e.ambient_dim}")
    rng = np.random.default_rng(seed)
    rel = tolerances().rank_rel
    words: list[np.ndarray] = []
    images = np.zeros((n, 0), dtype=complex)
    q = np.zeros((n, 0), dtype=complex)
    while q.shape[1] < n:
        for _ in range(max_retries):
            g = rng.normal(size=n) + 1j * rng.normal(size=n)
            g /= np.linalg.norm(g)
            v = g - q @ (q.conj().T @ g)
            v = v - q @ (q.conj().T @ v)
            if np.linalg.norm(v) > 1e-6:
                break
        else:
            break
        c = v / np.linalg.norm(v)
        words.append(c)
        images = np.concatenate([images, np.einsum("bij,j->ib", e.basis, c)], axis=1)
        u, s, _ = np.linalg.svd(images, full_matrices=False)
        q = u[:, s > rel * s[0]]
    return Code.c_code(np.stack(words, axis=1), name="greedy-c-code")


def hermitian_error_basis(e: OperatorSpace) -> np.ndarray:
    """Real-orthonormal Hermitian basis of ``e`` with the identity (unnormalised) first."""
    _require_error_space(e)
    n = e.ambient_dim
    herm = np.concatenate([(e.basis + np.conj(np.swapaxes(e.basis, 1, 2))) / 2,
                           (e.basis - np.conj(np.swapaxes(e.basis, 1, 2))) / 2j])
    traces = np.trace(herm, axis1=1, axis2=2).real / n
    herm = herm - traces[:, None, None] * np.eye(n)
    real_rows = np.concatenate([herm.real.reshape(len(herm), -1), herm.imag.reshape(len(herm), -1)], axis=1)
    _, s, vh = np.linalg.svd(real_rows, full_matrices=False)
    keep = vh[s > tolerances().rank_rel * max(float(s[0]), 1e-300)] if s.size and s[0] > 0 else vh[:0]
    half = n * n
    traceless = (keep[:, :half] + 1j * keep[:, half:]).reshape(-1, n, n)
    basis = np.concatenate([np.eye(n, dtype=complex)[None], traceless])
    if basis.shape[0] != e.rank:
        raise ValueError(f"Hermitian basis has {basis.shape[0]} elements, error space has rank {e.rank}")
    return basis


def alpha_vectors(code: Code, e: OperatorSpace) -> list[AlphaVector]:
    """Expectation vectors ``<c_j|E_l|c_j>`` over a Hermitian basis of ``e``."""
    if code.transmission_basis is None:
        raise ValueError("alpha vectors need a code with a transmission basis")
    herm = hermitian_error_basis(e)
    t = code.transmission_basis
    vals = np.einsum("ij,lik,kj->jl", t.conj(), herm, t).real
    return [AlphaVector(j, vals[j]) for j in range(t.shape[1])]


def tverberg_bound(n: int, d: int) -> int:
    """Largest ``r`` with ``r (D+1) - D <= ceil(N/D)``; at least 1."""
    if n < 1 or d < 1:
        raise ValueError("N and D must be positive")
    c = -(-n // d)
    return max(1, (c + d) // (d + 1))


def set_partitions(items: Sequence[int], r: int, max_subset_size: int | None = None) -> Iterator[list[tuple[int, ...]]]:
    """Partitions of ``items`` into exactly ``r`` nonempty blocks, restricted-growth order."""
    m = len(items)
    if r > m or r < 1:
        return
    labels = [0] * m

    def rec(i: int, used: int):
        if m - i < r - used:
            return
        if i == m:
            if used == r:
                blocks = [tuple(items[k] for k in range(m) if labels[k] == b) for b in range(r)]
                if max_subset_size is None or max(len(b) for b in blocks) <= max_subset_size:
                    yield blocks
            return
        for lab in range(min(used + 1, r)):
            labels[i] = lab
            yield from rec(i + 1, max(used, lab + 1))

    yield from rec(0, 0)


def _candidates(m: int, r: int, max_subset_size: int | None) -> Iterator[list[tuple[int, ...]]]:
    for u in range(r, m + 1):
        for chosen in itertools.combinations(range(m), u):
            yield from set_partitions(chosen, r, max_subset_size)


def _projections_overlap(points: np.ndarray, subsets: list[tuple[int, ...]], tol: float) -> bool:
    """Necessary condition for a shared point: the per-axis ranges of all groups overlap."""
    lo = np.max([points[list(g)].min(axis=0) for g in subsets], axis=0)
    hi = np.min([points[list(g)].max(axis=0) for g in subsets], axis=0)
    return bool(np.all(lo <= hi + tol))


def _try(points: np.ndarray, subsets: list[tuple[int, ...]], tol: float) -> PartitionCertificate | None:
    if not _projections_overlap(points, subsets, tol):
        return None
    cert = _lp_certificate(points, subsets)
    return cert if cert is not None and cert.residual <= tol else None


def _lp_certificate(points: np.ndarray, subsets: list[tuple[int, ...]]) -> PartitionCertificate | None:
    dim = points.shape[1]
    sizes = [len(s) for s in subsets]
    nb = sum(sizes)
    # variables: beta (per used point, per its subset) then gamma (free)
    a_eq = np.zeros((len(subsets) * (dim + 1), nb + dim))
    b_eq = np.zeros(len(subsets) * (dim + 1))
    col = 0
    for i, s in enumerate(subsets):
        rows = slice(i * (dim + 1), i * (dim + 1) + dim)
        a_eq[rows, col : col + len(s)] = points[list(s)].T
        a_eq[rows, nb:] = -np.eye(dim)
        a_eq[i * (dim + 1) + dim, col : col + len(s)] = 1.0
        b_eq[i * (dim + 1) + dim] = 1.0
        col += len(s)
    bounds = [(0, None)] * nb + [(None, None)] * dim
    res = linprog(np.zeros(nb + dim), A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        return None
    beta = np.clip(res.x[:nb], 0.0, None)
    weights = []
    col = 0
    for s in subsets:
        w = beta[col : col + len(s)]
        weights.append(w / w.sum())
        col += len(s)
    gamma = weights[0] @ points[list(subsets[0])]
    cert = PartitionCertificate([tuple(s) for s in subsets], gamma, weights)
    cert.residual = certificate_residual(points, cert)
    return cert


def certificate_residual(points: np.ndarray, cert: PartitionCertificate) -> float:
    worst = 0.0
    seen: set[int] = set()
    for s, w in zip(cert.subsets, cert.weights):
        if seen & set(s):
            return math.inf
        seen |= set(s)
        worst = max(worst, abs(w.sum() - 1.0), float(-min(w.min(), 0.0)))
        worst = max(worst, float(np.max(np.abs(w @ points[list(s)] - cert.gamma))))
    return worst


def _as_points(points) -> np.ndarray:
    if len(points) and isinstance(points[0], AlphaVector):
        return np.array([p.coords for p in points], dtype=float)
    arr = np.asarray(points, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def convex_partition(
    points: Sequence[AlphaVector] | np.ndarray,
    r_target: int,
    cap: int = 10**6,
    max_subset_size: int | None = None,
) -> PartitionResult:
    """First ``r_target`` disjoint groups whose convex hulls share a point.

    Candidates are ordered by number of points used, then by the lexicographic
    order of the chosen indices, then by restricted-growth labelling; each one
    is tested with a feasibility LP (skipped when the coordinate ranges of
    the groups cannot overlap) and the certificate is re-verified in
    floating point.  Since enlarging a group never shrinks its hull, an
    instance is infeasible exactly when no partition of all points works, and
    that case is settled first.
    """
    if r_target < 1:
        raise ValueError("r_target must be >= 1")
    pts = _as_points(points)
    m = len(pts)
    tol = tolerances().certificate
    if m < r_target:
        return PartitionResult("infeasible")
    tested = 0
    if max_subset_size is None:
        any_full = False
        for blocks in set_partitions(list(range(m)), r_target):
            if tested >= cap:
                return PartitionResult("cap_exhausted", candidates_tested=tested)
            tested += 1
            if _try(pts, blocks, tol) is not None:
                any_full = True
                break
        if not any_full:
            return PartitionResult("infeasible", candidates_tested=tested)
    exhausted = True
    for blocks in _candidates(m, r_target, max_subset_size):
        if tested >= cap:
            exhausted = False
            break
        tested += 1
        cert = _try(pts, blocks, tol)
        if cert is not None:
            return PartitionResult("feasible", cert, tested)
    return PartitionResult("infeasible" if exhausted else "cap_exhausted", candidates_tested=tested)


def quantum_code_from_c_code(ccode: Code, cert: PartitionCertificate, e: OperatorSpace) -> Code:
    """Code spanned by ``|q_i> = sum_{j in Y_i} sqrt(beta_ij) |c_j>``.

    Raises ``ValueError`` if the certificate is inconsistent with the code's
    expectation vectors or if the resulting code fails to detect ``e``.
    """
    tol = tolerances().certificate
    pts = np.array([a.coords for a in alpha_vectors(ccode, e)])
    residual = certificate_residual(pts, cert)
    if residual > tol:
        raise ValueError(f"partition certificate residual {residual:.3g} exceeds {tol:g}")
    t = ccode.transmission_basis
    cols = [t[:, list(s)] @ np.sqrt(w) for s, w in zip(cert.subsets, cert.weights)]
    v = np.stack(cols, axis=1)
    c = np.einsum("ia,bij,jc->bac", v.conj(), e.basis, v)
    k = v.shape[1]
    alpha = np.trace(c, axis1=1, axis2=2) / k
    worst = float(np.max(np.abs(c - alpha[:, None, None] * np.eye(k))))
    if worst > tol:
        raise ValueError(f"constructed code violates the detection conditions (residual {worst:.3g})")
    return Code(v, name=f"partition-code-r{k}")


def search_c_code(e: OperatorSpace, seed: int = DEFAULT_SEED) -> SearchReport:
    code = greedy_c_code(e, seed=seed)
    n, d = e.ambient_dim, e.rank
    if not c_detects_all(code, e):
        raise RuntimeError("greedy c-code failed its own detection check")
    return SearchReport(
        code, None, n, d, -(-n // d), tverberg_bound(n, d), code.logical_dim, "feasible", code.logical_dim
    )


def search_quantum_code(
    e: OperatorSpace,
    seed: int = DEFAULT_SEED,
    r_target: int | None = None,
    cap: int = 10**6,
    max_subset_size: int | None = None,
) -> SearchReport:
    """Greedy c-code followed by a convex-partition subcode of ``r_target`` vectors."""
    ccode = greedy_c_code(e, seed=seed)
    n, d = e.ambient_dim, e.rank
    r_bound = tverberg_bound(n, d)
    r = r_bound if r_target is None else r_target
    result = convex_partition(alpha_vectors(ccode, e), r, cap=cap, max_subset_size=max_subset_size)
    if result.feasible:
        code = quantum_code_from_c_code(ccode, result.certificate, e)
        if not detects_all(code, e):
            raise RuntimeError("partition code failed its detection check")
    else:
        code = Code(ccode.transmission_basis[:, :1], name="single-codeword")
    return SearchReport(
        code,
        result.certificate,
        n,
        d,
        -(-n // d),
        r_bound,
        code.logical_dim,
        result.status,
        ccode.logical_dim,
        {"candidates_tested": result.candidates_tested, "r_target": r},
    )
