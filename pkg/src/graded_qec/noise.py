"""Dynamical checks of the error bounds.

The error metric is entanglement fidelity.  A reference of dimension ``K`` is
maximally entangled with the code, the code system is optionally prepared by
a protecting operation, evolved, recovered, and compared with the ideal
encoded state ``|Phi>``:

    p = 1 - <Phi| rho_out |Phi>,    a = sqrt(p).

For Hamiltonian noise ``p`` is evaluated as the squared norm of the component
orthogonal to ``|Phi>`` after each recovery Kraus operator, which avoids the
cancellation in ``1 - F``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from graded_qec.algebra import (
    DiscreteSpec,
    InteractionSpec,
    MarkovSpec,
    noise_strength_discrete,
    noise_strength_hamiltonian,
    noise_strength_markov,
)
from graded_qec.codes import Code, QuantumOperation
from graded_qec.config import DEFAULT_SEED, tolerances
from graded_qec.operators import dagger, random_hermitian, random_state

METRIC = {
    "protocol": "entanglement-fidelity",
    "description": (
        "maximally entangled reference (dim K) with the encoded logical space; "
        "protect, evolve, recover, trace out environment; p = 1 - F_e, a = sqrt(p)"
    ),
}


def default_grid(lo: float = 1e-3, hi: float = 1.0, count: int = 16) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), count)


def bound_envelope(lam_t: np.ndarray | float, e: int) -> np.ndarray:
    """``(lambda t)^(e+1) / (e+1)!``."""
    return np.asarray(lam_t, dtype=float) ** (e + 1) / math.factorial(e + 1)


@dataclass
class SimulationRun:
    model: str
    code: str
    e: int
    lam: float
    times: np.ndarray
    amplitude: np.ndarray
    probability: np.ndarray
    bound: np.ndarray
    seed: int | None = None
    env_norm: float | None = None

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def ratios(self) -> np.ndarray:
        measured = self.amplitude if self.model == "hamiltonian" else self.probability
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.bound > 0, measured / self.bound, 0.0)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "code": self.code,
            "e": self.e,
            "lambda": self.lam,
            "seed": self.seed,
            "env_norm": self.env_norm,
            "lambda_t": self.times.tolist(),
            "amplitude": self.amplitude.tolist(),
            "probability": self.probability.tolist(),
            "bound": self.bound.tolist(),
        }


@dataclass
class Counterexample:
    model: str
    seed: int | None
    lambda_t: float
    measured: float
    bound: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BoundCheck:
    runs: list[SimulationRun]
    passed: bool
    counterexamples: list[Counterexample] = field(default_factory=list)
    slopes: list[float | None] = field(default_factory=list)
    max_ratio: float = 0.0

    @property
    def min_slope(self) -> float | None:
        vals = [s for s in self.slopes if s is not None]
        return min(vals) if vals else None

    def to_dict(self) -> dict:
        return {
            "metric": METRIC,
            "passed": self.passed,
            "max_ratio": self.max_ratio,
            "slopes": self.slopes,
            "counterexamples": [c.to_dict() for c in self.counterexamples],
            "runs": [r.to_dict() for r in self.runs],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda_t", "a", "p", "bound", "seed"])
        for run in self.runs:
            for row in zip(run.times, run.amplitude, run.probability, run.bound):
                w.writerow([repr(float(x)) for x in row] + ["" if run.seed is None else run.seed])
        return buf.getvalue()


def slope_fit(times, values, floor: float = 1e-12) -> float | None:
    """Least-squares slope of ``log(values)`` against ``log(times)`` over values above ``floor``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    mask = v > floor
    if mask.sum() < 2:
        return None
    return float(np.polyfit(np.log(t[mask]), np.log(v[mask]), 1)[0])


def maximally_entangled(code: Code) -> np.ndarray:
    """``|Phi> = K^(-1/2) sum_k |k>_R (x) V|k>`` as a ``(K, N)`` array."""
    return code.isometry.T / np.sqrt(code.logical_dim)


def _prepared(code: Code, protect: QuantumOperation | None) -> list[np.ndarray]:
    """Branches ``(I (x) A_i)|Phi>`` of the protected input, each ``(K, N)``."""
    phi = maximally_entangled(code)
    if protect is None:
        return [phi]
    return [phi @ a.T for a in protect.kraus]


def evolve_hamiltonian(
    spec: InteractionSpec,
    state: np.ndarray,
    t: float,
    steps: int = 1,
    env_hamiltonian: np.ndarray | None = None,
) -> np.ndarray:
    """Propagate a joint system (x) environment state under ``J + I (x) H_B``.

    ``state`` may be a vector of length ``N * N_B`` or an array whose last
    axis has that length (leading axes, e.g. a reference system, are left
    untouched).  ``steps`` splits ``t`` into equal exact exponentials.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = spec.joint_hamiltonian(env_hamiltonian)
    u = scipy.linalg.expm(-1j * h * (t / steps))
    psi = np.asarray(state, dtype=complex)
    for _ in range(steps):
        psi = psi @ u.T
    norm_in = np.linalg.norm(state)
    if abs(np.linalg.norm(psi) - norm_in) > tolerances().norm * max(1.0, norm_in) * 10:
        raise RuntimeError("norm not preserved by Hamiltonian evolution")
    return psi


def _leakage(psi: np.ndarray, phi: np.ndarray, recovery: QuantumOperation) -> float:
    """``sum_m || (1 - |Phi><Phi| (x) I_B) (I (x) A_m (x) I) psi ||^2`` for ``psi`` of shape ``(K, N, N_B)``."""
    total = 0.0
    for a in recovery.kraus:
        x = np.einsum("ij,kjb->kib", a, psi)
        overlap = np.einsum("ki,kib->b", phi.conj(), x)
        resid = x - phi[:, :, None] * overlap[None, None, :]
        total += float(np.vdot(resid, resid).real)
    return total


def error_amplitude(
    spec: InteractionSpec,
    code: Code,
    t: float,
    recovery: QuantumOperation | None = None,
    protect: QuantumOperation | None = None,
    env_hamiltonian: np.ndarray | None = None,
    env_state: np.ndarray | None = None,
) -> tuple[float, float]:
    """``(a, p)`` of the entanglement-fidelity protocol at time ``t``."""
    recovery = recovery or QuantumOperation.identity(code.system_dim)
    psi_b = env_state if env_state is not None else _default_env_state(spec)
    u = scipy.linalg.expm(-1j * spec.joint_hamiltonian(env_hamiltonian) * t)
    return _amplitude_from_unitary(spec, code, u, recovery, protect, psi_b)


def _default_env_state(spec: InteractionSpec) -> np.ndarray:
    if spec.env_initial_state is not None:
        return spec.env_initial_state
    psi = np.zeros(spec.env_dim, dtype=complex)
    psi[0] = 1.0
    return psi


def _amplitude_from_unitary(spec, code, u, recovery, protect, psi_b) -> tuple[float, float]:
    n, nb = spec.system_dim, spec.env_dim
    phi = maximally_entangled(code)
    u4 = u.reshape(n, nb, n, nb)
    p = 0.0
    for branch in _prepared(code, protect):
        joint = np.einsum("ki,b->kib", branch, psi_b)
        evolved = np.einsum("iajb,kjb->kia", u4, joint)
        p += _leakage(evolved, phi, recovery)
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p), p


def check_amplitude_bound(
    spec: InteractionSpec,
    code: Code,
    e: int,
    grid: np.ndarray | None = None,
    env_draws: int = 20,
    recovery: QuantumOperation | None = None,
    protect: QuantumOperation | None = None,
    seed: int = DEFAULT_SEED,
    env_scales: tuple[float, ...] = (0.0, 1.0, 10.0),
    progress=None,
) -> BoundCheck:
    """Measure ``a(t)`` against ``(lambda t)^(e+1)/(e+1)!`` for random environment Hamiltonians.

    Draw ``i`` uses seed ``seed + i``: a Gaussian Hermitian ``H_B`` rescaled to
    operator norm ``env_scales[i % len] * lambda`` and, unless the spec fixes
    one, a random initial environment state.  The grid is in units of
    ``lambda t``; only points with ``lambda t <= 1`` are judged.
    """
    spec.validate()
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    lam = noise_strength_hamiltonian(spec)
    recovery = recovery or QuantumOperation.identity(code.system_dim)
    tol = tolerances().bound
    bound = bound_envelope(grid, e)
    runs, cex, slopes = [], [], []
    max_ratio = 0.0
    for i in range(env_draws):
        rng = np.random.default_rng(seed + i)
        hb = random_hermitian(spec.env_dim, rng)
        scale = env_scales[i % len(env_scales)]
        norm = np.linalg.norm(hb, 2)
        hb = hb * (scale * lam / norm) if norm > 0 else hb
        psi_b = spec.env_initial_state if spec.env_initial_state is not None else random_state(spec.env_dim, rng)
        h = spec.joint_hamiltonian(hb)
        w, v = np.linalg.eigh(h)
        amp = np.zeros_like(grid)
        prob = np.zeros_like(grid)
        for k, lt in enumerate(grid):
            t = lt / lam if lam > 0 else 0.0
            u = (v * np.exp(-1j * w * t)) @ v.conj().T
            amp[k], prob[k] = _amplitude_from_unitary(spec, code, u, recovery, protect, psi_b)
        run = SimulationRun("hamiltonian", code.name, e, lam, grid.copy(), amp, prob, bound.copy(), seed + i, scale * lam)
        runs.append(run)
        judged = grid <= 1.0 + 1e-12
        for k in np.nonzero(judged & (amp > bound + tol))[0]:
            cex.append(Counterexample("hamiltonian", seed + i, float(grid[k]), float(amp[k]), float(bound[k])))
        max_ratio = max(max_ratio, float(np.max(run.ratios()[judged], initial=0.0)))
        low = grid <= grid[0] * 10 * (1 + 1e-9)
        slopes.append(slope_fit(grid[low], amp[low]))
        if progress is not None:
            progress(f"draw {i + 1}/{env_draws}: max a/bound = {np.max(run.ratios()[judged], initial=0.0):.3g}")
    return BoundCheck(runs, not cex, cex, slopes, max_ratio)


def lindblad_superoperator(spec: MarkovSpec) -> np.ndarray:
    """Generator ``rho -> sum L rho L^dagger + V rho + rho V^dagger`` on row-major ``vec(rho)``."""
    n = spec.dim
    eye = np.eye(n)
    gen = np.kron(spec.drift, eye) + np.kron(eye, spec.drift.conj())
    for op in spec.lindblad_ops:
        gen = gen + np.kron(op, op.conj())
    return gen


def _check_state(rho: np.ndarray) -> None:
    tol = tolerances().trace_preservation
    if abs(np.trace(rho) - 1.0) > tol * 10:
        raise RuntimeError(f"trace not preserved: tr = {np.trace(rho)}")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if w[0] < -tol * 10:
        raise RuntimeError(f"state lost positivity: min eigenvalue {w[0]:.3g}")


def evolve_lindblad(spec: MarkovSpec, rho: np.ndarray, t: float) -> np.ndarray:
    """``exp(t L)(rho)`` with ``L`` the dense superoperator of the generator."""
    spec.validate()
    n = spec.dim
    prop = scipy.linalg.expm(t * lindblad_superoperator(spec))
    out = (prop @ np.asarray(rho, dtype=complex).reshape(-1)).reshape(n, n)
    _check_state(out)
    return out


def _apply_on_system(channel, rho_rs: np.ndarray, k: int, n: int) -> np.ndarray:
    """Apply a superoperator matrix (row-major vec) to the system factor of a ``(K N) x (K N)`` state."""
    r = rho_rs.reshape(k, n, k, n).transpose(0, 2, 1, 3).reshape(k * k, n * n)
    out = r @ channel.T
    return out.reshape(k, k, n, n).transpose(0, 2, 1, 3).reshape(k * n, k * n)


def _kraus_superoperator(kraus: list[np.ndarray]) -> np.ndarray:
    return sum(np.kron(a, a.conj()) for a in kraus)


def _entanglement_error(
    rho_rs: np.ndarray, code: Code, recovery: QuantumOperation
) -> float:
    k, n = code.logical_dim, code.system_dim
    out = _apply_on_system(_kraus_superoperator(recovery.kraus), rho_rs, k, n)
    phi = maximally_entangled(code).reshape(-1)
    fid = float(np.vdot(phi, out @ phi).real)
    return min(max(1.0 - fid, 0.0), 1.0)


def _input_state(code: Code, protect: QuantumOperation | None) -> np.ndarray:
    k, n = code.logical_dim, code.system_dim
    rho = np.zeros((k * n, k * n), dtype=complex)
    for branch in _prepared(code, protect):
        v = branch.reshape(-1)
        rho += np.outer(v, v.conj())
    return rho


def check_markov_bound(
    spec: MarkovSpec,
    code: Code,
    e: int,
    grid: np.ndarray | None = None,
    recovery: QuantumOperation | None = None,
    protect: QuantumOperation | None = None,
) -> BoundCheck:
    """Error probability under Lindblad evolution against ``(lambda t)^(e+1)/(e+1)!``."""
    spec.validate()
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    lam = noise_strength_markov(spec)
    recovery = recovery or QuantumOperation.identity(code.system_dim)
    gen = lindblad_superoperator(spec)
    rho0 = _input_state(code, protect)
    k, n = code.logical_dim, code.system_dim
    prob = np.zeros_like(grid)
    for i, lt in enumerate(grid):
        t = lt / lam if lam > 0 else 0.0
        rho_t = _apply_on_system(scipy.linalg.expm(t * gen), rho0, k, n)
        _check_state(rho_t)
        prob[i] = _entanglement_error(rho_t, code, recovery)
    return _judge("lindblad", code, e, lam, grid, prob)


def _judge(model: str, code: Code, e: int, lam: float, grid: np.ndarray, prob: np.ndarray) -> BoundCheck:
    bound = bound_envelope(grid, e)
    run = SimulationRun(model, code.name, e, lam, grid.copy(), np.sqrt(prob), prob, bound)
    tol = tolerances().bound
    judged = grid <= 1.0 + 1e-12
    cex = [
        Counterexample(model, None, float(grid[i]), float(prob[i]), float(bound[i]))
        for i in np.nonzero(judged & (prob > bound + tol))[0]
    ]
    low = grid <= grid[0] * 10 * (1 + 1e-9)
    return BoundCheck(
        [run], not cex, cex, [slope_fit(grid[low], prob[low])], float(np.max(run.ratios()[judged], initial=0.0))
    )


def apply_discrete(spec: DiscreteSpec, rho: np.ndarray) -> np.ndarray:
    """Apply each operation's Kraus map in the listed order."""
    spec.validate()
    out = np.asarray(rho, dtype=complex)
    for fam in spec.operations:
        out = sum(a @ out @ dagger(a) for a in fam.kraus())
    if abs(np.trace(out) - np.trace(rho)) > tolerances().trace_preservation * 10:
        raise RuntimeError("trace not preserved by discrete operations")
    return out


def check_discrete_bound(
    spec: DiscreteSpec,
    code: Code,
    e: int,
    recovery: QuantumOperation | None = None,
    protect: QuantumOperation | None = None,
) -> BoundCheck:
    """Error probability of one pass of the discrete operations, judged at ``t = 1``."""
    spec.validate()
    lam = noise_strength_discrete(spec)
    recovery = recovery or QuantumOperation.identity(code.system_dim)
    k, n = code.logical_dim, code.system_dim
    rho = _input_state(code, protect)
    for fam in spec.operations:
        rho = _apply_on_system(_kraus_superoperator(fam.kraus()), rho, k, n)
    _check_state(rho)
    prob = np.array([_entanglement_error(rho, code, recovery)])
    return _judge_at_unit_time(code, e, lam, prob)


def _judge_at_unit_time(code: Code, e: int, lam: float, prob: np.ndarray) -> BoundCheck:
    bound = bound_envelope(np.array([lam]), e)
    run = SimulationRun("discrete", code.name, e, lam, np.array([lam]), np.sqrt(prob), prob, bound)
    tol = tolerances().bound
    cex = []
    if prob[0] > bound[0] + tol:
        cex.append(Counterexample("discrete", None, lam, float(prob[0]), float(bound[0])))
    return BoundCheck([run], not cex, cex, [None], float(run.ratios()[0]))
