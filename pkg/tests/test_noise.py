import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graded_qec import fixtures as fx
from graded_qec import noise
from graded_qec.algebra import (
    DiscreteSpec,
    InteractionSpec,
    MarkovSpec,
    SpecError,
    build_j1,
    full_algebra,
    noise_strength_discrete,
    noise_strength_markov,
)
from graded_qec.codes import Code, QuantumOperation, build_recovery, noiseless_subsystem_code
from graded_qec.operators import PAULI, random_density, random_hermitian, random_state
from graded_qec.structure import decompose
from strategies import seeds


def partial_trace_env(psi, n, nb):
    m = psi.reshape(n, nb)
    return m @ m.conj().T


@pytest.fixture(scope="module")
def collective_subsystem():
    spec = fx.collective_spec(3)
    dec = decompose(full_algebra(build_j1(spec))[0])
    block = next(b for b in dec.blocks if b.d_z == 2)
    code, decoder = noiseless_subsystem_code(block)
    return spec, block, code, decoder


def test_zero_coupling_leaves_system_state_unchanged(rng):
    spec = fx.zero_coupling_spec(2)
    psi_s = random_state(4, rng)
    psi = np.kron(psi_s, random_state(2, rng))
    out = noise.evolve_hamiltonian(spec, psi, 1.7, env_hamiltonian=random_hermitian(2, rng))
    assert np.allclose(partial_trace_env(out, 4, 2), np.outer(psi_s, psi_s.conj()), atol=1e-12)


def test_dephasing_closed_form():
    g = 0.8
    spec = fx.dephasing_qubit_spec(g)
    plus = np.array([1, 1]) / np.sqrt(2)
    psi = np.kron(plus, [1, 0])
    # coherence is cos(2 g t) / 2: fully dephased at g t = pi/4, a phase flip at g t = pi/2
    out = noise.evolve_hamiltonian(spec, psi, math.pi / (4 * g))
    assert np.allclose(partial_trace_env(out, 2, 2), np.eye(2) / 2, atol=1e-12)
    minus = np.array([1, -1]) / np.sqrt(2)
    out = noise.evolve_hamiltonian(spec, psi, math.pi / (2 * g))
    assert np.allclose(partial_trace_env(out, 2, 2), np.outer(minus, minus), atol=1e-12)
    # general time: coherence cos(2 g t)
    t = 0.37
    rho = partial_trace_env(noise.evolve_hamiltonian(spec, psi, t), 2, 2)
    assert rho[0, 1] == pytest.approx(0.5 * math.cos(2 * g * t), abs=1e-12)


def test_evolution_steps_agree_and_validate():
    spec = fx.dephasing_qubit_spec(1.0)
    psi = np.kron([1, 0], [0.6, 0.8])
    a = noise.evolve_hamiltonian(spec, psi, 0.9, steps=1, env_hamiltonian=PAULI["Z"])
    b = noise.evolve_hamiltonian(spec, psi, 0.9, steps=7, env_hamiltonian=PAULI["Z"])
    assert np.allclose(a, b, atol=1e-12)
    with pytest.raises(ValueError):
        noise.evolve_hamiltonian(spec, psi, 0.9, steps=0)


def test_subsystem_factor_unchanged_by_joint_evolution(collective_subsystem, rng):
    spec, block, _, _ = collective_subsystem
    z = random_state(2, rng)
    c = np.zeros(block.d_c)
    c[0] = 1.0
    psi_s = block.embed(c, z)
    psi = np.kron(psi_s, random_state(2, rng))
    out = noise.evolve_hamiltonian(spec, psi, 2.3, env_hamiltonian=random_hermitian(2, rng))
    rho = partial_trace_env(out, 8, 2)
    assert np.allclose(block.reduced_z(rho), np.outer(z, z.conj()), atol=1e-8)


def test_trivial_code_amplitude_matches_sine():
    # |Phi> with the qubit; the error branch is orthogonal, so a = |sin(g t)|
    g = 1.3
    spec = fx.dephasing_qubit_spec(g)
    for t in (0.01, 0.2, 0.7):
        a, p = noise.error_amplitude(spec, Code.full_space(2), t)
        assert a == pytest.approx(abs(math.sin(g * t)), abs=1e-12)
        assert p == pytest.approx(a * a)


def test_error_amplitude_with_recovery_and_protection():
    spec = fx.linear_one_qubit_env_spec(5)
    code = fx.five_qubit_code()
    rec = build_recovery(code, build_j1(spec))
    a_none, _ = noise.error_amplitude(spec, code, 0.01)
    a_rec, _ = noise.error_amplitude(spec, code, 0.01, recovery=rec)
    assert a_rec < a_none
    a_prot, _ = noise.error_amplitude(spec, code, 0.01, recovery=rec, protect=QuantumOperation.identity(32))
    assert a_prot == pytest.approx(a_rec)


def test_trivial_code_bound_holds_across_environments():
    check = noise.check_amplitude_bound(fx.dephasing_qubit_spec(), Code.full_space(2), 0, env_draws=20)
    assert check.passed
    assert len(check.runs) == 20
    assert check.min_slope >= 0.9
    for run in check.runs:
        assert np.all(run.times[1:] > run.times[:-1])
        assert np.allclose(run.amplitude, np.sqrt(run.probability))


def test_environment_norms_cycle_through_scales():
    spec = fx.dephasing_qubit_spec(2.0)
    check = noise.check_amplitude_bound(spec, Code.full_space(2), 0, env_draws=6)
    assert [r.env_norm for r in check.runs] == pytest.approx([0.0, 2.0, 20.0] * 2)


def test_five_qubit_code_slope_two():
    spec = fx.linear_one_qubit_env_spec(5)
    code = fx.five_qubit_code()
    check = noise.check_amplitude_bound(spec, code, 1, env_draws=3, recovery=build_recovery(code, build_j1(spec)))
    assert check.passed
    assert check.min_slope == pytest.approx(2.0, abs=0.1)


def test_noiseless_subsystem_has_zero_error(collective_subsystem):
    spec, _, code, decoder = collective_subsystem
    check = noise.check_amplitude_bound(spec, code, 0, env_draws=4, recovery=decoder)
    assert check.passed
    assert max(float(np.max(r.amplitude)) for r in check.runs) <= 1e-8


def test_bound_violation_produces_counterexample():
    # claiming e = 1 for an unprotected qubit must fail at some grid point
    check = noise.check_amplitude_bound(fx.dephasing_qubit_spec(), Code.full_space(2), 1, env_draws=2)
    assert not check.passed
    cex = check.counterexamples[0]
    assert cex.measured > cex.bound
    assert set(cex.to_dict()) == {"model", "seed", "lambda_t", "measured", "bound"}


def test_simulation_run_rejects_unsorted_times():
    with pytest.raises(ValueError):
        noise.SimulationRun("hamiltonian", "c", 0, 1.0, np.array([0.2, 0.1]), np.zeros(2), np.zeros(2), np.zeros(2))


def test_csv_and_json_outputs():
    check = noise.check_amplitude_bound(fx.dephasing_qubit_spec(), Code.full_space(2), 0, env_draws=2,
                                        grid=noise.default_grid(1e-2, 1, 4))
    lines = check.to_csv().strip().splitlines()
    assert lines[0] == "lambda_t,a,p,bound,seed"
    assert len(lines) == 1 + 2 * 4
    doc = check.to_dict()
    assert doc["metric"]["protocol"] == "entanglement-fidelity"
    assert len(doc["runs"]) == 2


def test_slope_fit():
    t = np.logspace(-3, -2, 8)
    assert noise.slope_fit(t, 3 * t**2) == pytest.approx(2.0)
    assert noise.slope_fit(t, np.zeros_like(t)) is None


def test_lindblad_unitary_case(rng):
    h = random_hermitian(3, rng)
    spec = MarkovSpec([], -1j * h)
    rho = random_density(3, rng)
    from scipy.linalg import expm

    u = expm(-1j * h * 0.8)
    assert np.allclose(noise.evolve_lindblad(spec, rho, 0.8), u @ rho @ u.conj().T, atol=1e-12)


@pytest.mark.parametrize("gamma,t", [(1.0, 0.5), (0.3, 2.0), (2.0, 0.05)])
def test_amplitude_damping_population(gamma, t):
    spec = fx.amplitude_damping_spec(gamma)
    out = noise.evolve_lindblad(spec, np.diag([0.0, 1.0]).astype(complex), t)
    assert out[1, 1].real == pytest.approx(math.exp(-gamma * t), abs=1e-9)


def test_collective_dephasing_fixed_state():
    spec = fx.collective_dephasing_lindblad_spec(2)
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(noise.evolve_lindblad(spec, rho, 3.0), rho, atol=1e-12)


def test_lindblad_requires_trace_preserving_generator():
    bad = MarkovSpec([np.array([[0, 1], [0, 0]], dtype=complex)], np.zeros((2, 2)))
    with pytest.raises(SpecError):
        noise.evolve_lindblad(bad, np.eye(2) / 2, 1.0)


@given(seeds, st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.0, max_value=2.0))
def test_lindblad_semigroup(seed, t1, t2):
    rng = np.random.default_rng(seed)
    ops = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))]
    spec = MarkovSpec(ops, fx.complete_drift(ops, random_hermitian(2, rng)))
    rho = random_density(2, rng)
    once = noise.evolve_lindblad(spec, rho, t1 + t2)
    twice = noise.evolve_lindblad(spec, noise.evolve_lindblad(spec, rho, t1), t2)
    assert np.allclose(once, twice, atol=1e-9)
    assert np.trace(once).real == pytest.approx(1.0, abs=1e-9)


def test_amplitude_damping_trivial_code_closed_form():
    gamma = 0.7
    spec = fx.amplitude_damping_spec(gamma)
    check = noise.check_markov_bound(spec, Code.full_space(2), 0)
    assert check.passed
    run = check.runs[0]
    lam = noise_strength_markov(spec)
    t = run.times / lam
    q = 1 - np.exp(-gamma * t)
    # entanglement fidelity of amplitude damping is |tr A_0 / 2|^2
    expected = 1 - ((1 + np.sqrt(1 - q)) / 2) ** 2
    assert np.allclose(run.probability, expected, atol=1e-10)
    assert np.all(run.probability <= run.times + 1e-8)


def test_collective_lindblad_noiseless_subsystem(collective_subsystem):
    _, _, code, decoder = collective_subsystem
    check = noise.check_markov_bound(fx.collective_lindblad_spec(3), code, 0, recovery=decoder)
    assert check.passed
    assert np.max(check.runs[0].probability) <= 1e-8


def test_noiseless_subspace_of_collective_dephasing():
    spec = fx.collective_dephasing_lindblad_spec(2)
    check = noise.check_markov_bound(spec, fx.singlet_pair_code(), 0)
    assert np.max(check.runs[0].probability) <= 1e-12


def test_discrete_single_bit_flip_closed_form():
    p = 0.05
    spec = fx.bit_flip_spec(p)
    check = noise.check_discrete_bound(spec, Code.full_space(2), 0)
    assert check.passed
    assert check.runs[0].probability[0] == pytest.approx(p)
    assert check.runs[0].times[0] == pytest.approx(noise_strength_discrete(spec))


def test_apply_discrete_order_and_trace(rng):
    spec = fx.independent_bit_flip_spec(0.2, 2)
    rho = random_density(4, rng)
    out = noise.apply_discrete(spec, rho)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
    manual = rho
    for fam in spec.operations:
        manual = sum(k @ manual @ k.conj().T for k in fam.kraus())
    assert np.allclose(out, manual)


def test_discrete_two_operations_pass_at_unit_time():
    check = noise.check_discrete_bound(fx.independent_bit_flip_spec(0.05, 2), Code.full_space(4), 0)
    assert check.passed


def test_bound_envelope():
    assert noise.bound_envelope(0.5, 1) == pytest.approx(0.125)
    assert noise.bound_envelope(np.array([1.0]), 0)[0] == 1.0


@given(seeds)
def test_stronger_code_stays_under_weaker_envelope(seed):
    spec = fx.linear_one_qubit_env_spec(5, seed=seed % 1000)
    code = fx.five_qubit_code()
    rec = build_recovery(code, build_j1(spec))
    grid = noise.default_grid(1e-3, 1e-1, 5)
    check = noise.check_amplitude_bound(spec, code, 1, grid, env_draws=1, recovery=rec, seed=seed)
    run = check.runs[0]
    assert np.all(run.amplitude <= noise.bound_envelope(grid, 0) + 1e-8)
