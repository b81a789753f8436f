"""End-to-end acceptance checks, one per criterion.

Each ``criterion_N`` returns ``(passed, detail)``. Under pytest every result is
collected into a summary section; ``python tests/test_acceptance.py`` prints the
same lines directly.
"""

import math
import re
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from graded_qec import fixtures as fx
from graded_qec import noise
from graded_qec.algebra import build_j1, full_algebra, grade, noise_strength_markov, standard_interaction
from graded_qec.cli import three_qubit_example
from graded_qec.codes import Code, build_recovery, detects_all, kl_correctable, min_distance, noiseless_subsystem_code
from graded_qec.operators import single_qubit_pauli, span
from graded_qec.search import (
    alpha_vectors,
    certificate_residual,
    convex_partition,
    greedy_c_code,
    search_quantum_code,
)
from graded_qec.structure import commutant, decompose

sys.path.insert(0, str(Path(__file__).resolve().parent))

import conftest  # noqa: E402
from oracles import exhaustive_partition_exists  # noqa: E402
from test_search import bdet_residual, collective_dephasing, random_integer_points  # noqa: E402
from test_structure import FIXTURE_ALGEBRAS  # noqa: E402

SEED = 0x5EED


def _collective_subsystem():
    spec = fx.collective_spec(3)
    dec = decompose(full_algebra(build_j1(spec))[0])
    block = next(b for b in dec.blocks if b.d_z == 2)
    code, decoder = noiseless_subsystem_code(block)
    return spec, code, decoder


def criterion_1():
    start = time.perf_counter()
    res = three_qubit_example(SEED)
    elapsed = time.perf_counter() - start
    ok = res["passed"] and elapsed <= 5.0
    return ok, (
        f"blocks {sorted(map(tuple, res['blocks']))}, commutant dim {res['commutant_dim']}, "
        f"s residual {max(res['scalar_commutant_residuals']):.1e}, "
        f"Z change {res['subsystem_trace_distance_change']:.1e}, {elapsed:.1f}s"
    )


def _bit_flip_space(n_qubits):
    return span([np.eye(2**n_qubits), *(single_qubit_pauli(n_qubits, k, "X") for k in range(n_qubits))])


def criterion_2():
    start = time.perf_counter()
    five = fx.five_qubit_code()
    linear5 = standard_interaction(5, "linear")
    g5 = grade(linear5, 1)
    d5 = min_distance(five, g5)
    ok = d5 == 3 and kl_correctable(five, g5.level(1))
    spec, ns_code, _ = _collective_subsystem()
    pairs = [
        ("five-qubit/linear-5", five, g5),
        ("repetition-3/bit-flip", fx.repetition_code(3), grade(_bit_flip_space(3), 1)),
        ("singlet/collective-dephasing-2", fx.singlet_pair_code(), grade(collective_dephasing(2), 1)),
        ("noiseless-subsystem/collective-3", ns_code, grade(build_j1(spec), 1)),
        ("full-space-2/linear-1", Code.full_space(2), grade(standard_interaction(1, "linear"), 1)),
    ]
    found = []
    for name, code, g in pairs:
        d = min_distance(code, g)
        # infinite distance: check the first two correctable levels
        e_max = 2 if math.isinf(d) else int((d - 1) // 2)
        for e in range(e_max + 1):
            if not kl_correctable(code, g.level(e)):
                ok = False
                found.append(f"{name} fails e={e}")
        found.append(f"{name} d={d}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed <= 60.0
    return ok, f"[[5,1,3]] distance {d5}; " + ", ".join(found) + f"; {elapsed:.1f}s"


def criterion_3():
    worst = 0.0
    dims = []
    ok = True
    for n_qubits, kind in [(3, "collective"), (2, "linear"), (2, "classical")]:
        e = standard_interaction(n_qubits, kind)
        need = -(-e.ambient_dim // e.rank)
        for seed in range(10):
            code = greedy_c_code(e, seed=seed)
            res = bdet_residual(code, e)
            worst = max(worst, res)
            ok = ok and code.logical_dim >= need and res <= 1e-8
        dims.append(f"{kind}-{n_qubits}: dim {code.logical_dim} >= {need}")
    return ok, ", ".join(dims) + f", worst bdet residual {worst:.1e}"


def criterion_4():
    ok = True
    notes = []
    cases = [
        ("collective-5", standard_interaction(5, "collective")),
        ("collective-dephasing-3", collective_dephasing(3)),
        ("collective-dephasing-4 J2", grade(collective_dephasing(4), 2).level(2)),
    ]
    for name, e in cases:
        rep = search_quantum_code(e)
        if rep.tverberg_r < 2 or rep.status != "feasible":
            notes.append(f"{name}: r={rep.tverberg_r} {rep.status}")
            continue
        points = np.array([a.coords for a in alpha_vectors(greedy_c_code(e), e)])
        res = certificate_residual(points, rep.certificate)
        good = rep.achieved_dim >= rep.tverberg_r and detects_all(rep.code, e) and res <= 1e-8
        ok = ok and good
        notes.append(f"{name}: dim {rep.achieved_dim} >= r={rep.tverberg_r}, residual {res:.1e}")
    mismatches = 0
    for seed in range(100):
        pts, r = random_integer_points(seed)
        result = convex_partition(np.array(pts, dtype=float), r)
        if result.feasible != exhaustive_partition_exists(pts, r):
            mismatches += 1
        elif result.feasible and result.certificate.residual > 1e-8:
            mismatches += 1
    ok = ok and mismatches == 0
    return ok, "; ".join(notes) + f"; oracle mismatches {mismatches}/100"


def criterion_5():
    start = time.perf_counter()
    grid = noise.default_grid(1e-3, 1.0, 16)
    ok = True
    notes = []
    five = fx.five_qubit_code()
    spec_b = fx.linear_one_qubit_env_spec(5)
    spec_c, ns_code, decoder = _collective_subsystem()
    cases = [
        ("a", fx.dephasing_qubit_spec(), Code.full_space(2), 0, None),
        ("b", spec_b, five, 1, build_recovery(five, build_j1(spec_b))),
        ("c", spec_c, ns_code, 0, decoder),
    ]
    for name, spec, code, e, rec in cases:
        check = noise.check_amplitude_bound(spec, code, e, grid, env_draws=20, recovery=rec)
        slope = check.min_slope
        slope_ok = slope is None or slope >= e + 1 - 0.1
        good = check.passed and slope_ok and len(check.runs) >= 20 and all(len(r.times) == 16 for r in check.runs)
        ok = ok and good
        slope_txt = "n/a (a = 0)" if slope is None else f"{slope:.3f}"
        notes.append(f"({name}) max a/bound {check.max_ratio:.2g}, slope {slope_txt}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed <= 600.0
    return ok, "; ".join(notes) + f"; {elapsed:.1f}s"


def criterion_6():
    start = time.perf_counter()
    gamma = 0.7
    ad = fx.amplitude_damping_spec(gamma)
    check = noise.check_markov_bound(ad, Code.full_space(2), 0)
    run = check.runs[0]
    lam = noise_strength_markov(ad)
    excited = np.diag([0.0, 1.0]).astype(complex)
    closed = max(
        abs(noise.evolve_lindblad(ad, excited, t)[1, 1].real - math.exp(-gamma * t)) for t in run.times / lam
    )
    ad_ok = check.passed and bool(np.all(run.probability <= run.times + 1e-8)) and closed <= 1e-9
    _, ns_code, decoder = _collective_subsystem()
    ns = noise.check_markov_bound(fx.collective_lindblad_spec(3), ns_code, 0, recovery=decoder)
    ns_p = float(np.max(ns.runs[0].probability))
    discrete = [
        noise.check_discrete_bound(fx.bit_flip_spec(0.05), Code.full_space(2), 0),
        noise.check_discrete_bound(fx.independent_bit_flip_spec(0.05, 2), Code.full_space(4), 0),
    ]
    disc_ok = all(c.passed for c in discrete)
    elapsed = time.perf_counter() - start
    ok = ad_ok and ns.passed and ns_p <= 1e-8 and disc_ok and elapsed <= 120.0
    return ok, (
        f"AD max p/(lambda t) {check.max_ratio:.3f}, closed-form error {closed:.1e}; "
        f"collective Lindblad max p {ns_p:.1e}; discrete {'pass' if disc_ok else 'FAIL'}; {elapsed:.1f}s"
    )


def criterion_7():
    start = time.perf_counter()
    ok = True
    failures = []
    for name, (make, expected) in sorted(FIXTURE_ALGEBRAS.items()):
        alg = make()
        comm = commutant(alg)
        dec = decompose(alg)
        checks = {
            "double commutant": commutant(comm).same_space(alg, tol=1e-8),
            "dims": dec.dims() == expected,
            "dim A": alg.rank == sum(dc * dc for dc, _ in dec.dims()),
            "dim Z": comm.rank == sum(dz * dz for _, dz in dec.dims()),
            "seeds": all(decompose(alg, seed=s).dims() == expected for s in range(5)),
        }
        for what, passed in checks.items():
            if not passed:
                ok = False
                failures.append(f"{name}: {what}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed <= 120.0
    return ok, f"{len(FIXTURE_ALGEBRAS)} algebras, failures {failures or 'none'}; {elapsed:.1f}s"


DETERMINISM_COMMANDS = [
    ["algebra", "builtin:three-qubit-collective"],
    ["decompose", "builtin:three-qubit-collective"],
    ["code", "search-q", "builtin:three-qubit-collective", "--distance", "2"],
    ["simulate", "hamiltonian", "builtin:dephasing-qubit", "builtin:full-space-2", "--env-draws", "4"],
    ["example", "three-qubit-collective", "--env-draws", "4"],
]
_TIMESTAMP = re.compile(rb'^\s*"generated_at": .*\n', re.MULTILINE)


def criterion_8(workdir: Path):
    differing = []
    for i, cmd in enumerate(DETERMINISM_COMMANDS):
        outputs = []
        for rep in range(2):
            out = workdir / f"{i}-{rep}"
            subprocess.run(
                [sys.executable, "-m", "graded_qec.cli", *cmd, "--seed", "7", "--out", str(out), "-q"],
                check=True, capture_output=True,
            )
            outputs.append({p.name: _TIMESTAMP.sub(b"", p.read_bytes()) for p in sorted(out.iterdir())})
        if outputs[0] != outputs[1]:
            differing.append(" ".join(cmd[:2]))
    return not differing, f"{len(DETERMINISM_COMMANDS)} commands run twice, differing: {differing or 'none'}"


def _record(number, result):
    passed, detail = result
    conftest.ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, detail


def test_criterion_1_three_qubit_example():
    _record(1, criterion_1())


def test_criterion_2_distance_and_correctability():
    _record(2, criterion_2())


def test_criterion_3_greedy_c_codes():
    _record(3, criterion_3())


def test_criterion_4_partition_codes():
    _record(4, criterion_4())


def test_criterion_5_hamiltonian_bound():
    _record(5, criterion_5())


def test_criterion_6_markov_and_discrete_bounds():
    _record(6, criterion_6())


def test_criterion_7_structure_invariants():
    _record(7, criterion_7())


def test_criterion_8_determinism(tmp_path):
    _record(8, criterion_8(tmp_path))


if __name__ == "__main__":
    import tempfile

    runners = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]
    all_ok = True
    for k, fn in enumerate(runners, start=1):
        passed, detail = fn()
        all_ok &= passed
        print(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}", flush=True)
    with tempfile.TemporaryDirectory() as tmp:
        passed, detail = criterion_8(Path(tmp))
    all_ok &= passed
    print(f"criterion 8: {'PASS' if passed else 'FAIL'}  {detail}")
    sys.exit(0 if all_ok else 1)
