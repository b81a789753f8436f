"""Command-line front end.

Reports are written as JSON (plus CSV for time series) into ``--out``; a
plain-text summary goes to standard output and progress to standard error.
Exit status: 0 success, 1 an invariant or bound violation was found, 2 bad
input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy.linalg

from graded_qec import fixtures, noise
from graded_qec.algebra import (
    DiscreteSpec,
    InteractionSpec,
    MarkovSpec,
    NoiseSpec,
    SpecError,
    build_j1,
    full_algebra,
    grade,
    noise_strength,
)
from graded_qec.codes import (
    Code,
    QuantumOperation,
    build_recovery,
    kl_correctable,
    min_c_distance,
    min_distance,
    noiseless_subsystem_code,
)
from graded_qec.config import DEFAULT_SEED, Tolerances, use_tolerances
from graded_qec.operators import OperatorSpace, random_density
from graded_qec.search import search_c_code, search_quantum_code
from graded_qec.serialize import (
    FormatError,
    code_from_json,
    code_to_json,
    decomposition_to_json,
    json_number,
    search_report_to_json,
    spec_from_json,
)
from graded_qec.structure import DecompositionError, commutant, decompose, noiseless_subsystems, subsystem_state_change

log = logging.getLogger("graded_qec")

SEED_ENV = "GRADED_QEC_SEED"
EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
NOISELESS_CODE = "noiseless-subsystem"


class InputError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    inputs: list[str]
    seed: int
    tolerances: Tolerances
    out_dir: Path
    grid: tuple[float, float, int] = (1e-3, 1.0, 16)
    env_draws: int = 20
    extra: dict = field(default_factory=dict)


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw, 0)
    except ValueError as exc:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer") from exc


def _parse_tol(items: list[str]) -> Tolerances:
    overrides = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects name=value, got {item!r}")
        try:
            overrides[name.strip()] = float(value)
        except ValueError as exc:
            raise InputError(f"--tol {name}: {value!r} is not a number") from exc
    try:
        return Tolerances().replace(**overrides)
    except KeyError as exc:
        raise InputError(f"{exc.args[0]}; known: {', '.join(Tolerances().as_dict())}") from exc


def _parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(",")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError) as exc:
        raise InputError(f"--grid expects min,max,count, got {text!r}") from exc
    if len(parts) != 3 or not (0 < lo < hi) or count < 2:
        raise InputError(f"--grid needs 0 < min < max and count >= 2, got {text!r}")
    return lo, hi, count


def load_spec(ref: str, job: JobConfig | None = None) -> NoiseSpec:
    """``builtin:<name>`` or a path to a JSON spec document.

    With ``job.extra["project_traceless"]`` set, the identity component of each
    ``J_i`` is removed and the shifts are recorded in ``job.extra``.
    """
    project = bool(job and job.extra.get("project_traceless"))
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        if name not in fixtures.BUILTIN_SPECS:
            raise InputError(f"unknown builtin spec {name!r}; choose from {sorted(fixtures.BUILTIN_SPECS)}")
        spec = fixtures.BUILTIN_SPECS[name]()
    else:
        try:
            spec = spec_from_json(json.loads(Path(ref).read_text()), validate=not project)
        except (OSError, json.JSONDecodeError, FormatError, SpecError) as exc:
            raise InputError(f"cannot load spec {ref!r}: {exc}") from exc
    if project and isinstance(spec, InteractionSpec):
        spec, shifts = spec.project_traceless()
        job.extra["traceless_shifts"] = [[s.real, s.imag] for s in shifts]
        if any(abs(s) > 0 for s in shifts):
            log.info("moved identity components %s out of the couplings", [f"{s:.3g}" for s in shifts])
    try:
        spec.validate()
    except SpecError as exc:
        raise InputError(f"invalid spec {ref!r}: {exc}") from exc
    return spec


def load_code(ref: str, spec: NoiseSpec | None, seed: int) -> tuple[Code, QuantumOperation | None]:
    """A code plus an optional decoder.

    ``builtin:noiseless-subsystem`` takes the first noiseless block of the
    spec's interaction algebra and returns its decoder as well.
    """
    if ref == f"builtin:{NOISELESS_CODE}":
        if spec is None:
            raise InputError("the noiseless-subsystem code needs a spec")
        alg, _ = full_algebra(build_j1(spec))
        dec = decompose(alg, seed=seed)
        subs = [s for s in noiseless_subsystems(dec) if s.d_z >= 2]
        if not subs:
            raise InputError("the spec's algebra has no noiseless subsystem of dimension >= 2")
        return noiseless_subsystem_code(dec.blocks[subs[0].block_index])
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        if name not in fixtures.BUILTIN_CODES:
            choices = sorted([*fixtures.BUILTIN_CODES, NOISELESS_CODE])
            raise InputError(f"unknown builtin code {name!r}; choose from {choices}")
        return fixtures.BUILTIN_CODES[name](), None
    try:
        return code_from_json(json.loads(Path(ref).read_text())), None
    except (OSError, json.JSONDecodeError, FormatError) as exc:
        raise InputError(f"cannot load code {ref!r}: {exc}") from exc


_KINDS = {InteractionSpec: "hamiltonian", MarkovSpec: "markov", DiscreteSpec: "discrete"}


def _spec_kind(spec: NoiseSpec) -> str:
    return _KINDS[type(spec)]


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return json_number(float(obj))
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    return obj


def write_report(job: JobConfig, name: str, result: dict) -> Path:
    report = {
        "command": job.command,
        "inputs": job.inputs,
        "seed": job.seed,
        "tolerances": job.tolerances.as_dict(),
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "result": result,
    }
    if "traceless_shifts" in job.extra:
        report["traceless_shifts"] = job.extra["traceless_shifts"]
    job.out_dir.mkdir(parents=True, exist_ok=True)
    path = job.out_dir / f"{name}.json"
    path.write_text(json.dumps(_sanitize(report), indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", path)
    return path


def _fmt(x) -> str:
    return "inf" if isinstance(x, float) and math.isinf(x) else str(x)


def cmd_algebra(job: JobConfig, args) -> int:
    spec = load_spec(args.spec, job)
    j1 = build_j1(spec)
    g = grade(j1, args.max_degree)
    if not g.saturated:
        log.info("grading not saturated by degree %d; computing the full algebra", args.max_degree)
    alg, sat = full_algebra(j1)
    lam = noise_strength(spec)
    result = {
        "kind": _spec_kind(spec),
        "system_dim": j1.ambient_dim,
        "grade_dims": g.ranks(),
        "saturated_within_max_degree": g.saturated,
        "saturation_degree": sat,
        "algebra_dim": alg.rank,
        "lambda": {_spec_kind(spec): lam},
    }
    write_report(job, "algebra", result)
    print(f"spec kind {result['kind']}, N = {j1.ambient_dim}")
    print("degree  dim")
    for d, r in enumerate(g.ranks(), start=1):
        print(f"{d:>6}  {r}")
    print(f"saturation degree {sat}, algebra dim {alg.rank}, lambda ({result['kind']}) = {lam:.12g}")
    return EXIT_OK


def cmd_decompose(job: JobConfig, args) -> int:
    spec = load_spec(args.spec, job)
    alg, _ = full_algebra(build_j1(spec))
    try:
        dec = decompose(alg, seed=job.seed)
    except DecompositionError as exc:
        write_report(job, "decompose", {"error": str(exc), "residual": exc.residual})
        print(f"decomposition failed: {exc}")
        return EXIT_VIOLATION
    comm = commutant(alg)
    subs = noiseless_subsystems(dec)
    result = decomposition_to_json(dec, subs)
    result["commutant_rank"] = comm.rank
    write_report(job, "decompose", result)
    print(" block  d_C  d_Z")
    for i, (dc, dz) in enumerate(dec.dims()):
        print(f"{i:>6}  {dc:>3}  {dz:>3}")
    print(f"algebra dim {dec.algebra_dim}, commutant dim {comm.rank}, residual {dec.residual:.2e}")
    print("noiseless subsystems: " + (", ".join(f"block {s.block_index} (d_Z={s.d_z})" for s in subs) or "none"))
    return EXIT_OK


def cmd_code_check(job: JobConfig, args) -> int:
    spec = load_spec(args.spec, job)
    code, _ = load_code(args.code, spec, job.seed)
    j1 = build_j1(spec)
    if code.system_dim != j1.ambient_dim:
        raise InputError(f"code acts on dimension {code.system_dim}, spec on {j1.ambient_dim}")
    g = grade(j1, args.max_degree)
    dist = min_distance(code, g)
    cdist = min_c_distance(code, g) if code.transmission_basis is not None else None
    correctable = {"0": True}
    ok = True
    for e in range(1, args.max_degree + 1):
        # J_e grows with e, so correctability fails for all larger e once it fails
        ok = ok and kl_correctable(code, g.level(e))
        correctable[str(e)] = ok
    violations = [
        e for e, ok in correctable.items() if not ok and dist != math.inf and dist >= 2 * int(e) + 1
    ]
    result = {
        "code": code.name,
        "distance": dist,
        "c_distance": cdist,
        "correctable_e": correctable,
        "grade_dims": g.ranks(),
        "violations": violations,
    }
    write_report(job, "code-check", result)
    print(f"code {code.name or '(unnamed)'}: N = {code.system_dim}, K = {code.logical_dim}")
    print(f"distance {_fmt(dist)}, c-distance {_fmt(cdist) if cdist is not None else 'n/a'}")
    for e, good in correctable.items():
        print(f"  e = {e}: {'correctable' if good else 'not correctable'}")
    if violations:
        print(f"distance/correctability mismatch at e = {violations}")
        return EXIT_VIOLATION
    return EXIT_OK


def _error_space(spec: NoiseSpec, distance: int) -> OperatorSpace:
    if distance < 1:
        raise InputError("--distance must be >= 1")
    j1 = build_j1(spec)
    if distance == 1:
        return grade(j1, 1).level(0)
    return grade(j1, distance - 1).level(distance - 1)


def cmd_code_search(job: JobConfig, args) -> int:
    spec = load_spec(args.spec, job)
    e = _error_space(spec, args.distance)
    if args.search == "search-c":
        report = search_c_code(e, seed=job.seed)
        name = "code-search-c"
    else:
        report = search_quantum_code(e, seed=job.seed, cap=args.cap)
        name = "code-search-q"
    result = search_report_to_json(report)
    result["distance"] = args.distance
    write_report(job, name, result)
    b = report.bound_report()
    print(f"N = {b['N']}, D = {b['D']}, ceil(N/D) = {b['ceil_N_over_D']}, tverberg r = {b['tverberg_r']}")
    print(f"status {report.status}, achieved dimension {report.achieved_dim}")
    if args.search == "search-c" and report.achieved_dim < b["ceil_N_over_D"]:
        return EXIT_VIOLATION
    return EXIT_OK


def _recovery(args, spec, code, decoder) -> tuple[QuantumOperation | None, str]:
    choice = args.recovery
    if choice == "auto":
        choice = "decoder" if decoder is not None else ("kl" if args.e > 0 else "none")
    if choice == "decoder":
        if decoder is None:
            raise InputError("--recovery decoder needs the noiseless-subsystem code")
        return decoder, choice
    if choice == "kl":
        if args.e < 1:
            return None, "none"
        je = grade(build_j1(spec), args.e).level(args.e)
        if not kl_correctable(code, je):
            raise InputError(f"code is not {args.e}-error-correcting for this spec")
        return build_recovery(code, je), choice
    return None, "none"


def cmd_simulate(job: JobConfig, args) -> int:
    spec = load_spec(args.spec, job)
    expected = {"hamiltonian": InteractionSpec, "lindblad": MarkovSpec, "discrete": DiscreteSpec}[args.model]
    if not isinstance(spec, expected):
        raise InputError(f"simulate {args.model} needs a {_KINDS[expected]} spec")
    code, decoder = load_code(args.code, spec, job.seed)
    recovery, rec_name = _recovery(args, spec, code, decoder)
    lo, hi, count = job.grid
    grid = noise.default_grid(lo, hi, count)
    if args.model == "hamiltonian":
        check = noise.check_amplitude_bound(
            spec, code, args.e, grid, job.env_draws, recovery=recovery, seed=job.seed, progress=log.info
        )
    elif args.model == "lindblad":
        check = noise.check_markov_bound(spec, code, args.e, grid, recovery=recovery)
    else:
        check = noise.check_discrete_bound(spec, code, args.e, recovery=recovery)
    result = check.to_dict()
    result["recovery"] = rec_name
    result["min_slope"] = check.min_slope
    name = f"simulate-{args.model}"
    write_report(job, name, result)
    csv_path = job.out_dir / f"{name}.csv"
    csv_path.write_text(check.to_csv())
    log.info("wrote %s", csv_path)
    slope = check.min_slope
    print(f"{args.model}: {len(check.runs)} run(s), max measured/bound = {check.max_ratio:.4g}")
    if slope is not None:
        print(f"lowest-decade slope: {slope:.3f}")
    elif args.model != "discrete":
        print("lowest-decade slope: n/a (error below fitting floor)")
    if not check.passed:
        print(f"bound violated at {len(check.counterexamples)} point(s); see {name}.json")
        return EXIT_VIOLATION
    print("bound holds at every judged grid point")
    return EXIT_OK


def three_qubit_example(seed: int, env_draws: int = 20, grid: np.ndarray | None = None) -> dict:
    """End-to-end run of the three-qubit collective example; returns a report dict with ``passed``."""
    spec = fixtures.collective_spec(3, seed=seed)
    j1 = build_j1(spec)
    alg, sat = full_algebra(j1)
    dec = decompose(alg, seed=seed)
    comm = commutant(alg)
    s1, s2 = fixtures.scalar_invariants_three_qubit()
    s_res = [comm.residual(s) / max(1.0, np.linalg.norm(s)) for s in (s1, s2)]
    block = next(b for b in dec.blocks if b.d_z == 2)
    rng = np.random.default_rng(seed)
    c_state = np.zeros((block.d_c, block.d_c), dtype=complex)
    c_state[0, 0] = 1.0
    rho = block.embed(c_state, random_density(block.d_z, rng))
    gens = [j for j, _ in spec.couplings]
    unitaries = [scipy.linalg.expm(-1j * sum(th * g for th, g in zip(rng.normal(size=3), gens))) for _ in range(20)]
    change = subsystem_state_change(block, rho, unitaries)
    code, decoder = noiseless_subsystem_code(block)
    check = noise.check_amplitude_bound(spec, code, 0, grid, env_draws, recovery=decoder, seed=seed)
    max_a = max(float(np.max(r.amplitude)) for r in check.runs)
    blocks = sorted(dec.dims())
    passed = (
        blocks == sorted([(4, 1), (2, 2)])
        and comm.rank == 5
        and max(s_res) <= 1e-9
        and change <= 1e-8
        and check.passed
        and max_a <= 1e-8
    )
    return {
        "passed": passed,
        "grade_dims": grade(j1, sat).ranks(),
        "saturation_degree": sat,
        "algebra_dim": alg.rank,
        "blocks": [list(b) for b in dec.dims()],
        "commutant_dim": comm.rank,
        "decomposition_residual": dec.residual,
        "scalar_commutant_residuals": s_res,
        "subsystem_trace_distance_change": change,
        "simulation_max_amplitude": max_a,
        "simulation_env_draws": env_draws,
    }


def cmd_example(job: JobConfig, args) -> int:
    lo, hi, count = job.grid
    result = three_qubit_example(job.seed, job.env_draws, noise.default_grid(lo, hi, count))
    write_report(job, "example-three-qubit-collective", result)
    print("three-qubit collective noise")
    print(f"  blocks (d_C, d_Z): {[tuple(b) for b in result['blocks']]}")
    print(f"  commutant dim {result['commutant_dim']}")
    print(f"  s1, s2 commutant residuals: {result['scalar_commutant_residuals'][0]:.1e}, "
          f"{result['scalar_commutant_residuals'][1]:.1e}")
    print(f"  subsystem state change under 20 collective unitaries: {result['subsystem_trace_distance_change']:.1e}")
    print(f"  max error amplitude over {job.env_draws} environments: {result['simulation_max_amplitude']:.1e}")
    print("  " + ("all checks pass" if result["passed"] else "CHECK FAILED"))
    return EXIT_OK if result["passed"] else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="RNG seed (default 0x5EED or $GRADED_QEC_SEED)")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")
    common.add_argument("--out", type=Path, default=Path("reports"), help="report directory")
    common.add_argument("--grid", default="1e-3,1,16", help="lambda*t grid min,max,count")
    common.add_argument("--env-draws", type=int, default=20)
    common.add_argument(
        "--project-traceless", action="store_true", help="subtract tr(J_i)/N from each coupling and report the shift"
    )
    common.add_argument("-q", "--quiet", action="store_true", help="no progress on stderr")

    p = argparse.ArgumentParser(prog="graded-qec", description="Graded interaction algebras and error bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("algebra", parents=[common], help="grading dimensions, saturation and noise strength")
    a.add_argument("spec")
    a.add_argument("--max-degree", type=int, default=3)
    a.set_defaults(func=cmd_algebra)

    d = sub.add_parser("decompose", parents=[common], help="block structure of the interaction algebra")
    d.add_argument("spec")
    d.set_defaults(func=cmd_decompose)

    c = sub.add_parser("code", help="code certification and construction")
    csub = c.add_subparsers(dest="action", required=True)
    chk = csub.add_parser("check", parents=[common], help="distance, c-distance and correctability")
    chk.add_argument("code")
    chk.add_argument("spec")
    chk.add_argument("--max-degree", type=int, default=3)
    chk.set_defaults(func=cmd_code_check)
    for name in ("search-c", "search-q"):
        s = csub.add_parser(name, parents=[common], help=f"{'classical' if name == 'search-c' else 'quantum'} code search")
        s.add_argument("spec")
        s.add_argument("--distance", type=int, required=True)
        s.add_argument("--cap", type=int, default=10**6, help="partition candidate budget")
        s.set_defaults(func=cmd_code_search, search=name)

    sim = sub.add_parser("simulate", help="check the error bound dynamically")
    ssub = sim.add_subparsers(dest="model", required=True)
    for model in ("hamiltonian", "lindblad", "discrete"):
        m = ssub.add_parser(model, parents=[common])
        m.add_argument("spec")
        m.add_argument("code", help=f"code file, builtin:<name> or builtin:{NOISELESS_CODE}")
        m.add_argument("--e", type=int, default=0, help="number of correctable errors assumed")
        m.add_argument("--recovery", choices=["auto", "none", "kl", "decoder"], default="auto")
        m.set_defaults(func=cmd_simulate)

    ex = sub.add_parser("example", parents=[common], help="built-in worked examples")
    ex.add_argument("name", choices=["three-qubit-collective"])
    ex.set_defaults(func=cmd_example)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(stream=sys.stderr, format="%(message)s", level=logging.WARNING if args.quiet else logging.INFO, force=True)
    try:
        job = JobConfig(
            command=" ".join(x for x in (args.command, getattr(args, "action", None) or getattr(args, "model", None)) if x),
            inputs=[getattr(args, k) for k in ("code", "spec", "name") if getattr(args, k, None) is not None],
            seed=args.seed if args.seed is not None else default_seed(),
            tolerances=_parse_tol(args.tol),
            out_dir=args.out,
            grid=_parse_grid(args.grid),
            env_draws=args.env_draws,
            extra={"project_traceless": args.project_traceless},
        )
        if job.env_draws < 1:
            raise InputError("--env-draws must be >= 1")
        with use_tolerances(job.tolerances):
            return args.func(job, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SpecError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
