"""Measured error versus the (lambda t)^(e+1)/(e+1)! envelope for the standard cases.

Writes one CSV per case (lambda_t, a, p, bound, seed) and prints the worst
ratio and the fitted small-time exponent.
"""

import argparse
from pathlib import Path

from graded_qec import fixtures, noise
from graded_qec.algebra import build_j1, full_algebra
from graded_qec.codes import Code, build_recovery, noiseless_subsystem_code
from graded_qec.structure import decompose


def cases():
    yield "trivial-e0", fixtures.dephasing_qubit_spec(), Code.full_space(2), 0, None
    spec = fixtures.linear_one_qubit_env_spec(5)
    code = fixtures.five_qubit_code()
    yield "five-qubit-e1", spec, code, 1, build_recovery(code, build_j1(spec))
    spec = fixtures.collective_spec(3)
    dec = decompose(full_algebra(build_j1(spec))[0])
    ns_code, decoder = noiseless_subsystem_code(next(b for b in dec.blocks if b.d_z == 2))
    yield "noiseless-subsystem", spec, ns_code, 0, decoder


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("sweep"))
    parser.add_argument("--env-draws", type=int, default=20)
    parser.add_argument("--count", type=int, default=16)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = noise.default_grid(1e-3, 1.0, args.count)
    print(f"{'case':<22}{'passed':>8}{'max ratio':>12}{'min slope':>12}")
    for name, spec, code, e, rec in cases():
        check = noise.check_amplitude_bound(spec, code, e, grid, args.env_draws, recovery=rec)
        (args.out / f"{name}.csv").write_text(check.to_csv())
        slope = check.min_slope
        print(f"{name:<22}{str(check.passed):>8}{check.max_ratio:>12.4g}{'n/a' if slope is None else f'{slope:.3f}':>12}")


if __name__ == "__main__":
    main()
