"""Greedy c-code and convex-partition quantum code dimensions against their guarantees."""

import argparse

from graded_qec.algebra import grade, standard_interaction
from graded_qec.config import DEFAULT_SEED
from graded_qec.search import search_quantum_code

SYSTEMS = [("collective", 3), ("collective", 5), ("linear", 2), ("classical", 2), ("classical", 3)]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--distance", type=int, default=2)
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    parser.add_argument("--cap", type=int, default=10**5)
    args = parser.parse_args()
    header = f"{'system':<14}{'N':>5}{'D':>5}{'ceil N/D':>10}{'c-dim':>7}{'r':>4}{'q-dim':>7}  status"
    print(header)
    for kind, n_qubits in SYSTEMS:
        j1 = standard_interaction(n_qubits, kind)
        e = grade(j1, args.distance - 1).level(args.distance - 1)
        rep = search_quantum_code(e, seed=args.seed, cap=args.cap)
        b = rep.bound_report()
        print(f"{f'{kind}-{n_qubits}':<14}{b['N']:>5}{b['D']:>5}{b['ceil_N_over_D']:>10}{rep.c_code_dim:>7}"
              f"{b['tverberg_r']:>4}{rep.achieved_dim:>7}  {rep.status}")


if __name__ == "__main__":
    main()
