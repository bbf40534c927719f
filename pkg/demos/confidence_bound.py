"""Chart the finite-sample confidence bound along a convergence schedule.

With bandwidth w = N^-1.1 and support size M = N^5, the bound's inner terms
vanish as N grows; below a problem-dependent sample count the expression
inside the logarithm turns nonpositive and the bound simply does not exist
(shown as "infeasible").

Run:  python demos/confidence_bound.py
"""

import numpy as np

from entrokit.bounds import scan_schedule


def main():
    n_values = [int(v) for v in np.logspace(2, 6, 9)]
    rows = scan_schedule(n_values, d=1, delta=0.05, lipschitz=0.01)
    print(f"{'N':>9} {'M':>10} {'w':>10} {'log-arg':>9} {'eps':>12}")
    for row in rows:
        eps = "infeasible" if row["eps"] is None else f"{row['eps']:.4f}"
        print(
            f"{row['N']:>9.3g} {row['M']:>10.2g} {row['w']:>10.3g}"
            f" {row['log_argument']:>9.3f} {eps:>12}"
        )


if __name__ == "__main__":
    main()
