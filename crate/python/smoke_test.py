"""Smoke test for the Python bindings.

Build and install first:
    pip install --no-build-isolation -e crates/py
"""

import math
import tempfile
from pathlib import Path

import parest_py as pe


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL {what}")
    print(f"ok   {what}")


def main():
    names = [n for n, _ in pe.list_experiments()]
    check(len(names) == 5 and "hypercircle_check" in names, "five experiments listed")
    check("[reference]" in pe.schema(), "schema text")

    run = pe.HeatRun("fourier_1d", dim=1, resolution=8, degree=1, steps=8)
    check(run.n_cells == 8 and run.n_intervals == 8, "run shape")
    check(len(run.values) == 9, "nodal values u_0..u_N")

    jump = run.jump_estimator()
    total = math.sqrt(sum(sum(row) for row in jump))
    check(abs(total - run.eta_j) <= 1e-12 * run.eta_j, "jump table sums to eta_J")

    res = run.equilibrate()
    check(res <= 1e-9, f"equilibration residual {res:.1e}")

    est = run.estimators()
    check(est["totals"]["eta_f"] > 0.0, "flux estimator present")

    e_x = run.exact_error("X", "affine")
    e_e = run.exact_error("energy", "average")
    check(0.0 < e_e and 0.0 < e_x, "exact errors positive")

    bounds = run.bounds(["flux_y_upper", "extended_y"], discrete=True)
    for b in bounds:
        main_bound = b["inequalities"][0]
        check(main_bound["lhs"] <= 1.02 * main_bound["rhs"], f"{b['theorem']} upper bound")

    rows = pe.inefficiency_study([1e-3, 1.0, 1e3])
    check(rows[-1]["error_ut"] / rows[-1]["eta_j"] <= 0.1, "inefficiency at large lambda")
    check(abs(pe.observed_orders([0.1, 0.05], [1.0, 0.25])[0] - 2.0) < 1e-12, "observed orders")

    with tempfile.TemporaryDirectory() as d:
        manifest = pe.run_experiment('experiment = "inefficiency_study"\n', d)
        check(manifest["passed"], "inefficiency experiment passes")
        check((Path(d) / "inefficiency.csv").exists(), "CSV written")

    try:
        pe.run_experiment('experiment = "identity_suite"\n[mesh]\ndim = 5\n')
    except ValueError as e:
        check("mesh.dim" in str(e), "config errors raise ValueError")
    else:
        raise SystemExit("FAIL bad config accepted")


if __name__ == "__main__":
    main()
