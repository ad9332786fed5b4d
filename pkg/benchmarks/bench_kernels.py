"""Compare the numba and numpy kernel backends.

Each backend runs in its own interpreter because the choice is made at import
time from RHC_NUMBA. Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``.
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, timeit
import numpy as np
from taylor_rhc import kernels, paper_system, solve_are, TerminalPenalty, solve_finite_horizon

repeat = int(sys.argv[1])
s = paper_system()
k = s.kernel_arrays()
rng = np.random.default_rng(0)
m, h = 500, 0.01
ua, ub = rng.standard_normal(m), rng.standard_normal(m)
y0 = np.array([1.0, 1.0])
pT = np.zeros(2)

# warm up (triggers compilation or loads the on-disk cache)
Y, Ym, _ = kernels.rk4_forward(k["A"], k["N"], k["B"], y0, ua, ub, h)
kernels.cost_gradient(k["A"], k["N"], k["B"], k["CtC"], Y, Ym, ua, ub, h, s.alpha, pT)
phi = TerminalPenalty.taylor2(solve_are(s))
solve_finite_horizon(s, 0.1, phi, y0)

def best(stmt, number):
    return min(timeit.repeat(stmt, number=number, repeat=repeat)) / number

out = {
    "backend": kernels.BACKEND,
    "rk4_forward_500": best(lambda: kernels.rk4_forward(k["A"], k["N"], k["B"], y0, ua, ub, h), 20),
    "cost_gradient_500": best(
        lambda: kernels.cost_gradient(k["A"], k["N"], k["B"], k["CtC"], Y, Ym, ua, ub, h, s.alpha, pT), 20),
    "solve_T1": best(lambda: solve_finite_horizon(s, 1.0, phi, y0), 1),
}
print(json.dumps(out))
"""

ROWS = [("rk4_forward_500", "RK4 forward, 500 steps"),
        ("cost_gradient_500", "cost gradient, 500 steps"),
        ("solve_T1", "finite-horizon solve, T=1")]


def run(flag: str, repeat: int) -> dict:
    env = dict(os.environ, RHC_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    fast, slow = run("1", args.repeat), run("0", args.repeat)
    print(f"{'kernel':<28}{slow['backend']:>12}{fast['backend']:>12}{'speedup':>10}")
    for key, label in ROWS:
        print(f"{label:<28}{slow[key] * 1e3:>10.3f}ms{fast[key] * 1e3:>10.3f}ms{slow[key] / fast[key]:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
