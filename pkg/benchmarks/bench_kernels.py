"""Benchmark the numba kernel lane against the pure-numpy fallback.

The backend is chosen at import time from PWMCYCLE_DISABLE_NUMBA, so each
lane runs in a fresh subprocess. Workloads exercise the hot paths: the
event-resolved cycle march, the steady-state solve, and a frequency-
response measurement.

Usage: python benchmarks/bench_kernels.py [--cycles 20000]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import numpy as np
import pwmcycle as pc

n_cycles = int(sys.argv[1])
comp = pc.ComparatorSpec(K=np.array([1.0, 0.0]), Se=2.4e5, vc_nominal=1.92)
model = pc.build_buck(Vin=12.0, L_f=1e-5, C_f=1e-4, R=1.0,
                      pwm=pc.PwmLogic(pc.PwmKind.COT, 4e-6), comparator=comp)
op = pc.solve_periodic(model)
pc.simulate_cycles(model, 1.92, 10, op.x_star)  # warm the JIT cache

results = {"backend": pc.backend_name()}

t0 = time.perf_counter()
pc.simulate_cycles(model, 1.92, n_cycles, op.x_star)
results["march_s"] = time.perf_counter() - t0
results["march_us_per_cycle"] = results["march_s"] / n_cycles * 1e6

t0 = time.perf_counter()
for _ in range(20):
    pc.solve_periodic(model)
results["solve_s"] = (time.perf_counter() - t0) / 20

t_cyc = op.cycle_duration
t0 = time.perf_counter()
for m in (5, 20, 80):
    pc.measure_frequency_response(model, op, m / (400 * t_cyc),
                                  n_measure=400)
results["bode3_s"] = time.perf_counter() - t0

print(json.dumps(results))
"""


def run_lane(disable_numba, n_cycles):
    env = os.environ.copy()
    env["PWMCYCLE_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    proc = subprocess.run([sys.executable, "-c", _WORKER, str(n_cycles)],
                          capture_output=True, text=True, env=env,
                          check=True)
    return json.loads(proc.stdout.splitlines()[-1])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--cycles", type=int, default=20000)
    args = parser.parse_args()
    lanes = [run_lane(False, args.cycles), run_lane(True, args.cycles)]
    print("%-8s %16s %14s %12s" % ("backend", "march us/cycle",
                                   "solve ms", "bode(3f) s"))
    for r in lanes:
        print("%-8s %16.2f %14.3f %12.3f"
              % (r["backend"], r["march_us_per_cycle"],
                 r["solve_s"] * 1e3, r["bode3_s"]))
    if lanes[0]["backend"] != lanes[1]["backend"]:
        speedup = lanes[1]["march_s"] / lanes[0]["march_s"]
        print("march speedup (numba vs numpy): %.1fx" % speedup)


if __name__ == "__main__":
    main()
