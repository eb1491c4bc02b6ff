"""Command-line front end.

    pwmcycle <command> --config FILE [--out DIR] [--verify] [--lenient]
                        [--tol TOL] [--seed N]

Commands: steady, eigen, bode, sweep, duty, distill, simulate, verify.
Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 verification threshold breach.

CSV output is deterministic: 17-significant-digit floats, '.' decimal
separator, LF line endings, header row mandatory.
"""

import argparse
import os
import sys

import numpy as np

from . import verify as verify_mod
from .config import parse_config
from .distill import distill, solve_distilled_dc
from .duty import DutyKind, DutyOperatorSpec, duty_gain, measured_duty_gain
from .errors import ConfigError, ModelError, PwmCycleError
from .model import ComparatorSpec, ConverterModel
from .sim import dense_trace, measure_frequency_response, simulate_cycles
from .smallsignal import (boundary_brackets, closed_loop_eigenvalues,
                          control_to_output_tf, jacobian_blocks,
                          linearized_map, stability_sweep)
from .steady import solve_periodic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


def _f(x):
    return "%.17g" % float(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return path


def _solve(model, args):
    if args.tol is not None:
        return solve_periodic(model, tol=args.tol)
    return solve_periodic(model)


def _cmd_steady(model, params, args, out_dir):
    op = _solve(model, args)
    print("X* =", " ".join(_f(v) for v in op.x_star))
    print("T_on* =", _f(op.T_on_star))
    print("T_off* =", _f(op.T_off_star))
    print("residual =", _f(op.residual_norm))
    return EXIT_OK


def _cmd_eigen(model, params, args, out_dir):
    op = _solve(model, args)
    lmap = linearized_map(model, jacobian_blocks(model, op))
    for msg in lmap.warnings:
        print("note:", msg)
    eig = closed_loop_eigenvalues(lmap)
    for lam in eig:
        print("lambda = %s %+.17gj  |lambda| = %s"
              % (_f(lam.real), lam.imag, _f(abs(lam))))
    lam_max = abs(eig[0])
    print("lambda_max =", _f(lam_max))
    print("stable =", "true" if lam_max < 1.0 else "false")
    return EXIT_OK


def _frequency_grid(params, t_cycle):
    f_hi_cap = 0.5 / t_cycle
    f_min = float(params.get("f_min_hz", 1e-3 / t_cycle))
    f_max = float(params.get("f_max_hz", 0.4 / t_cycle))
    n = int(params.get("n_points", 15))
    if not (0 < f_min < f_max < f_hi_cap):
        raise ConfigError(
            "frequency grid must satisfy 0 < f_min < f_max < 0.5/T_cycle "
            "(T_cycle = %g s)" % t_cycle)
    return np.geomspace(f_min, f_max, n)


def _cmd_bode(model, params, args, out_dir):
    op = _solve(model, args)
    lmap = linearized_map(model, jacobian_blocks(model, op))
    t_cyc = op.cycle_duration
    freqs = _frequency_grid(params, t_cyc)
    header = ["f_hz", "mag_db", "phase_deg"]
    if args.verify:
        header += ["meas_mag_db", "meas_phase_deg"]
    rows = []
    for f in freqs:
        z = np.exp(2j * np.pi * f * t_cyc)
        h = control_to_output_tf(lmap, model.C_phys, z)
        row = [_f(f), _f(20 * np.log10(abs(h))),
               _f(np.degrees(np.angle(h)))]
        if args.verify:
            hm = measure_frequency_response(
                model, op, f, amplitude=params.get("amplitude"))
            row += [_f(20 * np.log10(abs(hm))),
                    _f(np.degrees(np.angle(hm)))]
        rows.append(row)
    path = _write_csv(os.path.join(out_dir, "bode.csv"), header, rows)
    print("wrote", path)
    return EXIT_OK


def _sweep_values(params):
    if "values" in params:
        return [float(v) for v in params["values"]]
    return list(np.linspace(float(params["start"]), float(params["stop"]),
                            int(params["count"])))


def _sweep_family(model, parameter):
    if parameter == "vc":
        def family(p):
            comp = ComparatorSpec(K=model.comparator.K,
                                  Se=model.comparator.Se, vc_nominal=p)
            return ConverterModel(
                on_segment=model.on_segment, off_segment=model.off_segment,
                comparator=comp, pwm=model.pwm, C_phys=model.C_phys,
                state_labels=model.state_labels)
    elif parameter == "Se":
        def family(p):
            comp = ComparatorSpec(K=model.comparator.K, Se=p,
                                  vc_nominal=model.comparator.vc_nominal)
            return ConverterModel(
                on_segment=model.on_segment, off_segment=model.off_segment,
                comparator=comp, pwm=model.pwm, C_phys=model.C_phys,
                state_labels=model.state_labels)
    else:
        raise ConfigError("sweep parameter must be 'vc' or 'Se', got %r"
                          % parameter)
    return family


def _cmd_sweep(model, params, args, out_dir):
    values = _sweep_values(params)
    parameter = params.get("parameter", "vc")
    rows_data = stability_sweep(_sweep_family(model, parameter), values)
    rows = []
    for pt in rows_data:
        rows.append([
            _f(pt.param),
            _f(pt.lambda_max) if np.isfinite(pt.lambda_max) else "nan",
            "" if pt.unstable is None else ("false" if pt.unstable else "true"),
        ])
        if pt.error:
            print("note: %s = %s: %s" % (parameter, _f(pt.param), pt.error))
    path = _write_csv(os.path.join(out_dir, "sweep.csv"),
                      ["param", "lambda_max", "stable"], rows)
    for lo, hi in boundary_brackets(rows_data):
        print("boundary bracket: [%s, %s]" % (_f(lo), _f(hi)))
    print("wrote", path)
    return EXIT_OK


def _cmd_duty(model, params, args, out_dir):
    kind = DutyKind(params.get("kind", "TRANSLATION"))
    t_s = float(params.get("T_s", model.pwm.fixed_duration))
    t_w = params.get("T_w")
    spec = DutyOperatorSpec(kind, T_s=t_s,
                            T_w=float(t_w) if t_w is not None else None)
    f_min = float(params.get("f_min_hz", 1e-3 / t_s))
    f_max = float(params.get("f_max_hz", 0.45 / t_s))
    n = int(params.get("n_points", 20))
    header = ["f_hz", "re", "im", "mag", "phase_deg"]
    if args.verify:
        header += ["meas_re", "meas_im"]
    rows = []
    for f in np.geomspace(f_min, f_max, n):
        g = duty_gain(spec, 2j * np.pi * f)
        row = [_f(f), _f(g.real), _f(g.imag), _f(abs(g)),
               _f(np.degrees(np.angle(g)))]
        if args.verify:
            gm = measured_duty_gain(spec, f)
            row += [_f(gm.real), _f(gm.imag)]
        rows.append(row)
    path = _write_csv(os.path.join(out_dir, "duty.csv"), header, rows)
    print("wrote", path)
    return EXIT_OK


def _cmd_distill(model, params, args, out_dir):
    dm = distill(model)
    op = _solve(model, args)
    v_in = float(model.on_segment.U[0])
    print("By_on  =", " ".join(_f(v) for v in dm.By_on))
    print("By_off =", " ".join(_f(v) for v in dm.By_off))
    print("||E_on||_F  =", _f(np.linalg.norm(dm.residual_on)))
    print("||E_off||_F =", _f(np.linalg.norm(dm.residual_off)))
    v_o, i_l, free = solve_distilled_dc(dm, v_in, op.T_on_star, op.T_off_star)
    print("v_o =", _f(v_o))
    print("i_L* =", _f(i_l))
    print("v_C_free =", "true" if free else "false")
    return EXIT_OK


def _cmd_simulate(model, params, args, out_dir):
    n_cycles = int(params.get("n_cycles", 100))
    x0 = params.get("x0")
    if x0 is None:
        x = np.zeros(model.n)
    else:
        x = np.array([float(v) for v in x0])
    trace = simulate_cycles(model, model.comparator.vc_nominal, n_cycles, x)
    header = (["t_s"] + ["x_%d" % (i + 1) for i in range(model.n)]
              + ["cycle", "edge_kind"])
    pps = int(params.get("dense_per_segment", 1))
    rows = []
    if pps > 1:
        times, states = dense_trace(model, trace, pps)
        kind_of = {float(t): "sample" for t in trace.sample_times}
        kind_of.update({float(t): "mid" for t in trace.mid_times})
        edges = np.asarray(trace.sample_times)
        for t, xs in zip(times, states):
            k = max(int(np.searchsorted(edges, t, side="right")) - 1, 0)
            rows.append([_f(t)] + [_f(v) for v in xs]
                        + [str(min(k, n_cycles - 1)),
                           kind_of.get(float(t), "dense")])
    else:
        for k in range(n_cycles + 1):
            rows.append([_f(trace.sample_times[k])]
                        + [_f(v) for v in trace.sample_states[k]]
                        + [str(k), "sample"])
            if k < n_cycles:
                rows.append([_f(trace.mid_times[k])]
                            + [_f(v) for v in trace.mid_states[k]]
                            + [str(k), "mid"])
        rows.sort(key=lambda r: float(r[0]))
    path = _write_csv(os.path.join(out_dir, "trace.csv"), header, rows)
    print("wrote", path)
    print("converged =", "true" if trace.converged else "false")
    print("final_cycle_delta =", _f(trace.final_cycle_delta))
    return EXIT_OK


def _cmd_verify(model, params, args, out_dir):
    quick = bool(params.get("quick", False))
    checks = verify_mod.run_battery(seed=args.seed, quick=quick)
    checks += verify_mod.model_checks(model, quick=quick)
    failed = 0
    for chk in checks:
        print(chk.line())
        if not chk.passed:
            failed += 1
    print("%d/%d checks passed" % (len(checks) - failed, len(checks)))
    return EXIT_OK if failed == 0 else EXIT_VERIFY


_DISPATCH = {
    "steady": _cmd_steady,
    "eigen": _cmd_eigen,
    "bode": _cmd_bode,
    "sweep": _cmd_sweep,
    "duty": _cmd_duty,
    "distill": _cmd_distill,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pwmcycle",
        description="Exact discrete-time small-signal models of "
                    "analog-controlled PWM DC-DC converters.",
    )
    parser.add_argument("command", choices=sorted(_DISPATCH))
    parser.add_argument("--config", required=True, help="configuration file")
    parser.add_argument("--out", default=".", help="output directory for CSV")
    parser.add_argument("--verify", action="store_true",
                        help="add oracle-measured columns where supported")
    parser.add_argument("--lenient", action="store_true",
                        help="downgrade unknown config keys to warnings")
    parser.add_argument("--tol", type=float, default=None,
                        help="override the steady-state solver tolerance")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized verification checks")
    return parser


def run(args) -> int:
    try:
        model, requests, warn = parse_config(args.config,
                                             lenient=args.lenient)
    except (ConfigError, ModelError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    for msg in warn:
        print("warning:", msg, file=sys.stderr)
    params = {}
    for req in requests:
        if req.command == args.command:
            params = dict(req.params)
            break
    os.makedirs(args.out, exist_ok=True)
    try:
        return _DISPATCH[args.command](model, params, args, args.out)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except PwmCycleError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code = run(args)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]) or 0)
