"""Event-driven cycle-accurate switching simulator.

This is the brute-force ground truth the analytic modules are verified
against: steady states by marching, Jacobians by finite differences,
frequency responses by sinusoidal injection. Within segments it uses the
same propagator kernels as the propagation module, so segment arithmetic
matches ``compose`` bit for bit; only the comparator crossings are located
numerically (grid bracketing plus safeguarded Newton, first-crossing
semantics).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (DivergenceError, EventNotReachedError, ModelError,
                     SolverError)
from .model import ConverterModel, PwmKind, require_valid
from .propagation import PwlSegment
from .steady import PeriodicOperatingPoint, event_duration

_MODE_OF = {
    PwmKind.COT: _kernels.MODE_COT,
    PwmKind.COFT: _kernels.MODE_COFT,
    PwmKind.FF_TRAILING: _kernels.MODE_FF_TRAILING,
    PwmKind.FF_LEADING: _kernels.MODE_FF_LEADING,
}

DIVERGENCE_NORM = 1e12
STEADY_TOL = 1e-12
STEADY_RUN = 5


@dataclass(frozen=True)
class SimulationTrace:
    """Time-stamped piecewise trajectory from the cycle march.

    ``sample_times``/``sample_states`` are the states at the logic's
    sampling edges (index = cycle); ``mid_times``/``mid_states`` the other
    segment boundary inside each cycle. ``durations[k]`` is the
    event-determined duration of step k and ``crossings[k]`` the number of
    bracketed comparator crossings (> 1 flags heavy-ripple ambiguity).
    """

    sample_times: np.ndarray
    sample_states: np.ndarray
    mid_times: np.ndarray
    mid_states: np.ndarray
    durations: np.ndarray
    crossings: np.ndarray
    converged: bool
    final_cycle_delta: float
    carried: float = 0.0

    @property
    def cycle_edges(self):
        """(cycle index, edge time, sampled state) triples."""
        return [
            (k, float(self.sample_times[k]), self.sample_states[k])
            for k in range(len(self.sample_times))
        ]

    @property
    def samples(self):
        """All boundary samples merged and time-ordered: (t, x) pairs."""
        t = np.concatenate([self.sample_times, self.mid_times])
        x = np.vstack([self.sample_states, self.mid_states])
        order = np.argsort(t, kind="stable")
        return [(float(t[i]), x[i]) for i in order]


def find_event_time(segment: PwlSegment, x0, comparator, v_c, t_max,
                    n_grid=64) -> float:
    """Smallest t in (0, t_max] with K x(t) = v_c + Se t on the segment.

    x(t) is the exact segment solution from ``x0``. Raises
    EventNotReachedError when no crossing is bracketed (the t -> 0 limit of
    a threshold already exceeded at t = 0+ counts as not reached, per the
    open-interval convention).
    """
    if not t_max > 0:
        raise ValueError("t_max must be > 0")
    x0 = np.asarray(x0, dtype=float)
    b = segment.forcing_vector
    phi_s, gam_s = _kernels.prop_pair(segment.A, b, t_max / n_grid)
    g_tol = 1e-12 * max(abs(v_c), 1.0)
    t_tol = 1e-14 * t_max
    t_star, _, n_cross, status = _kernels.find_crossing(
        segment.A, b, np.asarray(comparator.K, dtype=float),
        float(comparator.Se), float(v_c), x0, float(t_max), int(n_grid),
        phi_s, gam_s, g_tol, t_tol,
    )
    if status != _kernels.STATUS_OK:
        msg = "event not reached in (0, %g] on segment %r" % (t_max,
                                                              segment.label)
        if abs(float(comparator.K @ x0) - v_c) <= g_tol:
            msg += (" (comparator already at the threshold at t = 0+; "
                    "open-interval convention excludes the t = 0 root)")
        raise EventNotReachedError(msg)
    if n_cross > 1:
        warnings.warn(
            "%d comparator crossings bracketed on segment %r; "
            "first-crossing semantics applied" % (n_cross, segment.label),
            stacklevel=2,
        )
    return float(t_star)


def event_cap(model: ConverterModel) -> float:
    """Search interval for the event-determined duration."""
    if model.pwm.kind in (PwmKind.FF_TRAILING, PwmKind.FF_LEADING):
        return model.pwm.fixed_duration
    return 10.0 * model.pwm.fixed_duration


def _vc_array(vc_fn, n_cycles):
    """Control value at each sampling edge 1..n_cycles (ZOH convention:
    the value compared during step k is the one indexed by the edge the
    event defines, edge k+1)."""
    if np.isscalar(vc_fn):
        return np.full(n_cycles, float(vc_fn))
    if callable(vc_fn):
        return np.array([float(vc_fn(k + 1)) for k in range(n_cycles)])
    arr = np.asarray(vc_fn, dtype=float)
    if arr.shape[0] < n_cycles:
        raise ValueError("vc sequence shorter than n_cycles")
    return arr[:n_cycles]


def _initial_carried(model, x0, vc0, initial_duration):
    """Carried event duration entering cycle 0 (fixed-frequency only)."""
    ts = model.pwm.fixed_duration
    if initial_duration is not None:
        if not 0 <= initial_duration <= ts:
            raise ValueError("initial_duration outside [0, T_s]")
        return float(initial_duration)
    comp = model.comparator
    kg = comp.Se
    if kg > 0:
        t0 = float((comp.K @ x0 - vc0) / comp.Se)
        if 0 < t0 < ts:
            return t0
    return 0.5 * ts


def simulate_cycles(model: ConverterModel, vc_fn, n_cycles, x0,
                    initial_duration=None, n_grid=64) -> SimulationTrace:
    """March ``n_cycles`` cycles with exact segment propagation and
    event-located switching.

    ``vc_fn`` may be a scalar, an array of per-edge values, or a callable
    edge index -> value; the value compared during step k is the one at
    the edge the event defines (edge k+1). States are sampled at the
    logic's sampling edge (valley for COT / leading-edge PWM, peak for
    COFT / trailing-edge PWM). For the fixed-frequency logics
    ``initial_duration`` seeds the carried event duration of cycle 0 (by
    default recovered from the event relation when Se > 0).

    Raises EventNotReachedError (pulse skipping) or DivergenceError.
    """
    require_valid(model)
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    vc_step = _vc_array(vc_fn, n_cycles)
    comp = model.comparator
    mode = _MODE_OF[model.pwm.kind]
    carried0 = 0.0
    if model.pwm.kind in (PwmKind.FF_TRAILING, PwmKind.FF_LEADING):
        carried0 = _initial_carried(model, x0, vc_step[0], initial_duration)
    cap = event_cap(model)
    g_tol = 1e-12 * max(1.0, float(np.max(np.abs(vc_step))))
    t_tol = 1e-14 * cap
    (samples, mids, durations, edge_times, mid_times, crossings, carried,
     status, status_cycle) = _kernels.march_cycles(
        mode, model.on_segment.A, model.on_segment.forcing_vector,
        model.off_segment.A, model.off_segment.forcing_vector,
        np.asarray(comp.K, dtype=float), float(comp.Se), vc_step,
        float(model.pwm.fixed_duration), cap, float(model.pwm.fixed_duration),
        x0, carried0, int(n_grid), g_tol, t_tol, DIVERGENCE_NORM,
    )
    if status == _kernels.STATUS_EVENT_NOT_REACHED:
        raise EventNotReachedError(
            "event not reached at cycle %d (pulse skipping / saturation)"
            % status_cycle, cycle=status_cycle,
        )
    if status == _kernels.STATUS_DIVERGED:
        raise DivergenceError("divergence at cycle %d" % status_cycle,
                              cycle=status_cycle)
    deltas = np.linalg.norm(np.diff(samples, axis=0), axis=1)
    scale = 1.0 + np.linalg.norm(samples[-1])
    tail = deltas[-STEADY_RUN:] if len(deltas) >= STEADY_RUN else deltas
    converged = bool(np.all(tail < STEADY_TOL * scale))
    return SimulationTrace(
        sample_times=edge_times,
        sample_states=samples,
        mid_times=mid_times,
        mid_states=mids,
        durations=durations,
        crossings=crossings,
        converged=converged,
        final_cycle_delta=float(deltas[-1]) if len(deltas) else 0.0,
        carried=float(carried),
    )


def dense_trace(model: ConverterModel, trace: SimulationTrace,
                points_per_segment=16):
    """Exact within-segment sub-sampling of a finished march.

    Every recorded segment is re-propagated from its stored start state
    with a fixed sub-step, so the returned points lie on the exact
    piecewise solution (no interpolation). Returns (times, states) with
    the original boundary points included.
    """
    if points_per_segment < 1:
        raise ValueError("points_per_segment must be >= 1")
    kind = model.pwm.kind
    n_cyc = len(trace.durations)
    times = [trace.sample_times[:1]]
    states = [trace.sample_states[:1]]
    for k in range(n_cyc):
        if kind == PwmKind.COT:
            seg1, d1 = model.on_segment, model.pwm.fixed_duration
            seg2, d2 = model.off_segment, float(trace.durations[k])
        elif kind == PwmKind.COFT:
            seg1, d1 = model.off_segment, model.pwm.fixed_duration
            seg2, d2 = model.on_segment, float(trace.durations[k])
        elif kind == PwmKind.FF_TRAILING:
            seg2, d2 = model.on_segment, float(trace.durations[k])
            seg1, d1 = model.off_segment, model.pwm.fixed_duration - d2
        else:
            seg2, d2 = model.off_segment, float(trace.durations[k])
            seg1, d1 = model.on_segment, model.pwm.fixed_duration - d2
        for seg, dur, t0, x0, t_end, x_end in (
                (seg1, d1, trace.sample_times[k], trace.sample_states[k],
                 trace.mid_times[k], trace.mid_states[k]),
                (seg2, d2, trace.mid_times[k], trace.mid_states[k],
                 trace.sample_times[k + 1], trace.sample_states[k + 1])):
            if dur > 0 and points_per_segment > 1:
                dt = dur / points_per_segment
                phi, gam = _kernels.prop_pair(seg.A, seg.forcing_vector, dt)
                x = np.array(x0)
                t_seg = np.empty(points_per_segment - 1)
                x_seg = np.empty((points_per_segment - 1, model.n))
                for i in range(points_per_segment - 1):
                    x = phi @ x + gam
                    t_seg[i] = t0 + dt * (i + 1)
                    x_seg[i] = x
                times.append(t_seg)
                states.append(x_seg)
            times.append(np.array([t_end]))
            states.append(x_end.reshape(1, -1))
    return np.concatenate(times), np.vstack(states)


def run_to_steady(model: ConverterModel, x0=None, max_cycles=20000,
                  chunk=200, initial_duration=None):
    """March until the cycle-to-cycle sampled-state delta stays below
    tolerance for 5 consecutive cycles. Returns (x_steady, trace_of_last_chunk)."""
    x = np.zeros(model.n) if x0 is None else np.asarray(x0, dtype=float)
    carried = initial_duration
    total = 0
    while total < max_cycles:
        trace = simulate_cycles(model, model.comparator.vc_nominal, chunk, x,
                                initial_duration=carried)
        x = trace.sample_states[-1]
        carried = trace.carried if model.pwm.kind in (
            PwmKind.FF_TRAILING, PwmKind.FF_LEADING) else None
        total += chunk
        if trace.converged:
            return x, trace
    raise SolverError("steady state not reached in %d cycles" % max_cycles)


def one_cycle_map(model: ConverterModel, vc, x, carried=None):
    """Event-resolved one-step map of the sampled state.

    For the fixed-frequency logics the carried duration entering the cycle
    is reconstructed from the event relation at the starting edge unless
    given, which requires Se > 0.
    """
    x = np.asarray(x, dtype=float)
    if model.pwm.kind in (PwmKind.FF_TRAILING, PwmKind.FF_LEADING):
        if carried is None:
            comp = model.comparator
            if comp.Se <= 0:
                raise ModelError(
                    "one_cycle_map needs an explicit carried duration when "
                    "Se = 0 (event relation not invertible)"
                )
            carried = float((comp.K @ x - vc) / comp.Se)
    trace = simulate_cycles(model, vc, 1, x, initial_duration=carried)
    return trace.sample_states[1]


def fd_jacobian(map_fn, x_star, rel_step=1e-6) -> np.ndarray:
    """Central-difference Jacobian of a one-cycle closure at ``x_star``.

    Column i uses step rel_step * max(|x_star[i]|, scale) with scale the
    infinity norm of the point (floor 1 for all-zero states).
    """
    x_star = np.asarray(x_star, dtype=float)
    n = x_star.shape[0]
    scale = max(float(np.max(np.abs(x_star))), 1.0)
    jac = np.zeros((n, n))
    for i in range(n):
        h = rel_step * max(abs(x_star[i]), scale)
        xp = x_star.copy()
        xm = x_star.copy()
        xp[i] += h
        xm[i] -= h
        try:
            fp = np.asarray(map_fn(xp), dtype=float)
            fm = np.asarray(map_fn(xm), dtype=float)
        except (EventNotReachedError, DivergenceError) as exc:
            raise SolverError(
                "Jacobian stencil hit discontinuity in column %d: %s"
                % (i, exc)
            )
        jac[:, i] = (fp - fm) / (2 * h)
    return jac


def _injection_window(f_hz, t_cycle, n_min=128, n_max=4096):
    """Cycle count covering an integer number of beat periods of f."""
    best_n, best_err = n_min, np.inf
    for n in range(n_min, n_max + 1):
        m = f_hz * t_cycle * n
        err = abs(m - round(m))
        if round(m) >= 1 and err < best_err:
            best_n, best_err = n, err
            if err < 1e-10:
                break
    return best_n


def measure_frequency_response(model: ConverterModel,
                               op: PeriodicOperatingPoint, f_hz,
                               amplitude=None, n_warmup=200,
                               n_measure=None) -> complex:
    """Empirical control-to-output gain by sinusoidal injection.

    v_c[k] = vc_nominal + amplitude sin(2 pi f t_k) is applied at the
    sampling edges (ZOH in between), the first ``n_warmup`` cycles are
    discarded and the f-component of C_phys x[k] is extracted by
    single-bin discrete Fourier correlation over an integer number of beat
    periods. Returns the complex output/input ratio.
    """
    t_cycle = op.cycle_duration
    if not 0 < f_hz < 0.5 / t_cycle:
        raise ValueError("f must lie in (0, 0.5/T_cycle)")
    comp = model.comparator
    if amplitude is None:
        amplitude = 1e-4 * max(abs(comp.vc_nominal), 1.0)
    if n_measure is None:
        n_measure = _injection_window(f_hz, t_cycle)
    n_total = n_warmup + n_measure
    edges = np.arange(n_total + 1)
    vc_edges = comp.vc_nominal + amplitude * np.sin(
        2 * np.pi * f_hz * edges * t_cycle)
    carried = event_duration(model, op)
    try:
        trace = simulate_cycles(model, vc_edges[1:], n_total, op.x_star,
                                initial_duration=carried)
    except (EventNotReachedError, DivergenceError) as exc:
        raise SolverError("no small-signal regime at this point: %s" % exc)
    y = trace.sample_states @ model.C_phys
    k = np.arange(n_warmup, n_warmup + n_measure)
    phase = np.exp(-2j * np.pi * f_hz * t_cycle * k)
    y_bin = np.sum((y[k] - np.mean(y[k])) * phase)
    u_bin = np.sum((vc_edges[k] - comp.vc_nominal) * phase)
    if u_bin == 0:
        raise ValueError("degenerate injection window")
    return complex(y_bin / u_bin)


def decay_rate(model: ConverterModel, op: PeriodicOperatingPoint,
               rel_perturbation=1e-6, n_cycles=400) -> float:
    """Per-cycle contraction of a small perturbation, via power iteration
    on the event-resolved map (geometric mean over the trailing half)."""
    x_star = op.x_star
    scale = np.linalg.norm(x_star)
    eps = rel_perturbation * scale
    u = np.zeros_like(x_star)
    u[0] = 1.0
    # Fixed-frequency logics recover the carried timing from the event
    # relation when possible; COT/COFT ignore it.
    carried = None
    if model.pwm.kind in (PwmKind.FF_TRAILING, PwmKind.FF_LEADING):
        carried = None if model.comparator.Se > 0 else event_duration(model, op)
    vc = model.comparator.vc_nominal
    ratios = []
    for _ in range(n_cycles):
        x_next = one_cycle_map(model, vc, x_star + eps * u, carried=carried)
        delta = x_next - x_star
        r = np.linalg.norm(delta) / eps
        ratios.append(r)
        if r == 0:
            break
        u = delta / np.linalg.norm(delta)
    tail = ratios[len(ratios) // 2:]
    return float(np.exp(np.mean(np.log(tail))))


def period2_clusters(samples) -> tuple:
    """Cluster gap and intra-cluster spread of even/odd sampled states.

    A sustained period-2 regime shows gap >> spread; returns
    (gap, spread)."""
    samples = np.asarray(samples)
    even = samples[0::2]
    odd = samples[1::2]
    m = min(len(even), len(odd))
    even, odd = even[:m], odd[:m]
    gap = float(np.linalg.norm(even.mean(axis=0) - odd.mean(axis=0)))
    spread = float(np.sqrt(
        np.mean(np.sum((even - even.mean(axis=0)) ** 2, axis=1))
        + np.mean(np.sum((odd - odd.mean(axis=0)) ** 2, axis=1))
    ))
    return gap, spread
