"""Edge-time to equivalent-duty operators.

Two families:

* TRANSLATION (COT/COFT drift): whole pulses of fixed width T_w translate
  against the nominal clock grid. The frequency-domain operator is
  -(1/T_s) (1 - e^{-s T_w}) / (1 - e^{-s T_s}) with the removable s = 0
  value -T_w/T_s^2; the comb denominator reflects that one timing
  perturbation shifts every future pulse through accumulation.
* FF_TRAILING_EDGE / FF_LEADING_EDGE: the clock pins one edge per period,
  only the free edge moves, and the mapping is the constant +1/T_s
  (trailing: later falling edge lengthens the pulse) or -1/T_s (leading:
  later rising edge shortens it).

The time-domain side lives in ``duty_sequence_from_edges`` (per-cycle
equivalent-duty samples from exact pulse-overlap geometry) and
``measured_duty_gain`` (single-bin Fourier measurement of the same
geometry, in the ZOH frame the operator is defined in).
"""

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EdgeCollisionError, PoleError


class DutyKind(str, enum.Enum):
    TRANSLATION = "TRANSLATION"
    FF_TRAILING_EDGE = "FF_TRAILING_EDGE"
    FF_LEADING_EDGE = "FF_LEADING_EDGE"


@dataclass(frozen=True)
class DutyOperatorSpec:
    """Operator family plus the clock period; T_w (pulse width) only
    matters for the TRANSLATION kind."""

    kind: DutyKind
    T_s: float
    T_w: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DutyKind(self.kind))
        if not self.T_s > 0:
            raise ValueError("T_s must be > 0")
        if self.kind == DutyKind.TRANSLATION:
            if self.T_w is None or not (0 < self.T_w < self.T_s):
                raise ValueError(
                    "TRANSLATION requires 0 < T_w < T_s, got T_w=%r" % (self.T_w,)
                )


def duty_gain(spec: DutyOperatorSpec, s) -> complex:
    """Duty-per-edge-shift gain at the Laplace point ``s`` (rad/s).

    TRANSLATION evaluates the comb operator (limit -T_w/T_s**2 returned at
    s = 0 exactly); the fixed-frequency kinds are the constants +-1/T_s.
    Evaluation at a nonzero comb pole raises PoleError.
    """
    s = complex(s)
    if spec.kind == DutyKind.FF_TRAILING_EDGE:
        return complex(1.0 / spec.T_s)
    if spec.kind == DutyKind.FF_LEADING_EDGE:
        return complex(-1.0 / spec.T_s)
    if s == 0:
        return complex(-spec.T_w / spec.T_s ** 2)
    den = -np.expm1(-s * spec.T_s)
    if abs(den) < 1e-12:
        raise PoleError(
            "pole of translation operator at s = %s (comb zero of the "
            "denominator)" % s
        )
    num = -np.expm1(-s * spec.T_w)
    return complex(-(1.0 / spec.T_s) * num / den)


def _check_amplitude(spec, shifts):
    if spec.kind == DutyKind.TRANSLATION:
        limit = min(spec.T_w, spec.T_s - spec.T_w)
    else:
        limit = spec.T_s
    amax = float(np.max(np.abs(shifts))) if len(shifts) else 0.0
    if amax >= limit:
        raise EdgeCollisionError(
            "edge collision: shift %.3e exceeds the admissible window %.3e"
            % (amax, limit)
        )
    if amax > 0.01 * limit:
        warnings.warn(
            "edge shifts exceed 1%% of the linearization window "
            "(max %.3e of %.3e); first-order duty equivalence degrades"
            % (amax, limit),
            stacklevel=3,
        )


def duty_sequence_from_edges(spec: DutyOperatorSpec, edge_shifts) -> np.ndarray:
    """Per-cycle equivalent-duty perturbations from exact pulse overlap.

    Fixed-frequency kinds: the window-n pulse-area deviation is exactly
    +-shift/T_s (only the free edge moves, inside its own period), so the
    output at cycle n depends on the cycle-n shift alone.

    TRANSLATION: pulse n (width T_w) moves to [n T_s + d_n, n T_s + d_n + T_w].
    The gating perturbation dq = q_shifted - q_nominal is integrated into
    the running equivalent-duty signal y(t) = (1/T_s) int_0^t dq, and the
    returned d-hat[n] is the mean of y over clock window n. For a constant
    shift d this yields the static value -d T_w / T_s^2 (plus O(d^2)).

    Raises EdgeCollisionError when shifts break the pulse ordering; warns
    above 1% of the linearization window.
    """
    shifts = np.asarray(edge_shifts, dtype=float)
    if shifts.ndim != 1:
        raise ValueError("edge_shifts must be a 1-D sequence")
    n_cyc = shifts.shape[0]
    if n_cyc == 0:
        return np.zeros(0)
    _check_amplitude(spec, shifts)
    ts = spec.T_s
    if spec.kind == DutyKind.FF_TRAILING_EDGE:
        return shifts / ts
    if spec.kind == DutyKind.FF_LEADING_EDGE:
        return -shifts / ts

    tw = spec.T_w
    if np.any(shifts[:-1] - shifts[1:] >= ts - tw):
        raise EdgeCollisionError("edge collision: adjacent pulses overlap")
    grid = np.arange(n_cyc) * ts
    bounds = np.arange(n_cyc + 1) * ts
    # Slope-change events of y(t): shifted pulse edges add gating, nominal
    # edges remove it. Window boundaries enter as window-advance markers so
    # each sweep interval is attributed without any floating-point division.
    times = np.concatenate([
        grid + shifts, grid + shifts + tw, grid, grid + tw, bounds,
    ])
    dslopes = np.concatenate([
        np.full(n_cyc, 1.0), np.full(n_cyc, -1.0),
        np.full(n_cyc, -1.0), np.full(n_cyc, 1.0),
        np.zeros(n_cyc + 1),
    ]) / ts
    dwin = np.concatenate([np.zeros(4 * n_cyc, dtype=int),
                           np.ones(n_cyc + 1, dtype=int)])
    order = np.argsort(times, kind="stable")

    areas = np.zeros(n_cyc)
    y = 0.0
    rate = 0.0
    w = -1
    t_cur = min(times[order[0]], 0.0)
    for idx in order:
        t_ev = times[idx]
        if t_ev > t_cur:
            if 0 <= w < n_cyc:
                dt = t_ev - t_cur
                areas[w] += y * dt + 0.5 * rate * dt * dt
            y += rate * (t_ev - t_cur)
            t_cur = t_ev
        rate += dslopes[idx]
        w += dwin[idx]
    # y already integrates dq/T_s; the window mean adds the second 1/T_s
    return areas / ts


def _bin_cycles(f_hz, t_s, n_max=4096, n_min=64):
    """Cycle count making f an (almost) exact DFT bin of the cycle grid."""
    best_n, best_err = n_min, np.inf
    for n in range(n_min, n_max + 1):
        m = f_hz * t_s * n
        err = abs(m - round(m))
        if round(m) >= 1 and err < best_err:
            best_n, best_err = n, err
            if err < 1e-12:
                break
    return best_n


def measured_duty_gain(spec: DutyOperatorSpec, f_hz, amplitude=None,
                       n_cycles=None) -> complex:
    """Empirical duty gain at frequency ``f_hz`` from exact pulse geometry.

    A sinusoidal shift sequence is applied and input and output are
    correlated at the single bin 2 pi f, both in the frame the operator is
    defined in: the input is the ZOH reconstruction of the shift sequence;
    the output is the ZOH reconstruction of the duty sequence for the
    fixed-frequency kinds, and for TRANSLATION the exact gating
    perturbation normalized by s T_s (the transform of its running
    equivalent-duty signal). To first order in the amplitude this
    reproduces ``duty_gain`` at bin frequencies.
    """
    ts = spec.T_s
    if amplitude is None:
        amplitude = 1e-4 * ts
    if n_cycles is None:
        n_cycles = _bin_cycles(f_hz, ts)
    n = np.arange(n_cycles)
    shifts = amplitude * np.sin(2 * np.pi * f_hz * n * ts)
    w = 2 * np.pi * f_hz

    def zoh_transform(seq):
        ph = np.exp(-1j * w * n * ts)
        return np.sum(seq * ph) * (1 - np.exp(-1j * w * ts)) / (1j * w)

    u = zoh_transform(shifts)
    if spec.kind != DutyKind.TRANSLATION:
        seq = duty_sequence_from_edges(spec, shifts)
        return complex(zoh_transform(seq) / u)

    tw = spec.T_w

    def rect_transform(t0, t1):
        # integral of e^{-jwt} over [t0, t1]
        return (np.exp(-1j * w * t0) - np.exp(-1j * w * t1)) / (1j * w)

    y = 0.0 + 0.0j
    for k in range(n_cycles):
        d = shifts[k]
        if d == 0.0:
            continue
        t_rise = k * ts
        t_fall = k * ts + tw
        if d > 0:
            y -= rect_transform(t_rise, t_rise + d)   # dq = -1 ahead of rise
            y += rect_transform(t_fall, t_fall + d)   # dq = +1 past the fall
        else:
            y += rect_transform(t_rise + d, t_rise)
            y -= rect_transform(t_fall + d, t_fall)
    y /= 1j * w * ts
    return complex(y / u)
