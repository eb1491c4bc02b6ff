"""Periodic operating point: fixed point of the one-cycle map plus the
comparator event equation, solved jointly per PWM logic.

Unknowns per logic: COT -> (X, T_off), COFT -> (X, T_on),
FF_TRAILING -> (X, T_on) with T_off = T_s - T_on, FF_LEADING -> (X, T_off)
with T_on = T_s - T_off. The fixed-frequency sum constraint is enforced
structurally, never by the solver.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularMapError, SolverError
from .model import ConverterModel, PwmKind, require_valid
from .propagation import compose, propagator

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class PeriodicOperatingPoint:
    """Steady state sampled at the logic's sampling edge.

    ``boundary_states`` holds the state at each segment end of the steady
    cycle, in cycle order (intermediate edge first, sampling edge last).
    """

    x_star: np.ndarray
    T_on_star: float
    T_off_star: float
    boundary_states: list
    residual_norm: float

    @property
    def cycle_duration(self):
        return self.T_on_star + self.T_off_star


def fixed_point_fixed_timing(segments_with_durations) -> np.ndarray:
    """Solve (I - Pi) X = forcing for the cycle with all durations given.

    Raises SingularMapError when I - Pi is singular or has condition number
    above 1e12 (the expected outcome for marginal kernels such as a pure
    integrator cascade).
    """
    comp = compose(segments_with_durations,
                   np.zeros(segments_with_durations[0][0].n))
    n = comp.total_phi.shape[0]
    m = np.eye(n) - comp.total_phi
    if np.linalg.cond(m) >= _COND_LIMIT:
        raise SingularMapError("periodic solution not unique or marginal")
    return np.linalg.solve(m, comp.total_forcing)


def cycle_layout(model: ConverterModel, var: float):
    """Segment order for one cycle starting at the sampling edge.

    Returns (segments_with_durations, duration_sensitivities) where the
    sensitivities are d(duration_i)/d(var) for the event-determined
    unknown ``var``.
    """
    kind = model.pwm.kind
    fx = model.pwm.fixed_duration
    on, off = model.on_segment, model.off_segment
    if kind == PwmKind.COT:
        return [(on, fx), (off, var)], (0.0, 1.0)
    if kind == PwmKind.COFT:
        return [(off, fx), (on, var)], (0.0, 1.0)
    if kind == PwmKind.FF_TRAILING:
        return [(off, fx - var), (on, var)], (-1.0, 1.0)
    return [(on, fx - var), (off, var)], (-1.0, 1.0)


def durations_from_var(model: ConverterModel, var: float):
    """(T_on, T_off) implied by the event-determined duration ``var``."""
    kind = model.pwm.kind
    fx = model.pwm.fixed_duration
    if kind == PwmKind.COT:
        return fx, var
    if kind == PwmKind.COFT:
        return var, fx
    if kind == PwmKind.FF_TRAILING:
        return var, fx - var
    return fx - var, var


def event_duration(model: ConverterModel, op: PeriodicOperatingPoint):
    """The event-determined steady duration for the model's logic."""
    if model.pwm.kind in (PwmKind.COT, PwmKind.FF_LEADING):
        return op.T_off_star
    return op.T_on_star


def _var_bounds(model):
    kind = model.pwm.kind
    fx = model.pwm.fixed_duration
    if kind in (PwmKind.FF_TRAILING, PwmKind.FF_LEADING):
        return 0.0, fx
    return 0.0, 10.0 * fx  # duration cap for COT/COFT event solves


def _averaged_duty_guess(model):
    """Duty from the averaged model and the event equation, as a seed.

    Scans the duty axis for a sign change of
    K x_avg(D) - vc - Se * dT(D) where x_avg solves the duty-averaged DC
    equations. Returns the bisected duty, or the grid argmin when no sign
    change exists.
    """
    comp = model.comparator
    on, off = model.on_segment, model.off_segment
    b_on = on.forcing_vector
    b_off = off.forcing_vector

    def resid(d):
        a = d * on.A + (1 - d) * off.A
        b = d * b_on + (1 - d) * b_off
        try:
            x = np.linalg.solve(a, -b)
        except np.linalg.LinAlgError:
            return np.nan
        return comp.K @ x - comp.vc_nominal - comp.Se * _var_of_duty(model, d)

    grid = np.linspace(0.02, 0.98, 97)
    vals = np.array([resid(d) for d in grid])
    ok = np.isfinite(vals)
    for i in range(len(grid) - 1):
        if ok[i] and ok[i + 1] and vals[i] * vals[i + 1] < 0:
            lo, hi = grid[i], grid[i + 1]
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                r = resid(mid)
                if not np.isfinite(r):
                    break
                if r * vals[i] > 0:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    if ok.any():
        return grid[np.nanargmin(np.abs(vals))]
    return 0.5


def _var_of_duty(model, d):
    kind = model.pwm.kind
    fx = model.pwm.fixed_duration
    d = min(max(d, 1e-6), 1 - 1e-6)
    if kind == PwmKind.COT:
        return fx * (1 - d) / d
    if kind == PwmKind.COFT:
        return fx * d / (1 - d)
    if kind == PwmKind.FF_TRAILING:
        return fx * d
    return fx * (1 - d)


def _scalar_preseed(model, var_guess):
    """Refine the unknown duration on the reduced scalar problem.

    For a trial duration the cycle-closed state X(var) follows from the
    fixed-timing solve, leaving the scalar event residual
    f(var) = K X(var) - vc - Se var. A grid scan brackets the root nearest
    the averaged-duty seed, then bisection tightens it.
    """
    comp = model.comparator
    hi_b = _var_bounds(model)[1]

    def f(var):
        try:
            x = fixed_point_fixed_timing(cycle_layout(model, var)[0])
        except SingularMapError:
            return np.nan, None
        return comp.K @ x - comp.vc_nominal - comp.Se * var, x

    if model.pwm.kind in (PwmKind.FF_TRAILING, PwmKind.FF_LEADING):
        grid = np.linspace(0.01, 0.99, 60) * hi_b
    else:
        grid = np.geomspace(0.02, 0.98, 60) * hi_b
    vals = np.full(len(grid), np.nan)
    for i, v in enumerate(grid):
        vals[i], _ = f(v)
    brackets = [
        i for i in range(len(grid) - 1)
        if np.isfinite(vals[i]) and np.isfinite(vals[i + 1])
        and vals[i] * vals[i + 1] < 0
    ]
    if not brackets:
        i_best = (int(np.nanargmin(np.abs(vals)))
                  if np.isfinite(vals).any() else len(grid) // 2)
        x_best = f(grid[i_best])[1]
        return grid[i_best], x_best
    i = min(brackets, key=lambda j: abs(0.5 * (grid[j] + grid[j + 1]) - var_guess))
    lo, hi = grid[i], grid[i + 1]
    f_lo = vals[i]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm, _ = f(mid)
        if not np.isfinite(fm):
            break
        if fm * f_lo > 0:
            lo, f_lo = mid, fm
        else:
            hi = mid
    var0 = 0.5 * (lo + hi)
    return var0, f(var0)[1]


def solve_periodic(model: ConverterModel, tol=1e-12, max_iter=50,
                   x0=None, var0=None) -> PeriodicOperatingPoint:
    """Jointly solve cycle closure and the event equation by damped Newton.

    The residual stacks the cycle-closure error (scaled by 1 + ||X||) and
    the event-equation error (scaled by 1 + |vc|); the analytic Jacobian
    uses the exact duration derivatives of the segment propagators. The
    seed comes from the averaged-model duty followed by a scalar pre-solve
    on the reduced problem, so Newton normally only polishes.

    Raises
    ------
    SolverError
        "no periodic solution found" when Newton stalls, or
        "pulse skipping / saturation at operating point" when the
        event-determined duration leaves its admissible interval.
    """
    require_valid(model)
    comp = model.comparator
    k_row = comp.K
    se = comp.Se
    vc = comp.vc_nominal
    n = model.n
    lo_b, hi_b = _var_bounds(model)

    if var0 is None:
        d0 = _averaged_duty_guess(model)
        var0, x_seed = _scalar_preseed(model, _var_of_duty(model, d0))
        if x0 is None and x_seed is not None:
            x0 = x_seed
    if x0 is None:
        try:
            x0 = fixed_point_fixed_timing(cycle_layout(model, var0)[0])
        except SingularMapError:
            x0 = np.zeros(n)

    x = np.array(x0, dtype=float)
    var = float(var0)
    state_scale = 1.0 + np.linalg.norm(x)
    event_scale = 1.0 + abs(vc)

    def residual(x, var):
        segs, sens = cycle_layout(model, var)
        c = compose(segs, x)
        r1 = c.x_end - x
        r2 = k_row @ x - vc - se * var
        scaled = np.concatenate([r1 / state_scale, [r2 / event_scale]])
        return scaled, c, sens

    r, c, sens = residual(x, var)
    rn = np.linalg.norm(r)
    converged = rn < tol
    it = 0
    while not converged and it < max_iter:
        it += 1
        segs, _ = cycle_layout(model, var)
        (seg1, d1), (seg2, d2) = segs
        y1 = c.boundary_states[0]
        x_end = c.x_end
        f1 = seg1.A @ y1 + seg1.forcing_vector
        f2 = seg2.A @ x_end + seg2.forcing_vector
        phi2 = propagator(seg2, d2).phi
        dxe_dvar = sens[0] * (phi2 @ f1) + sens[1] * f2
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = (c.total_phi - np.eye(n)) / state_scale
        jac[:n, n] = dxe_dvar / state_scale
        jac[n, :n] = k_row / event_scale
        jac[n, n] = -se / event_scale
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise SolverError("no periodic solution found: singular Newton "
                              "system at iteration %d" % it)
        lam = 1.0
        for _ in range(20):
            x_try = x + lam * delta[:n]
            var_try = min(max(var + lam * delta[n], lo_b + 1e-16 * hi_b),
                          hi_b - 1e-16 * hi_b)
            r_try, c_try, _ = residual(x_try, var_try)
            if np.linalg.norm(r_try) < rn:
                x, var, r, c = x_try, var_try, r_try, c_try
                rn = np.linalg.norm(r)
                break
            lam *= 0.5
        else:
            raise SolverError("no periodic solution found: damping stalled "
                              "at iteration %d (residual %.3e)" % (it, rn))
        converged = rn < tol
    if not converged:
        raise SolverError("no periodic solution found: %d iterations, "
                          "residual %.3e" % (max_iter, rn))
    frac = var / hi_b
    if not (1e-9 < frac < 1 - 1e-9):
        raise SolverError("pulse skipping / saturation at operating point "
                          "(event duration %.3e of cap %.3e)" % (var, hi_b))
    t_on, t_off = durations_from_var(model, var)
    return PeriodicOperatingPoint(
        x_star=x,
        T_on_star=t_on,
        T_off_star=t_off,
        boundary_states=[s.copy() for s in c.boundary_states],
        residual_norm=rn,
    )
