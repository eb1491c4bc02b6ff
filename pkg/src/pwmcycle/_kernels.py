"""Hot numeric kernels: matrix exponential, segment propagation and the
event-resolved cycle march.

Everything is float64 numpy written in a numba-compatible subset and JIT
compiled when the numba backend is active (see ``_backend``). Only arrays
and scalars cross this boundary; object wrapping lives in the public
modules.
"""

import numpy as np

from ._backend import njit

# PWM logic codes for march_cycles
MODE_COT = 0
MODE_COFT = 1
MODE_FF_TRAILING = 2
MODE_FF_LEADING = 3

# march status codes
STATUS_OK = 0
STATUS_EVENT_NOT_REACHED = 1
STATUS_DIVERGED = 2

# Pade [13/13] numerator coefficients (denominator uses the alternating signs)
_B13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


@njit(cache=True)
def expm(a):
    """Matrix exponential by scaling-and-squaring with a Pade [13/13] kernel."""
    n = a.shape[0]
    nrm = 0.0
    for j in range(n):
        c = 0.0
        for i in range(n):
            c += abs(a[i, j])
        if c > nrm:
            nrm = c
    if nrm == 0.0:
        return np.eye(n)
    s = 0
    if nrm > _THETA13:
        s = int(np.ceil(np.log2(nrm / _THETA13)))
    a1 = np.ascontiguousarray(a) / (2.0 ** s)
    b = _B13
    ident = np.eye(n)
    a2 = a1 @ a1
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a1 @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6
        + b[5] * a4
        + b[3] * a2
        + b[1] * ident
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6
        + b[4] * a4
        + b[2] * a2
        + b[0] * ident
    )
    x = np.ascontiguousarray(np.linalg.solve(v - u, v + u))
    for _ in range(s):
        x = x @ x
    return x


@njit(cache=True)
def prop_pair(a, b, t):
    """State-transition matrix and forced response over duration ``t``.

    Uses the augmented block [[A, b], [0, 0]]: its exponential's top-left
    block is phi and the top-right column is gamma. Valid for singular A.
    """
    n = a.shape[0]
    m = np.zeros((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            m[i, j] = a[i, j] * t
        m[i, n] = b[i] * t
    r = expm(m)
    phi = np.empty((n, n))
    gam = np.empty(n)
    for i in range(n):
        for j in range(n):
            phi[i, j] = r[i, j]
        gam[i] = r[i, n]
    return phi, gam


@njit(cache=True)
def find_crossing(a, b, k_row, se, vc, x0, t_max, n_grid, phi_step, gam_step,
                  g_tol, t_tol):
    """Earliest root of g(t) = K x(t) - vc - Se t on (0, t_max].

    Grid scan with the precomputed sub-interval propagator brackets the
    first sign change; a safeguarded Newton (bisection fallback) refines it.
    Roots exactly at t = 0 are excluded: when g(0) = 0 the search direction
    is taken from the event-function slope.

    Returns (t_star, x_star, n_crossings, status).
    """
    n = x0.shape[0]
    dt = t_max / n_grid
    g_prev = k_row @ x0 - vc
    if g_prev == 0.0:
        gd0 = k_row @ (a @ x0 + b) - se
        g_prev = 1e-300 if gd0 > 0.0 else -1e-300
    x_prev = x0.copy()
    x_lo = x0.copy()
    t_lo = 0.0
    sign_lo = 1.0 if g_prev > 0.0 else -1.0
    n_cross = 0
    for i in range(1, n_grid + 1):
        x_i = phi_step @ x_prev + gam_step
        t_i = dt * i
        g_i = k_row @ x_i - vc - se * t_i
        if (g_prev < 0.0 and g_i >= 0.0) or (g_prev > 0.0 and g_i <= 0.0):
            n_cross += 1
            if n_cross == 1:
                t_lo = t_i - dt
                x_lo = x_prev.copy()
                sign_lo = 1.0 if g_prev > 0.0 else -1.0
        x_prev = x_i
        g_prev = g_i
    if n_cross == 0:
        return -1.0, x0, 0, STATUS_EVENT_NOT_REACHED
    lo = 0.0
    hi = dt
    tau = 0.5 * dt
    t_star = t_lo + tau
    x_t = x_lo
    for _ in range(90):
        phi_t, gam_t = prop_pair(a, b, tau)
        x_t = phi_t @ x_lo + gam_t
        t_star = t_lo + tau
        g_t = k_row @ x_t - vc - se * t_star
        if abs(g_t) <= g_tol or (hi - lo) <= t_tol:
            break
        if g_t * sign_lo > 0.0:
            lo = tau
        else:
            hi = tau
        gd = k_row @ (a @ x_t + b) - se
        if gd != 0.0:
            t_new = tau - g_t / gd
        else:
            t_new = 0.5 * (lo + hi)
        if t_new <= lo or t_new >= hi:
            t_new = 0.5 * (lo + hi)
        tau = t_new
    return t_star, x_t, n_cross, STATUS_OK


@njit(cache=True)
def march_cycles(mode, a_on, b_on, a_off, b_off, k_row, se, vc_step,
                 fixed_t, t_cap, t_s, x0, carried0, n_grid, g_tol, t_tol,
                 div_norm):
    """Event-resolved cycle-by-cycle simulation for one PWM logic.

    ``vc_step[k]`` is the comparator control value in effect for the event
    that terminates step k (i.e. the value at sampling edge k+1). For the
    fixed-frequency modes ``carried0`` is the event-determined duration of
    cycle 0 (on-time for trailing edge, off-time for leading edge);
    COT/COFT ignore it.

    Returns (samples, mids, durations, edge_times, mid_times, crossings,
    carried, status, status_cycle). ``samples[k]`` is the state at sampling
    edge k; ``mids[k]`` the state at the intermediate segment boundary of
    step k. On a non-OK status only entries up to ``status_cycle`` are valid.
    """
    n = x0.shape[0]
    n_cyc = vc_step.shape[0]
    samples = np.zeros((n_cyc + 1, n))
    mids = np.zeros((n_cyc, n))
    durations = np.zeros(n_cyc)
    edge_times = np.zeros(n_cyc + 1)
    mid_times = np.zeros(n_cyc)
    crossings = np.zeros(n_cyc, dtype=np.int64)
    for i in range(n):
        samples[0, i] = x0[i]

    # Propagators reused every cycle: the fixed segment (COT/COFT) and the
    # event-search grid step.
    if mode == MODE_COT:
        phi_f, gam_f = prop_pair(a_on, b_on, fixed_t)
        phi_s, gam_s = prop_pair(a_off, b_off, t_cap / n_grid)
        t_max_ev = t_cap
    elif mode == MODE_COFT:
        phi_f, gam_f = prop_pair(a_off, b_off, fixed_t)
        phi_s, gam_s = prop_pair(a_on, b_on, t_cap / n_grid)
        t_max_ev = t_cap
    elif mode == MODE_FF_TRAILING:
        phi_f, gam_f = prop_pair(a_on, b_on, 0.0)
        phi_s, gam_s = prop_pair(a_on, b_on, t_s / n_grid)
        t_max_ev = t_s
    else:
        phi_f, gam_f = prop_pair(a_off, b_off, 0.0)
        phi_s, gam_s = prop_pair(a_off, b_off, t_s / n_grid)
        t_max_ev = t_s

    x = x0.copy()
    t_abs = 0.0
    carried = carried0
    status = STATUS_OK
    status_cycle = -1
    for k in range(n_cyc):
        vc = vc_step[k]
        if mode == MODE_COT:
            y = phi_f @ x + gam_f
            seg1 = fixed_t
            ea, eb = a_off, b_off
        elif mode == MODE_COFT:
            y = phi_f @ x + gam_f
            seg1 = fixed_t
            ea, eb = a_on, b_on
        elif mode == MODE_FF_TRAILING:
            seg1 = t_s - carried
            phi_v, gam_v = prop_pair(a_off, b_off, seg1)
            y = phi_v @ x + gam_v
            ea, eb = a_on, b_on
        else:
            seg1 = t_s - carried
            phi_v, gam_v = prop_pair(a_on, b_on, seg1)
            y = phi_v @ x + gam_v
            ea, eb = a_off, b_off
        for i in range(n):
            mids[k, i] = y[i]
        mid_times[k] = t_abs + seg1

        t_star, _, n_cross, st = find_crossing(
            ea, eb, k_row, se, vc, y, t_max_ev, n_grid, phi_s, gam_s,
            g_tol, t_tol,
        )
        if st != STATUS_OK:
            status = STATUS_EVENT_NOT_REACHED
            status_cycle = k
            break
        # Recompute the endpoint with a single full-duration propagator so
        # segment arithmetic matches compose() bit for bit.
        phi_e, gam_e = prop_pair(ea, eb, t_star)
        x = phi_e @ y + gam_e
        carried = t_star
        durations[k] = t_star
        crossings[k] = n_cross
        t_abs = mid_times[k] + t_star
        edge_times[k + 1] = t_abs
        for i in range(n):
            samples[k + 1, i] = x[i]
        nrm2 = 0.0
        ok = True
        for i in range(n):
            if not np.isfinite(x[i]):
                ok = False
            nrm2 += x[i] * x[i]
        if (not ok) or nrm2 > div_norm * div_norm:
            status = STATUS_DIVERGED
            status_cycle = k
            break
    return (samples, mids, durations, edge_times, mid_times, crossings,
            carried, status, status_cycle)
