"""Oracle cross-check battery.

Each check pits an analytic path against an independent reference
(adaptive quadrature, finite differences, the event-resolved simulator,
exact pulse geometry) and reports the worst deviation against a fixed
threshold. The CLI ``verify`` command runs the full battery plus
model-specific cross-checks for the loaded configuration; the acceptance
test suite runs the same functions.
"""

import numpy as np
import scipy.integrate
import scipy.linalg

from . import duty as duty_mod
from . import sim as sim_mod
from .distill import (distill, distilled_cycle_map,
                      distilled_segment_propagator, solve_distilled_dc)
from .errors import PwmCycleError
from .model import ComparatorSpec, PwmKind, PwmLogic, build_buck
from .propagation import PwlSegment, compose, propagator, \
    propagator_time_derivatives
from .smallsignal import (closed_loop_eigenvalues, control_to_output_tf,
                          jacobian_blocks, linearized_map)
from .steady import (cycle_layout, event_duration,
                     fixed_point_fixed_timing, solve_periodic)


class CheckResult:
    """Outcome of one verification check."""

    def __init__(self, name, max_dev, threshold, detail=""):
        self.name = name
        self.max_dev = float(max_dev)
        self.threshold = float(threshold)
        self.detail = detail

    @property
    def passed(self):
        return self.max_dev <= self.threshold

    def line(self):
        return "%-44s %-4s  max_dev=%.3e  threshold=%.3e%s" % (
            self.name, "PASS" if self.passed else "FAIL",
            self.max_dev, self.threshold,
            ("  (%s" % self.detail + ")") if self.detail else "",
        )


def _random_segment(rng, n):
    a = rng.uniform(-1.0, 1.0, size=(n, n))
    b = rng.uniform(-1.0, 1.0, size=(n, 1))
    u = rng.uniform(-2.0, 2.0, size=1)
    return PwlSegment(A=a, B=b, U=u, label="rnd")


def _rel(delta, ref):
    return float(np.linalg.norm(delta) / max(np.linalg.norm(ref), 1e-300))


# ----------------------------------------------------------------------
# criterion 1: propagator against adaptive quadrature + invariants

def check_propagator_quadrature(seed=0, n_segments=100):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_segments):
        n = int(rng.integers(2, 5))
        seg = _random_segment(rng, n)
        t_end = float(rng.uniform(0.05, 2.0))
        gam = propagator(seg, t_end).gamma
        bvec = seg.forcing_vector

        def f(tau):
            return scipy.linalg.expm(seg.A * (t_end - tau)) @ bvec

        ref, _ = scipy.integrate.quad_vec(f, 0.0, t_end,
                                          epsabs=1e-14, epsrel=1e-13)
        worst = max(worst, _rel(gam - ref, ref))
    return CheckResult("propagator gamma vs adaptive quadrature",
                       worst, 1e-10)


def check_propagator_semigroup(seed=1, n_segments=100):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_segments):
        n = int(rng.integers(2, 5))
        seg = _random_segment(rng, n)
        a_norm = np.linalg.norm(seg.A)
        t1 = float(rng.uniform(0, 10.0 / a_norm))
        t2 = float(rng.uniform(0, 10.0 / a_norm))
        p1 = propagator(seg, t1)
        p2 = propagator(seg, t2)
        p12 = propagator(seg, t1 + t2)
        worst = max(worst, _rel(p12.phi - p2.phi @ p1.phi, p12.phi))
        ref = p2.phi @ p1.gamma + p2.gamma
        worst = max(worst, _rel(p12.gamma - ref, ref))
    return CheckResult("propagator semigroup / forced response",
                       worst, 1e-10)


def check_propagator_derivatives(seed=2, n_segments=100):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_segments):
        n = 2 if i % 2 == 0 else 4
        seg = _random_segment(rng, n)
        t_end = float(rng.uniform(0.1, 1.5))
        dphi, dgam = propagator_time_derivatives(seg, t_end)
        h = np.sqrt(np.finfo(float).eps) * max(t_end, 1.0)

        def stencil(getter):
            vals = [getter(propagator(seg, t_end + k * h))
                    for k in (-2, -1, 1, 2)]
            return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)

        worst = max(worst, _rel(dphi - stencil(lambda p: p.phi), dphi))
        worst = max(worst, _rel(dgam - stencil(lambda p: p.gamma), dgam))
    return CheckResult("propagator duration derivatives vs 4th-order FD",
                       worst, 1e-6)


# ----------------------------------------------------------------------
# criterion 2: multi-segment closed form and fixed point

def check_compose_expansion(seed=3):
    rng = np.random.default_rng(seed)
    segs = [(_random_segment(rng, 3), float(rng.uniform(0.1, 0.8)))
            for _ in range(4)]
    x0 = rng.uniform(-1, 1, size=3)
    comp = compose(segs, x0)
    props = [propagator(s, t) for s, t in segs]
    worst = 0.0
    # term-by-term expansion: X4 = P4 P3 P2 P1 x0 + P4 P3 P2 g1 + ... + g4
    x_expl = x0.copy()
    states = []
    for p in props:
        x_expl = p.phi @ x_expl + p.gamma
        states.append(x_expl.copy())
    phi_total = props[3].phi @ props[2].phi @ props[1].phi @ props[0].phi
    x_terms = (phi_total @ x0
               + props[3].phi @ props[2].phi @ props[1].phi @ props[0].gamma
               + props[3].phi @ props[2].phi @ props[1].gamma
               + props[3].phi @ props[2].gamma
               + props[3].gamma)
    worst = max(worst, _rel(comp.x_end - x_terms, x_terms))
    worst = max(worst, _rel(comp.total_phi - phi_total, phi_total))
    for got, ref in zip(comp.boundary_states, states):
        worst = max(worst, _rel(got - ref, ref))
    return CheckResult("four-segment expansion term agreement", worst, 1e-13)


def check_fixed_point_invariance(seed=4):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 4))
        segs = [(_random_segment(rng, n), float(rng.uniform(0.1, 0.6)))
                for _ in range(int(rng.integers(1, 5)))]
        try:
            x_star = fixed_point_fixed_timing(segs)
        except PwmCycleError:
            continue
        x_back = compose(segs, x_star).x_end
        worst = max(worst, float(np.linalg.norm(x_back - x_star)
                                 / (1 + np.linalg.norm(x_star))))
    return CheckResult("fixed point cycle invariance", worst, 1e-10)


# ----------------------------------------------------------------------
# criterion 3: analytic Jacobian blocks vs finite differences

def _random_buck(rng, kind, se_scale=1.0, duty=None):
    """Randomized buck design with a comparator encoding where the sensed
    quantity meets the (rising) ramped threshold head-on: K = +1 for the
    valley triggers (current falls onto the ramp), K = -1 for the peak
    triggers. This is the compensating geometry: positive Se damps the
    current loop."""
    vin = float(rng.uniform(8, 16))
    lf = float(rng.uniform(5e-6, 2e-5))
    cf = float(rng.uniform(4.7e-5, 2.2e-4))
    r = float(rng.uniform(0.5, 2.0))
    d = float(rng.uniform(0.3, 0.65)) if duty is None else duty
    t_s = 1e-5
    vo = d * vin
    io = vo / r
    ripple = (vin - vo) * d * t_s / lf
    i_valley = io - ripple / 2
    i_peak = io + ripple / 2
    if kind == PwmKind.COT:
        pwm = PwmLogic(PwmKind.COT, d * t_s)
        k_row = np.array([1.0, 0.0])
        se = se_scale * vo / lf
        vc = i_valley - se * (1 - d) * t_s
    elif kind == PwmKind.COFT:
        pwm = PwmLogic(PwmKind.COFT, (1 - d) * t_s)
        k_row = np.array([-1.0, 0.0])
        se = se_scale * (vin - vo) / lf
        vc = -i_peak - se * d * t_s
    elif kind == PwmKind.FF_TRAILING:
        pwm = PwmLogic(PwmKind.FF_TRAILING, t_s)
        k_row = np.array([-1.0, 0.0])
        se = se_scale * vo / lf
        vc = -i_peak - se * d * t_s
    else:
        pwm = PwmLogic(PwmKind.FF_LEADING, t_s)
        k_row = np.array([1.0, 0.0])
        se = se_scale * (vin - vo) / lf
        vc = i_valley - se * (1 - d) * t_s
    comp = ComparatorSpec(K=k_row, Se=se, vc_nominal=vc)
    return build_buck(Vin=vin, L_f=lf, C_f=cf, R=r, pwm=pwm, comparator=comp)


def _fd_blocks(model, op):
    """Finite differences of the explicit two-segment cycle map."""
    var = event_duration(model, op)
    segs, sens = cycle_layout(model, var)
    (s1, d1), (s2, d2) = segs
    x_star = op.x_star

    def big_map(x, t1, t2):
        return compose([(s1, t1), (s2, t2)], x).x_end

    n = model.n
    phi_fd = np.zeros((n, n))
    scale = max(float(np.max(np.abs(x_star))), 1.0)
    for i in range(n):
        h = 1e-6 * max(abs(x_star[i]), scale)
        xp, xm = x_star.copy(), x_star.copy()
        xp[i] += h
        xm[i] -= h
        phi_fd[:, i] = (big_map(xp, d1, d2) - big_map(xm, d1, d2)) / (2 * h)
    ht = 1e-9 * (op.T_on_star + op.T_off_star)
    g2 = (big_map(x_star, d1, d2 + ht) - big_map(x_star, d1, d2 - ht)) / (2 * ht)
    g1 = (big_map(x_star, d1 + ht, d2) - big_map(x_star, d1 - ht, d2)) / (2 * ht)
    # gamma+ is the final-segment sensitivity; the previous-cycle timing
    # sensitivity of the FF logics enters through the first segment with
    # the chain-rule sign of T_s - var.
    gamma_plus_fd = g2
    gamma_minus_fd = sens[0] * g1 if sens[0] != 0.0 else None
    return phi_fd, gamma_plus_fd, gamma_minus_fd


def check_jacobian_blocks_fd(seed=5, designs=5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in (PwmKind.COT, PwmKind.COFT, PwmKind.FF_TRAILING,
                 PwmKind.FF_LEADING):
        for _ in range(designs):
            model = _random_buck(rng, kind)
            op = solve_periodic(model)
            bl = jacobian_blocks(model, op)
            phi_fd, gp_fd, gm_fd = _fd_blocks(model, op)
            worst = max(worst, _rel(bl.phi_cycle - phi_fd, bl.phi_cycle))
            worst = max(worst, _rel(bl.gamma_plus - gp_fd, bl.gamma_plus))
            if bl.gamma_minus is not None:
                worst = max(worst, _rel(bl.gamma_minus - gm_fd,
                                        bl.gamma_minus))
    return CheckResult("jacobian blocks vs finite differences (4 logics)",
                       worst, 1e-4)


# ----------------------------------------------------------------------
# criterion 4: subharmonic boundary of peak-current-mode trailing PWM

_PCM_BASE = dict(Vin=12.0, L_f=1e-5, C_f=1e-4, R=1.0)
_PCM_TS = 1e-5


def _pcm_model(vc, se=1e-9, k_sign=1.0):
    comp = ComparatorSpec(K=np.array([k_sign, 0.0]), Se=se, vc_nominal=vc)
    return build_buck(pwm=PwmLogic(PwmKind.FF_TRAILING, _PCM_TS),
                      comparator=comp, **_PCM_BASE)


def _pcm_vc_for_duty(d):
    vin, lf, r = _PCM_BASE["Vin"], _PCM_BASE["L_f"], _PCM_BASE["R"]
    vo = d * vin
    return vo / r + (vin - vo) * d * _PCM_TS / (2 * lf)


def _pcm_duty_lambda(vc, se=1e-9, k_sign=1.0):
    model = _pcm_model(vc, se, k_sign)
    op = solve_periodic(model)
    lmap = linearized_map(model, jacobian_blocks(model, op))
    lam = float(np.abs(closed_loop_eigenvalues(lmap)[0]))
    return op.T_on_star / _PCM_TS, lam, model, op


def check_subharmonic_boundary():
    duties = np.linspace(0.42, 0.58, 9)
    pts = [_pcm_duty_lambda(_pcm_vc_for_duty(d))[:2] for d in duties]
    cross = None
    for (d0, l0), (d1, l1) in zip(pts[:-1], pts[1:]):
        if (l0 - 1.0) * (l1 - 1.0) < 0:
            cross = d0 + (d1 - d0) * (1.0 - l0) / (l1 - l0)
            break
    dev = abs(cross - 0.5) if cross is not None else 1.0
    return CheckResult("subharmonic eigenvalue boundary at D = 0.5",
                       dev, 0.01,
                       detail="boundary D = %s" % (
                           "%.4f" % cross if cross is not None else "none"))


def check_subharmonic_oracle():
    results = {}
    for d_target, expect_p2 in ((0.55, True), (0.45, False)):
        _, _, model, op = _pcm_duty_lambda(_pcm_vc_for_duty(d_target), se=0.0)
        x0 = op.x_star * (1 + 1e-6)
        trace = sim_mod.simulate_cycles(
            model, model.comparator.vc_nominal, 2000, x0,
            initial_duration=op.T_on_star)
        gap, spread = sim_mod.period2_clusters(trace.sample_states[-400:])
        floor = max(spread, 1e-12 * np.linalg.norm(op.x_star))
        results[d_target] = (gap > 100 * floor) == expect_p2
    dev = 0.0 if all(results.values()) else 1.0
    return CheckResult("subharmonic period-2 oracle (D=0.55 vs 0.45)",
                       dev, 0.5,
                       detail="D=0.55 p2 ok=%s, D=0.45 none ok=%s"
                       % (results[0.55], results[0.45]))


def check_slope_compensation():
    vin, lf = _PCM_BASE["Vin"], _PCM_BASE["L_f"]
    se = 0.7 * vin / lf  # off-slope of the sensed current at the D = 0.7 target
    worst = 0.0
    d_max = 0.0
    for d in np.linspace(0.5, 0.72, 8):
        # compensating geometry: sensed current meets the ramp head-on
        vc = -_pcm_vc_for_duty(d) - se * d * _PCM_TS
        d_act, lam, _, _ = _pcm_duty_lambda(vc, se=se, k_sign=-1.0)
        worst = max(worst, lam)
        d_max = max(d_max, d_act)
    # all eigenvalues must stay inside the unit circle up to D > 0.70
    if d_max < 0.70:
        worst = 2.0
    return CheckResult("slope compensation moves boundary past D = 0.70",
                       worst, 1.0 - 1e-9,
                       detail="max |lambda| = %.4f up to D = %.3f"
                       % (worst, d_max))


# ----------------------------------------------------------------------
# criterion 5: transfer function vs sinusoidal injection

def _cot_reference_model():
    vin, lf, cf, r = 12.0, 1e-5, 1e-4, 1.0
    t_on = 4e-6
    d = 0.4
    vo = d * vin
    se = 0.5 * vo / lf  # half the off-slope of the sensed current
    i_valley = vo / r - (vin - vo) * t_on / lf / 2
    vc = i_valley - se * (1 - d) * 1e-5
    comp = ComparatorSpec(K=np.array([1.0, 0.0]), Se=se, vc_nominal=vc)
    return build_buck(Vin=vin, L_f=lf, C_f=cf, R=r,
                      pwm=PwmLogic(PwmKind.COT, t_on), comparator=comp)


def _pcm_compensated_model(d=0.45):
    vin, lf = _PCM_BASE["Vin"], _PCM_BASE["L_f"]
    se = d * vin / lf
    vc = -_pcm_vc_for_duty(d) - se * d * _PCM_TS
    return _pcm_model(vc, se=se, k_sign=-1.0)


def check_tf_injection(n_freq=15):
    worst_mag = 0.0
    worst_phase = 0.0
    n_win = 500
    for model in (_cot_reference_model(), _pcm_compensated_model()):
        op = solve_periodic(model)
        lmap = linearized_map(model, jacobian_blocks(model, op))
        t_cyc = op.cycle_duration
        # log-spaced bins of a fixed measurement window up to 0.4/T_cycle
        bins = np.unique(np.round(np.geomspace(2, 0.4 * n_win, n_freq)))
        for m in bins:
            f = m / (n_win * t_cyc)
            z = np.exp(2j * np.pi * f * t_cyc)
            h_an = control_to_output_tf(lmap, model.C_phys, z)
            h_ms = sim_mod.measure_frequency_response(model, op, f,
                                                      n_measure=n_win)
            worst_mag = max(worst_mag, abs(abs(h_ms) / abs(h_an) - 1.0))
            dphase = np.angle(h_ms / h_an)
            worst_phase = max(worst_phase, abs(np.degrees(dphase)))
    dev = max(worst_mag / 0.02, worst_phase / 2.0)
    return CheckResult("control-to-output TF vs injection (COT, FF)",
                       dev, 1.0,
                       detail="mag dev %.3e, phase dev %.3e deg"
                       % (worst_mag, worst_phase))


# ----------------------------------------------------------------------
# criterion 6: duty-mapping operator

def check_duty_mapping():
    t_s = 1e-5
    t_w = 0.4 * t_s
    spec = duty_mod.DutyOperatorSpec(duty_mod.DutyKind.TRANSLATION,
                                     T_s=t_s, T_w=t_w)
    dev = 0.0
    limit = duty_mod.duty_gain(spec, 0.0)
    if limit != complex(-t_w / t_s ** 2):
        dev = 1.0
    g_small = duty_mod.duty_gain(spec, 1j * 2 * np.pi * 1e-3 / t_s)
    dev = max(dev, abs(abs(g_small) / abs(limit) - 1.0) / 1e-3)

    n_win = 200
    worst_mag = 0.0
    worst_phase = 0.0
    for m in np.linspace(2, 0.45 * n_win, 20):
        f = int(round(m)) / (n_win * t_s)
        g_meas = duty_mod.measured_duty_gain(spec, f, amplitude=1e-4 * t_s,
                                             n_cycles=n_win)
        g_an = duty_mod.duty_gain(spec, 1j * 2 * np.pi * f)
        worst_mag = max(worst_mag, abs(abs(g_meas) / abs(g_an) - 1.0))
        worst_phase = max(worst_phase,
                          abs(np.degrees(np.angle(g_meas / g_an))))
    dev = max(dev, worst_mag / 0.01, worst_phase / 1.0)

    for kind, sign in ((duty_mod.DutyKind.FF_TRAILING_EDGE, 1.0),
                       (duty_mod.DutyKind.FF_LEADING_EDGE, -1.0)):
        sp = duty_mod.DutyOperatorSpec(kind, T_s=t_s)
        if duty_mod.duty_gain(sp, 1j * 1e4) != complex(sign / t_s):
            dev = max(dev, 1.0)
        seq = duty_mod.duty_sequence_from_edges(sp, np.array([1e-8, -2e-8]))
        if not np.array_equal(seq, sign * np.array([1e-8, -2e-8]) / t_s):
            dev = max(dev, 1.0)
    return CheckResult("duty operator: limits, DFT, FF gains", dev, 1.0,
                       detail="mag dev %.3e, phase dev %.3e deg"
                       % (worst_mag, worst_phase))


# ----------------------------------------------------------------------
# criterion 7: distillation identities

def check_distillation():
    lf, cf, r, vin = 1e-5, 1e-4, 1.0, 12.0
    comp = ComparatorSpec(K=np.array([1.0, 0.0]), Se=1e5, vc_nominal=6.0)
    pwm = PwmLogic(PwmKind.FF_TRAILING, 1e-5)
    ideal = build_buck(Vin=vin, L_f=lf, C_f=cf, R=r, pwm=pwm, comparator=comp)
    dm = distill(ideal)
    dev = 0.0
    ref_by = np.array([-1.0 / lf, -1.0 / (r * cf)])
    for by, e in ((dm.By_on, dm.residual_on), (dm.By_off, dm.residual_off)):
        if not np.array_equal(by, ref_by):
            dev = 1.0
        if np.linalg.norm(e) != 0.0:
            dev = 1.0
    t_on, t_off = 4e-6, 6e-6
    phi_h, _ = distilled_cycle_map(dm, t_on, t_off, np.array([vin, 4.8]))
    if not np.array_equal(phi_h, np.eye(2) + dm.A0 * (t_on + t_off)):
        dev = 1.0
    v_o, i_l, free = solve_distilled_dc(dm, vin, t_on, t_off)
    dev = max(dev, abs(v_o - 0.4 * vin) / (0.4 * vin) / 1e-12)
    dev = max(dev, abs(i_l - v_o / r) / (v_o / r) / 1e-12)
    if not free:
        dev = max(dev, 1.0)
    # closed forms against the generic matrix-exponential propagator
    seg = PwlSegment(A=dm.A0, B=dm.port_matrix("on"), U=np.array([vin, 4.8]))
    p = propagator(seg, 3e-6)
    phi_c, f_c = distilled_segment_propagator(dm, "on", 3e-6,
                                              np.array([vin, 4.8]))
    dev = max(dev, _rel(p.phi - phi_c, phi_c) / 1e-13)
    dev = max(dev, _rel(p.gamma - f_c, f_c) / 1e-13)
    # DCR-perturbed projection vs dense least squares
    lossy = build_buck(Vin=vin, L_f=lf, C_f=cf, R=r, R_dcr=0.05,
                       pwm=pwm, comparator=comp)
    dml = distill(lossy, A0=dm.A0)
    for a_i, e_i in ((lossy.on_segment.A, dml.residual_on),
                     (lossy.off_segment.A, dml.residual_off)):
        d = a_i - dm.A0
        # vec_F(v c) = kron(c^T, I) v : dense least squares over v
        design = np.kron(dml.C_phys.reshape(2, 1), np.eye(2))
        _, res, _, _ = np.linalg.lstsq(design, d.reshape(-1, order="F"),
                                       rcond=None)
        ref = float(np.sqrt(res[0])) if len(res) else 0.0
        dev = max(dev, abs(np.linalg.norm(e_i) - ref)
                  / max(np.linalg.norm(e_i), 1e-300) / 1e-10)
    return CheckResult("distillation identities and least squares", dev, 1.0)


# ----------------------------------------------------------------------
# model-specific cross checks (used by the CLI verify command)

def model_checks(model, quick=False):
    checks = []
    op = solve_periodic(model)
    closure = compose(cycle_layout(model, event_duration(model, op))[0],
                      op.x_star).x_end
    checks.append(CheckResult(
        "operating point cycle closure",
        float(np.linalg.norm(closure - op.x_star)
              / (1 + np.linalg.norm(op.x_star))),
        1e-9))

    bl = jacobian_blocks(model, op)
    phi_fd, gp_fd, gm_fd = _fd_blocks(model, op)
    dev = max(_rel(bl.phi_cycle - phi_fd, bl.phi_cycle),
              _rel(bl.gamma_plus - gp_fd, bl.gamma_plus))
    if bl.gamma_minus is not None:
        dev = max(dev, _rel(bl.gamma_minus - gm_fd, bl.gamma_minus))
    checks.append(CheckResult("jacobian blocks vs finite differences",
                              dev, 1e-4))

    lmap = linearized_map(model, bl)
    lam = np.abs(closed_loop_eigenvalues(lmap)[0])
    carried = event_duration(model, op)
    trace = sim_mod.simulate_cycles(model, model.comparator.vc_nominal,
                                    20, op.x_star,
                                    initial_duration=carried)
    checks.append(CheckResult(
        "fixed-point invariance of the simulator",
        float(np.max(np.linalg.norm(
            trace.sample_states - op.x_star, axis=1))
            / (1 + np.linalg.norm(op.x_star))),
        1e-9))

    if lam < 1.0 and lmap.eliminated and not quick:
        t_cyc = op.cycle_duration
        n_win = 400
        dev_mag, dev_ph = 0.0, 0.0
        for m in np.unique(np.round(np.geomspace(2, 0.3 * n_win, 4))):
            f = m / (n_win * t_cyc)
            z = np.exp(2j * np.pi * f * t_cyc)
            h_an = control_to_output_tf(lmap, model.C_phys, z)
            h_ms = sim_mod.measure_frequency_response(model, op, f,
                                                      n_measure=n_win)
            dev_mag = max(dev_mag, abs(abs(h_ms) / abs(h_an) - 1.0))
            dev_ph = max(dev_ph,
                         abs(np.degrees(np.angle(h_ms / h_an))))
        checks.append(CheckResult(
            "transfer function vs injection",
            max(dev_mag / 0.02, dev_ph / 2.0), 1.0,
            detail="mag dev %.3e, phase dev %.3e deg" % (dev_mag, dev_ph)))
    else:
        # unstable orbit (or Se ~ 0): the oracle must agree on the regime
        x0 = op.x_star * (1 + 1e-6)
        try:
            tr = sim_mod.simulate_cycles(
                model, model.comparator.vc_nominal, 1500, x0,
                initial_duration=carried)
            gap, spread = sim_mod.period2_clusters(tr.sample_states[-300:])
            floor = max(spread, 1e-12 * np.linalg.norm(op.x_star))
            agree = (gap > 100 * floor) == (lam >= 1.0)
        except PwmCycleError:
            agree = lam >= 1.0  # escape confirms instability
        checks.append(CheckResult(
            "eigenvalue regime vs period-2 oracle",
            0.0 if agree else 1.0, 0.5,
            detail="|lambda|max = %.4f" % lam))

    if model.n == 2 and model.on_segment.B.shape[1] == 1:
        dm = distill(model)
        recon_dev = 0.0
        for a_i, by, e_i in ((model.on_segment.A, dm.By_on, dm.residual_on),
                             (model.off_segment.A, dm.By_off,
                              dm.residual_off)):
            recon = dm.A0 + np.outer(by, dm.C_phys) + e_i
            recon_dev = max(recon_dev, _rel(recon - a_i, a_i))
        checks.append(CheckResult("distillation exact reconstruction",
                                  recon_dev, 1e-14))
    return checks


def run_battery(seed=0, quick=False):
    """The acceptance battery: criteria 1-7 checks in order."""
    checks = [
        check_propagator_quadrature(seed=seed,
                                    n_segments=30 if quick else 100),
        check_propagator_semigroup(seed=seed + 1,
                                   n_segments=30 if quick else 100),
        check_propagator_derivatives(seed=seed + 2,
                                     n_segments=30 if quick else 100),
        check_compose_expansion(seed=seed + 3),
        check_fixed_point_invariance(seed=seed + 4),
        check_jacobian_blocks_fd(seed=seed + 5, designs=2 if quick else 5),
        check_subharmonic_boundary(),
        check_subharmonic_oracle(),
        check_slope_compensation(),
        check_tf_injection(n_freq=5 if quick else 15),
        check_duty_mapping(),
        check_distillation(),
    ]
    return checks
