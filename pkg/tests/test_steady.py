import numpy as np
import pytest

import pwmcycle as pc
from pwmcycle.errors import SingularMapError, SolverError
from pwmcycle.sim import run_to_steady
from pwmcycle.steady import cycle_layout, event_duration

from conftest import buck_for, pcm_uncompensated


def test_scalar_geometric_fixed_point():
    a = 2.0
    seg = pc.PwlSegment(A=np.array([[-a]]), B=np.array([[1.0]]),
                        U=np.array([3.0]))
    x = pc.fixed_point_fixed_timing([(seg, 30.0)])
    # long horizon: the fixed point approaches the DC solution b / a
    assert abs(x[0] - 3.0 / a) < 1e-12


def test_singular_cycle_map_raises():
    a0 = np.array([[0.0, 0.0], [1e4, 0.0]])
    seg = pc.PwlSegment(A=a0, B=np.eye(2), U=np.array([1.0, 0.5]))
    with pytest.raises(SingularMapError,
                       match="periodic solution not unique or marginal"):
        pc.fixed_point_fixed_timing([(seg, 1e-5)])


def test_fixed_timing_buck_mean_output(cot_model):
    # D = 0.4 at fixed timing: mean v_C over the reconstructed cycle within
    # 1% of the volt-second prediction D * Vin = 4.8 V
    m = cot_model
    t_on, t_off = 4e-6, 6e-6
    segs = [(m.on_segment, t_on), (m.off_segment, t_off)]
    x = pc.fixed_point_fixed_timing(segs)
    mean = 0.0
    n_sub = 400
    state = x.copy()
    for seg, t_seg in segs:
        p = pc.propagator(seg, t_seg / n_sub)
        for _ in range(n_sub):
            nxt = p.phi @ state + p.gamma
            mean += 0.5 * (state[1] + nxt[1]) * (t_seg / n_sub)
            state = nxt
    mean /= t_on + t_off
    assert abs(mean - 4.8) / 4.8 < 0.01


@pytest.mark.parametrize("kind", list(pc.PwmKind))
def test_solve_periodic_closure_all_logics(kind):
    m = buck_for(kind)
    op = pc.solve_periodic(m)
    assert op.residual_norm < 1e-9
    segs, _ = cycle_layout(m, event_duration(m, op))
    x_back = pc.compose(segs, op.x_star).x_end
    assert np.linalg.norm(x_back - op.x_star) <= \
        10 * op.residual_norm * (1 + np.linalg.norm(op.x_star)) + 1e-12


def test_cot_resimulation_returns_fixed_point(cot_model):
    op = pc.solve_periodic(cot_model)
    trace = pc.simulate_cycles(cot_model, cot_model.comparator.vc_nominal,
                               1, op.x_star)
    err = np.linalg.norm(trace.sample_states[1] - op.x_star)
    assert err <= 1e-9 * (1 + np.linalg.norm(op.x_star))


def test_coft_event_equation_closure(coft_model):
    op = pc.solve_periodic(coft_model)
    comp = coft_model.comparator
    resid = comp.K @ op.x_star - comp.vc_nominal - comp.Se * op.T_on_star
    assert abs(resid) <= 1e-9 * abs(comp.vc_nominal)


def test_ff_trailing_duty_against_oracle():
    m = pcm_uncompensated(d=0.45)
    op = pc.solve_periodic(m)
    t_s = m.pwm.fixed_duration
    assert op.T_on_star + op.T_off_star == t_s  # structural, exact
    assert 0.44 < op.T_on_star / t_s < 0.46
    x_sim, _ = run_to_steady(m, x0=op.x_star * 1.001,
                             initial_duration=op.T_on_star)
    assert np.linalg.norm(op.x_star - x_sim) <= 1e-7 * np.linalg.norm(x_sim)


@pytest.mark.parametrize("kind", list(pc.PwmKind))
def test_oracle_equivalence_randomized(kind, rng):
    for _ in range(5):
        d = float(rng.uniform(0.3, 0.6))
        m = buck_for(kind, d=d, se_scale=1.0,
                     L_f=float(rng.uniform(5e-6, 2e-5)),
                     C_f=float(rng.uniform(4.7e-5, 2.2e-4)),
                     R=float(rng.uniform(0.5, 2.0)),
                     Vin=float(rng.uniform(8.0, 16.0)))
        op = pc.solve_periodic(m)
        x_sim, _ = run_to_steady(m, x0=op.x_star * 1.01,
                                 initial_duration=event_duration(m, op))
        assert np.linalg.norm(op.x_star - x_sim) <= \
            1e-7 * np.linalg.norm(x_sim)


def test_unreachable_threshold_fails():
    # control level far above anything the current loop can reach
    m = buck_for(pc.PwmKind.COT)
    comp = pc.ComparatorSpec(K=m.comparator.K, Se=m.comparator.Se,
                             vc_nominal=1e4)
    bad = pc.ConverterModel(on_segment=m.on_segment,
                            off_segment=m.off_segment, comparator=comp,
                            pwm=m.pwm, C_phys=m.C_phys,
                            state_labels=m.state_labels)
    with pytest.raises(SolverError):
        pc.solve_periodic(bad)
