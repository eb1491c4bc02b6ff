import numpy as np
import pytest

import pwmcycle as pc
from pwmcycle.distill import cycle_start_current, default_kernel
from pwmcycle.errors import ModelError

LF, CF, R, VIN = 1e-5, 1e-4, 1.0, 12.0


def _ideal():
    comp = pc.ComparatorSpec(K=np.array([1.0, 0.0]), Se=1e5, vc_nominal=5.0)
    return pc.build_buck(Vin=VIN, L_f=LF, C_f=CF, R=R,
                         pwm=pc.PwmLogic(pc.PwmKind.FF_TRAILING, 1e-5),
                         comparator=comp)


def test_ideal_buck_projection_exact():
    dm = pc.distill(_ideal())
    ref_by = np.array([-1.0 / LF, -1.0 / (R * CF)])
    assert np.array_equal(dm.By_on, ref_by)
    assert np.array_equal(dm.By_off, ref_by)
    assert np.array_equal(dm.residual_on, np.zeros((2, 2)))
    assert np.array_equal(dm.residual_off, np.zeros((2, 2)))
    assert np.array_equal(dm.Bu_on, np.array([1.0 / LF, 0.0]))
    assert np.array_equal(dm.Bu_off, np.zeros(2))


def test_kernel_equal_segment_matrix_projects_to_zero():
    a0 = np.array([[0.0, 0.0], [1.0 / CF, 0.0]])
    seg = pc.PwlSegment(A=a0, B=np.array([[1.0 / LF], [0.0]]),
                        U=np.array([VIN]))
    m = pc.ConverterModel(
        on_segment=seg, off_segment=seg,
        comparator=pc.ComparatorSpec(K=np.array([1.0, 0.0]), Se=0.0,
                                     vc_nominal=1.0),
        pwm=pc.PwmLogic(pc.PwmKind.COT, 1e-6), C_phys=np.array([0.0, 1.0]))
    dm = pc.distill(m, A0=a0)
    assert np.array_equal(dm.By_on, np.zeros(2))
    assert np.array_equal(dm.residual_on, np.zeros((2, 2)))


def test_exact_reconstruction_identity():
    lossy = pc.build_buck(Vin=VIN, L_f=LF, C_f=CF, R=R, R_dcr=0.08,
                          R_esr=0.02,
                          pwm=pc.PwmLogic(pc.PwmKind.COT, 4e-6),
                          comparator=pc.ComparatorSpec(
                              K=np.array([1.0, 0.0]), Se=1e5,
                              vc_nominal=3.0))
    dm = pc.distill(lossy)
    for seg, by, e in ((lossy.on_segment, dm.By_on, dm.residual_on),
                       (lossy.off_segment, dm.By_off, dm.residual_off)):
        recon = dm.A0 + np.outer(by, dm.C_phys) + e
        assert np.allclose(recon, seg.A, rtol=0, atol=1e-16 * abs(seg.A).max())
        # residual orthogonal to the projection direction
        assert np.allclose(e @ dm.C_phys, 0.0,
                           atol=1e-12 * max(abs(e).max(), 1e-300))


def test_projection_is_frobenius_optimal(rng):
    lossy = pc.build_buck(Vin=VIN, L_f=LF, C_f=CF, R=R, R_dcr=0.05,
                          pwm=pc.PwmLogic(pc.PwmKind.COT, 4e-6),
                          comparator=pc.ComparatorSpec(
                              K=np.array([1.0, 0.0]), Se=1e5,
                              vc_nominal=3.0))
    kernel = default_kernel(_ideal())
    dm = pc.distill(lossy, A0=kernel)
    d = lossy.on_segment.A - kernel
    e_norm = np.linalg.norm(dm.residual_on)
    for _ in range(100):
        v = dm.By_on + rng.normal(scale=abs(dm.By_on).max() * 0.3, size=2)
        alt = np.linalg.norm(d - np.outer(v, dm.C_phys))
        assert e_norm <= alt + 1e-12


def test_dcr_residual_matches_dense_least_squares():
    lossy = pc.build_buck(Vin=VIN, L_f=LF, C_f=CF, R=R, R_dcr=0.05,
                          pwm=pc.PwmLogic(pc.PwmKind.COT, 4e-6),
                          comparator=pc.ComparatorSpec(
                              K=np.array([1.0, 0.0]), Se=1e5,
                              vc_nominal=3.0))
    kernel = default_kernel(_ideal())
    dm = pc.distill(lossy, A0=kernel)
    d = lossy.on_segment.A - kernel
    design = np.kron(dm.C_phys.reshape(2, 1), np.eye(2))
    _, res, _, _ = np.linalg.lstsq(design, d.reshape(-1, order="F"),
                                   rcond=None)
    ref = float(np.sqrt(res[0]))
    e_norm = np.linalg.norm(dm.residual_on)
    assert abs(e_norm - ref) <= 1e-10 * e_norm
    assert e_norm > 0


def test_segment_propagator_closed_forms():
    dm = pc.distill(_ideal())
    u = np.array([VIN, 4.8])
    phi, forcing = pc.distilled_segment_propagator(dm, "on", 0.0, u)
    assert np.array_equal(phi, np.eye(2))
    assert np.array_equal(forcing, np.zeros(2))
    t = 3e-6
    phi, forcing = pc.distilled_segment_propagator(dm, "on", t, u)
    seg = pc.PwlSegment(A=dm.A0, B=dm.port_matrix("on"), U=u)
    p = pc.propagator(seg, t)
    assert np.linalg.norm(phi - p.phi) <= 1e-13 * np.linalg.norm(p.phi)
    assert np.linalg.norm(forcing - p.gamma) <= 1e-13 * np.linalg.norm(p.gamma)
    # first entry carries the net inductor drive (v_in - v_o) / L_f
    assert forcing[0] == pytest.approx(t * (VIN - 4.8) / LF, rel=1e-12)


def test_cycle_map_identities():
    dm = pc.distill(_ideal())
    u = np.array([VIN, 4.8])
    t_on, t_off = 4e-6, 6e-6
    phi_h, gamma_h_u = pc.distilled_cycle_map(dm, t_on, t_off, u)
    assert np.array_equal(phi_h, np.eye(2) + dm.A0 * (t_on + t_off))
    phi0, g0 = pc.distilled_cycle_map(dm, 0.0, 0.0, u)
    assert np.array_equal(phi0, np.eye(2))
    assert np.array_equal(g0, np.zeros(2))
    # against the generic exponential path, composed segment by segment
    seg_on = pc.PwlSegment(A=dm.A0, B=dm.port_matrix("on"), U=u)
    seg_off = pc.PwlSegment(A=dm.A0, B=dm.port_matrix("off"), U=u)
    comp = pc.compose([(seg_on, t_on), (seg_off, t_off)], np.zeros(2))
    assert np.linalg.norm(gamma_h_u - comp.total_forcing) <= \
        1e-10 * np.linalg.norm(comp.total_forcing)


def test_volt_second_residual():
    dm = pc.distill(_ideal())
    t_on, t_off = 4e-6, 6e-6
    d = t_on / (t_on + t_off)
    # balanced port voltage: zero net inductor drive
    r = pc.volt_second_residual(dm, t_on, t_off, np.array([VIN, d * VIN]))
    assert abs(r) <= 1e-12 * (VIN * t_on / LF)
    # v_o = v_in leaves -(T_off / L_f) v_in
    r = pc.volt_second_residual(dm, t_on, t_off, np.array([VIN, VIN]))
    assert r == pytest.approx(-(t_off / LF) * VIN, rel=1e-12)
    # identity with the first cycle-forcing component (row 1 of A0 is zero)
    u = np.array([VIN, 5.1])
    _, gamma_h_u = pc.distilled_cycle_map(dm, t_on, t_off, u)
    assert pc.volt_second_residual(dm, t_on, t_off, u) == \
        pytest.approx(gamma_h_u[0], rel=1e-12)


def test_amp_second_current():
    dm = pc.distill(_ideal())
    t_on, t_off = 4e-6, 6e-6
    u = np.array([VIN, 4.8])
    assert pc.amp_second_current(dm, t_on, t_off, u) == \
        pytest.approx(4.8 / R, rel=1e-12)
    assert pc.amp_second_current(dm, t_on, t_off, np.zeros(2)) == 0.0
    # the start-of-cycle sample keeps the capacitor integrator periodic
    i0 = cycle_start_current(dm, t_on, t_off, u)
    phi_h, gamma_h_u = pc.distilled_cycle_map(dm, t_on, t_off, u)
    x = np.array([i0, 2.34])
    x_next = phi_h @ x + gamma_h_u
    assert abs(x_next[1] - x[1]) <= 1e-12 * max(abs(x[1]), 1.0)


def test_solve_distilled_dc():
    dm = pc.distill(_ideal())
    t_on, t_off = 4e-6, 6e-6
    v_o, i_l, free = pc.solve_distilled_dc(dm, VIN, t_on, t_off)
    d = t_on / (t_on + t_off)
    assert v_o == pytest.approx(d * VIN, rel=1e-13)
    assert i_l == pytest.approx(v_o / R, rel=1e-13)
    assert free  # rank(I - Phi_h) = 1 for the two-state kernel
    v_o0, i_l0, _ = pc.solve_distilled_dc(dm, VIN, 0.0, 1e-5)
    assert v_o0 == 0.0 and i_l0 == 0.0


def test_port_must_enter_inductor_drive():
    a0 = np.array([[0.0, 0.0], [1.0 / CF, 0.0]])
    a = a0 + np.array([[0.0, 0.0], [0.3, -7.0]])
    seg = pc.PwlSegment(A=a, B=np.array([[1.0 / LF], [0.0]]),
                        U=np.array([VIN]))
    m = pc.ConverterModel(
        on_segment=seg, off_segment=seg,
        comparator=pc.ComparatorSpec(K=np.array([1.0, 0.0]), Se=0.0,
                                     vc_nominal=1.0),
        pwm=pc.PwmLogic(pc.PwmKind.COT, 1e-6), C_phys=np.array([0.0, 1.0]))
    dm = pc.distill(m, A0=a0)
    with pytest.raises(ModelError, match="port does not enter"):
        pc.solve_distilled_dc(dm, VIN, 4e-6, 6e-6)


def test_charge_scaling_transform():
    m = _ideal()
    t_q = np.diag([1.0, CF])
    dm = pc.distill(m, transform=t_q)
    # the transformed kernel integrates current directly: dq/dt = i_L
    assert dm.A0[1, 0] == pytest.approx(1.0, rel=1e-14)
    # reconstruction holds in the transformed frame
    a_r = t_q @ m.on_segment.A @ np.linalg.inv(t_q)
    recon = dm.A0 + np.outer(dm.By_on, dm.C_phys) + dm.residual_on
    assert np.allclose(recon, a_r, rtol=1e-14)
