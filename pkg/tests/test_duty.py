import numpy as np
import pytest

import pwmcycle as pc
from pwmcycle.duty import measured_duty_gain
from pwmcycle.errors import EdgeCollisionError, PoleError

T_S = 1e-5
T_W = 4e-6


def _translation():
    return pc.DutyOperatorSpec(pc.DutyKind.TRANSLATION, T_s=T_S, T_w=T_W)


def test_translation_static_limit():
    spec = _translation()
    assert pc.duty_gain(spec, 0.0) == complex(-T_W / T_S ** 2)
    # T_w/T_s = 0.4 reading of the same limit
    assert pc.duty_gain(spec, 0.0).real == pytest.approx(-0.4 / T_S, rel=1e-14)
    g = pc.duty_gain(spec, 1j * 2 * np.pi * 1e-3 / T_S)
    assert abs(abs(g) / (T_W / T_S ** 2) - 1.0) < 1e-3


def test_translation_pole():
    spec = _translation()
    with pytest.raises(PoleError, match="pole of translation operator"):
        pc.duty_gain(spec, 2j * np.pi / T_S)


def test_conjugate_symmetry():
    spec = _translation()
    for s in (0.3 + 2j * np.pi * 1.7e4, 1j * 2 * np.pi * 3.3e4):
        assert pc.duty_gain(spec, np.conj(s)) == \
            np.conj(pc.duty_gain(spec, s))


def test_ff_gains_constant():
    ts = 1e-6
    tr = pc.DutyOperatorSpec(pc.DutyKind.FF_TRAILING_EDGE, T_s=ts)
    le = pc.DutyOperatorSpec(pc.DutyKind.FF_LEADING_EDGE, T_s=ts)
    for s in (0.0, 1j * 1e5, 2e4 + 3j * 1e5):
        assert pc.duty_gain(tr, s) == complex(1.0 / ts)
        assert pc.duty_gain(le, s) == complex(-1.0 / ts)
    # 10 ns edge shift on a 1 us period: +/- 1% duty
    seq = pc.duty_sequence_from_edges(tr, [1e-8])
    assert seq[0] == pytest.approx(0.01, rel=1e-12)
    seq = pc.duty_sequence_from_edges(le, [1e-8])
    assert seq[0] == pytest.approx(-0.01, rel=1e-12)


def test_zero_shifts_zero_duty():
    spec = _translation()
    assert np.array_equal(pc.duty_sequence_from_edges(spec, np.zeros(8)),
                          np.zeros(8))


def test_constant_shift_static_duty():
    spec = _translation()
    dt = 1e-8
    seq = pc.duty_sequence_from_edges(spec, np.full(12, dt))
    expected = -dt * T_W / T_S ** 2
    # interior windows carry the exact static value
    assert np.allclose(seq[1:-1], expected, rtol=1e-9)


def test_sinusoid_matches_gain_at_tenth_of_clock():
    spec = _translation()
    f = 1.0 / (10 * T_S)
    g_meas = measured_duty_gain(spec, f, amplitude=1e-4 * T_S, n_cycles=200)
    g_ref = pc.duty_gain(spec, 2j * np.pi * f)
    assert abs(g_meas / g_ref - 1.0) < 0.01


def test_measured_gain_across_band():
    spec = _translation()
    n_win = 200
    for m in (3, 17, 41, 89):
        f = m / (n_win * T_S)
        g_meas = measured_duty_gain(spec, f, amplitude=1e-4 * T_S,
                                    n_cycles=n_win)
        g_ref = pc.duty_gain(spec, 2j * np.pi * f)
        assert abs(abs(g_meas) / abs(g_ref) - 1.0) < 0.01
        assert abs(np.degrees(np.angle(g_meas / g_ref))) < 1.0


def test_ff_memoryless_permutation(rng):
    spec = pc.DutyOperatorSpec(pc.DutyKind.FF_TRAILING_EDGE, T_s=T_S)
    shifts = rng.uniform(-1e-8, 1e-8, 16)
    seq = pc.duty_sequence_from_edges(spec, shifts)
    perm = rng.permutation(16)
    seq_p = pc.duty_sequence_from_edges(spec, shifts[perm])
    assert np.array_equal(seq[perm], seq_p)


def test_edge_collision():
    spec = _translation()
    with pytest.raises(EdgeCollisionError, match="edge collision"):
        pc.duty_sequence_from_edges(spec, [0.9 * T_S, 0.0])


def test_large_shift_warns():
    spec = _translation()
    with pytest.warns(UserWarning, match="1%"):
        pc.duty_sequence_from_edges(spec, [0.05 * T_W, 0.0])


def test_translation_spec_validation():
    with pytest.raises(ValueError, match="T_w"):
        pc.DutyOperatorSpec(pc.DutyKind.TRANSLATION, T_s=T_S, T_w=2 * T_S)
    with pytest.raises(ValueError, match="T_s"):
        pc.DutyOperatorSpec(pc.DutyKind.FF_TRAILING_EDGE, T_s=0.0)
