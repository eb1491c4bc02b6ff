import numpy as np
import pytest

import pwmcycle as pc

BASE = dict(Vin=12.0, L_f=1e-5, C_f=1e-4, R=1.0)
T_S = 1e-5


def buck_for(kind, d=0.4, se_scale=0.5, **overrides):
    """Deterministic buck design for one PWM logic.

    Comparator encoding: the sensed current meets the (rising) ramped
    threshold head-on, so positive Se damps the current loop: K = [1, 0]
    for the valley triggers, K = [-1, 0] for the peak triggers.
    """
    p = dict(BASE)
    p.update(overrides)
    vin, lf, r = p["Vin"], p["L_f"], p["R"]
    vo = d * vin
    io = vo / r
    ripple = (vin - vo) * d * T_S / lf
    i_valley = io - ripple / 2
    i_peak = io + ripple / 2
    kind = pc.PwmKind(kind)
    if kind == pc.PwmKind.COT:
        pwm = pc.PwmLogic(kind, d * T_S)
        k_row, se = [1.0, 0.0], se_scale * vo / lf
        vc = i_valley - se * (1 - d) * T_S
    elif kind == pc.PwmKind.COFT:
        pwm = pc.PwmLogic(kind, (1 - d) * T_S)
        k_row, se = [-1.0, 0.0], se_scale * (vin - vo) / lf
        vc = -i_peak - se * d * T_S
    elif kind == pc.PwmKind.FF_TRAILING:
        pwm = pc.PwmLogic(kind, T_S)
        k_row, se = [-1.0, 0.0], se_scale * vo / lf
        vc = -i_peak - se * d * T_S
    else:
        pwm = pc.PwmLogic(kind, T_S)
        k_row, se = [1.0, 0.0], se_scale * (vin - vo) / lf
        vc = i_valley - se * (1 - d) * T_S
    comp = pc.ComparatorSpec(K=np.array(k_row), Se=se, vc_nominal=vc)
    return pc.build_buck(pwm=pwm, comparator=comp, **p)


def pcm_uncompensated(d=0.45):
    """Trailing-edge peak-current buck with Se = 0 at the requested duty."""
    vin, lf, r = BASE["Vin"], BASE["L_f"], BASE["R"]
    vo = d * vin
    vc = vo / r + (vin - vo) * d * T_S / (2 * lf)
    comp = pc.ComparatorSpec(K=np.array([1.0, 0.0]), Se=0.0, vc_nominal=vc)
    return pc.build_buck(pwm=pc.PwmLogic(pc.PwmKind.FF_TRAILING, T_S),
                         comparator=comp, **BASE)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def cot_model():
    return buck_for(pc.PwmKind.COT)


@pytest.fixture
def coft_model():
    return buck_for(pc.PwmKind.COFT)


@pytest.fixture
def trailing_model():
    return buck_for(pc.PwmKind.FF_TRAILING, d=0.45, se_scale=1.0)


@pytest.fixture
def leading_model():
    return buck_for(pc.PwmKind.FF_LEADING, se_scale=1.0)


def random_segment(rng, n):
    return pc.PwlSegment(
        A=rng.uniform(-1, 1, size=(n, n)),
        B=rng.uniform(-1, 1, size=(n, 1)),
        U=rng.uniform(-2, 2, size=1),
        label="rnd",
    )
