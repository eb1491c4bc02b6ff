"""Declarative converter description: segments, comparator, PWM logic."""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .propagation import PwlSegment, _readonly


class PwmKind(str, enum.Enum):
    COT = "COT"
    COFT = "COFT"
    FF_TRAILING = "FF_TRAILING"
    FF_LEADING = "FF_LEADING"


# Sampling edge per logic: COT and leading-edge PWM sample at the valley
# (turn-on) instant, COFT and trailing-edge PWM at the peak (turn-off).
SAMPLING_EDGE = {
    PwmKind.COT: "valley",
    PwmKind.COFT: "peak",
    PwmKind.FF_TRAILING: "peak",
    PwmKind.FF_LEADING: "valley",
}


@dataclass(frozen=True)
class PwmLogic:
    """PWM logic kind plus its fixed duration.

    ``fixed_duration`` is T_on for COT, T_off for COFT and the switching
    period T_s for both fixed-frequency kinds.
    """

    kind: PwmKind
    fixed_duration: float

    def __post_init__(self):
        object.__setattr__(self, "kind", PwmKind(self.kind))
        if not self.fixed_duration > 0:
            raise ModelError(
                "invalid parameter: pwm fixed_duration must be > 0, got %g"
                % self.fixed_duration
            )


@dataclass(frozen=True)
class ComparatorSpec:
    """Comparator row K (maps state to the compared quantity), ramp slope
    Se >= 0 and the nominal control value.

    Sign convention: K is chosen so that K x rises toward vc + Se*t during
    the event-determining segment (e.g. K = [-1, 0] for a valley trigger on
    the inductor current). Violations of the invariants are reported by
    ``validate``, not at construction.
    """

    K: np.ndarray
    Se: float
    vc_nominal: float

    def __post_init__(self):
        object.__setattr__(self, "K", _readonly(np.atleast_1d(self.K)))


@dataclass(frozen=True)
class ConverterModel:
    """Full plant description: on/off segments, comparator, PWM logic and
    the physical output row. Immutable after construction; run ``validate``
    to obtain invariant diagnostics."""

    on_segment: PwlSegment
    off_segment: PwlSegment
    comparator: ComparatorSpec
    pwm: PwmLogic
    C_phys: np.ndarray
    state_labels: tuple = ()

    def __post_init__(self):
        c = _readonly(np.atleast_1d(self.C_phys))
        object.__setattr__(self, "C_phys", c)
        labels = tuple(self.state_labels) or tuple(
            "x_%d" % (i + 1) for i in range(self.on_segment.n)
        )
        object.__setattr__(self, "state_labels", labels)

    @property
    def n(self):
        return self.on_segment.n

    def output(self, x):
        """Physical output C_phys @ x for a state or an array of states."""
        return np.asarray(x) @ self.C_phys


def validate(model) -> list:
    """Diagnostics for a converter model.

    Returns an empty list when every type invariant holds; one message per
    violation otherwise. Never mutates the model.
    """
    diags = []
    n_on = model.on_segment.n
    n_off = model.off_segment.n
    if n_on != n_off:
        diags.append(
            "segment state dimensions differ: on=%d off=%d" % (n_on, n_off)
        )
    if model.on_segment.B.shape[1] != model.off_segment.B.shape[1]:
        diags.append(
            "segment input dimensions differ: on=%d off=%d"
            % (model.on_segment.B.shape[1], model.off_segment.B.shape[1])
        )
    k = np.atleast_1d(model.comparator.K)
    if not np.any(k != 0.0):
        diags.append("comparator row K is zero")
    elif k.shape[0] != n_on:
        diags.append(
            "comparator row length %d does not match state dimension %d"
            % (k.shape[0], n_on)
        )
    if model.comparator.Se < 0:
        diags.append("comparator ramp slope Se is negative")
    c = np.atleast_1d(model.C_phys)
    if not np.any(c != 0.0):
        diags.append("output row C_phys is zero")
    elif c.shape[0] != n_on:
        diags.append(
            "output row length %d does not match state dimension %d"
            % (c.shape[0], n_on)
        )
    if len(model.state_labels) not in (0, n_on):
        diags.append("state_labels length does not match state dimension")
    return diags


def require_valid(model):
    """Raise ModelError when ``validate`` reports any diagnostic."""
    diags = validate(model)
    if diags:
        raise ModelError("invalid model: " + "; ".join(diags))


def build_buck(Vin, L_f, C_f, R, R_dcr=0.0, R_esr=0.0, pwm=None,
               comparator=None, state_labels=("i_L", "v_C")) -> ConverterModel:
    """Buck converter model with state x = [i_L, v_C].

    The ideal case (R_dcr = R_esr = 0) has
    A_on = A_off = [[0, -1/L_f], [1/C_f, -1/(R C_f)]], B_on U = [Vin/L_f, 0]
    and C_phys = [0, 1]. With capacitor ESR the output is the load/ESR
    divider v_o = (R||R_esr) i_L + R/(R+R_esr) v_C and the A matrices pick
    up the corresponding damping terms; DCR adds series loss to the
    inductor row.
    """
    for name, val in (("Vin", Vin), ("L_f", L_f), ("C_f", C_f), ("R", R)):
        if not val > 0:
            raise ModelError("invalid parameter: %s must be > 0, got %g"
                             % (name, val))
    for name, val in (("R_dcr", R_dcr), ("R_esr", R_esr)):
        if val < 0:
            raise ModelError("invalid parameter: %s must be >= 0, got %g"
                             % (name, val))
    if pwm is None or comparator is None:
        raise ModelError("invalid parameter: pwm and comparator are required")

    alpha = R / (R + R_esr)  # = 1 when R_esr = 0
    r_par = alpha * R_esr    # R || R_esr
    a = np.array(
        [
            [-(R_dcr + r_par) / L_f, -alpha / L_f],
            [alpha / C_f, -alpha / (R * C_f)],
        ]
    )
    b_on = np.array([[1.0 / L_f], [0.0]])
    b_off = np.array([[0.0], [0.0]])
    u = np.array([float(Vin)])
    c_phys = np.array([r_par, alpha])
    return ConverterModel(
        on_segment=PwlSegment(A=a, B=b_on, U=u, label="on"),
        off_segment=PwlSegment(A=a, B=b_off, U=u, label="off"),
        comparator=comparator,
        pwm=pwm,
        C_phys=c_phys,
        state_labels=state_labels,
    )
