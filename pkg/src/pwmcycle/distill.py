"""Port-structured rank-1 reduction onto an integrator-cascade kernel.

The reduction rewrites each segment's dynamics as

    x' = A0 x + B_u v_in + B_y v_o,        v_o = C_phys x,

where A0 = [[0, 0], [1/C_f, 0]] is the shared nilpotent kernel (inductor
driven by ports only, capacitor a pure integrator of current). Coupling
that the chosen port can express moves into the injection vectors
B_y = (A_i - A0) C^T / (C C^T); the Frobenius-least-squares residual
E_i = (A_i - A0) - B_y C is the part the port cannot see, and dropping it
is the weak-coupling approximation. Because A0^2 = 0 the reduced segment
and cycle maps are closed-form polynomials in the durations, the one-cycle
transition is I + A0 T_s (singular I - Phi), and the classical
volt-second / amp-second balances appear as the solvability and
current-pinning rows of the periodic self-consistency equation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .model import ConverterModel
from .propagation import _readonly

_RANK_TOL = 1e-10


def default_kernel(model: ConverterModel) -> np.ndarray:
    """Integrator-cascade kernel [[0, 0], [k, 0]] with the current-to-
    capacitor coupling taken from the model's on-segment."""
    if model.n != 2:
        raise ModelError("distillation kernel is defined for 2-state models")
    k = model.on_segment.A[1, 0]
    if k == 0:
        raise ModelError("cannot infer kernel: A_on[1,0] is zero")
    return np.array([[0.0, 0.0], [k, 0.0]])


def _check_kernel(a0):
    a0 = np.asarray(a0, dtype=float)
    if a0.shape != (2, 2):
        raise ModelError("kernel must be 2x2")
    if a0[0, 0] != 0 or a0[0, 1] != 0 or a0[1, 1] != 0 or a0[1, 0] == 0:
        raise ModelError(
            "kernel must be the lower-shift form [[0,0],[k,0]] with k != 0")
    return a0


@dataclass(frozen=True)
class DistilledModel:
    """Port-structured reduced model: shared kernel, per-segment port
    injections, rank-1 residuals and the (optional) state transformation
    that was applied before projecting."""

    A0: np.ndarray
    Bu_on: np.ndarray
    Bu_off: np.ndarray
    By_on: np.ndarray
    By_off: np.ndarray
    C_phys: np.ndarray
    residual_on: np.ndarray
    residual_off: np.ndarray
    T_r: np.ndarray
    fit_ratio_on: float
    fit_ratio_off: float

    def __post_init__(self):
        for name in ("A0", "Bu_on", "Bu_off", "By_on", "By_off", "C_phys",
                     "residual_on", "residual_off", "T_r"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def C_f(self):
        """Capacitance encoded in the kernel's integrator row."""
        return 1.0 / self.A0[1, 0]

    def port_matrix(self, which):
        """[B_u | B_y] of the requested segment, an n x 2 matrix acting on
        u = [v_in, v_o]."""
        if which == "on":
            return np.column_stack([self.Bu_on, self.By_on])
        if which == "off":
            return np.column_stack([self.Bu_off, self.By_off])
        raise ValueError("which must be 'on' or 'off'")


def distill(model: ConverterModel, A0=None, transform=None) -> DistilledModel:
    """Project the segment matrices onto kernel + rank-1 port feedback.

    ``transform``, when given, is an invertible state normalization applied
    first (x_r = T x, e.g. the charge scaling diag(1, C_f)); the kernel is
    then interpreted in the transformed frame. B_u is the exact scalar-
    input injection (requires a single-input model); B_y is the Frobenius
    least-squares fit of A_i - A0 by a rank-1 matrix along C_phys, obtained
    by right-multiplying with C^T/(C C^T).
    """
    if model.n != 2:
        raise ModelError("distillation is defined for 2-state models")
    if model.on_segment.B.shape[1] != 1:
        raise ModelError(
            "distillation requires a single scalar source input (m = 1)")
    a_on = np.array(model.on_segment.A)
    a_off = np.array(model.off_segment.A)
    b_on = model.on_segment.B[:, 0].copy()
    b_off = model.off_segment.B[:, 0].copy()
    c = np.array(model.C_phys, dtype=float)
    t_r = np.eye(2)
    if transform is not None:
        t_r = np.asarray(transform, dtype=float)
        if t_r.shape != (2, 2):
            raise ModelError("transform must be 2x2")
        try:
            t_inv = np.linalg.inv(t_r)
        except np.linalg.LinAlgError:
            raise ModelError("transform must be invertible")
        a_on = t_r @ a_on @ t_inv
        a_off = t_r @ a_off @ t_inv
        b_on = t_r @ b_on
        b_off = t_r @ b_off
        c = c @ t_inv
    cc = float(c @ c)
    if cc <= 0:
        raise ModelError("undefined projection: C_phys is zero")
    if A0 is None:
        k = a_on[1, 0]
        if k == 0:
            raise ModelError("cannot infer kernel: A_on[1,0] is zero")
        a0 = np.array([[0.0, 0.0], [k, 0.0]])
    else:
        a0 = _check_kernel(A0)

    def project(a_i):
        d = a_i - a0
        by = (d @ c) / cc
        e = d - np.outer(by, c)
        dn = np.linalg.norm(d)
        ratio = float(np.linalg.norm(e) / dn) if dn > 0 else 0.0
        return by, e, ratio

    by_on, e_on, r_on = project(a_on)
    by_off, e_off, r_off = project(a_off)
    return DistilledModel(
        A0=a0, Bu_on=b_on, Bu_off=b_off, By_on=by_on, By_off=by_off,
        C_phys=c, residual_on=e_on, residual_off=e_off, T_r=t_r,
        fit_ratio_on=r_on, fit_ratio_off=r_off,
    )


def distilled_segment_propagator(dm: DistilledModel, which, T, u):
    """Closed-form endpoint map of one reduced segment: no exponential.

    phi = I + A0 T and forcing = (T I + T^2/2 A0) [B_u | B_y] u, exact
    because A0^2 = 0.
    """
    if T < 0:
        raise ValueError("duration must be >= 0")
    u = np.asarray(u, dtype=float)
    a0 = dm.A0
    phi = np.eye(2) + a0 * T
    forcing = (T * np.eye(2) + 0.5 * T * T * a0) @ (dm.port_matrix(which) @ u)
    return phi, forcing


def distilled_cycle_map(dm: DistilledModel, T_on, T_off, u):
    """One-cycle transition and forcing of the reduced model.

    Phi_h = I + A0 (T_on + T_off) exactly (the cross term vanishes with
    A0^2 = 0); the forcing chains the off propagator over the on forcing.
    """
    u = np.asarray(u, dtype=float)
    a0 = dm.A0
    phi_h = np.eye(2) + a0 * (T_on + T_off)
    _, f_on = distilled_segment_propagator(dm, "on", T_on, u)
    _, f_off = distilled_segment_propagator(dm, "off", T_off, u)
    phi0_off = np.eye(2) + a0 * T_off
    gamma_h_u = phi0_off @ f_on + f_off
    return phi_h, gamma_h_u


def volt_second_residual(dm: DistilledModel, T_on, T_off, u) -> float:
    """Net inductor drive over one cycle; zero iff the periodic solution's
    solvability condition holds (first row of the self-consistency
    equation, since row 1 of A0 vanishes)."""
    u = np.asarray(u, dtype=float)
    r_on = float(dm.port_matrix("on")[0] @ u)
    r_off = float(dm.port_matrix("off")[0] @ u)
    return T_on * r_on + T_off * r_off


def cycle_start_current(dm: DistilledModel, T_on, T_off, u) -> float:
    """Sampled inductor current at the cycle start that makes the capacitor
    integrator periodic: -(C_f / T_s) * (row 2 of Gamma_h u). Re-propagating
    one reduced cycle from [this value, any v_C] leaves the second state
    unchanged."""
    t_s = T_on + T_off
    if not t_s > 0:
        raise ValueError("cycle duration must be > 0")
    _, gamma_h_u = distilled_cycle_map(dm, T_on, T_off, u)
    return float(-(dm.C_f / t_s) * gamma_h_u[1])


def amp_second_current(dm: DistilledModel, T_on, T_off, u) -> float:
    """DC (cycle-mean) inductor current pinned by capacitor charge balance.

    The charge-balance row fixes the cycle-start sample
    i_0 = -(C_f/T_s) (row 2 of Gamma_h u); the mean adds the exact within-
    cycle ripple integral of the two constant inductor-drive slopes. For
    the resistive-load buck at volt-second balance this is v_o / R, the
    level the load actually draws.
    """
    t_s = T_on + T_off
    if not t_s > 0:
        raise ValueError("cycle duration must be > 0")
    u = np.asarray(u, dtype=float)
    i_start = cycle_start_current(dm, T_on, T_off, u)
    a_on = float(dm.port_matrix("on")[0] @ u)
    a_off = float(dm.port_matrix("off")[0] @ u)
    ripple_mean = (0.5 * T_on * T_on * a_on + T_off * T_on * a_on
                   + 0.5 * T_off * T_off * a_off) / t_s
    return float(i_start + ripple_mean)


def solve_distilled_dc(dm: DistilledModel, v_in, T_on, T_off):
    """Solve the volt-second residual for v_o, then pin i_L*.

    Returns (v_o, i_L_star, v_C_free); v_C_free is True when
    rank(I - Phi_h) < n, i.e. the capacitor voltage stays free until the
    port closure v_o = C x is imposed.
    """
    # residual = a + b v_o, linear in the port because u = [v_in, v_o]
    a = T_on * dm.Bu_on[0] * v_in + T_off * dm.Bu_off[0] * v_in
    b = T_on * dm.By_on[0] + T_off * dm.By_off[0]
    if b == 0:
        raise ModelError("port does not enter inductor drive")
    v_o = -a / b
    i_l = amp_second_current(dm, T_on, T_off, np.array([v_in, v_o]))
    phi_h, _ = distilled_cycle_map(dm, T_on, T_off, np.array([v_in, v_o]))
    sv = np.linalg.svd(np.eye(2) - phi_h, compute_uv=False)
    rank = int(np.sum(sv > _RANK_TOL * sv[0])) if sv[0] > 0 else 0
    return float(v_o), float(i_l), rank < 2
