"""Linearized one-cycle maps, stability eigenvalues and z-domain transfer
functions for the four PWM logics.

Per logic the blocks are the state Jacobian of the one-step map and the
sensitivities to the event-determined durations:

* COT      phi = Phi_off* Phi_on,  gamma+ = d x+/d T_off
* COFT     phi = Phi_on* Phi_off,  gamma+ = d x+/d T_on
* trailing phi = Phi_on* Phi_off*, gamma+ = d x+/d T_on(k+1),
           gamma- = d x+/d T_on(k)  (previous-cycle timing)
* leading  phi = Phi_off* Phi_on*, gamma+ = d x+/d T_off(k+1),
           gamma- = d x+/d T_off(k)

Eliminating the timing through the event relation K x_edge = vc + Se dT
gives the recursion E x_{k+1} = G x_k + h1 vc_{k+1} + h0 vc_k with
E = I - gamma+ K / Se, G = phi (+ gamma- K / Se for the fixed-frequency
kinds), h1 = -gamma+/Se and h0 = -gamma-/Se. When Se is zero or tiny the
division is avoided entirely: eigenvalues and transfer functions are then
computed from the bordered system

    [I, -gamma+; K, -Se] z_{k+1} = [phi, gamma-; 0, 0] z_k + [0; 1] vc_{k+1}

whose finite spectrum equals that of E^{-1} G plus one structural zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateEliminationError, ModulatorError, PoleError,
                     PwmCycleError)
from .model import ConverterModel, PwmKind
from .propagation import propagator
from .steady import PeriodicOperatingPoint, solve_periodic

# Below this fraction of |K gamma+| the explicit K/Se elimination would be
# dominated by cancellation; the bordered formulation takes over.
_SE_ELIMINATION_FLOOR = 1e-8
_COND_WARN = 1e10


@dataclass(frozen=True)
class JacobianBlocks:
    """State Jacobian and timing sensitivities of the one-step map at the
    periodic operating point. ``gamma_minus`` is None except for the
    fixed-frequency logics."""

    phi_cycle: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray | None
    logic: PwmKind


@dataclass(frozen=True)
class LinearizedCycleMap:
    """Timing-eliminated small-signal recursion plus its raw blocks.

    The explicit operators (E, G, h1, h0) exist only when Se is large
    enough for the K/Se division to be well conditioned; accessing them
    otherwise raises ModulatorError. Eigenvalue and transfer-function
    evaluation work in either regime through the bordered form.
    """

    blocks: JacobianBlocks
    K: np.ndarray
    Se_used: float
    logic: PwmKind
    eliminated: bool
    _E: np.ndarray | None = None
    _G: np.ndarray | None = None
    _h1: np.ndarray | None = None
    _h0: np.ndarray | None = None
    warnings: tuple = field(default_factory=tuple)

    def _need_elimination(self):
        if not self.eliminated:
            raise ModulatorError("uncompensated modulator: K/Se undefined")

    @property
    def E(self):
        self._need_elimination()
        return self._E

    @property
    def G(self):
        self._need_elimination()
        return self._G

    @property
    def h1(self):
        self._need_elimination()
        return self._h1

    @property
    def h0(self):
        self._need_elimination()
        return self._h0

    @property
    def n(self):
        return self.blocks.phi_cycle.shape[0]

    def bordered_pair(self):
        """(E_aug, G_aug) of the bordered recursion in (x, dT)."""
        n = self.n
        bl = self.blocks
        e_aug = np.zeros((n + 1, n + 1))
        g_aug = np.zeros((n + 1, n + 1))
        e_aug[:n, :n] = np.eye(n)
        e_aug[:n, n] = -bl.gamma_plus
        e_aug[n, :n] = self.K
        e_aug[n, n] = -self.Se_used
        g_aug[:n, :n] = bl.phi_cycle
        if bl.gamma_minus is not None:
            g_aug[:n, n] = bl.gamma_minus
        return e_aug, g_aug


def jacobian_blocks(model: ConverterModel,
                    op: PeriodicOperatingPoint) -> JacobianBlocks:
    """Analytic Jacobian blocks of the one-step map at ``op``.

    All blocks follow from the duration derivatives of the segment
    propagators evaluated at the steady durations; no finite differencing
    is involved.
    """
    on, off = model.on_segment, model.off_segment
    x = op.x_star
    p_on = propagator(on, op.T_on_star)
    p_off = propagator(off, op.T_off_star)
    b_on = on.forcing_vector
    b_off = off.forcing_vector
    kind = model.pwm.kind
    if kind == PwmKind.COT:
        phi = p_off.phi @ p_on.phi
        gplus = (off.A @ p_off.phi @ (p_on.phi @ x + p_on.gamma)
                 + p_off.phi @ b_off)
        gminus = None
    elif kind == PwmKind.COFT:
        phi = p_on.phi @ p_off.phi
        gplus = (on.A @ p_on.phi @ (p_off.phi @ x + p_off.gamma)
                 + p_on.phi @ b_on)
        gminus = None
    elif kind == PwmKind.FF_TRAILING:
        phi = p_on.phi @ p_off.phi
        gplus = (on.A @ p_on.phi @ (p_off.phi @ x + p_off.gamma)
                 + p_on.phi @ b_on)
        gminus = -(p_on.phi @ (off.A @ p_off.phi @ x + p_off.phi @ b_off))
    else:
        phi = p_off.phi @ p_on.phi
        gplus = (off.A @ p_off.phi @ (p_on.phi @ x + p_on.gamma)
                 + p_off.phi @ b_off)
        gminus = -(p_off.phi @ (on.A @ p_on.phi @ x + p_on.phi @ b_on))
    return JacobianBlocks(phi_cycle=phi, gamma_plus=gplus,
                          gamma_minus=gminus, logic=kind)


def linearized_map(model: ConverterModel,
                   blocks: JacobianBlocks) -> LinearizedCycleMap:
    """Eliminate the event-determined timing from the linearized map.

    With adequate ramp slope this produces the explicit
    (E, G, h1, h0) recursion; with Se = 0 (or negligibly small against
    |K gamma+|) the map is returned in bordered-only form and a diagnostic
    is attached. A near-singular E yields a condition warning, an exactly
    singular one raises DegenerateEliminationError.
    """
    comp = model.comparator
    k_row = comp.K
    se = comp.Se
    n = blocks.phi_cycle.shape[0]
    se_scale = abs(float(k_row @ blocks.gamma_plus))
    eliminated = se > 0 and (se_scale == 0.0 or se > _SE_ELIMINATION_FLOOR * se_scale)
    warn = []
    e = g = h1 = h0 = None
    if eliminated:
        e = np.eye(n) - np.outer(blocks.gamma_plus, k_row) / se
        g = blocks.phi_cycle.copy()
        h1 = -blocks.gamma_plus / se
        h0 = np.zeros(n)
        if blocks.gamma_minus is not None:
            g = g + np.outer(blocks.gamma_minus, k_row) / se
            h0 = -blocks.gamma_minus / se
        kg = float(k_row @ blocks.gamma_plus)
        cond = np.linalg.cond(e)
        if not np.isfinite(cond) or se == kg:
            raise DegenerateEliminationError(
                "degenerate elimination: E = I - gamma+ K/Se is singular")
        if cond > _COND_WARN:
            warn.append("near-singular elimination: cond(E) = %.3e" % cond)
    else:
        warn.append("uncompensated modulator: K/Se undefined; "
                    "using bordered small-signal form")
    return LinearizedCycleMap(
        blocks=blocks, K=np.array(k_row, dtype=float), Se_used=float(se),
        logic=blocks.logic, eliminated=eliminated,
        _E=e, _G=g, _h1=h1, _h0=h0, warnings=tuple(warn),
    )


def closed_loop_eigenvalues(lin_map: LinearizedCycleMap) -> np.ndarray:
    """Eigenvalues of the closed-current-loop one-cycle map, sorted by
    magnitude descending.

    Always evaluated on the bordered pencil, whose finite spectrum is the
    spectrum of E^{-1} G plus one structural zero (dropped here); this is
    exact for Se = 0 as well. |lambda|_max < 1 iff the periodic orbit is
    locally stable; an eigenvalue near -1 marks the subharmonic boundary.
    """
    e_aug, g_aug = lin_map.bordered_pair()
    try:
        m = np.linalg.solve(e_aug, g_aug)
    except np.linalg.LinAlgError:
        raise DegenerateEliminationError(
            "degenerate elimination: bordered operator singular")
    w = np.linalg.eigvals(m)
    # Drop the structural zero introduced by the timing border.
    keep = np.ones(len(w), dtype=bool)
    keep[int(np.argmin(np.abs(w)))] = False
    w = w[keep]
    return w[np.argsort(-np.abs(w))]


def control_to_output_tf(lin_map: LinearizedCycleMap, C_phys, z) -> complex:
    """Control-to-output gain C (z E - G)^{-1} (z h1 + h0) at the point z.

    Evaluate on the unit circle z = exp(j 2 pi f T_cycle) for frequency
    responses. Computed through the bordered resolvent, which equals the
    eliminated formula whenever that one exists and stays defined for
    Se = 0.
    """
    c = np.atleast_1d(np.asarray(C_phys, dtype=float))
    n = lin_map.n
    e_aug, g_aug = lin_map.bordered_pair()
    lhs = z * e_aug - g_aug
    rhs = np.zeros(n + 1, dtype=complex)
    rhs[n] = z
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        raise PoleError("pole at evaluation point z = %s" % z)
    if not np.all(np.isfinite(sol)):
        raise PoleError("pole at evaluation point z = %s" % z)
    return complex(c @ sol[:n])


@dataclass(frozen=True)
class SweepPoint:
    """One stability-sweep row; ``error`` carries solver failure text."""

    param: float
    lambda_max: float
    unstable: bool | None
    error: str | None = None


def stability_sweep(model_family, param_grid) -> list:
    """|lambda|_max over a model family; one SweepPoint per grid value.

    ``model_family`` maps a parameter value to a ConverterModel. Failed
    points carry their solver error text and NaN magnitude.
    """
    rows = []
    for p in param_grid:
        try:
            model = model_family(p)
            op = solve_periodic(model)
            lmap = linearized_map(model, jacobian_blocks(model, op))
            lam = float(np.abs(closed_loop_eigenvalues(lmap)[0]))
            rows.append(SweepPoint(param=float(p), lambda_max=lam,
                                   unstable=lam >= 1.0))
        except PwmCycleError as exc:
            rows.append(SweepPoint(param=float(p), lambda_max=float("nan"),
                                   unstable=None, error=str(exc)))
    return rows


def boundary_brackets(rows) -> list:
    """Pairs of adjacent sweep parameters between which |lambda|_max
    crosses 1."""
    out = []
    for a, b in zip(rows[:-1], rows[1:]):
        if a.error or b.error:
            continue
        if (a.lambda_max - 1.0) * (b.lambda_max - 1.0) < 0:
            out.append((a.param, b.param))
    return out
