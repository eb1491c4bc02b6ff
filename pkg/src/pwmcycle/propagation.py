"""Exact propagation of piecewise-linear segments.

A segment is the LTI system x' = A x + B U with U held constant. Over a
duration T its endpoint map is x(T) = phi(T) x(0) + gamma(T) with
phi = e^{AT} and gamma the forced response. gamma is always computed
through the augmented block exponential, which needs no invertibility
assumption on A; when A is invertible it agrees with the closed form
A^{-1} (e^{AT} - I) B U.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import PropagationOverflowError


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PwlSegment:
    """One linear interval: state matrix A (n x n), input matrix B (n x m),
    constant input vector U (m), and a free-form label."""

    A: np.ndarray
    B: np.ndarray
    U: np.ndarray
    label: str = "seg"

    def __post_init__(self):
        a = _readonly(self.A)
        b = _readonly(np.atleast_2d(self.B))
        u = _readonly(np.atleast_1d(self.U))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("A must be square, got shape %s" % (a.shape,))
        if b.shape[0] != a.shape[0]:
            raise ValueError(
                "B row count %d does not match state dimension %d"
                % (b.shape[0], a.shape[0])
            )
        if u.shape[0] != b.shape[1]:
            raise ValueError(
                "U length %d does not match B column count %d"
                % (u.shape[0], b.shape[1])
            )
        if not (np.isfinite(a).all() and np.isfinite(b).all()
                and np.isfinite(u).all()):
            raise ValueError("segment matrices must be finite")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "U", u)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def forcing_vector(self):
        """B @ U, the constant drive entering the state derivative."""
        return self.B @ self.U


@dataclass(frozen=True)
class Propagator:
    """Endpoint map of one segment over a fixed duration."""

    phi: np.ndarray
    gamma: np.ndarray
    duration: float


def propagator(segment: PwlSegment, T: float) -> Propagator:
    """Exact endpoint map (phi, gamma) of ``segment`` over duration ``T``.

    Parameters
    ----------
    segment : PwlSegment
    T : float
        Duration in seconds, >= 0.

    Returns
    -------
    Propagator
        phi = e^{AT}; gamma = int_0^T e^{A(T-tau)} B U dtau, computed via
        the augmented block exponential (valid for singular A).

    Raises
    ------
    PropagationOverflowError
        If the exponential overflows to a non-finite value.
    """
    if T < 0:
        raise ValueError("duration must be >= 0, got %g" % T)
    with np.errstate(over="ignore", invalid="ignore"):
        phi, gam = _kernels.prop_pair(segment.A, segment.forcing_vector,
                                      float(T))
    if not (np.isfinite(phi).all() and np.isfinite(gam).all()):
        raise PropagationOverflowError(
            "segment propagation overflow in segment %r over T=%g"
            % (segment.label, T)
        )
    return Propagator(phi=phi, gamma=gam, duration=float(T))


def propagator_time_derivatives(segment: PwlSegment, T: float):
    """Derivatives of (phi, gamma) with respect to the duration.

    d phi/dT = A e^{AT} and d gamma/dT = e^{AT} B U.
    """
    p = propagator(segment, T)
    dphi = segment.A @ p.phi
    dgamma = p.phi @ segment.forcing_vector
    return dphi, dgamma


@dataclass(frozen=True)
class Composition:
    """Result of chaining segment endpoint maps over one cycle."""

    x_end: np.ndarray
    boundary_states: list = field(default_factory=list)
    total_phi: np.ndarray = None
    total_forcing: np.ndarray = None


def compose(segments_with_durations, x0) -> Composition:
    """Chain segment endpoint maps in list order.

    Implements the reverse-product accumulation: after segment i the state
    is x_i = phi_i x_{i-1} + gamma_i, so the overall map is
    x_end = total_phi @ x0 + total_forcing with total_phi the left-product
    of the phi_i in list order.

    Parameters
    ----------
    segments_with_durations : sequence of (PwlSegment, float)
        Non-empty, durations >= 0.
    x0 : array_like
        Starting state.

    Returns
    -------
    Composition
        boundary_states holds one entry per segment end (x_1 ... x_n).
    """
    if len(segments_with_durations) == 0:
        raise ValueError("segment list must be non-empty")
    x = np.array(x0, dtype=float)
    n = x.shape[0]
    total_phi = np.eye(n)
    total_forcing = np.zeros(n)
    boundary_states = []
    for seg, T in segments_with_durations:
        p = propagator(seg, T)
        x = p.phi @ x + p.gamma
        total_phi = p.phi @ total_phi
        total_forcing = p.phi @ total_forcing + p.gamma
        boundary_states.append(x.copy())
    return Composition(
        x_end=x,
        boundary_states=boundary_states,
        total_phi=total_phi,
        total_forcing=total_forcing,
    )
