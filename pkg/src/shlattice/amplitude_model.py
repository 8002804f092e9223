"""Lattice ODEs for the complex roll amplitudes.

Interior elements obey

    da_j/dt = r a_j + (4 g^2/h^2) (a_{j+1} - 2 a_j + a_{j-1}) - 3 g^2 a_j^2 b_j
    db_j/dt = r b_j + (4 g^2/h^2) (b_{j+1} - 2 b_j + b_{j-1}) - 3 g^2 a_j b_j^2

with g the coupling parameter (g = 1 is the physical model).  At g = 1 and
b = conj(a) the a-equation is the discrete Ginzburg-Landau equation with
diffusion constant 4 and Landau constant 3.

A wall at x = -h/2 replaces the j = 1 stencil.  With s = +1 when the wall
prescribes (u, u_xx) and s = -1 when it prescribes (u_x, u_xxx):

    da_1/dt = r a_1 + (4 g^2/h^2) (a_2 - 2 a_1 - s b_1) - 3 a_1^2 b_1
              - s (g^2/h) (1 - i) (alpha + beta)
    db_1/dt = r b_1 + (4 g^2/h^2) (b_2 - 2 b_1 - s a_1) - 3 a_1 b_1^2
              - s (g^2/h) (1 + i) (alpha + beta)

The a/b cross coupling pins the roll phase: for s = +1 the real part of
a_1 decays at rate r - 8/h^2 while the imaginary part keeps rate r, so
walls prescribing even derivatives lock the rolls onto sin(x); s = -1
swaps the roles and locks onto cos(x).  A right wall is the mirror image
under x -> -x, which swaps the roles of a and b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .core import (
    AmplitudeState,
    BoundaryForcing,
    DivergenceError,
    ForcingKind,
    ModelParams,
    _resolve_neighbours,
)

_BLOWUP = 1e6


class SignChoice(Enum):
    """Which sign alternative the wall stencil uses.

    UPPER: even-derivative wall data (u, u_xx given), sin-locking.
    LOWER: odd-derivative wall data (u_x, u_xxx given), cos-locking.
    """

    UPPER = "upper"
    LOWER = "lower"

    @property
    def factor(self) -> float:
        return 1.0 if self is SignChoice.UPPER else -1.0

    @classmethod
    def from_kind(cls, kind: ForcingKind) -> "SignChoice":
        if kind is ForcingKind.EVEN_GIVEN:
            return cls.UPPER
        if kind is ForcingKind.ODD_GIVEN:
            return cls.LOWER
        raise ValueError(f"no sign choice for forcing kind {kind}")

    @property
    def kind(self) -> ForcingKind:
        return (ForcingKind.EVEN_GIVEN if self is SignChoice.UPPER
                else ForcingKind.ODD_GIVEN)


def _check_boundary_args(state: AmplitudeState, forcing: BoundaryForcing,
                         sign: SignChoice) -> None:
    if state.n < 2:
        raise ValueError("boundary stencils need at least 2 elements")
    if forcing.kind is ForcingKind.PERIODIC:
        raise ValueError("boundary stencils reject periodic forcing")
    if SignChoice.from_kind(forcing.kind) is not sign:
        raise ValueError(
            f"forcing kind {forcing.kind} does not match sign choice {sign}")


def interior_rhs(state: AmplitudeState, params: ModelParams, j: int,
                 periodic: bool = False) -> tuple[complex, complex]:
    """Time derivative (da_j/dt, db_j/dt) of an interior element."""
    a, b = state.a, state.b
    jm, jp = _resolve_neighbours(state.n, j, periodic)
    g2 = params.gamma ** 2
    c = 4.0 * g2 / params.h ** 2
    da = params.r * a[j] + c * (a[jp] - 2.0 * a[j] + a[jm]) - 3.0 * g2 * (a[j] * a[j]) * b[j]
    db = params.r * b[j] + c * (b[jp] - 2.0 * b[j] + b[jm]) - 3.0 * g2 * (b[j] * b[j]) * a[j]
    return da, db


def left_boundary_rhs(state: AmplitudeState, params: ModelParams,
                      forcing: BoundaryForcing,
                      sign: SignChoice) -> tuple[complex, complex]:
    """Time derivative of the leftmost element, wall at x = -h/2."""
    _check_boundary_args(state, forcing, sign)
    a, b = state.a, state.b
    s = sign.factor
    g2 = params.gamma ** 2
    c = 4.0 * g2 / params.h ** 2
    f = forcing.alpha_at(state.t) + forcing.beta_at(state.t)
    drive = (g2 / params.h) * f
    da = (params.r * a[0] + c * (a[1] - 2.0 * a[0] - s * b[0])
          - 3.0 * (a[0] * a[0]) * b[0] - s * (1.0 - 1.0j) * drive)
    db = (params.r * b[0] + c * (b[1] - 2.0 * b[0] - s * a[0])
          - 3.0 * (b[0] * b[0]) * a[0] - s * (1.0 + 1.0j) * drive)
    return da, db


def right_boundary_rhs(state: AmplitudeState, params: ModelParams,
                       forcing: BoundaryForcing,
                       sign: SignChoice) -> tuple[complex, complex]:
    """Time derivative of the rightmost element, wall at x = x_N + h/2.

    Mirror image of the left wall under x -> -x, which exchanges a and b
    and reverses the lattice.
    """
    _check_boundary_args(state, forcing, sign)
    a, b = state.a, state.b
    s = sign.factor
    g2 = params.gamma ** 2
    c = 4.0 * g2 / params.h ** 2
    f = forcing.alpha_at(state.t) + forcing.beta_at(state.t)
    drive = (g2 / params.h) * f
    da = (params.r * a[-1] + c * (a[-2] - 2.0 * a[-1] - s * b[-1])
          - 3.0 * (a[-1] * a[-1]) * b[-1] - s * (1.0 + 1.0j) * drive)
    db = (params.r * b[-1] + c * (b[-2] - 2.0 * b[-1] - s * a[-1])
          - 3.0 * (b[-1] * b[-1]) * a[-1] - s * (1.0 - 1.0j) * drive)
    return da, db


def model_rhs(state: AmplitudeState, params: ModelParams,
              forcing: BoundaryForcing,
              forcing_right: Optional[BoundaryForcing] = None
              ) -> tuple[np.ndarray, np.ndarray]:
    """Full lattice derivative.

    Periodic forcing wraps every stencil.  Otherwise the first and last
    elements use the wall stencils and the rest the interior one (the
    j = 2 element needs no special treatment).  forcing_right, when given,
    supplies different signals for the right wall; by default the right
    wall mirrors the left one with the same signals.
    """
    a, b = state.a, state.b
    if state.n != params.n_elements:
        raise ValueError(
            f"state has {state.n} elements but params expect {params.n_elements}")
    g2 = params.gamma ** 2
    c = 4.0 * g2 / params.h ** 2

    if forcing.kind is ForcingKind.PERIODIC:
        ap, am = np.roll(a, -1), np.roll(a, 1)
        bp, bm = np.roll(b, -1), np.roll(b, 1)
        da = params.r * a + c * (ap - 2.0 * a + am) - 3.0 * g2 * (a * a) * b
        db = params.r * b + c * (bp - 2.0 * b + bm) - 3.0 * g2 * (b * b) * a
        return da, db

    sign = SignChoice.from_kind(forcing.kind)
    da = np.empty_like(a)
    db = np.empty_like(b)
    da[1:-1] = (params.r * a[1:-1] + c * (a[2:] - 2.0 * a[1:-1] + a[:-2])
                - 3.0 * g2 * (a[1:-1] * a[1:-1]) * b[1:-1])
    db[1:-1] = (params.r * b[1:-1] + c * (b[2:] - 2.0 * b[1:-1] + b[:-2])
                - 3.0 * g2 * (b[1:-1] * b[1:-1]) * a[1:-1])
    da[0], db[0] = left_boundary_rhs(state, params, forcing, sign)
    right = forcing if forcing_right is None else forcing_right
    da[-1], db[-1] = right_boundary_rhs(state, params, right, sign)
    return da, db


def gle_rhs(a: np.ndarray, r: float, c: float, d: float, h: float) -> np.ndarray:
    """Discrete Ginzburg-Landau right-hand side on a periodic lattice:

        r a_j + (c/h^2)(a_{j+1} - 2 a_j + a_{j-1}) - d |a_j|^2 a_j
    """
    a = np.asarray(a, dtype=complex)
    ap, am = np.roll(a, -1), np.roll(a, 1)
    return r * a + (c / h ** 2) * (ap - 2.0 * a + am) - d * (np.abs(a) ** 2) * a


def reality_check(state: AmplitudeState) -> float:
    """Distance from the real-field sector, max_j |b_j - conj(a_j)|."""
    return float(np.max(np.abs(state.b - np.conj(state.a)))) if state.n else 0.0


def max_stable_dt(params: ModelParams) -> float:
    """Explicit-stepping bound 0.1 h^2/8, a 10x margin on the fast wall mode."""
    return 0.1 * params.h ** 2 / 8.0


def rk4_step(state: AmplitudeState, params: ModelParams,
             forcing: BoundaryForcing, dt: float,
             forcing_right: Optional[BoundaryForcing] = None) -> AmplitudeState:
    """One classical fourth-order Runge-Kutta step.

    Time-dependent forcing is evaluated at the stage times, which assumes
    slowly varying signals (the model itself is only valid in that regime).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > max_stable_dt(params) * (1.0 + 1e-12):
        raise ValueError(
            f"dt={dt} exceeds the stability margin {max_stable_dt(params):.4g}")

    def f(t, a, b):
        return model_rhs(AmplitudeState(t, a, b), params, forcing, forcing_right)

    t, a, b = state.t, state.a, state.b
    k1a, k1b = f(t, a, b)
    k2a, k2b = f(t + dt / 2, a + dt / 2 * k1a, b + dt / 2 * k1b)
    k3a, k3b = f(t + dt / 2, a + dt / 2 * k2a, b + dt / 2 * k2b)
    k4a, k4b = f(t + dt, a + dt * k3a, b + dt * k3b)
    a_new = a + dt / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
    b_new = b + dt / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
    return AmplitudeState(t + dt, a_new, b_new)


@dataclass
class Trajectory:
    """Sampled model trajectory: times (nt,), amplitudes (nt, N)."""

    times: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def final(self) -> AmplitudeState:
        return AmplitudeState(float(self.times[-1]), self.a[-1].copy(), self.b[-1].copy())


def run_model(state: AmplitudeState, params: ModelParams,
              forcing: BoundaryForcing, t_end: float, dt: float,
              forcing_right: Optional[BoundaryForcing] = None,
              sample_stride: int = 1) -> Trajectory:
    """Integrate the lattice model from state.t to t_end.

    The step is shrunk uniformly so the run lands exactly on t_end.  The
    trajectory is recorded every sample_stride steps (the final state is
    always included).  Raises DivergenceError on NaN or runaway growth.
    """
    span = t_end - state.t
    if span <= 0:
        raise ValueError("t_end must exceed the state time")
    n_steps = max(1, math.ceil(span / dt - 1e-12))
    dt_eff = span / n_steps

    times = [state.t]
    av = [state.a.copy()]
    bv = [state.b.copy()]
    current = state
    for step in range(1, n_steps + 1):
        # overflow on the way to the finite check below is the detection
        # mechanism, not an error in itself
        with np.errstate(over="ignore", invalid="ignore"):
            current = rk4_step(current, params, forcing, dt_eff, forcing_right)
        if not (np.all(np.isfinite(current.a.view(float)))
                and np.all(np.isfinite(current.b.view(float)))):
            raise DivergenceError(f"NaN/Inf amplitude at t={current.t:.6g}")
        if np.max(np.abs(current.a)) > _BLOWUP or np.max(np.abs(current.b)) > _BLOWUP:
            raise DivergenceError(f"amplitude runaway at t={current.t:.6g}")
        if step % sample_stride == 0 or step == n_steps:
            times.append(current.t)
            av.append(current.a.copy())
            bv.append(current.b.copy())
    return Trajectory(np.array(times), np.array(av), np.array(bv))
