"""Euler integrator for the averaging method's limiting dynamics.

Continuous-time picture behind the discrete iteration:

    Xdot = ybar(X, Z) - X,      Zdot = a (g(X) - Z),

with X re-projected after every step to keep feasibility exact.  The
monitor tracks the function W(X, Z) = a f(X) - eta(X, Z), which
decreases along trajectories at rate a * beta * |Xdot|^2; the discrete
check therefore expects

    W_{j+1} - W_j <= -a beta h |Xdot_j|^2 + O(h^2)

and the O(h^2) drift is estimated by step halving.  The inclusion for
Zdot is integrated with the same fixed selection the oracle uses;
set-valued integration is out of scope.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import UsageError, as_vector
from .optimizer import Trace


@dataclass
class FlowState:
    """Continuous-time pair (X, Z) at time t."""

    x: np.ndarray
    z: np.ndarray
    t: float


@dataclass(frozen=True)
class LyapunovReading:
    """Monitor snapshot: W = a f(X) - eta(X, Z) and its ingredients.

    ``speed`` is |Xdot| = |ybar(X, Z) - X|, which doubles as the
    stationarity residual of the current pair.
    """

    t: float
    W: float
    f_val: float
    eta_val: float
    speed: float


def flow_step(state, sel, a, beta, box, h):
    """One explicit Euler step of the coupled system.

    X moves toward the gap minimizer, Z relaxes toward the selection at
    the current X.  The re-projection only absorbs rounding: X + h
    (ybar - X) is a convex combination of feasible points for h <= 1.
    """
    if h <= 0:
        raise UsageError("step size h must be positive")
    x, z = state.x, state.z
    y, _, _ = kernels.ybar_eta(x, z, beta, box.lower, box.upper)
    x_new = kernels.project_box(x + h * (y - x), box.lower, box.upper)
    z_new = z + h * a * (np.asarray(sel.g(x)) - z)
    return FlowState(x=x_new, z=z_new, t=state.t + h)


def reading(state, sel, a, beta, box):
    _, eta_val, resid = kernels.ybar_eta(state.x, state.z, beta,
                                         box.lower, box.upper)
    f_val = float(sel.f(state.x))
    return LyapunovReading(t=state.t, W=a * f_val - eta_val,
                           f_val=f_val, eta_val=eta_val, speed=resid)


def integrate(x0, z0, sel, a, beta, box, T, h):
    """Integrate to time T with fixed step h; a reading per step.

    Returns the list of readings at t = 0, h, 2h, ..., including both
    endpoints (round(T/h) steps).
    """
    if T <= 0:
        raise UsageError("horizon T must be positive")
    if h <= 0:
        raise UsageError("step size h must be positive")
    if a <= 0 or beta <= 0:
        raise UsageError("a and beta must be positive")
    x0 = as_vector(x0, dim=box.dim, name="x0")
    if not box.contains(x0, tol=0.0):
        raise UsageError("x0 lies outside the feasible box")
    z0 = as_vector(z0, dim=box.dim, name="z0")
    state = FlowState(x=x0.copy(), z=z0.copy(), t=0.0)
    n_steps = max(1, int(round(T / h)))
    readings = [reading(state, sel, a, beta, box)]
    for _ in range(n_steps):
        state = flow_step(state, sel, a, beta, box, h)
        readings.append(reading(state, sel, a, beta, box))
    return readings


def descent_violation(readings, a, beta, h):
    """Worst per-step violation of the discrete Lyapunov inequality.

    max_j [ W_{j+1} - W_j + a beta h speed_j^2 ]; nonpositive values
    mean clean descent, positive values should shrink like h^2 per
    step when h is halved.
    """
    if len(readings) < 2:
        raise UsageError("need at least two readings")
    W = np.array([r.W for r in readings])
    sp = np.array([r.speed for r in readings])
    return float(np.max(np.diff(W) + a * beta * h * sp[:-1] ** 2))


def readings_to_trace(readings, h, meta=None):
    """Readings in the optimizer trace layout.

    Columns map as loss = f, eta = eta, residual = speed = |Xdot| and
    step_norm = h * speed, so dynamics output reuses the same file
    format and analysis helpers as method runs.
    """
    full_meta = {"method": "flow", "h": h}
    full_meta.update(meta or {})
    t = np.array([r.t for r in readings])
    sp = np.array([r.speed for r in readings])
    return Trace(
        k=np.arange(len(readings)),
        t=t,
        loss=np.array([r.f_val for r in readings]),
        eta=np.array([r.eta_val for r in readings]),
        residual=sp,
        step_norm=h * sp,
        meta=full_meta,
    )
