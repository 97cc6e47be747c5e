"""The averaging method and a plain projected stochastic subgradient baseline.

One averaging iteration, in order:

    y^k     = argmin_{y in X} <z^k, y - x^k> + beta/2 |y - x^k|^2
    x^{k+1} = x^k + tau_k (y^k - x^k)
    g^{k+1} = oracle.query(x^{k+1})            (observed at the NEW point)
    z^{k+1} = (1 - a tau_k) z^k + a tau_k g^{k+1}

The baseline queries at the current point and projects a plain step:
x^{k+1} = P_X(x^k - tau_k g^k).  Both emit one trace row per iteration
describing the pre-update state.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import UsageError, as_vector
from .gap import FEASIBILITY_TOL


@dataclass
class IterateState:
    """Full algorithm state: iterate, averaged direction, counters.

    ``estimate`` is the oracle observation made at ``x`` (None for the
    baseline before its first step, which queries during the step).
    ``t`` accumulates the stepsizes spent so far.
    """

    x: np.ndarray
    z: np.ndarray
    k: int
    t: float
    estimate: object = None


@dataclass(frozen=True)
class TraceRow:
    """Per-iteration record: quantities describing state k."""

    k: int
    t: float
    loss: float
    eta: float
    residual: float
    step_norm: float
    dist: float | None = None


class Trace:
    """Column-oriented run record with one row per iteration.

    Columns: ``k, t, loss, eta, residual, step_norm`` and, when a
    reference solution was tracked, ``dist``.  ``meta`` carries the
    resolved configuration echoed by the caller.
    """

    COLUMNS = ("k", "t", "loss", "eta", "residual", "step_norm")

    def __init__(self, k, t, loss, eta, residual, step_norm, dist=None, meta=None):
        self.k = np.asarray(k, dtype=np.int64)
        self.t = np.asarray(t, dtype=np.float64)
        self.loss = np.asarray(loss, dtype=np.float64)
        self.eta = np.asarray(eta, dtype=np.float64)
        self.residual = np.asarray(residual, dtype=np.float64)
        self.step_norm = np.asarray(step_norm, dtype=np.float64)
        self.dist = None if dist is None else np.asarray(dist, dtype=np.float64)
        self.meta = dict(meta or {})

    def __len__(self):
        return self.k.size

    def row(self, i):
        return TraceRow(
            k=int(self.k[i]), t=float(self.t[i]), loss=float(self.loss[i]),
            eta=float(self.eta[i]), residual=float(self.residual[i]),
            step_norm=float(self.step_norm[i]),
            dist=None if self.dist is None else float(self.dist[i]),
        )

    def rows(self):
        return [self.row(i) for i in range(len(self))]

    def _tail(self, frac):
        n = max(1, int(round(len(self) * frac)))
        return self.loss[len(self) - n:]

    def smoothed_loss(self, frac=0.1):
        """Mean loss over the final ``frac`` of the run."""
        return float(np.mean(self._tail(frac)))

    def tail_std(self, frac=0.1):
        """Standard deviation of the loss over the final ``frac`` of the run."""
        return float(np.std(self._tail(frac)))

    def initial_loss(self, frac=0.01, min_rows=100):
        n = min(len(self), max(min_rows, int(round(len(self) * frac))))
        return float(np.mean(self.loss[:n]))


def _check_feasible_exact(x, box, name):
    if not box.contains(x, tol=0.0):
        raise UsageError(f"{name} lies outside the feasible box")


def ssam_init(x0, oracle, params, box, rng):
    """Initial state at a feasible x0.

    The oracle is queried once at x0; the averaged direction starts at
    that observation (or at zero with ``z_init='zero'``, the query then
    only feeds the trace loss).
    """
    x0 = as_vector(x0, dim=box.dim, name="x0")
    _check_feasible_exact(x0, box, "x0")
    est = oracle.query(x0, rng)
    z = est.g.copy() if params.z_init == "oracle" else np.zeros(box.dim)
    return IterateState(x=x0, z=z, k=0, t=0.0, estimate=est)


def ssam_step(state, oracle, params, box, rng, tau_k=None, x_star=None):
    """One averaging iteration; returns the new state and the trace row
    describing the pre-update state."""
    if tau_k is None:
        tau_k = params.schedule.tau(state.k)
    x, z = state.x, state.z
    y, eta_val, resid = kernels.ybar_eta(x, z, params.beta, box.lower, box.upper)
    # convex combination of feasible points; the clamp only absorbs last-ulp
    # rounding so the feasibility invariant stays machine-exact
    x_new = kernels.project_box(x + tau_k * (y - x), box.lower, box.upper)
    est = oracle.query(x_new, rng)
    atau = params.a * tau_k
    z_new = (1.0 - atau) * z + atau * est.g
    row = TraceRow(
        k=state.k, t=state.t,
        loss=state.estimate.f_estimate if state.estimate is not None else np.nan,
        eta=eta_val, residual=resid, step_norm=tau_k * resid,
        dist=None if x_star is None else float(np.linalg.norm(x - x_star)),
    )
    new_state = IterateState(x=x_new, z=z_new, k=state.k + 1,
                             t=state.t + tau_k, estimate=est)
    return new_state, row


def sgd_step(state, oracle, params, box, rng, tau_k=None, x_star=None):
    """One projected subgradient iteration without averaging.

    The trace's eta/residual are computed at (x^k, g^k), i.e. the gap of
    the freshly observed direction, so both methods report comparable
    stationarity measures.  ``z`` mirrors the last observation.
    """
    if tau_k is None:
        tau_k = params.schedule.tau(state.k)
    x = state.x
    est = oracle.query(x, rng)
    g = est.g
    _, eta_val, resid = kernels.ybar_eta(x, g, params.beta, box.lower, box.upper)
    x_new = kernels.project_box(x - tau_k * g, box.lower, box.upper)
    row = TraceRow(
        k=state.k, t=state.t, loss=est.f_estimate,
        eta=eta_val, residual=resid,
        step_norm=float(np.linalg.norm(x_new - x)),
        dist=None if x_star is None else float(np.linalg.norm(x - x_star)),
    )
    new_state = IterateState(x=x_new, z=g, k=state.k + 1,
                             t=state.t + tau_k, estimate=est)
    return new_state, row


def stop_on_residual(threshold):
    """Callback that stops a run once the gap residual falls below ``threshold``."""
    def cb(state, row):
        return row.residual <= threshold
    return cb


def run(method, oracle, box, params, iters, x0=None, x_star=None,
        callbacks=(), z_bound=None, meta=None):
    """Drive ``iters`` iterations of one method; deterministic given the seed.

    ``x0`` defaults to the oracle's ``initial_point`` when it defines
    one, else to the projection of the origin onto the box.  Any
    callback returning truthy on ``(state, row)`` stops the run early.
    ``z_bound`` (sup-norm) only counts violations into
    ``meta['z_bound_exceeded']``; it never aborts.
    """
    if iters < 1:
        raise UsageError("iters must be >= 1")
    if method not in ("ssam", "sgd"):
        raise UsageError(f"unknown method {method!r}")
    rng = np.random.default_rng(params.seed)
    if x0 is None:
        if hasattr(oracle, "initial_point"):
            x0 = oracle.initial_point(rng)
        else:
            x0 = box.project(np.zeros(box.dim))
    if method == "ssam":
        state = ssam_init(x0, oracle, params, box, rng)
        step = ssam_step
    else:
        x0 = as_vector(x0, dim=box.dim, name="x0")
        _check_feasible_exact(x0, box, "x0")
        state = IterateState(x=x0, z=np.zeros(box.dim), k=0, t=0.0, estimate=None)
        step = sgd_step

    taus = params.schedule.values(iters)
    cols = {name: np.empty(iters) for name in ("t", "loss", "eta", "residual", "step_norm")}
    dist = np.empty(iters) if x_star is not None else None
    z_exceeded = 0
    n_done = 0
    for k in range(iters):
        state, row = step(state, oracle, params, box, rng,
                          tau_k=float(taus[k]), x_star=x_star)
        cols["t"][k] = row.t
        cols["loss"][k] = row.loss
        cols["eta"][k] = row.eta
        cols["residual"][k] = row.residual
        cols["step_norm"][k] = row.step_norm
        if dist is not None:
            dist[k] = row.dist
        n_done = k + 1
        if z_bound is not None and np.max(np.abs(state.z)) > z_bound:
            z_exceeded += 1
        if callbacks and any(cb(state, row) for cb in callbacks):
            break

    full_meta = {"method": method, "iters_requested": iters}
    full_meta.update(meta or {})
    if z_bound is not None:
        full_meta["z_bound_exceeded"] = z_exceeded
    sl = slice(0, n_done)
    return Trace(
        k=np.arange(n_done), t=cols["t"][sl], loss=cols["loss"][sl],
        eta=cols["eta"][sl], residual=cols["residual"][sl],
        step_norm=cols["step_norm"][sl],
        dist=None if dist is None else dist[sl], meta=full_meta,
    )
