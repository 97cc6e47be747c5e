"""Path-integral verification of the nonsmooth chain rule.

For a locally Lipschitz f with a subgradient selection g and an
absolutely continuous path p on [0, T], the increment identity

    f(p(T)) - f(p(0)) = integral_0^T <g(p(t)), pdot(t)> dt

holds for any valid selection.  This module approximates the right-hand
side by midpoint quadrature on a partition refined to include all path
knots, and reports the observed gap against a calibrated O(h) tolerance.
It doubles as a test instrument for every subgradient selection in the
package: a wrong selection breaks the identity at order one.

Selections are single-valued and continuous almost everywhere, so
avoiding evaluation exactly at the known kinks (the knots) removes the
only discretization pathology; kinks of f itself crossed by the path at
unknown times contribute the O(h) term.
"""

from dataclasses import dataclass

import numpy as np

from .core import UsageError, as_vector


@dataclass(frozen=True)
class SelectionFunction:
    """A function together with one single-valued subgradient selection.

    ``f`` maps a point to a scalar; ``g`` maps a point to a vector in
    the generalized subdifferential at that point.  ``g_many``, when
    present, evaluates the selection on a whole (N, dim) block at once
    and is what makes fine quadrature cheap.
    """

    f: callable
    g: callable
    dim: int = None
    g_many: callable = None
    name: str = ""


class Path:
    """Lipschitz path on [0, T] with an explicit velocity accessor.

    Three families: a single segment, a piecewise-linear chain of
    knots, and a smooth parametric curve given by callables.  The
    velocity is defined except at knots; quadrature never evaluates
    there.  No numerical differentiation of paths is done.
    """

    def __init__(self, kind, T, times=None, points=None, fn=None, vel=None, dim=None):
        if T <= 0:
            raise UsageError("path horizon T must be positive")
        self.kind = kind
        self.T = float(T)
        self.times = times
        self.points = points
        self.fn = fn
        self.vel = vel
        self.dim = dim
        if points is not None:
            seg = np.diff(points, axis=0)
            dt = np.diff(times)
            self._seg_vel = seg / dt[:, None]

    @classmethod
    def segment(cls, p0, p1, T=1.0):
        p0 = as_vector(p0, name="p0")
        p1 = as_vector(p1, dim=p0.size, name="p1")
        return cls("segment", T, times=np.array([0.0, float(T)]),
                   points=np.stack([p0, p1]), dim=p0.size)

    @classmethod
    def piecewise_linear(cls, points, T=1.0, times=None):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 2:
            raise UsageError("piecewise-linear path needs >= 2 knot points")
        if times is None:
            times = np.linspace(0.0, float(T), points.shape[0])
        else:
            times = np.asarray(times, dtype=np.float64)
            if times.shape != (points.shape[0],):
                raise UsageError("times must match the number of knot points")
            if times[0] != 0.0 or times[-1] != T:
                raise UsageError("knot times must start at 0 and end at T")
            if np.any(np.diff(times) <= 0):
                raise UsageError("knot times must be strictly increasing")
        return cls("piecewise-linear", T, times=times, points=points,
                   dim=points.shape[1])

    @classmethod
    def smooth(cls, fn, vel, T, dim):
        """Parametric curve from callables; both must accept a scalar t
        and, ideally, a 1-D array of times (returning an (N, dim) block)."""
        return cls("smooth-parametric", T, fn=fn, vel=vel, dim=dim)

    @property
    def knots(self):
        if self.times is not None:
            return self.times
        return np.array([0.0, self.T])

    def at(self, t):
        return self.at_many(np.array([float(t)]))[0]

    def velocity(self, t):
        return self.velocity_many(np.array([float(t)]))[0]

    def _call_batch(self, func, ts):
        out = np.asarray(func(ts), dtype=np.float64)
        if out.shape == (ts.size, self.dim):
            return out
        return np.stack([as_vector(func(float(t)), dim=self.dim, name="path value")
                         for t in ts])

    def at_many(self, ts):
        ts = np.asarray(ts, dtype=np.float64)
        if self.kind == "smooth-parametric":
            return self._call_batch(self.fn, ts)
        out = np.empty((ts.size, self.dim))
        for d in range(self.dim):
            out[:, d] = np.interp(ts, self.times, self.points[:, d])
        return out

    def velocity_many(self, ts):
        ts = np.asarray(ts, dtype=np.float64)
        if self.kind == "smooth-parametric":
            return self._call_batch(self.vel, ts)
        idx = np.clip(np.searchsorted(self.times, ts, side="right") - 1,
                      0, len(self.times) - 2)
        return self._seg_vel[idx]


def _partition(knots, h):
    """Midpoints and widths of a knot-refined partition of mesh <= h."""
    mids, widths = [], []
    for a, b in zip(knots[:-1], knots[1:]):
        n = max(1, int(np.ceil((b - a) / h - 1e-12)))
        edges = np.linspace(a, b, n + 1)
        mids.append(0.5 * (edges[:-1] + edges[1:]))
        widths.append(np.full(n, (b - a) / n))
    return np.concatenate(mids), np.concatenate(widths)


def _check_quadrature_args(path, h):
    if h <= 0:
        raise UsageError("quadrature step h must be positive")
    if h > path.T / 10:
        raise UsageError("quadrature step h must be at most T/10")


def _selection_block(sel, P):
    if sel.g_many is not None:
        return np.asarray(sel.g_many(P), dtype=np.float64)
    return np.stack([np.atleast_1d(np.asarray(sel.g(P[i]), dtype=np.float64))
                     for i in range(P.shape[0])])


def _quadrature(sel, path, h):
    mids, widths = _partition(path.knots, h)
    P = path.at_many(mids)
    V = path.velocity_many(mids)
    G = _selection_block(sel, P)
    integral = float(np.sum(widths * np.einsum("ij,ij->i", G, V)))
    return integral, G, V


def path_integral(sel, path, h):
    """Midpoint-rule approximation of the chain-rule integral."""
    _check_quadrature_args(path, h)
    return _quadrature(sel, path, h)[0]


@dataclass(frozen=True)
class ChainRuleReport:
    """Both sides of the increment identity and the observed gap.

    ``C`` is the calibrated tolerance slope, 10 times the product of
    the sampled selection bound and the sampled speed bound along the
    path; ``passed`` means gap <= C*h (+ a 1e-12 floor for the
    all-zero degenerate case).
    """

    lhs: float
    rhs: float
    gap: float
    h: float
    C: float
    tol: float
    passed: bool


def chain_rule_check(sel, path, h, C=None):
    """Compare f(p(T)) - f(p(0)) against the path integral at step h."""
    _check_quadrature_args(path, h)
    rhs, G, V = _quadrature(sel, path, h)
    lhs = float(sel.f(path.at(path.T))) - float(sel.f(path.at(0.0)))
    gap = abs(lhs - rhs)
    if C is None:
        g_bound = float(np.max(np.linalg.norm(G, axis=1))) if G.size else 0.0
        v_bound = float(np.max(np.linalg.norm(V, axis=1))) if V.size else 0.0
        C = 10.0 * g_bound * v_bound
    tol = C * h + 1e-12
    return ChainRuleReport(lhs=lhs, rhs=rhs, gap=gap, h=h, C=C, tol=tol,
                           passed=gap <= tol)


def convergence_order(sel_paths, hs):
    """Empirical order of the chain-rule gap in h.

    ``sel_paths`` is a list of (selection, path) pairs; the mean gap
    over the batch is computed for every h and the slope of
    log(mean gap) against log(h) is returned.  Averaging first smooths
    out the per-path oscillation of where a kink lands in the grid.
    """
    hs = np.asarray(hs, dtype=np.float64)
    mean_gaps = []
    for h in hs:
        gaps = [chain_rule_check(sel, path, float(h)).gap
                for sel, path in sel_paths]
        mean_gaps.append(max(float(np.mean(gaps)), 1e-300))
    slope = np.polyfit(np.log(hs), np.log(mean_gaps), 1)[0]
    return float(slope)


def compose_subgrad(outer, inners):
    """Selection for the composition x -> f0(f1(x), ..., fm(x)).

    The chain selection is [g1(x) ... gm(x)] g0(f1(x), ..., fm(x)),
    a valid member of the composition's generalized subdifferential.
    """
    m = len(inners)
    if m == 0:
        raise UsageError("composition needs at least one inner function")
    if outer.dim is not None and outer.dim != m:
        raise UsageError(f"outer selection expects dimension {outer.dim}, "
                         f"got {m} inner functions")
    inner_dims = {s.dim for s in inners if s.dim is not None}
    if len(inner_dims) > 1:
        raise UsageError("inner selections disagree on the input dimension")
    dim = inner_dims.pop() if inner_dims else None

    def f(x):
        u = np.array([float(s.f(x)) for s in inners])
        return float(outer.f(u))

    def g(x):
        u = np.array([float(s.f(x)) for s in inners])
        J = np.column_stack([np.atleast_1d(s.g(x)) for s in inners])
        return J @ np.atleast_1d(outer.g(u))

    return SelectionFunction(f=f, g=g, dim=dim,
                             name=f"compose[{outer.name or 'outer'};{m}]")


# ---------------------------------------------------------------------------
# canonical selections used by the verification suites


def scalar_abs(tie=0.0):
    """|x| on the line; the selection at the kink is ``tie`` (any value
    in [-1, 1] is a valid choice)."""
    if not -1.0 <= tie <= 1.0:
        raise UsageError("tie value must lie in [-1, 1]")

    def g_many(P):
        G = np.sign(P)
        G[P == 0.0] = tie
        return G

    return SelectionFunction(
        f=lambda x: float(np.abs(np.atleast_1d(x)[0])),
        g=lambda x: np.where(np.atleast_1d(x) == 0.0, tie,
                             np.sign(np.atleast_1d(x))).astype(float),
        dim=1, g_many=g_many, name=f"abs(tie={tie})")


def l1_distance(xstar):
    """l1 distance to a fixed point, sign selection with 0 at ties."""
    xstar = as_vector(xstar, name="xstar")
    return SelectionFunction(
        f=lambda x: float(np.sum(np.abs(x - xstar))),
        g=lambda x: np.sign(x - xstar),
        dim=xstar.size,
        g_many=lambda P: np.sign(P - xstar),
        name="l1-distance")


def max_coordinate(dim):
    """max_i x_i; the selection is the first maximizing unit vector."""

    def g(x):
        e = np.zeros(dim)
        e[int(np.argmax(x))] = 1.0
        return e

    def g_many(P):
        G = np.zeros_like(P)
        G[np.arange(P.shape[0]), np.argmax(P, axis=1)] = 1.0
        return G

    return SelectionFunction(f=lambda x: float(np.max(x)), g=g, dim=dim,
                             g_many=g_many, name="max-coordinate")


def affine(c, b=0.0):
    """c.x + b, whose selection is the constant gradient c."""
    c = as_vector(c, name="c")
    return SelectionFunction(
        f=lambda x: float(c @ x + b),
        g=lambda x: c.copy(),
        dim=c.size,
        g_many=lambda P: np.broadcast_to(c, P.shape).copy(),
        name="affine")


def scalar_half_square():
    """u -> u^2/2 on the line (smooth outer for composition tests)."""
    return SelectionFunction(
        f=lambda u: 0.5 * float(np.atleast_1d(u)[0]) ** 2,
        g=lambda u: np.atleast_1d(u).astype(float).copy(),
        dim=1, name="half-square")
