"""Gap function, its minimizer, and stationarity residuals.

For a feasible point x and a direction z, the gap value is

    eta(x, z) = min_{y in X} { <z, y - x> + beta/2 |y - x|^2 }  <=  0,

attained at ybar(x, z), the projection of x - z/beta onto the box X.
A pair with eta(x, z) = 0 has -z in the normal cone at x, so the
residual |ybar - x| doubles as a stationarity measure.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import UsageError, as_vector

#: slack allowed when checking that x is feasible; the optimizer keeps
#: iterates in the box exactly, so this only guards float drift
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class GapResult:
    """Minimizer, gap value (<= 0) and the residual |ybar - x|."""

    ybar: np.ndarray
    eta: float
    residual: float


def _check_inputs(x, z, beta, box):
    x = as_vector(x, dim=box.dim, name="x")
    z = as_vector(z, dim=box.dim, name="z")
    if beta <= 0:
        raise UsageError("beta must be positive")
    if not box.contains(x, tol=FEASIBILITY_TOL):
        raise UsageError("x lies outside the feasible box")
    return x, z


def ybar(x, z, beta, box):
    """Unique minimizer of <z, y-x> + beta/2 |y-x|^2 over the box."""
    x, z = _check_inputs(x, z, beta, box)
    y, _, _ = kernels.ybar_eta(x, z, beta, box.lower, box.upper)
    return y


def eta(x, z, beta, box):
    """Gap value at (x, z) together with its minimizer and residual."""
    x, z = _check_inputs(x, z, beta, box)
    y, val, resid = kernels.ybar_eta(x, z, beta, box.lower, box.upper)
    return GapResult(ybar=y, eta=val, residual=resid)


def stationarity_ok(x, g, beta, box, tol):
    """True when the projected step from (x, g) moves by at most ``tol``.

    Equivalently, -g lies (approximately) in the normal cone at x.
    """
    x, g = _check_inputs(x, g, beta, box)
    _, _, resid = kernels.ybar_eta(x, g, beta, box.lower, box.upper)
    return resid <= tol
