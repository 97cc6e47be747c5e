"""Stochastic subgradient oracles and convex test problems.

An oracle answers ``query(x, rng)`` with an observed subgradient
``g = s + e + delta`` where ``s`` is an exact selection from the
objective's generalized subdifferential, ``e`` is zero-mean noise and
``delta`` a decaying bias.  The clean test oracles below have known
constrained minimizers, which the convergence tests lean on.
"""

from dataclasses import dataclass

import numpy as np

from .core import UsageError, as_matrix, as_vector


@dataclass
class SubgradientEstimate:
    """One oracle observation: direction, sample loss, optional clean part.

    ``true_part`` is populated only by noise wrappers built with
    ``record_true=True`` (test builds); production runs never see it,
    so the exact selection cannot leak into the algorithm.
    """

    g: np.ndarray
    f_estimate: float
    true_part: np.ndarray | None = None


@dataclass(frozen=True)
class NoiseSpec:
    """Observation noise: i.i.d. N(0, sigma_e^2) per coordinate plus a
    deterministic bias of norm delta0 / (1+k)^rho at query k."""

    sigma_e: float = 0.0
    delta0: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        if self.sigma_e < 0 or self.delta0 < 0:
            raise UsageError("noise magnitudes must be nonnegative")
        if self.rho <= 0:
            raise UsageError("bias decay rate rho must be positive")

    @property
    def is_null(self):
        return self.sigma_e == 0.0 and self.delta0 == 0.0


class Oracle:
    """Interface: ``dim`` attribute plus ``query(x, rng)``.

    Queries must be deterministic given the state of ``rng``.  Test
    oracles additionally expose the exact objective ``f`` and a
    constrained ``exact_solution``.
    """

    dim = None

    def query(self, x, rng):
        raise NotImplementedError

    def f(self, x):
        raise NotImplementedError

    def exact_solution(self, box):
        return None


class QuadraticOracle(Oracle):
    """Smooth convex ground truth f(x) = 1/2 |Ax - b|^2."""

    def __init__(self, A, b):
        self.A = as_matrix(A, name="A")
        self.b = as_vector(b, dim=self.A.shape[0], name="b")
        self.dim = self.A.shape[1]

    def f(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def grad(self, x):
        return self.A.T @ (self.A @ x - self.b)

    def query(self, x, rng):
        r = self.A @ x - self.b
        return SubgradientEstimate(g=self.A.T @ r, f_estimate=0.5 * float(r @ r))

    def exact_solution(self, box, tol=1e-12, max_iter=500_000):
        """Constrained minimizer by projected exact gradient descent.

        Requires full column rank so the minimizer is unique.
        """
        if np.linalg.matrix_rank(self.A) < self.dim:
            raise UsageError("A is rank deficient; constrained minimizer not unique")
        step = 1.0 / np.linalg.norm(self.A, 2) ** 2
        x = box.project(np.zeros(self.dim))
        for _ in range(max_iter):
            x_new = box.project(x - step * self.grad(x))
            if np.linalg.norm(x_new - x) <= tol:
                return x_new
            x = x_new
        return x


class L1Oracle(Oracle):
    """Nonsmooth convex test f(x) = |x - xstar|_1.

    The subgradient selection is the componentwise sign, with 0 at
    ties, a valid single-valued choice from the subdifferential.
    """

    def __init__(self, xstar):
        self.xstar = as_vector(xstar, name="xstar")
        self.dim = self.xstar.size

    def f(self, x):
        return float(np.sum(np.abs(x - self.xstar)))

    def selection(self, x):
        return np.sign(x - self.xstar)

    def query(self, x, rng):
        return SubgradientEstimate(g=self.selection(x), f_estimate=self.f(x))

    def exact_solution(self, box):
        # the l1 distance is separable, so clamping minimizes it over a box
        return box.project(self.xstar)


class NoisyOracle(Oracle):
    """Wraps a base oracle with additive noise e^k + delta^k.

    ``e^k`` is i.i.d. mean-zero Gaussian; ``delta^k`` is a decaying bias
    along a fixed unit direction.  The query counter k advances once per
    query, matching the observation order of the method (noise at step k
    is drawn after the query point is fixed).
    """

    def __init__(self, base, noise, direction=None, record_true=False):
        self.base = base
        self.noise = noise
        self.dim = base.dim
        self.record_true = record_true
        self.k = 0
        if direction is None:
            direction = np.ones(self.dim)
        direction = as_vector(direction, dim=self.dim, name="direction")
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise UsageError("bias direction must be nonzero")
        self.direction = direction / norm

    def f(self, x):
        return self.base.f(x)

    def exact_solution(self, box):
        return self.base.exact_solution(box)

    def __getattr__(self, name):
        # expose base-oracle extras (initial_point, xstar, ...) unchanged
        return getattr(self.base, name)

    def query(self, x, rng):
        est = self.base.query(x, rng)
        g = est.g
        if self.noise.sigma_e > 0:
            g = g + rng.normal(0.0, self.noise.sigma_e, self.dim)
        if self.noise.delta0 > 0:
            g = g + (self.noise.delta0 / (1.0 + self.k) ** self.noise.rho) * self.direction
        self.k += 1
        return SubgradientEstimate(
            g=g,
            f_estimate=est.f_estimate,
            true_part=est.g.copy() if self.record_true else None,
        )


def with_noise(base, noise, rng=None, record_true=False):
    """Noise-wrapped oracle; a null spec returns the base unchanged.

    When ``rng`` is given the fixed bias direction is drawn from it
    (uniform on the sphere); otherwise the normalized all-ones vector
    is used.
    """
    if noise.is_null and not record_true:
        return base
    direction = None
    if rng is not None:
        v = rng.normal(size=base.dim)
        while np.linalg.norm(v) == 0:
            v = rng.normal(size=base.dim)
        direction = v
    return NoisyOracle(base, noise, direction=direction, record_true=record_true)
