"""Foundational numeric types: feasible boxes, stepsize schedules, parameters.

Points, directions and subgradients are plain 1-D float64 numpy arrays;
weight matrices are 2-D float64 arrays.  ``as_vector`` / ``as_matrix``
are the validating entry points that enforce finiteness and shape.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import kernels

#: sentinel half-width standing in for an unbounded coordinate
UNBOUNDED = 1e12


class SsamError(Exception):
    """Base class for errors raised by this package."""


class UsageError(SsamError):
    """Invalid arguments or configuration supplied by the caller."""


class DataError(SsamError):
    """Unreadable or malformed input data."""


def as_vector(x, dim=None, name="vector"):
    """Coerce to a finite, contiguous 1-D float64 array.

    Raises UsageError on NaN/Inf entries, wrong rank, or (when ``dim``
    is given) a length mismatch.
    """
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise UsageError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < 1:
        raise UsageError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite entries")
    if dim is not None and arr.size != dim:
        raise UsageError(f"{name} has dimension {arr.size}, expected {dim}")
    return arr


def as_matrix(a, shape=None, name="matrix"):
    """Coerce to a finite, contiguous 2-D float64 array."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise UsageError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite entries")
    if shape is not None and arr.shape != tuple(shape):
        raise UsageError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


def _freeze(arr):
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class BoxConstraint:
    """Per-coordinate bounds ``lower <= x <= upper`` with exact projection.

    Unbounded coordinates are represented by the finite sentinel
    ``UNBOUNDED`` so the projection stays total and branch-free.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, dim=lo.size, name="upper")
        if np.any(lo > hi):
            raise UsageError("box has lower > upper in some coordinate")
        object.__setattr__(self, "lower", _freeze(lo))
        object.__setattr__(self, "upper", _freeze(hi))

    @property
    def dim(self):
        return self.lower.size

    @classmethod
    def cube(cls, dim, half_width, center=0.0):
        """Box ``[center - half_width, center + half_width]`` in every coordinate."""
        if half_width <= 0:
            raise UsageError("half_width must be positive")
        c = np.full(dim, float(center))
        h = np.full(dim, float(half_width))
        return cls(c - h, c + h)

    @classmethod
    def interval(cls, lower, upper, dim):
        """Box with the same scalar bounds in every coordinate."""
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @classmethod
    def unbounded(cls, dim):
        return cls.cube(dim, UNBOUNDED)

    def project(self, x):
        return kernels.project_box(as_vector(x, dim=self.dim, name="x"),
                                   self.lower, self.upper)

    def contains(self, x, tol=0.0):
        x = as_vector(x, dim=self.dim, name="x")
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def sample(self, rng):
        """Uniform point in the box (test / initialization helper)."""
        return self.lower + rng.random(self.dim) * (self.upper - self.lower)


def project_box(x, box):
    """Euclidean projection of ``x`` onto a box: coordinate-wise clamping."""
    return box.project(x)


_SCHEDULE_KINDS = ("harmonic-paper", "constant-then-decay", "user-table")


@dataclass(frozen=True)
class StepSchedule:
    """Stepsize law tau_k, clipped into (0, min(1, 1/a)].

    kinds:
      * ``harmonic-paper``:       tau_k = tau0 / (1 + ramp * k / horizon)
      * ``constant-then-decay``:  tau0 for k < hold, then tau0 / (1 + (k - hold) / decay)
      * ``user-table``:           explicit values; the last one repeats forever

    Out-of-range values are clipped rather than rejected, so any user
    configuration yields a usable schedule.
    """

    kind: str = "harmonic-paper"
    tau0: float = 0.03
    horizon: int = 500_000
    ramp: float = 5.0
    hold: int = 0
    decay: float = 1000.0
    table: tuple = ()
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in _SCHEDULE_KINDS:
            raise UsageError(f"unknown schedule kind {self.kind!r}")
        if self.kind != "user-table" and self.tau0 <= 0:
            raise UsageError("tau0 must be positive")
        if self.a <= 0:
            raise UsageError("a must be positive")
        if self.kind == "harmonic-paper" and self.horizon < 1:
            raise UsageError("horizon must be >= 1")
        if self.kind == "constant-then-decay" and self.decay <= 0:
            raise UsageError("decay must be positive")
        if self.kind == "user-table":
            tab = tuple(float(v) for v in self.table)
            if not tab:
                raise UsageError("user-table schedule needs at least one value")
            if min(tab) <= 0:
                raise UsageError("user-table stepsizes must be positive")
            object.__setattr__(self, "table", tab)

    @property
    def tau_max(self):
        """Upper clip from the admissibility requirement on stepsizes."""
        return min(1.0, 1.0 / self.a)

    def tau(self, k):
        if k < 0:
            raise UsageError("iteration index must be nonnegative")
        if self.kind == "harmonic-paper":
            raw = self.tau0 / (1.0 + self.ramp * k / self.horizon)
        elif self.kind == "constant-then-decay":
            if k < self.hold:
                raw = self.tau0
            else:
                raw = self.tau0 / (1.0 + (k - self.hold) / self.decay)
        else:
            raw = self.table[min(k, len(self.table) - 1)]
        return min(raw, self.tau_max)

    def values(self, n):
        """Vectorized ``[tau_0, ..., tau_{n-1}]``."""
        k = np.arange(n, dtype=np.float64)
        if self.kind == "harmonic-paper":
            raw = self.tau0 / (1.0 + self.ramp * k / self.horizon)
        elif self.kind == "constant-then-decay":
            raw = np.where(k < self.hold, self.tau0,
                           self.tau0 / (1.0 + np.maximum(k - self.hold, 0.0) / self.decay))
        else:
            idx = np.minimum(np.arange(n), len(self.table) - 1)
            raw = np.asarray(self.table, dtype=np.float64)[idx]
        return np.minimum(raw, self.tau_max)


def tau(schedule, k):
    """Stepsize tau_k emitted by a schedule (always in (0, min(1, 1/a)])."""
    return schedule.tau(k)


@dataclass(frozen=True)
class AlgoParams:
    """Fixed parameters of the averaging method.

    ``a`` is the averaging rate, ``beta`` the prox coefficient of the
    direction-finding subproblem.  The schedule is re-stamped with ``a``
    so its clipping bound always agrees with the method.
    ``z_init`` selects the initial averaged direction: ``"oracle"`` uses
    the first observed subgradient, ``"zero"`` starts from the origin.
    """

    a: float = 0.1
    beta: float = 1.0
    schedule: StepSchedule = dataclasses.field(default_factory=StepSchedule)
    seed: int = 0
    z_init: str = "oracle"

    def __post_init__(self):
        if self.a <= 0:
            raise UsageError("a must be positive")
        if self.beta <= 0:
            raise UsageError("beta must be positive")
        if self.z_init not in ("oracle", "zero"):
            raise UsageError("z_init must be 'oracle' or 'zero'")
        object.__setattr__(self, "schedule",
                           dataclasses.replace(self.schedule, a=self.a))
