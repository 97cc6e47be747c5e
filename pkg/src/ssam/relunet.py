"""Bias-free ReLU network: forward pass, sample loss, subgradient selection.

The net maps features through L-1 square hidden layers and one linear
output layer:

    s_1 = features,   s_{l+1} = max(0, W_l s_l),   prediction = W_L s_L.

Training minimizes the expected squared error over a box of weights.
The backward pass picks one element of the composition subdifferential
via per-layer 0/1 selector diagonals: a unit propagates iff its
pre-activation is strictly positive (exact zeros propagate nothing).

Weights flatten layer-major, row-major within a layer; the layout is
frozen so traces stay reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import BoxConstraint, UsageError, as_matrix, as_vector
from .oracles import Oracle, SubgradientEstimate

#: default half-width of the weight box
DEFAULT_HALF_WIDTH = 10.0


@dataclass(frozen=True)
class NetArch:
    """Depth L (>= 1 layers), feature/hidden width n, output dimension m."""

    L: int
    n: int
    m: int

    def __post_init__(self):
        if self.L < 1 or self.n < 1 or self.m < 1:
            raise UsageError("NetArch fields must be positive")

    @property
    def shapes(self):
        return [(self.n, self.n)] * (self.L - 1) + [(self.m, self.n)]

    @property
    def n_params(self):
        return (self.L - 1) * self.n * self.n + self.m * self.n


def _offsets(arch):
    sizes = [r * c for r, c in arch.shapes]
    return np.concatenate([[0], np.cumsum(sizes)])


def layers_of_flat(arch, w):
    """Reshape a flat weight vector into per-layer views (no copy)."""
    off = _offsets(arch)
    return [w[off[i]:off[i + 1]].reshape(shape)
            for i, shape in enumerate(arch.shapes)]


@dataclass
class NetParams:
    """Weight matrices plus the half-width of the feasible weight box."""

    arch: NetArch
    layers: list = field(default_factory=list)
    half_width: float = DEFAULT_HALF_WIDTH

    def __post_init__(self):
        if self.half_width <= 0:
            raise UsageError("half_width must be positive")
        if len(self.layers) != self.arch.L:
            raise UsageError(f"expected {self.arch.L} layers, got {len(self.layers)}")
        self.layers = [as_matrix(W, shape=s, name=f"W_{i+1}")
                       for i, (W, s) in enumerate(zip(self.layers, self.arch.shapes))]

    def flatten(self):
        return np.concatenate([W.ravel() for W in self.layers])

    @classmethod
    def from_flat(cls, arch, w, half_width=DEFAULT_HALF_WIDTH):
        w = as_vector(w, dim=arch.n_params, name="weights")
        return cls(arch, [layer.copy() for layer in layers_of_flat(arch, w)],
                   half_width=half_width)

    def box(self):
        return BoxConstraint.cube(self.arch.n_params, self.half_width)


def init_params(arch, rng, half_width=DEFAULT_HALF_WIDTH):
    """Entries i.i.d. uniform on [-1/sqrt(n), 1/sqrt(n)]: interior start."""
    scale = 1.0 / np.sqrt(arch.n)
    layers = [rng.uniform(-scale, scale, size=s) for s in arch.shapes]
    return NetParams(arch, layers, half_width=half_width)


@dataclass(frozen=True)
class Sample:
    """One data point: features in R^n, target in R^m."""

    features: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", as_vector(self.features, name="features"))
        object.__setattr__(self, "target", as_vector(self.target, name="target"))


@dataclass(frozen=True)
class ForwardTrace:
    """Activations s_1..s_L, the L-1 pre-activations, and the prediction."""

    s: list
    preacts: list
    y: np.ndarray


def forward(sample, params):
    x = as_vector(sample.features, dim=params.arch.n, name="features")
    s, preacts, y = kernels.relu_forward(params.layers, x)
    return ForwardTrace(s=s, preacts=preacts, y=y)


def sample_loss(sample, params):
    """Squared-error sample loss 1/2 |y - target|^2."""
    r = forward(sample, params).y - sample.target
    return 0.5 * float(r @ r)


def sample_loss_and_subgrad(sample, params):
    """Fused loss and flat subgradient selection for one sample."""
    x = as_vector(sample.features, dim=params.arch.n, name="features")
    t = as_vector(sample.target, dim=params.arch.m, name="target")
    out = np.empty(params.arch.n_params)
    loss = kernels.relu_loss_grad(params.layers, x, t, out)
    return loss, out


def sample_subgrad(sample, params):
    """Flat subgradient selection (layer-major layout, same as flatten)."""
    return sample_loss_and_subgrad(sample, params)[1]


def minibatch_subgrad(samples, params):
    """Arithmetic mean of sample subgradients, summed in list order."""
    if len(samples) == 0:
        raise UsageError("minibatch must contain at least one sample")
    acc = np.zeros(params.arch.n_params)
    for s in samples:
        acc += sample_subgrad(s, params)
    return acc / len(samples)


def batch_forward(params, X):
    """Predictions for a whole feature matrix X of shape (N, n)."""
    S = np.asarray(X, dtype=np.float64)
    for W in params.layers[:-1]:
        S = np.maximum(S @ W.T, 0.0)
    return S @ params.layers[-1].T


def mean_loss(params, X, Y):
    """Empirical objective: mean of 1/2 |prediction - target|^2."""
    R = batch_forward(params, X) - Y
    return 0.5 * float(np.mean(np.sum(R * R, axis=1)))


class ReluSampleOracle(Oracle):
    """Stochastic oracle for the training objective over flat weights.

    Each query draws a fresh minibatch of row indices from ``rng`` and
    returns the batch-mean subgradient selection with the batch-mean
    sample loss.  Batch size 1 reproduces the single-sample rule.
    """

    def __init__(self, arch, X, Y, batch_size=1, half_width=DEFAULT_HALF_WIDTH):
        X = np.ascontiguousarray(X, dtype=np.float64)
        Y = np.ascontiguousarray(Y, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2:
            raise UsageError("X and Y must be 2-D arrays")
        if X.shape[0] != Y.shape[0]:
            raise UsageError("X and Y row counts differ")
        if X.shape[1] != arch.n or Y.shape[1] != arch.m:
            raise UsageError("data dimensions do not match the architecture")
        if batch_size < 1:
            raise UsageError("batch_size must be >= 1")
        self.arch = arch
        self.X = X
        self.Y = Y
        self.batch_size = batch_size
        self.half_width = half_width
        self.dim = arch.n_params

    def f(self, w):
        return mean_loss(NetParams(self.arch, list(layers_of_flat(self.arch, w)),
                                   half_width=self.half_width), self.X, self.Y)

    def box(self):
        return BoxConstraint.cube(self.dim, self.half_width)

    def initial_point(self, rng):
        """Random small weights; the zero vector is a dead point of a
        bias-free ReLU network (every selection vanishes there), so runs
        must not start from it."""
        w = init_params(self.arch, rng).flatten()
        return self.box().project(w)

    def query(self, w, rng):
        layers = layers_of_flat(self.arch, w)
        idx = rng.integers(0, self.X.shape[0], size=self.batch_size)
        if self.batch_size == 1:
            i = int(idx[0])
            out = np.empty(self.dim)
            loss = kernels.relu_loss_grad(layers, self.X[i], self.Y[i], out)
            return SubgradientEstimate(g=out, f_estimate=loss)
        acc = np.zeros(self.dim)
        tmp = np.empty(self.dim)
        loss = 0.0
        for i in idx:
            loss += kernels.relu_loss_grad(layers, self.X[int(i)], self.Y[int(i)], tmp)
            acc += tmp
        b = float(self.batch_size)
        return SubgradientEstimate(g=acc / b, f_estimate=loss / b)
