"""Independent brute-force oracles shared by the test modules.

Everything here is deliberately naive: dense/multilevel grid searches
and straight-line reimplementations that do not touch the package's own
closed forms, so they can stand as independent ground truth.
"""

import numpy as np


def gap_objective(y, x, z, beta):
    """<z, y-x> + beta/2 |y-x|^2 evaluated from the definition."""
    d = y - x
    return d @ z + 0.5 * beta * np.sum(d * d, axis=-1)


def grid_min_gap(x, z, beta, box, pts=9, levels=12):
    """Multilevel dense-grid minimization of the gap objective over a box.

    Returns (argmin, min value).  The objective is strictly convex, so
    shrinking the search window to one grid cell around the discrete
    argmin per level is safe.  Intended for dims 1-3.
    """
    dim = x.size
    lo = box.lower.astype(float).copy()
    hi = box.upper.astype(float).copy()
    best_y, best_v = None, np.inf
    for _ in range(levels):
        axes = [np.linspace(lo[i], hi[i], pts) for i in range(dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        vals = gap_objective(grid, x, z, beta)
        j = int(np.argmin(vals))
        if vals[j] < best_v:
            best_v, best_y = float(vals[j]), grid[j].copy()
        span = (hi - lo) / (pts - 1)
        lo = np.maximum(box.lower, grid[j] - span)
        hi = np.minimum(box.upper, grid[j] + span)
    return best_y, best_v


def grid_min_quadratic(A, b, box, pts=9, levels=14):
    """Multilevel grid minimization of 1/2 |Ay - b|^2 over a box (dims 1-3)."""
    dim = A.shape[1]
    lo = box.lower.astype(float).copy()
    hi = box.upper.astype(float).copy()
    best_y, best_v = None, np.inf
    for _ in range(levels):
        axes = [np.linspace(lo[i], hi[i], pts) for i in range(dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        r = grid @ A.T - b
        vals = 0.5 * np.sum(r * r, axis=1)
        j = int(np.argmin(vals))
        if vals[j] < best_v:
            best_v, best_y = float(vals[j]), grid[j].copy()
        span = (hi - lo) / (pts - 1)
        lo = np.maximum(box.lower, grid[j] - span)
        hi = np.minimum(box.upper, grid[j] + span)
    return best_y, best_v


def grid_min_1d(f, lo, hi, pts=10001):
    """Single-level fine-grid argmin of a scalar function on [lo, hi]."""
    ys = np.linspace(lo, hi, pts)
    vals = np.array([f(y) for y in ys])
    return float(ys[np.argmin(vals)])


def relu_forward_loops(layers, x):
    """Straight-line ReLU forward pass with explicit Python loops."""
    s = list(x)
    for W in layers[:-1]:
        nxt = []
        for i in range(W.shape[0]):
            acc = 0.0
            for j in range(W.shape[1]):
                acc += W[i][j] * s[j]
            nxt.append(acc if acc > 0.0 else 0.0)
        s = nxt
    W = layers[-1]
    out = []
    for i in range(W.shape[0]):
        acc = 0.0
        for j in range(W.shape[1]):
            acc += W[i][j] * s[j]
        out.append(acc)
    return np.array(out)


def central_fd(f, w, h=1e-6):
    """Central finite-difference gradient of a scalar function of a vector."""
    g = np.zeros_like(w)
    for i in range(w.size):
        wp = w.copy()
        wm = w.copy()
        wp[i] += h
        wm[i] -= h
        g[i] = (f(wp) - f(wm)) / (2.0 * h)
    return g


def closed_form_two_layer(W1, W2, x, target):
    """The depth-2, scalar-output subgradient assembled from its printed form.

    g = (y - Y) [ D W2^T x^T  |  (W1 x)_+^T ] with D_ii = 1 iff (W1 x)_i > 0,
    mapped into the flat layer-major layout.
    """
    pre = W1 @ x
    s2 = np.maximum(pre, 0.0)
    y = float(np.dot(np.ravel(W2), s2))
    r = y - float(target)
    d = (pre > 0.0).astype(float)
    g_w1 = r * np.outer(d * W2.ravel(), x)
    g_w2 = r * s2
    return np.concatenate([g_w1.ravel(), g_w2])
