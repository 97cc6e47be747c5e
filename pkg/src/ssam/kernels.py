"""Hot numeric kernels with a compiled fast path.

The four operations below sit inside the per-iteration loops of the
optimizer and of the ReLU training experiment, where call overhead on
tiny arrays dominates.  A Cython build (``ssam._speedups``) is picked at
import when present; the pure-numpy versions are always available as
``py_*`` and are the fallback.  Set ``SSAM_PURE_PYTHON=1`` to force the
fallback, or call ``use("python")`` / ``use("compiled")`` at runtime.
"""

import os

import numpy as np

try:
    from . import _speedups
except ImportError:
    _speedups = None


def py_project_box(x, lower, upper):
    """Coordinate-wise clamp of ``x`` into ``[lower, upper]``."""
    return np.minimum(np.maximum(x, lower), upper)


def py_ybar_eta(x, z, beta, lower, upper):
    """Minimize <z, y-x> + beta/2 |y-x|^2 over the box.

    Returns ``(ybar, eta, residual)`` where ``ybar`` is the clamp of
    ``x - z/beta``, ``eta`` the attained value (always <= 0) and
    ``residual = |ybar - x|``.
    """
    y = np.minimum(np.maximum(x - z / beta, lower), upper)
    d = y - x
    eta = float(z @ d) + 0.5 * beta * float(d @ d)
    return y, eta, float(np.sqrt(d @ d))


def py_relu_forward(layers, x):
    """Forward pass of the bias-free ReLU net.

    Returns ``(s, preacts, y)``: activations ``s[0] = x`` through
    ``s[L-1]``, the L-1 pre-activations ``W_l s_l``, and the linear
    output ``y = W_L s_L``.
    """
    s = [x]
    preacts = []
    for W in layers[:-1]:
        p = W @ s[-1]
        preacts.append(p)
        s.append(np.maximum(p, 0.0))
    return s, preacts, layers[-1] @ s[-1]


def py_relu_loss_grad(layers, x, target, out):
    """Fused forward/backward pass for the squared-error sample loss.

    Writes the flat layer-major gradient selection into ``out`` and
    returns the sample loss.  Units with pre-activation exactly zero
    propagate nothing (selector entry 0).
    """
    s, preacts, y = py_relu_forward(layers, x)
    r = y - target
    pos = out.size
    v = r
    for ell in range(len(layers) - 1, -1, -1):
        W = layers[ell]
        block = np.outer(v, s[ell])
        pos -= block.size
        out[pos:pos + block.size] = block.ravel()
        if ell > 0:
            v = W.T @ v
            v[preacts[ell - 1] <= 0.0] = 0.0
    return 0.5 * float(r @ r)


_PY_BACKEND = {
    "project_box": py_project_box,
    "ybar_eta": py_ybar_eta,
    "relu_forward": py_relu_forward,
    "relu_loss_grad": py_relu_loss_grad,
}

_BACKENDS = {"python": _PY_BACKEND}
if _speedups is not None:
    _BACKENDS["compiled"] = {
        "project_box": _speedups.project_box,
        "ybar_eta": _speedups.ybar_eta,
        "relu_forward": _speedups.relu_forward,
        "relu_loss_grad": _speedups.relu_loss_grad,
    }

_active = "python"


def use(backend):
    """Activate a kernel backend ("python" or "compiled")."""
    global _active, project_box, ybar_eta, relu_forward, relu_loss_grad
    if backend not in _BACKENDS:
        raise ValueError(f"backend {backend!r} not available "
                         f"(have {sorted(_BACKENDS)})")
    impl = _BACKENDS[backend]
    project_box = impl["project_box"]
    ybar_eta = impl["ybar_eta"]
    relu_forward = impl["relu_forward"]
    relu_loss_grad = impl["relu_loss_grad"]
    _active = backend


def active_backend():
    return _active


def available_backends():
    return sorted(_BACKENDS)


if _speedups is not None and not os.environ.get("SSAM_PURE_PYTHON"):
    use("compiled")
else:
    use("python")
