"""Self-check suites behind the ``validate`` CLI command.

Four suites exercise the package's mathematical contracts end to end:

* ``gap``: sign, optimality inequality, and brute-force value of the
  stationarity gap over random boxed instances.
* ``chain``: the path increment identity for four function families,
  including the empirical convergence order of the quadrature gap.
* ``composition``: assembled chain-rule selections against direct
  backward passes and central finite differences.
* ``dynamics``: discrete Lyapunov descent of the Euler flow and the
  tracking gap between the discrete method and the flow.

Every measured quantity is emitted as a machine-parseable
``key = value`` line; a suite's last line is ``<suite>.pass``.  The
``selection_transform`` hook lets a test harness corrupt selections to
confirm the chain suite actually bites.
"""

import numpy as np

from . import dynamics as dyn
from .chainlab import (
    Path,
    SelectionFunction,
    affine,
    chain_rule_check,
    compose_subgrad,
    l1_distance,
    max_coordinate,
    scalar_abs,
    scalar_half_square,
)
from .core import AlgoParams, BoxConstraint, StepSchedule
from .gap import eta
from .kernels import relu_loss_grad
from .optimizer import IterateState, ssam_step
from .oracles import QuadraticOracle
from .relunet import (
    NetArch,
    NetParams,
    Sample,
    forward,
    init_params,
    layers_of_flat,
    sample_loss,
    sample_subgrad,
)

SUITES = ("gap", "chain", "composition", "dynamics")


class Report:
    """Collects ``key = value`` lines and an overall pass flag."""

    def __init__(self, name, emit=None):
        self.name = name
        self.emit = emit
        self.passed = True

    def record(self, key, value):
        if isinstance(value, float):
            value = repr(value)
        line = f"{self.name}.{key} = {value}"
        if self.emit is not None:
            self.emit(line)

    def check(self, key, ok):
        ok = bool(ok)
        self.passed = self.passed and ok
        self.record(key, "pass" if ok else "FAIL")
        return ok

    def finish(self):
        self.record("pass", "true" if self.passed else "false")
        return self.passed


def _grid_eta(x, z, beta, box, pts=9, levels=12):
    """Multilevel dense-grid minimum of the gap objective (dims 1-3)."""
    dim = x.size
    lo, hi = box.lower.copy(), box.upper.copy()
    best = np.inf
    for _ in range(levels):
        axes = [np.linspace(lo[i], hi[i], pts) for i in range(dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        d = grid - x
        vals = d @ z + 0.5 * beta * np.sum(d * d, axis=1)
        j = int(np.argmin(vals))
        best = min(best, float(vals[j]))
        span = (hi - lo) / (pts - 1)
        lo = np.maximum(box.lower, grid[j] - span)
        hi = np.minimum(box.upper, grid[j] + span)
    return best


def gap_suite(n_instances=10_000, seed=0, emit=None):
    """Sign, optimality inequality, and brute-force agreement of the gap."""
    rep = Report("gap", emit)
    rng = np.random.default_rng(seed)
    max_eta = -np.inf
    max_opt = -np.inf
    max_grid_err = 0.0
    n_grid = 0
    for _ in range(n_instances):
        dim = int(rng.integers(1, 11))
        center = rng.uniform(-2, 2, dim)
        half = rng.uniform(0.1, 3.0, dim)
        box = BoxConstraint(center - half, center + half)
        x = box.sample(rng)
        z = rng.normal(scale=rng.uniform(0.05, 4.0), size=dim)
        beta = rng.uniform(0.1, 5.0)
        res = eta(x, z, beta, box)
        max_eta = max(max_eta, res.eta)
        d = res.ybar - x
        max_opt = max(max_opt, float(z @ d) + beta * float(d @ d))
        if dim <= 3:
            n_grid += 1
            max_grid_err = max(max_grid_err, abs(res.eta - _grid_eta(x, z, beta, box)))
    rep.record("instances", n_instances)
    rep.record("max_eta", max_eta)
    rep.record("max_optimality_inequality", max_opt)
    rep.record("grid_checked", n_grid)
    rep.record("max_grid_error", max_grid_err)
    rep.check("eta_nonpositive", max_eta <= 0.0)
    rep.check("optimality_inequality", max_opt <= 1e-9)
    rep.check("grid_agreement", max_grid_err <= 1e-6)
    return rep.finish()


def relu_loss_selection(arch, features, target):
    """Sample-loss selection over flat weights, with a batched evaluator."""
    x = np.asarray(features, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    sample = Sample(x, t)
    shapes = arch.shapes
    sizes = [r * c for r, c in shapes]
    offs = np.concatenate([[0], np.cumsum(sizes)])

    def f(w):
        return sample_loss(sample, NetParams.from_flat(arch, w))

    def g(w):
        out = np.empty(arch.n_params)
        relu_loss_grad(layers_of_flat(arch, np.ascontiguousarray(w)), x, t, out)
        return out

    def g_many(P):
        P = np.ascontiguousarray(P)
        G = np.empty_like(P)
        n_layers = len(shapes)
        for i in range(P.shape[0]):
            w = P[i]
            layers = [w[offs[j]:offs[j + 1]].reshape(shapes[j])
                      for j in range(n_layers)]
            relu_loss_grad(layers, x, t, G[i])
        return G

    return SelectionFunction(f=f, g=g, dim=arch.n_params, g_many=g_many,
                             name="relu-sample-loss")


def _random_path(rng, dim, kind):
    T = float(rng.uniform(0.5, 2.0))
    if kind == "segment":
        return Path.segment(rng.normal(scale=1.5, size=dim),
                            rng.normal(scale=1.5, size=dim), T=T)
    pts = rng.normal(scale=1.5, size=(int(rng.integers(3, 6)), dim))
    return Path.piecewise_linear(pts, T=T)


def _chain_families(rng, transform=None):
    arch = NetArch(2, 3, 1)
    relu_sel = relu_loss_selection(arch, rng.normal(size=3), rng.normal(size=1))
    fams = [
        ("abs", scalar_abs(), 1, 1.0),
        ("max_coordinate", max_coordinate(3), 3, 1.0),
        ("l1_distance", l1_distance(rng.normal(size=4)), 4, 1.0),
        ("relu_loss", relu_sel, arch.n_params, 0.3),
    ]
    if transform is not None:
        fams = [(name, transform(sel), dim, scale)
                for name, sel, dim, scale in fams]
    return fams


def chain_suite(n_paths=100, h=1e-4, seed=0, emit=None, selection_transform=None):
    """Increment identity for four families plus the h-convergence order."""
    rep = Report("chain", emit)
    rng = np.random.default_rng(seed)
    # the order fit averages the gap over every path before fitting the
    # slope; the relu family skips h = 1e-5 (no batched closed form that
    # cheap) and compensates with intermediate h values
    order_hs = {"relu_loss": (1e-2, 3.16e-3, 1e-3, 3.16e-4, 1e-4)}
    default_hs = (1e-2, 1e-3, 1e-4, 1e-5)
    for name, sel, dim, scale in _chain_families(rng, selection_transform):
        worst_gap = 0.0
        worst_ratio = 0.0
        failures = 0
        sel_paths = []
        gaps_at_h = []
        for i in range(n_paths):
            kind = "segment" if i % 2 == 0 else "piecewise-linear"
            path = _random_path(rng, dim, kind)
            if scale != 1.0:
                path = Path.piecewise_linear(path.points * scale,
                                             T=path.T, times=path.times)
            report = chain_rule_check(sel, path, h)
            worst_gap = max(worst_gap, report.gap)
            worst_ratio = max(worst_ratio, report.gap / report.tol)
            failures += 0 if report.passed else 1
            sel_paths.append((sel, path))
            gaps_at_h.append(report.gap)
        # slope of the mean gap in h, reusing the gaps measured at the
        # target h rather than recomputing that expensive point
        hs = np.asarray(order_hs.get(name, default_hs))
        mean_gaps = []
        for hv in hs:
            if hv == h:
                mean_gaps.append(max(float(np.mean(gaps_at_h)), 1e-300))
            else:
                mean_gaps.append(max(float(np.mean(
                    [chain_rule_check(s, p, float(hv)).gap
                     for s, p in sel_paths])), 1e-300))
        order = float(np.polyfit(np.log(hs), np.log(mean_gaps), 1)[0])
        rep.record(f"{name}.max_gap", worst_gap)
        rep.record(f"{name}.max_gap_over_tol", worst_ratio)
        rep.record(f"{name}.order", order)
        rep.check(f"{name}.within_tolerance", failures == 0)
        rep.check(f"{name}.order_at_least_0.9", order >= 0.9)
    return rep.finish()


def composition_suite(n_points=200, seed=0, emit=None):
    """Composition calculus against closed forms and finite differences."""
    rep = Report("composition", emit)
    rng = np.random.default_rng(seed)

    # smooth sanity case: 1/2 (c.x)^2 has gradient (c.x) c
    c = rng.normal(size=5)
    comp = compose_subgrad(scalar_half_square(), [affine(c)])
    err_smooth = 0.0
    for _ in range(n_points):
        x = rng.normal(size=5)
        err_smooth = max(err_smooth, float(np.max(np.abs(
            comp.g(x) - float(c @ x) * c))))
    rep.record("half_square_affine.max_error", err_smooth)
    rep.check("half_square_affine", err_smooth <= 1e-12)

    # two-layer sample loss assembled from per-output selections:
    # outer 1/2 sum (u_i - t_i)^2 over the m network outputs
    arch = NetArch(2, 3, 2)
    x_in = rng.normal(size=3)
    t = rng.normal(size=2)
    sample = Sample(x_in, t)

    def output_selection(i):
        def f(w):
            return float(forward(sample, NetParams.from_flat(arch, w)).y[i])

        def g(w):
            p = NetParams.from_flat(arch, w)
            y = forward(sample, p).y
            fake_t = y.copy()
            fake_t[i] -= 1.0  # residual e_i extracts one Jacobian row
            out = np.empty(arch.n_params)
            relu_loss_grad(p.layers, x_in, fake_t, out)
            return out

        return SelectionFunction(f=f, g=g, dim=arch.n_params)

    outer = SelectionFunction(
        f=lambda u: 0.5 * float(np.sum((u - t) ** 2)),
        g=lambda u: u - t, dim=2)
    assembled = compose_subgrad(outer, [output_selection(i) for i in range(2)])
    p0 = init_params(arch, rng)
    err_assembled = 0.0
    for _ in range(50):
        w = p0.flatten() + rng.normal(scale=0.3, size=arch.n_params)
        direct = sample_subgrad(sample, NetParams.from_flat(arch, w))
        err_assembled = max(err_assembled, float(np.max(np.abs(
            assembled.g(w) - direct))))
    rep.record("relu_assembly.max_error", err_assembled)
    rep.check("relu_assembly", err_assembled <= 1e-12)

    # finite differences at points where every unit is clearly on or off
    h_fd = 1e-6
    checked = 0
    err_fd = 0.0
    while checked < n_points:
        w = rng.normal(scale=0.8, size=arch.n_params)
        p = NetParams.from_flat(arch, w)
        if float(np.min(np.abs(forward(sample, p).preacts[0]))) <= 1e-3:
            continue
        g_val = sample_subgrad(sample, p)
        fd = np.empty(arch.n_params)
        for j in range(arch.n_params):
            wp, wm = w.copy(), w.copy()
            wp[j] += h_fd
            wm[j] -= h_fd
            fd[j] = (sample_loss(sample, NetParams.from_flat(arch, wp))
                     - sample_loss(sample, NetParams.from_flat(arch, wm))) / (2 * h_fd)
        denom = max(1.0, float(np.max(np.abs(fd))))
        err_fd = max(err_fd, float(np.max(np.abs(g_val - fd))) / denom)
        checked += 1
    rep.record("finite_difference.points", checked)
    rep.record("finite_difference.max_rel_error", err_fd)
    rep.check("finite_difference", err_fd <= 1e-5)
    return rep.finish()


def _quadratic_problem(seed=0, dim=4):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(dim + 2, dim)) / np.sqrt(dim) + np.eye(dim + 2, dim)
    b = rng.normal(size=dim + 2) + 1.0
    oracle = QuadraticOracle(A, b)
    box = BoxConstraint.cube(dim, 0.5)
    sel = SelectionFunction(f=oracle.f, g=oracle.grad, dim=dim)
    return oracle, box, sel


def dynamics_suite(seed=0, emit=None, T=50.0, h=1e-3):
    """Lyapunov descent, step-halving, and method-vs-flow tracking."""
    rep = Report("dynamics", emit)
    a, beta = 0.5, 1.0
    oracle, box, sel = _quadratic_problem(seed)
    x0 = box.project(np.full(box.dim, 0.4))
    z0 = sel.g(x0)

    readings = dyn.integrate(x0, z0, sel, a, beta, box, T, h)
    final_resid = readings[-1].speed
    viol = dyn.descent_violation(readings, a, beta, h)
    viol_half = dyn.descent_violation(
        dyn.integrate(x0, z0, sel, a, beta, box, T, h / 2), a, beta, h / 2)
    rep.record("quadratic.final_residual", final_resid)
    rep.record("quadratic.descent_violation", viol)
    rep.record("quadratic.descent_violation_half_h", viol_half)
    rep.check("quadratic.final_residual_small", final_resid <= 1e-3)
    rep.check("quadratic.descent_bound", viol <= 10 * h)
    floor = 1e-14
    rep.check("quadratic.violation_halves",
              viol_half <= max(0.6 * viol, floor))

    rng = np.random.default_rng(seed + 1)
    sel_l1 = l1_distance(rng.uniform(-0.3, 0.3, 3))
    box_l1 = BoxConstraint.cube(3, 1.0)
    x1 = box_l1.project(np.full(3, 0.9))
    z1 = sel_l1.g(x1)
    r_l1 = dyn.integrate(x1, z1, sel_l1, a, beta, box_l1, 20.0, h)
    v_l1 = dyn.descent_violation(r_l1, a, beta, h)
    v_l1_half = dyn.descent_violation(
        dyn.integrate(x1, z1, sel_l1, a, beta, box_l1, 20.0, h / 2), a, beta, h / 2)
    rep.record("l1.descent_violation", v_l1)
    rep.record("l1.descent_violation_half_h", v_l1_half)
    rep.check("l1.descent_bound", v_l1 <= 10 * h)
    rep.check("l1.violation_halves", v_l1_half <= max(0.6 * v_l1, floor))

    # discrete method with tiny constant stepsize against a fine-step
    # Euler reference of the flow, sampled at the method's times
    T_track, tau = 5.0, 0.01
    h_ref = tau / 20
    fs = dyn.FlowState(x=x0.copy(), z=z0.copy(), t=0.0)
    ref_xs = [x0.copy()]
    for _ in range(int(round(T_track / h_ref))):
        fs = dyn.flow_step(fs, sel, a, beta, box, h_ref)
        ref_xs.append(fs.x)
    gaps = {}
    for step, stride in ((tau, 20), (tau / 2, 10)):
        state = IterateState(x=x0.copy(), z=z0.copy(), k=0, t=0.0, estimate=None)
        params = AlgoParams(a=a, beta=beta,
                            schedule=StepSchedule(kind="constant-then-decay",
                                                  tau0=step))
        rng_m = np.random.default_rng(0)
        sup = 0.0
        for j in range(int(round(T_track / step))):
            state, _ = ssam_step(state, oracle, params, box, rng_m, tau_k=step)
            sup = max(sup, float(np.linalg.norm(state.x - ref_xs[(j + 1) * stride])))
        gaps[step] = sup
    rep.record("tracking.gap_tau", gaps[tau])
    rep.record("tracking.gap_half_tau", gaps[tau / 2])
    rep.check("tracking.gap_halves",
              gaps[tau / 2] <= max(0.6 * gaps[tau], floor))
    return rep.finish()


def run_suites(names=None, h=1e-4, seed=0, emit=None, selection_transform=None):
    """Run the requested suites (all by default); True iff all passed."""
    runners = {
        "gap": lambda: gap_suite(seed=seed, emit=emit),
        "chain": lambda: chain_suite(h=h, seed=seed, emit=emit,
                                     selection_transform=selection_transform),
        "composition": lambda: composition_suite(seed=seed, emit=emit),
        "dynamics": lambda: dynamics_suite(seed=seed, emit=emit),
    }
    if names is None:
        names = SUITES
    ok = True
    for name in names:
        if name not in runners:
            from .core import UsageError
            raise UsageError(f"unknown suite {name!r} (choose from {SUITES})")
        ok = runners[name]() and ok
    return ok
