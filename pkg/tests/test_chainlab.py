import numpy as np
import pytest

from oracle_utils import central_fd
from ssam.chainlab import (
    Path,
    SelectionFunction,
    affine,
    chain_rule_check,
    compose_subgrad,
    convergence_order,
    l1_distance,
    max_coordinate,
    path_integral,
    scalar_abs,
    scalar_half_square,
)
from ssam.core import UsageError
from ssam.relunet import NetArch, NetParams, Sample, sample_loss, sample_subgrad


def test_segment_eval_and_velocity():
    p = Path.segment(np.array([0.0, 1.0]), np.array([2.0, -1.0]), T=2.0)
    np.testing.assert_allclose(p.at(0.0), [0.0, 1.0])
    np.testing.assert_allclose(p.at(1.0), [1.0, 0.0])
    np.testing.assert_allclose(p.at(2.0), [2.0, -1.0])
    np.testing.assert_allclose(p.velocity(0.7), [1.0, -1.0])


def test_piecewise_linear_eval():
    pts = np.array([[0.0], [1.0], [0.0]])
    p = Path.piecewise_linear(pts, T=2.0)
    np.testing.assert_allclose(p.at(0.5), [0.5])
    np.testing.assert_allclose(p.at(1.5), [0.5])
    np.testing.assert_allclose(p.velocity(0.5), [1.0])
    np.testing.assert_allclose(p.velocity(1.5), [-1.0])
    np.testing.assert_array_equal(p.knots, [0.0, 1.0, 2.0])


def test_batch_eval_matches_pointwise():
    rng = np.random.default_rng(0)
    p = Path.piecewise_linear(rng.normal(size=(4, 3)), T=1.5)
    ts = rng.uniform(0, 1.5, 40)
    P = p.at_many(ts)
    V = p.velocity_many(ts)
    for i, t in enumerate(ts):
        np.testing.assert_allclose(P[i], p.at(t), atol=1e-15)
        np.testing.assert_allclose(V[i], p.velocity(t), atol=1e-15)


def test_smooth_path_batch_fallback():
    # scalar-only callables still work through the batch interface
    p = Path.smooth(lambda t: np.array([np.sin(t), np.cos(t)]),
                    lambda t: np.array([np.cos(t), -np.sin(t)]),
                    T=3.0, dim=2)
    ts = np.linspace(0.1, 2.9, 7)
    P = p.at_many(ts)
    np.testing.assert_allclose(P[:, 0], np.sin(ts), atol=1e-15)
    np.testing.assert_allclose(p.velocity_many(ts)[:, 1], -np.sin(ts), atol=1e-15)


def test_path_validation():
    with pytest.raises(UsageError):
        Path.segment(np.array([0.0]), np.array([1.0]), T=0.0)
    with pytest.raises(UsageError):
        Path.piecewise_linear(np.zeros((1, 2)))
    with pytest.raises(UsageError):
        Path.piecewise_linear(np.zeros((3, 2)), T=1.0,
                              times=np.array([0.0, 0.5, 0.7]))
    with pytest.raises(UsageError):
        Path.piecewise_linear(np.zeros((3, 2)), T=1.0,
                              times=np.array([0.0, 0.6, 0.5]))


def test_quadrature_step_preconditions():
    p = Path.segment(np.array([0.0]), np.array([1.0]), T=1.0)
    sel = scalar_abs()
    with pytest.raises(UsageError):
        path_integral(sel, p, 0.0)
    with pytest.raises(UsageError):
        path_integral(sel, p, 0.2)  # h > T/10


def test_abs_along_descending_segment_integrates_to_zero():
    # f = |.|, p(t) = 1 - t on [0, 2]: the two halves cancel and the
    # increment f(p(2)) - f(p(0)) = 1 - 1 = 0
    p = Path.segment(np.array([1.0]), np.array([-1.0]), T=2.0)
    sel = scalar_abs()
    val = path_integral(sel, p, h=1e-3)
    assert val == pytest.approx(0.0, abs=1e-12)
    rep = chain_rule_check(sel, p, h=1e-3)
    assert rep.lhs == 0.0
    assert rep.passed


def test_affine_integral_is_exact_increment():
    rng = np.random.default_rng(1)
    c = rng.normal(size=3)
    sel = affine(c, b=0.7)
    p = Path.piecewise_linear(rng.normal(size=(5, 3)), T=1.0)
    val = path_integral(sel, p, h=1e-2)
    lhs = sel.f(p.at(1.0)) - sel.f(p.at(0.0))
    assert val == pytest.approx(lhs, abs=1e-13)


def test_constant_path_gap_exactly_zero():
    x = np.array([0.3, -0.4])
    p = Path.segment(x, x, T=1.0)
    rep = chain_rule_check(l1_distance(np.zeros(2)), p, h=1e-2)
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.gap == 0.0
    assert rep.passed


def test_max_coordinate_crossing_kink():
    # f(x) = max(x1, x2) along p(t) = (t, 1-t): increment is 0, the
    # integral converges to 0 through the kink at t = 1/2
    sel = max_coordinate(2)
    p = Path.segment(np.array([0.0, 1.0]), np.array([1.0, 0.0]), T=1.0)
    rep = chain_rule_check(sel, p, h=1e-3)
    assert rep.lhs == 0.0
    assert abs(rep.rhs) <= rep.tol
    assert rep.passed
    # the gap shrinks when h does
    rep_fine = chain_rule_check(sel, p, h=1e-5)
    assert abs(rep_fine.rhs) <= abs(rep.rhs) + 1e-12


def test_tolerance_scales_linearly_in_h():
    sel = scalar_abs()
    p = Path.segment(np.array([1.3]), np.array([-0.9]), T=1.0)
    t1 = chain_rule_check(sel, p, h=1e-2).tol
    t2 = chain_rule_check(sel, p, h=1e-3).tol
    assert t1 / t2 == pytest.approx(10.0, rel=1e-6)


def test_order_at_least_one_on_abs_family():
    rng = np.random.default_rng(2)
    pairs = []
    sel = scalar_abs()
    for _ in range(60):
        a, b = rng.normal(scale=1.5, size=2)
        pairs.append((sel, Path.segment(np.array([a]), np.array([b]),
                                        T=float(rng.uniform(0.5, 2.0)))))
    order = convergence_order(pairs, (1e-2, 1e-3, 1e-4, 1e-5))
    assert order >= 0.9


def test_selection_independence_at_ties():
    # tie -> 0 and tie -> +1 are both valid selections of |.|; they
    # disagree only on a measure-zero set, so the integrals agree
    p = Path.segment(np.array([1.0]), np.array([-1.0]), T=2.0)
    i0 = path_integral(scalar_abs(tie=0.0), p, h=1e-3)
    i1 = path_integral(scalar_abs(tie=1.0), p, h=1e-3)
    assert i0 == pytest.approx(i1, abs=1e-12)


def test_relu_loss_family_passes_check():
    from ssam.validate import relu_loss_selection
    rng = np.random.default_rng(3)
    arch = NetArch(2, 3, 1)
    sel = relu_loss_selection(arch, rng.normal(size=3), rng.normal(size=1))
    for _ in range(5):
        p = Path.segment(rng.normal(scale=0.5, size=arch.n_params),
                         rng.normal(scale=0.5, size=arch.n_params),
                         T=1.0)
        rep = chain_rule_check(sel, p, h=1e-4)
        assert rep.passed, rep
        # the increment really is the loss difference of the endpoints
        want = sel.f(p.at(1.0)) - sel.f(p.at(0.0))
        assert rep.lhs == pytest.approx(want, rel=1e-12)


def test_compose_identity_returns_inner():
    ident = SelectionFunction(f=lambda u: float(np.atleast_1d(u)[0]),
                              g=lambda u: np.array([1.0]), dim=1)
    inner = l1_distance(np.array([0.5, -0.5]))
    comp = compose_subgrad(ident, [inner])
    x = np.array([1.0, -1.0])
    assert comp.f(x) == pytest.approx(inner.f(x))
    np.testing.assert_array_equal(comp.g(x), inner.g(x))


def test_compose_smooth_chain_rule():
    rng = np.random.default_rng(4)
    c = rng.normal(size=4)
    comp = compose_subgrad(scalar_half_square(), [affine(c)])
    for _ in range(20):
        x = rng.normal(size=4)
        np.testing.assert_allclose(comp.g(x), float(c @ x) * c,
                                   rtol=1e-13, atol=1e-15)
        assert comp.f(x) == pytest.approx(0.5 * float(c @ x) ** 2, rel=1e-13)


def test_compose_matches_finite_differences_when_smooth():
    rng = np.random.default_rng(5)
    c = rng.normal(size=3)
    comp = compose_subgrad(scalar_half_square(), [affine(c, b=0.2)])
    x = rng.normal(size=3)
    np.testing.assert_allclose(comp.g(x), central_fd(comp.f, x),
                               rtol=1e-6, atol=1e-8)


def test_compose_two_layer_loss_equals_backward_pass():
    # outer 1/2 (u - Y)^2 around the scalar network output, whose own
    # selection is assembled right here from the selector-diagonal form
    rng = np.random.default_rng(6)
    n = 4
    arch = NetArch(2, n, 1)
    x_in = rng.normal(size=n)
    target = rng.normal(size=1)

    def output_val(w):
        W1 = w[:n * n].reshape(n, n)
        W2 = w[n * n:]
        return float(W2 @ np.maximum(W1 @ x_in, 0.0))

    def output_sel(w):
        W1 = w[:n * n].reshape(n, n)
        W2 = w[n * n:]
        pre = W1 @ x_in
        d = (pre > 0.0).astype(float)
        g_w1 = np.outer(d * W2, x_in)
        return np.concatenate([g_w1.ravel(), np.maximum(pre, 0.0)])

    inner = SelectionFunction(f=output_val, g=output_sel, dim=arch.n_params)
    outer = SelectionFunction(
        f=lambda u: 0.5 * (float(np.atleast_1d(u)[0]) - float(target[0])) ** 2,
        g=lambda u: np.atleast_1d(u) - target, dim=1)
    comp = compose_subgrad(outer, [inner])
    sample = Sample(x_in, target)
    for _ in range(30):
        w = rng.normal(scale=0.8, size=arch.n_params)
        params = NetParams.from_flat(arch, w)
        np.testing.assert_allclose(comp.g(w), sample_subgrad(sample, params),
                                   rtol=1e-12, atol=1e-12)
        assert comp.f(w) == pytest.approx(sample_loss(sample, params), rel=1e-12)


def test_compose_dimension_checks():
    with pytest.raises(UsageError):
        compose_subgrad(scalar_half_square(), [])
    two_dim_outer = SelectionFunction(f=lambda u: float(np.sum(u)),
                                      g=lambda u: np.ones(2), dim=2)
    with pytest.raises(UsageError):
        compose_subgrad(two_dim_outer, [scalar_abs()])
    with pytest.raises(UsageError):
        compose_subgrad(two_dim_outer, [l1_distance(np.zeros(2)),
                                        l1_distance(np.zeros(3))])


def test_max_coordinate_selection_is_subgradient():
    rng = np.random.default_rng(7)
    sel = max_coordinate(4)
    for _ in range(200):
        x = rng.normal(size=4)
        y = rng.normal(size=4)
        assert sel.f(y) >= sel.f(x) + sel.g(x) @ (y - x) - 1e-12


def test_scalar_abs_tie_validation():
    with pytest.raises(UsageError):
        scalar_abs(tie=1.5)
    sel = scalar_abs(tie=-1.0)
    np.testing.assert_array_equal(sel.g(np.array([0.0])), [-1.0])
