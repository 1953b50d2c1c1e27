import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from carnot_hardy.hardy import NormalSpec, HardySpec, builtin_spec
from carnot_hardy.groups import builtin_frame
from carnot_hardy.numerics import (
    BoxRegion,
    NumericError,
    QuadratureRule,
    admissible,
    integrate,
    integrate_points,
    make_bump,
    make_log_profile,
)
from carnot_hardy.numerics.rayleigh import (
    SurvivingLpError,
    ellipsoid_family,
    fixed_family,
    log_profile_family,
    minimize_quotient,
    rayleigh_quotient,
)
from carnot_hardy.hardy import InadmissibleError
from carnot_hardy.symbolic import Const, MultiPoly, Poly, standard_variables

# -- quadrature ------------------------------------------------------------------


def test_constant_over_unit_cube():
    value, err = integrate(Const(1.0), BoxRegion((0, 0, 0), (1, 1, 1)), QuadratureRule(4, 1))
    assert value == pytest.approx(1.0, abs=1e-15)
    assert err == pytest.approx(0.0, abs=1e-15)


def test_square_over_interval():
    x1 = Poly(MultiPoly.var("x1", standard_variables(1)))
    value, _ = integrate(x1 * x1 if False else Poly(x1.poly ** 2), BoxRegion((-1,), (1,)))
    assert value == pytest.approx(2 / 3, abs=1e-14)


@pytest.mark.parametrize("order,subs", [(4, 1), (6, 3), (24, 4)])
def test_polynomial_exactness(order, subs):
    # degree 2*order - 1 is integrated exactly on every cell
    deg = 2 * order - 1
    value, _ = integrate_points(lambda X: X[:, 0] ** deg + X[:, 1] ** 2,
                                BoxRegion((0, 0), (1, 2)), QuadratureRule(order, subs))
    assert value == pytest.approx(2 / (deg + 1) + 8 / 3, rel=1e-13)


def test_per_axis_subdivisions_agree():
    f = lambda X: np.cos(X[:, 0]) * np.exp(X[:, 1])
    box = BoxRegion((0, 0), (1, 1))
    a, _ = integrate_points(f, box, QuadratureRule(8, 1), subdivisions=(3, 2))
    assert a == pytest.approx(math.sin(1) * (math.e - 1), rel=1e-13)


def test_vector_valued_integrand():
    vals, errs = integrate_points(lambda X: np.stack([np.ones(len(X)), X[:, 0]], axis=1),
                                  BoxRegion((0,), (2,)))
    np.testing.assert_allclose(vals, [2.0, 2.0], rtol=1e-14)
    assert errs.shape == (2,)


def test_non_finite_sample_reports_point():
    def poisoned(X):
        out = np.ones(len(X))
        out[X[:, 0] > 0.5] = np.nan
        return out

    with pytest.raises(NumericError) as info:
        integrate_points(poisoned, BoxRegion((-1,), (1,)), QuadratureRule(4, 2))
    assert info.value.point is not None and info.value.point[0] > 0.5


def test_non_finite_from_log():
    with np.errstate(invalid="ignore"), pytest.raises(NumericError):
        integrate_points(lambda X: np.log(X[:, 0] - 0.5), BoxRegion((0,), (1,)), QuadratureRule(4, 1))


@pytest.mark.parametrize("order,subs", [(3, 1), (5, 1), (2, 1), (4, 0)])
def test_rule_validation(order, subs):
    with pytest.raises(ValueError):
        QuadratureRule(order, subs)


def test_box_validation():
    with pytest.raises(ValueError):
        BoxRegion((0, 1), (1, 1))


def test_thread_count_does_not_change_result(monkeypatch):
    f = lambda X: np.exp(-np.sum(X ** 2, axis=1))
    box = BoxRegion((-1, -1, -1), (1, 1, 1))
    monkeypatch.setenv("HARDY_THREADS", "1")
    a = integrate_points(f, box, QuadratureRule(24, 6))
    monkeypatch.setenv("HARDY_THREADS", "3")
    b = integrate_points(f, box, QuadratureRule(24, 6))
    assert a == b


# -- bumps -----------------------------------------------------------------------


def test_bump_values():
    f = make_bump("smooth_bump", (0.5, -1.0), (0.3, 0.7))
    assert f.value([[0.5, -1.0]])[0] == 1.0
    val, grad = f.value_and_gradient([[0.8, -1.0], [0.5, -0.3], [1.5, 2.0]])
    np.testing.assert_array_equal(val, 0.0)
    np.testing.assert_array_equal(grad, 0.0)
    g = make_bump("poly_bump", (0.0, 0.0), 1.0, m=2)
    assert g.value([[math.sqrt(0.5), 0.0]])[0] == pytest.approx(0.25)


def test_bump_validation():
    with pytest.raises(ValueError):
        make_bump("smooth_bump", (0, 0), (1.0, 0.0))
    with pytest.raises(ValueError):
        make_bump("poly_bump", (0, 0), 1.0, m=1)
    with pytest.raises(ValueError):
        make_bump("gaussian", (0, 0), 1.0)


def _central_difference(f, X, h=1e-5):
    G = np.zeros_like(X)
    for j in range(X.shape[1]):
        e = np.zeros(X.shape[1])
        e[j] = h
        G[:, j] = (f.value(X + e) - f.value(X - e)) / (2 * h)
    return G


@pytest.mark.parametrize("f", [
    make_bump("smooth_bump", (0.2, -0.1, 1.0), (0.3, 0.5, 0.25)),
    make_bump("poly_bump", (0.0, 1.0), (0.6, 0.4), m=3),
    make_bump("smooth_bump", (0.1, 0.2, 0.3, 1.0), 0.4),
    make_log_profile(0, 1.0, 0.0, 0.0, 1.5, [0.0], [2.0], alpha=0.5),
], ids=["smooth3", "poly2", "smooth4", "log2"])
def test_gradient_matches_central_differences(f):
    rng = np.random.default_rng(0)
    if f.kind == "log_profile":
        X = np.column_stack([np.exp(rng.uniform(-1.2, 1.2, 100)), rng.uniform(-1.5, 1.5, 100)])
    else:
        z = rng.normal(size=(100, f.dim))
        z *= (rng.uniform(0, 0.9, 100) ** (1 / f.dim) / np.linalg.norm(z, axis=1))[:, None]
        X = np.asarray(f.center) + z * np.asarray(f.radii)
    analytic = f.gradient(X)
    fd = _central_difference(f, X)
    # normwise relative error over the sample
    assert np.max(np.abs(analytic - fd)) / np.max(np.abs(analytic)) < 1e-6


def test_tree_form_matches_direct_values():
    from carnot_hardy.symbolic import differentiate, evaluate

    f = make_bump("smooth_bump", (0.2, -0.1), (0.3, 0.5))
    tree = f.to_field()
    X = np.array([[0.25, -0.05], [0.1, 0.2], [0.9, 0.9]])
    env = {"x1": X[:, 0], "x2": X[:, 1]}
    np.testing.assert_allclose(evaluate(tree, env), f.value(X), rtol=1e-13, atol=1e-300)
    np.testing.assert_allclose(evaluate(differentiate(tree, "x2"), env), f.gradient(X)[:, 1],
                               rtol=1e-12, atol=1e-300)


def test_bump_integral_matches_monte_carlo():
    f = make_bump("smooth_bump", (0.3, -0.2), (0.5, 0.8))
    box = f.support_box()
    value, _ = integrate_points(f.value, box)
    rng = np.random.default_rng(2024)
    U = rng.uniform(box.lower, box.upper, size=(10 ** 6, 2))
    samples = f.value(U) * box.volume
    mean = samples.mean()
    stderr = samples.std(ddof=1) / math.sqrt(len(samples))
    assert abs(value - mean) < 3 * stderr


def test_support_certificate():
    f = make_bump("smooth_bump", (0.0, 0.0, 1.0), (0.25, 0.3, 0.2))
    # boxes outside the ellipsoid: every node evaluates to exactly 0
    for box in [BoxRegion((0.26, -1, 0), (1, 1, 2)), BoxRegion((-1, -1, 1.21), (1, 1, 2))]:
        value, err = integrate_points(lambda X: np.abs(f.value(X)), box)
        assert value == 0.0 and err == 0.0


def test_log_profile_support_box_uses_log_coordinates():
    f = make_log_profile(0, 2.0, -1.0, 0.5, 1.0, [0.0], [3.0])
    box = f.support_box()
    assert box.lower == (-0.5, -3.0) and box.upper == (1.5, 3.0)
    X, jac = f.transform(np.array([[0.0, 0.0]]))
    # u = e^0 = 1 means 2*x - 1 = 1
    assert X[0, 0] == pytest.approx(1.0)
    assert jac[0] == pytest.approx(0.5)


# -- admissibility -------------------------------------------------------------


def test_admissible_examples():
    h = builtin_spec("heisenberg1.halfspace", 2.0)
    assert admissible(make_bump("smooth_bump", (0, 0, 1), 0.25), h)
    assert not admissible(make_bump("smooth_bump", (0, 0, 0.1), 0.25), h)
    frame, _ = builtin_frame("grushin")
    g = HardySpec(frame, NormalSpec.half_space((1, 0), 2), 2.0)
    assert admissible(make_bump("smooth_bump", (3, 0), (0.5, 0.5)), g)
    assert not admissible(make_bump("smooth_bump", (3, 0), (1.0, 0.5)), g)


@settings(max_examples=200, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 2), st.floats(0.05, 2))
def test_admissible_agrees_with_dense_sampling(c1, c2, r1, r2):
    """Oracle: the minimum of w over many sampled support points."""
    frame, _ = builtin_frame("grushin")
    spec = HardySpec(frame, NormalSpec.half_space((1, 1), 0), 2.0)
    f = make_bump("smooth_bump", (c1, c2), (r1, r2))
    theta = np.linspace(0, 2 * np.pi, 4001)
    w_min = np.min(c1 + r1 * np.cos(theta) + c2 + r2 * np.sin(theta))
    if abs(w_min - 1e-6) > 1e-5:
        assert admissible(f, spec) == (w_min > 1e-6)


# -- Rayleigh quotients --------------------------------------------------------

B_RATIO = None


def _profile_ratio():
    """int B'^2 / int B^2 for the smooth profile on [-1, 1]."""
    B = lambda t: math.exp(1 - 1 / (1 - t * t)) if abs(t) < 1 else 0.0
    dB = lambda t: B(t) * (-2 * t / (1 - t * t) ** 2) if abs(t) < 1 else 0.0
    num = quad(lambda t: dB(t) ** 2, -1, 1, limit=200)[0]
    den = quad(lambda t: B(t) ** 2, -1, 1, limit=200)[0]
    return num / den


def test_grushin_log_profile_matches_one_dimensional_oracle():
    spec = builtin_spec("grushin.halfspace", 2.0)
    c = _profile_ratio()
    for L in (2.0, 4.0, 8.0):
        f = make_log_profile(0, 1.0, 0.0, 0.0, L, [0.0], [1e12], alpha=0.5)
        q = rayleigh_quotient(spec, f)
        assert q == pytest.approx(0.25 + c / L ** 2, rel=1e-8)


def test_wider_profiles_approach_the_constant():
    spec = builtin_spec("grushin.halfspace", 2.0)
    qs = [rayleigh_quotient(spec, make_log_profile(0, 1.0, 0.0, 0.0, L, [0.0], [1e12]))
          for L in (1.0, 2.0, 4.0, 8.0, 12.0)]
    assert all(a > b for a, b in zip(qs, qs[1:]))
    assert qs[-1] > 0.25
    assert qs[-1] < 0.30


@pytest.mark.parametrize("c", [1e-3, 1.0, 1e3, 5.0])
def test_quotient_scale_invariance(c):
    spec = builtin_spec("heisenberg1.halfspace", 2.0)
    f = make_bump("smooth_bump", (0.1, -0.2, 1.0), (0.3, 0.2, 0.25))
    assert rayleigh_quotient(spec, f.scaled(c)) == pytest.approx(rayleigh_quotient(spec, f),
                                                                  rel=1e-12)


@settings(max_examples=8, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.4, 1.5),
       st.floats(0.1, 0.4), st.floats(0.1, 0.4), st.floats(0.1, 0.35))
def test_heisenberg_quotient_respects_constant(c1, c2, c3, r1, r2, r3):
    spec = builtin_spec("heisenberg1.halfspace", 2.0)
    f = make_bump("smooth_bump", (c1, c2, c3), (r1, r2, r3))
    if admissible(f, spec):
        assert rayleigh_quotient(spec, f, QuadratureRule(16, 2)) >= 0.25 - 1e-6


def test_rayleigh_errors():
    engel = builtin_spec("engel.halfspace", 2.0)
    with pytest.raises(SurvivingLpError):
        rayleigh_quotient(engel, make_bump("smooth_bump", (1, 0, 0, 0), 0.2))
    h = builtin_spec("heisenberg1.halfspace", 2.0)
    with pytest.raises(InadmissibleError):
        rayleigh_quotient(h, make_bump("smooth_bump", (0, 0, 0.1), 0.25))


def test_fixed_family_returns_its_quotient():
    spec = builtin_spec("heisenberg1.halfspace", 2.0)
    f = make_bump("smooth_bump", (0, 0, 1), 0.25)
    result = minimize_quotient(spec, fixed_family(f))
    assert result.converged
    assert result.quotient == rayleigh_quotient(spec, f)
    assert result.best_params == ()


def test_heisenberg_minimization_stays_above_constant():
    spec = builtin_spec("heisenberg1.halfspace", 2.0)
    family = ellipsoid_family("smooth_bump", (0, 0, 1), (0.25, 0.25, 0.25))
    result = minimize_quotient(spec, family, max_iter=40, rule=QuadratureRule(16, 2))
    assert result.min_seen >= 0.25 - 1e-6
    assert result.quotient <= rayleigh_quotient(spec, make_bump("smooth_bump", (0, 0, 1), 0.25),
                                                QuadratureRule(16, 2))
    assert [q for _, q in result.trace] == sorted((q for _, q in result.trace), reverse=True)


def test_grushin_log_family_gets_close():
    spec = builtin_spec("grushin.halfspace", 2.0)
    result = minimize_quotient(spec, log_profile_family(spec))
    assert 0.25 - 1e-6 <= result.min_seen
    assert result.quotient <= 0.30
