from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from carnot_hardy.groups import (
    DegenerateBoundaryError,
    FrameFormatError,
    StratifiedDescriptor,
    apply_group_law,
    bracket_rank,
    builtin_frame,
    commutator,
    homogeneous_degree,
    iterated_brackets,
    lie_bracket,
    load_frame,
    make_engel,
    make_grushin,
    make_heisenberg,
    parse_frame,
    starshaped_check,
    z_generator,
)
from carnot_hardy.symbolic import MultiPoly, parse_poly, standard_variables

V3 = standard_variables(3)
V4 = standard_variables(4)


def polys(texts, variables):
    return tuple(parse_poly(t, variables) for t in texts)


def test_heisenberg_first_field():
    frame, _ = make_heisenberg()
    assert frame.vector(0) == polys(["1", "0", "2*x2"], V3)


def test_heisenberg_inverse_and_dilation():
    _, desc = make_heisenberg()
    x = [MultiPoly.var(v, V3) for v in ("x1", "x2", "x3")]
    prod = apply_group_law(desc, x, [-c for c in x])
    assert all(c.is_zero() for c in prod)
    np.testing.assert_allclose(desc.dilate([1.0, 2.0, 3.0], 2.0), [2.0, 4.0, 12.0])


def test_engel_second_field_and_law():
    frame, desc = make_engel()
    assert frame.vector(1) == polys(["0", "1", "x1/2", "x1^2/12"], V4)
    x = [MultiPoly.var(f"x{i}", V4) for i in range(1, 5)]
    # the n-symbols stand in for the right factor
    y = [MultiPoly.var(f"n{i}", V4) for i in range(1, 5)]
    third = apply_group_law(desc, x, y)[2]
    assert third == parse_poly("x3 + n3 + (x1*n2 - x2*n1)/2", V4)


@pytest.mark.parametrize("make", [make_heisenberg, make_engel])
def test_group_law_is_dilation_homogeneous(make):
    """Oracle: sympy substitution of the dilation into the law polynomials."""
    _, desc = make()
    n = desc.dim_n
    lam = sympy.Symbol("lam")
    xs = sympy.symbols(" ".join(f"x{i}" for i in range(1, n + 1)))
    ys = sympy.symbols(" ".join(f"y{i}" for i in range(1, n + 1)))
    names = desc.law_variables(n)
    table = dict(zip(names, xs + ys))
    for i, comp in enumerate(desc.group_law):
        expr = sum(sympy.Rational(c.numerator, c.denominator)
                   * sympy.prod([table[v] ** e for v, e in zip(comp.variables, exps)])
                   for exps, c in comp.items())
        scaled = expr.subs({s: lam ** w * s for s, w in zip(xs, desc.weights)}
                           | {s: lam ** w * s for s, w in zip(ys, desc.weights)},
                           simultaneous=True)
        assert sympy.expand(scaled - lam ** desc.weights[i] * expr) == 0


def test_engel_law_is_associative():
    _, desc = make_engel()
    a = [MultiPoly.var(f"x{i}", V4) for i in range(1, 5)]
    b = [MultiPoly.var(f"n{i}", V4) for i in range(1, 5)]
    c = [MultiPoly.var("d", V4) * k + MultiPoly.var("p", V4) for k in range(1, 5)]
    left = apply_group_law(desc, apply_group_law(desc, a, b), c)
    right = apply_group_law(desc, a, apply_group_law(desc, b, c))
    assert all((l - r).is_zero() for l, r in zip(left, right))


def test_grushin_rows():
    frame = make_grushin()
    assert frame.vector(0) == polys(["1", "0"], frame.variables)
    assert frame.vector(1) == polys(["0", "x1"], frame.variables)


def test_commutators():
    h, _ = make_heisenberg()
    assert commutator(h, 1, 2) == polys(["0", "0", "-4"], V3)
    e, _ = make_engel()
    assert commutator(e, 1, 2) == polys(["0", "0", "1", "x1/2"], V4)
    for frame in (h, e, make_grushin()):
        assert all(c.is_zero() for c in commutator(frame, 1, 1))
    with pytest.raises(IndexError):
        commutator(h, 1, 3)


def test_engel_fourth_field():
    e, _ = make_engel()
    x3 = commutator(e, 1, 2)
    x4 = lie_bracket(e.vector(0), x3, e.coordinates)
    assert x4 == polys(["0", "0", "0", "1"], V4)


@pytest.mark.parametrize("frame_name,point,depth,rank", [
    ("heisenberg1", (0, 0, 0), 2, 3),
    ("heisenberg1", (1.3, -0.2, 5.0), 2, 3),
    ("heisenberg1", (0, 0, 0), 1, 2),
    ("grushin", (0, 0), 1, 1),
    ("grushin", (0, 0), 2, 2),
    ("grushin", (1, 0), 1, 2),
    ("engel", (0, 0, 0, 0), 3, 4),
    ("engel", (0, 0, 0, 0), 2, 3),
])
def test_bracket_rank(frame_name, point, depth, rank):
    frame, _ = builtin_frame(frame_name)
    assert bracket_rank(frame, point, depth) == rank


def test_iterated_brackets_depth_one_is_the_frame():
    frame, _ = make_heisenberg()
    assert iterated_brackets(frame, 1) == [frame.vector(0), frame.vector(1)]


def test_z_generator():
    _, h = make_heisenberg()
    assert z_generator(h) == polys(["x1", "x2", "2*x3"], V3)
    _, e = make_engel()
    assert z_generator(e) == polys(["x1", "x2", "2*x3", "3*x4"], V4)


@settings(max_examples=50, deadline=None)
@given(st.tuples(*[st.integers(0, 3)] * 4))
def test_euler_relation_on_monomials(exps):
    _, desc = make_engel()
    mono = MultiPoly.const(1, V4)
    for i, e in enumerate(exps):
        mono = mono * MultiPoly.var(f"x{i + 1}", V4) ** e
    z = z_generator(desc)
    zmono = sum((zi * mono.partial(f"x{i + 1}") for i, zi in enumerate(z)),
                MultiPoly.zero(V4))
    assert zmono == mono * homogeneous_degree(exps, desc)


def test_descriptor_validates_weights():
    with pytest.raises(ValueError):
        StratifiedDescriptor((2, 1), (1, 2, 2))
    assert StratifiedDescriptor.from_weights((1, 1, 2)).homogeneous_dimension == 4


# -- starshapedness -----------------------------------------------------------


def test_unit_ball_is_starshaped():
    _, desc = make_heisenberg()
    verdict = starshaped_check(desc, parse_poly("x1^2 + x2^2 + x3^2 - 1", V3), samples=200)
    assert verdict.ok
    assert verdict.kind in ("starshaped", "strictly_starshaped")
    assert verdict.min_value >= 0


def test_half_space_is_starshaped_not_strict():
    _, desc = make_heisenberg()
    verdict = starshaped_check(desc, parse_poly("-x3", V3), samples=100)
    assert verdict.kind == "starshaped"


def test_off_center_ball_is_violated_with_witness():
    _, desc = make_heisenberg()
    phi = parse_poly("(x1 - 2)^2 + x2^2 + x3^2 - 1", V3)
    verdict = starshaped_check(desc, phi, samples=200)
    assert verdict.kind == "violated"
    w = np.asarray(verdict.witness, dtype=float)
    assert abs(phi.evaluate(dict(zip(("x1", "x2", "x3"), w)))) < 1e-9
    assert verdict.min_value < 0


def test_starshaped_check_is_seeded():
    _, desc = make_heisenberg()
    phi = parse_poly("(x1 - 2)^2 + x2^2 + x3^2 - 1", V3)
    a = starshaped_check(desc, phi, samples=64, seed=7)
    b = starshaped_check(desc, phi, samples=64, seed=7)
    assert a == b


def test_degenerate_boundary():
    _, desc = make_heisenberg()
    # x3^3 has zero gradient on its whole zero set
    with pytest.raises(DegenerateBoundaryError):
        starshaped_check(desc, parse_poly("x3^3", V3), samples=20)


# -- frame files -----------------------------------------------------------------


def test_parse_frame_file_round_trip(tmp_path):
    text = "# heisenberg written out\nname: h\n1, 0, 2*x2\n0, 1, -2*x1\nweights: 1,1,2\n"
    frame, desc = parse_frame(text)
    ref, _ = make_heisenberg()
    assert frame.coefficients == ref.coefficients
    assert desc.weights == (1, 1, 2)
    path = tmp_path / "h.frame"
    path.write_text(text)
    loaded, _ = load_frame(str(path))
    assert loaded.coefficients == ref.coefficients


@pytest.mark.parametrize("text", ["1, 0\n0, 1, x1\n", "", "1, 0\nweights: 1, x\n", "1, foo\n"])
def test_parse_frame_rejects(text):
    with pytest.raises(FrameFormatError):
        parse_frame(text)
