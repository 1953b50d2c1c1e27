"""Frames of vector fields, stratified group data and starshapedness sampling.

A ``Frame`` stores ``X_k = sum_j c[k][j] d/dx_j`` with polynomial
coefficients over ``standard_variables(n)``. Built-ins: the Heisenberg group
H1, the Engel group and the Grushin plane.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .symbolic import (
    MultiPoly,
    PolyParseError,
    ScalarField,
    add,
    differentiate,
    mul,
    parse_poly,
    Poly,
    standard_variables,
)

__all__ = [
    "Frame",
    "StratifiedDescriptor",
    "StarshapedVerdict",
    "SamplingError",
    "DegenerateBoundaryError",
    "FrameFormatError",
    "make_heisenberg",
    "make_engel",
    "make_grushin",
    "builtin_frame",
    "load_frame",
    "parse_frame",
    "lie_bracket",
    "commutator",
    "iterated_brackets",
    "bracket_rank",
    "z_generator",
    "homogeneous_degree",
    "apply_group_law",
    "starshaped_check",
]

BUILTIN_NAMES = ("heisenberg1", "engel", "grushin")


class SamplingError(RuntimeError):
    """No boundary point could be located along the sampled rays."""


class DegenerateBoundaryError(ValueError):
    """The level-set gradient vanishes at a sampled boundary point."""


class FrameFormatError(ValueError):
    """A frame definition file is malformed."""


@dataclass(frozen=True)
class Frame:
    """``N`` vector fields on ``R^n`` with polynomial coefficients.

    ``coefficients[k][j]`` is the coefficient of ``d/dx_{j+1}`` in ``X_{k+1}``.
    """

    name: str
    coefficients: tuple
    variables: tuple = field(default=())

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.coefficients)
        if not rows:
            raise ValueError("a frame needs at least one vector field")
        n = len(rows[0])
        if any(len(r) != n for r in rows):
            raise ValueError("all vector fields must have the same dimension")
        variables = self.variables or standard_variables(n)
        for r in rows:
            for c in r:
                if not isinstance(c, MultiPoly) or c.variables != variables:
                    raise ValueError("frame coefficients must be MultiPoly over the frame variables")
        object.__setattr__(self, "coefficients", rows)
        object.__setattr__(self, "variables", tuple(variables))

    @property
    def dim_n(self) -> int:
        return len(self.coefficients[0])

    @property
    def dim_N(self) -> int:
        return len(self.coefficients)

    @property
    def coordinates(self) -> tuple[str, ...]:
        return tuple(f"x{i}" for i in range(1, self.dim_n + 1))

    def vector(self, k: int) -> tuple:
        """Coefficient tuple of the (0-based) k-th field."""
        return self.coefficients[k]

    def apply(self, k: int, w: MultiPoly) -> MultiPoly:
        """``X_k w`` for a polynomial ``w`` (0-based ``k``)."""
        out = MultiPoly.zero(self.variables)
        for c, xj in zip(self.coefficients[k], self.coordinates):
            if not c.is_zero():
                out = out + c * w.partial(xj)
        return out

    def apply_field(self, k: int, f: ScalarField) -> ScalarField:
        """``X_k f`` for an expression tree."""
        parts = [mul(Poly(c), differentiate(f, xj))
                 for c, xj in zip(self.coefficients[k], self.coordinates)
                 if not c.is_zero()]
        return add(*parts)

    def coefficient_values(self, X: np.ndarray) -> np.ndarray:
        """Coefficient matrix at points ``X`` of shape (m, n) -> (m, N, n)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        env = {xj: X[:, j] for j, xj in enumerate(self.coordinates)}
        out = np.zeros((X.shape[0], self.dim_N, self.dim_n))
        for k, row in enumerate(self.coefficients):
            for j, c in enumerate(row):
                if not c.is_zero():
                    out[:, k, j] = c.evaluate(env)
        return out

    def with_coefficient(self, k: int, j: int, poly: MultiPoly) -> "Frame":
        """Copy with one coefficient replaced (used to tamper in tests)."""
        rows = [list(r) for r in self.coefficients]
        rows[k][j] = poly
        return Frame(self.name, tuple(tuple(r) for r in rows), self.variables)


@dataclass(frozen=True)
class StratifiedDescriptor:
    """Strata sizes, dilation weights and an optional group law.

    The group law, when given, is a tuple of ``n`` polynomials over
    ``x1..xn, y1..yn`` with ``y`` standing for the right factor.
    """

    strata_sizes: tuple
    weights: tuple
    group_law: tuple | None = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.strata_sizes)
        weights = tuple(int(w) for w in self.weights)
        if sum(sizes) != len(weights):
            raise ValueError("strata sizes must sum to the number of coordinates")
        expected = tuple(l + 1 for l, s in enumerate(sizes) for _ in range(s))
        if weights != expected:
            raise ValueError(f"weights {weights} do not match strata {sizes}")
        object.__setattr__(self, "strata_sizes", sizes)
        object.__setattr__(self, "weights", weights)
        if self.group_law is not None:
            law = tuple(self.group_law)
            if len(law) != len(weights):
                raise ValueError("group law needs one polynomial per coordinate")
            object.__setattr__(self, "group_law", law)

    @classmethod
    def from_weights(cls, weights: Sequence[int], group_law=None) -> "StratifiedDescriptor":
        weights = tuple(int(w) for w in weights)
        sizes = tuple(weights.count(l) for l in range(1, max(weights) + 1))
        return cls(sizes, weights, group_law)

    @property
    def dim_n(self) -> int:
        return len(self.weights)

    @property
    def step(self) -> int:
        return len(self.strata_sizes)

    @property
    def homogeneous_dimension(self) -> int:
        return sum(self.weights)

    def dilate(self, x: Sequence[float], lam: float) -> np.ndarray:
        return np.asarray([lam ** w * xi for w, xi in zip(self.weights, x)])

    @staticmethod
    def law_variables(dim: int) -> tuple[str, ...]:
        return tuple(f"x{i}" for i in range(1, dim + 1)) + tuple(
            f"y{i}" for i in range(1, dim + 1))


# -- built-in frames ------------------------------------------------------------


def _frame_from_strings(name: str, rows: Sequence[Sequence[str]]) -> Frame:
    variables = standard_variables(len(rows[0]))
    coeffs = tuple(tuple(parse_poly(s, variables) for s in row) for row in rows)
    return Frame(name, coeffs, variables)


def _law_from_strings(rows: Sequence[str]) -> tuple:
    variables = StratifiedDescriptor.law_variables(len(rows))
    return tuple(parse_poly(s, variables) for s in rows)


def make_heisenberg() -> tuple[Frame, StratifiedDescriptor]:
    """H1: ``X1 = d1 + 2 x2 d3``, ``X2 = d2 - 2 x1 d3``."""
    frame = _frame_from_strings("heisenberg1", [
        ("1", "0", "2*x2"),
        ("0", "1", "-2*x1"),
    ])
    law = _law_from_strings([
        "x1 + y1",
        "x2 + y2",
        "x3 + y3 + 2*(y1*x2 - x1*y2)",
    ])
    return frame, StratifiedDescriptor((2, 1), (1, 1, 2), law)


def make_engel() -> tuple[Frame, StratifiedDescriptor]:
    """Engel group on R^4 (step 3, strata 2 + 1 + 1)."""
    frame = _frame_from_strings("engel", [
        ("1", "0", "-x2/2", "-x3/2 - x1*x2/12"),
        ("0", "1", "x1/2", "x1^2/12"),
    ])
    law = _law_from_strings([
        "x1 + y1",
        "x2 + y2",
        "x3 + y3 + (x1*y2 - x2*y1)/2",
        "x4 + y4 + (x1*y3 - x3*y1)/2 + (x1^2*y2 - x1*y1*(x2 + y2) + x2*y1^2)/12",
    ])
    return frame, StratifiedDescriptor((2, 1, 1), (1, 1, 2, 3), law)


def make_grushin() -> Frame:
    """Grushin plane: ``X1 = d1``, ``X2 = x1 d2``. Not a group."""
    return _frame_from_strings("grushin", [("1", "0"), ("0", "x1")])


def builtin_frame(name: str) -> tuple[Frame, StratifiedDescriptor | None]:
    key = name.strip().lower()
    if key in ("heisenberg1", "heisenberg", "h1"):
        return make_heisenberg()
    if key == "engel":
        return make_engel()
    if key == "grushin":
        return make_grushin(), None
    raise KeyError(f"unknown built-in frame {name!r}; choose from {BUILTIN_NAMES}")


def parse_frame(text: str, name: str = "custom") -> tuple[Frame, StratifiedDescriptor | None]:
    """Parse a frame definition.

    One vector field per line, coefficients separated by commas (or
    semicolons), written as polynomials in ``x1..xn``. Optional directive
    lines ``name: ...`` and ``weights: 1,1,2`` set the frame name and the
    dilation weights. ``#`` starts a comment.
    """
    rows: list[list[str]] = []
    weights = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(":")
        if _ and head.strip().lower() == "weights":
            try:
                weights = [int(w) for w in rest.replace(";", ",").split(",") if w.strip()]
            except ValueError:
                raise FrameFormatError(f"line {lineno}: bad weights {rest!r}") from None
            continue
        if _ and head.strip().lower() == "name":
            name = rest.strip()
            continue
        sep = ";" if ";" in line else ","
        rows.append([c.strip() for c in line.split(sep)])
    if not rows:
        raise FrameFormatError("no vector fields defined")
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise FrameFormatError("every field needs the same number of coefficients")
    variables = standard_variables(n)
    coords = set(variables[:n])
    coeffs = []
    for r in rows:
        row = []
        for s in r:
            try:
                q = parse_poly(s, variables)
            except PolyParseError as exc:
                raise FrameFormatError(str(exc)) from None
            if not q.free_symbols <= coords:
                raise FrameFormatError(f"coefficient {s!r} uses non-coordinate symbols")
            row.append(q)
        coeffs.append(tuple(row))
    frame = Frame(name, tuple(coeffs), variables)
    desc = None
    if weights is not None:
        if len(weights) != n:
            raise FrameFormatError("weights must list one entry per coordinate")
        try:
            desc = StratifiedDescriptor.from_weights(weights)
        except ValueError as exc:
            raise FrameFormatError(str(exc)) from None
    return frame, desc


def load_frame(spec: str) -> tuple[Frame, StratifiedDescriptor | None]:
    """Built-in name or path to a frame definition file."""
    try:
        return builtin_frame(spec)
    except KeyError:
        pass
    path = Path(spec)
    if not path.is_file():
        raise FrameFormatError(f"{spec!r} is neither a built-in frame nor a file")
    return parse_frame(path.read_text(encoding="utf-8"), name=path.stem)


# -- brackets -------------------------------------------------------------------


def lie_bracket(v: Sequence[MultiPoly], w: Sequence[MultiPoly],
                coordinates: Sequence[str]) -> tuple:
    """Coordinate components of ``[V, W]``: ``sum_l V_l d_l W_m - W_l d_l V_m``."""
    if len(v) != len(w) or len(v) != len(coordinates):
        raise ValueError("bracket operands must have matching dimension")
    out = []
    for m in range(len(v)):
        comp = MultiPoly.zero(v[0].variables)
        for l, xl in enumerate(coordinates):
            if not v[l].is_zero():
                comp = comp + v[l] * w[m].partial(xl)
            if not w[l].is_zero():
                comp = comp - w[l] * v[m].partial(xl)
        out.append(comp)
    return tuple(out)


def commutator(frame: Frame, i: int, j: int) -> tuple:
    """``[X_i, X_j]`` with 1-based indices, as exact coordinate coefficients."""
    for idx in (i, j):
        if not 1 <= idx <= frame.dim_N:
            raise IndexError(f"field index {idx} outside 1..{frame.dim_N}")
    return lie_bracket(frame.vector(i - 1), frame.vector(j - 1), frame.coordinates)


def iterated_brackets(frame: Frame, max_depth: int) -> list[tuple]:
    """Fields and right-nested brackets ``[X_i1, [X_i2, ... X_ik]]`` up to depth.

    Right-nested brackets span all iterated brackets of the same length.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    level = [frame.vector(k) for k in range(frame.dim_N)]
    out = list(level)
    for _ in range(max_depth - 1):
        nxt = []
        for k in range(frame.dim_N):
            for v in level:
                b = lie_bracket(frame.vector(k), v, frame.coordinates)
                if any(not c.is_zero() for c in b) and b not in nxt:
                    nxt.append(b)
        out.extend(nxt)
        level = nxt
    return out


def _exact_rank(rows: list[list[Fraction]]) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def bracket_rank(frame: Frame, point: Sequence, max_depth: int) -> int:
    """Rank at ``point`` of the span of all brackets up to ``max_depth``.

    Integer or ``Fraction`` coordinates give an exact rank; anything else
    is ranked by singular values above 1e-10.
    """
    vectors = iterated_brackets(frame, max_depth)
    coords = frame.coordinates
    if len(point) != frame.dim_n:
        raise ValueError("point dimension does not match the frame")
    exact = all(isinstance(c, numbers.Rational) for c in point)
    if exact:
        env = {x: Fraction(c) for x, c in zip(coords, point)}
        rows = [[c.evaluate_exact(env) for c in v] for v in vectors]
        return _exact_rank(rows)
    env = {x: float(c) for x, c in zip(coords, point)}
    mat = np.array([[float(c.evaluate(env)) for c in v] for v in vectors])
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > 1e-10))


# -- dilations and the generator Z ---------------------------------------------------


def z_generator(desc: StratifiedDescriptor) -> tuple:
    """Components ``w_i x_i`` of the dilation generator over the standard ring."""
    variables = standard_variables(desc.dim_n)
    return tuple(MultiPoly.var(f"x{i + 1}", variables) * w
                 for i, w in enumerate(desc.weights))


def homogeneous_degree(exps: Sequence[int], desc: StratifiedDescriptor) -> int:
    """delta-homogeneous degree of ``x^exps`` (coordinate exponents only)."""
    return sum(w * e for w, e in zip(desc.weights, exps))


def apply_group_law(desc: StratifiedDescriptor, a: Sequence[MultiPoly],
                    b: Sequence[MultiPoly]) -> tuple:
    """``a o b`` where ``a`` and ``b`` are tuples of polynomials over one ring."""
    if desc.group_law is None:
        raise ValueError("descriptor has no group law")
    n = desc.dim_n
    ring = a[0].variables
    temps = tuple(f"_a{i}" for i in range(n)) + tuple(f"_b{i}" for i in range(n))
    if set(temps) & set(ring):
        raise ValueError("ring uses reserved names")
    combined = ring + temps
    rename = dict(zip(StratifiedDescriptor.law_variables(n), temps))
    subs = {t: q.embed(combined) for t, q in zip(temps, tuple(a) + tuple(b))}
    out = []
    for law in desc.group_law:
        q = law.rename(rename).embed(combined).substitute(subs)
        out.append(q.embed(ring))
    return tuple(out)


# -- starshapedness --------------------------------------------------------------------


@dataclass(frozen=True)
class StarshapedVerdict:
    """Outcome of ``starshaped_check``.

    ``kind`` is ``"strictly_starshaped"``, ``"starshaped"`` or ``"violated"``;
    ``witness`` is the boundary point with the smallest ``<Z, n>``.
    """

    kind: str
    min_value: float
    witness: tuple
    points_checked: int

    @property
    def ok(self) -> bool:
        return self.kind != "violated"


STRICT_TOL = 1e-10


def _levelset_env(levelset: MultiPoly, n: int):
    coords = tuple(f"x{i}" for i in range(1, n + 1))
    missing = [x for x in coords if x not in levelset.variables]
    if missing:
        raise ValueError(f"level set must be written in {coords}")
    extra = levelset.free_symbols - set(coords)
    if extra:
        raise ValueError(f"level set has non-coordinate symbols {sorted(extra)}")
    return coords


def _bisect(phi, u, lo, hi, flo):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = phi(mid * u)
        if abs(fm) < 1e-12 or hi - lo <= 1e-15 * max(1.0, hi):
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _ray_crossings(phi_batch, phi, u, t_max_start=1e3, t_max_limit=1e9):
    """Boundary parameters ``t > 0`` along the ray ``t*u``."""
    t_max = t_max_start
    while True:
        ts = np.concatenate(([0.0], np.geomspace(1e-4, t_max, 600)))
        vals = phi_batch(ts[:, None] * u[None, :])
        a, b = vals[:-1], vals[1:]
        hits = np.flatnonzero((b == 0.0) | ((a != 0.0) & ((a < 0) != (b < 0))))
        found = []
        for k in hits + 1:
            if vals[k] == 0.0:
                found.append(ts[k])
            else:
                found.append(_bisect(phi, u, ts[k - 1], ts[k], vals[k - 1]))
        if found or t_max >= t_max_limit:
            return found
        t_max *= 1e3


def starshaped_check(desc: StratifiedDescriptor, levelset: MultiPoly,
                     samples: int = 512, seed: int = 0) -> StarshapedVerdict:
    """Sample ``<Z(x), n(x)>`` on the boundary of ``{levelset < 0}``.

    Boundary points come from sign changes of the level set along random
    rays from the origin, refined by bisection. The origin itself counts as a
    boundary point when the level set vanishes there. ``n`` is the
    Euclidean outer normal ``grad(levelset)/|grad(levelset)|``.
    """
    n = desc.dim_n
    coords = _levelset_env(levelset, n)
    grads = [levelset.partial(x) for x in coords]
    z = np.asarray(desc.weights, dtype=float)

    def phi_batch(P):
        return np.asarray(levelset.evaluate({x: P[:, j] for j, x in enumerate(coords)}),
                          dtype=float) * np.ones(P.shape[0])

    def phi(x):
        return float(levelset.evaluate({c: x[j] for j, c in enumerate(coords)}))

    points = []
    if abs(float(levelset.constant_value())) <= 1e-12:
        points.append(np.zeros(n))
    for i in range(samples):
        rng = np.random.default_rng([seed, i])
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        for t in _ray_crossings(phi_batch, phi, u):
            points.append(t * u)
    if not points:
        raise SamplingError("no boundary crossing found on any ray after bound expansion")

    P = np.array(points)
    env = {x: P[:, j] for j, x in enumerate(coords)}
    G = np.stack([np.asarray(g.evaluate(env), dtype=float) * np.ones(len(P)) for g in grads],
                 axis=1)
    norms = np.linalg.norm(G, axis=1)
    bad = np.flatnonzero(norms < 1e-12)
    if bad.size:
        raise DegenerateBoundaryError(
            f"level-set gradient vanishes at boundary point {tuple(float(v) for v in P[bad[0]])}")
    values = np.einsum("ij,ij->i", P * z[None, :], G) / norms
    k = int(np.argmin(values))
    vmin = float(values[k])
    if vmin > STRICT_TOL:
        kind = "strictly_starshaped"
    elif vmin >= -STRICT_TOL:
        kind = "starshaped"
    else:
        kind = "violated"
    return StarshapedVerdict(kind, vmin, tuple(float(c) for c in P[k]), len(P))
