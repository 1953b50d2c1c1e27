"""Geometric Hardy functionals on half-spaces and starshaped sets.

For a weight ``w`` (the half-space distance ``<x, n> - d`` or the
starshaped weight ``<Z(x), n>``) and any real ``gamma`` the inequality

    int |grad_X f|^p >= c1 * int W1 |f|^p + c2 * int W2 |f|^p

holds with ``W1 = |grad_X w|^p / |w|^p``, ``W2 = L_p w / |w|^(p-1)``,
``c1 = -(p-1)(|gamma|^(p/(p-1)) + gamma)`` and ``c2 = gamma``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .calculus import FactoredLp, horizontal_divergence_field, p_sublaplacian_factored
from .groups import Frame, StratifiedDescriptor, builtin_frame, z_generator
from .numerics.bumps import TestFunction, admissible, make_bump
from .numerics.quadrature import QuadratureRule, integrate_points
from .symbolic import (
    Const,
    MultiPoly,
    Poly,
    VectorField,
    evaluate,
    mul,
    power,
    standard_variables,
)

__all__ = [
    "NormalSpec",
    "HardySpec",
    "HardyIntegrals",
    "HardyReport",
    "DivergenceBound",
    "InadmissibleError",
    "OptimalGammaError",
    "distance_function",
    "z_weight_function",
    "gamma_coefficients",
    "optimal_gamma",
    "best_constant",
    "weight_fields",
    "hardy_integrals",
    "evaluate_deficit",
    "report_from_integrals",
    "general_divergence_bound",
    "BUILTIN_SPECS",
    "builtin_spec",
    "random_admissible_bumps",
    "random_admissible_points",
]

HALF_SPACE = "half_space"
STARSHAPED = "starshaped_weight"
CONSTANT_NORMAL_NOTE = "n is a constant vector on the whole domain"


class InadmissibleError(ValueError):
    """The test function's support is not strictly inside the domain."""


class OptimalGammaError(ValueError):
    """``gamma='optimal'`` requested while the L_p term survives."""


def _check_p(p: float):
    if not p > 1:
        raise ValueError("p must exceed 1")


def _exact(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(float(value))


@dataclass(frozen=True)
class NormalSpec:
    """Constant normal vector ``n`` and the weight mode.

    ``n=None`` keeps the components as the symbols ``n1..nn``; ``d=None`` in
    half-space mode keeps the offset as the symbol ``d``.
    """

    n: tuple | None
    mode: str = HALF_SPACE
    d: object = 0

    def __post_init__(self):
        if self.mode not in (HALF_SPACE, STARSHAPED):
            raise ValueError(f"mode must be {HALF_SPACE!r} or {STARSHAPED!r}")
        if self.n is not None:
            n = tuple(_exact(c) for c in self.n)
            if not any(n):
                raise ValueError("normal vector must be nonzero")
            object.__setattr__(self, "n", n)
        if self.mode == HALF_SPACE and self.d is not None:
            d = _exact(self.d)
            if not math.isfinite(float(d)):
                raise ValueError("d must be finite")
            object.__setattr__(self, "d", d)

    @classmethod
    def half_space(cls, n, d=0) -> "NormalSpec":
        return cls(None if n is None else tuple(n), HALF_SPACE, d)

    @classmethod
    def starshaped(cls, n) -> "NormalSpec":
        return cls(None if n is None else tuple(n), STARSHAPED, None)

    def substitution(self) -> dict:
        out = {}
        if self.n is not None:
            out.update({f"n{i + 1}": c for i, c in enumerate(self.n)})
        if self.mode == HALF_SPACE and self.d is not None:
            out["d"] = self.d
        return out


def distance_function(normal: NormalSpec, dim: int | None = None) -> MultiPoly:
    """``sum x_i n_i - d`` over the standard variables."""
    if normal.mode != HALF_SPACE:
        raise ValueError("distance_function needs a half-space normal")
    dim = dim or len(normal.n)
    variables = standard_variables(dim)
    dist = MultiPoly.zero(variables)
    for i in range(1, dim + 1):
        dist = dist + MultiPoly.var(f"x{i}", variables) * MultiPoly.var(f"n{i}", variables)
    dist = dist - MultiPoly.var("d", variables)
    return dist.substitute(normal.substitution())


def z_weight_function(desc: StratifiedDescriptor, normal: NormalSpec | None = None) -> MultiPoly:
    """``<Z(x), n> = sum w_i x_i n_i``; symbolic ``n`` when ``normal`` is None."""
    if normal is not None and normal.mode != STARSHAPED:
        raise ValueError("z_weight_function needs a starshaped normal")
    variables = standard_variables(desc.dim_n)
    out = MultiPoly.zero(variables)
    for i, zi in enumerate(z_generator(desc)):
        out = out + zi * MultiPoly.var(f"n{i + 1}", variables)
    if normal is not None:
        out = out.substitute(normal.substitution())
    return out


def gamma_coefficients(gamma: float, p: float) -> tuple[float, float]:
    """``(c1, c2) = (-(p-1)(|gamma|^(p/(p-1)) + gamma), gamma)``."""
    _check_p(p)
    c1 = -(p - 1) * (abs(gamma) ** (p / (p - 1)) + gamma)
    return c1, float(gamma)


def optimal_gamma(p: float) -> float:
    """Maximiser ``-((p-1)/p)^(p-1)`` of ``c1``."""
    _check_p(p)
    return -(((p - 1) / p) ** (p - 1))


def best_constant(p: float) -> float:
    """``((p-1)/p)^p``, the value of ``c1`` at the optimal gamma."""
    _check_p(p)
    return ((p - 1) / p) ** p


@dataclass(frozen=True)
class HardySpec:
    """A concrete inequality: frame, weight mode, exponent and gamma."""

    frame: Frame
    normal: NormalSpec
    p: float
    gamma: object = "optimal"
    descriptor: StratifiedDescriptor | None = None
    group: str = ""

    def __post_init__(self):
        _check_p(self.p)
        if self.normal.n is None:
            raise ValueError("HardySpec needs a numeric normal vector")
        if len(self.normal.n) != self.frame.dim_n:
            raise ValueError("normal vector dimension does not match the frame")
        if self.normal.mode == HALF_SPACE and self.normal.d is None:
            raise ValueError("half-space mode requires d")
        if self.normal.mode == STARSHAPED and self.descriptor is None:
            raise ValueError("starshaped mode requires dilation weights")
        if self.gamma != "optimal":
            object.__setattr__(self, "gamma", float(self.gamma))
        if not self.group:
            object.__setattr__(self, "group", self.frame.name)

    @property
    def weight_kind(self) -> str:
        return "half_space_distance" if self.normal.mode == HALF_SPACE else "starshaped_z"

    @property
    def mode_label(self) -> str:
        return "halfspace" if self.normal.mode == HALF_SPACE else "starshaped"

    @cached_property
    def weight(self) -> MultiPoly:
        if self.normal.mode == HALF_SPACE:
            return distance_function(self.normal, self.frame.dim_n)
        return z_weight_function(self.descriptor, self.normal)

    @cached_property
    def factored(self) -> FactoredLp:
        """Factored ``L_p w`` with ``p`` replaced by the exponent."""
        fac = p_sublaplacian_factored(self.frame, self.weight)
        return fac.substitute({"p": _exact(self.p)})

    def weight_affine(self) -> tuple[np.ndarray, float]:
        """``(a, b)`` with ``w(x) = a.x + b``."""
        w = self.weight
        if w.degree() > 1 or not w.free_symbols <= set(self.frame.coordinates):
            raise ValueError("weight is not affine in x")
        n = self.frame.dim_n
        a = np.zeros(n)
        for i in range(n):
            exps = [0] * len(w.variables)
            exps[i] = 1
            a[i] = float(w.coefficient(exps))
        return a, float(w.constant_value())

    def lp_vanishes(self) -> bool:
        """True when ``L_p w`` is identically zero for this spec."""
        return self.factored.q_poly.is_zero()

    def gamma_value(self) -> float:
        if self.gamma != "optimal":
            return float(self.gamma)
        if not self.lp_vanishes():
            raise OptimalGammaError(
                f"gamma='optimal' is only defined when L_p w vanishes; for {self.group} "
                f"{self.mode_label} the L_p term survives, so sweep gamma instead")
        return optimal_gamma(self.p)

    def with_gamma(self, gamma) -> "HardySpec":
        return HardySpec(self.frame, self.normal, self.p, gamma, self.descriptor, self.group)

    def with_p(self, p: float) -> "HardySpec":
        return HardySpec(self.frame, self.normal, p, self.gamma, self.descriptor, self.group)


def weight_fields(spec: HardySpec):
    """Expression trees ``(W1, W2)`` of the inequality.

    ``W1 = |grad_X w|^p / |w|^p``; ``W2 = L_p w / |w|^(p-1)`` with ``L_p w``
    from the factored form, or the constant 0 when that form vanishes.
    """
    p = _exact(spec.p)
    w = Poly(spec.weight)
    absw = power(Poly(spec.weight * spec.weight), Fraction(1, 2)) \
        if spec.normal.mode == STARSHAPED else w
    fac = spec.factored
    S = Poly(fac.norm_sq)
    W1 = mul(power(S, p / 2), power(absw, -p))
    if fac.q_poly.is_zero():
        W2 = Const(0.0)
    else:
        W2 = mul(power(S, (p - 4) / 2), Poly(fac.q_poly), power(absw, 1 - p))
    return W1, W2


# -- quadrature of the functionals --------------------------------------------------


class HardyIntegrals(NamedTuple):
    """Raw integrals and their half-order error estimates."""

    gradient: float
    weight1: float
    weight2: float
    errors: tuple


def _integrand(spec: HardySpec, f: TestFunction):
    frame = spec.frame
    p = float(spec.p)
    coords = frame.coordinates
    fac = spec.factored
    w = spec.weight
    lp_zero = fac.q_poly.is_zero()
    starshaped = spec.normal.mode == STARSHAPED

    def func(X):
        val, grad = f.value_and_gradient(X)
        out = np.zeros((len(X), 3))
        mask = val != 0.0
        if not mask.any():
            return out
        Xm = X[mask]
        C = frame.coefficient_values(Xm)
        hg = np.einsum("mkn,mn->mk", C, grad[mask])
        absf_p = np.abs(val[mask]) ** p
        out[mask, 0] = np.einsum("mk,mk->m", hg, hg) ** (p / 2)
        env = {x: Xm[:, j] for j, x in enumerate(coords)}
        wv = np.asarray(w.evaluate(env), dtype=float) * np.ones(len(Xm))
        if starshaped:
            wv = np.abs(wv)
        S = np.asarray(fac.norm_sq.evaluate(env), dtype=float) * np.ones(len(Xm))
        out[mask, 1] = (S / wv ** 2) ** (p / 2) * absf_p
        if not lp_zero:
            out[mask, 2] = fac.evaluate(env, p) / wv ** (p - 1) * absf_p
        return out

    return func


def hardy_integrals(spec: HardySpec, f: TestFunction,
                    quad: QuadratureRule = QuadratureRule(), check: bool = True) -> HardyIntegrals:
    """``int |grad_X f|^p``, ``int W1 |f|^p`` and ``int W2 |f|^p`` over supp f."""
    if check and not admissible(f, spec):
        raise InadmissibleError(
            "test-function support must lie strictly inside the domain (w > 1e-6 on the support)")
    if f.amplitude == 0:
        return HardyIntegrals(0.0, 0.0, 0.0, (0.0, 0.0, 0.0))
    transform = f.transform if f.needs_transform else None
    vals, errs = integrate_points(_integrand(spec, f), f.support_box(), quad, transform)
    return HardyIntegrals(float(vals[0]), float(vals[1]), float(vals[2]),
                          tuple(float(e) for e in errs))


@dataclass(frozen=True)
class HardyReport:
    lhs: float
    rhs_gradient_term: float
    rhs_lp_term: float
    deficit: float
    gamma_used: float
    quad_error_estimate: float
    p: float
    group: str
    mode: str
    n: tuple
    d: float | None
    f_params: dict = field(default_factory=dict)
    assumptions: str = CONSTANT_NORMAL_NOTE

    @property
    def rhs(self) -> float:
        return self.rhs_gradient_term + self.rhs_lp_term

    def passes(self, factor: float = 10.0) -> bool:
        """Deficit sign check with a budget of ``factor`` quadrature errors."""
        return self.deficit >= -factor * self.quad_error_estimate

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs_gradient_term": self.rhs_gradient_term,
            "rhs_lp_term": self.rhs_lp_term,
            "deficit": self.deficit,
            "gamma": self.gamma_used,
            "p": self.p,
            "group": self.group,
            "mode": self.mode,
            "n": list(self.n),
            "d": self.d,
            "quad_error": self.quad_error_estimate,
            "f_params": self.f_params,
            "assumptions": self.assumptions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def report_from_integrals(spec: HardySpec, integrals: HardyIntegrals, f: TestFunction | None,
                          gamma: float | None = None) -> HardyReport:
    gamma = spec.gamma_value() if gamma is None else float(gamma)
    c1, c2 = gamma_coefficients(gamma, spec.p)
    rhs1 = c1 * integrals.weight1
    rhs2 = c2 * integrals.weight2 if integrals.weight2 else 0.0
    e0, e1, e2 = integrals.errors
    return HardyReport(
        lhs=integrals.gradient,
        rhs_gradient_term=rhs1,
        rhs_lp_term=rhs2,
        deficit=integrals.gradient - rhs1 - rhs2,
        gamma_used=gamma,
        quad_error_estimate=e0 + abs(c1) * e1 + abs(c2) * e2,
        p=float(spec.p),
        group=spec.group,
        mode=spec.mode_label,
        n=tuple(float(c) for c in spec.normal.n),
        d=float(spec.normal.d) if spec.normal.mode == HALF_SPACE else None,
        f_params=f.params() if f is not None else {},
    )


def evaluate_deficit(spec: HardySpec, f: TestFunction,
                     quad: QuadratureRule = QuadratureRule()) -> HardyReport:
    """Both sides of the inequality for one test function."""
    integrals = hardy_integrals(spec, f, quad)
    return report_from_integrals(spec, integrals, f)


class DivergenceBound(NamedTuple):
    lhs: float
    rhs: float
    deficit: float
    quad_error: float


def general_divergence_bound(frame: Frame, g: VectorField, f: TestFunction, p: float,
                             quad: QuadratureRule = QuadratureRule(),
                             params: dict | None = None) -> DivergenceBound:
    """``int |grad_X f|^p`` against ``int (div_X g - (p-1)|g|^(p/(p-1))) |f|^p``.

    ``g`` is given by its horizontal components (expression trees); it must
    be smooth on the support of ``f``.
    """
    _check_p(p)
    comps = tuple(g.components)
    if len(comps) != frame.dim_N:
        raise ValueError(f"g needs {frame.dim_N} horizontal components")
    div = horizontal_divergence_field(frame, comps)
    coords = frame.coordinates
    extra = dict(params or {})

    def func(X):
        val, grad = f.value_and_gradient(X)
        out = np.zeros((len(X), 2))
        mask = val != 0.0
        if not mask.any():
            return out
        Xm = X[mask]
        C = frame.coefficient_values(Xm)
        hg = np.einsum("mkn,mn->mk", C, grad[mask])
        absf_p = np.abs(val[mask]) ** p
        out[mask, 0] = np.einsum("mk,mk->m", hg, hg) ** (p / 2)
        env = {x: Xm[:, j] for j, x in enumerate(coords)}
        env.update(extra)
        gv = np.stack([np.asarray(evaluate(c, env), dtype=float) * np.ones(len(Xm))
                       for c in comps], axis=1)
        gnorm = np.sqrt(np.einsum("mk,mk->m", gv, gv))
        dv = np.asarray(evaluate(div, env), dtype=float) * np.ones(len(Xm))
        out[mask, 1] = (dv - (p - 1) * gnorm ** (p / (p - 1))) * absf_p
        return out

    transform = f.transform if f.needs_transform else None
    vals, errs = integrate_points(func, f.support_box(), quad, transform)
    lhs, rhs = float(vals[0]), float(vals[1])
    return DivergenceBound(lhs, rhs, lhs - rhs, float(errs[0] + errs[1]))


# -- built-in specs ----------------------------------------------------------------


@dataclass(frozen=True)
class _Builtin:
    frame: str
    mode: str
    n: tuple
    d: object
    window_lo: tuple
    window_hi: tuple


BUILTIN_SPECS = {
    "heisenberg1.starshaped": _Builtin("heisenberg1", STARSHAPED, (0, 0, 1), None,
                                       (-1.0, -1.0, 0.5), (1.0, 1.0, 1.5)),
    "heisenberg1.halfspace": _Builtin("heisenberg1", HALF_SPACE, (0, 0, 1), 0,
                                      (-1.0, -1.0, 0.5), (1.0, 1.0, 1.5)),
    "engel.starshaped": _Builtin("engel", STARSHAPED, (1, 0, 0, Fraction(1, 4)), None,
                                 (0.5, -1.0, -1.0, -1.0), (1.5, 1.0, 1.0, 1.0)),
    "engel.halfspace": _Builtin("engel", HALF_SPACE, (1, 0, 0, Fraction(1, 4)), 0,
                                (0.5, -1.0, -1.0, -1.0), (1.5, 1.0, 1.0, 1.0)),
    "grushin.halfspace": _Builtin("grushin", HALF_SPACE, (1, 0), 0,
                                  (0.5, -1.0), (1.5, 1.0)),
}


def builtin_spec(name: str, p: float = 2.0, gamma="optimal") -> HardySpec:
    """One of ``BUILTIN_SPECS`` at exponent ``p``."""
    entry = BUILTIN_SPECS[name]
    frame, desc = builtin_frame(entry.frame)
    normal = NormalSpec(entry.n, entry.mode, entry.d)
    return HardySpec(frame, normal, p, gamma, desc, entry.frame)


def _window(name: str, spec: HardySpec):
    if name in BUILTIN_SPECS:
        e = BUILTIN_SPECS[name]
        return np.asarray(e.window_lo), np.asarray(e.window_hi)
    a, b = spec.weight_affine()
    n = spec.frame.dim_n
    lo = -np.ones(n)
    hi = np.ones(n)
    j = int(np.argmax(np.abs(a)))
    # shift the dominant coordinate so the window centre sits at w = 1
    centre = (1.0 - b) / a[j]
    lo[j], hi[j] = centre - 0.5 / abs(a[j]), centre + 0.5 / abs(a[j])
    return lo, hi


def random_admissible_bumps(spec: HardySpec, count: int, seed: int = 0,
                            kind: str = "smooth_bump", name: str | None = None,
                            radius_range=(0.15, 0.45), max_tries: int = 10000) -> list[TestFunction]:
    """Seeded random ellipsoid bumps with supports strictly inside the domain."""
    lo, hi = _window(name or f"{spec.group}.{spec.mode_label}", spec)
    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not draw enough admissible bumps")
        c = rng.uniform(lo, hi)
        r = rng.uniform(*radius_range, size=len(lo))
        f = make_bump(kind, c, r)
        if admissible(f, spec):
            out.append(f)
    return out


def random_admissible_points(spec: HardySpec, count: int, seed: int = 0,
                             name: str | None = None, min_weight: float = 0.1) -> np.ndarray:
    """Seeded points of the sampling window with ``w >= min_weight``."""
    lo, hi = _window(name or f"{spec.group}.{spec.mode_label}", spec)
    a, b = spec.weight_affine()
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        x = rng.uniform(lo, hi)
        if a @ x + b >= min_weight:
            pts.append(x)
    return np.array(pts)
