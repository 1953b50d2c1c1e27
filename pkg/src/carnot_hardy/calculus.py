"""Horizontal gradient, divergence and the p-sub-Laplacian.

For a polynomial ``w`` with horizontal gradient ``g = (X_1 w, ..., X_N w)``
and ``S = |g|^2`` the operator factors as

    L_p w = S**((p - 4)/2) * (S * sum_k X_k g_k + (p - 2)/2 * sum_k g_k X_k S)

with a polynomial second factor, so identities such as ``L_p w == 0`` are
decided exactly. The tree-based routines cover non-polynomial inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .groups import Frame
from .symbolic import (
    Const,
    DomainError,
    MultiPoly,
    Poly,
    ScalarField,
    VectorField,
    add,
    as_field,
    evaluate,
    mul,
    power,
)

__all__ = [
    "FactoredLp",
    "horizontal_gradient",
    "horizontal_divergence",
    "p_sublaplacian_factored",
    "p_sublaplacian_field",
    "p_sublaplacian_numeric",
    "horizontal_gradient_field",
    "horizontal_divergence_field",
    "hardy_vector_field",
    "divergence_identity_check",
]


def _check_ring(frame: Frame, q: MultiPoly):
    if q.variables != frame.variables:
        raise ValueError(
            f"polynomial variables {q.variables} do not match frame variables {frame.variables}")


def horizontal_gradient(frame: Frame, w: MultiPoly) -> tuple:
    """Exact ``(X_1 w, ..., X_N w)``."""
    _check_ring(frame, w)
    return tuple(frame.apply(k, w) for k in range(frame.dim_N))


def horizontal_divergence(frame: Frame, F: Sequence[MultiPoly]) -> MultiPoly:
    """Exact ``sum_k X_k F_k`` for an N-component polynomial field."""
    if len(F) != frame.dim_N:
        raise ValueError(f"expected {frame.dim_N} components, got {len(F)}")
    out = MultiPoly.zero(frame.variables)
    for k, Fk in enumerate(F):
        _check_ring(frame, Fk)
        out = out + frame.apply(k, Fk)
    return out


@dataclass(frozen=True)
class FactoredLp:
    """``L_p w = norm_sq**((p-4)/2) * q_poly`` wherever ``norm_sq > 0``.

    ``q_poly = norm_sq * divergence_part + (p-2)/2 * transport_part`` with
    ``divergence_part = sum_k X_k g_k`` (the sub-Laplacian of ``w``) and
    ``transport_part = sum_k g_k X_k norm_sq``.
    """

    gradient: tuple
    norm_sq: MultiPoly
    divergence_part: MultiPoly
    transport_part: MultiPoly
    q_poly: MultiPoly

    def substitute(self, mapping: Mapping[str, object]) -> "FactoredLp":
        return FactoredLp(
            tuple(g.substitute(mapping) for g in self.gradient),
            self.norm_sq.substitute(mapping),
            self.divergence_part.substitute(mapping),
            self.transport_part.substitute(mapping),
            self.q_poly.substitute(mapping),
        )

    def q_at(self, p) -> MultiPoly:
        """``q_poly`` with the exponent symbol replaced by ``p``."""
        return self.q_poly.substitute({"p": Fraction(p)})

    def vanishes(self, p=None) -> bool:
        """True when ``q_poly`` is the zero polynomial (for all p, or at ``p``)."""
        q = self.q_poly if p is None else self.q_at(p)
        return q.is_zero()

    def evaluate(self, env: Mapping[str, object], p: float):
        """Numeric ``L_p w`` via the split form.

        At ``p = 2`` the transport part drops out exactly, so the value is
        the sub-Laplacian even where the gradient vanishes.
        """
        env = dict(env)
        env.setdefault("p", p)
        S = np.asarray(self.norm_sq.evaluate(env), dtype=float)
        div = self.divergence_part.evaluate(env)
        out = 0.0
        if not self.divergence_part.is_zero():
            out = out + _real_power(S, (p - 2) / 2) * div
        if not self.transport_part.is_zero() and p != 2:
            out = out + (p - 2) / 2 * _real_power(S, (p - 4) / 2) * self.transport_part.evaluate(env)
        if np.ndim(out) == 0:
            return float(out)
        return np.asarray(out) * np.ones(np.shape(S))


def _real_power(base, e):
    if float(e).is_integer():
        return np.power(base, int(e)) if e >= 0 else 1.0 / np.power(base, -int(e))
    if np.any(np.asarray(base) <= 0):
        raise DomainError(f"fractional power {e} of non-positive base")
    return np.power(base, e)


def p_sublaplacian_factored(frame: Frame, w: MultiPoly) -> FactoredLp:
    """Exact factored form of ``L_p w`` with ``p`` kept symbolic."""
    g = horizontal_gradient(frame, w)
    norm_sq = MultiPoly.zero(frame.variables)
    for gk in g:
        norm_sq = norm_sq + gk * gk
    div = horizontal_divergence(frame, g)
    transport = MultiPoly.zero(frame.variables)
    for k, gk in enumerate(g):
        transport = transport + gk * frame.apply(k, norm_sq)
    p = MultiPoly.var("p", frame.variables)
    q = norm_sq * div + (p - 2) * Fraction(1, 2) * transport
    return FactoredLp(g, norm_sq, div, transport, q)


# -- expression-tree path ------------------------------------------------------------


def horizontal_gradient_field(frame: Frame, w) -> VectorField:
    w = as_field(w)
    return VectorField(tuple(frame.apply_field(k, w) for k in range(frame.dim_N)),
                       horizontal=True)


def horizontal_divergence_field(frame: Frame, F) -> ScalarField:
    comps = F.components if isinstance(F, VectorField) else tuple(F)
    if len(comps) != frame.dim_N:
        raise ValueError(f"expected {frame.dim_N} components, got {len(comps)}")
    return add(*(frame.apply_field(k, as_field(c)) for k, c in enumerate(comps)))


def _exponent(p, shift: float):
    """``(p + shift)/2`` as an exact Fraction when p is rational-valued."""
    return (Fraction(p) + Fraction(shift)) / 2


def p_sublaplacian_field(frame: Frame, w, p: float) -> ScalarField:
    """Tree for ``div_X(|grad_X w|^(p-2) grad_X w)`` at numeric ``p``."""
    g = horizontal_gradient_field(frame, w)
    norm_sq = add(*(mul(gk, gk) for gk in g))
    scale = power(norm_sq, _exponent(p, -2))
    return horizontal_divergence_field(frame, [mul(scale, gk) for gk in g])


def _point_env(frame: Frame, point, params: Mapping | None):
    if isinstance(point, Mapping):
        env = dict(point)
    else:
        point = np.asarray(point, dtype=float)
        env = {x: point[..., j] for j, x in enumerate(frame.coordinates)}
    if params:
        env.update(params)
    return env


def p_sublaplacian_numeric(frame: Frame, w, p: float, point, params: Mapping | None = None):
    """``L_p w`` at ``point`` by exact tree differentiation, then evaluation.

    Raises ``DomainError`` where the horizontal gradient vanishes and the
    power ``|grad_X w|^(p-2)`` is singular or non-smooth.
    """
    env = _point_env(frame, point, params)
    g = horizontal_gradient_field(frame, w)
    S = evaluate(add(*(mul(gk, gk) for gk in g)), env)
    if p < 2 and np.any(np.asarray(S) <= 0):
        raise DomainError("horizontal gradient vanishes and p < 2")
    return evaluate(p_sublaplacian_field(frame, w, p), env)


def hardy_vector_field(frame: Frame, w, p: float, gamma: float) -> VectorField:
    """``gamma |grad_X w|^(p-2) grad_X w / w^(p-1)``, horizontal components."""
    w = as_field(w)
    g = horizontal_gradient_field(frame, w)
    if gamma == 0:
        return VectorField(tuple(Const(0.0) for _ in g), horizontal=True)
    norm_sq = add(*(mul(gk, gk) for gk in g))
    factor = mul(Const(float(gamma)), power(norm_sq, _exponent(p, -2)),
                 power(w, 1 - Fraction(p)))
    return VectorField(tuple(mul(factor, gk) for gk in g), horizontal=True)


def divergence_identity_check(frame: Frame, w: MultiPoly, p: float, gamma: float,
                              points, params: Mapping | None = None) -> float:
    """Max ``|div_X g - rhs|`` over ``points`` for the field of ``hardy_vector_field``.

    ``rhs = gamma L_p w / w^(p-1) - gamma (p-1) |grad_X w|^p / w^p`` with
    ``L_p w`` taken from the factored polynomial form, so the two sides
    are computed along independent routes.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    env = _point_env(frame, points, params)
    if params:
        w_num = w.substitute(params)
    else:
        w_num = w
    wv = np.asarray(w_num.evaluate(env), dtype=float) * np.ones(len(points))
    fac = p_sublaplacian_factored(frame, w_num)
    S = np.asarray(fac.norm_sq.evaluate(env), dtype=float) * np.ones(len(points))
    if np.any(wv == 0) or np.any(S <= 0):
        raise DomainError("singular test point: w = 0 or vanishing horizontal gradient")
    lhs = evaluate(horizontal_divergence_field(frame, hardy_vector_field(frame, w_num, p, gamma)),
                   env)
    lp = fac.evaluate(env, p)
    rhs = gamma * lp / wv ** (p - 1) - gamma * (p - 1) * S ** (p / 2) / wv ** p
    return float(np.max(np.abs(np.asarray(lhs) - rhs)))
