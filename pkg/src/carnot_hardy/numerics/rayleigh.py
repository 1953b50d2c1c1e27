"""Rayleigh quotients ``int |grad_X f|^p / int W1 |f|^p`` and their minimization.

The quotient bounds the best constant of the gradient-weight Hardy
inequality from above, so minimizing it over a bump family probes how
close the constant ``((p-1)/p)^p`` is to sharp for a given weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from ..hardy import HardySpec, InadmissibleError, best_constant, hardy_integrals
from .bumps import TestFunction, admissible, make_bump, make_log_profile
from .quadrature import NumericError, QuadratureRule

__all__ = [
    "SurvivingLpError",
    "RayleighResult",
    "BumpFamily",
    "rayleigh_quotient",
    "minimize_quotient",
    "fixed_family",
    "ellipsoid_family",
    "log_profile_family",
]

# far above any quotient an admissible function reaches in practice
PENALTY = 1e30


class SurvivingLpError(ValueError):
    """The L_p term of the weight is not identically zero."""


def _require_pure(spec: HardySpec):
    if not spec.lp_vanishes():
        raise SurvivingLpError(
            f"L_p w does not vanish for {spec.group} {spec.mode_label}; the quotient "
            "against the gradient weight alone is not a lower-bound probe here")


def rayleigh_quotient(spec: HardySpec, f: TestFunction,
                      rule: QuadratureRule = QuadratureRule()) -> float:
    """``int |grad_X f|^p / int W1 |f|^p`` for an admissible ``f``."""
    _require_pure(spec)
    integrals = hardy_integrals(spec, f, rule)
    if integrals.weight1 <= 0:
        raise ValueError("test function vanishes identically")
    return integrals.gradient / integrals.weight1


@dataclass(frozen=True)
class BumpFamily:
    """Parameter vector -> TestFunction, with a starting point and step sizes."""

    name: str
    build: Callable[[np.ndarray], TestFunction]
    x0: tuple = ()
    steps: tuple = ()
    rule: QuadratureRule | None = None

    @property
    def dim(self) -> int:
        return len(self.x0)


@dataclass
class RayleighResult:
    best_params: tuple
    quotient: float
    iterations: int
    converged: bool
    constant: float
    min_seen: float
    evaluations: int
    trace: list = field(default_factory=list)
    best_function: TestFunction | None = None

    @property
    def gap(self) -> float:
        return self.quotient - self.constant


def fixed_family(f: TestFunction, rule: QuadratureRule | None = None) -> BumpFamily:
    """Degenerate family holding one function."""
    return BumpFamily("fixed", lambda _x: f, (), (), rule)


def ellipsoid_family(kind: str, center, radii, m: int = 3,
                     rule: QuadratureRule | None = None) -> BumpFamily:
    """Centre and log-radii free: ``2n`` parameters."""
    center = np.asarray(center, dtype=float)
    radii = np.asarray(radii, dtype=float)
    n = len(center)

    def build(x):
        return make_bump(kind, x[:n], np.exp(x[n:]), m=m)

    x0 = tuple(center) + tuple(np.log(radii))
    steps = tuple(0.5 * radii) + (0.5,) * n
    return BumpFamily(f"{kind}-ellipsoid", build, x0, steps, rule)


def log_profile_family(spec: HardySpec, s0: float = 0.0, half_width: float = 2.0,
                       tangential_radius: float = 1.0, max_half_width: float = 12.0,
                       max_tangential_radius: float = 1e6,
                       profile: str = "smooth_bump", m: int = 3,
                       rule: QuadratureRule | None = None) -> BumpFamily:
    """Profiles ``w^alpha B((log w - s0)/L)`` times a tangential ball.

    ``alpha = (p-1)/p``. Parameters are ``(s0, log L, log R)``; ``L`` and
    ``R`` are capped at ``max_half_width`` and ``max_tangential_radius``. The level coordinate is the dominant
    coordinate of the affine weight.
    """
    a, b = spec.weight_affine()
    axis = int(np.argmax(np.abs(a)))
    n = len(a)
    alpha = (spec.p - 1.0) / spec.p

    def build(x):
        L = min(math.exp(x[1]), max_half_width)
        R = min(math.exp(x[2]), max_tangential_radius)
        return make_log_profile(axis, float(a[axis]), float(b), float(x[0]), L,
                                [0.0] * (n - 1), [R] * (n - 1), alpha=alpha,
                                profile=profile, m=m)

    x0 = (float(s0), math.log(half_width), math.log(tangential_radius))
    return BumpFamily("log-profile", build, x0, (1.0, 0.5, 0.5), rule)


def minimize_quotient(spec: HardySpec, family: BumpFamily, max_iter: int = 500,
                      tol: float = 1e-6, rule: QuadratureRule | None = None) -> RayleighResult:
    """Nelder-Mead over the family; inadmissible parameters are penalized.

    ``trace`` records ``(iteration, best quotient so far)``; ``min_seen`` is
    the smallest quotient over every admissible evaluation.
    """
    _require_pure(spec)
    rule = rule or family.rule or QuadratureRule()
    constant = best_constant(spec.p)
    state = {"evals": 0, "min": math.inf, "best": math.inf, "best_x": None, "ok": False}

    def objective(x):
        x = np.asarray(x, dtype=float)
        state["evals"] += 1
        state["ok"] = False
        try:
            f = family.build(x)
        except ValueError:
            return PENALTY * 10
        if not admissible(f, spec):
            return PENALTY
        try:
            q = rayleigh_quotient(spec, f, rule)
        except (NumericError, InadmissibleError, ValueError, OverflowError):
            return PENALTY
        if not math.isfinite(q):
            return PENALTY
        state["ok"] = True
        state["min"] = min(state["min"], q)
        if q < state["best"]:
            state["best"], state["best_x"] = q, tuple(float(v) for v in x)
        return q

    if family.dim == 0:
        q = objective(np.zeros(0))
        if not state["ok"]:
            raise InadmissibleError("fixed test function is not admissible")
        f = family.build(np.zeros(0))
        return RayleighResult((), q, 0, True, constant, q, 1, [(0, q)], f)

    x0 = np.asarray(family.x0, dtype=float)
    objective(x0)
    if not state["ok"]:
        raise InadmissibleError("starting parameters give an inadmissible test function")
    simplex = [x0]
    for i, step in enumerate(family.steps or (0.5,) * family.dim):
        v = x0.copy()
        v[i] += step
        simplex.append(v)
    trace = []

    def callback(xk, *args):
        trace.append((len(trace) + 1, state["best"]))

    res = minimize(objective, x0, method="Nelder-Mead", callback=callback,
                   options={"maxiter": max_iter, "xatol": tol, "fatol": tol,
                            "initial_simplex": np.array(simplex)})
    best_x = state["best_x"]
    best_f = family.build(np.asarray(best_x))
    return RayleighResult(best_x, state["best"], int(res.nit), bool(res.success), constant,
                          state["min"], state["evals"], trace, best_f)
