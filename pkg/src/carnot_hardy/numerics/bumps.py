"""Compactly supported test functions with analytic gradients.

Three families:

* ``smooth_bump``: ``exp(1 - 1/(1 - r^2))`` on the ellipsoid ``r < 1``;
* ``poly_bump``: ``(1 - r^2)^m`` on the same ellipsoid (C^(m-1));
* ``log_profile``: ``u^alpha * B((log u - s0)/L) * B_tan(y)`` where
  ``u = slope*x_axis + offset`` is an affine level coordinate. Integration
  runs in ``(log u, y)`` coordinates so supports spanning many decades of
  ``u`` stay cheap. With ``alpha = (p-1)/p`` this mimics the extremal
  profile of one-dimensional Hardy inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from ..symbolic import (
    Const,
    Cutoff,
    Exp,
    MultiPoly,
    Poly,
    Power,
    add,
    mul,
    standard_variables,
)
from .quadrature import BoxRegion

__all__ = ["TestFunction", "make_bump", "make_log_profile", "admissible", "KINDS"]

KINDS = ("smooth_bump", "poly_bump", "log_profile")
PROFILE_KINDS = ("smooth_bump", "poly_bump")
ADMISSIBLE_MARGIN = 1e-6


def _profile(kind: str, m: int, r2: np.ndarray):
    """Profile value and derivative with respect to ``r2``; zero for r2 >= 1."""
    val = np.zeros_like(r2)
    der = np.zeros_like(r2)
    inside = r2 < 1.0
    s = 1.0 - r2[inside]
    if kind == "smooth_bump":
        v = np.exp(1.0 - 1.0 / s)
        val[inside] = v
        der[inside] = -v / (s * s)
    else:
        val[inside] = s ** m
        der[inside] = -m * s ** (m - 1)
    return val, der


@dataclass(frozen=True)
class TestFunction:
    """A compactly supported test function on ``R^n``.

    For ``log_profile`` the entries ``center[axis]`` and ``radii[axis]`` are
    the log-level centre ``s0`` and half-width ``L``; the remaining entries
    describe the tangential ellipsoid.
    """

    __test__ = False  # keep pytest from collecting this class

    kind: str
    center: tuple
    radii: tuple
    m: int = 3
    amplitude: float = 1.0
    axis: int | None = None
    slope: float = 1.0
    offset: float = 0.0
    alpha: float = 0.5
    profile: str = "smooth_bump"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        center = tuple(float(c) for c in self.center)
        radii = tuple(float(r) for r in self.radii)
        if len(center) != len(radii):
            raise ValueError("center and radii must have the same length")
        if any(not r > 0 for r in radii):
            raise ValueError("radii must be positive")
        if self.kind == "poly_bump" and self.m < 2:
            raise ValueError("poly_bump needs m >= 2 to be C^1")
        if self.kind == "log_profile":
            if self.axis is None or not 0 <= self.axis < len(center):
                raise ValueError("log_profile needs a valid axis")
            if self.slope == 0:
                raise ValueError("log_profile slope must be nonzero")
            if self.profile not in PROFILE_KINDS:
                raise ValueError(f"unknown profile {self.profile!r}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radii", radii)

    @property
    def dim(self) -> int:
        return len(self.center)

    def scaled(self, factor: float) -> "TestFunction":
        return replace(self, amplitude=self.amplitude * factor)

    # -- values -----------------------------------------------------------
    def value_and_gradient(self, X):
        """Values (m,) and Euclidean gradients (m, n) at points ``X`` (m, n)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "log_profile":
            return self._log_profile(X)
        c = np.asarray(self.center)
        rho = np.asarray(self.radii)
        z = (X - c) / rho
        r2 = np.einsum("ij,ij->i", z, z)
        prof = "smooth_bump" if self.kind == "smooth_bump" else "poly_bump"
        val, der = _profile(prof, self.m, r2)
        grad = (2.0 * der)[:, None] * z / rho
        return self.amplitude * val, self.amplitude * grad

    def value(self, X):
        return self.value_and_gradient(X)[0]

    def gradient(self, X):
        return self.value_and_gradient(X)[1]

    def __call__(self, X):
        return self.value(X)

    def _tangential(self):
        return [i for i in range(self.dim) if i != self.axis]

    def _log_profile(self, X):
        j = self.axis
        tan = self._tangential()
        s0, L = self.center[j], self.radii[j]
        u = self.slope * X[:, j] + self.offset
        val = np.zeros(len(X))
        grad = np.zeros_like(X)
        pos = u > 0
        if not pos.any():
            return val, grad
        up = u[pos]
        t = (np.log(up) - s0) / L
        bs, dbs = _profile(self.profile, self.m, t * t)
        if tan:
            c = np.asarray([self.center[i] for i in tan])
            rho = np.asarray([self.radii[i] for i in tan])
            z = (X[pos][:, tan] - c) / rho
            bt, dbt = _profile(self.profile, self.m, np.einsum("ij,ij->i", z, z))
        else:
            bt = np.ones(len(up))
            dbt = np.zeros(len(up))
            z = np.zeros((len(up), 0))
            rho = np.zeros(0)
        ua = up ** self.alpha
        val[pos] = ua * bs * bt
        # d/du [u^alpha B(t(u))] = u^(alpha-1) (alpha B + 2 t B'(t^2) / L)
        dprof = up ** (self.alpha - 1.0) * (self.alpha * bs + 2.0 * t * dbs / L)
        g = np.zeros((len(up), self.dim))
        g[:, j] = self.slope * dprof * bt
        if tan:
            g[:, tan] = (ua * bs * 2.0 * dbt)[:, None] * z / rho
        grad[pos] = g
        return self.amplitude * val, self.amplitude * grad

    # -- integration support -------------------------------------------------
    def support_box(self) -> BoxRegion:
        """Box in integration coordinates that contains the support."""
        c = np.asarray(self.center)
        r = np.asarray(self.radii)
        return BoxRegion(tuple(c - r), tuple(c + r))

    def transform(self, U):
        """Map integration coordinates to ``x``; identity for ellipsoid bumps."""
        if self.kind != "log_profile":
            return U, np.ones(len(U))
        j = self.axis
        X = np.array(U, dtype=float, copy=True)
        eu = np.exp(U[:, j])
        X[:, j] = (eu - self.offset) / self.slope
        return X, eu / abs(self.slope)

    @property
    def needs_transform(self) -> bool:
        return self.kind == "log_profile"

    # -- expression layer ---------------------------------------------------------
    def radius_poly(self, variables=None) -> MultiPoly:
        """``r^2`` as an exact polynomial (ellipsoid kinds)."""
        if self.kind == "log_profile":
            raise ValueError("log_profile has no single ellipsoid")
        variables = variables or standard_variables(self.dim)
        r2 = MultiPoly.zero(variables)
        for i, (c, rho) in enumerate(zip(self.center, self.radii)):
            xi = MultiPoly.var(f"x{i + 1}", variables)
            r2 = r2 + ((xi - Fraction(c)) / Fraction(rho)) ** 2
        return r2

    def to_field(self, variables=None):
        """Expression tree of the bump (ellipsoid kinds only).

        Derivatives of the tree give the analytic gradient used elsewhere.
        """
        variables = variables or standard_variables(self.dim)
        s = Poly(1 - self.radius_poly(variables))
        if self.kind == "smooth_bump":
            inner = Exp(add(Const(1.0), mul(Const(-1.0), Power(s, Fraction(-1)))))
        else:
            inner = Poly(s.poly ** self.m)
        return mul(Const(self.amplitude), Cutoff(inner, s))

    def params(self) -> dict:
        out = {"kind": self.kind, "center": list(self.center), "radii": list(self.radii)}
        if self.kind == "poly_bump":
            out["m"] = self.m
        if self.amplitude != 1.0:
            out["amplitude"] = self.amplitude
        if self.kind == "log_profile":
            out.update(axis=self.axis, slope=self.slope, offset=self.offset,
                       alpha=self.alpha, profile=self.profile)
        return out


def make_bump(kind: str, center, radii, m: int = 3) -> TestFunction:
    """Ellipsoid bump; ``radii`` may be a single number for a ball."""
    center = tuple(float(c) for c in center)
    if np.ndim(radii) == 0:
        radii = (float(radii),) * len(center)
    if kind not in PROFILE_KINDS:
        raise ValueError(f"make_bump builds {PROFILE_KINDS}, not {kind!r}")
    return TestFunction(kind, center, tuple(radii), m=m)


def make_log_profile(axis: int, slope: float, offset: float, s0: float, half_width: float,
                     tangential_center, tangential_radii, alpha: float = 0.5,
                     profile: str = "smooth_bump", m: int = 3) -> TestFunction:
    """``log_profile`` along coordinate ``axis`` (0-based)."""
    tc = list(tangential_center)
    tr = list(tangential_radii)
    center = tc[:axis] + [s0] + tc[axis:]
    radii = tr[:axis] + [half_width] + tr[axis:]
    return TestFunction("log_profile", tuple(center), tuple(radii), m=m, axis=axis,
                        slope=slope, offset=offset, alpha=alpha, profile=profile)


def _affine_min_over_support(f: TestFunction, a: np.ndarray, b: float) -> float:
    """Minimum of ``a.x + b`` over the closed support of ``f``."""
    c = np.asarray(f.center)
    r = np.asarray(f.radii)
    if f.kind != "log_profile":
        return float(a @ c + b - math.sqrt(float(np.sum((a * r) ** 2))))
    j = f.axis
    tan = [i for i in range(f.dim) if i != j]
    lo_u = math.exp(c[j] - r[j])
    hi_u = math.exp(c[j] + r[j])
    ends = [(lo_u - f.offset) / f.slope, (hi_u - f.offset) / f.slope]
    along = min(a[j] * e for e in ends)
    across = 0.0
    if tan:
        at = a[tan]
        across = float(at @ c[tan] - math.sqrt(float(np.sum((at * r[tan]) ** 2))))
    return float(along + across + b)


def admissible(f: TestFunction, spec, margin: float = ADMISSIBLE_MARGIN) -> bool:
    """True iff the support of ``f`` lies in ``{w > margin}`` for the weight of ``spec``."""
    a, b = spec.weight_affine()
    if len(a) != f.dim:
        return False
    return _affine_min_over_support(f, np.asarray(a, dtype=float), float(b)) > margin
