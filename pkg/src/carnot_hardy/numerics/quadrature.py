"""Tensor-product Gauss-Legendre quadrature over subdivided boxes."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..symbolic import evaluate

__all__ = [
    "BoxRegion",
    "QuadratureRule",
    "NumericError",
    "integrate",
    "integrate_points",
    "thread_count",
]

# points per evaluation batch; keeps 4-d rules within a few hundred MB
BATCH_POINTS = 1 << 19


class NumericError(ArithmeticError):
    """Non-finite integrand sample."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class BoxRegion:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must have the same positive length")
        if any(not a < b for a, b in zip(lo, hi)):
            raise ValueError(f"box must satisfy lower < upper componentwise: {lo}, {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre ``order`` points per axis on ``subdivisions`` cells per axis.

    The error estimate compares against the same rule at half the order.
    """

    order: int = 24
    subdivisions: int = 4

    def __post_init__(self):
        if self.order < 4 or self.order % 2:
            raise ValueError("order must be even and at least 4")
        if self.subdivisions < 1:
            raise ValueError("subdivisions must be at least 1")


def thread_count() -> int:
    """Worker threads for cell batches, capped by ``HARDY_THREADS``."""
    raw = os.environ.get("HARDY_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


@lru_cache(maxsize=None)
def _gauss(order: int):
    x, w = leggauss(order)
    return x, w


def _per_axis(subdivisions, dim: int) -> tuple:
    if np.ndim(subdivisions) == 0:
        return (int(subdivisions),) * dim
    subs = tuple(int(s) for s in subdivisions)
    if len(subs) != dim or min(subs) < 1:
        raise ValueError("need one positive subdivision count per axis")
    return subs


def _batches(region: BoxRegion, order: int, subdivisions):
    """Yield (points, weights) covering the box, in a fixed cell order."""
    x, w = _gauss(order)
    dim = region.dim
    subs = _per_axis(subdivisions, dim)
    edges = [np.linspace(lo, hi, s + 1)
             for lo, hi, s in zip(region.lower, region.upper, subs)]
    cell_pts = order ** dim
    cells_per_batch = max(1, BATCH_POINTS // cell_pts)
    cells = itertools.product(*(range(s) for s in subs))
    ref = np.stack(np.meshgrid(*([x] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    ref_w = np.ones(cell_pts)
    for grid_w in np.meshgrid(*([w] * dim), indexing="ij"):
        ref_w = ref_w * grid_w.reshape(-1)
    while True:
        chunk = list(itertools.islice(cells, cells_per_batch))
        if not chunk:
            return
        pts = []
        wts = []
        for cell in chunk:
            lo = np.array([edges[a][c] for a, c in enumerate(cell)])
            hi = np.array([edges[a][c + 1] for a, c in enumerate(cell)])
            half = 0.5 * (hi - lo)
            pts.append(lo + half * (ref + 1.0))
            wts.append(ref_w * np.prod(half))
        yield np.concatenate(pts), np.concatenate(wts)


def _rule_sum(func, region, order, subdivisions, transform):
    def run(batch):
        U, W = batch
        if transform is not None:
            X, jac = transform(U)
            W = W * jac
        else:
            X = U
        vals = np.asarray(func(X), dtype=float)
        if vals.shape[0] != X.shape[0]:
            raise ValueError("integrand must return one row per point")
        finite = np.isfinite(vals)
        if not finite.all():
            row = np.flatnonzero(~finite.reshape(len(X), -1).all(axis=1))[0]
            raise NumericError(f"non-finite integrand at {tuple(X[row])}", tuple(X[row]))
        if vals.ndim == 1:
            return float(W @ vals)
        return W @ vals

    batches = _batches(region, order, subdivisions)
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, batches))
    else:
        parts = [run(b) for b in batches]
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def integrate_points(func: Callable, region: BoxRegion, rule: QuadratureRule = QuadratureRule(),
                     transform: Callable | None = None, subdivisions=None):
    """Integrate ``func(X)`` over ``region``.

    ``func`` maps an (m, n) array of points to shape (m,) or (m, k). An
    optional ``transform(U) -> (X, jac)`` maps box points to physical
    points. Returns ``(value, error_estimate)`` where the estimate is the
    difference from the half-order rule. ``subdivisions`` (int or one
    count per axis) overrides the rule's cell counts.
    """
    subs = rule.subdivisions if subdivisions is None else subdivisions
    full = _rule_sum(func, region, rule.order, subs, transform)
    half = _rule_sum(func, region, rule.order // 2, subs, transform)
    err = np.abs(np.asarray(full) - np.asarray(half))
    if np.ndim(full) == 0:
        return float(full), float(err)
    return np.asarray(full), err


def integrate(field, region: BoxRegion, rule: QuadratureRule = QuadratureRule(),
              coordinates=None, params=None):
    """Integrate a ``ScalarField`` in the coordinates ``x1..xn`` over a box."""
    coords = coordinates or tuple(f"x{i}" for i in range(1, region.dim + 1))
    extra = dict(params or {})

    def func(X):
        env = {x: X[:, j] for j, x in enumerate(coords)}
        env.update(extra)
        return np.asarray(evaluate(field, env), dtype=float) * np.ones(len(X))

    return integrate_points(func, region, rule)
