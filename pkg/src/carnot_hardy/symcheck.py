"""Exact identity suite for the built-in frames.

Each identity compares a derived polynomial with an independently written
closed form; the residual must be the zero polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

from .calculus import horizontal_gradient, p_sublaplacian_factored
from .groups import Frame, builtin_frame, lie_bracket
from .hardy import NormalSpec, distance_function, z_weight_function
from .symbolic import MultiPoly, parse_poly

__all__ = ["IdentityResult", "run_symcheck", "format_results", "IDENTITY_NAMES"]


@dataclass(frozen=True)
class IdentityResult:
    name: str
    residuals: tuple

    @property
    def passed(self) -> bool:
        return all(r.is_zero() for r in self.residuals)

    def line(self) -> str:
        if self.passed:
            return f"{self.name} PASS"
        bad = "; ".join(str(r) for r in self.residuals if not r.is_zero())
        return f"{self.name} FAIL residual: {bad}"


def _expect(frame: Frame, texts):
    return [parse_poly(t, frame.variables) for t in texts]


def _residual(got, want):
    return tuple(g - w for g, w in zip(got, want))


def _weights(frames):
    h, hdesc = frames["heisenberg1"]
    e, edesc = frames["engel"]
    g, _ = frames["grushin"]
    symbolic_half = NormalSpec(None, "half_space", None)
    return {
        "heisenberg.starshaped": (h, z_weight_function(hdesc)),
        "heisenberg.halfspace": (h, distance_function(symbolic_half, 3)),
        "engel.starshaped": (e, z_weight_function(edesc)),
        "engel.halfspace": (e, distance_function(symbolic_half, 4)),
        "grushin.halfspace": (g, distance_function(symbolic_half, 2)),
    }


GRADIENTS = {
    "heisenberg.starshaped": ["n1 + 4*x2*n3", "n2 - 4*x1*n3"],
    "heisenberg.halfspace": ["n1 + 2*x2*n3", "n2 - 2*x1*n3"],
    "engel.starshaped": ["n1 - x2*n3 - 3*x3*n4/2 - x1*x2*n4/4", "n2 + x1*n3 + x1^2*n4/4"],
    "engel.halfspace": ["n1 - x2*n3/2 - x3*n4/2 - x1*x2*n4/12", "n2 + x1*n3/2 + x1^2*n4/12"],
    "grushin.halfspace": ["n1", "x1*n2"],
}

# q in L_p w = |grad_X w|^(p-4) q, or the sub-Laplacian when the key ends in L_equals
OPERATORS = {
    "heisenberg.starshaped.Lp_zero": ("heisenberg.starshaped", "q", "0"),
    "heisenberg.halfspace.Lp_zero": ("heisenberg.halfspace", "q", "0"),
    "engel.starshaped.L_equals": ("engel.starshaped", "L", "x2*n4/2"),
    "engel.halfspace.L_equals": ("engel.halfspace", "L", "x2*n4/6"),
    "grushin.halfspace.Lp_closed_form": ("grushin.halfspace", "q", "(p - 2)*n1*n2^2*x1"),
}

BRACKETS = {
    "heisenberg.bracket.X1X2": ("heisenberg1", [(1, 2)], [["0", "0", "-4"]]),
    "engel.bracket.X3": ("engel", [(1, 2)], [["0", "0", "1", "x1/2"]]),
    "engel.bracket.X4": ("engel", [(1, 2), (1, 3)], [["0", "0", "0", "1"]]),
}

IDENTITY_NAMES = (
    tuple(OPERATORS) + tuple(f"{k}.gradient" for k in GRADIENTS) + tuple(BRACKETS)
)


def _bracket_residual(frame: Frame, chain, expected):
    """``chain`` [(1, 2), (1, 3)] means X3 := [X1, X2], then [X1, X3]."""
    fields = [frame.vector(k) for k in range(frame.dim_N)]
    coords = frame.coordinates
    for i, j in chain:
        new = lie_bracket(fields[i - 1], fields[j - 1], coords)
        fields.append(new)
    got = fields[-1]
    want = _expect(frame, expected[0])
    return _residual(got, want)


def run_symcheck(frames: Mapping[str, tuple] | None = None) -> list[IdentityResult]:
    """Run every identity; ``frames`` overrides built-ins (tampering hook)."""
    table = {name: builtin_frame(name) for name in ("heisenberg1", "engel", "grushin")}
    if frames:
        table.update(frames)
    weights = _weights(table)
    results = []
    for name, (key, kind, text) in OPERATORS.items():
        frame, w = weights[key]
        fac = p_sublaplacian_factored(frame, w)
        got = fac.q_poly if kind == "q" else fac.divergence_part
        results.append(IdentityResult(name, _residual([got], _expect(frame, [text]))))
    for key, texts in GRADIENTS.items():
        frame, w = weights[key]
        got = horizontal_gradient(frame, w)
        results.append(IdentityResult(f"{key}.gradient", _residual(got, _expect(frame, texts))))
    for name, (fname, chain, expected) in BRACKETS.items():
        frame = table[fname][0]
        results.append(IdentityResult(name, _bracket_residual(frame, chain, expected)))
    return results


def format_results(results) -> str:
    return "\n".join(r.line() for r in results)
