"""Exact sparse polynomials over the rationals and a small expression layer.

``MultiPoly`` is the workhorse for every identity that must be decided
exactly (brackets, horizontal gradients, factored p-sub-Laplacians).
``ScalarField`` trees cover the objects that are not polynomial, such as
``|grad w|**(p - 2)`` or the smooth bump ``exp(1 - 1/(1 - r**2))``, and can be
differentiated symbolically and evaluated on numpy arrays.
"""

from __future__ import annotations

import ast
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "SymbolicError",
    "VariableMismatchError",
    "UnboundSymbolError",
    "DomainError",
    "PolyParseError",
    "MultiPoly",
    "standard_variables",
    "parse_poly",
    "ScalarField",
    "Poly",
    "Const",
    "Sum",
    "Product",
    "Power",
    "Exp",
    "Cutoff",
    "VectorField",
    "as_field",
    "evaluate",
    "differentiate",
    "add",
    "mul",
    "power",
    "exp",
    "poly_add",
    "poly_mul",
    "partial",
]


class SymbolicError(Exception):
    """Base class for errors raised by the symbolic layer."""


class VariableMismatchError(SymbolicError, ValueError):
    """Operands live over different variable lists."""


class UnboundSymbolError(SymbolicError, KeyError):
    """A free symbol has no value at evaluation time."""


class DomainError(SymbolicError, ValueError):
    """Fractional power of a non-positive base."""


class PolyParseError(SymbolicError, ValueError):
    """A polynomial string could not be parsed."""


def standard_variables(dim: int) -> tuple[str, ...]:
    """Variable list ``x1..xn, n1..nn, d, p`` used throughout the package."""
    xs = tuple(f"x{i}" for i in range(1, dim + 1))
    ns = tuple(f"n{i}" for i in range(1, dim + 1))
    return xs + ns + ("d", "p")


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, numbers.Real):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"cannot represent {value!r} exactly")
        # floats are dyadic rationals; the conversion is exact
        return Fraction(value)
    raise TypeError(f"expected a rational number, got {type(value).__name__}")


class MultiPoly:
    """Sparse multivariate polynomial with ``Fraction`` coefficients.

    Parameters
    ----------
    variables : sequence of str
        Ordered variable names. Two polynomials interact only if their
        variable lists are identical.
    terms : mapping, optional
        Exponent tuple -> coefficient. Zero coefficients are dropped.

    Examples
    --------
    >>> v = ("x1", "x2")
    >>> x1, x2 = MultiPoly.var("x1", v), MultiPoly.var("x2", v)
    >>> str((x1 + x2) * (x1 - x2))
    'x1^2 - x2^2'
    """

    __slots__ = ("_variables", "_terms", "_index", "_hash", "_horner")

    def __init__(self, variables: Sequence[str], terms: Mapping | None = None):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variable names in {variables}")
        self._variables = variables
        self._index = {name: i for i, name in enumerate(variables)}
        clean: dict[tuple[int, ...], Fraction] = {}
        nvars = len(variables)
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(
                    f"exponent tuple {exps} does not match {nvars} variables"
                )
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = _as_fraction(coeff)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self._terms = clean
        self._hash = None
        self._horner = None

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, variables: Sequence[str]) -> "MultiPoly":
        return cls(variables)

    @classmethod
    def const(cls, value, variables: Sequence[str]) -> "MultiPoly":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def var(cls, name: str, variables: Sequence[str]) -> "MultiPoly":
        variables = tuple(variables)
        if name not in variables:
            raise UnboundSymbolError(f"unknown variable {name!r}")
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exps: 1})

    @classmethod
    def linear(cls, coeffs: Mapping[str, object], variables: Sequence[str],
               constant=0) -> "MultiPoly":
        """``sum(coeffs[v] * v) + constant``."""
        variables = tuple(variables)
        out = cls.const(constant, variables)
        for name, c in coeffs.items():
            out = out + cls.var(name, variables) * c
        return out

    # -- basic accessors ------------------------------------------------
    @property
    def variables(self) -> tuple[str, ...]:
        return self._variables

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_value(self) -> Fraction:
        """Constant term (the value when every variable is zero)."""
        return self._terms.get((0,) * len(self._variables), Fraction(0))

    @property
    def free_symbols(self) -> frozenset[str]:
        used = set()
        for exps in self._terms:
            used.update(v for v, e in zip(self._variables, exps) if e)
        return frozenset(used)

    def degree(self, var: str | None = None) -> int:
        """Total degree, or the degree in ``var``. The zero polynomial has -1."""
        if not self._terms:
            return -1
        if var is None:
            return max(sum(e) for e in self._terms)
        i = self._position(var)
        return max(e[i] for e in self._terms)

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def _position(self, var: str) -> int:
        try:
            return self._index[var]
        except KeyError:
            raise UnboundSymbolError(f"unknown variable {var!r}") from None

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other._variables != self._variables:
                raise VariableMismatchError(
                    f"variable lists differ: {self._variables} vs {other._variables}"
                )
            return other
        if isinstance(other, numbers.Number):
            return MultiPoly.const(other, self._variables)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self._terms)
        for exps, c in other._terms.items():
            terms[exps] = terms.get(exps, Fraction(0)) + c
        return MultiPoly(self._variables, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self._variables, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return MultiPoly(self._variables, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, MultiPoly):
            if not other.is_constant() or other.is_zero():
                raise TypeError("only division by a nonzero constant is supported")
            other = other.constant_value()
        c = _as_fraction(other)
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        return self * (1 / c)

    def __pow__(self, k: int):
        if not isinstance(k, numbers.Integral) or k < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = MultiPoly.const(1, self._variables)
        base = self
        k = int(k)
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, numbers.Number):
            return self.is_constant() and self.constant_value() == other
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self._variables == other._variables and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._variables, frozenset(self._terms.items())))
        return self._hash

    # -- calculus and substitution -----------------------------------------
    def partial(self, var: str) -> "MultiPoly":
        i = self._position(var)
        terms = {}
        for exps, c in self._terms.items():
            k = exps[i]
            if k:
                e = list(exps)
                e[i] = k - 1
                terms[tuple(e)] = c * k
        return MultiPoly(self._variables, terms)

    def substitute(self, mapping: Mapping[str, object]) -> "MultiPoly":
        """Replace variables by rationals or polynomials over the same variables.

        Substituted variables disappear from the result (their exponents
        become zero); the variable list itself is unchanged.
        """
        subs = {}
        for name, value in mapping.items():
            i = self._position(name)
            if isinstance(value, MultiPoly):
                subs[i] = self._coerce(value)
            else:
                subs[i] = MultiPoly.const(value, self._variables)
        if not subs:
            return self
        power_cache: dict[tuple[int, int], MultiPoly] = {}

        def power(i: int, k: int) -> MultiPoly:
            key = (i, k)
            if key not in power_cache:
                power_cache[key] = subs[i] ** k
            return power_cache[key]

        out = MultiPoly.zero(self._variables)
        for exps, c in self._terms.items():
            kept = tuple(0 if i in subs else e for i, e in enumerate(exps))
            term = MultiPoly(self._variables, {kept: c})
            for i, e in enumerate(exps):
                if e and i in subs:
                    term = term * power(i, e)
            out = out + term
        return out

    def embed(self, variables: Sequence[str]) -> "MultiPoly":
        """Re-express over a superset of the variables (explicit only)."""
        variables = tuple(variables)
        missing = [v for v in self.free_symbols if v not in variables]
        if missing:
            raise VariableMismatchError(f"cannot embed: {missing} not in target")
        idx = [variables.index(v) for v in self._variables if v in variables]
        src = [i for i, v in enumerate(self._variables) if v in variables]
        terms = {}
        for exps, c in self._terms.items():
            e = [0] * len(variables)
            for j, i in zip(idx, src):
                e[j] = exps[i]
            terms[tuple(e)] = c
        return MultiPoly(variables, terms)

    def rename(self, mapping: Mapping[str, str]) -> "MultiPoly":
        variables = tuple(mapping.get(v, v) for v in self._variables)
        return MultiPoly(variables, self._terms)

    # -- evaluation -----------------------------------------------------
    def _horner_plan(self):
        if self._horner is None:
            self._horner = _build_horner(
                {e: float(c) for e, c in self._terms.items()}, 0, len(self._variables)
            )
        return self._horner

    def evaluate(self, env: Mapping[str, object]):
        """Float (or numpy array) value; only free symbols need bindings."""
        missing = [v for v in self.free_symbols if v not in env]
        if missing:
            raise UnboundSymbolError(f"unbound symbols: {sorted(missing)}")
        values = [env.get(v, 0.0) for v in self._variables]
        return _eval_horner(self._horner_plan(), values)

    def evaluate_exact(self, env: Mapping[str, object]) -> Fraction:
        reduced = self.substitute({k: v for k, v in env.items() if k in self._index})
        if not reduced.is_constant():
            raise UnboundSymbolError(f"unbound symbols: {sorted(reduced.free_symbols)}")
        return reduced.constant_value()

    # -- printing -------------------------------------------------------
    def sorted_terms(self):
        """Terms in graded-lexicographic order, highest first."""
        return sorted(self._terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for exps, c in self.sorted_terms():
            mono = "*".join(
                v if e == 1 else f"{v}^{e}"
                for v, e in zip(self._variables, exps) if e
            )
            mag = abs(c)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{mag}*{mono}"
            else:
                body = str(mag)
            pieces.append(("-" if c < 0 else "+", body))
        sign, body = pieces[0]
        out = ("-" if sign == "-" else "") + body
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"MultiPoly({str(self)!r})"


def _build_horner(terms: dict, start: int, nvars: int):
    """Nested Horner plan: recurse on variables left to right."""
    if start == nvars or not terms:
        return sum(terms.values()) if terms else 0.0
    groups: dict[int, dict] = {}
    for exps, c in terms.items():
        groups.setdefault(exps[start], {})[exps] = c
    if set(groups) == {0}:
        return _build_horner(terms, start + 1, nvars)
    top = max(groups)
    coeffs = [_build_horner(groups[k], start + 1, nvars) if k in groups else 0.0
              for k in range(top + 1)]
    return (start, coeffs)


def _eval_horner(plan, values):
    if not isinstance(plan, tuple):
        return plan
    i, coeffs = plan
    x = values[i]
    acc = _eval_horner(coeffs[-1], values)
    for c in reversed(coeffs[:-1]):
        acc = acc * x + _eval_horner(c, values)
    return acc


# -- parsing -----------------------------------------------------------------

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Pow, ast.Div)


def parse_poly(text: str, variables: Sequence[str]) -> MultiPoly:
    """Parse ``"2*x2 - x1^2/12"`` style strings into a ``MultiPoly``.

    Accepts integers, rationals, ``+ - * ^`` (or ``**``), parentheses and
    division by constants.
    """
    variables = tuple(variables)
    cleaned = text.replace("−", "-").replace("^", "**").strip()
    if not cleaned:
        raise PolyParseError("empty polynomial string")
    try:
        tree = ast.parse(cleaned, mode="eval")
    except SyntaxError as exc:
        raise PolyParseError(f"cannot parse {text!r}: {exc.msg}") from None

    def walk(node) -> MultiPoly:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            value = node.value
            if isinstance(value, float):
                value = Fraction(repr(value))
            return MultiPoly.const(value, variables)
        if isinstance(node, ast.Name):
            if node.id not in variables:
                raise PolyParseError(f"unknown variable {node.id!r} in {text!r}")
            return MultiPoly.var(node.id, variables)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = walk(node.operand)
            return -inner if isinstance(node.op, ast.USub) else inner
        if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
            left = walk(node.left)
            right = walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                if not right.is_constant() or right.is_zero():
                    raise PolyParseError(f"division by non-constant in {text!r}")
                return left / right.constant_value()
            exp = right.constant_value() if right.is_constant() else None
            if exp is None or exp.denominator != 1 or exp < 0:
                raise PolyParseError(f"exponent must be a non-negative integer in {text!r}")
            return left ** int(exp)
        raise PolyParseError(f"unsupported syntax in {text!r}")

    return walk(tree)


# -- expression trees ----------------------------------------------------------


class ScalarField:
    """Base class for evaluable expression trees."""

    def __add__(self, other):
        return add(self, as_field(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(Const(-1.0), as_field(other)))

    def __rsub__(self, other):
        return add(as_field(other), mul(Const(-1.0), self))

    def __mul__(self, other):
        return mul(self, as_field(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def is_zero(self) -> bool:
        return False


@dataclass(frozen=True)
class Poly(ScalarField):
    poly: MultiPoly

    def is_zero(self) -> bool:
        return self.poly.is_zero()


@dataclass(frozen=True)
class Const(ScalarField):
    value: float

    def is_zero(self) -> bool:
        return self.value == 0


@dataclass(frozen=True)
class Sum(ScalarField):
    terms: tuple


@dataclass(frozen=True)
class Product(ScalarField):
    factors: tuple


@dataclass(frozen=True)
class Power(ScalarField):
    """``base ** exponent``; the exponent is a number or a MultiPoly in ``p``."""

    base: ScalarField
    exponent: object


@dataclass(frozen=True)
class Exp(ScalarField):
    arg: ScalarField


@dataclass(frozen=True)
class Cutoff(ScalarField):
    """``inner`` where ``guard > 0`` and zero elsewhere.

    Differentiation passes through unchanged, which is valid when ``inner``
    vanishes to first order on ``{guard = 0}`` (compactly supported bumps).
    """

    inner: ScalarField
    guard: ScalarField


@dataclass(frozen=True)
class VectorField:
    """Tuple of scalar fields.

    ``horizontal=True`` marks components taken along the frame directions
    ``X_1..X_N`` instead of the coordinate axes.
    """

    components: tuple
    horizontal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(as_field(c) for c in self.components))

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, k):
        return self.components[k]


def as_field(obj) -> ScalarField:
    if isinstance(obj, ScalarField):
        return obj
    if isinstance(obj, MultiPoly):
        return Poly(obj)
    if isinstance(obj, numbers.Real):
        return Const(float(obj))
    raise TypeError(f"cannot convert {type(obj).__name__} to a ScalarField")


def add(*fields: ScalarField) -> ScalarField:
    flat: list[ScalarField] = []
    for f in fields:
        flat.extend(f.terms if isinstance(f, Sum) else (f,))
    poly = None
    const = 0.0
    rest = []
    for f in flat:
        if isinstance(f, Poly):
            poly = f.poly if poly is None else poly + f.poly
        elif isinstance(f, Const):
            const += f.value
        else:
            rest.append(f)
    out = []
    if poly is not None and not poly.is_zero():
        out.append(Poly(poly))
    if const:
        out.append(Const(const))
    out.extend(rest)
    if not out:
        return Const(0.0)
    return out[0] if len(out) == 1 else Sum(tuple(out))


def mul(*fields: ScalarField) -> ScalarField:
    flat: list[ScalarField] = []
    for f in fields:
        flat.extend(f.factors if isinstance(f, Product) else (f,))
    poly = None
    const = 1.0
    rest = []
    for f in flat:
        if f.is_zero():
            return Const(0.0)
        if isinstance(f, Poly):
            poly = f.poly if poly is None else poly * f.poly
        elif isinstance(f, Const):
            const *= f.value
        else:
            rest.append(f)
    if poly is not None and poly.is_zero():
        return Const(0.0)
    out = []
    if const != 1.0:
        out.append(Const(const))
    if poly is not None and not (poly.is_constant() and poly.constant_value() == 1):
        out.append(Poly(poly))
    out.extend(rest)
    if not out:
        return Const(1.0)
    return out[0] if len(out) == 1 else Product(tuple(out))


def _exponent_constant(e):
    """Return the exponent as a Python number if it does not involve ``p``."""
    if isinstance(e, MultiPoly):
        return e.constant_value() if e.is_constant() else None
    return e


def power(base, exponent) -> ScalarField:
    base = as_field(base)
    if isinstance(exponent, MultiPoly):
        exponent = exponent if not exponent.is_constant() else exponent.constant_value()
    elif isinstance(exponent, float) and exponent.is_integer():
        exponent = Fraction(int(exponent))
    elif isinstance(exponent, numbers.Rational):
        exponent = Fraction(exponent)
    const = _exponent_constant(exponent)
    if const is not None:
        if const == 0:
            return Const(1.0)
        if const == 1:
            return base
        if isinstance(base, Poly) and isinstance(const, Fraction) \
                and const.denominator == 1 and const > 0:
            return Poly(base.poly ** int(const))
    return Power(base, exponent)


def exp(arg) -> ScalarField:
    return Exp(as_field(arg))


# -- evaluation ----------------------------------------------------------------


def _is_integral(value) -> bool:
    try:
        return float(value).is_integer()
    except (TypeError, ValueError):
        return False


def _exponent_value(e, env):
    if isinstance(e, MultiPoly):
        return float(e.evaluate(env))
    return float(e)


def _restrict(env: Mapping, mask: np.ndarray) -> dict:
    out = {}
    for k, v in env.items():
        if isinstance(v, np.ndarray) and v.shape == mask.shape:
            out[k] = v[mask]
        else:
            out[k] = v
    return out


def _evaluate(node: ScalarField, env: Mapping, memo: dict):
    key = id(node)
    if key in memo:
        return memo[key]
    if isinstance(node, Poly):
        val = node.poly.evaluate(env)
    elif isinstance(node, Const):
        val = node.value
    elif isinstance(node, Sum):
        val = 0.0
        for t in node.terms:
            val = val + _evaluate(t, env, memo)
    elif isinstance(node, Product):
        val = 1.0
        for f in node.factors:
            val = val * _evaluate(f, env, memo)
    elif isinstance(node, Power):
        base = _evaluate(node.base, env, memo)
        e = _exponent_value(node.exponent, env)
        if _is_integral(e):
            ie = int(e)
            base = np.asarray(base, dtype=float) if not np.isscalar(base) else float(base)
            if ie < 0:
                with np.errstate(divide="ignore"):
                    val = 1.0 / np.power(base, -ie)
            else:
                val = np.power(base, ie)
        else:
            if np.any(np.asarray(base) <= 0):
                bad = np.asarray(base).ravel()
                raise DomainError(
                    f"fractional power {e} of non-positive base "
                    f"(min base value {bad.min()!r})"
                )
            val = np.power(base, e)
    elif isinstance(node, Exp):
        val = np.exp(_evaluate(node.arg, env, memo))
    elif isinstance(node, Cutoff):
        guard = _evaluate(node.guard, env, memo)
        if np.ndim(guard) == 0:
            val = _evaluate(node.inner, env, {}) if guard > 0 else 0.0
        else:
            guard = np.asarray(guard)
            mask = guard > 0
            val = np.zeros(guard.shape)
            if mask.any():
                val[mask] = _evaluate(node.inner, _restrict(env, mask), {})
    else:
        raise TypeError(f"not a ScalarField: {node!r}")
    memo[key] = val
    return val


def evaluate(field, point: Mapping[str, object]):
    """Value of ``field`` at ``point`` (scalars or equally shaped arrays)."""
    field = as_field(field)
    val = _evaluate(field, point, {})
    if np.ndim(val) == 0:
        return float(val)
    return np.asarray(val, dtype=float)


# -- differentiation -------------------------------------------------------------


def differentiate(field, var: str) -> ScalarField:
    """Exact derivative by the sum, product and chain rules."""
    return _diff(as_field(field), var, {})


def _diff(node: ScalarField, var: str, memo: dict) -> ScalarField:
    key = id(node)
    if key in memo:
        return memo[key][1]
    if isinstance(node, Poly):
        out = Poly(node.poly.partial(var)) if var in node.poly.variables else Const(0.0)
    elif isinstance(node, Const):
        out = Const(0.0)
    elif isinstance(node, Sum):
        out = add(*(_diff(t, var, memo) for t in node.terms))
    elif isinstance(node, Product):
        parts = []
        for i, f in enumerate(node.factors):
            df = _diff(f, var, memo)
            if df.is_zero():
                continue
            others = node.factors[:i] + node.factors[i + 1:]
            parts.append(mul(df, *others))
        out = add(*parts) if parts else Const(0.0)
    elif isinstance(node, Power):
        db = _diff(node.base, var, memo)
        if db.is_zero():
            out = Const(0.0)
        else:
            e = node.exponent
            coeff = Poly(e) if isinstance(e, MultiPoly) else Const(float(e))
            out = mul(coeff, power(node.base, e - 1), db)
    elif isinstance(node, Exp):
        da = _diff(node.arg, var, memo)
        out = Const(0.0) if da.is_zero() else mul(node, da)
    elif isinstance(node, Cutoff):
        di = _diff(node.inner, var, memo)
        out = Const(0.0) if di.is_zero() else Cutoff(di, node.guard)
    else:
        raise TypeError(f"not a ScalarField: {node!r}")
    # keep node alive so id() stays unique for the lifetime of memo
    memo[key] = (node, out)
    return out


def poly_add(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    return a + b


def poly_mul(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    return a * b


def partial(q: MultiPoly, var: str) -> MultiPoly:
    return q.partial(var)


def polys(names: Iterable[str], variables: Sequence[str]) -> list[MultiPoly]:
    """Convenience: generator polynomials for several variable names."""
    return [MultiPoly.var(n, variables) for n in names]
