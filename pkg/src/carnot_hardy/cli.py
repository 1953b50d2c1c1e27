"""``hardy`` command line: symcheck, verify, starshaped, rayleigh.

Exit codes: 0 ok, 1 check failed, 2 inadmissible test function, 3 not
starshaped, 4 degenerate boundary, 5 surviving L_p term, 64 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .groups import (
    DegenerateBoundaryError,
    FrameFormatError,
    SamplingError,
    load_frame,
    starshaped_check,
)
from .hardy import (
    BUILTIN_SPECS,
    HALF_SPACE,
    STARSHAPED,
    HardySpec,
    InadmissibleError,
    NormalSpec,
    OptimalGammaError,
    best_constant,
    evaluate_deficit,
    random_admissible_bumps,
)
from .numerics.bumps import admissible, make_bump
from .numerics.quadrature import NumericError, QuadratureRule
from .symbolic import PolyParseError, parse_poly

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INADMISSIBLE = 2
EXIT_VIOLATED = 3
EXIT_DEGENERATE = 4
EXIT_SURVIVING_LP = 5
EXIT_USAGE = 64

MODES = {"halfspace": HALF_SPACE, "starshaped": STARSHAPED}
GROUP_ALIASES = {"heisenberg": "heisenberg1", "h1": "heisenberg1"}


class ConfigError(ValueError):
    """Unparseable flag, config file entry or value."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- configuration -------------------------------------------------------------------


@dataclass
class RunConfig:
    group: str = "heisenberg1"
    mode: str = "halfspace"
    n: tuple | None = None
    d: Fraction = Fraction(0)
    p: float = 2.0
    gamma: object = "optimal"
    bump: str | None = None
    random: int = 0
    kind: str = "smooth_bump"
    m: int = 3
    order: int = 24
    subdivisions: int = 4
    seed: int = 0
    out: str | None = None
    levelset: str | None = None
    samples: int = 512
    family: str = "log_profile"
    max_iter: int = 500
    tol: float = 1e-6
    trace: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def rule(self) -> QuadratureRule:
        return QuadratureRule(self.order, self.subdivisions)


def _number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        pass
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"not a finite number: {text!r}")
    return Fraction(value)


def parse_vector(text: str) -> tuple:
    parts = [t for t in text.split(",") if t.strip()]
    if not parts:
        raise ConfigError("empty vector")
    return tuple(_number(t) for t in parts)


def parse_bump(text: str, dim: int):
    """``c1,...,cn:r`` (shared radius) or ``c1,...,cn:r1,...,rn``."""
    if ":" not in text:
        raise ConfigError(f"bump needs 'center:radius' form, got {text!r}")
    left, right = text.split(":", 1)
    center = [float(c) for c in parse_vector(left)]
    radii = [float(r) for r in parse_vector(right)]
    if len(center) != dim:
        raise ConfigError(f"bump center has {len(center)} entries, expected {dim}")
    if len(radii) == 1:
        radii = radii * dim
    if len(radii) != dim:
        raise ConfigError(f"bump radii have {len(radii)} entries, expected {dim}")
    if any(r <= 0 for r in radii):
        raise ConfigError("bump radii must be positive")
    return center, radii


_CONVERTERS = {
    "n": parse_vector,
    "d": _number,
    "p": lambda t: float(_number(t)),
    "gamma": lambda t: "optimal" if t.strip() == "optimal" else float(_number(t)),
    "random": int,
    "m": int,
    "order": int,
    "subdivisions": int,
    "seed": int,
    "samples": int,
    "max_iter": int,
    "tol": float,
}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` UTF-8 text; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_config(args: argparse.Namespace, keys) -> RunConfig:
    raw = {}
    if getattr(args, "config", None):
        raw.update(read_config_file(args.config))
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    cfg = RunConfig()
    known = set(RunConfig.__dataclass_fields__) - {"extra"}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, str) and key in _CONVERTERS:
            try:
                value = _CONVERTERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        setattr(cfg, key, value)
    cfg.group = GROUP_ALIASES.get(cfg.group, cfg.group)
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {sorted(MODES)}")
    if not cfg.p > 1:
        raise ConfigError("p must exceed 1")
    try:
        cfg.rule
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def build_spec(cfg: RunConfig) -> HardySpec:
    try:
        frame, desc = load_frame(cfg.group)
    except (FrameFormatError, PolyParseError, KeyError, OSError) as exc:
        raise ConfigError(f"cannot load group {cfg.group!r}: {exc}") from None
    n = cfg.n
    if n is None:
        key = f"{cfg.group}.{cfg.mode}"
        if key not in BUILTIN_SPECS:
            raise ConfigError("--n is required for this group and mode")
        n = BUILTIN_SPECS[key].n
    try:
        normal = NormalSpec(n, MODES[cfg.mode], cfg.d if cfg.mode == "halfspace" else None)
        return HardySpec(frame, normal, cfg.p, cfg.gamma, desc, frame.name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------------


def cmd_symcheck(args) -> int:
    from .groups import builtin_frame
    from .symcheck import format_results, run_symcheck

    frames = None
    if args.tamper:
        # FRAME:k:j:POLY replaces coefficient j of field k (1-based)
        try:
            name, k, j, poly = args.tamper.split(":", 3)
            frame, desc = builtin_frame(GROUP_ALIASES.get(name, name))
            frame = frame.with_coefficient(int(k) - 1, int(j) - 1,
                                           parse_poly(poly, frame.variables))
        except (ValueError, KeyError, IndexError, PolyParseError) as exc:
            raise ConfigError(f"bad --tamper value: {exc}") from None
        frames = {frame.name: (frame, desc)}
    results = run_symcheck(frames)
    print(format_results(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


VERIFY_KEYS = ("group", "mode", "n", "d", "p", "gamma", "bump", "random", "kind", "m",
               "order", "subdivisions", "seed", "out")


def cmd_verify(args) -> int:
    cfg = build_config(args, VERIFY_KEYS)
    spec = build_spec(cfg)
    try:
        spec.gamma_value()
    except OptimalGammaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SURVIVING_LP
    dim = spec.frame.dim_n
    if cfg.bump:
        center, radii = parse_bump(cfg.bump, dim)
        try:
            bumps = [make_bump(cfg.kind, center, radii, m=cfg.m)]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not admissible(bumps[0], spec):
            print("error: test-function support is not strictly inside the domain "
                  "(weight must exceed 1e-6 on the support)", file=sys.stderr)
            return EXIT_INADMISSIBLE
    elif cfg.random > 0:
        bumps = random_admissible_bumps(spec, cfg.random, cfg.seed, kind=cfg.kind)
    else:
        raise ConfigError("give --bump or --random N")
    reports = []
    try:
        for f in bumps:
            reports.append(evaluate_deficit(spec, f, cfg.rule))
    except InadmissibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    payload = [r.to_dict() for r in reports]
    text = json.dumps(payload if cfg.random > 0 and not cfg.bump else payload[0], indent=2)
    _emit(text + "\n", cfg.out)
    for r in reports:
        status = "ok" if r.passes() else "NEGATIVE"
        print(f"deficit {r.deficit:.6e} (error {r.quad_error_estimate:.1e}) {status}",
              file=sys.stderr)
    return EXIT_OK if all(r.passes() for r in reports) else EXIT_FAILED


def cmd_starshaped(args) -> int:
    cfg = build_config(args, ("group", "levelset", "samples", "seed"))
    try:
        frame, desc = load_frame(cfg.group)
    except (FrameFormatError, PolyParseError, KeyError, OSError) as exc:
        raise ConfigError(f"cannot load group {cfg.group!r}: {exc}") from None
    if desc is None:
        raise ConfigError(f"group {cfg.group!r} has no dilation weights")
    if not cfg.levelset:
        raise ConfigError("--levelset is required")
    try:
        phi = parse_poly(cfg.levelset, frame.variables)
    except PolyParseError as exc:
        raise ConfigError(f"bad levelset: {exc}") from None
    if not phi.free_symbols <= set(frame.coordinates):
        raise ConfigError("levelset may only use the coordinates x1..xn")
    try:
        verdict = starshaped_check(desc, phi, samples=cfg.samples, seed=cfg.seed)
    except (DegenerateBoundaryError, SamplingError) as exc:
        print(f"degenerate: {exc}")
        return EXIT_DEGENERATE
    print(f"verdict {verdict.kind}")
    print(f"min <Z,n> {verdict.min_value:.6e} over {verdict.points_checked} boundary points")
    if not verdict.ok:
        witness = ",".join(f"{v:.12g}" for v in verdict.witness)
        print(f"witness {witness} <Z,n> = {verdict.min_value:.6e}")
        return EXIT_VIOLATED
    return EXIT_OK


RAYLEIGH_KEYS = ("group", "mode", "n", "d", "p", "family", "bump", "kind", "m", "order",
                 "subdivisions", "max_iter", "tol", "trace", "seed")


def cmd_rayleigh(args) -> int:
    from .numerics.rayleigh import (
        SurvivingLpError,
        ellipsoid_family,
        log_profile_family,
        minimize_quotient,
    )

    cfg = build_config(args, RAYLEIGH_KEYS)
    spec = build_spec(cfg)
    constant = best_constant(cfg.p)
    print(f"constant {constant:.12g}")
    if not spec.lp_vanishes():
        print(f"error: L_p w does not vanish for {spec.group} {cfg.mode}; the gamma-dependent "
              "L_p term survives, so the gradient-weight quotient alone is not bounded by "
              "the constant", file=sys.stderr)
        return EXIT_SURVIVING_LP
    if cfg.family == "log_profile":
        family = log_profile_family(spec, profile=cfg.kind, m=cfg.m)
    elif cfg.family == "ellipsoid":
        if not cfg.bump:
            raise ConfigError("ellipsoid family needs --bump as the starting point")
        center, radii = parse_bump(cfg.bump, spec.frame.dim_n)
        family = ellipsoid_family(cfg.kind, center, radii, m=cfg.m)
    else:
        raise ConfigError("family must be log_profile or ellipsoid")
    try:
        result = minimize_quotient(spec, family, cfg.max_iter, cfg.tol, cfg.rule)
    except (InadmissibleError, SurvivingLpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    print(f"best {result.quotient:.12g}")
    print(f"gap {result.gap:.6e}")
    print(f"iterations {result.iterations} converged {str(result.converged).lower()}")
    if cfg.trace:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "quotient"])
        for it, q in result.trace:
            writer.writerow([it, repr(float(q))])
        Path(cfg.trace).write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------


def _add_spec_flags(sp):
    sp.add_argument("--config", help="key=value file; flags override it")
    sp.add_argument("--group", help="built-in group name or frame file")
    sp.add_argument("--mode", choices=sorted(MODES))
    sp.add_argument("--n", help="comma-separated normal vector")
    sp.add_argument("--d", help="half-space offset")
    sp.add_argument("--p", help="exponent, p > 1")
    sp.add_argument("--order", help="Gauss-Legendre points per axis")
    sp.add_argument("--subdivisions", help="cells per axis")
    sp.add_argument("--kind", choices=("smooth_bump", "poly_bump"))
    sp.add_argument("--m", help="poly_bump exponent")
    sp.add_argument("--seed")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hardy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("symcheck", help="exact identity suite")
    sp.add_argument("--tamper", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_symcheck)

    sp = sub.add_parser("verify", help="evaluate Hardy deficits")
    _add_spec_flags(sp)
    sp.add_argument("--gamma", help="real or 'optimal'")
    sp.add_argument("--bump", help="c1,...,cn:r or c1,...,cn:r1,...,rn")
    sp.add_argument("--random", help="number of seeded random admissible bumps")
    sp.add_argument("--out", help="JSON output path (stdout when omitted)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("starshaped", help="sample <Z,n> on a level set")
    sp.add_argument("--config")
    sp.add_argument("--group")
    sp.add_argument("--levelset", help="polynomial phi; the domain is phi < 0")
    sp.add_argument("--samples")
    sp.add_argument("--seed")
    sp.set_defaults(func=cmd_starshaped)

    sp = sub.add_parser("rayleigh", help="minimize the gradient-weight quotient")
    _add_spec_flags(sp)
    sp.add_argument("--family", choices=("log_profile", "ellipsoid"))
    sp.add_argument("--bump", help="starting bump for the ellipsoid family")
    sp.add_argument("--max-iter", dest="max_iter")
    sp.add_argument("--tol")
    sp.add_argument("--trace", help="CSV path for (iteration, quotient)")
    sp.set_defaults(func=cmd_rayleigh)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
