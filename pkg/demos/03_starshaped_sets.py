"""Sampling <Z, n> on a level set to test starshapedness."""

# %%
from carnot_hardy.groups import DegenerateBoundaryError, builtin_frame, starshaped_check
from carnot_hardy.symbolic import parse_poly

frame, desc = builtin_frame("heisenberg1")
sets = {
    "unit ball": "x1^2 + x2^2 + x3^2 - 1",
    "gauge ball": "(x1^2 + x2^2)^2 + 16*x3^2 - 1",
    "off-centre ball": "(x1 - 2)^2 + x2^2 + x3^2 - 1",
}
for label, text in sets.items():
    verdict = starshaped_check(desc, parse_poly(text, frame.variables), samples=256, seed=0)
    line = f"{label:16s} {verdict.kind:20s} min <Z,n> = {verdict.min_value:+.4f}"
    if not verdict.ok:
        line += f"  witness {tuple(round(v, 4) for v in verdict.witness)}"
    print(line)

# %% A boundary where the gradient vanishes identically cannot be judged
try:
    starshaped_check(desc, parse_poly("x3^3", frame.variables), samples=16)
except DegenerateBoundaryError as exc:
    print("degenerate:", exc)
