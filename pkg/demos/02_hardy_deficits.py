"""Both sides of the Hardy inequality for concrete test functions.

The deficit ``lhs - rhs`` must be nonnegative up to quadrature error.
"""

# %% A single bump in the upper half-space of H1
from carnot_hardy.hardy import builtin_spec, evaluate_deficit, random_admissible_bumps
from carnot_hardy.numerics import QuadratureRule, make_bump

spec = builtin_spec("heisenberg1.halfspace", p=2.0)
f = make_bump("smooth_bump", center=(0.0, 0.0, 1.0), radii=0.25)
report = evaluate_deficit(spec, f)
print(report.to_json())

# %% Sweeping gamma on Engel, where the L_p term survives
# "optimal" is undefined here, so gamma is given explicitly.
rule = QuadratureRule(24, 2)
for gamma in (-1.0, -0.5, -0.25):
    engel = builtin_spec("engel.starshaped", p=2.0, gamma=gamma)
    g = random_admissible_bumps(engel, 1, seed=1)[0]
    r = evaluate_deficit(engel, g, rule)
    print(f"gamma {gamma:+.2f}: lhs {r.lhs:.4e} rhs {r.rhs:.4e} deficit {r.deficit:.3e}")

# %% Several exponents on the Grushin plane
for p in (1.5, 2.0, 3.0):
    grushin = builtin_spec("grushin.halfspace", p=p, gamma=-0.1)
    worst = min(evaluate_deficit(grushin, h).deficit
                for h in random_admissible_bumps(grushin, 10, seed=7))
    print(f"p={p}: smallest deficit over 10 bumps {worst:.4e}")
