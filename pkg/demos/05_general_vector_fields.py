"""The divergence bound for an arbitrary horizontal vector field g.

int |grad_X f|^p >= int (div_X g - (p-1)|g|^(p/(p-1))) |f|^p
"""

# %%
from carnot_hardy.calculus import hardy_vector_field
from carnot_hardy.hardy import builtin_spec, general_divergence_bound
from carnot_hardy.numerics import QuadratureRule, make_bump
from carnot_hardy.symbolic import Const, MultiPoly, Poly, VectorField

spec = builtin_spec("heisenberg1.halfspace", p=2.0)
f = make_bump("smooth_bump", (0.3, -0.2, 1.0), (0.3, 0.3, 0.25))
rule = QuadratureRule(16, 2)

# %% g built from the distance weight recovers the Hardy inequality
for tau in (0.5, 1.0, 2.0):
    g = hardy_vector_field(spec.frame, spec.weight, 2.0, -0.5 * tau)
    b = general_divergence_bound(spec.frame, g, f, 2.0, rule)
    print(f"tau {tau}: lhs {b.lhs:.4e} rhs {b.rhs:.4e} deficit {b.deficit:.3e}")

# %% Any smooth field works, e.g. g = (x1, x2)
x = [Poly(MultiPoly.var(v, spec.frame.variables)) for v in ("x1", "x2")]
b = general_divergence_bound(spec.frame, VectorField(tuple(x)), f, 2.0, rule)
print(f"g = (x1, x2): deficit {b.deficit:.4e}")
b = general_divergence_bound(spec.frame, VectorField((Const(0.0), Const(0.0))), f, 2.0, rule)
print(f"g = 0: rhs {b.rhs}")
