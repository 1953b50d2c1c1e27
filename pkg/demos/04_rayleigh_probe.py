"""How close the constant ((p-1)/p)^p is to sharp.

The quotient int |grad_X f|^p / int W1 |f|^p never drops below the
constant. Profiles of the form w^((p-1)/p) B(log w / L) push it down
towards the constant as the window L widens.
"""

# %% Widening log-profiles on the Grushin half-plane
from carnot_hardy.hardy import builtin_spec
from carnot_hardy.numerics import make_log_profile
from carnot_hardy.numerics.rayleigh import (
    log_profile_family,
    minimize_quotient,
    rayleigh_quotient,
)

spec = builtin_spec("grushin.halfspace", p=2.0)
for L in (1.0, 2.0, 4.0, 8.0):
    f = make_log_profile(0, 1.0, 0.0, 0.0, L, [0.0], [1e12], alpha=0.5)
    print(f"L = {L:4.1f}: quotient {rayleigh_quotient(spec, f):.6f}")

# %% Letting Nelder-Mead pick the window
result = minimize_quotient(spec, log_profile_family(spec))
print(f"best {result.quotient:.6f} vs constant {result.constant:.6f} "
      f"after {result.evaluations} evaluations")
