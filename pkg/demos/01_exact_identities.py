"""Exact polynomial identities behind the Hardy inequalities.

Everything here is rational arithmetic: a check either holds as a
polynomial identity or prints the residual that breaks it.
"""

# %% Frames and weights
from carnot_hardy.calculus import horizontal_gradient, p_sublaplacian_factored
from carnot_hardy.groups import builtin_frame, commutator
from carnot_hardy.hardy import NormalSpec, distance_function, z_weight_function
from carnot_hardy.symcheck import format_results, run_symcheck

heis, heis_desc = builtin_frame("heisenberg1")
engel, engel_desc = builtin_frame("engel")
print("Heisenberg X1 coefficients:", [str(c) for c in heis.vector(0)])
print("[X1, X2] =", [str(c) for c in commutator(heis, 1, 2)])

# %% The dilation weight <Z(x), n> with a symbolic normal
zn = z_weight_function(engel_desc)
print("Engel <Z, n> =", zn)

# %% Horizontal gradient of the half-space distance on H1
dist = distance_function(NormalSpec(None, "half_space", None), 3)
print("grad_X dist =", [str(g) for g in horizontal_gradient(heis, dist)])

# %% L_p in factored form: L_p w = |grad_X w|^(p-4) q
# On H1 the numerator q vanishes for both weights, so no L_p term appears.
for name, w in [("<Z,n>", z_weight_function(heis_desc)), ("dist", dist)]:
    print(f"H1 {name}: q =", p_sublaplacian_factored(heis, w).q_poly)

# On Engel the plain sub-Laplacian of each weight is a single monomial.
print("Engel L<Z,n> =", p_sublaplacian_factored(engel, zn).divergence_part)
engel_dist = distance_function(NormalSpec(None, "half_space", None), 4)
print("Engel L dist =", p_sublaplacian_factored(engel, engel_dist).divergence_part)

# %% The whole suite, as `hardy symcheck` prints it
print(format_results(run_symcheck()))
