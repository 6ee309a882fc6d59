"""Norm pairs, duality maps, and dual-norm clipping.

Iterates live in an l_p space with p in (1, 2]; gradients live in the
conjugate l_r dual with r = p/(p-1) >= 2.  The dual norm is what makes
everything downstream work: it satisfies a 2-smoothness inequality with
constant C = r - 1, which the concentration bounds rely on.
"""

import numpy as np

from tailopt.spaces import NormedSpace

rng = np.random.default_rng(0)

# the dual of l_1.5 is l_3, with smooth constant 2
space = NormedSpace(dim=5, primal_exponent=1.5)
print(f"primal exponent {space.primal_exponent}, dual {space.dual_exponent}, "
      f"smooth constant {space.smooth_constant}")

# the duality map turns a gradient direction into a unit step direction
v = rng.standard_normal(5) * 3.0
d = space.duality_map(v)
print(f"||d(v)||_primal = {space.primal_norm(d):.12f}  (unit by construction)")
print(f"<v, d(v)>       = {space.pairing(v, d):.12f}")
print(f"||v||_dual      = {space.dual_norm(v):.12f}  (pairing is tight)")

# clipping rescales onto the dual ball without turning the direction
big = rng.standard_normal(5) * 100.0
clipped = space.clip_dual(big, 2.5)
print(f"\n||big||_dual = {space.dual_norm(big):.3f} -> "
      f"||clip||_dual = {space.dual_norm(clipped):.3f}")
print("direction preserved:",
      np.allclose(clipped / space.dual_norm(clipped),
                  big / space.dual_norm(big)))

# the 2-smoothness inequality of the dual norm holds with slack >= 0
x = rng.standard_normal((100_000, 5))
y = rng.standard_normal((100_000, 5))
gap = space.smooth_norm_gap(x, y)
print(f"\nsmooth-norm inequality slack over 1e5 pairs: "
      f"min {np.min(gap):.3e} (never below -1e-9)")

# ... which is exactly what fails for a sub-quadratic exponent: the same
# inequality written for l_1.5 itself has no valid constant, which is why
# primal exponents above 2 are rejected at construction
try:
    NormedSpace(dim=5, primal_exponent=3.0)
except ValueError as exc:
    print(f"\nNormedSpace(primal_exponent=3.0) -> ValueError: {exc}")
