"""Self-similar KP solutions a_j = c_j / (lambda (t - t0)) and the forced fixed point.

The profile c_j solves a two-term recurrence started from c_0 and c_1 = 1.
Too small a c_0 makes the sequence collapse, too large makes it explode; the
boundary value found by bisection gives a profile decaying like 2^(-j/3).
"""

import numpy as np

from dyadic import ForcingSpec, ModelParams, decay_ratio, forced_fixed_point, kp_residual, rhs, shoot_c0, sobolev_norm

res = shoot_c0(60, 1e-10)
prof = res.profile
print(f"c0* = {res.c0_star:.13f} after {res.refinements} bisections, bracket width {res.bracket_width:.1e}")
print(f"trusted shells: {prof.n}")
fit = decay_ratio(prof)
print(f"c_(j+1)/c_j -> {fit.ratio:.5f} (2^(-1/3) = {fit.expected:.5f})")
print(f"KP residual of the evaluated solution at t - t0 = 1: {kp_residual(prof, 1.0).max():.2e}")
print("first profile values:", np.array2string(np.asarray(prof.c[:8], dtype=float), precision=5))

print("\nforced steady state, f0 on shell 0")
for f0 in (0.5, 1.0, 2 ** (2 / 3)):
    fp = forced_fixed_point(f0, J=24)
    r = rhs(ModelParams(J=24), fp.abar, ForcingSpec(f0))
    print(f"  f0={f0:.4f}: K={fp.K:.6f}  max |rhs| on interior shells {np.abs(r[:-1]).max():.1e}")

fp = {J: forced_fixed_point(1.0, J=J).abar for J in (20, 40, 80, 160)}
for s in (0.3, 0.4):
    norms = "  ".join(f"J={J}: {sobolev_norm(a, s):8.3f}" for J, a in fp.items())
    print(f"  H^{s} partial norms  {norms}")
