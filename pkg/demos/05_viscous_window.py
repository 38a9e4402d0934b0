"""Dissipation versus the certificate threshold.

With dissipation nu lam^(2 gamma j) a_j and gamma < 1/3 a certificate still
exists, now with a positive threshold. Single-shell data well above it trips
the blow-up proxy almost at once; data at a tenth of it decays quietly.
"""

import numpy as np

from dyadic import ModelParams, ShellState, StepControl, StopCondition, integrate, make_certificate, theta_window

lo, hi = theta_window(1.0, 0.25)
print(f"weights w = 2^(-theta) with theta in ({lo:.4f}, {hi:.4f}) are admissible at s = 1, gamma = 1/4")

cert = make_certificate(1.0, 0.25, w=2**1.1)
print(f"certificate at theta = -1.1: C1={cert.C1:.4f} C2={cert.C2:.4f} threshold={cert.threshold:.3f}")

params = ModelParams(nu=1.0, gamma=0.25, J=24)
for frac in (1.5, 0.1):
    a0 = np.zeros(24)
    a0[0] = frac * cert.threshold
    stop = StopCondition(t_end=50.0, norm_cap=1e6, tail_cap=1e-2)
    traj = integrate(params, ShellState(0.0, a0), None, StepControl(rel_tol=1e-8), stop, sample_every=1e-2)
    print(f"a_0(0) = {frac} x threshold: {traj.termination} at t = {traj.t[-1]:.4g}, final energy {traj.energy[-1]:.3e}")
