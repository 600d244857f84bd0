#!/usr/bin/env python3
"""
Zero total bending still binds, weakly.

The S-bend gamma = A sin(pi s / s0) (1 - (s/s0)^2)^2 has total bending 0.
The flat trial gives q = sigma ||phi'||^2 > 0, so the plateau is deformed
to 1 - eps*gamma.  The gain is linear in eps and the cost quadratic, so a
small eps at the optimum eps* wins once sigma is small.  The bound state
is shallow and needs a long box (L = 60) to resolve.
"""
from dnstrip import variational as va
from dnstrip.discretize import Grid, assemble
from dnstrip.eigensolve import detect_bound_states, lowest_eigenpairs
from dnstrip.geometry import CurvatureProfile, StripGeometry, total_bending

g = StripGeometry(1.0, CurvatureProfile.s_bend(0.3, 2.0))
print(f"total bending {total_bending(g.profile):+.2e}")

base = va.default_trial(g, "prop2", sigma=0.01, epsilon=None)
n = va.prop2_norms(g, base)
print(f"||gamma||^2 = {n['gamma_l2_sq']:.6f}, ||gamma'||^2 = {n['dgamma_l2_sq']:.6f}, "
      f"eps* = {n['eps_star']:.4f}")
for sigma in (0.1, 0.03, 0.01):
    t = va.default_trial(g, "prop2", sigma=sigma, epsilon=None)
    bound, _, smax = va.prop2_bound(g, t)
    print(f"  sigma = {sigma:4.2f}: q = {va.eval_q(g, t):+.6f}, bound {bound:+.6f} "
          f"(bound negative for sigma < {smax:.4f})")

print("\nfinite elements, L = 60:")
coarse, fine = {}, {}
for bc in ("dirichlet", "neumann"):
    coarse[bc] = lowest_eigenpairs(assemble(g, Grid(60.0, 480, 24, bc)), k=1)
    fine[bc] = lowest_eigenpairs(assemble(g, Grid(60.0, 960, 48, bc)), k=1)
dec = detect_bound_states(coarse, fine)
print(f"  extrapolated {dec.extrapolated}, threshold {dec.threshold:.8f}")
print(f"  verdict: {dec.verdict}")
