#!/usr/bin/env python3
"""
Positive total bending does not rule out a bound state.

A narrow strip (d = 0.2) first bends the "wrong" way (area -0.5), then
back (area +0.7): the total bending is positive, yet a bound state
exists.  The trial function is 1 up to the first bump, falls off with a
cubic ramp across the gap and vanishes after it, so only the negative
bump contributes to the potential term.  Its q has a closed form:

    q = 6 / (5 * gap) + ||tail'||^2 - 0.5 / d
"""
from dnstrip import variational as va
from dnstrip.discretize import Grid, assemble
from dnstrip.eigensolve import lowest_eigenpairs
from dnstrip.geometry import CurvatureProfile, StripGeometry, total_bending

g = StripGeometry(0.2, CurvatureProfile.two_bump((-3, -1, 1, 3), (-0.5, 0.7)))
print(f"total bending {total_bending(g.profile):+.3f}, threshold {g.threshold:.6f}")

t = va.default_trial(g, "counterexample", sigma=1.0)
q = va.eval_q(g, t)
closed = 6 / (5 * 2.0) + t.envelope_energy - 0.5 / g.d
print(f"q (quadrature) = {q:.10f}")
print(f"q (closed form) = {closed:.10f}")
ub = g.threshold + q / va.weighted_norm(g, t)
print(f"=> inf spec <= {ub:.6f} < {g.threshold:.6f}")

r = lowest_eigenpairs(assemble(g, Grid(12.0, 480, 48, "dirichlet")), k=2)
print(f"\nfinite elements (dirichlet truncation, an upper bound): {r.eigenvalues}")
print(f"lowest eigenvalue sits {g.threshold - r.lambda1:.4f} below the threshold")
