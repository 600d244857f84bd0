"""Spectral laboratory for curved planar strips with a Dirichlet inner edge
and a Neumann outer edge.

Modules:

* ``geometry``: curvature profiles, curve reconstruction, strip validity
* ``transverse``: cross-section eigenproblems and the non-existence certificate
* ``discretize``: Q1 finite-element pencil on the truncated strip
* ``eigensolve``: shift-invert eigenpairs and the bound-state decision
* ``variational``: explicit trial functions and existence certificates
* ``cli``: the ``dnstrip`` command line
"""

__version__ = "0.1.0"
