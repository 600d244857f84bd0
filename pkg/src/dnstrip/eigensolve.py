"""Lowest eigenpairs of the pencil (A, M) and the bound-state decision.

Eigenpairs come from shift-invert Lanczos (ARPACK) around half the
threshold, with the shifted matrix factorized once by sparse LU.  The
bound-state decision compares Richardson-extrapolated eigenvalues with the
threshold using a margin tied to the measured discretization error.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
import scipy.sparse.linalg as spla

from .discretize import FormPencil

log = logging.getLogger(__name__)

CONVERGENCE_ORDER = 2.0  # Q1 elements


class EigensolveError(RuntimeError):
    pass


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    vectors: np.ndarray  # free-dof coordinates, one column per eigenpair
    threshold: float
    shift: float
    converged: bool
    pencil: Optional[FormPencil] = field(default=None, repr=False)

    @property
    def lambda1(self):
        return float(self.eigenvalues[0])

    def count_below(self, delta):
        return int(np.sum(self.eigenvalues < self.threshold - delta))

    def mode(self, i):
        """Node-value array (ns+1, nu+1) of eigenvector i."""
        return self.pencil.expand(self.vectors[:, i])

    def write_csv(self, path, delta):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "lambda", "residual", "below_threshold"])
            for i, (lam, res) in enumerate(zip(self.eigenvalues, self.residuals)):
                w.writerow([i, repr(float(lam)), repr(float(res)),
                            str(bool(lam < self.threshold - delta)).lower()])

    @property
    def modes(self):
        return [self.mode(i) for i in range(self.vectors.shape[1])]

    def write_modes_csv(self, path, index=0):
        """Mode ``index`` on the free nodes as ``s,u,value`` rows."""
        S, U = self.pencil.coordinates()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "u", "value"])
            for s, u, v in zip(S, U, self.vectors[:, index]):
                w.writerow([repr(float(s)), repr(float(u)), repr(float(v))])


def _factorize(p: FormPencil, sigma: float):
    for attempt in range(3):
        try:
            lu = spla.splu((p.A - sigma * p.M).tocsc())
            return lu, sigma
        except RuntimeError as exc:  # exactly singular: shift sits on an eigenvalue
            log.warning("factorization at shift %.6g failed (%s); perturbing", sigma, exc)
            sigma *= 1.0 - 1e-3 * (attempt + 1)
    raise EigensolveError("shifted matrix singular after 3 shift perturbations")


def m_inverse_norm(M, r):
    """sqrt(r^T M^{-1} r) with a conjugate-gradient solve (M is well conditioned)."""
    x, info = spla.cg(M, r, rtol=1e-13, atol=0.0, maxiter=2000)
    if info != 0:
        x = spla.spsolve(M.tocsc(), r)
    return math.sqrt(max(float(r @ x), 0.0))


def lowest_eigenpairs(p: FormPencil, k: int = 1, tol: float = 1e-8, seed: int = 0,
                      shift: float | None = None, maxiter: int | None = None) -> SpectralResult:
    """k smallest eigenpairs of A v = lambda M v via shift-invert Lanczos.

    The start vector is drawn from ``numpy.random.default_rng(seed)`` so the
    result is reproducible.  Pairs whose M^{-1}-norm residual exceeds
    ``tol`` make the result ``converged=False``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    n = p.n
    sigma = 0.5 * p.threshold if shift is None else shift
    lu, sigma = _factorize(p, sigma)
    op = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    ncv = min(n - 1, max(2 * k + 1, k + 2, 40))
    converged = True
    try:
        vals, vecs = spla.eigsh(p.A, k=k, M=p.M, sigma=sigma, OPinv=op, which="LM",
                                v0=v0, ncv=ncv, tol=0.0, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        log.warning("ARPACK did not converge; returning %d partial pairs", len(exc.eigenvalues))
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        converged = False
        if len(vals) == 0:
            raise EigensolveError("no eigenpair converged") from exc
    order = np.argsort(vals, kind="stable")
    vals = np.asarray(vals[order], dtype=float)
    vecs = np.asarray(vecs[:, order], dtype=float)
    res = np.empty(len(vals))
    for i in range(len(vals)):
        v = vecs[:, i]
        v = v / math.sqrt(float(v @ (p.M @ v)))
        # deterministic sign: largest-magnitude component positive
        j = int(np.argmax(np.abs(v)))
        if v[j] < 0:
            v = -v
        vecs[:, i] = v
        res[i] = m_inverse_norm(p.M, p.A @ v - vals[i] * (p.M @ v))
    if np.any(res > tol):
        converged = False
    return SpectralResult(vals, res, vecs, p.threshold, sigma, converged, p)


def rayleigh_quotient(p: FormPencil, v) -> float:
    v = np.asarray(v, dtype=float)
    if v.shape != (p.n,):
        raise ValueError(f"vector must have {p.n} free-dof entries")
    den = float(v @ (p.M @ v))
    if den == 0.0:
        raise ValueError("zero vector has no Rayleigh quotient")
    return float(v @ (p.A @ v)) / den


def richardson(coarse: float, fine: float, order: float = CONVERGENCE_ORDER) -> float:
    """Two-grid extrapolation for a grid ratio of 2."""
    return fine + (fine - coarse) / (2.0 ** order - 1.0)


def observed_order(l1: float, l2: float, l3: float) -> float:
    """Convergence order from three successively halved grids."""
    num, den = l1 - l2, l2 - l3
    if den == 0 or num / den <= 0:
        return float("nan")
    return math.log2(num / den)


@dataclass
class Decision:
    verdict: str  # "bound state" | "none detected" | "inconclusive"
    threshold: float
    delta: float
    extrapolated: dict
    corrections: dict
    fine: dict
    basis: str

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "threshold": self.threshold,
            "delta": self.delta,
            "extrapolated_lambda1": self.extrapolated,
            "extrapolation_correction": self.corrections,
            "fine_lambda1": self.fine,
            "basis": self.basis,
        }


def detect_bound_states(coarse: Mapping[str, SpectralResult],
                        fine: Mapping[str, SpectralResult]) -> Decision:
    """Decide whether a discrete eigenvalue lies below the threshold.

    ``coarse`` and ``fine`` map the truncation condition ("dirichlet",
    "neumann") to results on grids (ns, nu) and (2 ns, 2 nu).  A bound state
    is claimed from the dirichlet-truncated value when available (it bounds
    the infinite-strip eigenvalue from above); absence is claimed only from
    the neumann-truncated value (a lower bound).
    """
    bcs = [bc for bc in ("dirichlet", "neumann") if bc in coarse and bc in fine]
    if not bcs:
        raise ValueError("need matching coarse/fine results for at least one trunc_bc")
    thr = next(iter(fine.values())).threshold
    ext, corr, fin = {}, {}, {}
    for bc in bcs:
        lc, lf = coarse[bc].lambda1, fine[bc].lambda1
        ext[bc] = richardson(lc, lf)
        corr[bc] = ext[bc] - lf
        fin[bc] = lf
    floor = 1e-4 * thr

    def margin(bc):
        return max(2.0 * abs(corr[bc]), floor)

    upper = "dirichlet" if "dirichlet" in bcs else "neumann"
    delta_up = margin(upper)
    if ext[upper] < thr - delta_up:
        return Decision("bound state", thr, delta_up, ext, corr, fin, upper)
    if "neumann" in bcs:
        delta_lo = margin("neumann")
        if ext["neumann"] >= thr - delta_lo:
            return Decision("none detected", thr, delta_lo, ext, corr, fin, "neumann")
    delta = max(margin(bc) for bc in bcs)
    return Decision("inconclusive", thr, delta, ext, corr, fin, ",".join(bcs))
