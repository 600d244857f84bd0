"""Explicit trial functions for the strip functional and existence certificates.

The functional is

    q[Phi] = q0(Phi, Phi) - pi^2/(4 d^2) ||Phi||^2

with the weighted norm of measure (1 - u gamma) ds du.  Trial functions
factor as Phi(s, u) = sqrt(2/d) phi(s) sin(pi u / (2 d)), where phi is one
of three longitudinal profiles:

* ``prop1``: a plateau envelope (phi = 1 on |s - center| <= s0) whose
  tails are stretched by 1/sigma (external scaling);
* ``prop2``: the same, multiplied by (1 - epsilon gamma) on the plateau;
* ``counterexample``: 1 on (s1, s2), a cubic ramp down to 0 on (s2, s3),
  0 beyond, with a scaled envelope tail to the left of s1.

Any trial with q < 0 shows that the spectrum starts below the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate

from .geometry import CurvatureProfile, StripGeometry, total_bending

KINDS = ("prop1", "prop2", "counterexample")
SIGMA_GRID = tuple(10.0 ** -k for k in range(7))
EPS_FACTORS = (0.5, 0.75, 1.0, 1.25, 1.5)
TAIL_EXTENT = 8.0  # tail beyond this many widths is below 1e-20
QUAD_TOL = 1e-8

_GL_LO = np.polynomial.legendre.leggauss(24)
_GL_HI = np.polynomial.legendre.leggauss(48)


class InapplicableError(ValueError):
    """The scenario does not meet the hypotheses of the requested bound."""


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# envelope tail: T(t) = exp(-t^3 / (w^2 (t + w))), t >= 0.  T(0) = 1,
# T'(0) = T''(0) = 0, and T ~ exp(-t^2 / w^2) for t >> w.

def tail(t, w=1.0):
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    return np.exp(-t ** 3 / (w * w * (t + w)))


def dtail(t, w=1.0):
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    return -tail(t, w) * (2.0 * t ** 3 + 3.0 * w * t * t) / (w * w * (t + w) ** 2)


@lru_cache(maxsize=None)
def tail_energy(w=1.0):
    """int_0^inf T'(t)^2 dt for the unscaled tail."""
    val, _ = integrate.quad(lambda t: float(dtail(t, w)) ** 2, 0.0, TAIL_EXTENT * w,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


@dataclass(frozen=True)
class TrialSpec:
    kind: str
    s0: float = 1.0
    sigma: float = 1.0
    epsilon: Optional[float] = 0.0  # prop2 only; None means the optimal epsilon
    width: float = 1.0
    center: float = 0.0
    breaks: Optional[tuple] = None  # counterexample: (s1, s2, s3, s4)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"trial kind must be one of {KINDS}, got {self.kind!r}")
        if not 0 < self.sigma <= 1:
            raise ValueError("sigma must lie in (0, 1]")
        if self.width <= 0:
            raise ValueError("width must be > 0")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.kind == "counterexample":
            if self.breaks is None or len(self.breaks) != 4:
                raise ValueError("counterexample trial needs breaks (s1, s2, s3, s4)")
            b = self.breaks
            if not (b[0] < b[1] < b[2] <= b[3]):
                raise ValueError("counterexample breaks must satisfy s1 < s2 < s3 <= s4")
        elif self.s0 < 0:
            raise ValueError("s0 must be >= 0")

    @property
    def envelope_energy(self):
        """||phi'||^2 of the unscaled envelope (both tails, or one for counterexample)."""
        e = tail_energy(self.width)
        return e if self.kind == "counterexample" else 2.0 * e

    def tail_length(self):
        return TAIL_EXTENT * self.width / self.sigma

    def window(self):
        """Finite s-interval carrying the trial (outside it phi < 1e-20)."""
        if self.kind == "counterexample":
            s1, _, s3, _ = self.breaks
            return s1 - self.tail_length(), s3
        return self.center - self.s0 - self.tail_length(), self.center + self.s0 + self.tail_length()

    def breakpoints(self):
        if self.kind == "counterexample":
            s1, s2, s3, _ = self.breaks
            return [s1 - self.tail_length(), s1, s2, s3]
        a, b = self.center - self.s0, self.center + self.s0
        return [a - self.tail_length(), a, b, b + self.tail_length()]


def default_trial(g: StripGeometry, kind: str, sigma=1.0, epsilon=0.0, width=1.0) -> TrialSpec:
    """Trial matched to the profile: the plateau covers its support."""
    prof = g.profile
    if kind == "counterexample":
        if prof.kind != "two_bump":
            raise InapplicableError("counterexample trial needs a two_bump profile")
        b = tuple(float(x) for x in prof.params["breaks"])
        a1, a2 = prof.params["areas"]
        if a1 < 0 <= a2:
            breaks = b
        elif a2 < 0 <= a1:
            # mirror image: negative bump on the right; reflect the scenario instead
            raise InapplicableError("counterexample trial expects the negative bump first")
        else:
            raise InapplicableError("counterexample needs one negative and one positive bump")
        return TrialSpec(kind, sigma=sigma, width=width, breaks=breaks)
    if prof.kind == "zero":
        center, s0 = 0.0, 1.0
    else:
        lo, hi = prof.extent()
        center = 0.5 * (lo + hi)
        s0 = 0.5 * (hi - lo)
    return TrialSpec(kind, s0=s0, sigma=sigma, epsilon=epsilon, width=width, center=center)


def phi(t: TrialSpec, s, profile: CurvatureProfile | None = None):
    """Longitudinal trial profile and its derivative at ``s``."""
    s = np.asarray(s, dtype=float)
    sig, w = t.sigma, t.width
    if t.kind == "counterexample":
        s1, s2, s3, _ = t.breaks
        gap = s3 - s2
        x = np.clip((s - s2) / gap, 0.0, 1.0)
        ramp = 1.0 - 3.0 * x * x + 2.0 * x ** 3
        dramp = np.where((s > s2) & (s < s3), (-6.0 * x + 6.0 * x * x) / gap, 0.0)
        left = s < s1
        val = np.where(left, tail(sig * (s1 - s), w), ramp)
        der = np.where(left, -sig * dtail(sig * (s1 - s), w), dramp)
        return val, der
    r = s - t.center
    excess = np.abs(r) - t.s0
    out = excess > 0
    val = np.where(out, tail(sig * excess, w), 1.0)
    der = np.where(out, np.sign(r) * sig * dtail(sig * excess, w), 0.0)
    if t.kind == "prop2":
        if profile is None:
            raise ValueError("prop2 trial needs the curvature profile")
        eps = t.epsilon
        gam, dgam = profile.evaluate(s)
        val = np.where(out, val, 1.0 - eps * gam)
        der = np.where(out, der, -eps * dgam)
    return val, der


def trial_values(g: StripGeometry, t: TrialSpec, s, u):
    """Phi(s, u) = sqrt(2/d) phi(s) sin(pi u / 2d)."""
    t = _resolve(g, t)
    val, _ = phi(t, s, g.profile)
    d = g.d
    return math.sqrt(2.0 / d) * val * np.sin(0.5 * math.pi * np.asarray(u) / d)


def _resolve(g, t):
    if t.kind == "prop2" and t.epsilon is None:
        return replace(t, epsilon=prop2_norms(g, t)["eps_star"])
    return t


def _u_integrals(d, gam, rule):
    """Transverse integrals per s-sample for a Gauss-Legendre rule on (0, d).

    Returns (K, P, N): the kinetic weight (2/d) int sin^2/(1-u gamma),
    the potential weight (2/d) thr int (1-u gamma) cos(pi u/d) and the
    norm weight (2/d) int (1-u gamma) sin^2.
    """
    x, wq = rule
    u = 0.5 * d * (x + 1.0)
    wq = 0.5 * d * wq
    metric = 1.0 - np.outer(gam, u)
    sin2 = np.sin(0.5 * math.pi * u / d) ** 2
    cosu = np.cos(math.pi * u / d)
    thr = math.pi ** 2 / (4.0 * d * d)
    K = (2.0 / d) * (sin2 * wq / metric).sum(axis=1)
    # int_0^d cos(pi u/d) du = 0 exactly; only the gamma part needs quadrature
    P = -(2.0 / d) * thr * gam * (u * cosu * wq).sum()
    N = (2.0 / d) * ((metric * sin2) * wq).sum(axis=1)
    return K, P, N


def _profile_points(prof: CurvatureProfile):
    if prof.kind == "zero":
        return []
    if prof.kind == "two_bump":
        return [float(b) for b in prof.params["breaks"]]
    if prof.kind == "tabulated":
        return [float(x) for x in prof.params["s"]]
    lo, hi = prof.extent()
    pts = [lo, hi]
    if prof.kind in ("poly_bump", "s_bend"):
        pts.append(prof.params.get("center", 0.0))
    return pts


def _pieces(g: StripGeometry, t: TrialSpec):
    """Integration pieces as (edge, direction, x0, x1, inner points).

    On a piece s = edge + direction * x / scale with x in (x0, x1); the
    tails use scale = sigma so that the stretched envelope is integrated in
    its natural variable.
    """
    bp = t.breakpoints()
    prof_pts = _profile_points(g.profile)
    ext = TAIL_EXTENT * t.width
    out = []
    # left tail, inner pieces, right tail (counterexample has no right tail)
    out.append((bp[1], -1.0, t.sigma, 0.0, ext))
    inner = bp[1:-1] if t.kind != "counterexample" else bp[1:]
    for a, b in zip(inner[:-1], inner[1:]):
        out.append((a, 1.0, 1.0, 0.0, b - a))
    if t.kind != "counterexample":
        out.append((bp[-2], 1.0, t.sigma, 0.0, ext))
    pieces = []
    for edge, dirn, scale, x0, x1 in out:
        xs = [(p - edge) * dirn * scale for p in prof_pts]
        pts = sorted(x for x in xs if x0 < x < x1)
        pieces.append((edge, dirn, scale, x0, x1, pts))
    return pieces


@dataclass
class QuadResult:
    value: float
    norm: float
    error: float


def _integrate(g: StripGeometry, t: TrialSpec, tol=QUAD_TOL) -> QuadResult:
    g.require_metric()
    d = g.d
    prof = g.profile

    def integrand(x, piece, rule, what):
        edge, dirn, scale = piece[:3]
        s = np.atleast_1d(edge + dirn * x / scale)
        gam = prof.gamma(s)
        val, der = phi(t, s, prof)
        K, P, N = _u_integrals(d, gam, rule)
        if what == "q":
            f = der * der * K + val * val * P
        else:
            f = val * val * N
        return float(f[0]) / scale

    total = {"q": 0.0, "n": 0.0}
    err = 0.0
    for piece in _pieces(g, t):
        x0, x1, pts = piece[3], piece[4], piece[5]
        if x1 <= x0:
            continue
        for what in ("q", "n"):
            kw = dict(epsabs=1e-13, epsrel=1e-12, limit=400, points=pts or None)
            hi, e_outer = integrate.quad(integrand, x0, x1, args=(piece, _GL_HI, what), **kw)
            lo, _ = integrate.quad(integrand, x0, x1, args=(piece, _GL_LO, what), **kw)
            total[what] += hi
            if what == "q":
                err += e_outer + abs(hi - lo)
    if err > tol:
        raise QuadratureError(f"estimated quadrature error {err:.2e} exceeds {tol:.0e}")
    return QuadResult(total["q"], total["n"], err)


def eval_q(g: StripGeometry, t: TrialSpec) -> float:
    """q[Phi] for the trial ``t`` on strip ``g`` (absolute error <= 1e-8)."""
    return _integrate(g, _resolve(g, t)).value


def weighted_norm(g: StripGeometry, t: TrialSpec) -> float:
    """||Phi||^2 in L^2 with weight (1 - u gamma)."""
    return _integrate(g, _resolve(g, t)).norm


def _gamma_integral(prof: CurvatureProfile, a, b, fn=lambda g, dg: g):
    if prof.kind == "zero":
        return 0.0
    pts = [a, b]
    if prof.kind == "two_bump":
        pts += [x for x in prof.params["breaks"] if a < x < b]
    pts = sorted(pts)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, _ = integrate.quad(lambda s: float(fn(*prof.evaluate(s))), lo, hi,
                              epsabs=1e-14, epsrel=1e-13, limit=200)
        total += v
    return total


def prop1_bound(g: StripGeometry, t: TrialSpec) -> float:
    """Closed-form upper bound  sigma/(1-d gamma_+) ||phi'||^2 + (1/d) int_{plateau} gamma."""
    if t.kind != "prop1":
        raise InapplicableError("prop1_bound applies to prop1 trials")
    g.require_metric()
    prof = g.profile
    a, b = t.center - t.s0, t.center + t.s0
    if prof.kind != "zero":
        lo, hi = prof.extent()
        for x0, x1 in ((lo, a), (b, hi)):
            if x1 > x0:
                s = np.linspace(x0, x1, 2001)
                if np.any(prof.gamma(s) > 1e-14):
                    raise InapplicableError("gamma must be <= 0 outside the plateau")
    gplus = prof.gamma_plus
    bend = _gamma_integral(prof, a, b)
    return t.sigma / (1.0 - g.d * gplus) * t.envelope_energy + bend / g.d


def prop2_norms(g: StripGeometry, t: TrialSpec) -> dict:
    prof = g.profile
    if prof.kind == "zero":
        raise InapplicableError("zero curvature: ||gamma|| = 0")
    a, b = t.center - t.s0, t.center + t.s0
    lo, hi = prof.extent()
    if lo < a - 1e-12 or hi > b + 1e-12:
        raise InapplicableError("gamma must vanish outside the plateau")
    l2 = _gamma_integral(prof, a, b, lambda gm, dg: gm * gm)
    if l2 <= 1e-14:
        raise InapplicableError("zero curvature: ||gamma|| = 0")
    bend = total_bending(prof)
    if abs(bend) > 1e-10:
        raise InapplicableError(f"total bending {bend:.3g} is not zero")
    dl2 = _gamma_integral(prof, a, b, lambda gm, dg: dg * dg)
    l3 = _gamma_integral(prof, a, b, lambda gm, dg: abs(gm) ** 3)
    d = g.d
    quad = dl2 / (1.0 - d * prof.gamma_plus) + l3 / d
    lin = 2.0 * l2 / d
    return {
        "gamma_l2_sq": l2,
        "dgamma_l2_sq": dl2,
        "gamma_l3_cubed": l3,
        "quadratic_coeff": quad,
        "linear_coeff": lin,
        "eps_star": lin / (2.0 * quad),
    }


def prop2_bound(g: StripGeometry, t: TrialSpec):
    """Closed-form bound for the deformed trial.

    Returns ``(value, eps_star, sigma_max)`` where ``value`` is the bound at
    ``t.sigma`` and ``t.epsilon`` (or eps_star if that is None) and
    ``sigma_max`` is the largest sigma for which the bound at eps_star is
    negative.
    """
    if t.kind != "prop2":
        raise InapplicableError("prop2_bound applies to prop2 trials")
    g.require_metric()
    n = prop2_norms(g, t)
    eps = n["eps_star"] if t.epsilon is None else t.epsilon
    energy = t.envelope_energy
    value = t.sigma * energy + eps * eps * n["quadratic_coeff"] - eps * n["linear_coeff"]
    gain = n["linear_coeff"] ** 2 / (4.0 * n["quadratic_coeff"])
    return value, n["eps_star"], gain / energy


def _entry(g, t, res):
    return {
        "sigma": t.sigma,
        "epsilon": t.epsilon if t.kind == "prop2" else None,
        "q_value": res.value,
        "weighted_norm": res.norm,
        "quadrature_error": res.error,
        "upper_bound_on_inf_spectrum": g.threshold + res.value / res.norm,
    }


def certify(g: StripGeometry, kind: str, sigmas=SIGMA_GRID, width=1.0) -> dict:
    """Search the sigma grid (and epsilon near its optimum for prop2) for q < 0.

    Returns a JSON-ready report.  ``certified`` is False when no negative
    value was found; that is not a proof of absence.
    """
    base = default_trial(g, kind, width=width)
    norms = {"envelope_derivative_sq": base.envelope_energy,
             "total_bending": total_bending(g.profile) if g.profile.kind != "zero" else 0.0}
    eps_list = [0.0]
    if kind == "prop2":
        n = prop2_norms(g, base)
        norms.update({k: n[k] for k in ("gamma_l2_sq", "dgamma_l2_sq", "gamma_l3_cubed")})
        eps_list = [f * n["eps_star"] for f in EPS_FACTORS]
        norms["eps_star"] = n["eps_star"]
    trials = []
    first = None
    for sigma in sigmas:
        for eps in eps_list:
            t = replace(base, sigma=sigma, epsilon=eps)
            e = _entry(g, t, _integrate(g, t))
            trials.append(e)
            if first is None and e["q_value"] < 0:
                first = e
    best = min(trials, key=lambda e: e["q_value"])
    report = {
        "kind": kind,
        "certified": first is not None,
        "sigma": best["sigma"],
        "epsilon": best["epsilon"],
        "q_value": best["q_value"],
        "upper_bound_on_inf_spectrum": best["upper_bound_on_inf_spectrum"],
        "first_negative": first,
        "threshold": g.threshold,
        "trial": {"s0": base.s0, "center": base.center, "width": base.width,
                  "breaks": list(base.breaks) if base.breaks else None},
        "norms": norms,
        "trials": trials,
    }
    if first is None:
        report["note"] = "no certificate: q >= 0 on the whole search grid (not a disproof)"
    return report
