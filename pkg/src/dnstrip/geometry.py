"""Curvature profiles, strip geometry and reconstruction of the reference curve.

A strip is fully described by its width ``d`` and the signed curvature
``gamma(s)`` of the reference curve as a function of arc length.  The
physical curve is derived output, used for reporting and for checking that
the strip does not overlap itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

KINDS = ("zero", "gaussian_bump", "poly_bump", "s_bend", "two_bump", "tabulated")

# integral of (1 - x^2)^2 over [-1, 1]
_BUMP_AREA = 16.0 / 15.0
# makes max |x (1 - x^2)^2| on [-1, 1] equal to one (attained at x^2 = 1/5)
_SBEND_NORM = 25.0 * math.sqrt(5.0) / 16.0
_BOUND_INFLATE = 1e-12


class GeometryError(ValueError):
    """Invalid profile parameters, out-of-domain queries or invalid strips."""


def _bump(x):
    """(1 - x^2)^2 on |x| < 1 and its derivative, zero outside."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    w = np.where(inside, 1.0 - x * x, 0.0)
    return w * w, np.where(inside, -4.0 * x * w, 0.0)


@dataclass(frozen=True)
class CurvatureProfile:
    """Signed curvature of the reference curve as a function of arc length.

    ``params`` depend on ``kind``:

    * ``zero``: none.
    * ``gaussian_bump``: ``amplitude``, ``width``, optional ``center``.
    * ``poly_bump``: ``c``, ``s0``, optional ``center``;
      gamma = -c (1 - ((s - center)/s0)^2)^2 on the support.
    * ``s_bend``: ``amplitude``, ``s0``, optional ``center``; odd profile
      amplitude * K * x (1 - x^2)^2 with x = (s - center)/s0 and K chosen
      so that max |gamma| = amplitude.
    * ``two_bump``: ``breaks`` = (s1, s2, s3, s4), ``areas`` = (a1, a2);
      polynomial bumps on (s1, s2) and (s3, s4) with the given integrals.
    * ``tabulated``: ``s``, ``gamma`` node arrays, optional ``zero_tail``.
      Interpolated with a monotone C1 cubic.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    support: tuple[float, float] = field(init=False)
    gamma_minus: float = field(init=False)
    gamma_plus: float = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(
                f"unknown profile kind {self.kind!r}; accepted: {', '.join(KINDS)}"
            )
        params = dict(self.params)
        object.__setattr__(self, "params", params)
        _check_params(self.kind, params)
        if self.kind == "tabulated":
            s = np.asarray(params["s"], dtype=float)
            g = np.asarray(params["gamma"], dtype=float)
            object.__setattr__(self, "_interp", PchipInterpolator(s, g, extrapolate=False))
            object.__setattr__(self, "_dinterp", self._interp.derivative())
        object.__setattr__(self, "support", _support(self.kind, params))
        gmin, gmax = self._extrema()
        object.__setattr__(self, "gamma_plus", gmax + _BOUND_INFLATE if gmax > 0 else 0.0)
        object.__setattr__(self, "gamma_minus", -gmin + _BOUND_INFLATE if gmin < 0 else 0.0)

    # -- convenience constructors -------------------------------------------------

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def gaussian_bump(cls, amplitude, width, center=0.0):
        return cls("gaussian_bump", {"amplitude": amplitude, "width": width, "center": center})

    @classmethod
    def poly_bump(cls, c, s0, center=0.0):
        return cls("poly_bump", {"c": c, "s0": s0, "center": center})

    @classmethod
    def s_bend(cls, amplitude, s0, center=0.0):
        return cls("s_bend", {"amplitude": amplitude, "s0": s0, "center": center})

    @classmethod
    def two_bump(cls, breaks, areas):
        return cls("two_bump", {"breaks": tuple(breaks), "areas": tuple(areas)})

    @classmethod
    def tabulated(cls, s, gamma, zero_tail=False):
        return cls("tabulated", {"s": list(map(float, s)), "gamma": list(map(float, gamma)),
                                 "zero_tail": bool(zero_tail)})

    # -- evaluation ---------------------------------------------------------------

    @property
    def compact(self) -> bool:
        return bool(np.all(np.isfinite(self.support)))

    def gamma(self, s):
        return self.evaluate(s)[0]

    def dgamma(self, s):
        return self.evaluate(s)[1]

    def evaluate(self, s):
        """Return (gamma(s), gamma'(s)) as arrays broadcast like ``s``."""
        s = np.asarray(s, dtype=float)
        p = self.params
        kind = self.kind
        if kind == "zero":
            z = np.zeros_like(s)
            return z, z.copy()
        if kind == "gaussian_bump":
            a, w = p["amplitude"], p["width"]
            x = (s - p.get("center", 0.0)) / w
            g = a * np.exp(-0.5 * x * x)
            return g, -g * x / w
        if kind == "poly_bump":
            s0 = p["s0"]
            b, db = _bump((s - p.get("center", 0.0)) / s0)
            return -p["c"] * b, -p["c"] * db / s0
        if kind == "s_bend":
            s0 = p["s0"]
            x = (s - p.get("center", 0.0)) / s0
            b, db = _bump(x)
            amp = p["amplitude"] * _SBEND_NORM
            return amp * x * b, amp * (b + x * db) / s0
        if kind == "two_bump":
            s1, s2, s3, s4 = p["breaks"]
            g = np.zeros_like(s)
            dg = np.zeros_like(s)
            for (lo, hi), area in zip(((s1, s2), (s3, s4)), p["areas"]):
                h = 0.5 * (hi - lo)
                amp = area / (h * _BUMP_AREA)
                b, db = _bump((s - 0.5 * (lo + hi)) / h)
                g += amp * b
                dg += amp * db / h
            return g, dg
        # tabulated
        lo, hi = p["s"][0], p["s"][-1]
        outside = (s < lo) | (s > hi)
        if np.any(outside) and not p.get("zero_tail", False):
            raise GeometryError(
                f"tabulated profile queried outside [{lo}, {hi}] without zero_tail"
            )
        g = np.where(outside, 0.0, np.nan_to_num(self._interp(s)))
        dg = np.where(outside, 0.0, np.nan_to_num(self._dinterp(s)))
        return g, dg

    def extent(self, tol=1e-16):
        """Finite interval outside which |gamma| <= tol (the support, if compact)."""
        if self.compact:
            return self.support
        if self.kind == "gaussian_bump":
            a, w = abs(self.params["amplitude"]), self.params["width"]
            c = self.params.get("center", 0.0)
            r = w * math.sqrt(2.0 * math.log(max(a / tol, 1.0)))
            return (c - r, c + r)
        raise GeometryError(f"profile {self.kind!r} has no finite extent")

    def _extrema(self):
        if self.kind == "zero":
            return 0.0, 0.0
        if self.kind == "tabulated":
            g = np.asarray(self.params["gamma"], dtype=float)
            lo, hi = float(g.min()), float(g.max())
            if self.params.get("zero_tail", False):
                lo, hi = min(lo, 0.0), max(hi, 0.0)
            return lo, hi
        a, b = self.extent()
        s = np.linspace(a, b, 4001)
        g = self.gamma(s)
        found = []
        for sign in (1.0, -1.0):
            i = int(np.argmax(sign * g))
            best = sign * g[i]
            if 0 < i < len(s) - 1:
                res = optimize.minimize_scalar(
                    lambda t: -sign * float(self.gamma(t)),
                    bracket=(s[i - 1], s[i], s[i + 1]),
                    method="golden",
                    tol=1e-12,
                )
                best = max(best, -res.fun)
            found.append(sign * best)
        hi, lo = found
        return min(lo, 0.0), max(hi, 0.0)


def _check_params(kind, p):
    def need(*names):
        for n in names:
            if n not in p:
                raise GeometryError(f"profile {kind!r} requires parameter {n!r}")

    if kind == "gaussian_bump":
        need("amplitude", "width")
        if p["width"] <= 0:
            raise GeometryError("gaussian_bump width must be > 0")
    elif kind in ("poly_bump", "s_bend"):
        need("c" if kind == "poly_bump" else "amplitude", "s0")
        if p["s0"] <= 0:
            raise GeometryError(f"{kind} s0 must be > 0")
    elif kind == "two_bump":
        need("breaks", "areas")
        b = tuple(map(float, p["breaks"]))
        if len(b) != 4 or not (b[0] < b[1] <= b[2] < b[3]):
            raise GeometryError("two_bump breaks must satisfy s1 < s2 <= s3 < s4")
        if len(p["areas"]) != 2:
            raise GeometryError("two_bump needs exactly two areas")
    elif kind == "tabulated":
        need("s", "gamma")
        s = np.asarray(p["s"], dtype=float)
        if s.ndim != 1 or len(s) < 2 or np.any(np.diff(s) <= 0):
            raise GeometryError("tabulated s must be strictly increasing with >= 2 nodes")
        if len(p["gamma"]) != len(s):
            raise GeometryError("tabulated s and gamma differ in length")


def _support(kind, p):
    c = p.get("center", 0.0)
    if kind == "zero":
        return (0.0, 0.0)
    if kind == "gaussian_bump":
        return (-math.inf, math.inf)
    if kind in ("poly_bump", "s_bend"):
        return (c - p["s0"], c + p["s0"])
    if kind == "two_bump":
        b = p["breaks"]
        return (float(b[0]), float(b[3]))
    s = p["s"]
    return (float(s[0]), float(s[-1])) if p.get("zero_tail", False) else (-math.inf, math.inf)


def eval_profile(p: CurvatureProfile, s: float) -> tuple[float, float]:
    """Curvature and its derivative at a single arc-length value."""
    g, dg = p.evaluate(float(s))
    return float(g), float(dg)


def total_bending(p: CurvatureProfile) -> float:
    """Integral of gamma over the real line."""
    if p.kind == "zero":
        return 0.0
    if p.kind == "tabulated" and not p.params.get("zero_tail", False):
        raise GeometryError("tabulated profile without zero tail is not integrable")
    a, b = p.extent()
    if p.kind == "two_bump":
        pieces = [tuple(p.params["breaks"][:2]), tuple(p.params["breaks"][2:])]
    elif p.kind == "tabulated":
        s = p.params["s"]
        pieces = list(zip(s[:-1], s[1:]))
    else:
        pieces = [(a, b)]
    total = 0.0
    for lo, hi in pieces:
        val, err = integrate.quad(p.gamma, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
        if err > 1e-10:
            raise GeometryError(f"total bending quadrature error {err:.1e} exceeds 1e-10")
        total += val
    return total


@dataclass(frozen=True)
class PlanarCurve:
    """Samples of the reconstructed reference curve."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    step: float

    def normal(self):
        return -np.sin(self.theta), np.cos(self.theta)

    def speed_defect(self):
        """Max deviation of |dGamma/ds| from one, by 4th-order central differences."""
        h = self.step
        if len(self.s) < 5:
            return 0.0

        def d4(f):
            return (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)

        return float(np.max(np.abs(np.hypot(d4(self.x), d4(self.y)) - 1.0)))

    def to_csv(self, path, profile: CurvatureProfile | None = None):
        g = profile.gamma(self.s) if profile is not None else np.full_like(self.s, np.nan)
        data = np.column_stack([self.s, self.x, self.y, self.theta, g])
        np.savetxt(path, data, delimiter=",", header="s,x,y,theta,gamma", comments="", fmt="%.17g")


def reconstruct_curve(p: CurvatureProfile, s_range, step: float) -> PlanarCurve:
    """Integrate theta' = gamma, Gamma' = (cos theta, sin theta) with classical RK4.

    Starts from Gamma(s_a) = (0, 0), theta(s_a) = 0.  The last step is
    shortened so that the final sample sits exactly at s_b.
    """
    if step <= 0:
        raise GeometryError("step must be > 0")
    sa, sb = map(float, s_range)
    n = max(1, int(math.ceil((sb - sa) / step - 1e-9)))
    s = np.linspace(sa, sb, n + 1)
    h = (sb - sa) / n

    y = np.zeros((n + 1, 3))  # theta, x, y

    def rhs(t, state):
        g = p.gamma(t)
        return np.array([g, math.cos(state[0]), math.sin(state[0])])

    for i in range(n):
        st = y[i]
        tm = 0.5 * (s[i] + s[i + 1])
        k1 = rhs(s[i], st)
        k2 = rhs(tm, st + h / 2 * k1)
        k3 = rhs(tm, st + h / 2 * k2)
        k4 = rhs(s[i + 1], st + h * k3)
        y[i + 1] = st + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return PlanarCurve(s=s, x=y[:, 1], y=y[:, 2], theta=y[:, 0], step=h)


@dataclass(frozen=True)
class StripValidity:
    metric_positive: bool
    non_self_intersecting: bool | None  # None means indeterminate (near miss)
    min_metric: float
    min_separation: float

    @property
    def ok(self):
        return self.metric_positive and self.non_self_intersecting is True


@dataclass(frozen=True)
class StripGeometry:
    """Strip of width ``d`` around the curve with curvature ``profile``.

    Dirichlet condition on the edge u = 0, Neumann on u = d.
    """

    d: float
    profile: CurvatureProfile

    def __post_init__(self):
        if not self.d > 0:
            raise GeometryError("strip width d must be > 0")

    @property
    def threshold(self) -> float:
        return math.pi ** 2 / (4.0 * self.d ** 2)

    @property
    def metric_floor(self) -> float:
        return 1.0 - self.d * self.profile.gamma_plus

    def require_metric(self):
        if self.metric_floor <= 0:
            raise GeometryError(
                f"d*gamma_plus = {self.d * self.profile.gamma_plus:.6g} >= 1: metric factor "
                "1 - u*gamma is not positive"
            )

    def report_range(self, margin=None):
        a, b = self.profile.extent() if self.profile.kind != "zero" else (0.0, 0.0)
        m = 2.0 * self.d if margin is None else margin
        return a - m, b + m


def validate_strip(g: StripGeometry, s_range=None, step=None, band=1e-9) -> StripValidity:
    """Check positivity of the metric and that the strip does not overlap itself.

    The strip piece over ``s_range`` is outlined by a closed polygon (inner
    edge, end cap, outer edge reversed, end cap) and all pairs of
    non-adjacent segments are tested for intersection.  Pairs closer than
    ``band`` without a proper crossing make the result indeterminate.
    """
    metric = g.metric_floor
    metric_ok = metric > 0
    if s_range is None:
        s_range = g.report_range()
    h = min(step if step is not None else 0.05 * g.d, 0.05 * g.d)
    curve = reconstruct_curve(g.profile, s_range, h)
    nx, ny = curve.normal()
    inner = np.column_stack([curve.x, curve.y])
    outer = inner + g.d * np.column_stack([nx, ny])
    ncap = max(2, int(math.ceil(g.d / h)))
    t = np.linspace(0.0, 1.0, ncap + 1)[1:-1, None]
    cap_b = inner[-1] + t * (outer[-1] - inner[-1])
    cap_a = outer[0] + t * (inner[0] - outer[0])
    ring = np.vstack([inner, cap_b, outer[::-1], cap_a])
    crossing, separation = _polygon_self_intersection(ring)
    if crossing:
        simple = False
    elif separation < band:
        simple = None
    else:
        simple = True
    return StripValidity(metric_ok, simple, metric, separation)


def _polygon_self_intersection(pts):
    """Return (proper crossing found, min distance between non-adjacent edges)."""
    p = pts
    q = np.roll(pts, -1, axis=0)
    n = len(p)
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)
    order = np.argsort(lo[:, 0], kind="stable")
    lo_s, hi_s = lo[order], hi[order]
    crossing = False
    min_sep = math.inf
    # sweep over x: only pairs whose x-extents overlap (within a tolerance) are tested
    pad = 1e-6
    starts = lo_s[:, 0]
    for k in range(n):
        i = order[k]
        j_end = np.searchsorted(starts, hi_s[k, 0] + pad, side="right")
        cand = order[k + 1:j_end]
        if len(cand) == 0:
            continue
        diff = np.abs(cand - i)
        cand = cand[(diff > 1) & (diff < n - 1)]
        cand = cand[(lo[cand, 1] <= hi[i, 1] + pad) & (hi[cand, 1] >= lo[i, 1] - pad)]
        if len(cand) == 0:
            continue
        a, b = p[i], q[i]
        c, d = p[cand], q[cand]
        o1 = _orient(a, b, c)
        o2 = _orient(a, b, d)
        o3 = _orient_many(c, d, a)
        o4 = _orient_many(c, d, b)
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
            crossing = True
        min_sep = min(min_sep, float(np.min(_seg_seg_distance(a, b, c, d))))
    return crossing, min_sep


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[:, 1] - a[1]) - (b[1] - a[1]) * (c[:, 0] - a[0])


def _orient_many(c, d, a):
    return (d[:, 0] - c[:, 0]) * (a[1] - c[:, 1]) - (d[:, 1] - c[:, 1]) * (a[0] - c[:, 0])


def _point_seg_distance(pt, a, b):
    ab = b - a
    denom = np.maximum(np.sum(ab * ab, axis=-1), 1e-300)
    t = np.clip(np.sum((pt - a) * ab, axis=-1) / denom, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(pt - proj, axis=-1)


def _seg_seg_distance(a, b, c, d):
    """Distance between segment ab and each segment of c->d (assumes no crossing)."""
    return np.minimum.reduce([
        _point_seg_distance(a[None, :], c, d),
        _point_seg_distance(b[None, :], c, d),
        _point_seg_distance(c, a[None, :], b[None, :]),
        _point_seg_distance(d, a[None, :], b[None, :]),
    ])
