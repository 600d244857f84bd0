"""One-dimensional transverse eigenproblems on the cross-section [0, d].

For a fixed arc length the cross-section operator is

    h = -d^2/du^2 + gamma/(1 - u gamma) d/du,   chi(0) = 0, chi'(d) = 0,

acting in L^2((0, d), (1 - u gamma) du).  The substitution
psi = sqrt(1 - u gamma) chi maps it to

    h~ = -d^2/du^2 - gamma^2 / (4 (1 - u gamma)^2)

with the Robin condition psi'(d) + alpha psi(d) = 0,
alpha = gamma / (2 (1 - d gamma)).

This module finds the lowest eigenvalue three ways (Robin tangent equation
for the free Laplacian, Bessel cross-product equation, shooting) and builds
the pointwise non-existence certificate for non-negative curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from . import bessel

PI = math.pi


class TransverseError(ValueError):
    pass


class ShootingError(RuntimeError):
    """No sign change of the miss function below the search ceiling."""


@dataclass(frozen=True)
class RobinProblem:
    d: float
    alpha: float
    potential: Optional[object] = None  # callable V(u), bounded

    @classmethod
    def from_curvature(cls, d, gamma):
        return cls(d, robin_alpha(d, gamma))


@dataclass(frozen=True)
class TransverseEigen:
    lambda0: float
    method: str  # robin_tangent | bessel_crossproduct | shooting
    residual: float
    mode_samples: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


def robin_alpha(d: float, gamma: float) -> float:
    """Robin coefficient gamma / (2 (1 - d gamma)) of the transformed operator."""
    if d * gamma >= 1:
        raise TransverseError(f"d*gamma = {d * gamma} >= 1")
    return gamma / (2.0 * (1.0 - d * gamma))


# ---------------------------------------------------------------------------
# Robin problem for -psi'' = lambda psi


def robin_lambda0(d: float, alpha: float) -> TransverseEigen:
    """Lowest eigenvalue of -psi'' on (0, d), psi(0) = 0, psi'(d) + alpha psi(d) = 0."""
    if not d > 0:
        raise TransverseError("d must be > 0")
    a_d = alpha * d
    if a_d == -1.0:
        return TransverseEigen(0.0, "robin_tangent", 0.0)
    if alpha == 0.0:
        return TransverseEigen(PI ** 2 / (4 * d * d), "robin_tangent", 0.0)
    if a_d > -1.0:
        # x cos(x d) + alpha sin(x d) = 0
        def f(x):
            return x * math.cos(x * d) + alpha * math.sin(x * d)

        if alpha > 0:
            lo, hi = PI / (2 * d), PI / d
            # mirror of the case below: for tiny alpha f(pi/2d) can round negative
            if f(lo) <= 0:
                return TransverseEigen(lo * lo, "robin_tangent", abs(f(lo)))
        else:
            lo, hi = 0.0, PI / (2 * d)
            # f ~ x (1 + alpha d) near zero; start slightly off the trivial root
            lo = min(1e-8, hi * 1e-8) / d
            # float cos(pi/2) != 0: for |alpha| below ~1e-16 the root is pi/(2d) to rounding
            if f(hi) >= 0:
                return TransverseEigen(hi * hi, "robin_tangent", abs(f(hi)))
            if f(lo) <= 0:  # alpha d within rounding of -1: root below lo
                return TransverseEigen(lo * lo, "robin_tangent", abs(f(lo)))
        x = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        res = abs(f(x)) / max(1.0, abs(alpha), x)
        return TransverseEigen(x * x, "robin_tangent", res)

    # alpha < -1/d: negative eigenvalue -kappa^2, kappa + alpha tanh(kappa d) = 0
    def g(k):
        return k + alpha * math.tanh(k * d)

    k = optimize.brentq(g, 1e-12 / d, -alpha, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                        maxiter=500)
    res = abs(g(k)) / max(1.0, abs(alpha), k)
    return TransverseEigen(-k * k, "robin_tangent", res)


def boundary_ratio(d: float, alpha: float, lam: float | None = None) -> float:
    """psi0(d)^2 / ||psi0||^2 for the ground mode of the Robin problem.

    Closed form 2 lambda / (d (alpha^2 + lambda) + alpha), valid for either
    sign of lambda; near lambda = 0 the closed form cancels, so the mode is
    integrated directly there.
    """
    if lam is None:
        lam = robin_lambda0(d, alpha).lambda0
    if abs(lam) * d * d > 1e-2:
        return 2.0 * lam / (d * (alpha * alpha + lam) + alpha)
    # psi(u) = sin(sqrt(lam) u)/sqrt(lam), continued analytically through lam = 0
    nodes, weights = np.polynomial.legendre.leggauss(32)
    u = 0.5 * d * (nodes + 1.0)
    psi = _sinc_mode(u, lam)
    norm2 = 0.5 * d * float(np.dot(weights, psi * psi))
    return float(_sinc_mode(np.array([float(d)]), lam)[0] ** 2 / norm2)


def _sinc_mode(u, lam):
    u = np.asarray(u, dtype=float)
    z = lam * u * u
    out = np.empty_like(u)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = u[small] * (1 - zs / 6 + zs * zs / 120 - zs ** 3 / 5040)
    big = ~small
    if lam > 0:
        r = math.sqrt(lam)
        out[big] = np.sin(r * u[big]) / r
    else:
        r = math.sqrt(-lam)
        out[big] = np.sinh(r * u[big]) / r
    return out


def lemma_gap_bound(d: float, alpha1: float, alpha2: float) -> float:
    """Upper bound lambda0(alpha1) + (alpha2 - alpha1) psi0(d)^2/||psi0||^2 for lambda0(alpha2)."""
    if alpha1 < alpha2:
        raise TransverseError("lemma bound needs alpha1 >= alpha2")
    lam1 = robin_lambda0(d, alpha1).lambda0
    return lam1 + (alpha2 - alpha1) * boundary_ratio(d, alpha1, lam1)


# ---------------------------------------------------------------------------
# Bessel cross-product equation


def crossproduct(nu, r, table=None):
    """J0(nu) Y1(nu r) - Y0(nu) J1(nu r) and its derivative in nu."""
    j0a, j1a, y0a, y1a = bessel.bessel_all(nu, table)
    j0b, j1b, y0b, y1b = bessel.bessel_all(nu * r, table)
    f = j0a * y1b - y0a * j1b
    x = nu * r
    dj1b = j0b - j1b / x
    dy1b = y0b - y1b / x
    df = -j1a * y1b + j0a * r * dy1b + y1a * j1b - y0a * r * dj1b
    return f, df


def bessel_lambda0(d: float, gamma: float, table=None) -> TransverseEigen:
    """Lowest eigenvalue of h from the Bessel cross-product equation (gamma > 0).

    With nu = sqrt(lambda)/gamma and r = 1 - d gamma the eigenvalues solve
    J0(nu) Y1(nu r) - Y0(nu) J1(nu r) = 0.
    """
    if gamma <= 0:
        raise TransverseError(
            "bessel_lambda0 requires gamma > 0; use shoot_lambda0 for gamma <= 0"
        )
    if d * gamma >= 1:
        raise TransverseError(f"d*gamma = {d * gamma} >= 1 is outside the domain")
    r = 1.0 - d * gamma
    # consecutive roots are about pi/(d gamma) apart in nu; scan up to lambda = 4 pi^2/d^2
    step = 0.05 * PI / (d * gamma)
    nu_max = 2.0 * PI / (d * gamma)
    grid = np.arange(0.5 * step, nu_max + step, step)
    vals, _ = crossproduct(grid, r, table)
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if len(change) == 0:
        raise ShootingError(f"no root of the cross-product equation for d={d}, gamma={gamma}")
    i = change[0]
    a, b = float(grid[i]), float(grid[i + 1])
    fa = crossproduct(a, r, table)[0]
    for _ in range(80):
        m = 0.5 * (a + b)
        fm = crossproduct(m, r, table)[0]
        if fm == 0.0:
            a = b = m
            break
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    nu = 0.5 * (a + b)
    f, df = crossproduct(nu, r, table)
    for _ in range(5):
        if df == 0.0 or f == 0.0:
            break
        cand = nu - f / df
        if not (a <= cand <= b):
            break
        fc, dfc = crossproduct(cand, r, table)
        if abs(fc) > abs(f):
            break
        nu, f, df = cand, fc, dfc
    lam = float(nu * gamma) ** 2
    return TransverseEigen(lam, "bessel_crossproduct", float(abs(f)))


# ---------------------------------------------------------------------------
# Shooting

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def dopri45(f, t0, y0, t1, rtol=1e-12, atol=1e-14, h0=None, max_steps=100000):
    """Adaptive Dormand-Prince 5(4) integration of y' = f(t, y) from t0 to t1.

    ``y0`` may be an array of any shape (e.g. a batch of independent
    systems); the step size is shared and controlled by the worst component.
    Returns y(t1).
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    span = float(t1) - t
    h = h0 if h0 is not None else 1e-2 * span
    k = [None] * 7
    k[0] = f(t, y)
    steps = 0
    while t < t1:
        if steps > max_steps:
            raise ShootingError("step budget exhausted")
        steps += 1
        last = t + h >= t1
        if last:
            h = t1 - t
        for s in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[s]):
                if a:
                    acc += h * a * k[j]
            k[s] = f(t + _C[s] * h, acc)
        y_new = acc  # stage 7 argument is the 5th-order solution (FSAL)
        err = h * sum(e * kk for e, kk in zip(_E, k) if e)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.sqrt(np.mean((err / scale) ** 2)))
        if en <= 1.0:
            t = t1 if last else t + h
            y = y_new
            k[0] = k[6]
            fac = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
        else:
            fac = max(0.2, 0.9 * en ** -0.2)
        h *= fac
    return y


def _shoot_h(d, gamma, lam):
    """chi'(d) for chi(0) = 0, chi'(0) = 1 (lam may be an array)."""
    lam = np.asarray(lam, dtype=float)

    def rhs(u, y):
        return np.array([y[1], gamma / (1.0 - u * gamma) * y[1] - lam * y[0]])

    y0 = np.array([np.zeros_like(lam), np.ones_like(lam)])
    return dopri45(rhs, 0.0, y0, d)[1]


def _shoot_htilde(d, gamma, lam):
    """psi'(d) + alpha psi(d) for psi(0) = 0, psi'(0) = 1 (lam may be an array)."""
    lam = np.asarray(lam, dtype=float)
    alpha = robin_alpha(d, gamma)

    def rhs(u, y):
        w = 1.0 - u * gamma
        return np.array([y[1], -(gamma * gamma / (4 * w * w) + lam) * y[0]])

    y0 = np.array([np.zeros_like(lam), np.ones_like(lam)])
    y = dopri45(rhs, 0.0, y0, d)
    return y[1] + alpha * y[0]


def _first_root(miss, d, label, gamma):
    ceiling = 4 * PI ** 2 / (d * d)
    ks = np.linspace(0.0, 2 * PI / d, 81)[1:]
    lams = ks ** 2
    vals = miss(lams)
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if len(change) == 0:
        raise ShootingError(
            f"{label}: no sign change of the miss function below {ceiling:.6g} "
            f"(d={d}, gamma={gamma}, miss range [{vals.min():.3e}, {vals.max():.3e}])"
        )
    i = change[0]
    lo, hi = lams[i], lams[i + 1]
    if vals[i] == 0:
        return float(lo)
    return optimize.brentq(lambda x: float(miss(x)), lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def shoot_lambda0(d: float, gamma: float, check_tilde: bool = True,
                  tol: float = 1e-9) -> TransverseEigen:
    """Lowest eigenvalue of h by shooting on chi'(d) = 0.

    When ``check_tilde`` is set the unitarily equivalent Robin form h~ is
    shot as well and the two values must agree to ``tol`` (relative).
    """
    if not d > 0:
        raise TransverseError("d must be > 0")
    if d * max(gamma, 0.0) >= 1:
        raise TransverseError(f"d*gamma = {d * gamma} >= 1 is outside the domain")
    lam = _first_root(lambda l: _shoot_h(d, gamma, l), d, "h", gamma)
    miss = abs(float(_shoot_h(d, gamma, lam)))
    if check_tilde:
        lam_t = _first_root(lambda l: _shoot_htilde(d, gamma, l), d, "h~", gamma)
        if abs(lam_t - lam) > tol * max(abs(lam), 1.0):
            raise ShootingError(
                f"h and h~ shooting disagree: {lam!r} vs {lam_t!r} (d={d}, gamma={gamma})"
            )
    return TransverseEigen(float(lam), "shooting", miss)


def transverse_lambda0(d: float, gamma: float) -> TransverseEigen:
    """Method of record: closed forms where available, shooting otherwise."""
    if gamma == 0:
        return TransverseEigen(PI ** 2 / (4 * d * d), "robin_tangent", 0.0)
    if gamma > 0:
        return bessel_lambda0(d, gamma)
    return shoot_lambda0(d, gamma)


# ---------------------------------------------------------------------------
# Non-existence certificate for gamma >= 0


def odhad_rhs(t):
    """Right-hand side of the sufficient inequality pi^2/4 >= R(t), t = d gamma.

    R(t) = t^2 / (4 (1-t)^2) * (1 + a) / (2 - a) with a = t / (2 (1 - t)).
    """
    t = np.asarray(t, dtype=float)
    a = t / (2.0 * (1.0 - t))
    return t * t / (4.0 * (1.0 - t) ** 2) * (1.0 + a) / (2.0 - a)


SWITCH = 2.0 / 3.0


@dataclass
class CertificateSample:
    gamma: float
    d_gamma: float
    branch: str  # "inequality" or "bessel"
    rhs: Optional[float]
    lambda01: Optional[float]
    lambda0: Optional[float]
    margin: float
    passed: bool

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class NonexistenceReport:
    d: float
    threshold: float
    samples: list
    passed: bool
    verdict: str
    note: str = (
        "for d*gamma in [2/3, 1) the transverse eigenvalue is located directly by root "
        "scanning of the Bessel cross-product equation"
    )

    def as_dict(self):
        return {
            "d": self.d,
            "threshold": self.threshold,
            "passed": self.passed,
            "verdict": self.verdict,
            "note": self.note,
            "samples": [s.as_dict() for s in self.samples],
        }


def nonexistence_certificate(d: float, gamma_samples) -> NonexistenceReport:
    """Check pointwise that the lowest transverse eigenvalue stays above pi^2/(4 d^2)."""
    g = np.asarray(gamma_samples, dtype=float).ravel()
    if np.any(g < 0):
        raise TransverseError("certificate needs gamma >= 0 at every sample")
    if np.any(d * g >= 1):
        raise TransverseError("certificate needs d*gamma < 1 at every sample")
    thr = PI ** 2 / (4 * d * d)
    out = []
    for gamma in g:
        t = d * gamma
        if t < SWITCH:
            rhs = float(odhad_rhs(t))
            alpha = robin_alpha(d, gamma)
            lam01 = robin_lambda0(d, alpha).lambda0
            located = thr * (1 - 1e-12) <= lam01 < PI ** 2 / (d * d)
            ok = bool(PI ** 2 / 4 >= rhs and located)
            out.append(CertificateSample(float(gamma), float(t), "inequality", rhs, lam01, None,
                                         PI ** 2 / 4 - rhs, ok))
        else:
            lam0 = bessel_lambda0(d, gamma).lambda0
            ok = bool(lam0 >= thr - 1e-9)
            out.append(CertificateSample(float(gamma), float(t), "bessel", None, None, float(lam0),
                                         float(lam0 - thr), ok))
    passed = all(s.passed for s in out)
    verdict = ("no discrete spectrum below threshold" if passed
               else "certificate failed")
    return NonexistenceReport(d, thr, out, passed, verdict)
