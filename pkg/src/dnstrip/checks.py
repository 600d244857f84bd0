"""Self-check suite behind ``dnstrip validate``.

Each check returns ``(passed, detail)``.  Checks are grouped so that
``--filter`` can select a subset by group or name substring.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import bessel, transverse, variational
from .discretize import Grid, assemble
from .eigensolve import lowest_eigenpairs, observed_order
from .geometry import CurvatureProfile, StripGeometry, reconstruct_curve, total_bending

PI = math.pi


@dataclass
class CheckResult:
    group: str
    name: str
    passed: bool
    detail: str
    seconds: float


def check_bessel_zeros(table=None):
    worst = 0.0
    for name, ref in bessel.REFERENCE_ZEROS.items():
        got = bessel.first_zeros(name, len(ref), table)
        if len(got) != len(ref):
            return False, f"{name}: found {len(got)} zeros, expected {len(ref)}"
        worst = max(worst, max(abs(a - b) / b for a, b in zip(got, ref)))
    return worst <= 1e-12, f"max relative zero error {worst:.2e} (limit 1e-12)"


def check_bessel_wronskian(table=None):
    # J1 Y0 - J0 Y1 = 2 / (pi x)
    x = np.geomspace(0.05, 200.0, 400)
    j0, j1, y0, y1 = bessel.bessel_all(x, table)
    err = np.max(np.abs((j1 * y0 - j0 * y1) * PI * x / 2.0 - 1.0))
    return err <= 1e-12, f"max relative Wronskian defect {err:.2e} (limit 1e-12)"


def check_robin_limits():
    d = 1.3
    neu = transverse.robin_lambda0(d, 0.0).lambda0
    dirl = transverse.robin_lambda0(d, 1e12).lambda0
    e1 = abs(neu / (PI ** 2 / (4 * d * d)) - 1)
    e2 = abs(dirl / (PI ** 2 / (d * d)) - 1)
    return e1 <= 1e-12 and e2 <= 1e-9, f"alpha=0 rel err {e1:.1e}, alpha=1e12 rel err {e2:.1e}"


def check_lemma_sweep(n=200, seed=12345):
    rng = np.random.default_rng(seed)
    worst_mono = worst_gap = -math.inf
    for _ in range(n):
        d = rng.uniform(0.2, 3.0)
        a = rng.uniform(-0.9 / d, 5.0, size=2)
        a1, a2 = max(a), min(a)
        l1 = transverse.robin_lambda0(d, a1).lambda0
        l2 = transverse.robin_lambda0(d, a2).lambda0
        worst_mono = max(worst_mono, l2 - l1)
        worst_gap = max(worst_gap, l2 - transverse.lemma_gap_bound(d, a1, a2))
    ok = worst_mono <= 1e-9 and worst_gap <= 1e-9
    return ok, f"{n} triples: max l0(a2)-l0(a1) {worst_mono:.2e}, max gap violation {worst_gap:.2e}"


def check_bessel_vs_shooting():
    worst_rel = worst_res = 0.0
    for d in (0.5, 1.0, 2.0):
        for t in np.arange(1, 10) / 10.0:
            gam = t / d
            b = transverse.bessel_lambda0(d, gam)
            s = transverse.shoot_lambda0(d, gam, check_tilde=False)
            worst_rel = max(worst_rel, abs(b.lambda0 - s.lambda0) / b.lambda0)
            worst_res = max(worst_res, b.residual)
    ok = worst_rel <= 1e-8 and worst_res <= 1e-10
    return ok, f"27 cases: max rel disagreement {worst_rel:.2e}, max residual {worst_res:.2e}"


def check_odhad_endpoints():
    r0 = float(transverse.odhad_rhs(0.0))
    r1 = float(transverse.odhad_rhs(2.0 / 3.0))
    ok = r0 == 0.0 and abs(r1 / 2.0 - 1.0) <= 1e-12 and 2.0 < PI ** 2 / 4
    return ok, f"R(0) = {r0!r}, R(2/3) = {r1!r}, pi^2/4 = {PI ** 2 / 4:.6f}"


def check_nonexistence_certificate():
    rep = transverse.nonexistence_certificate(1.0, np.linspace(0.0, 0.95, 20))
    return rep.passed, f"d=1, 20 samples of d*gamma in [0, 0.95]: {rep.verdict}"


def check_total_bending():
    p = CurvatureProfile.poly_bump(0.3, 2.0)
    tb = total_bending(p)
    ok = abs(tb + 0.64) <= 1e-12
    return ok, f"poly_bump c=0.3, s0=2: total bending {tb!r} (expect -0.64)"


def check_circle_closure():
    r = 2.0
    p = CurvatureProfile.tabulated([0.0, 2 * PI * r], [1 / r, 1 / r])
    c = reconstruct_curve(p, (0.0, 2 * PI * r), 2 * PI * r / 2000)
    gap = math.hypot(c.x[-1] - c.x[0], c.y[-1] - c.y[0])
    return gap <= 1e-10, f"closure gap {gap:.1e} for a circle of radius 2"


def _kron_oracle(L, ns, nu, d):
    hs, hu = 2 * L / ns, d / nu

    def one_d(n, h):
        k = sp.diags([-np.ones(n), 2 * np.ones(n + 1), -np.ones(n)], [-1, 0, 1]).tolil() / h
        m = sp.diags([np.ones(n), 4 * np.ones(n + 1), np.ones(n)], [-1, 0, 1]).tolil() * h / 6
        k[0, 0] = k[n, n] = 1 / h
        m[0, 0] = m[n, n] = h / 3
        return k.tocsr(), m.tocsr()

    ks, ms = one_d(ns, hs)
    ku, mu = one_d(nu, hu)
    A = sp.kron(ks, mu) + sp.kron(ms, ku)
    M = sp.kron(ms, mu)
    free = np.flatnonzero((np.arange((ns + 1) * (nu + 1)) % (nu + 1)) != 0)
    return A.tocsr()[free][:, free], M.tocsr()[free][:, free]


def check_straight_assembly():
    g = StripGeometry(1.0, CurvatureProfile.zero())
    p = assemble(g, Grid(3.0, 24, 8, "neumann"))
    A, M = _kron_oracle(3.0, 24, 8, 1.0)
    ea = abs(p.A - A).max()
    em = abs(p.M - M).max()
    return max(ea, em) <= 1e-14, f"max |A-A_kron| {ea:.1e}, |M-M_kron| {em:.1e}"


def check_straight_spectrum():
    g = StripGeometry(1.0, CurvatureProfile.zero())
    r = lowest_eigenpairs(assemble(g, Grid(6.0, 96, 16, "neumann")), k=1)
    err = abs(r.lambda1 - PI ** 2 / 4)
    return err <= 5e-3 and r.converged, f"lambda1 - pi^2/4 = {r.lambda1 - PI ** 2 / 4:.2e}"


def check_bracketing():
    g = StripGeometry(1.0, CurvatureProfile.poly_bump(0.3, 2.0))
    hs_cells = 8  # cells per unit length
    lam = {}
    for L in (6.0, 12.0):
        for bc in ("dirichlet", "neumann"):
            p = assemble(g, Grid(L, int(2 * L * hs_cells), 12, bc))
            lam[bc, L] = lowest_eigenpairs(p, k=1).lambda1
    ok = (lam["neumann", 6.0] <= lam["dirichlet", 6.0]
          and lam["neumann", 12.0] <= lam["dirichlet", 12.0]
          and lam["dirichlet", 12.0] <= lam["dirichlet", 6.0] + 1e-12
          and lam["neumann", 12.0] >= lam["neumann", 6.0] - 1e-12)
    return ok, ("L=6: [{:.6f}, {:.6f}]  L=12: [{:.6f}, {:.6f}]".format(
        lam["neumann", 6.0], lam["dirichlet", 6.0], lam["neumann", 12.0], lam["dirichlet", 12.0]))


def check_convergence_order():
    g = StripGeometry(1.0, CurvatureProfile.poly_bump(0.3, 2.0))
    vals = [lowest_eigenpairs(assemble(g, Grid(8.0, ns, nu, "neumann")), k=1).lambda1
            for ns, nu in ((64, 6), (128, 12), (256, 24))]
    order = observed_order(*vals)
    return 1.7 <= order <= 2.3, f"observed order {order:.3f}"


def check_variational_straight():
    g = StripGeometry(1.0, CurvatureProfile.zero())
    worst = 0.0
    for sigma in (1.0, 1e-3):
        t = variational.default_trial(g, "prop1", sigma=sigma)
        worst = max(worst, abs(variational.eval_q(g, t) - sigma * t.envelope_energy))
    return worst <= 1e-10, f"max |q - sigma ||phi'||^2| = {worst:.1e}"


def check_counterexample_closed_form():
    g = StripGeometry(0.2, CurvatureProfile.two_bump((-3, -1, 1, 3), (-0.5, 0.7)))
    t = variational.default_trial(g, "counterexample", sigma=1.0)
    q = variational.eval_q(g, t)
    closed = 6.0 / (5.0 * 2.0) + t.envelope_energy - 0.5 / 0.2
    return abs(q - closed) <= 1e-8 and q < 0, f"q = {q:.12f}, closed form {closed:.12f}"


def check_prop1_bound():
    g = StripGeometry(1.0, CurvatureProfile.poly_bump(0.3, 2.0))
    t = variational.default_trial(g, "prop1", sigma=0.05)
    q, b = variational.eval_q(g, t), variational.prop1_bound(g, t)
    return q <= b + 1e-8 and q < 0, f"q = {q:.10f} <= bound {b:.10f}"


CHECKS: list[tuple[str, str, Callable]] = [
    ("bessel", "bessel_zeros", check_bessel_zeros),
    ("bessel", "bessel_wronskian", check_bessel_wronskian),
    ("transverse", "robin_limits", check_robin_limits),
    ("lemma", "lemma_monotone_gap", check_lemma_sweep),
    ("transverse", "bessel_vs_shooting", check_bessel_vs_shooting),
    ("transverse", "odhad_endpoints", check_odhad_endpoints),
    ("transverse", "nonexistence_certificate", check_nonexistence_certificate),
    ("geometry", "total_bending", check_total_bending),
    ("geometry", "circle_closure", check_circle_closure),
    ("discretize", "straight_assembly", check_straight_assembly),
    ("eigensolve", "straight_spectrum", check_straight_spectrum),
    ("eigensolve", "bracketing", check_bracketing),
    ("eigensolve", "convergence_order", check_convergence_order),
    ("variational", "straight_closed_form", check_variational_straight),
    ("variational", "counterexample_closed_form", check_counterexample_closed_form),
    ("variational", "prop1_bound", check_prop1_bound),
]

_TABLE_AWARE = {"bessel_zeros", "bessel_wronskian"}


def run_checks(filter_: str | None = None, bessel_table=None) -> list[CheckResult]:
    out = []
    for group, name, fn in CHECKS:
        if filter_ and filter_ not in group and filter_ not in name:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn(bessel_table) if name in _TABLE_AWARE else fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(group, name, bool(ok), detail, time.perf_counter() - t0))
    return out


def corrupted_table(scale=1.0 + 1e-6):
    """Bessel node table with every J0 value perturbed (negative control)."""
    tab = bessel.node_table()
    tab[:, 1] *= scale
    return tab
