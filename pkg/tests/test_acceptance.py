"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every criterion records one PASS/FAIL line; the lines are printed in the
"acceptance criteria" section of the pytest summary.  Run just this module
with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from dnstrip import cli, scenarios, transverse, variational
from dnstrip.discretize import Grid, assemble
from dnstrip.eigensolve import lowest_eigenpairs, observed_order, rayleigh_quotient
from dnstrip.geometry import CurvatureProfile, StripGeometry, total_bending

PI = math.pi
THR1 = PI ** 2 / 4


def _solve(preset):
    sc = scenarios.parse_scenario(scenarios.preset(preset))
    return sc, scenarios.run_solve(sc)


def test_criterion_1_straight_threshold(record):
    t0 = time.perf_counter()
    sc, o = _solve("straight")
    fine = o.results["neumann"][-1]
    lam = fine.lambda1
    lam_d = o.results["dirichlet"][-1].lambda1
    dt = time.perf_counter() - t0
    ok = (abs(lam - THR1) <= 5e-3 and o.decision.verdict == "none detected"
          and o.levels[-1] == (480, 48) and dt < 30)
    record(1, ok, f"neumann lambda1 - pi^2/4 = {lam - THR1:.2e} (dirichlet {lam_d - THR1:.2e}), "
                  f"verdict {o.decision.verdict!r}", dt)
    assert abs(lam - THR1) <= 5e-3
    assert o.decision.verdict == "none detected"
    assert dt < 30


def test_criterion_2_prop1_existence(record):
    t0 = time.perf_counter()
    sc, o = _solve("prop1_bend")
    g = sc.geometry
    assert abs(total_bending(g.profile) + 0.64) < 1e-12
    cert = variational.certify(g, "prop1")
    dec = o.decision
    ext = dec.extrapolated[dec.basis]
    pencil = o.results["neumann"][-1].pencil
    trial = variational.default_trial(g, "prop1", sigma=1.0)
    lo, hi = trial.window()
    assert -pencil.grid.L <= lo and hi <= pencil.grid.L
    v = pencil.interpolate(lambda s, u: variational.trial_values(g, trial, s, u))
    rq = rayleigh_quotient(pencil, v)
    lam1 = o.results["neumann"][-1].lambda1
    dt = time.perf_counter() - t0
    ok_a = cert["certified"] and cert["q_value"] < 0
    ok_b = dec.verdict == "bound state" and dec.delta > 0 and ext < dec.threshold - dec.delta
    ok_c = rq >= lam1
    record(2, ok_a and ok_b and ok_c and dt < 120,
           f"(a) q = {cert['q_value']:.6f} at sigma {cert['sigma']:g}; "
           f"(b) extrapolated lambda1 {ext:.6f} < {dec.threshold - dec.delta:.6f}; "
           f"(c) RQ {rq:.6f} >= lambda1 {lam1:.6f}", dt)
    assert ok_a and ok_b and ok_c
    assert dt < 120


def test_criterion_3_prop3_nonexistence(record):
    t0 = time.perf_counter()
    sc, o = _solve("prop3_bend")
    g = sc.geometry
    gam = scenarios.sample_gamma(g)
    assert np.all(gam >= 0)
    rep = transverse.nonexistence_certificate(g.d, gam)
    lam = o.results["neumann"][-1].lambda1
    dt = time.perf_counter() - t0
    ok = rep.passed and lam >= THR1 - 5e-3 and o.decision.verdict == "none detected" and dt < 120
    record(3, ok, f"(a) certificate over {len(gam)} samples of d*gamma in "
                  f"[0, {g.d * gam.max():.2f}]: {'passed' if rep.passed else 'failed'}; "
                  f"(b) neumann lambda1 - pi^2/4 = {lam - THR1:.2e}; verdict {o.decision.verdict!r}",
           dt)
    assert rep.passed
    assert lam >= THR1 - 5e-3
    assert o.decision.verdict == "none detected"
    assert dt < 120


def test_criterion_4_inequality_constants(record):
    t0 = time.perf_counter()
    r0 = float(transverse.odhad_rhs(0.0))
    r1 = float(transverse.odhad_rhs(2.0 / 3.0))
    dt = time.perf_counter() - t0
    e1 = abs(r1 - 2.0) / 2.0
    ok = r0 == 0.0 and e1 <= 1e-12 and 2.0 < PI ** 2 / 4 and dt < 1
    record(4, ok, f"R(0) = {r0!r}, R(2/3) = {r1!r} (rel err {e1:.1e}), 2 < pi^2/4", dt)
    assert r0 == 0.0
    assert e1 <= 1e-12
    assert 2.0 < PI ** 2 / 4
    assert dt < 1


def test_criterion_5_lemma_sweep(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_mono = worst_gap = -math.inf
    for _ in range(200):
        d = rng.uniform(0.2, 3.0)
        a = rng.uniform(-3.0 / d, 10.0, size=2)
        a1, a2 = a.max(), a.min()
        l1 = transverse.robin_lambda0(d, a1).lambda0
        l2 = transverse.robin_lambda0(d, a2).lambda0
        gap = l1 + (a2 - a1) * transverse.boundary_ratio(d, a1)
        worst_mono = max(worst_mono, l2 - l1)
        worst_gap = max(worst_gap, l2 - gap)
    dt = time.perf_counter() - t0
    ok = worst_mono <= 1e-9 and worst_gap <= 1e-9 and dt < 5
    record(5, ok, f"200 triples: max violation of monotonicity {worst_mono:.2e}, "
                  f"of the gap bound {worst_gap:.2e}", dt)
    assert worst_mono <= 1e-9
    assert worst_gap <= 1e-9
    assert dt < 5


def test_criterion_6_bessel_vs_shooting(record):
    t0 = time.perf_counter()
    worst_rel = worst_res = 0.0
    for d in (0.5, 1.0, 2.0):
        for k in range(1, 10):
            gam = k / 10.0 / d
            b = transverse.bessel_lambda0(d, gam)
            s = transverse.shoot_lambda0(d, gam, check_tilde=False)
            worst_rel = max(worst_rel, abs(b.lambda0 - s.lambda0) / b.lambda0)
            f, _ = transverse.crossproduct(math.sqrt(b.lambda0) / gam, 1.0 - d * gam)
            worst_res = max(worst_res, abs(f))
    dt = time.perf_counter() - t0
    ok = worst_rel <= 1e-8 and worst_res <= 1e-10 and dt < 10
    record(6, ok, f"27 cases: max relative disagreement {worst_rel:.1e}, "
                  f"max cross-product residual {worst_res:.1e}", dt)
    assert worst_rel <= 1e-8
    assert worst_res <= 1e-10
    assert dt < 10


def test_criterion_7_counterexample(record):
    t0 = time.perf_counter()
    sc, o = _solve("counterexample")
    g = sc.geometry
    bend = total_bending(g.profile)
    t = variational.default_trial(g, "counterexample", sigma=1.0)
    q = variational.eval_q(g, t)
    s1, s2, s3, _ = t.breaks
    # ||phi'||^2: cubic ramp 6/(5 (s3 - s2)) plus the left envelope tail
    neg = variational._gamma_integral(g.profile, s1, s2)
    closed = 6.0 / (5.0 * (s3 - s2)) + t.envelope_energy + neg / g.d
    dec = o.decision
    dt = time.perf_counter() - t0
    ok = (abs(bend - 0.2) < 1e-12 and q < 0 and abs(q - closed) <= 1e-8
          and dec.verdict == "bound state" and dt < 120)
    record(7, ok, f"total bending {bend:+.3f}, q = {q:.10f} vs closed form {closed:.10f}; "
                  f"verdict {dec.verdict!r} (lambda1 {dec.extrapolated[dec.basis]:.4f} < "
                  f"threshold {dec.threshold:.4f})", dt)
    assert abs(bend - 0.2) < 1e-12
    assert q < 0 and abs(q - closed) <= 1e-8
    assert dec.verdict == "bound state"
    assert dt < 120


def test_criterion_8_prop2_certificate(record):
    t0 = time.perf_counter()
    sc, o = _solve("prop2_sbend")
    g = sc.geometry
    t = variational.default_trial(g, "prop2", sigma=1e-4, epsilon=None)
    bound, eps_star, _ = variational.prop2_bound(g, t)
    dec = o.decision
    dt = time.perf_counter() - t0
    ok = (bound < 0 and dec.verdict in ("bound state", "inconclusive")
          and o.L == 60 and o.levels[-1] == (960, 48) and dt < 300)
    record(8, ok, f"prop2_bound(sigma=1e-4, eps*={eps_star:.4f}) = {bound:.6f}; "
                  f"verdict {dec.verdict!r}", dt)
    assert bound < 0
    assert dec.verdict in ("bound state", "inconclusive")
    assert dt < 300


_C9 = {"straight": CurvatureProfile.zero(),
       "prop1_bend": CurvatureProfile.poly_bump(0.3, 2.0),
       "prop3_bend": CurvatureProfile.poly_bump(-0.3, 2.0)}


@lru_cache(maxsize=None)
def _c9_data():
    t0 = time.perf_counter()
    data = {}
    for name, prof in _C9.items():
        g = StripGeometry(1.0, prof)
        for bc in ("dirichlet", "neumann"):
            lam = {L: lowest_eigenpairs(assemble(g, Grid(L, 40 * int(L), 48, bc))).lambda1
                   for L in (12.0, 24.0)}
            levels = [lowest_eigenpairs(assemble(g, Grid(12.0, ns, nu, bc))).lambda1
                      for ns, nu in ((120, 12), (240, 24), (480, 48))]
            data[name, bc] = (lam, observed_order(*levels))
    return data, time.perf_counter() - t0


def test_criterion_9_bracketing_and_order(record):
    data, dt = _c9_data()
    bad = []
    orders = []
    for name in _C9:
        (ld, od), (ln, on) = data[name, "dirichlet"], data[name, "neumann"]
        for L in (12.0, 24.0):
            if ld[L] < ln[L]:
                bad.append(f"{name} L={L:g}: dirichlet < neumann")
        if ld[24.0] > ld[12.0] + 1e-12:
            bad.append(f"{name}: dirichlet value rose when L doubled")
        orders += [od, on]
    lo, hi = min(orders), max(orders)
    if not (1.7 <= lo and hi <= 2.3):
        bad.append(f"order outside [1.7, 2.3]")
    ok = not bad and dt < 300
    record(9, ok, "bracket dirichlet >= neumann, dirichlet non-increasing in L, "
                  f"observed orders in [{lo:.3f}, {hi:.3f}]" + (f"; {bad}" if bad else ""), dt)
    assert not bad
    assert dt < 300


def _neumann_literal():
    data, _ = _c9_data()
    moves = {name: data[name, "neumann"][0][24.0] - data[name, "neumann"][0][12.0] for name in _C9}
    return moves, [n for n, m in moves.items() if m < -1e-12]


def test_criterion_9_neumann_lower_bound_corrected():
    """What bracketing guarantees: lambda_N(2L) >= min(lambda_N(L), discrete threshold)."""
    data, _ = _c9_data()
    thr_h = data["straight", "neumann"][0][12.0]  # straight strip = discrete threshold
    for name in _C9:
        ln = data[name, "neumann"][0]
        assert ln[24.0] >= min(ln[12.0], thr_h) - 1e-12


@pytest.mark.xfail(strict=True, reason="without a bound state the neumann-truncated value "
                   "approaches the threshold from above, so it decreases as L grows")
def test_criterion_9_neumann_monotone_literal(record):
    moves, bad = _neumann_literal()
    detail = ", ".join(f"{n} {m:+.2e}" for n, m in moves.items())
    record(9, not bad, f"neumann non-decreasing in L (literal): change on doubling L: {detail}"
                       + (f"; decreases for {bad}" if bad else ""), 0.0)
    assert not bad


def test_criterion_10_determinism(record, tmp_path):
    t0 = time.perf_counter()
    same = []
    for preset in ("straight", "prop1_bend", "prop3_bend"):
        blobs = []
        for run in range(2):
            out = tmp_path / f"{preset}_{run}"
            assert cli.main(["solve", "--preset", preset, "--out", str(out)]) == 0
            blobs.append(((out / "eigenvalues.csv").read_bytes(),
                          (out / "report.json").read_bytes()))
        same.append(blobs[0] == blobs[1])
    dt = time.perf_counter() - t0
    record(10, all(same), "byte-identical eigenvalues.csv and report.json on rerun for "
                          "straight, prop1_bend, prop3_bend: " + str(same), dt)
    assert all(same)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
