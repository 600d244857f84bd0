import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from dnstrip import variational as va
from dnstrip.geometry import CurvatureProfile, StripGeometry

BUMP = StripGeometry(1.0, CurvatureProfile.poly_bump(0.3, 2.0))
STRAIGHT = StripGeometry(1.0, CurvatureProfile.zero())
SBEND = StripGeometry(1.0, CurvatureProfile.s_bend(0.3, 2.0))
CE = StripGeometry(0.2, CurvatureProfile.two_bump((-3, -1, 1, 3), (-0.5, 0.7)))

_GU = np.polynomial.legendre.leggauss(40)


def brute_q(g, t, n_s=4000):
    """q from its definition: s by piecewise Simpson, u by 40-point Gauss."""
    t = va._resolve(g, t)
    cuts = sorted(set(t.breakpoints()) | set(t.window()))
    if g.profile.kind == "two_bump":
        cuts = sorted(set(cuts) | set(g.profile.params["breaks"]))
    return sum(_brute_piece(g, t, a, b, n_s) for a, b in zip(cuts[:-1], cuts[1:]) if b > a)


def _brute_piece(g, t, a, b, n_s):
    d, thr = g.d, g.threshold
    s = np.linspace(a, b, n_s + 1)
    val, der = va.phi(t, s, g.profile)
    gam = g.profile.gamma(s)
    u = 0.5 * d * (_GU[0] + 1)
    wu = 0.5 * d * _GU[1]
    chi = math.sqrt(2 / d) * np.sin(math.pi * u / (2 * d))
    dchi = math.sqrt(2 / d) * math.pi / (2 * d) * np.cos(math.pi * u / (2 * d))
    w = 1 - np.outer(gam, u)
    dens = (np.outer(der ** 2, chi ** 2) / w + w * np.outer(val ** 2, dchi ** 2)
            - thr * w * np.outer(val ** 2, chi ** 2)) @ wu
    return integrate.simpson(dens, x=s)


def test_tail_shape():
    assert va.tail(0.0) == 1.0
    assert va.dtail(0.0) == 0.0
    h = 1e-4
    # second derivative at 0 vanishes: T(h) = 1 - O(h^3)
    assert abs(va.tail(h) - 1.0) < 2 * h ** 3
    t = np.linspace(0.01, 6, 50)
    fd = (va.tail(t + 1e-6) - va.tail(t - 1e-6)) / 2e-6
    assert np.allclose(va.dtail(t), fd, atol=1e-8)
    assert float(va.tail(va.TAIL_EXTENT)) < 1e-20


def test_tail_energy_scaling():
    # T(t; w) = T(t / w; 1)  =>  energy(w) = energy(1) / w
    e1 = va.tail_energy(1.0)
    for w in (0.5, 2.0, 3.0):
        assert va.tail_energy(w) == pytest.approx(e1 / w, rel=1e-11)
    t = np.linspace(0, va.TAIL_EXTENT, 200001)
    assert integrate.simpson(va.dtail(t) ** 2, x=t) == pytest.approx(e1, rel=1e-10)


def test_trialspec_validation():
    for kw in (dict(kind="nope"), dict(kind="prop1", sigma=0.0), dict(kind="prop1", sigma=1.5),
               dict(kind="prop1", width=0.0), dict(kind="prop2", epsilon=-1.0),
               dict(kind="prop1", s0=-1.0), dict(kind="counterexample"),
               dict(kind="counterexample", breaks=(0, 0, 1, 2))):
        with pytest.raises(ValueError):
            va.TrialSpec(**kw)


def test_phi_is_c1_across_plateau_edges():
    t = va.TrialSpec("prop1", s0=2.0, sigma=0.3, center=1.0)
    for edge in (-1.0, 3.0):
        lo, dlo = va.phi(t, edge - 1e-9)
        hi, dhi = va.phi(t, edge + 1e-9)
        assert abs(lo - hi) < 1e-12 and abs(dlo - dhi) < 1e-12


@given(st.floats(1e-6, 1.0), st.sampled_from([0.5, 1.0, 2.0]))
@settings(max_examples=25, deadline=None)
def test_straight_strip_q_is_envelope_energy(sigma, width):
    t = va.default_trial(STRAIGHT, "prop1", sigma=sigma, width=width)
    assert va.eval_q(STRAIGHT, t) == pytest.approx(sigma * t.envelope_energy, abs=1e-10)


@pytest.mark.parametrize("g, kind, sigma", [(BUMP, "prop1", 0.5), (BUMP, "prop1", 0.05),
                                            (SBEND, "prop2", 0.5), (CE, "counterexample", 1.0)])
def test_eval_q_matches_brute_force(g, kind, sigma):
    t = va.default_trial(g, kind, sigma=sigma, epsilon=None if kind == "prop2" else 0.0)
    assert va.eval_q(g, t) == pytest.approx(brute_q(g, t), abs=1e-7)


def test_prop1_q_is_affine_in_sigma():
    # gamma = 0 on the tails, so q(sigma) = sigma ||phi'||^2 + q_plateau
    q = [va.eval_q(BUMP, va.default_trial(BUMP, "prop1", sigma=s)) for s in (0.2, 0.1, 0.05)]
    e = va.default_trial(BUMP, "prop1").envelope_energy
    assert q[0] - q[1] == pytest.approx(0.1 * e, abs=1e-9)
    assert q[1] - q[2] == pytest.approx(0.05 * e, abs=1e-9)


def test_prop1_bound_holds_and_halving_sigma_keeps_sign():
    t = va.default_trial(BUMP, "prop1", sigma=0.05)
    q, b = va.eval_q(BUMP, t), va.prop1_bound(BUMP, t)
    assert q <= b + 1e-8 and q < 0
    t2 = va.default_trial(BUMP, "prop1", sigma=0.025)
    assert va.eval_q(BUMP, t2) < q


def test_prop1_bound_inapplicable():
    with pytest.raises(va.InapplicableError):
        va.prop1_bound(SBEND, va.default_trial(SBEND, "prop2"))
    narrow = va.TrialSpec("prop1", s0=0.5)
    pos = StripGeometry(1.0, CurvatureProfile.poly_bump(-0.3, 2.0))  # gamma > 0 off the plateau
    with pytest.raises(va.InapplicableError):
        va.prop1_bound(pos, narrow)


def test_prop2_norms_and_bound():
    t = va.default_trial(SBEND, "prop2", sigma=0.01, epsilon=None)
    n = va.prop2_norms(SBEND, t)
    assert n["eps_star"] == pytest.approx(n["linear_coeff"] / (2 * n["quadratic_coeff"]))
    assert n["linear_coeff"] == pytest.approx(2 * n["gamma_l2_sq"] / SBEND.d)
    value, eps, smax = va.prop2_bound(SBEND, t)
    assert eps == n["eps_star"]
    assert value < 0 and t.sigma < smax
    assert va.eval_q(SBEND, t) <= value + 1e-8
    # the bound is a quadratic in epsilon minimised at eps_star
    v_lo, _, _ = va.prop2_bound(SBEND, va.TrialSpec("prop2", **_same(t, epsilon=0.9 * eps)))
    v_hi, _, _ = va.prop2_bound(SBEND, va.TrialSpec("prop2", **_same(t, epsilon=1.1 * eps)))
    assert v_lo > value and v_hi > value


def _same(t, **kw):
    base = dict(s0=t.s0, sigma=t.sigma, epsilon=t.epsilon, width=t.width, center=t.center)
    base.update(kw)
    return base


def test_prop2_inapplicable():
    with pytest.raises(va.InapplicableError):
        va.prop2_norms(STRAIGHT, va.default_trial(STRAIGHT, "prop2"))
    with pytest.raises(va.InapplicableError):
        va.prop2_norms(BUMP, va.default_trial(BUMP, "prop2"))  # nonzero bending
    with pytest.raises(va.InapplicableError):
        va.prop2_bound(BUMP, va.default_trial(BUMP, "prop1"))


def test_counterexample_closed_form():
    t = va.default_trial(CE, "counterexample", sigma=1.0)
    q = va.eval_q(CE, t)
    closed = 6.0 / (5.0 * 2.0) + t.envelope_energy - 0.5 / 0.2
    assert q == pytest.approx(closed, abs=1e-8)
    assert q < 0


def test_counterexample_inapplicable():
    with pytest.raises(va.InapplicableError):
        va.default_trial(BUMP, "counterexample")
    mirrored = StripGeometry(0.2, CurvatureProfile.two_bump((-3, -1, 1, 3), (0.7, -0.5)))
    with pytest.raises(va.InapplicableError):
        va.default_trial(mirrored, "counterexample")


def test_translation_invariance():
    shifted = StripGeometry(1.0, CurvatureProfile.poly_bump(0.3, 2.0, center=5.0))
    for sigma in (0.5, 0.05):
        a = va.eval_q(BUMP, va.default_trial(BUMP, "prop1", sigma=sigma))
        b = va.eval_q(shifted, va.default_trial(shifted, "prop1", sigma=sigma))
        assert a == pytest.approx(b, abs=1e-9)


def test_weighted_norm_straight():
    t = va.default_trial(STRAIGHT, "prop1", sigma=0.5)
    s = np.linspace(*t.window(), 200001)
    expected = integrate.simpson(va.phi(t, s)[0] ** 2, x=s)
    assert va.weighted_norm(STRAIGHT, t) == pytest.approx(expected, rel=1e-10)


def test_certify_reports():
    r = va.certify(STRAIGHT, "prop1", sigmas=(1.0, 1e-3))
    assert not r["certified"] and "note" in r and r["q_value"] > 0
    r = va.certify(CE, "counterexample", sigmas=(1.0,))
    assert r["certified"] and r["first_negative"]["sigma"] == 1.0
    assert r["upper_bound_on_inf_spectrum"] < CE.threshold
    r = va.certify(BUMP, "prop1", sigmas=(1.0, 0.1, 0.01))
    assert r["certified"] and r["first_negative"]["sigma"] == 0.1
    assert len(r["trials"]) == 3
