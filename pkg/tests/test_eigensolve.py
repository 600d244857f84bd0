import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from dnstrip import eigensolve as es
from dnstrip import variational as va
from dnstrip.checks import _kron_oracle
from dnstrip.discretize import Grid, assemble
from dnstrip.geometry import CurvatureProfile, StripGeometry

BUMP = StripGeometry(1.0, CurvatureProfile.poly_bump(0.3, 2.0))
STRAIGHT = StripGeometry(1.0, CurvatureProfile.zero())


def _one_d(n, h, dirichlet_left, dirichlet_right):
    k = (np.diag(2 * np.ones(n + 1)) - np.diag(np.ones(n), 1) - np.diag(np.ones(n), -1)) / h
    m = (np.diag(4 * np.ones(n + 1)) + np.diag(np.ones(n), 1) + np.diag(np.ones(n), -1)) * h / 6
    k[0, 0] = k[n, n] = 1 / h
    m[0, 0] = m[n, n] = h / 3
    keep = np.ones(n + 1, bool)
    keep[0] = not dirichlet_left
    keep[n] = not dirichlet_right
    return sla.eigh(k[np.ix_(keep, keep)], m[np.ix_(keep, keep)], eigvals_only=True)


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_straight_spectrum_is_separable(bc):
    L, ns, nu = 4.0, 64, 8
    r = es.lowest_eigenpairs(assemble(STRAIGHT, Grid(L, ns, nu, bc)), k=4)
    mu_s = _one_d(ns, 2 * L / ns, bc == "dirichlet", bc == "dirichlet")
    mu_u = _one_d(nu, 1.0 / nu, True, False)
    expected = np.sort(np.add.outer(mu_s, mu_u).ravel())[:4]
    assert np.allclose(r.eigenvalues, expected, rtol=1e-10)


def test_against_dense_solver():
    p = assemble(BUMP, Grid(4.0, 64, 6, "neumann"))
    r = es.lowest_eigenpairs(p, k=3)
    dense = sla.eigh(p.A.toarray(), p.M.toarray(), eigvals_only=True, subset_by_index=[0, 2])
    assert np.allclose(r.eigenvalues, dense, rtol=1e-11)


def test_residuals_and_orthonormality():
    p = assemble(BUMP, Grid(6.0, 96, 12, "dirichlet"))
    r = es.lowest_eigenpairs(p, k=3, tol=1e-8)
    assert r.converged
    assert np.all(r.residuals <= 1e-8)
    assert np.all(np.diff(r.eigenvalues) >= 0)
    G = r.vectors.T @ (p.M @ r.vectors)
    assert np.allclose(G, np.eye(3), atol=1e-8)
    assert r.mode(0).shape == (97, 13)
    assert len(r.modes) == 3


def test_determinism_bitwise():
    p = assemble(BUMP, Grid(6.0, 96, 12, "neumann"))
    a = es.lowest_eigenpairs(p, k=2, seed=7)
    b = es.lowest_eigenpairs(p, k=2, seed=7)
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
    assert a.vectors.tobytes() == b.vectors.tobytes()


def test_argument_errors():
    p = assemble(BUMP, Grid(6.0, 96, 12, "neumann"))
    with pytest.raises(ValueError):
        es.lowest_eigenpairs(p, k=0)
    with pytest.raises(ValueError):
        es.lowest_eigenpairs(p, tol=0.0)
    with pytest.raises(ValueError):
        es.rayleigh_quotient(p, np.zeros(p.n))
    with pytest.raises(ValueError):
        es.rayleigh_quotient(p, np.ones(p.n + 1))


def test_shift_perturbation(monkeypatch):
    p = assemble(BUMP, Grid(6.0, 96, 12, "neumann"))
    real = es.spla.splu
    calls = []

    def flaky(m):
        calls.append(1)
        if len(calls) < 3:
            raise RuntimeError("Factor is exactly singular")
        return real(m)

    monkeypatch.setattr(es.spla, "splu", flaky)
    r = es.lowest_eigenpairs(p, k=1)
    assert len(calls) == 3
    assert r.shift != 0.5 * p.threshold
    monkeypatch.setattr(es.spla, "splu", lambda m: (_ for _ in ()).throw(RuntimeError("singular")))
    with pytest.raises(es.EigensolveError):
        es.lowest_eigenpairs(p, k=1)


def test_partial_result_on_non_convergence(monkeypatch):
    p = assemble(BUMP, Grid(6.0, 96, 12, "neumann"))
    good = es.lowest_eigenpairs(p, k=2)

    def fake_eigsh(*args, **kwargs):
        raise es.spla.ArpackNoConvergence("no convergence", good.eigenvalues[:1],
                                          good.vectors[:, :1])

    monkeypatch.setattr(es.spla, "eigsh", fake_eigsh)
    r = es.lowest_eigenpairs(p, k=2)
    assert not r.converged
    assert len(r.eigenvalues) == 1


def test_rayleigh_quotient_of_ground_mode():
    p = assemble(BUMP, Grid(6.0, 96, 12, "neumann"))
    r = es.lowest_eigenpairs(p, k=1)
    assert es.rayleigh_quotient(p, r.vectors[:, 0]) == pytest.approx(r.lambda1, rel=1e-10)


_P_SMALL = assemble(BUMP, Grid(6.0, 96, 12, "neumann"))
_L1_SMALL = es.lowest_eigenpairs(_P_SMALL, k=1).lambda1


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_rayleigh_quotient_bounds_ground_state(seed):
    v = np.random.default_rng(seed).standard_normal(_P_SMALL.n)
    assert es.rayleigh_quotient(_P_SMALL, v) >= _L1_SMALL - 1e-10


def test_richardson_and_order():
    lam = lambda h: 2.0 + 0.7 * h * h
    assert es.richardson(lam(0.2), lam(0.1)) == pytest.approx(2.0, abs=1e-14)
    assert es.observed_order(lam(0.4), lam(0.2), lam(0.1)) == pytest.approx(2.0, abs=1e-12)
    assert math.isnan(es.observed_order(1.0, 1.0, 1.0))


def _fake(lam, thr=2.0):
    return es.SpectralResult(np.array([lam]), np.zeros(1), np.zeros((1, 1)), thr, 1.0, True)


def test_decision_policy():
    # richardson correction (fine - coarse) / 3 = -1/3000, so delta = 2/3000
    co = {"dirichlet": _fake(1.903), "neumann": _fake(1.902)}
    fi = {"dirichlet": _fake(1.902), "neumann": _fake(1.901)}
    d = es.detect_bound_states(co, fi)
    assert d.verdict == "bound state" and d.basis == "dirichlet"
    assert d.delta == pytest.approx(2 * 0.001 / 3)

    co = {"dirichlet": _fake(2.02), "neumann": _fake(2.0003)}
    fi = {"dirichlet": _fake(2.01), "neumann": _fake(2.0001)}
    d = es.detect_bound_states(co, fi)
    assert d.verdict == "none detected" and d.basis == "neumann"

    # dirichlet just above threshold, neumann clearly below: bracket straddles
    co = {"dirichlet": _fake(2.001), "neumann": _fake(1.95)}
    fi = {"dirichlet": _fake(2.001), "neumann": _fake(1.95)}
    assert es.detect_bound_states(co, fi).verdict == "inconclusive"

    # margin floor
    co = {"neumann": _fake(2.0)}
    fi = {"neumann": _fake(2.0)}
    d = es.detect_bound_states(co, fi)
    assert d.delta == pytest.approx(2e-4) and d.verdict == "none detected"
    with pytest.raises(ValueError):
        es.detect_bound_states({}, {})


def test_certificate_implies_neumann_eigenvalue_below_threshold():
    t = va.default_trial(BUMP, "prop1", sigma=0.05)
    q = va.eval_q(BUMP, t)
    assert q < 0
    p = assemble(BUMP, Grid(12.0, 240, 24, "neumann"))
    r = es.lowest_eigenpairs(p, k=1)
    assert r.lambda1 < p.threshold


def test_interpolated_trial_matches_variational_quadrature():
    t = va.default_trial(BUMP, "prop1", sigma=1.0)
    exact = BUMP.threshold + va.eval_q(BUMP, t) / va.weighted_norm(BUMP, t)
    errs = []
    for ns, nu in ((240, 12), (480, 24), (960, 48)):
        p = assemble(BUMP, Grid(12.0, ns, nu, "neumann"))
        v = p.interpolate(lambda s, u: va.trial_values(BUMP, t, s, u))
        errs.append(abs(es.rayleigh_quotient(p, v) - exact))
    assert errs[-1] < 5e-4
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_csv_outputs(tmp_path):
    p = assemble(BUMP, Grid(6.0, 96, 12, "neumann"))
    r = es.lowest_eigenpairs(p, k=2)
    r.write_csv(tmp_path / "e.csv", delta=1e-3)
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "index,lambda,residual,below_threshold"
    assert lines[1].split(",")[3] == "true"
    r.write_modes_csv(tmp_path / "m.csv")
    m = (tmp_path / "m.csv").read_text().splitlines()
    assert m[0] == "s,u,value" and len(m) == p.n + 1
