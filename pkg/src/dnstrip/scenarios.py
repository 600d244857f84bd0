"""Scenario configuration, presets and the solve pipeline behind the CLI.

A scenario is a single JSON document::

    {
      "name": "prop1_bend",
      "geometry": {"d": 1.0, "profile": {"kind": "poly_bump", "c": 0.3, "s0": 2.0}},
      "truncation": {"L": 12.0, "trunc_bc": "both"},
      "grid": {"ns": 480, "nu": 48, "refine_levels": 1},
      "solver": {"k": 2, "tol": 1e-8, "seed": 0},
      "tasks": ["solve", "certify", "transverse"]
    }

``grid`` is the finest grid; each refine level adds a grid with half the
cells in both directions, so ``refine_levels = 1`` gives the two grids used
for extrapolation.  ``truncation.L`` may be ``"auto"``.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import eigensolve, transverse, variational
from .discretize import TRUNC_BCS, Grid, assemble
from .geometry import KINDS as PROFILE_KINDS
from .geometry import CurvatureProfile, GeometryError, StripGeometry, total_bending

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
TASKS = ("solve", "certify", "transverse", "validate")
AUTO_MAX_DOUBLINGS = 3

PRESETS = {
    "straight": {
        "name": "straight",
        "geometry": {"d": 1.0, "profile": {"kind": "zero"}},
        "truncation": {"L": 12.0, "trunc_bc": "both"},
        "grid": {"ns": 480, "nu": 48, "refine_levels": 1},
        "solver": {"k": 2, "tol": 1e-8, "seed": 0},
        "tasks": ["solve", "certify", "transverse"],
    },
    "prop1_bend": {
        "name": "prop1_bend",
        "geometry": {"d": 1.0, "profile": {"kind": "poly_bump", "c": 0.3, "s0": 2.0}},
        "truncation": {"L": 12.0, "trunc_bc": "both"},
        "grid": {"ns": 480, "nu": 48, "refine_levels": 1},
        "solver": {"k": 2, "tol": 1e-8, "seed": 0},
        "tasks": ["solve", "certify"],
    },
    "prop3_bend": {
        "name": "prop3_bend",
        "geometry": {"d": 1.0, "profile": {"kind": "poly_bump", "c": -0.3, "s0": 2.0}},
        "truncation": {"L": 12.0, "trunc_bc": "both"},
        "grid": {"ns": 480, "nu": 48, "refine_levels": 1},
        "solver": {"k": 2, "tol": 1e-8, "seed": 0},
        "tasks": ["solve", "transverse"],
    },
    "counterexample": {
        "name": "counterexample",
        "geometry": {"d": 0.2, "profile": {"kind": "two_bump",
                                           "breaks": [-3.0, -1.0, 1.0, 3.0],
                                           "areas": [-0.5, 0.7]}},
        "truncation": {"L": 12.0, "trunc_bc": "both"},
        "grid": {"ns": 480, "nu": 48, "refine_levels": 1},
        "solver": {"k": 2, "tol": 1e-8, "seed": 0},
        "tasks": ["solve", "certify"],
    },
    "prop2_sbend": {
        "name": "prop2_sbend",
        "geometry": {"d": 1.0, "profile": {"kind": "s_bend", "amplitude": 0.3, "s0": 2.0}},
        "truncation": {"L": 60.0, "trunc_bc": "both"},
        "grid": {"ns": 960, "nu": 48, "refine_levels": 1},
        "solver": {"k": 2, "tol": 1e-8, "seed": 0},
        "tasks": ["solve", "certify"],
    },
}

_PROFILE_FIELDS = {
    "zero": (),
    "gaussian_bump": ("amplitude", "width", "center"),
    "poly_bump": ("c", "s0", "center"),
    "s_bend": ("amplitude", "s0", "center"),
    "two_bump": ("breaks", "areas"),
    "tabulated": ("s", "gamma", "zero_tail"),
}


class ConfigError(ValueError):
    pass


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return copy.deepcopy(PRESETS[name])


def _num(section, key, value, lo=None, integer=False, lo_open=False):
    ok_type = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok_type:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{section}.{key} must be {kind}, got {value!r}")
    if lo is not None and (value <= lo if lo_open else value < lo):
        rel = ">" if lo_open else ">="
        raise ConfigError(f"{section}.{key} must be {rel} {lo}, got {value!r}")
    return value


def _only(section, block, allowed):
    if not isinstance(block, dict):
        raise ConfigError(f"{section} must be an object")
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigError(f"{section}: unknown field(s) {extra}; accepted: {sorted(allowed)}")


def make_profile(spec: dict) -> CurvatureProfile:
    if not isinstance(spec, dict):
        raise ConfigError("geometry.profile must be an object")
    kind = spec.get("kind")
    if kind not in PROFILE_KINDS:
        raise ConfigError(f"geometry.profile.kind must be one of {list(PROFILE_KINDS)}, got {kind!r}")
    _only("geometry.profile", spec, ("kind",) + _PROFILE_FIELDS[kind])
    try:
        if kind == "zero":
            return CurvatureProfile.zero()
        if kind == "gaussian_bump":
            return CurvatureProfile.gaussian_bump(spec["amplitude"], spec["width"],
                                                  spec.get("center", 0.0))
        if kind == "poly_bump":
            return CurvatureProfile.poly_bump(spec["c"], spec["s0"], spec.get("center", 0.0))
        if kind == "s_bend":
            return CurvatureProfile.s_bend(spec["amplitude"], spec["s0"], spec.get("center", 0.0))
        if kind == "two_bump":
            return CurvatureProfile.two_bump(tuple(spec["breaks"]), tuple(spec["areas"]))
        return CurvatureProfile.tabulated(spec["s"], spec["gamma"], spec.get("zero_tail", False))
    except KeyError as exc:
        raise ConfigError(f"geometry.profile ({kind}) is missing field {exc.args[0]!r}; "
                          f"accepted: {list(_PROFILE_FIELDS[kind])}") from None
    except GeometryError as exc:
        raise ConfigError(f"geometry.profile: {exc}") from None


@dataclass
class Scenario:
    name: str
    geometry: StripGeometry
    profile_spec: dict
    L: object  # float or "auto"
    trunc_bcs: tuple
    ns: int
    nu: int
    refine_levels: int
    k: int
    tol: float
    seed: int
    tasks: tuple
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def d(self):
        return self.geometry.d


def parse_scenario(cfg: dict) -> Scenario:
    """Validate a config dict and build the scenario; errors name the field."""
    _only("config", cfg, ("name", "geometry", "truncation", "grid", "solver", "tasks"))
    for key in ("geometry",):
        if key not in cfg:
            raise ConfigError(f"config is missing required field {key!r}")
    name = cfg.get("name", "scenario")
    if not isinstance(name, str) or not name:
        raise ConfigError("name must be a non-empty string")

    geo = cfg["geometry"]
    _only("geometry", geo, ("d", "profile"))
    if "d" not in geo or "profile" not in geo:
        raise ConfigError("geometry needs fields 'd' and 'profile'")
    d = _num("geometry", "d", geo["d"], lo=0, lo_open=True)
    profile = make_profile(geo["profile"])
    g = StripGeometry(float(d), profile)
    if d * profile.gamma_plus >= 1:
        raise ConfigError(f"geometry: d*gamma_plus = {d * profile.gamma_plus:.6g} must be < 1")

    tr = cfg.get("truncation", {})
    _only("truncation", tr, ("L", "trunc_bc"))
    L = tr.get("L", "auto")
    if L != "auto":
        L = float(_num("truncation", "L", L, lo=0, lo_open=True))
    bc = tr.get("trunc_bc", "both")
    if bc == "both":
        bcs = TRUNC_BCS
    elif bc in TRUNC_BCS:
        bcs = (bc,)
    else:
        raise ConfigError(f"truncation.trunc_bc must be one of {list(TRUNC_BCS) + ['both']}, got {bc!r}")

    gr = cfg.get("grid", {})
    _only("grid", gr, ("ns", "nu", "refine_levels"))
    ns = _num("grid", "ns", gr.get("ns", 480), lo=4, integer=True)
    nu = _num("grid", "nu", gr.get("nu", 48), lo=4, integer=True)
    levels = _num("grid", "refine_levels", gr.get("refine_levels", 1), lo=1, integer=True)
    f = 2 ** levels
    if ns % f or nu % f or ns // f < 4 or nu // f < 4:
        raise ConfigError(f"grid.ns and grid.nu must be divisible by 2^refine_levels = {f} "
                          "with at least 4 cells on the coarsest grid")

    so = cfg.get("solver", {})
    _only("solver", so, ("k", "tol", "seed"))
    k = _num("solver", "k", so.get("k", 2), lo=1, integer=True)
    tol = float(_num("solver", "tol", so.get("tol", 1e-8), lo=0, lo_open=True))
    seed = _num("solver", "seed", so.get("seed", 0), lo=0, integer=True)

    tasks = cfg.get("tasks", ["solve"])
    if not isinstance(tasks, list) or not tasks:
        raise ConfigError(f"tasks must be a non-empty list drawn from {list(TASKS)}")
    bad = [t for t in tasks if t not in TASKS]
    if bad:
        raise ConfigError(f"tasks: unknown task(s) {bad}; accepted: {list(TASKS)}")

    return Scenario(name, g, dict(geo["profile"]), L, tuple(bcs), ns, nu, levels,
                    k, tol, seed, tuple(tasks), copy.deepcopy(cfg))


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


# ---------------------------------------------------------------------------
# solve pipeline


def support_radius(g: StripGeometry) -> float:
    if g.profile.kind == "zero":
        return 0.0
    lo, hi = g.profile.extent()
    return max(abs(lo), abs(hi))


@dataclass
class SolveOutcome:
    L: float
    levels: list  # [(ns, nu)] coarsest first
    results: dict  # bc -> list of SpectralResult per level
    decision: eigensolve.Decision
    history: list


def _solve_at(sc: Scenario, L: float, hs_ns: int):
    """Solve every trunc_bc on every grid level with the finest ns = hs_ns."""
    levels = [(hs_ns // 2 ** lev, sc.nu // 2 ** lev) for lev in range(sc.refine_levels, -1, -1)]
    results = {}
    for bc in sc.trunc_bcs:
        results[bc] = []
        for ns, nu in levels:
            p = assemble(sc.geometry, Grid(L, ns, nu, bc))
            r = eigensolve.lowest_eigenpairs(p, k=sc.k, tol=sc.tol, seed=sc.seed)
            if not r.converged:
                log.warning("%s %dx%d: eigenpairs flagged as not converged", bc, ns, nu)
            results[bc].append(r)
    decision = eigensolve.detect_bound_states({bc: rs[-2] for bc, rs in results.items()},
                                              {bc: rs[-1] for bc, rs in results.items()})
    return levels, results, decision


def run_solve(sc: Scenario, max_doublings: int = AUTO_MAX_DOUBLINGS) -> SolveOutcome:
    if sc.L != "auto":
        levels, results, dec = _solve_at(sc, sc.L, sc.ns)
        return SolveOutcome(sc.L, levels, results, dec, [])
    L = support_radius(sc.geometry) + 12.0 * sc.d
    ns = sc.ns
    hist = []
    for step in range(max_doublings + 1):
        levels, results, dec = _solve_at(sc, L, ns)
        width = None
        if len(sc.trunc_bcs) == 2:
            width = dec.extrapolated["dirichlet"] - dec.extrapolated["neumann"]
        hist.append({"L": L, "ns": ns, "bracket_width": width, "delta": dec.delta,
                     "verdict": dec.verdict})
        if width is None or width < dec.delta or dec.verdict == "none detected":
            break
        if step < max_doublings:
            L, ns = 2.0 * L, 2 * ns
    return SolveOutcome(L, levels, results, dec, hist)


def sample_gamma(g: StripGeometry, n: int = 41) -> np.ndarray:
    if g.profile.kind == "zero":
        return np.array([0.0])
    lo, hi = g.profile.extent()
    s = np.linspace(lo, hi, n)
    vals = np.concatenate([g.profile.gamma(s), [g.profile.gamma_plus, 0.0]])
    return np.unique(np.clip(vals, 0.0, None) if np.all(vals >= -1e-15) else vals)


def certify_kind(g: StripGeometry) -> str | None:
    """Trial family that matches the scenario hypotheses (None if none applies)."""
    prof = g.profile
    if prof.kind == "zero":
        return "prop1"
    bend = total_bending(prof) if prof.compact else None
    if prof.kind == "two_bump":
        a1, a2 = prof.params["areas"]
        if a1 < 0 < a2:
            return "counterexample" if bend > 0 else "prop1"
    if bend is None:
        return None
    if abs(bend) <= 1e-10:
        return "prop2"
    if bend < 0:
        return "prop1"
    return None


def run_certify(sc: Scenario) -> dict:
    kind = certify_kind(sc.geometry)
    if kind is None:
        return {"kind": None, "certified": False,
                "note": "no trial family applies (total bending positive without a leading "
                        "negative bump)"}
    try:
        return variational.certify(sc.geometry, kind)
    except variational.InapplicableError as exc:
        return {"kind": kind, "certified": False, "note": f"inapplicable: {exc}"}


def run_transverse(sc: Scenario) -> dict:
    g = sc.geometry
    gam = sample_gamma(g)
    rows = []
    for gm in gam:
        e = transverse.transverse_lambda0(g.d, float(gm))
        rows.append({"d": g.d, "gamma": float(gm), "lambda0": e.lambda0,
                     "method": e.method, "residual": e.residual})
    out = {"rows": rows, "certificate": None}
    if np.all(gam >= 0):
        out["certificate"] = transverse.nonexistence_certificate(g.d, gam).as_dict()
    else:
        out["note"] = "gamma changes sign: the nonexistence certificate does not apply"
    return out
