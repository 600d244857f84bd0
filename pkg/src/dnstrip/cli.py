"""Command-line front end.

    dnstrip solve --preset prop1_bend --out runs/prop1
    dnstrip certify --config my.json --out runs/mine
    dnstrip transverse --preset prop3_bend --out runs/p3
    dnstrip validate [--filter lemma]
    dnstrip sweep --preset prop1_bend --c 0.1,0.3 --d 0.5,1 --out runs/sweep --jobs 4
    dnstrip --dump-preset straight > straight.json

Exit status: 0 on success, 2 when ``--strict`` is given and the verdict is
inconclusive, 1 on any error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__, checks, scenarios
from .eigensolve import observed_order, richardson
from .geometry import GeometryError, reconstruct_curve, total_bending, validate_strip

log = logging.getLogger("dnstrip")

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _scenario_from_args(args):
    if args.config and args.preset:
        raise scenarios.ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = scenarios.load_config(args.config)
    elif args.preset:
        cfg = scenarios.preset(args.preset)
    else:
        raise scenarios.ConfigError("a scenario is required: pass --config FILE or --preset NAME")
    return scenarios.parse_scenario(cfg)


# ---------------------------------------------------------------------------
# facts and reports


def geometry_facts(sc):
    g = sc.geometry
    prof = g.profile
    facts = {
        "d": g.d,
        "threshold": g.threshold,
        "profile": sc.profile_spec,
        "gamma_minus": prof.gamma_minus,
        "gamma_plus": prof.gamma_plus,
        "metric_floor": g.metric_floor,
        "total_bending": total_bending(prof) if prof.compact or prof.kind == "zero" else None,
    }
    return facts


def validity_facts(sc):
    v = validate_strip(sc.geometry)
    return {"metric_positive": v.metric_positive,
            "non_self_intersecting": v.non_self_intersecting,
            "min_metric": v.min_metric, "min_separation": v.min_separation}


def write_convergence(path, outcome):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trunc_bc", "L", "ns", "nu", "lambda1", "residual", "richardson",
                    "observed_order"])
        for bc, rs in outcome.results.items():
            lam = [r.lambda1 for r in rs]
            for i, ((ns, nu), r) in enumerate(zip(outcome.levels, rs)):
                ext = repr(richardson(lam[i - 1], lam[i])) if i >= 1 else ""
                order = repr(observed_order(*lam[i - 2:i + 1])) if i >= 2 else ""
                w.writerow([bc, repr(outcome.L), ns, nu, repr(lam[i]),
                            repr(float(r.residuals[0])), ext, order])


def solve_facts(outcome):
    out = {"L": outcome.L, "grids": [list(g) for g in outcome.levels],
           "auto_truncation": outcome.history or None, "eigenvalues": {}}
    for bc, rs in outcome.results.items():
        out["eigenvalues"][bc] = [
            {"ns": ns, "nu": nu, "lambda": r.eigenvalues.tolist(),
             "residual": r.residuals.tolist(), "converged": r.converged, "shift": r.shift}
            for (ns, nu), r in zip(outcome.levels, rs)
        ]
    dec = outcome.decision
    out["bracket"] = {"dirichlet_value": dec.extrapolated.get("dirichlet"),
                      "neumann_value": dec.extrapolated.get("neumann")}
    out["extrapolated_lambda1"] = dec.extrapolated
    out["extrapolation_correction"] = dec.corrections
    return out


def solve_verdict(outcome, sc):
    dec = outcome.decision
    basis = outcome.results[dec.basis.split(",")[0]][-1]
    v = {
        "verdict": dec.verdict,
        "threshold": dec.threshold,
        "delta": dec.delta,
        "basis": dec.basis,
        "count_below": basis.count_below(dec.delta),
        "provenance": {"L": outcome.L, "grid_fine": list(outcome.levels[-1]),
                       "grid_coarse": list(outcome.levels[-2]),
                       "trunc_bc": list(sc.trunc_bcs)},
    }
    if dec.verdict == "inconclusive":
        v["recommendation"] = "run `dnstrip certify` for a variational certificate"
    return v


def _certificate_verdict(cert):
    return {"kind": cert.get("kind"), "certified": cert.get("certified", False),
            "q_value": cert.get("q_value"),
            "upper_bound_on_inf_spectrum": cert.get("upper_bound_on_inf_spectrum")}


def run_scenario(sc, out: Path, tasks, strict=False):
    """Run the requested tasks and write all artifacts; returns the exit status."""
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    timings = {}
    g = sc.geometry
    g.require_metric()
    report = {
        "schema_version": scenarios.SCHEMA_VERSION,
        "scenario": sc.raw,
        "facts": {"geometry": geometry_facts(sc)},
        "verdicts": {},
    }
    status = EXIT_OK

    if "validate" in tasks:
        t = time.perf_counter()
        report["facts"]["strip_validity"] = validity_facts(sc)
        timings["validate"] = time.perf_counter() - t

    if "solve" in tasks:
        t = time.perf_counter()
        outcome = scenarios.run_solve(sc)
        timings["solve"] = time.perf_counter() - t
        dec = outcome.decision
        basis_bc = dec.basis.split(",")[0]
        primary = outcome.results[basis_bc][-1]
        primary.write_csv(out / "eigenvalues.csv", dec.delta)
        for bc, rs in outcome.results.items():
            rs[-1].write_csv(out / f"eigenvalues_{bc}.csv", dec.delta)
        primary.write_modes_csv(out / "modes.csv", 0)
        for i in range(1, primary.vectors.shape[1]):
            primary.write_modes_csv(out / f"modes_{i}.csv", i)
        write_convergence(out / "convergence.csv", outcome)
        report["facts"]["solve"] = solve_facts(outcome)
        report["verdicts"]["spectrum"] = solve_verdict(outcome, sc)
        if dec.verdict == "inconclusive" and strict:
            status = EXIT_INCONCLUSIVE

    if "certify" in tasks:
        t = time.perf_counter()
        cert = scenarios.run_certify(sc)
        timings["certify"] = time.perf_counter() - t
        cert_doc = dict(cert, schema_version=scenarios.SCHEMA_VERSION)
        write_json(out / "certificate.json", cert_doc)
        report["facts"]["certificate"] = {k: v for k, v in cert.items() if k != "trials"}
        report["verdicts"]["certificate"] = _certificate_verdict(cert)

    if "transverse" in tasks:
        t = time.perf_counter()
        tr = scenarios.run_transverse(sc)
        timings["transverse"] = time.perf_counter() - t
        with open(out / "transverse.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["d", "gamma", "lambda0", "method", "residual"])
            for r in tr["rows"]:
                w.writerow([repr(r["d"]), repr(r["gamma"]), repr(r["lambda0"]), r["method"],
                            repr(float(r["residual"]))])
        report["facts"]["transverse"] = tr
        cert = tr["certificate"]
        report["verdicts"]["transverse_certificate"] = (
            {"applicable": False, "note": tr.get("note")} if cert is None else
            {"applicable": True, "passed": cert["passed"], "verdict": cert["verdict"]})

    if g.profile.kind != "zero" and g.profile.compact and "solve" in tasks:
        lo, hi = g.report_range()
        reconstruct_curve(g.profile, (lo, hi), min(0.01, (hi - lo) / 1000)).to_csv(
            out / "curve.csv", g.profile)

    write_json(out / "report.json", report)
    write_json(out / "metadata.json", {
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime_seconds": {**timings, "total": time.perf_counter() - t0},
        "versions": {"dnstrip": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "tasks": list(tasks),
    })
    _print_summary(report, out)
    return status


def _print_summary(report, out):
    v = report["verdicts"]
    lines = [f"scenario {report['scenario'].get('name', '?')}: "
             f"threshold {report['facts']['geometry']['threshold']:.10g}"]
    if "spectrum" in v:
        s = v["spectrum"]
        lam = report["facts"]["solve"]["extrapolated_lambda1"]
        lines.append(f"  spectrum: {s['verdict']} (delta {s['delta']:.3g}, basis {s['basis']}, "
                     f"extrapolated lambda1 " + ", ".join(f"{k} {x:.10g}" for k, x in lam.items())
                     + ")")
    if "certificate" in v:
        c = v["certificate"]
        q = "n/a" if c["q_value"] is None else f"{c['q_value']:.6g}"
        lines.append(f"  certificate ({c['kind']}): {'found' if c['certified'] else 'none'}, q = {q}")
    if "transverse_certificate" in v:
        t = v["transverse_certificate"]
        lines.append("  transverse certificate: " + (
            ("passed" if t["passed"] else "FAILED") if t["applicable"] else "not applicable"))
    lines.append(f"  artifacts in {out}")
    print("\n".join(lines))


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args, tasks):
    sc = _scenario_from_args(args)
    if tasks is None:
        tasks = list(sc.tasks)
        if "solve" not in tasks:
            tasks.insert(0, "solve")
    out = Path(args.out or f"out/{sc.name}")
    return run_scenario(sc, out, tasks, strict=args.strict)


def cmd_validate(args):
    table = checks.corrupted_table() if args.corrupt_bessel_table else None
    results = checks.run_checks(args.filter, table)
    if not results:
        print(f"no checks match filter {args.filter!r}", file=sys.stderr)
        return EXIT_ERROR
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.group:<11} {r.name:<{width}}  "
              f"{r.seconds:7.2f}s  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        sys.stdout.flush()
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


_SWEEP_KEYS = {"poly_bump": ("c", "s0"), "s_bend": ("amplitude", "s0"),
               "gaussian_bump": ("amplitude", "width")}


def _sweep_one(cfg):
    sc = scenarios.parse_scenario(cfg)
    o = scenarios.run_solve(sc)
    d = o.decision
    return (d.extrapolated.get("dirichlet"), d.extrapolated.get("neumann"), d.delta, d.verdict)


def cmd_sweep(args):
    base = (scenarios.load_config(args.config) if args.config
            else scenarios.preset(args.preset or "prop1_bend"))
    prof = base["geometry"]["profile"]
    amp_key, s0_key = _SWEEP_KEYS.get(prof["kind"], (None, None))
    if amp_key is None:
        raise scenarios.ConfigError(
            f"sweep needs a profile of kind {sorted(_SWEEP_KEYS)}, got {prof['kind']!r}")
    cs = args.c or [prof[amp_key]]
    ds = args.d or [base["geometry"]["d"]]
    s0s = args.s0 or [prof[s0_key]]
    cfgs, keys = [], []
    for c, d, s0 in itertools.product(cs, ds, s0s):
        cfg = copy.deepcopy(base)
        cfg["geometry"]["d"] = d
        cfg["geometry"]["profile"][amp_key] = c
        cfg["geometry"]["profile"][s0_key] = s0
        cfg["tasks"] = ["solve"]
        scenarios.parse_scenario(cfg)  # validate before spending time
        cfgs.append(cfg)
        keys.append((c, d, s0))
    jobs = max(1, args.jobs)
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_one, cfgs))
    else:
        rows = [_sweep_one(c) for c in cfgs]
    out = Path(args.out or "out/sweep")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "d", "s0", "lambda1_dirichlet", "lambda1_neumann", "threshold",
                    "delta", "verdict"])
        for (c, d, s0), (ld, ln, delta, verdict) in zip(keys, rows):
            thr = np.pi ** 2 / (4 * d * d)
            w.writerow([repr(c), repr(d), repr(s0), "" if ld is None else repr(ld),
                        "" if ln is None else repr(ln), repr(thr), repr(delta), verdict])
            print(f"c={c:g} d={d:g} s0={s0:g}: {verdict}")
    print(f"wrote {out / 'sweep.csv'}")
    if args.strict and any(r[3] == "inconclusive" for r in rows):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="dnstrip", description=__doc__.split("\n\n")[0])
    p.add_argument("--dump-preset", metavar="NAME",
                   help="print a preset scenario as JSON and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")

    def scenario_flags(sp):
        sp.add_argument("--config", help="scenario JSON file")
        sp.add_argument("--preset", choices=sorted(scenarios.PRESETS))
        sp.add_argument("--out", help="output directory (default out/<name>)")
        sp.add_argument("--strict", action="store_true",
                        help="exit 2 when the verdict is inconclusive")
        sp.add_argument("--jobs", type=int, default=1, help="worker cap")

    for name, text in (("solve", "solve and run the scenario's tasks"),
                       ("certify", "variational certificate only"),
                       ("transverse", "transverse eigenvalues and nonexistence certificate")):
        scenario_flags(sub.add_parser(name, help=text))

    v = sub.add_parser("validate", help="run the self-check suite")
    v.add_argument("--filter", help="only checks whose group or name contains this text")
    v.add_argument("--jobs", type=int, default=1, help="worker cap")
    v.add_argument("--corrupt-bessel-table", action="store_true", help=argparse.SUPPRESS)

    s = sub.add_parser("sweep", help="parameter grid over c, d, s0")
    scenario_flags(s)
    s.add_argument("--c", type=_floats, help="comma-separated curvature amplitudes")
    s.add_argument("--d", type=_floats, help="comma-separated strip widths")
    s.add_argument("--s0", type=_floats, help="comma-separated bump half-widths")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.dump_preset:
            json.dump(scenarios.preset(args.dump_preset), sys.stdout, indent=2)
            sys.stdout.write("\n")
            return EXIT_OK
        if args.command is None:
            parser.print_help()
            return EXIT_ERROR
        if getattr(args, "jobs", 1) < 1:
            raise scenarios.ConfigError("--jobs must be >= 1")
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        tasks = {"solve": None, "certify": ["certify"], "transverse": ["transverse"]}
        return cmd_run(args, tasks[args.command])
    except (scenarios.ConfigError, GeometryError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
