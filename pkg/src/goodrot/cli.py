"""Command line front end: ``goodrot <command> ...`` or ``python -m goodrot``.

Exit codes
  0  success
  2  bad arguments
  3  refused as intractable (scan precision too large)
  4  numerical failure (non-finite state, Kepler solver did not converge)
  5  I/O failure

Every command that writes a file with --out also writes a manifest next to
it (``<out>.manifest.json``) holding the command, its parameters, the seed,
the package version and the sha256 of each output. ``goodrot replay
MANIFEST`` re-runs it into a scratch directory and compares checksums.
"""
from __future__ import annotations

import argparse
import json
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .celestial import (
    PERSISTENCE_FLOOR,
    KeplerConvergenceError,
    ProblemSpec,
    drift_split,
    ensemble_energy,
    ensemble_states,
    integrate_si2,
    secular_detected,
    secular_slope,
    state_from_elements,
)
from .drift import (
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    NumericalFailure,
    RotationSpec,
    classify_regime,
    detect_cycle,
    exact_radius_factor,
    iterate_rotation,
    random_unit_points,
)
from .family import TEMPLATES, catalog_csv_text, emit_constants, generate_family
from .formats import (
    atomic_write,
    drift_csv,
    fmt_theta_human,
    orbit_csv,
    scan_csv,
    scan_json,
    scan_table,
    sha256_file,
)
from .grid import GridPoint, theta_of
from .scan import RULES, TractabilityError, nearest_entry, nearest_good_angle, scan, workers_from_env

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_TRACTABILITY = 3
EXIT_NUMERIC = 4
EXIT_IO = 5

RULE_HELP = (
    "how the angle is chosen: 'at_least' takes the first catalog angle >= theta "
    "(the default), 'nearest' the closest one; ties go to the smaller |k|, then the smaller y"
)


class UsageError(ValueError):
    pass


# --- output plumbing ---


def _emit(args, outputs: dict, extra: dict | None = None, seed=None) -> None:
    """Write each named text output and, when writing files, the manifest.

    ``outputs`` maps a parameter name of ``args`` (out, report) to text. A
    missing path sends the text to stdout.
    """
    written = {}
    for key, text in outputs.items():
        path = getattr(args, key, None)
        if path in (None, "-"):
            sys.stdout.write(text)
            continue
        written[key] = {"path": str(path), "sha256": atomic_write(path, text)}
    if not written:
        return
    params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}
    manifest = {
        "command": args.command,
        "params": params,
        "seed": seed,
        "version": __version__,
        "outputs": written,
    }
    if extra:
        manifest.update(extra)
    mpath = args.manifest or f"{written[next(iter(written))]['path']}.manifest.json"
    atomic_write(mpath, json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def _default_sidecar(args, key: str, suffix: str) -> None:
    if getattr(args, key) is None and args.out not in (None, "-"):
        setattr(args, key, f"{args.out}{suffix}")


# --- commands ---


def cmd_scan(args) -> int:
    res = scan(args.p, args.kmax, octant_only=not args.all_octants, workers=args.workers,
               allow_intractable=args.force)
    entries = list(res.entries)
    if args.format == "csv":
        text = scan_csv(entries)
    elif args.format == "json":
        text = scan_json(args.p, args.kmax, entries)
    else:
        text = scan_table(entries)
    _info(f"{len(entries)} grid points with |k| <= {args.kmax} at p = {args.p}")
    _emit(args, {"out": text})
    return EXIT_OK


def cmd_family(args) -> int:
    cat = generate_family(args.n, args.p)
    f = cat.factorization
    _info(f"2**{2 * args.n}+1 = {f}; {cat.quadruplets} quadruplets, {len(cat)} octant entries, "
          f"max gap {cat.max_gap:.6f}")
    extra = {
        "factorization": {
            "alpha": f.alpha,
            "f": [[q, e] for q, e in f.f_list],
            "g": [[q, e] for q, e in f.g_list],
            "text": str(f),
        },
        "quadruplets": cat.quadruplets,
        "entries": len(cat),
        "max_gap": cat.max_gap,
    }
    _emit(args, {"out": catalog_csv_text(cat)}, extra)
    return EXIT_OK


def _pick_point(args) -> tuple[GridPoint, int]:
    if args.n is not None:
        cat = generate_family(args.n, args.p if args.p is not None else 53)
        e = nearest_entry(cat.entries, args.theta, args.rule)
        return e.point, e.k
    p = args.p if args.p is not None else 24
    kmax = args.kmax if args.kmax is not None else 32
    return nearest_good_angle(p, kmax, args.theta, args.rule)


def cmd_pick(args) -> int:
    if args.n is not None and args.kmax is not None:
        raise UsageError("give --kmax or --n, not both")
    g, k = _pick_point(args)
    _info(f"x={g.x} y={g.y} p={g.p} k={k} theta={fmt_theta_human(theta_of(g))}")
    _emit(args, {"out": emit_constants(g, args.emit)}, {"point": [g.x, g.y, g.p], "k": k})
    return EXIT_OK


def _rotation_spec(args) -> RotationSpec:
    prec = args.precision
    if args.dyadic is not None:
        return RotationSpec.dyadic(args.dyadic, args.denom or 512, prec)
    if args.pi_fraction is not None:
        return RotationSpec.pi_fraction(args.pi_fraction, args.denom or 2000, prec)
    if args.grid is not None:
        x, y, p = args.grid
        return RotationSpec.from_grid(GridPoint(x, y, p), prec)
    if args.raw is not None:
        return RotationSpec.raw(args.raw, prec)
    if args.family is not None:
        if args.theta is None:
            raise UsageError("--family needs --theta")
        cat = generate_family(args.family, args.p)
        return RotationSpec.from_grid(nearest_entry(cat.entries, args.theta, args.rule).point, prec)
    raise UsageError("choose an angle with --dyadic, --pi-fraction, --grid, --raw or --family")


def cmd_drift(args) -> int:
    spec = _rotation_spec(args)
    _default_sidecar(args, "report", ".regime.json")
    series = iterate_rotation(spec, steps=args.steps, trials=args.trials, seed=args.seed)
    period = None
    cycles = None
    if args.detect_cycle:
        X, Y = random_unit_points(args.trials, args.seed, spec.dtype)
        cycles = [detect_cycle(spec, x, y, args.max_period) for x, y in zip(X, Y)]
        periods = {c[0] for c in cycles if c is not None}
        if cycles and all(c is not None for c in cycles):
            period = min(periods)
    rep = classify_regime(series, period)
    c, s = spec.cos_sin()
    report = {
        "rotation": spec.describe(),
        "theta": spec.theta,
        "c_hex": float(c).hex(),
        "s_hex": float(s).hex(),
        "radius_factor_minus_one": float(exact_radius_factor(spec) - 1),
        "steps": args.steps,
        "trials": series.trials,
        "seed": args.seed,
        "cycles": None if cycles is None else [None if cy is None else list(cy) for cy in cycles],
        **rep.as_dict(),
    }
    _info(f"regime={rep.regime} fitted_rate={rep.fitted_rate:.3e} exponent={rep.loglog_slope:.3f}"
          + (f" period={period}" if period else ""))
    outputs = {"out": drift_csv(series)}
    report_text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.report is None:
        _info(report_text.rstrip())
    else:
        outputs["report"] = report_text
    _emit(args, outputs, seed=args.seed)
    return EXIT_OK


def load_problem(doc: dict) -> tuple[ProblemSpec, dict, int]:
    """ProblemSpec, orbital elements and ensemble size from a problem document."""
    rot = doc.get("rotation")
    if rot is not None:
        rot = GridPoint(int(rot["x"]), int(rot["y"]), int(rot["p"]))
    spec = ProblemSpec(
        mu=float(doc.get("mu", 1.0)),
        J=float(doc.get("J", 1e-3)),
        tau=float(doc.get("tau", 5e-4)),
        rotation=rot,
        theta=None if doc.get("theta") is None else float(doc["theta"]),
    )
    elements = {"a": 1.0, "e": 0.05, "inc": 0.2}
    elements.update({k: float(v) for k, v in doc.get("orbit", {}).items()})
    elements["mu"] = spec.mu
    return spec, elements, int(doc.get("ensemble", 1))


def _loglog_exponent(rec) -> float:
    t = (rec.block_index + 0.5) * rec.block_size
    m = rec.blocks
    sel = m > 0
    if sel.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(t[sel]), np.log(m[sel]), 1)[0])


def cmd_orbit(args) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"problem file is not valid JSON: {exc}") from exc
    spec, elements, ensemble = load_problem(doc)
    if args.ensemble is not None:
        ensemble = args.ensemble
    _default_sidecar(args, "report", ".report.json")
    if ensemble > 1:
        rec = ensemble_energy(ensemble_states(ensemble, **elements), spec, args.steps, args.block)
    else:
        rec = integrate_si2(state_from_elements(**elements), spec, args.steps, args.block)
    slope = secular_slope(rec)
    exponent = _loglog_exponent(rec)
    c, s = spec.cos_sin()
    fc, fs = Fraction(c), Fraction(s)
    predicted = float(abs(fc * fc + fs * fs - 1))
    walk, linear = drift_split(rec)
    detected = secular_detected(rec)
    report = {
        "problem": spec.describe(),
        "orbit": elements,
        "ensemble": ensemble,
        "steps": args.steps,
        "block": args.block,
        "secular_slope": slope,
        "loglog_exponent": exponent,
        "random_walk_part": walk,
        "linear_part": linear,
        "secular_detected": bool(detected),
        "predicted_slope": predicted,
        "max_block": float(rec.blocks.max()),
        "conserved": bool(rec.blocks.max() < PERSISTENCE_FLOOR),
        "E0": rec.E0,
    }
    _info(f"slope={slope:.3e}/step exponent={exponent:.3f} predicted={predicted:.3e} "
          f"max_block={report['max_block']:.3e}")
    outputs = {"out": orbit_csv(rec.blocks)}
    report_text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.report is None:
        _info(report_text.rstrip())
    else:
        outputs["report"] = report_text
    extra = {"problem_document": doc}
    if spec.rotation is not None:
        extra["rotation"] = [spec.rotation.x, spec.rotation.y, spec.rotation.p]
    _emit(args, outputs, extra)
    return EXIT_OK


def cmd_replay(args) -> int:
    """Re-run a manifest into a scratch directory and compare output checksums."""
    manifest = json.loads(Path(args.manifest_file).read_text())
    params = dict(manifest["params"])
    ok = True
    with tempfile.TemporaryDirectory() as tmp:
        if manifest["command"] == "orbit":
            spec_path = Path(tmp) / "problem.json"
            spec_path.write_text(json.dumps(manifest["problem_document"]))
            params["spec"] = str(spec_path)
        for key in manifest["outputs"]:
            params[key] = str(Path(tmp) / key)
        params["manifest"] = str(Path(tmp) / "manifest.json")
        ns = argparse.Namespace(**params)
        ns.func = COMMANDS[manifest["command"]]
        code = ns.func(ns)
        if code != EXIT_OK:
            return code
        for key, meta in manifest["outputs"].items():
            got = sha256_file(params[key])
            same = got == meta["sha256"]
            ok &= same
            print(f"{'same' if same else 'DIFFERENT'} {key} {meta['path']}")
    return EXIT_OK if ok else EXIT_NUMERIC


COMMANDS = {
    "scan": cmd_scan,
    "family": cmd_family,
    "pick": cmd_pick,
    "drift": cmd_drift,
    "orbit": cmd_orbit,
    "replay": cmd_replay,
}


# --- argument parsing ---


def _out_args(sp, report: bool = False) -> None:
    sp.add_argument("--out", default=None, help="output file (default stdout)")
    sp.add_argument("--manifest", default=None, help="manifest path (default <out>.manifest.json)")
    if report:
        sp.add_argument("--report", default=None,
                        help="JSON report path (default next to --out, else printed to stderr)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="goodrot",
        description="Exactly representable rotation constants and their floating point behaviour.",
        epilog="exit codes: 0 ok, 2 bad arguments, 3 refused as intractable, 4 numerical failure, 5 I/O. "
               "GOODROT_WORKERS sets the scan worker count.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("scan", help="all grid points with |x**2+y**2-2**(2p)| <= kmax in the first octant")
    sp.add_argument("--p", type=int, required=True, help="mantissa bits (<= 34 without forcing)")
    sp.add_argument("--kmax", type=int, required=True, help="largest |k| kept")
    sp.add_argument("--format", choices=("csv", "json", "table"), default="csv")
    sp.add_argument("--all-octants", action="store_true", help="include the eight symmetric images")
    sp.add_argument("--force", action="store_true", help="run even above p = 34 (hours to years)")
    sp.add_argument("--workers", type=int, default=workers_from_env(), help="processes (default $GOODROT_WORKERS or 1)")
    _out_args(sp)

    sp = sub.add_parser("family", help="octant catalog of the circle 2**(2n)+1 scaled to precision p")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, default=None, help="precision (default n)")
    _out_args(sp)

    sp = sub.add_parser("pick", help="good angle near theta, printed as exact source constants")
    sp.add_argument("--theta", type=float, required=True, help="target angle in [0, pi/4]")
    sp.add_argument("--p", type=int, default=None, help="precision (default 24 for a scan, 53 for --n)")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--kmax", type=int, default=None, help="search a scan with this |k| bound (default 32)")
    src.add_argument("--n", type=int, default=None, help="search the 2**(2n)+1 family catalog")
    sp.add_argument("--emit", choices=TEMPLATES, default="generic")
    sp.add_argument("--rule", choices=RULES, default="at_least", help=RULE_HELP)
    _out_args(sp)

    sp = sub.add_parser("drift", help="iterate the rotation map and classify the radius drift")
    ang = sp.add_mutually_exclusive_group(required=True)
    ang.add_argument("--dyadic", type=int, metavar="J", help="theta = J / 512 (see --denom)")
    ang.add_argument("--pi-fraction", type=int, metavar="J", help="theta = J pi / 2000 (see --denom)")
    ang.add_argument("--grid", type=int, nargs=3, metavar=("X", "Y", "P"), help="exact c = X/2**P, s = Y/2**P")
    ang.add_argument("--raw", type=float, metavar="THETA", help="rounded cos/sin of THETA")
    ang.add_argument("--family", type=int, metavar="N", help="good angle from the 2**(2N)+1 catalog (with --theta)")
    sp.add_argument("--denom", type=int, default=None)
    sp.add_argument("--theta", type=float, default=None, help="target angle for --family")
    sp.add_argument("--p", type=int, default=53, help="catalog precision for --family")
    sp.add_argument("--rule", choices=RULES, default="at_least", help=RULE_HELP)
    sp.add_argument("--steps", type=int, default=10**6)
    sp.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--precision", choices=("single", "double"), default="double")
    sp.add_argument("--detect-cycle", action="store_true", help="search each trial for an exact cycle")
    sp.add_argument("--max-period", type=int, default=10**6)
    _out_args(sp, report=True)

    sp = sub.add_parser("orbit", help="SI2 integration in a rotating frame; block-averaged energy error")
    sp.add_argument("spec", help="problem JSON (mu, J, tau, rotation {x,y,p} or theta, orbit, ensemble)")
    sp.add_argument("--steps", type=int, default=10**6)
    sp.add_argument("--block", type=int, default=10**5)
    sp.add_argument("--ensemble", type=int, default=None, help="average over this many initial orbits")
    _out_args(sp, report=True)

    sp = sub.add_parser("replay", help="re-run a manifest and compare output checksums")
    sp.add_argument("manifest_file")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.func = COMMANDS[args.command]
    try:
        return args.func(args)
    except TractabilityError as exc:
        _info(f"error: {exc}")
        return EXIT_TRACTABILITY
    except (NumericalFailure, KeplerConvergenceError) as exc:
        _info(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except OSError as exc:
        _info(f"I/O error: {exc}")
        return EXIT_IO
    except (ValueError, TypeError, KeyError) as exc:
        _info(f"error: {exc}")
        return EXIT_ARGS
    except ArithmeticError as exc:
        _info(f"numerical failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
