"""Command-line front end.

Exit codes: 0 success, 1 convergence check failed, 2 bad configuration or
input file, 3 numerical failure during propagation.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .analysis import analyze_trace, demodulate, phase_cycle
from .analytic import OverlapFunction, TwoStateParams, signal
from .config import DEFAULTS, RunConfig, parse_phases, parse_range
from .errors import ConfigurationError, ScanError, UnitarityError
from .io import ProgressLedger, SchemaError, read_trace_csv, write_columns_csv, write_json, write_trace_csv
from .potentials import PRESETS
from .propagator import IonizationTrace, convergence_check, run_delay_scan, scan_metadata

log = logging.getLogger("attoscope")

WORKERS_ENV = "ATTOSCOPE_WORKERS"


def _add_run_options(p, require_model=False):
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--preset", help="model preset (overrides [model] preset)")
    p.add_argument("--tau", metavar="START:STOP:STEP", help="delay range in fs, stop inclusive")
    p.add_argument("--phases", help="comma-separated phases, e.g. '0,pi' or '0,pi/2,pi,3pi/2'")
    p.add_argument("--out", help="output directory (overrides [output] directory)")
    p.add_argument("--prefix", help="output file prefix")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override any config key, e.g. numerics.dt_fs=0.0025",
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="attoscope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="TDSE delay/phase scan")
    _add_run_options(p)
    p.add_argument("--resume", action="store_true", help="skip points recorded in the progress ledger")
    p.add_argument("--workers", type=int, help=f"worker processes (default from ${WORKERS_ENV} or config)")
    p.add_argument("--method", choices=("split", "direct"))

    p = sub.add_parser("analytic", help="perturbative two-state model on the same grid")
    _add_run_options(p)
    p.add_argument(
        "--variant",
        choices=("delta", "filtered", "ordered"),
        default="ordered",
        help="overlap model; the default matches the TDSE scan for the same pulses",
    )
    p.add_argument("--overlap-only", action="store_true", help="write only <chi0|chi1>(tau)")

    p = sub.add_parser("analyze", help="phase-cycle and analyze a trace CSV")
    p.add_argument("trace")
    p.add_argument("--fine", help="attosecond-step trace for the jitter estimate")
    p.add_argument("--out", default=None, help="output directory (default: next to the trace)")

    p = sub.add_parser("preset", help="list or show model presets")
    psub = p.add_subparsers(dest="preset_command", required=True)
    psub.add_parser("list")
    show = psub.add_parser("show")
    show.add_argument("name")

    p = sub.add_parser("convergence", help="dt, grid and continuum refinement check")
    _add_run_options(p)
    p.add_argument("--refine", default="dt,grid,continuum")
    return parser


def _load_config(args, require_model=False) -> RunConfig:
    if args.config:
        cfg = RunConfig.from_file(args.config)
        if require_model and "model" not in cfg.sections_present:
            raise ConfigurationError(f"{args.config}: missing [model] section")
    else:
        cfg = RunConfig()
    if args.preset:
        cfg.set("model.preset", args.preset)
    if args.tau:
        parse_range(args.tau)  # validate before storing
        start, stop, step = args.tau.split(":")
        cfg.set("scan.delay_start_fs", start)
        cfg.set("scan.delay_stop_fs", stop)
        cfg.set("scan.delay_step_fs", step)
    if args.phases:
        parse_phases(args.phases)
        cfg.set("scan.phases", args.phases)
    if args.out:
        cfg.set("output.directory", args.out)
    if args.prefix:
        cfg.set("output.prefix", args.prefix)
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfg.set(key.strip(), value.strip())
    if getattr(args, "workers", None):
        cfg.workers_override = int(args.workers)
    if getattr(args, "method", None):
        cfg.set("numerics.method", args.method)
    cfg.validate()
    return cfg


def _output_paths(cfg):
    directory = cfg.get("output", "directory")
    os.makedirs(directory, exist_ok=True)
    prefix = cfg.get("output", "prefix")
    return directory, prefix


def cmd_scan(args):
    cfg = _load_config(args)
    spec = cfg.scan_spec()
    if args.workers:
        from dataclasses import replace

        spec = replace(spec, workers=args.workers)
    directory, prefix = _output_paths(cfg)
    ledger = ProgressLedger(os.path.join(directory, f"{prefix}.progress.jsonl"))
    completed = {}
    if args.resume:
        completed = {k: v for k, v in ledger.load().items() if k[0] in spec.delays and k[1] in spec.phases}
        log.info("resuming: %d of %d points already done", len(completed), len(spec.delays) * len(spec.phases))
    elif os.path.exists(ledger.path):
        os.remove(ledger.path)
    trace = run_delay_scan(spec, progress=ledger.append, completed=completed)
    meta = scan_metadata(spec, trace.metadata.get("diagnostics"))
    meta["config"] = cfg.resolved()
    meta["warnings"] = cfg.warnings()
    meta["resumed_points"] = len(completed)
    for w in meta["warnings"]:
        log.warning(w)
    write_trace_csv(trace, os.path.join(directory, f"{prefix}.csv"))
    write_json(meta, os.path.join(directory, f"{prefix}.json"))
    print(os.path.join(directory, f"{prefix}.csv"))
    return 0


def cmd_analytic(args):
    cfg = _load_config(args, require_model=True)
    model = cfg.build_model()
    pulses = cfg.build_pulses()
    delays = np.array(cfg.delays())
    directory, prefix = _output_paths(cfg)
    overlap = OverlapFunction(model, cfg.build_numerics().grid, args.variant, pulses.pump, pulses.probe)
    if args.overlap_only:
        o = overlap(delays)
        path = os.path.join(directory, f"{prefix}.overlap.csv")
        write_columns_csv(
            path, "attoscope.overlap/1", ["delay_fs", "re_overlap", "im_overlap", "abs_overlap"],
            [delays, o.real, o.imag, np.abs(o)],
        )
        print(path)
        return 0
    params = TwoStateParams.from_model(model, pulses.pump, pulses.probe, args.variant)
    phases = cfg.phases()
    yields = np.column_stack([signal(params, delays, p) for p in phases])
    trace = IonizationTrace(delays, np.array(phases), yields)
    meta = {
        "schema": "attoscope.trace-meta/1",
        "tool_version": __version__,
        "kind": "analytic",
        "variant": args.variant,
        "model": model.to_dict(),
        "a0": params.a0,
        "a1": params.a1,
        "omega_e_rad_fs": params.omega_e,
        "q_ratio": params.Q_c1,
        "config": cfg.resolved(),
        "warnings": cfg.warnings(),
    }
    write_trace_csv(trace, os.path.join(directory, f"{prefix}.csv"))
    write_json(meta, os.path.join(directory, f"{prefix}.json"))
    print(os.path.join(directory, f"{prefix}.csv"))
    return 0


def _zoom(delays, values, center, width):
    sel = np.abs(delays - center) <= width / 2
    return delays[sel], values[sel]


def cmd_analyze(args):
    trace = read_trace_csv(args.trace)
    fine = read_trace_csv(args.fine) if args.fine else None
    directory = args.out or os.path.dirname(os.path.abspath(args.trace))
    os.makedirs(directory, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.trace))[0]
    result = analyze_trace(trace, fine)
    result.to_json(os.path.join(directory, f"{stem}.analysis.json"))
    diff, total = phase_cycle(trace)
    d = trace.delays
    write_columns_csv(os.path.join(directory, f"{stem}.diffsum.csv"), "attoscope.diffsum/1",
                      ["delay_fs", "diff", "sum"], [d, diff, total])
    env = demodulate(d, diff, 2 * math.pi * result.carrier_frequency * 1e-3)
    write_columns_csv(os.path.join(directory, f"{stem}.envelope.csv"), "attoscope.envelope/1",
                      ["delay_fs", "re_envelope", "im_envelope", "abs_envelope"], [d, env.real, env.imag, np.abs(env)])
    # plot data at three zoom levels: full window, ~10 fs and ~1 fs around the centre
    center = d[np.argmax(np.abs(env))]
    for name, width in (("full", np.inf), ("zoom10fs", 10.0), ("zoom1fs", 1.0)):
        x, y = _zoom(d, diff, center, width)
        write_columns_csv(os.path.join(directory, f"{stem}.plot_{name}.csv"), "attoscope.plot/1",
                          ["delay_fs", "diff"], [x, y])
    if fine is not None:
        fd, _ = phase_cycle(fine)
        write_columns_csv(os.path.join(directory, f"{stem}.plot_fine.csv"), "attoscope.plot/1",
                          ["delay_fs", "diff"], [fine.delays, fd])
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_preset(args):
    if args.preset_command == "list":
        for name in sorted(PRESETS):
            print(name)
        return 0
    if args.name not in PRESETS:
        raise ConfigurationError(f"unknown preset {args.name!r}; available: {', '.join(sorted(PRESETS))}")
    model = PRESETS[args.name]()
    info = model.to_dict()
    info["vertical_gap_ev"] = model.vertical_gap
    info["carrier_frequency_thz"] = model.carrier_frequency_thz
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def cmd_convergence(args):
    cfg = _load_config(args)
    if not args.tau and not (args.config and "scan" in RunConfig.from_file(args.config).sections_present):
        # small default scan: 20 delays spanning about two carrier periods
        cfg.set("scan.delay_start_fs", "80.0")
        cfg.set("scan.delay_stop_fs", "81.9")
        cfg.set("scan.delay_step_fs", "0.1")
    spec = cfg.scan_spec()
    report = convergence_check(spec, tuple(r.strip() for r in args.refine.split(",") if r.strip()))
    directory, prefix = _output_paths(cfg)
    write_json(report, os.path.join(directory, f"{prefix}.convergence.json"))
    print(json.dumps(report, indent=2, sort_keys=True, default=float))
    return 0 if report["passed"] else 1


COMMANDS = {
    "scan": cmd_scan,
    "analytic": cmd_analytic,
    "analyze": cmd_analyze,
    "preset": cmd_preset,
    "convergence": cmd_convergence,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScanError, UnitarityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
