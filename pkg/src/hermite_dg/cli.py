"""Command-line front end.

    python -m hermite_dg run      --config run.yaml
    python -m hermite_dg converge --config conv.yaml
    python -m hermite_dg sweep    --config sweep.yaml
    python -m hermite_dg verify   [--config battery.yaml]

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 invariant failure.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

from .battery import battery_json, run_battery, verdict_table
from .config import RunConfig, fingerprint, load_config, parse_config
from .errors import CompatibilityViolation, ConfigError, InvalidArgument, NumericFailure
from .experiments import run_convergence_study, run_regime_sweep, run_single

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4

VERB_KIND = {"run": "single_run", "converge": "convergence_study",
             "sweep": "regime_sweep", "verify": "invariant_battery"}


def _parser():
    p = argparse.ArgumentParser(prog="hermite_dg", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, helptext in (("run", "single simulation"),
                           ("converge", "Landau convergence study"),
                           ("sweep", "collisional regime sweep"),
                           ("verify", "randomized invariant battery")):
        sp = sub.add_parser(verb, help=helptext)
        sp.add_argument("--config", help="YAML config file (defaults apply when omitted)")
        sp.add_argument("--output-dir", help="override experiment.output_dir")
    return p


def _error(kind, exc, code):
    print(json.dumps({"error": kind, "message": str(exc),
                      "residual": getattr(exc, "residual", None)}), file=sys.stderr)
    return code


def _load(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config("")
    if args.output_dir:
        cfg = replace(cfg, experiment=replace(cfg.experiment, output_dir=args.output_dir))
    return replace(cfg, experiment=replace(cfg.experiment, kind=VERB_KIND[args.verb]))


def _converge(cfg):
    reports = run_convergence_study(cfg)
    for r in reports:
        print(f"tau0={r.tau0:g}")
        print(f"  {'Nx':>5s} {'NH':>5s} {'L1':>10s} {'L2':>10s} {'Linf':>10s}   orders")
        for i, e in enumerate(r.errors):
            nx, nh = r.levels[i]
            orders = "  ".join(f"{o:5.2f}" for o in r.orders[i - 1]) if i else "-"
            print(f"  {nx:5d} {nh:5d} {e[0]:10.3e} {e[1]:10.3e} {e[2]:10.3e}   {orders}")
    return EXIT_OK


def _sweep(cfg):
    summary = run_regime_sweep(cfg)
    for reg in summary["regimes"]:
        fit = reg["fits"].get("norm_E", {})
        rate = fit.get("rate")
        print(f"tau0={reg['tau0']:g}  fitted ||E|| decay rate: "
              + (f"{rate:.4f}" if rate is not None else fit.get("error", "n/a")))
    return EXIT_OK


def _verify(cfg):
    results = run_battery(cfg.battery, seed=cfg.experiment.seed)
    print(verdict_table(results))
    out = cfg.experiment.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "battery.json"), "w", encoding="utf-8") as fh:
        fh.write(battery_json(results, fingerprint(cfg)) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def _run(cfg):
    res = run_single(cfg)
    last = res["records"][-1]
    print(f"t={last.t:g} energy={last.energy_E:.6e} mass={last.mass_m0:.12g} "
          f"records={len(res['records'])} fingerprint={res['fingerprint']}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        return _error("config", exc, EXIT_CONFIG)
    handler = {"run": _run, "converge": _converge, "sweep": _sweep, "verify": _verify}[args.verb]
    try:
        return handler(cfg)
    except ConfigError as exc:
        return _error("config", exc, EXIT_CONFIG)
    except (NumericFailure, CompatibilityViolation) as exc:
        return _error("numeric", exc, EXIT_NUMERIC)
    except InvalidArgument as exc:
        return _error("config", exc, EXIT_CONFIG)
