"""Command-line scenario runner.

    optagg run <config> [--out DIR] [--seed N]
    optagg sweep <config> --param P --values V [V ...] [--jobs N] [--out DIR]
    optagg tune <config> [--target FMT] [--out DIR]
    optagg golden list
    optagg golden run <name> [--out DIR] [--seed N]

Exit status: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ConfigError, OptaggError
from .kernels import BACKEND
from .receiver_dsp import eye_diagram, export_eye_csv, export_report
from .scenario import (STAGES, SWEEPABLE, Scenario, golden_names, golden_text, load_golden,
                       run_scenario, stage_seed)
from .signal_core import export_envelope_csv, export_spectrum_csv
from .transmitter import export_symbols_csv

OUTPUT_ENV = "OPTAGG_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

GOLDEN_SUMMARY = {
    "fig5a_qpsk": "BPSK x2 -> QPSK, 10 GBd raised-cosine NRZ",
    "fig5b_pam4": "BPSK x2 -> PAM-4, 10 GBd raised-cosine NRZ",
    "fig6_qam16": "QPSK x2 -> QAM-16, 10 GBd, MZM-2 output spectrum",
    "fig7a_nyq_qpsk_5g": "Nyquist BPSK x2 -> QPSK, 5 GBd",
    "fig7b_nyq_qpsk_8g": "Nyquist BPSK x2 -> QPSK, 8 GBd",
    "fig7c_nyq_pam4_5g": "Nyquist BPSK x2 -> PAM-4, 5 GBd",
    "fig7d_nyq_pam4_8g": "Nyquist BPSK x2 -> PAM-4, 8 GBd",
    "fig8a_nyq_qam16_5g": "Nyquist QPSK x2 -> QAM-16, 5 GBd",
    "fig8b_nyq_qam16_8g": "Nyquist QPSK x2 -> QAM-16, 8 GBd, eye diagram",
}


def default_out(name: str) -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "optagg_runs")) / name


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(obj, path: Path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_outputs(result, out: Path) -> dict:
    """Write every selected artifact of a run plus its manifest; returns the manifest."""
    out.mkdir(parents=True, exist_ok=True)
    scn = result.scenario
    sel = scn.config["outputs"]
    files = []

    def add(name):
        files.append(name)
        return out / name

    _dump_json(result.metrics(), add("report.json"))
    if sel["symbols"]:
        export_report(result.report, add("aggregate_report.json"), add("aggregate_symbols.csv"))
        export_symbols_csv(result.chain.parents.streams, add("tx_symbols.csv"))
    if result.parent_report is not None:
        export_report(result.parent_report, add("parent_report.json"), add("parent_symbols.csv"))
    if sel["spectrum"]:
        export_spectrum_csv(result.mzm_output, add("spectrum_mzm2.csv"))
        export_spectrum_csv(result.aggregated, add("spectrum_aggregate.csv"))
    if sel["eye"]:
        rate = float(scn.config["transmitter"]["rate_baud"])
        export_eye_csv(eye_diagram(result.received, rate, 2), add("eye.csv"))
    if sel["envelope"]:
        export_envelope_csv(result.received, add("envelope.csv"))
    if sel["diagnostics"]:
        _dump_json(result.diagnostics, add("diagnostics.json"))
    if result.tune is not None:
        _dump_json(result.tune.to_dict(), add("tune_result.json"))

    manifest = {
        "manifest_version": 1,
        "scenario": scn.name,
        "config": scn.config,
        "config_sha256": scn.config_hash(),
        "seed": scn.seed,
        "stage_seeds": {k: stage_seed(scn.seed, k) for k in STAGES},
        "versions": {"optagg": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "kernel_backend": BACKEND,
        "resolved": {"alpha": result.alpha, "phi_rad": result.plan.phi_rad,
                     "theta0_rad": result.calibration.theta0_rad},
        "files": {f: _sha256(out / f) for f in files},
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }
    _dump_json(manifest, out / "manifest.json")
    return manifest


def _load(config: str, seed=None) -> Scenario:
    scn = Scenario.load(config)
    if seed is not None:
        scn = scn.with_overrides(seed=int(seed))
    return scn


def _summary(result) -> str:
    r = result.report
    q = "inf" if math.isinf(r.q_factor) else f"{r.q_factor_db:.2f} dB"
    ser = "n/a" if r.ser is None else f"{r.ser:.3g}"
    return (f"{result.scenario.name}: {r.format} EVM {r.evm_avg_pct:.4f} +/- {r.evm_std_pct:.4f} %, "
            f"Q {q}, SER {ser}, phi {result.plan.phi_rad:.6f} rad, alpha {result.alpha:.4f}")


def cmd_run(args) -> int:
    scn = _load(args.config, args.seed)
    result = run_scenario(scn)
    out = Path(args.out) if args.out else default_out(scn.name)
    write_outputs(result, out)
    print(_summary(result))
    print(f"artifacts written to {out}")
    return EXIT_OK


def _sweep_point(config: dict, param: str, value: float, out: str):
    scn = Scenario.from_dict(config)
    kw = {}
    if param == "phi_rad":
        kw["phi_rad"] = value
    elif param == "alpha":
        kw["alpha"] = value
    elif param == "target_evm_pct":
        ase = dict(scn.config["link"]["ase_after_tx"] or {})
        ase.pop("noise_psd", None)
        ase["target_evm_pct"] = value
        scn = scn.with_overrides(**{"link.ase_after_tx": ase})
    elif param == "rate_baud":
        scn = scn.with_overrides(**{"transmitter.rate_baud": value})
    result = run_scenario(scn, **kw)
    write_outputs(result, Path(out))
    r = result.report
    return [repr(float(value)), repr(r.evm_avg_pct), repr(r.evm_std_pct),
            "inf" if math.isinf(r.q_factor) else repr(float(r.q_factor)),
            "" if r.ser is None else repr(r.ser)]


def cmd_sweep(args) -> int:
    if not args.values:
        raise ConfigError("--values needs at least one value", field="--values")
    scn = _load(args.config, args.seed)
    out = Path(args.out) if args.out else default_out(scn.name) / f"sweep_{args.param}"
    out.mkdir(parents=True, exist_ok=True)
    dirs = [str(out / f"point_{i:03d}") for i in range(len(args.values))]
    jobs = max(1, int(args.jobs))
    if jobs == 1:
        rows = [_sweep_point(scn.config, args.param, v, d) for v, d in zip(args.values, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = [ex.submit(_sweep_point, scn.config, args.param, v, d) for v, d in zip(args.values, dirs)]
            rows = [f.result() for f in futs]
    with open(out / "sweep.csv", "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "evm_avg", "evm_std", "q_factor", "ser"])
        w.writerows(rows)
    print(f"{len(rows)} sweep points written to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_tune(args) -> int:
    from .tuner import TuneSpec, sensitivity, tune

    scn = _load(args.config, args.seed)
    target = args.target or scn.config["aggregation"]["target"]
    if target != scn.config["aggregation"]["target"]:
        scn = scn.with_overrides(**{"aggregation.target": target})
    a = scn.config["link"]["alpha"]
    bounds = (float(a), float(a)) if a is not None and not args.free_alpha else (0.1, 1.0)
    spec = TuneSpec(target, phi_grid=args.phi_grid, refine_iters=args.refine_iters, alpha_bounds=bounds)
    res = tune(scn, spec)
    out = Path(args.out) if args.out else default_out(scn.name) / "tune"
    out.mkdir(parents=True, exist_ok=True)
    doc = res.to_dict()
    doc["sensitivity"] = sensitivity(scn, res)
    _dump_json(doc, out / "tune_result.json")
    print(f"{scn.name}: target {target}, phi* {res.phi_star_rad:.6f} rad, alpha* {res.alpha_star:.5f}, "
          f"EVM {res.evm_at_opt_pct:.4f} %, converged {res.converged}")
    print(f"tune result written to {out / 'tune_result.json'}")
    return EXIT_OK


def cmd_golden(args) -> int:
    if args.action == "list":
        for name in golden_names():
            print(f"{name:22s} {GOLDEN_SUMMARY.get(name, '')}")
        return EXIT_OK
    if not args.name:
        raise ConfigError("golden run needs a scenario name")
    golden_text(args.name)
    scn = load_golden(args.name)
    if args.seed is not None:
        scn = scn.with_overrides(seed=int(args.seed))
    result = run_scenario(scn)
    out = Path(args.out) if args.out else default_out(scn.name)
    write_outputs(result, out)
    print(_summary(result))
    print(f"artifacts written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optagg", description="All-optical channel aggregation simulator")
    p.add_argument("--version", action="version", version=f"optagg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("config")
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a scenario over a list of parameter values")
    s.add_argument("config")
    s.add_argument("--param", required=True, choices=SWEEPABLE)
    s.add_argument("--values", nargs="*", type=float, default=[])
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_sweep)

    t = sub.add_parser("tune", help="search RF phase (and weight) for a target format")
    t.add_argument("config")
    t.add_argument("--target", choices=("BPSK", "QPSK", "PAM4", "QAM16"))
    t.add_argument("--free-alpha", action="store_true", help="search alpha even if the config fixes it")
    t.add_argument("--phi-grid", type=int, default=64)
    t.add_argument("--refine-iters", type=int, default=20)
    t.add_argument("--out")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_tune)

    g = sub.add_parser("golden", help="bundled scenarios")
    g.add_argument("action", choices=("list", "run"))
    g.add_argument("name", nargs="?")
    g.add_argument("--out")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_golden)
    return p


def _config_message(e: ConfigError, args) -> str:
    where = getattr(args, "config", None) or "config"
    return f"config error: {where}: {e}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(_config_message(e, args), file=sys.stderr)
        return EXIT_CONFIG
    except OptaggError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
