"""Command line entry point: ``nfupa sweep | inspect-sparsity | selftest``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .simulation import make_trial, run_sweep, trial_dictionary, trial_rng

log = logging.getLogger("nfupa")

MANIFEST = "manifest.json"


def write_manifest(out_dir: Path, command: str, resolved: dict, started: str, outputs: list[Path]) -> Path:
    """Everything needed to re-run: the full resolved config, its digest and the outputs."""
    manifest = {
        "command": command,
        "config_digest": cfgmod.digest(resolved),
        "tool_version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": sorted(p.name for p in outputs),
        "config": resolved,
    }
    path = out_dir / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _resolve(args, scale_gate: bool = True) -> dict:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"scenario.seed={args.seed}")
    resolved = cfgmod.resolve(cfgmod.read_config(args.config), overrides)
    if scale_gate:
        cfgmod.check_scale(resolved, args.full_scale)
    return resolved


def cmd_sweep(args) -> int:
    started = _now()
    resolved = _resolve(args)
    configs = cfgmod.scenarios(resolved)
    settings = cfgmod.estimator_settings(resolved)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    axis = cfgmod.sweep_axis(resolved) if resolved["output.chart"] else None
    total = sum(c.trials for c in configs)

    def progress(done, n):
        if done % max(1, n // 10) == 0 or done == n:
            log.info("%d/%d trials", done, n)

    log.info("%d sweep points, %d trials", len(configs), total)
    result = run_sweep(
        configs, resolved["estimators.names"], out_dir / resolved["output.name"], settings,
        reference_estimator=resolved["estimators.reference"], threads=args.threads,
        chart_axis=axis, progress=progress,
    )
    outputs = [result.trial_csv, result.summary_csv, *result.charts]
    write_manifest(out_dir, "sweep", resolved, started, outputs)
    for p in result.summary:
        print(f"{p.estimator:>10}  snr={p.snr_db:g} dB  T={p.t_samples}  NMSE={p.mean_nmse_db:.2f} dB")
    return 0


def cmd_inspect_sparsity(args) -> int:
    from .plotting import sparsity_heatmap

    started = _now()
    # one channel and two small transforms: cheap at any array size
    resolved = _resolve(args, scale_gate=False)
    cfg = cfgmod.scenarios(resolved)[0]
    settings = cfgmod.estimator_settings(resolved)
    data = make_trial(cfg, trial_rng(cfg.rng_seed, 0))
    sigma = trial_dictionary(cfg, data, settings).analyze(data.H)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = resolved["output.name"]
    csv_path = out_dir / f"{stem}_sigma.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.abs(sigma):
            w.writerow([repr(float(v)) for v in row])
    svg_path = sparsity_heatmap(sigma, out_dir / f"{stem}_sigma.svg", settings.block_size)
    write_manifest(out_dir, "inspect-sparsity", resolved, started, [csv_path, svg_path])
    print(f"wrote {csv_path} and {svg_path}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_checks

    results = run_checks(seed=args.seed or 0, corrupt_dictionary=args.corrupt_dictionary)
    failed = [r.name for r in results if not r.passed]
    print("all checks passed" if not failed else f"failed: {', '.join(failed)}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfupa", description="Near-field UPA channel estimation experiments"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", required=True, help="config file (or a bundled preset name)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key; repeatable")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--seed", type=lambda v: int(v, 0), help="overrides scenario.seed")
        p.add_argument("--full-scale", action="store_true",
                       help="allow arrays beyond desk scale")

    p = sub.add_parser("sweep", help="Monte-Carlo NMSE sweep over SNR or pilot count")
    add_run_flags(p)
    p.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect-sparsity", help="sparse-domain magnitude of one channel")
    add_run_flags(p)
    p.set_defaults(func=cmd_inspect_sparsity)

    p = sub.add_parser("selftest", help="fast invariant checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-dictionary", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        print(f"nfupa: config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"nfupa: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"nfupa: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
