"""Command-line entry point.

Subcommands map one-to-one onto the experiment sweeps (ROC, detection and
error probability versus shot count, reference-power sweep, RF sample-count
comparison) plus the self-validation suite and a single-scene diagnostic.

Every run writes the result CSV, a JSON manifest, and the fully resolved
config; together these reproduce the run bit-exactly.  Exit codes: 0 on
success, 1 when validation fails, 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, harness
from .config import SystemConfig, apply_overrides, dump_config, load_config
from .detectors import DetectorKind
from .harness import ExperimentSpec
from .validate import run_validation

OUT_DIR_ENV = "RYDSENSE_OUT"

_DEFAULT_GRIDS = {
    "roc": [1.0, 5.0],
    "pd-vs-k": [float(k) for k in range(1, 13)],
    "pe-vs-k": [float(k) for k in range(1, 13)],
    "rnr-sweep": [float(v) for v in range(0, 31, 2)],
    "rf-compare": [1.0, 2.0, 5.0, 10.0, 14.0, 20.0, 28.0, 40.0, 80.0, 120.0, 180.0],
}

_SWEEP_VARS = {
    "roc": "shots",
    "pd-vs-k": "shots",
    "pe-vs-k": "shots",
    "rnr-sweep": "rnr_db",
    "rf-compare": "rf_shots",
}

# beyond roughly this many interrogation cycles atomic backaction breaks the
# independent-shot model this tool simulates
_SHOT_REGIME_LIMIT = 20


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydsense",
        description="Monte Carlo detection experiments for magnitude-only "
        "quantum-receiver measurements.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config file (INI syntax)")
    common.add_argument("--seed", type=int, metavar="U64", help="master RNG seed")
    common.add_argument("--trials", type=int, metavar="N", help="trials per grid point")
    common.add_argument(
        "--workers", type=int, metavar="N",
        help="parallel workers (default: machine parallelism)",
    )
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides",
        help="override any config key (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("roc", parents=[common],
                   help="ROC curves for the three quantum-receiver detectors")
    sub.add_parser("pd-vs-k", parents=[common],
                   help="detection probability versus shot count")
    sub.add_parser("pe-vs-k", parents=[common],
                   help="Bayesian total error versus shot count")
    sub.add_parser("rnr-sweep", parents=[common],
                   help="detection probability versus reference-to-noise ratio")
    sub.add_parser("rf-compare", parents=[common],
                   help="RF energy-detector baseline versus its sample count")
    sub.add_parser("validate", parents=[common], help="run the self-validation suite")
    sub.add_parser("diag", parents=[common],
                   help="print the per-cell statistic decomposition of one scene")
    return parser


def _resolve(args) -> tuple[SystemConfig, dict]:
    if args.config is not None:
        cfg, experiment = load_config(args.config)
    else:
        cfg, experiment = SystemConfig(), {}
    apply_overrides(cfg, experiment, args.overrides)
    if args.seed is not None:
        cfg.master_seed = args.seed
        cfg.validate()
    if args.trials is not None:
        experiment["trials"] = args.trials
    if args.workers is not None:
        experiment["workers"] = args.workers
    return cfg, experiment


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _spec_for(command: str, cfg: SystemConfig, experiment: dict) -> ExperimentSpec:
    grid_key = "roc_shots" if command == "roc" else "grid"
    grid = experiment.get(grid_key, _DEFAULT_GRIDS[command])
    return ExperimentSpec(
        base=cfg,
        sweep_variable=_SWEEP_VARS[command],
        grid=tuple(grid),
        trials=int(experiment.get("trials", 100_000)),
        p_fa_target=float(experiment.get("p_fa_target", 0.1)),
        held_out=bool(experiment.get("held_out", True)),
        common_random_numbers=bool(experiment.get("common_random_numbers", False)),
    )


def _write_manifest(
    out: Path, stem: str, command: str, cfg: SystemConfig, experiment: dict,
    spec: ExperimentSpec | None, workers: int, outputs: list[str],
    t_start: float, extra: dict | None = None,
) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": int(cfg.master_seed),
        "system": dataclasses.asdict(cfg),
        "experiment": {
            k: (list(v) if isinstance(v, (list, tuple)) else v)
            for k, v in experiment.items()
        },
        "workers": workers,
        "started_utc": datetime.fromtimestamp(t_start, tz=timezone.utc).isoformat(),
        "finished_utc": datetime.now(tz=timezone.utc).isoformat(),
        "wall_seconds": round(time.time() - t_start, 3),
        "outputs": outputs,
    }
    if spec is not None:
        manifest["experiment"].setdefault("trials", spec.trials)
        manifest["experiment"].setdefault("p_fa_target", spec.p_fa_target)
        manifest["experiment"].setdefault("grid", list(spec.grid))
        manifest["experiment"]["sweep_variable"] = spec.sweep_variable
    if extra:
        manifest.update(extra)
    path = out / f"{stem}_manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def _run_roc(cfg: SystemConfig, experiment: dict, spec: ExperimentSpec,
             workers: int, out: Path, stem: str) -> list[str]:
    points_path = out / f"{stem}.csv"
    auc_path = out / f"{stem}_auc.csv"
    auc = harness.SweepResult(sweep_variable="shots")
    raqr_kinds = (
        DetectorKind.GenieLRT, DetectorKind.PhaseAvgLRT, DetectorKind.QuantumED
    )
    with open(points_path, "w") as fh:
        fh.write("k,detector,pfa,pd\n")
        for k in spec.grid:
            records = harness.run_trials(spec, k, workers=workers)
            for kind in raqr_kinds:
                points = harness.empirical_roc(records, kind)
                for pfa, pd in points:
                    fh.write(f"{int(round(k))},{kind.value},{pfa!r},{pd!r}\n")
                auc.rows.append(harness.SweepRow(
                    float(k), kind.value, "auc", harness.roc_auc(points),
                    0.0, len(records),
                ))
    auc.write_csv(auc_path)
    return [str(points_path), str(auc_path)]


def _run_diag(cfg: SystemConfig, out: Path, stem: str) -> list[str]:
    from . import detectors as det
    from . import scene as scn
    from .specfn import RngStream

    channel = scn.draw_channel(RngStream(cfg.master_seed, 0), cfg)
    signal = scn.draw_signal(RngStream(cfg.master_seed, 1), cfg)
    reference = scn.make_reference(cfg)
    scene = scn.build_scene(channel, signal, reference, cfg)
    shots = scn.generate_shots(
        RngStream(cfg.master_seed, 3), scene.alpha, cfg.noise_var, cfg.shots
    )
    print(f"seed={cfg.master_seed}  n_rx={cfg.n_rx}  shots={cfg.shots}")
    print("cell  |r_m|      |alpha_m|  alpha_bar  sigma_v2   ga_cell    pa_cell    energy")
    y = shots.values
    for m in range(cfg.n_rx):
        ga = det.ga_statistic(
            y[m : m + 1], np.abs(scene.alpha[m : m + 1]),
            np.abs(reference.values[m : m + 1]), cfg.noise_var,
        )
        pa = det.pa_statistic(
            y[m : m + 1], scene.alpha_bar[m : m + 1],
            np.abs(reference.values[m : m + 1]), cfg.noise_var,
        )
        print(
            f"{m:4d}  {abs(reference.values[m]):<9.4f} {abs(scene.alpha[m]):<10.4f}"
            f" {scene.alpha_bar[m]:<10.4f} {scene.sigma_v2[m]:<10.4f}"
            f" {ga:<10.4f} {pa:<10.4f} {float(np.sum(y[m] ** 2)):.4f}"
        )
    print(f"ga_map_threshold = {det.ga_map_threshold(cfg, scene.alpha, reference):.6f}")
    print(f"pa_map_threshold = {det.pa_map_threshold(cfg, scene.alpha_bar, reference):.6f}")
    return []


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, experiment = _resolve(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = _out_dir(args)
    workers = int(experiment.get("workers", os.cpu_count() or 1))
    t_start = time.time()
    stem = f"{args.command.replace('-', '_')}_seed{cfg.master_seed}"

    if args.command == "validate":
        report_path = out / f"{stem}_report.json"
        ok, _ = run_validation(report_path=report_path)
        _write_manifest(out, stem, args.command, cfg, experiment, None, workers,
                        [str(report_path)], t_start)
        print(f"report: {report_path}")
        return 0 if ok else 1

    if args.command == "diag":
        try:
            _run_diag(cfg, out, stem)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0

    if cfg.shots > _SHOT_REGIME_LIMIT or cfg.rf_shots > _SHOT_REGIME_LIMIT * 20:
        print(
            f"warning: shots={cfg.shots} exceeds the independent-shot regime "
            f"(~{_SHOT_REGIME_LIMIT} interrogation cycles); results assume "
            "i.i.d. shots", file=sys.stderr,
        )

    try:
        spec = _spec_for(args.command, cfg, experiment)
        if args.command == "roc":
            outputs = _run_roc(cfg, experiment, spec, workers, out, stem)
        else:
            result = harness.sweep(spec, workers=workers)
            csv_path = out / f"{stem}.csv"
            result.write_csv(csv_path)
            outputs = [str(csv_path)]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    config_path = out / f"{stem}_config.ini"
    dump_config(cfg, experiment, config_path)
    outputs.append(str(config_path))
    manifest_path = _write_manifest(
        out, stem, args.command, cfg, experiment, spec, workers, outputs, t_start
    )
    for path in outputs + [str(manifest_path)]:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
