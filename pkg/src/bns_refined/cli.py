"""Command-line entry point: ``bns <subcommand> [flags]``.

Subcommands write their artifacts into the output directory together with a
``manifest-<subcommand>.json`` that records the resolved configuration, its
sha256, the root seed and the sha256 of every artifact.  The manifest is
enough to rerun the command (``--config manifest-....json``).  Failures print
one JSON object to stderr and exit nonzero: 2 for configuration errors, 1 for
a failed stage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as rngmod
from .config import ConfigError, PipelineConfig, read_config_file, resolve
from .dependence import decay_profile
from .learners import DISPLAY_NAMES, load_model, predict_theta, save_model, train_model
from .levy_sim import (ThetaSchedule, schedule_from_predictions, simulate_ensemble, write_ensemble_binary,
                       write_ensemble_csv)
from .market_data import PLOT_KINDS, emit_plot_data, load_csv, summary_stats, write_csv
from .metrics import render_table, report
from .windowing import WINDOW, label_series, split_by_date

log = logging.getLogger("bns")

OUT_ENV = "BNS_OUT_DIR"
DEFAULT_OUT = "bns-out"
STAGES = ("ingest", "stats", "label", "train", "evaluate", "simulate", "correlate")
COMMANDS = STAGES + ("pipeline",)
SIM_SEED, CORR_SEED = 2, 3


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        self.stage = stage
        self.exc = exc
        super().__init__(f"{stage}: {exc}")


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


class Run:
    """Shared state of one invocation: config, output directory and artifact hashes."""

    def __init__(self, cfg: PipelineConfig, out: Path, parallelism: int = 1):
        self.cfg = cfg
        self.out = out
        self.parallelism = parallelism
        self.artifacts: dict[str, str] = {}
        self._series = None
        self._dataset = None
        self._split = None
        self.models: dict = {}
        self.summary: dict = {}

    # artifact bookkeeping
    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def record(self, name: str) -> None:
        self.artifacts[name] = hashlib.sha256((self.out / name).read_bytes()).hexdigest()

    def emit(self, name: str, data: bytes) -> None:
        self.path(name).write_bytes(data)
        self.record(name)

    # lazily computed inputs
    @property
    def series(self):
        if self._series is None:
            if self.cfg.data is None:
                raise ValueError("no input data; pass --data or set 'data' in the config")
            self._series = load_csv(self.cfg.data, self.cfg.columns)
        return self._series

    @property
    def dataset(self):
        if self._dataset is None:
            self._dataset = label_series(self.series, self.cfg.k_percent)
        return self._dataset

    @property
    def split(self):
        if self._split is None:
            cfg = self.cfg
            self._split = split_by_date(self.dataset, self.series, cfg.train_range, cfg.test_range,
                                        cfg.split_convention)
        return self._split

    def model(self, name: str):
        if name not in self.models:
            path = self.out / f"model-{name}.json"
            if not path.exists():
                raise FileNotFoundError(f"{path} not found; run 'train' with --model {name} first")
            self.models[name] = load_model(path)
        return self.models[name]

    def manifest(self, command: str) -> bytes:
        return _json_bytes({
            "command": command,
            "version": __version__,
            "config": self.cfg.to_dict(include_out=False),
            "config_sha256": self.cfg.digest(),
            "seed": self.cfg.seed,
            "artifacts": dict(sorted(self.artifacts.items())),
        })


def stage_ingest(run: Run) -> None:
    write_csv(run.series, run.path("series.csv"), run.cfg.columns)
    run.record("series.csv")
    s = run.series
    run.summary["ingest"] = {"records": len(s), "first": s.dates[0].isoformat(), "last": s.dates[-1].isoformat()}


def stage_stats(run: Run) -> None:
    stats = summary_stats(run.series)
    run.emit("stats.json", _json_bytes(stats.to_dict()))
    for kind in PLOT_KINDS:
        name = f"plots/{kind}.csv"
        emit_plot_data(run.series, kind, run.path(name), bins=run.cfg.bins)
        run.record(name)
    run.summary["stats"] = stats.to_dict()


def stage_label(run: Run) -> None:
    ds = run.dataset
    if len(ds) == 0:
        log.warning("label: %d records give no complete window (need at least %d); dataset is empty",
                    len(run.series), 2 * WINDOW)
    ds.to_csv(run.path("dataset.csv"))
    run.record("dataset.csv")
    n0, n1 = ds.support()
    run.summary["label"] = {"rows": len(ds), "support_0": n0, "support_1": n1}


def stage_train(run: Run) -> None:
    train, _ = run.split
    out = {}
    for name in run.cfg.models:
        model = train_model(name, train, run.cfg.train)
        run.models[name] = model
        fname = f"model-{name}.json"
        save_model(model, run.path(fname))
        run.record(fname)
        out[name] = {"train_rows": len(train)}
    run.summary["train"] = out


def _predictions_csv(test, prob, pred) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["start_index", "key_index", "theta", "prob_theta1", "pred"])
    for s, th, p, y in zip(test.start_index, test.theta, prob, pred):
        w.writerow([int(s), int(s) + WINDOW, int(th), repr(float(p)), int(y)])
    return buf.getvalue().encode()


def stage_evaluate(run: Run) -> None:
    _, test = run.split
    reports = {}
    for name in run.cfg.models:
        prob, pred = predict_theta(run.model(name), test)
        reports[DISPLAY_NAMES[name]] = report(test.theta, pred)
        run.emit(f"predictions-{name}.csv", _predictions_csv(test, prob, pred))
    run.emit("report.json", _json_bytes({k: r.to_dict() for k, r in reports.items()}))
    table = render_table(reports)
    run.emit("report.txt", (table + "\n").encode())
    run.summary["evaluate"] = {"table": table}


def theta_schedule(run: Run) -> ThetaSchedule:
    cfg = run.cfg
    if cfg.sim.theta_source == "constant":
        return ThetaSchedule.constant(cfg.params.theta)
    _, test = run.split
    if len(test) == 0:
        raise ValueError("test split is empty; no predictions to build a theta schedule from")
    model = run.model(cfg.theta_model)
    prob, _ = predict_theta(model, test)
    # a window starting at i predicts the horizon that opens on day i + WINDOW
    keys = test.start_index + WINDOW
    preds = list(zip(keys.tolist(), prob.tolist()))
    return schedule_from_predictions(preds, cfg.sim.theta_mode, horizon_days=cfg.horizon_days,
                                     threshold=model.threshold, origin=int(keys[0]))


def stage_simulate(run: Run) -> None:
    cfg, sim = run.cfg, run.cfg.sim
    schedule = theta_schedule(run)
    run.emit("schedule.json", _json_bytes(schedule.to_dict()))
    ens = simulate_ensemble(cfg.params, schedule, sim.model, sim.horizon, sim.n_steps, sim.n_paths,
                            seed=rngmod.derive_seed(cfg.seed, SIM_SEED), parallelism=run.parallelism)
    name = "ensemble.csv" if sim.format == "csv" else "ensemble.bin"
    (write_ensemble_csv if sim.format == "csv" else write_ensemble_binary)(ens, run.path(name))
    run.record(name)
    theta_grid = schedule.on_grid(ens.times[:-1])
    summary = {
        "model": sim.model,
        "n_paths": ens.n_paths,
        "n_steps": sim.n_steps,
        "horizon": sim.horizon,
        "theta_mean": float(np.mean(theta_grid)),
        "mean_X_T": math.fsum(ens.X[:, -1]) / ens.n_paths,
        "mean_S_T": math.fsum(ens.S[:, -1]) / ens.n_paths,
        "mean_sigma_sq_T": float(ens.mean_sigma_sq[-1]),
    }
    run.emit("simulate.json", _json_bytes(summary))
    run.summary["simulate"] = summary


def stage_correlate(run: Run) -> None:
    cfg, c = run.cfg, run.cfg.correlate
    rows = decay_profile(cfg.params, c.model, c.s, c.t_grid, c.n_paths, seed=rngmod.derive_seed(cfg.seed, CORR_SEED),
                         theta=c.theta, variance=c.variance, parallelism=run.parallelism)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "formula_corr", "mc_corr", "mc_se", "mc_robust_se", "z"])
    table = []
    for r in rows:
        z = (r.mc_corr - r.formula_corr) / r.mc_se if c.n_paths > 0 else math.nan
        w.writerow([repr(r.t), repr(r.formula_corr), repr(r.mc_corr), repr(r.mc_se), repr(r.mc_robust_se), repr(z)])
        table.append({"t": r.t, "formula_corr": r.formula_corr, "mc_corr": _finite(r.mc_corr),
                      "mc_se": _finite(r.mc_se), "mc_robust_se": _finite(r.mc_robust_se), "z": _finite(z)})
    run.emit("decay.csv", buf.getvalue().encode())
    zs = [abs(row["z"]) for row in table if row["z"] is not None]
    summary = {
        "model": c.model, "s": c.s, "theta": c.theta, "n_paths": c.n_paths, "rows": table,
        "max_abs_z": max(zs) if zs else None,
        "all_within_3se": all(z <= 3 for z in zs) if zs else None,
    }
    run.emit("correlate.json", _json_bytes(summary))
    run.summary["correlate"] = {k: v for k, v in summary.items() if k != "rows"}


STAGE_FUNCS = {
    "ingest": stage_ingest, "stats": stage_stats, "label": stage_label, "train": stage_train,
    "evaluate": stage_evaluate, "simulate": stage_simulate, "correlate": stage_correlate,
}
PIPELINE = ("ingest", "stats", "label", "train", "evaluate", "simulate", "correlate")


def execute(command: str, cfg: PipelineConfig, out: Path, parallelism: int = 1) -> Run:
    """Run a subcommand (or the whole chain) and write its manifest; raises StageError."""
    out.mkdir(parents=True, exist_ok=True)
    run = Run(cfg, out, parallelism)
    for stage in (PIPELINE if command == "pipeline" else (command,)):
        try:
            STAGE_FUNCS[stage](run)
        except Exception as exc:  # any failure stops the chain and names the stage
            raise StageError(stage, exc) from exc
    (out / f"manifest-{command}.json").write_bytes(run.manifest(command))
    return run


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file or a previous run's manifest")
    common.add_argument("--data", help="input CSV with Date and Close columns")
    common.add_argument("--k", type=float, dest="k_percent", help="jump threshold in percent (default 2.0)")
    common.add_argument("--train-range", help="inclusive index range A:B for training rows")
    common.add_argument("--test-range", help="inclusive index range A:B for test rows")
    common.add_argument("--model", help="lr, rf, nn, lstm, lstm-bn or all")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--paths", type=int, help="Monte Carlo paths for simulate and correlate")
    common.add_argument("--steps", type=int, help="time steps for simulate")
    common.add_argument("--horizon", type=float, help="simulation horizon T in years")
    common.add_argument("--format", choices=("csv", "binary"), help="ensemble output format")
    common.add_argument("--theta-source", choices=("classifier", "constant"))
    common.add_argument("--theta-mode", choices=("hard", "soft"))
    common.add_argument("--parallelism", type=int, default=1,
                        help="simulation threads; never changes results")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="bns", description="Refined BN-S labeling, learning and simulation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "validate and normalise the price CSV",
        "stats": "summary statistics and plot data",
        "label": "window the series and label big-jump horizons",
        "train": "fit the classifier(s) on the training range",
        "evaluate": "classification report on the test range",
        "simulate": "simulate an ensemble driven by the theta schedule",
        "correlate": "formula vs Monte Carlo decay of Corr(X_s, X_t)",
        "pipeline": "run every stage in order",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    o = {}
    simple = {"data": "data", "k_percent": "k_percent", "train_range": "train_range", "test_range": "test_range",
              "model": "model", "seed": "seed", "out": "out", "steps": "sim.n_steps", "horizon": "sim.horizon",
              "format": "sim.format", "theta_source": "sim.theta_source", "theta_mode": "sim.theta_mode"}
    for attr, key in simple.items():
        v = getattr(args, attr)
        if v is not None:
            o[key] = v
    if args.paths is not None:
        o["sim.n_paths"] = args.paths
        o["correlate.n_paths"] = args.paths
    return o


def _fail(payload: dict, code: int) -> int:
    print(json.dumps({"error": payload}, sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        file_doc = read_config_file(args.config) if args.config else None
        cfg = resolve(file_doc, overrides_from_args(args))
    except ConfigError as exc:
        return _fail({"stage": "config", "errors": exc.errors}, 2)
    if args.parallelism < 1:
        return _fail({"stage": "config", "errors": ["--parallelism must be >= 1"]}, 2)
    out = Path(cfg.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    try:
        run = execute(args.command, cfg, out, args.parallelism)
    except StageError as exc:
        return _fail({"stage": exc.stage, "type": type(exc.exc).__name__, "message": str(exc.exc)}, 1)
    if "evaluate" in run.summary:
        print(run.summary["evaluate"]["table"])
    summary = {k: v for k, v in run.summary.items() if k != "evaluate"}
    if args.command in summary:
        summary = summary[args.command]
    if summary:
        print(json.dumps(summary, indent=2, sort_keys=True))
    print(f"manifest: {out / f'manifest-{args.command}.json'}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
