"""Pipeline configuration: defaults, JSON layering and exhaustive validation.

A configuration is assembled from three layers, later ones winning::

    defaults  <  JSON config file (or a manifest's "config" block)  <  CLI flags

Every problem found is collected before anything runs, so a bad file reports
all of its mistakes at once.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .learners import MODEL_NAMES, TrainConfig
from .levy_sim import MODELS, TRADING_DAY, BnsParams
from .market_data import DEFAULT_SCHEMA
from .windowing import HORIZON, WINDOW, parse_range

THETA_SOURCES = ("classifier", "constant")
THETA_MODES = ("hard", "soft")
FORMATS = ("csv", "binary")
CONVENTIONS = ("boundary", "strict")
VARIANCE_MODES = ("ensemble", "expected")


class ConfigError(ValueError):
    """Configuration failed validation; ``errors`` lists every problem."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SimSettings:
    """Monte Carlo run driven by the theta schedule.

    ``horizon`` is in years.  With ``theta_source="classifier"`` the schedule
    comes from the test-split predictions of ``theta_model`` (the trained
    model when left ``None``); ``"constant"`` uses ``params.theta``.
    """

    model: str = "refined"
    horizon: float = 1.0
    n_steps: int = 252
    n_paths: int = 200
    theta_source: str = "classifier"
    theta_mode: str = "hard"
    theta_model: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class CorrSettings:
    """Decay table of Corr(X_s, X_t) on a daily grid, formula next to Monte Carlo."""

    model: str = "refined"
    s: float = 1.0
    t_grid: tuple[float, ...] = (2.0, 3.0, 4.0, 5.0)
    n_paths: int = 2000
    theta: float = 0.5
    variance: str = "ensemble"


@dataclass(frozen=True)
class PipelineConfig:
    data: str | None = None
    columns: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_SCHEMA))
    k_percent: float = 2.0
    train_range: tuple[int, int] | None = (100, 500)
    test_range: tuple[int, int] | None = (501, 600)
    split_convention: str = "boundary"
    model: str = "lr"
    train: TrainConfig = field(default_factory=TrainConfig)
    params: BnsParams = field(default_factory=BnsParams)
    sim: SimSettings = field(default_factory=SimSettings)
    correlate: CorrSettings = field(default_factory=CorrSettings)
    seed: int = 0
    bins: int = 60
    out: str | None = None

    @property
    def window(self) -> int:
        return WINDOW

    @property
    def horizon_days(self) -> int:
        return HORIZON

    @property
    def models(self) -> tuple[str, ...]:
        return MODEL_NAMES if self.model == "all" else (self.model,)

    @property
    def theta_model(self) -> str:
        if self.sim.theta_model is not None:
            return self.sim.theta_model
        return "nn" if self.model == "all" else self.model

    def to_dict(self, include_out: bool = True) -> dict:
        d = {
            "data": self.data,
            "columns": dict(self.columns),
            "k_percent": self.k_percent,
            "train_range": list(self.train_range) if self.train_range else None,
            "test_range": list(self.test_range) if self.test_range else None,
            "split_convention": self.split_convention,
            "model": self.model,
            "train": self.train.to_dict(),
            "params": self.params.to_dict(),
            "sim": asdict(self.sim),
            "correlate": {**asdict(self.correlate), "t_grid": list(self.correlate.t_grid)},
            "seed": self.seed,
            "bins": self.bins,
        }
        if include_out:
            d["out"] = self.out
        return d

    def digest(self) -> str:
        """sha256 of the canonical JSON form; the output directory is not part of it."""
        return hashlib.sha256(canonical_json(self.to_dict(include_out=False)).encode()).hexdigest()


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def defaults() -> dict:
    return PipelineConfig().to_dict()


def merge(base: dict, override: Mapping) -> dict:
    """Recursive dict merge; ``override`` wins, nested mappings are merged key by key."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict) and key != "columns":
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def set_dotted(d: dict, dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


def read_config_file(path: str | Path) -> dict:
    """Load a JSON config, accepting either a bare config or a run manifest."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file {path} is not valid JSON: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError([f"config file {path} must hold a JSON object"])
    if "config" in doc and "config_sha256" in doc:
        return doc["config"]
    return doc


def _range(name: str, value, errors: list[str]):
    if value is None:
        return None
    if isinstance(value, str):
        try:
            value = parse_range(value)
        except ValueError:
            errors.append(f"{name} must look like A:B, got {value!r}")
            return None
        if value is None:
            return None
    try:
        a, b = (int(v) for v in value)
    except (TypeError, ValueError):
        errors.append(f"{name} must be a pair of integers")
        return None
    if not 0 <= a <= b:
        errors.append(f"{name} must satisfy 0 <= A <= B, got {a}:{b}")
    return a, b


def _section(cls, raw, name: str, errors: list[str], **forced):
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        errors.append(f"{name} must be an object")
        return None
    raw = {**raw, **forced}
    if hasattr(cls, "from_dict"):
        try:
            return cls.from_dict(raw)
        except (TypeError, ValueError) as exc:
            errors.append(f"{name}: {exc}")
            return None
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        errors.append(f"{name}: unknown fields {unknown}")
        raw = {k: v for k, v in raw.items() if k in known}
    return cls(**raw)


def _on_daily_grid(value: float) -> bool:
    k = round(value / TRADING_DAY)
    return abs(k * TRADING_DAY - value) <= 1e-9 * TRADING_DAY


def from_dict(raw: Mapping) -> PipelineConfig:
    """Build and validate a config; raises :class:`ConfigError` listing every problem."""
    errors: list[str] = []
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        errors.append(f"unknown config fields {unknown}")
    base = PipelineConfig()
    get = (lambda k: raw.get(k, getattr(base, k)))

    seed = get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append(f"seed must be a non-negative integer, got {seed!r}")
        seed = 0
    k = get("k_percent")
    if not isinstance(k, (int, float)) or not k > 0 or not math.isfinite(k):
        errors.append(f"k_percent must be a positive number, got {k!r}")
    columns = get("columns")
    if not isinstance(columns, Mapping) or set(columns) != {"date", "close"}:
        errors.append("columns must map exactly 'date' and 'close' to CSV header names")
    train_range = _range("train_range", get("train_range"), errors)
    test_range = _range("test_range", get("test_range"), errors)
    if train_range and test_range and train_range[0] <= test_range[1] and test_range[0] <= train_range[1]:
        errors.append(f"train_range {train_range} overlaps test_range {test_range}")
    convention = get("split_convention")
    if convention not in CONVENTIONS:
        errors.append(f"split_convention must be one of {CONVENTIONS}")
    model = get("model")
    if model not in MODEL_NAMES + ("all",):
        errors.append(f"model must be one of {MODEL_NAMES + ('all',)}, got {model!r}")
    bins = get("bins")
    if not isinstance(bins, int) or bins < 1:
        errors.append("bins must be a positive integer")
    data, out = get("data"), get("out")
    for name, v in (("data", data), ("out", out)):
        if v is not None and not isinstance(v, str):
            errors.append(f"{name} must be a path string")

    train = _section(TrainConfig, raw.get("train"), "train", errors, rng_seed=seed)
    params = _section(BnsParams, raw.get("params"), "params", errors)
    sim = _section(SimSettings, raw.get("sim"), "sim", errors)
    corr_raw = dict(raw.get("correlate") or {})
    if "t_grid" in corr_raw and isinstance(corr_raw["t_grid"], list):
        corr_raw["t_grid"] = tuple(corr_raw["t_grid"])
    corr = _section(CorrSettings, corr_raw, "correlate", errors)

    if sim is not None:
        if sim.model not in MODELS:
            errors.append(f"sim.model must be one of {MODELS}")
        if not (isinstance(sim.horizon, (int, float)) and sim.horizon > 0):
            errors.append("sim.horizon must be positive (years)")
        if not (isinstance(sim.n_steps, int) and sim.n_steps >= 1):
            errors.append("sim.n_steps must be an integer >= 1")
        if not (isinstance(sim.n_paths, int) and sim.n_paths >= 1):
            errors.append("sim.n_paths must be an integer >= 1")
        if sim.theta_source not in THETA_SOURCES:
            errors.append(f"sim.theta_source must be one of {THETA_SOURCES}")
        if sim.theta_mode not in THETA_MODES:
            errors.append(f"sim.theta_mode must be one of {THETA_MODES}")
        if sim.format not in FORMATS:
            errors.append(f"sim.format must be one of {FORMATS}")
        if sim.theta_model is not None and sim.theta_model not in MODEL_NAMES:
            errors.append(f"sim.theta_model must be one of {MODEL_NAMES}")
        elif (sim.theta_source == "classifier" and sim.theta_model is not None
              and model in MODEL_NAMES and sim.theta_model != model):
            errors.append(f"sim.theta_model {sim.theta_model!r} is not trained when model={model!r}")
        if sim.theta_source == "classifier" and test_range is None:
            errors.append("sim.theta_source='classifier' needs a test_range to predict on")
        if params is not None and sim.model in MODELS:
            try:
                params.require(sim.model)
            except ValueError as exc:
                errors.append(f"sim: {exc}")
    if corr is not None:
        if corr.model not in ("classical", "refined"):
            errors.append("correlate.model must be 'classical' or 'refined'")
        grid = corr.t_grid
        if not (isinstance(corr.s, (int, float)) and corr.s > 0 and _on_daily_grid(corr.s)):
            errors.append("correlate.s must be a positive multiple of one trading day")
        elif not grid or any(not _on_daily_grid(t) for t in grid) or grid[0] <= corr.s or any(
                b <= a for a, b in zip(grid, grid[1:])):
            errors.append("correlate.t_grid must be increasing trading-day multiples above s")
        if not (isinstance(corr.n_paths, int) and corr.n_paths >= 0):
            errors.append("correlate.n_paths must be a non-negative integer")
        if not 0 <= corr.theta <= 1:
            errors.append("correlate.theta must lie in [0, 1]")
        if corr.variance not in VARIANCE_MODES:
            errors.append(f"correlate.variance must be one of {VARIANCE_MODES}")
        elif corr.variance == "ensemble" and corr.n_paths == 0:
            errors.append("correlate.variance='ensemble' needs correlate.n_paths > 0")
    if errors:
        raise ConfigError(errors)
    return PipelineConfig(
        data=data, columns=dict(columns), k_percent=float(k), train_range=train_range, test_range=test_range,
        split_convention=convention, model=model, train=train, params=params, sim=sim, correlate=corr,
        seed=seed, bins=bins, out=out,
    )


def resolve(file_doc: Mapping | None = None, overrides: Mapping[str, Any] | None = None) -> PipelineConfig:
    """Layer defaults, a config document and dotted-key overrides, then validate."""
    raw = defaults()
    if file_doc:
        raw = merge(raw, file_doc)
    for key, value in (overrides or {}).items():
        set_dotted(raw, key, value)
    # the train section's seed always follows the root seed
    if isinstance(raw.get("train"), dict):
        raw["train"].pop("rng_seed", None)
    return from_dict(raw)
