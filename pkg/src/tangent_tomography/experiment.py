"""Batch experiments: configuration, per-run CSV traces and JSON summaries.

Every number written to ``summary.json`` is computed from the parsed CSV
traces, so a summary can always be regenerated from the traces alone.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .engine import PRESETS, Checkpoint, RunRecord, default_checkpoint_every, derive_constants, run
from .environment import new_environment
from .errors import ConfigError
from .geometry import PureState
from .warmup import WarmupConfig

TRACE_HEADER = ("t", "epoch", "step", "lambda", "cumulative_regret", "online_infidelity")


@dataclass(frozen=True)
class ExperimentConfig:
    dimensions: tuple[int, ...]
    horizon: int
    seeds: tuple[int, ...]
    preset: str = "practical"
    overrides: dict = field(default_factory=dict)
    checkpoint_every: int | None = None
    out: str = "results"
    state_file: str | None = None
    workers: int = 1
    c_w: float = 40.0
    emit_traces: bool = True

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(int(d) for d in self.dimensions))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "overrides", dict(self.overrides))
        self.validate()

    def validate(self):
        if not self.dimensions:
            raise ConfigError("dimension: at least one value is required")
        if any(d < 2 for d in self.dimensions):
            raise ConfigError(f"dimension: values must be >= 2, got {list(self.dimensions)}")
        if not self.seeds:
            raise ConfigError("seed: at least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seed: seeds must be nonnegative")
        if self.horizon < 1:
            raise ConfigError(f"horizon: must be >= 1, got {self.horizon}")
        if self.preset not in PRESETS:
            raise ConfigError(f"preset: must be one of {PRESETS}, got {self.preset!r}")
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every: must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        for d in self.dimensions:
            try:
                consts = derive_constants(d, self.horizon, self.preset, self.overrides)
            except ConfigError as exc:
                raise ConfigError(f"overrides: {exc}") from None
            try:
                T0 = WarmupConfig(c_w=self.c_w, delta_w=consts.delta_w).total(d)
            except ConfigError as exc:
                raise ConfigError(f"c_w: {exc}") from None
            if self.horizon < T0:
                raise ConfigError(f"horizon: {self.horizon} is below the warm-up cost {T0} at d={d}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["dimensions"] = list(self.dimensions)
        out["seeds"] = list(self.seeds)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"{key}: unknown configuration key")
        for key in ("dimensions", "horizon", "seeds"):
            if key not in data:
                raise ConfigError(f"{key}: missing required field")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> ExperimentConfig:
        return cls.from_dict(json.loads(text))


def load_state_file(path: str | Path) -> PureState:
    """Read amplitudes written as one ``re im`` pair per line."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"state_file: line {lineno} must hold 're im'")
        try:
            values.append(complex(float(parts[0]), float(parts[1])))
        except ValueError:
            raise ConfigError(f"state_file: line {lineno} is not numeric") from None
    vec = np.array(values, dtype=complex)
    norm = float(np.linalg.norm(vec))
    if vec.size < 2 or norm == 0:
        raise ConfigError("state_file: need at least two amplitudes with nonzero norm")
    if abs(norm - 1.0) > 1e-6:
        warnings.warn(f"state file norm {norm:.9g} differs from 1; normalizing", stacklevel=2)
    return PureState.from_vector(vec)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def emit_trace(trace: list[Checkpoint], path) -> None:
    """Write checkpoints as CSV; absent values become empty fields."""
    with open(path, "w", newline="") as fh:
        fh.write(format_trace(trace))


def format_trace(trace: list[Checkpoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for c in trace:
        w.writerow([_fmt(c.t), _fmt(c.epoch), _fmt(c.step), _fmt(c.lam),
                    _fmt(c.cumulative_regret), _fmt(c.online_infidelity)])
    return buf.getvalue()


def parse_trace(path_or_text) -> list[Checkpoint]:
    """Inverse of :func:`emit_trace`; accepts a path or the CSV text."""
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != TRACE_HEADER:
        raise ValueError("not a trace file: unexpected header")

    def opt(s):
        return None if s == "" else float(s)

    return [Checkpoint(int(r[0]), int(r[1]), int(r[2]), opt(r[3]), opt(r[4]), opt(r[5]))
            for r in rows[1:]]


def trace_name(d: int, seed: int) -> str:
    return f"trace_d{d}_s{seed}.csv"


@dataclass
class CellResult:
    d: int
    seed: int
    trace_csv: str | None
    error: str | None = None
    record: RunRecord | None = None


def run_cell(cfg: ExperimentConfig, d: int, seed: int, keep_record: bool = False) -> CellResult:
    """One (dimension, seed) run; failures are returned, not raised."""
    try:
        state = load_state_file(cfg.state_file) if cfg.state_file else None
        if state is not None and state.dim != d:
            raise ConfigError(f"state_file: state has d={state.dim}, cell has d={d}")
        env = new_environment(d, seed, state)
        rec = run(env, d, cfg.horizon, cfg.preset, cfg.overrides, cfg.checkpoint_every, cfg.c_w)
        return CellResult(d, seed, format_trace(rec.trace), None, rec if keep_record else None)
    except Exception as exc:  # reported per cell
        return CellResult(d, seed, None, f"{type(exc).__name__}: {exc}")


def _cell_job(args):
    cfg_dict, d, seed = args
    return run_cell(ExperimentConfig.from_dict(cfg_dict), d, seed)


def _fit_slope(x, y) -> float | None:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2 or np.ptp(x[ok]) == 0:
        return None
    return float(np.polyfit(x[ok], y[ok], 1)[0])


def _mean_std(values) -> dict:
    a = np.asarray(values, float)
    return {"mean": float(a.mean()), "std": float(a.std(ddof=1)) if a.size > 1 else 0.0}


def scaling_report(traces: dict[tuple[int, int], list[Checkpoint]]) -> dict:
    """Per-dimension aggregates computed only from checkpoint lists.

    Exponents: slope of log mean regret against log log t (about 2 for
    log-squared growth) and slope of log mean infidelity against log t
    (about -1 for 1/t decay), both over checkpoints shared by all seeds.
    """
    report = {}
    for d in sorted({k[0] for k in traces}):
        cells = {s: tr for (dd, s), tr in traces.items() if dd == d and tr}
        if not cells:
            continue
        seeds = sorted(cells)
        final_regret = [cells[s][-1].cumulative_regret for s in seeds]
        final_inf = [cells[s][-1].online_infidelity for s in seeds]
        common = set.intersection(*({c.t for c in cells[s]} for s in seeds))
        ts = sorted(common)
        by_t = {s: {c.t: c for c in cells[s]} for s in seeds}
        reg_mean, inf_mean, inf_std = [], [], []
        for t in ts:
            r = [by_t[s][t].cumulative_regret for s in seeds]
            reg_mean.append(float(np.mean(r)))
            f = [by_t[s][t].online_infidelity for s in seeds]
            if any(v is None for v in f):
                inf_mean.append(None)
                inf_std.append(None)
            else:
                ms = _mean_std(f)
                inf_mean.append(ms["mean"])
                inf_std.append(ms["std"])
        post = [i for i, m in enumerate(inf_mean) if m is not None and m > 0 and ts[i] > 1]
        reg_ok = [i for i in post if reg_mean[i] > 0 and math.log(ts[i]) > 1]
        report[str(d)] = {
            "seeds": seeds,
            "horizon": cells[seeds[0]][-1].t,
            "final_regret": _mean_std(final_regret),
            "final_online_infidelity": (_mean_std(final_inf)
                                        if all(v is not None for v in final_inf) else None),
            "checkpoints": {"t": ts, "mean_regret": reg_mean,
                            "mean_online_infidelity": inf_mean, "std_online_infidelity": inf_std},
            "regret_loglog_exponent": _fit_slope([math.log(math.log(ts[i])) for i in reg_ok],
                                                 [math.log(reg_mean[i]) for i in reg_ok]),
            "infidelity_log_exponent": _fit_slope([math.log(ts[i]) for i in post],
                                                  [math.log(inf_mean[i]) for i in post]),
        }
    return report


def build_summary(cfg: ExperimentConfig, traces: dict, errors: dict) -> dict:
    cells = []
    for (d, seed) in sorted(set(traces) | set(errors)):
        tr = traces.get((d, seed))
        entry = {"d": d, "seed": seed, "trace": trace_name(d, seed) if tr is not None else None,
                 "error": errors.get((d, seed))}
        if tr:
            warm = [c.t for c in tr if c.epoch == 0]
            entry.update(total_copies=tr[-1].t, warmup_copies=max(warm) if warm else 0,
                         epochs_started=max(c.epoch for c in tr),
                         final_regret=tr[-1].cumulative_regret,
                         final_online_infidelity=tr[-1].online_infidelity)
        cells.append(entry)
    ok = {k: v for k, v in traces.items() if k not in errors}
    # where and how fast the batch ran does not change any result
    echo = {k: v for k, v in cfg.to_dict().items() if k not in ("out", "workers")}
    return {"config": echo, "cells": cells, "scaling": scaling_report(ok)}


def run_batch(cfg: ExperimentConfig, write: bool = True) -> tuple[list[CellResult], dict]:
    """Run every (dimension, seed) cell and write traces plus ``summary.json``."""
    jobs = [(d, s) for d in cfg.dimensions for s in cfg.seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_cell_job, [(cfg.to_dict(), d, s) for d, s in jobs]))
    else:
        results = [run_cell(cfg, d, s) for d, s in jobs]
    results.sort(key=lambda r: (r.d, r.seed))

    out = Path(cfg.out)
    traces, errors = {}, {}
    for r in results:
        if r.error is not None:
            errors[(r.d, r.seed)] = r.error
            continue
        traces[(r.d, r.seed)] = parse_trace(r.trace_csv)
        if write and cfg.emit_traces:
            try:
                out.mkdir(parents=True, exist_ok=True)
                (out / trace_name(r.d, r.seed)).write_text(r.trace_csv)
            except OSError as exc:
                r.error = errors[(r.d, r.seed)] = f"{type(exc).__name__}: {exc}"
    summary = build_summary(cfg, traces, errors)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return results, summary


def summary_from_directory(cfg: ExperimentConfig, directory) -> dict:
    """Rebuild the summary from trace files on disk."""
    directory = Path(directory)
    traces = {}
    for d in cfg.dimensions:
        for s in cfg.seeds:
            p = directory / trace_name(d, s)
            if p.exists():
                traces[(d, s)] = parse_trace(p)
    errors = {(d, s): "missing trace" for d in cfg.dimensions for s in cfg.seeds if (d, s) not in traces}
    return build_summary(cfg, traces, errors)


__all__ = ["ExperimentConfig", "TRACE_HEADER", "emit_trace", "format_trace", "parse_trace",
           "run_batch", "run_cell", "scaling_report", "build_summary", "load_state_file",
           "summary_from_directory", "default_checkpoint_every"]
