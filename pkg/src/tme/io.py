"""Run configuration, result records, and scan plumbing for the CLI.

Records are plain JSON-native dicts (schema version 1): every value a
string, number, bool, list or dict, so a written record reads back as an
identical in-memory object.  Complex results are stored as {"re", "im"}
pairs.  Each record embeds the flat config snapshot it was produced from
and the build identifier, so runs are traceable and reruns comparable.
"""
from __future__ import annotations

import csv
import datetime
import json
import os
import subprocess
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

SCHEMA_VERSION = 1

# predicted phases smaller than this are compared with absolute error --
# the relative error against an exactly-zero prediction is undefined
ZERO_PHASE_CUTOFF = 1e-6


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (CLI exit status 2)."""


# ---------------------------------------------------------------------------
# build identifier
# ---------------------------------------------------------------------------

_BUILD_ID: Optional[str] = None


def build_id() -> str:
    """Short git revision of the source tree, or 'unknown' outside a repo."""
    global _BUILD_ID
    if _BUILD_ID is None:
        here = os.path.dirname(os.path.abspath(__file__))
        try:
            out = subprocess.run(
                ["git", "rev-parse", "--short", "HEAD"],
                cwd=here, capture_output=True, text=True, timeout=10)
            _BUILD_ID = out.stdout.strip() if out.returncode == 0 else ""
        except OSError:
            _BUILD_ID = ""
        if not _BUILD_ID:
            _BUILD_ID = "unknown"
    return _BUILD_ID


# ---------------------------------------------------------------------------
# flat key=value configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Flat configuration: section-qualified keys mapping to strings.

    Values stay strings until a typed getter is called, so that the
    snapshot embedded in result records is exactly what was supplied.
    """
    subcommand: str
    options: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        import configparser
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        flat: Dict[str, str] = {}
        for section in parser.sections():
            for key, val in parser.items(section):
                flat[f"{section}.{key}"] = val
        sub = flat.pop("run.subcommand", None)
        if sub is None:
            raise ConfigError("config must set run.subcommand")
        return cls(subcommand=sub, options=flat)

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        return self.options.get(key, default)

    def _typed(self, key, default, cast, what):
        raw = self.options.get(key)
        if raw is None or raw == "":
            return default
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected {what}, got {raw!r}") from exc

    def get_int(self, key: str, default: Optional[int] = None) -> Optional[int]:
        return self._typed(key, default, int, "an integer")

    def get_float(self, key: str,
                  default: Optional[float] = None) -> Optional[float]:
        return self._typed(key, default, float, "a number")

    def get_bool(self, key: str, default: bool = False) -> bool:
        raw = self.options.get(key)
        if raw is None:
            return default
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")

    def require(self, key: str) -> str:
        raw = self.options.get(key)
        if raw is None or raw == "":
            raise ConfigError(f"missing required option {key}")
        return raw

    def snapshot(self) -> Dict[str, str]:
        snap = {"run.subcommand": self.subcommand}
        snap.update(sorted(self.options.items()))
        return snap


def workers_from(config: RunConfig) -> int:
    """Worker count: TME_WORKERS env beats the config key, default 1."""
    env = os.environ.get("TME_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"TME_WORKERS: expected an integer, "
                              f"got {env!r}") from exc
    else:
        n = config.get_int("run.workers", 1)
    if n < 1:
        raise ConfigError(f"worker count must be >= 1, got {n}")
    return n


def run_parallel(fn, items: Sequence, workers: int) -> list:
    """Map fn over items, preserving order; job-level parallelism only."""
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=workers)(delayed(fn)(x) for x in items)


# ---------------------------------------------------------------------------
# grids and scans
# ---------------------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    """'0.2:1.2:6' -> 6 evenly spaced points from 0.2 to 1.2 inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"malformed grid {text!r}") from exc
    if count < 1:
        raise ConfigError(f"grid needs at least one point: {text!r}")
    return np.linspace(start, stop, count)


def parse_scan(text: str):
    """'Jx=0.1:1.0:19' -> ('jx', array of 19 points)."""
    if "=" not in text:
        raise ConfigError(f"scan must be name=start:stop:count, got {text!r}")
    name, grid = text.split("=", 1)
    name = name.strip().lower()
    if not name:
        raise ConfigError(f"scan needs a parameter name: {text!r}")
    return name, parse_grid(grid.strip())


def unwrap_phases(phases: Sequence[float]) -> np.ndarray:
    """Nearest-branch continuation of a phase series along a scan grid."""
    return np.unwrap(np.asarray(phases, dtype=float))


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

def c2j(z: complex) -> Dict[str, float]:
    z = complex(z)
    return {"re": float(z.real), "im": float(z.imag)}


def result_record(kind: str, config: RunConfig, payload: dict) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "build": build_id(),
        "created": datetime.datetime.now(
            datetime.timezone.utc).isoformat(timespec="seconds"),
        "config": config.snapshot(),
        "result": payload,
    }


def diagnostic_record(config: RunConfig, exc: BaseException) -> dict:
    return result_record("diagnostic", config, {
        "error": str(exc),
        "error_type": type(exc).__name__,
    })


def write_record(path: str, record: dict) -> None:
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_record(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_csv(path: str, header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


# ---------------------------------------------------------------------------
# comparison against predictions
# ---------------------------------------------------------------------------

def compare_measures(measures: List[dict], predictions: Sequence[float],
                     tolerance: float) -> List[dict]:
    """Per-measure phase error table (predictions aligned with measures).

    Relative error |arg_num - arg_pred| / |arg_pred| per measure; when the
    predicted phase is below ZERO_PHASE_CUTOFF the comparison falls back to
    the absolute error (division guard for topologically trivial phases).
    """
    if not measures:
        raise ConfigError("record contains no measures to compare")
    if len(predictions) != len(measures):
        raise ConfigError(f"{len(predictions)} predictions for "
                          f"{len(measures)} measures")
    rows = []
    for m, arg_pred in zip(measures, predictions):
        name = m.get("name")
        arg_num = float(m["arg"])
        arg_pred = float(arg_pred)
        if abs(arg_pred) < ZERO_PHASE_CUTOFF:
            err = abs(arg_num - arg_pred)
            mode = "absolute"
        else:
            err = abs(arg_num - arg_pred) / abs(arg_pred)
            mode = "relative"
        rows.append({
            "name": name,
            "arg_num": arg_num,
            "arg_pred": arg_pred,
            "error": err,
            "mode": mode,
            "ok": bool(err < tolerance),
        })
    return rows


def format_compare_table(rows: List[dict], tolerance: float) -> str:
    lines = [f"{'measure':<10} {'arg_num':>13} {'arg_pred':>13} "
             f"{'error':>11} {'mode':>9}  verdict"]
    for r in rows:
        verdict = "pass" if r["ok"] else "FAIL"
        lines.append(f"{r['name']:<10} {r['arg_num']:>13.6e} "
                     f"{r['arg_pred']:>13.6e} {r['error']:>11.4e} "
                     f"{r['mode']:>9}  {verdict}")
    lines.append(f"tolerance: {tolerance:g}")
    return "\n".join(lines)
