"""JSON documents for instances, configurations and failure schedules."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .model import BackupPlan, Configuration, Instance, InstanceError

SCHEMA_VERSION = 1


class DocumentError(ValueError):
    """A document is unreadable, truncated or inconsistent."""


def _read(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise DocumentError(f"{path}: top level must be an object")
    _check_version(doc, str(path))
    return doc


def _check_version(doc: dict, where: str) -> None:
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise DocumentError(f"{where}: unsupported schema_version {version!r}")


def _write(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _field(doc: dict, name: str, where: str) -> Any:
    if name not in doc:
        raise DocumentError(f"{where}: missing field {name!r}")
    return doc[name]


def _vector(doc: dict, name: str, n: int, where: str) -> np.ndarray:
    raw = _field(doc, name, where)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{where}: field {name!r} is not numeric") from exc
    if arr.shape != (n,):
        raise DocumentError(f"{where}: field {name!r} must have {n} entries")
    return arr


def instance_to_dict(inst: Instance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n": inst.n,
        "f_min": inst.f_min,
        "D": [float(v) for v in inst.D.reshape(-1)],
        "dv": [float(v) for v in inst.dv],
        "dv_rev": [float(v) for v in inst.dv_rev],
        "f": [float(v) for v in inst.f],
    }


def instance_from_dict(doc: dict, where: str = "instance") -> Instance:
    _check_version(doc, where)
    n = _field(doc, "n", where)
    f_min = doc.get("f_min", 1)
    if not isinstance(n, int) or isinstance(n, bool) or n <= 0:
        raise DocumentError(f"{where}: n must be a positive integer")
    if not isinstance(f_min, int) or isinstance(f_min, bool) or f_min <= 0:
        raise DocumentError(f"{where}: f_min must be a positive integer")
    D = _vector(doc, "D", n * n, where).reshape(n, n)
    dv = _vector(doc, "dv", n, where)
    dv_rev = _vector(doc, "dv_rev", n, where) if doc.get("dv_rev") is not None else None
    f = _vector(doc, "f", n, where)
    try:
        return Instance(D=D, dv=dv, f=f, f_min=f_min, dv_rev=dv_rev)
    except InstanceError as exc:
        raise DocumentError(f"{where}: {exc}") from exc


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(_read(path), str(path))


def save_instance(inst: Instance, path: str | Path) -> None:
    _write(path, instance_to_dict(inst))


def configuration_to_dict(cfg: Configuration, plan: BackupPlan | None = None, objective_value: float | None = None,
                          stats: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "leader_of": list(cfg.leader_of),
        "backups": {str(k): v for k, v in (plan.backup_of.items() if plan else [])},
        "objective_value": objective_value,
        "stats": dict(stats or {}),
    }


def configuration_from_dict(doc: dict, where: str = "configuration") -> tuple[Configuration, BackupPlan, float | None, dict]:
    _check_version(doc, where)
    leader_of = _field(doc, "leader_of", where)
    if not isinstance(leader_of, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in leader_of):
        raise DocumentError(f"{where}: leader_of must be a list of integers")
    backups = doc.get("backups") or {}
    if not isinstance(backups, dict):
        raise DocumentError(f"{where}: backups must be an object")
    try:
        plan = BackupPlan({int(k): int(v) for k, v in backups.items()})
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{where}: backups must map integers to integers") from exc
    value = doc.get("objective_value")
    if value is not None and not isinstance(value, (int, float)):
        raise DocumentError(f"{where}: objective_value must be a number")
    stats = doc.get("stats") or {}
    if not isinstance(stats, dict):
        raise DocumentError(f"{where}: stats must be an object")
    return Configuration(tuple(leader_of)), plan, value, stats


def load_configuration(path: str | Path) -> tuple[Configuration, BackupPlan, float | None, dict]:
    return configuration_from_dict(_read(path), str(path))


def save_configuration(path: str | Path, cfg: Configuration, plan: BackupPlan | None = None,
                       objective_value: float | None = None, stats: dict | None = None) -> None:
    _write(path, configuration_to_dict(cfg, plan, objective_value, stats))


def load_schedule(path: str | Path) -> list[tuple[int, int]]:
    """A schedule is ``{"schedule": [[view, node], ...]}``."""
    doc = _read(path)
    raw = _field(doc, "schedule", str(path))
    out = []
    if not isinstance(raw, list):
        raise DocumentError(f"{path}: schedule must be a list")
    for entry in raw:
        if (not isinstance(entry, list) or len(entry) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in entry)):
            raise DocumentError(f"{path}: schedule entries must be [view, node] integer pairs")
        out.append((entry[0], entry[1]))
    return out


def save_schedule(path: str | Path, schedule: list[tuple[int, int]]) -> None:
    _write(path, {"schema_version": SCHEMA_VERSION, "schedule": [[int(v), int(n)] for v, n in schedule]})
