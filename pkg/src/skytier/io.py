"""Deterministic CSV and JSON writers for runs and sweeps.

Floats are written with ``repr`` (shortest round-trip form) and JSON keys
are sorted, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .demand import UserPopulation

METRIC_COLUMNS = ("iter", "algo", "seed", "lambda", "tier1", "accuracy", "likelihood", "handled", "S_T")
TRACE_COLUMNS = ("iter", "tier", "likelihood", "accuracy", "coverage", "S_T", "reshuffled")
SURVIVABILITY_COLUMNS = ("t_s", "layer", "drone_id", "f_t", "S_D", "S_L", "S_T", "mode")
MOVE_COLUMNS = ("t_s", "drone_id", "tier", "x_m", "y_m", "alt_m")
USER_COLUMNS = ("x_m", "y_m", "request_count")
SCORE_COLUMNS = ("iter", "best_score", "mean_score")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        # JSON has no infinities
        return float(v) if math.isfinite(v) else None
    return v


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_users(path, users: UserPopulation) -> Path:
    return write_csv(path, USER_COLUMNS, ((float(x), float(y), int(r)) for (x, y), r in
                                          zip(users.positions, users.requests)))


def read_users(path) -> UserPopulation:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != USER_COLUMNS:
            raise ValueError(f"expected columns {','.join(USER_COLUMNS)}")
        rows = [(float(r["x_m"]), float(r["y_m"]), int(r["request_count"])) for r in reader]
    if not rows:
        return UserPopulation.empty()
    arr = np.array(rows)
    return UserPopulation(arr[:, :2], arr[:, 2].astype(np.int64))


def metric_rows(series, algo: str, seed: int, lam: float, tier1: int) -> list:
    return [(r.iter, algo, seed, lam, tier1, r.accuracy, r.likelihood, r.handled, r.S_T) for r in series.records]


def trace_rows(series) -> list:
    return [(r.iter, r.tier, r.likelihood, r.accuracy, r.coverage, r.S_T, r.reshuffled) for r in series.trace]


def survivability_rows(series) -> list:
    """One row per drone per recorded report; layer is the drone's tier."""
    rows = []
    for rep in series.survivability:
        tiers = sorted(set(series.layers.values()))
        for drone_id, f_t, s_d in rep.per_drone:
            layer = series.layers[drone_id]
            rows.append((rep.time, layer, drone_id, f_t, s_d, rep.per_layer[tiers.index(layer)], rep.total, rep.mode))
    return rows


def move_rows(series) -> list:
    return [(w.time, p.drone_id, series.layers.get(p.drone_id, 0), w.position[0], w.position[1], w.altitude)
            for p in series.moves for w in p.waypoints]


def assignment_document(view, assignment, likelihood: float) -> dict:
    """Drones, cells, targets and the score matrix of one tier's decision."""
    return {
        "drones": [{"id": d.id, "tier": d.tier, "x_m": d.position[0], "y_m": d.position[1], "alt_m": d.altitude}
                   for d in view.drones],
        "cells": [{"index": j, "class": c.demand_class.name, "requests": c.total_requests,
                   "centroid": [c.centroid.x, c.centroid.y], "area_m2": c.area}
                  for j, c in enumerate(view.observed_cells)],
        "targets": [{"drone_id": d, "cell": c, "x_m": t[0], "y_m": t[1]} for d, c, t in assignment.pairs],
        "scores": view.scores,
        "likelihood": likelihood,
    }
