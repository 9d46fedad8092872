"""Dataset, configuration and report serialization.

Datasets are CSV with a header ``cluster_id, y1, d1, y2, d2, x1_*, x2_*``.
Reports are JSON. All floats are written with ``repr`` precision, and every
file is written to a temporary sibling and renamed into place.
"""

from __future__ import annotations

import csv
import io as _io  # stdlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .likelihood import SurvivalData

__all__ = [
    "DatasetError",
    "ConfigError",
    "Dataset",
    "read_dataset",
    "write_dataset",
    "dataset_to_csv",
    "atomic_write_text",
    "write_json",
    "to_jsonable",
    "load_config",
    "CONFIG_SCHEMA",
    "SemiCompetingRow",
    "prepare_semicompeting",
    "read_semicompeting",
]


class DatasetError(ValueError):
    """Malformed dataset; ``lines`` holds the 1-based offending line numbers."""

    def __init__(self, message: str, lines=()):
        self.lines = list(lines)
        super().__init__(message)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# atomic writes


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(to_jsonable(obj), indent=2) + "\n")


# ---------------------------------------------------------------------------
# datasets


@dataclass
class Dataset:
    data: SurvivalData
    cluster_ids: list = field(default_factory=list)
    names1: list = field(default_factory=list)
    names2: list = field(default_factory=list)


def _fmt(v) -> str:
    return repr(float(v))


def dataset_to_csv(data: SurvivalData, cluster_ids=None, names1=None, names2=None) -> str:
    q1, q2 = data.X1.shape[1], data.X2.shape[1]
    names1 = list(names1) if names1 else [f"x1_{k + 1}" for k in range(q1)]
    names2 = list(names2) if names2 else [f"x2_{k + 1}" for k in range(q2)]
    names1 = [n if n.startswith("x1_") else f"x1_{n}" for n in names1]
    names2 = [n if n.startswith("x2_") else f"x2_{n}" for n in names2]
    ids = list(cluster_ids) if cluster_ids is not None else list(range(1, data.n + 1))
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cluster_id", "y1", "d1", "y2", "d2", *names1, *names2])
    for i in range(data.n):
        w.writerow(
            [
                ids[i],
                _fmt(data.y1[i]),
                int(data.d1[i]),
                _fmt(data.y2[i]),
                int(data.d2[i]),
                *map(_fmt, data.X1[i]),
                *map(_fmt, data.X2[i]),
            ]
        )
    return buf.getvalue()


def write_dataset(path, data: SurvivalData, cluster_ids=None, names1=None, names2=None) -> Path:
    return atomic_write_text(path, dataset_to_csv(data, cluster_ids, names1, names2))


def read_dataset(path, *, standardize: bool = False) -> Dataset:
    """Read a dataset CSV; every malformed row is reported with its line number.

    ``standardize`` centers and scales each non-binary covariate column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file", [1]) from None
        required = ["cluster_id", "y1", "d1", "y2", "d2"]
        if header[:5] != required:
            raise DatasetError(f"{path}:1: header must start with {', '.join(required)}", [1])
        rest = header[5:]
        c1 = [k for k, h in enumerate(rest) if h.startswith("x1_")]
        c2 = [k for k, h in enumerate(rest) if h.startswith("x2_")]
        if len(c1) + len(c2) != len(rest) or (c1 and c2 and max(c1) > min(c2)):
            raise DatasetError(f"{path}:1: covariate columns must be x1_* followed by x2_*", [1])

        ids, rows, errors, bad = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            problem = None
            if len(row) != len(header):
                problem = f"expected {len(header)} fields, got {len(row)}"
            elif any(not c.strip() for c in row):
                problem = "missing value"
            else:
                try:
                    vals = [float(c) for c in row[1:]]
                except ValueError as exc:
                    problem = f"not a number ({exc})"
                else:
                    y1, d1, y2, d2 = vals[:4]
                    if not all(math.isfinite(v) for v in vals):
                        problem = "non-finite value"
                    elif y1 <= 0 or y2 <= 0:
                        problem = "survival times must be > 0"
                    elif d1 not in (0.0, 1.0) or d2 not in (0.0, 1.0):
                        problem = "censoring indicators must be 0 or 1"
            if problem:
                errors.append(f"{path}:{lineno}: {problem}")
                bad.append(lineno)
                continue
            ids.append(row[0].strip())
            rows.append(vals)
    if errors:
        raise DatasetError("\n".join(errors), bad)
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header) - 1)
    X = arr[:, 4:]
    X1, X2 = X[:, c1], X[:, c2]
    if standardize:
        X1, X2 = _standardize(X1), _standardize(X2)
    data = SurvivalData(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], X1, X2)
    return Dataset(data, ids, [rest[k] for k in c1], [rest[k] for k in c2])


def _standardize(X):
    X = X.copy()
    for k in range(X.shape[1]):
        col = X[:, k]
        if np.all(np.isin(col, (0.0, 1.0))):
            continue
        sd = col.std(ddof=1) if col.size > 1 else 0.0
        X[:, k] = (col - col.mean()) / (sd if sd > 0 else 1.0)
    return X


# ---------------------------------------------------------------------------
# configuration

_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "copula": {"type": "string", "enum": ["AMH", "Clayton", "Frank", "GH", "Joe"]},
        "baseline": {"type": "string", "enum": ["weibull", "bp", "pe"]},
        "regression": {"type": "string", "enum": ["PH", "PO", "YP"]},
        "degree": {"type": "integer", "minimum": 1},
        "n_intervals": {"type": "integer", "minimum": 1},
    },
    "required": ["copula"],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": _MODEL,
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grad_tol": {"type": "number", "exclusiveMinimum": 0},
                "rel_tol": {"type": "number", "minimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "grad_step": {"type": "number", "exclusiveMinimum": 0},
                "hess_step": {"type": "number", "exclusiveMinimum": 0},
                "multistart": {"type": "integer", "minimum": 0},
                "standardize": {"type": "boolean"},
            },
        },
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "copula": {"type": "string", "enum": ["AMH", "Clayton", "Frank", "GH", "Joe"]},
                "tau": {"type": "number", "minimum": -1, "maximum": 1},
                "baseline": {"type": "string", "enum": ["weibull", "expweibull"]},
                "regression": {"type": "string", "enum": ["PH", "PO", "YP"]},
                "kappa1": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "kappa2": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "beta1S": {"type": "array", "items": {"type": "number"}},
                "beta1L": {"type": "array", "items": {"type": "number"}},
                "beta2S": {"type": "array", "items": {"type": "number"}},
                "beta2L": {"type": "array", "items": {"type": "number"}},
                "caps": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 2,
                    "maxItems": 2,
                },
            },
        },
        "mc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "M": {"type": "integer", "minimum": 1},
                "specs": {"type": "array", "items": _MODEL, "minItems": 1},
                "level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "crossing": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "margin": {"type": "integer", "enum": [1, 2]},
                "x_control": {"type": "array", "items": {"type": "number"}},
                "x_treat": {"type": "array", "items": {"type": "number"}},
                "bracket": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "B": {"type": "integer", "minimum": 1},
                "level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "required": ["x_control", "x_treat"],
        },
        "lrtest": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        },
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
    },
}


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    return validate_config(cfg)


# ---------------------------------------------------------------------------
# semi-competing risks


@dataclass(frozen=True)
class SemiCompetingRow:
    """Bivariate margins built from progression T, death T* and censoring A.

    y1 = min(T, T*, A) with d1 = 1 only when the minimum is the progression
    time strictly before death; y2 = min(T*, A) with d2 = 1 when death is
    observed. A progression recorded at the death time counts as death only
    (d1 = 0) and sets ``tie``.
    """

    y1: float
    d1: int
    y2: float
    d2: int
    tie: bool


def _opt_time(v, what, idx):
    if v is None:
        return math.inf
    v = float(v)
    if math.isnan(v):
        return math.inf
    if v <= 0:
        raise ValueError(f"row {idx}: {what} must be > 0, got {v}")
    return v


def prepare_semicompeting(rows) -> list[SemiCompetingRow]:
    """``rows`` yields ``(T, T_star, A)``; ``None``/NaN marks an unobserved event."""
    out = []
    for idx, (t, t_star, a) in enumerate(rows):
        t = _opt_time(t, "progression time", idx)
        t_star = _opt_time(t_star, "death time", idx)
        if a is None or (isinstance(a, float) and math.isnan(a)):
            raise ValueError(f"row {idx}: censoring time is required")
        a = float(a)
        if a <= 0:
            raise ValueError(f"row {idx}: censoring time must be > 0, got {a}")
        y1 = min(t, t_star, a)
        tie = math.isfinite(t) and t == t_star and t <= a
        d1 = int(y1 == t and t < t_star)
        y2 = min(t_star, a)
        d2 = int(y2 == t_star)
        out.append(SemiCompetingRow(y1, d1, y2, d2, tie))
    return out


def read_semicompeting(path):
    """Read ``id, T, T_star, A, covariates...``; empty T/T_star cells mean not observed.

    Returns ``(Dataset, ties)`` where ``ties`` lists the ids with T == T_star.
    Rows with missing covariates are rejected with their line numbers.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if [h.lower() for h in header[:4]] != ["id", "t", "t_star", "a"]:
            raise DatasetError(f"{path}:1: header must start with id, T, T_star, A", [1])
        covs = header[4:]
        ids, raw, X, errors, bad = [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) != len(header):
                    raise ValueError(f"expected {len(header)} fields, got {len(row)}")
                if not row[3].strip() or any(not c.strip() for c in row[4:]):
                    raise ValueError("missing value")
                t = float(row[1]) if row[1].strip() else None
                ts = float(row[2]) if row[2].strip() else None
                a = float(row[3])
                x = [float(c) for c in row[4:]]
                prepared = prepare_semicompeting([(t, ts, a)])[0]
            except ValueError as exc:
                errors.append(f"{path}:{lineno}: {exc}".replace("row 0: ", ""))
                bad.append(lineno)
                continue
            ids.append(row[0].strip())
            raw.append(prepared)
            X.append(x)
    if errors:
        raise DatasetError("\n".join(errors), bad)
    X = np.array(X, dtype=float).reshape(len(raw), len(covs))
    data = SurvivalData(
        [r.y1 for r in raw], [r.d1 for r in raw], [r.y2 for r in raw], [r.d2 for r in raw], X, X.copy()
    )
    ties = [i for i, r in zip(ids, raw) if r.tie]
    return Dataset(data, ids, [f"x1_{c}" for c in covs], [f"x2_{c}" for c in covs]), ties
