"""Configuration-driven sweeps and their tabular output.

A sweep evolves one initial distribution over a uniform time grid and writes
one row per point.  Tables are CSV with a ``#`` comment header carrying the
schema version and an echo of the configuration; floats use 17 significant
digits so a re-read table reproduces the in-memory values bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import ALL, RESCALED, evaluate_all
from .dynamics import DEFAULT_MAX_WORKSPACE_BYTES, ModelParams
from .ensembles import (
    BLOCK_CUTOFF,
    DEFAULT_TRUNCATION,
    FOCK,
    KINDS,
    build_distribution,
    ensemble_raw,
)
from .errors import ContractViolation
from .homodyne import LO_FLOOR, QuadratureMoments, normalize
from .pump import pump_criteria_curve

SCHEMA_VERSION = 1
CRITERION_SUFFIXES = ("lhs", "rhs", "margin", "violated", "sign_choice", "defined")
FORMATS = ("csv", "json")


class ConfigError(ContractViolation):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class RunConfig:
    """One sweep.  ``mean`` is N for a Fock start and n-bar otherwise.

    The grid ``t_min .. t_max`` is in units of 1/chi; tables report chi*t.
    """

    kind: str = FOCK
    mean: float = 100
    chi: float = 1.0
    t_min: float = 0.0
    t_max: float = 0.05
    points: int = 400
    criteria: tuple = ALL
    truncation: float = DEFAULT_TRUNCATION
    block_cutoff: float = BLOCK_CUTOFF
    lo_floor: float = LO_FLOOR
    max_workspace_bytes: int = DEFAULT_MAX_WORKSPACE_BYTES
    workers: int = 1
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.kind not in KINDS or self.kind == "table":
            raise ConfigError("kind", f"expected one of fock, poissonian, thermal, coherent; got {self.kind!r}")
        if not (math.isfinite(self.mean) and self.mean >= 0):
            raise ConfigError("mean", f"must be a finite non-negative number, got {self.mean!r}")
        if self.kind == FOCK and int(self.mean) != self.mean:
            raise ConfigError("mean", f"a Fock start needs an integer N, got {self.mean!r}")
        if not (math.isfinite(self.chi) and self.chi > 0):
            raise ConfigError("chi", f"must be positive, got {self.chi!r}")
        if int(self.points) != self.points or self.points < 2:
            raise ConfigError("points", f"need an integer >= 2, got {self.points!r}")
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise ConfigError("t_max", "grid bounds must be finite")
        if not self.t_max > self.t_min:
            raise ConfigError("t_max", f"grid must be strictly increasing, got t_min={self.t_min} t_max={self.t_max}")
        unknown = [c for c in self.criteria if c not in ALL]
        if unknown or not self.criteria:
            raise ConfigError("criteria", f"unknown or empty selection {unknown or list(self.criteria)}")
        for name in ("truncation", "block_cutoff"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(name, f"must lie in (0, 1), got {v!r}")
        if not self.lo_floor >= 0:
            raise ConfigError("lo_floor", f"must be non-negative, got {self.lo_floor!r}")
        if self.max_workspace_bytes <= 0:
            raise ConfigError("max_workspace_bytes", "must be positive")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError("workers", f"need an integer >= 1, got {self.workers!r}")
        if self.format not in FORMATS:
            raise ConfigError("format", f"expected one of {FORMATS}, got {self.format!r}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "workers", int(self.workers))
        object.__setattr__(self, "criteria", tuple(self.criteria))

    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.points)

    def echo(self) -> dict:
        """Config entries that determine the table contents (workers and output excluded)."""
        d = asdict(self)
        for k in ("workers", "output", "format"):
            d.pop(k)
        d["criteria"] = ",".join(self.criteria)
        return d

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        """Build from string values, e.g. a parsed config file or CLI flags."""
        known = {f.name for f in fields(cls)}
        out = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
            out[key] = _coerce(key, raw)
        return cls(**out)


_INT_KEYS = ("points", "workers", "max_workspace_bytes")
_STR_KEYS = ("kind", "format")


def _coerce(key, raw):
    if not isinstance(raw, str):
        return tuple(raw) if key == "criteria" else raw
    text = raw.strip()
    try:
        if key == "criteria":
            return tuple(c.strip() for c in text.split(",") if c.strip())
        if key == "output":
            return text or None
        if key in _STR_KEYS:
            return text
        if key in _INT_KEYS:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(key, f"duplicate key on line {lineno}")
        values[key] = value
    return values


def load_config(path) -> RunConfig:
    return RunConfig.from_mapping(parse_config_text(Path(path).read_text()))


# -- tables ---------------------------------------------------------------------


@dataclass(eq=False)
class Table:
    """Column-ordered table with a metadata header."""

    columns: list
    data: dict
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.data[self.columns[0]]) if self.columns else 0

    def column(self, name) -> np.ndarray:
        return np.asarray(self.data[name])


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (str, np.str_)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _parse(text: str):
    if text in ("true", "false"):
        return text == "true"
    if text in ("+", "-", "none"):
        return text
    try:
        return float(text)
    except ValueError:
        return text


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version = {SCHEMA_VERSION}\n")
    for key, value in table.meta.items():
        buf.write(f"# {key} = {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    cols = [table.data[c] for c in table.columns]
    for i in range(len(table)):
        writer.writerow([_fmt(c[i]) for c in cols])
    return buf.getvalue()


def render_json(table: Table) -> str:
    def conv(v):
        if isinstance(v, (bool, np.bool_)):
            return bool(v)
        if isinstance(v, (str, np.str_)):
            return str(v)
        v = float(v)
        return v if math.isfinite(v) else None

    rows = [[conv(table.data[c][i]) for c in table.columns] for i in range(len(table))]
    doc = {"schema_version": SCHEMA_VERSION, "meta": table.meta, "columns": table.columns, "rows": rows}
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def parse_csv(text: str) -> Table:
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    if not body:
        raise ContractViolation("table has no header row")
    rows = list(csv.reader(body))
    columns = rows[0]
    if len(set(columns)) != len(columns):
        raise ContractViolation("duplicate column names")
    data = {c: [] for c in columns}
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(columns):
            raise ContractViolation(f"row {lineno} has {len(row)} fields, header has {len(columns)}")
        for c, v in zip(columns, row):
            data[c].append(_parse(v))
    data = {c: np.array(v) for c, v in data.items()}
    version = meta.pop("schema_version", None)
    if version is not None and version != str(SCHEMA_VERSION):
        raise ContractViolation(f"unsupported schema version {version}")
    return Table(columns, data, meta)


def read_table(path) -> Table:
    return parse_csv(Path(path).read_text())


def write_table(table: Table, path, fmt: str = "csv"):
    text = render_csv(table) if fmt == "csv" else render_json(table)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def criteria_columns(names) -> list:
    return [f"{n}_{s}" for n in names for s in CRITERION_SUFFIXES]


def _criteria_data(moments: QuadratureMoments, names) -> dict:
    report = evaluate_all(moments)
    out = {}
    for n in names:
        res = report[n]
        for s in CRITERION_SUFFIXES:
            out[f"{n}_{s}"] = np.atleast_1d(getattr(res, s))
    return out


def moments_from_table(table: Table) -> QuadratureMoments:
    missing = [f for f in QuadratureMoments.field_names() if f not in table.data]
    if missing:
        raise ContractViolation(f"moment table lacks columns {missing}")
    return QuadratureMoments(**{f: table.column(f).astype(float) for f in QuadratureMoments.field_names()})


def evaluate_table(table: Table, names=ALL) -> Table:
    """Criteria for every row of a moment table; an existing chi_t column is carried over."""
    m = moments_from_table(table)
    data = _criteria_data(m, names)
    columns = criteria_columns(names)
    if "chi_t" in table.data:
        columns = ["chi_t"] + columns
        data["chi_t"] = table.column("chi_t").astype(float)
    return Table(columns, data, {"package_version": __version__, "mode": "criteria"})


# -- sweeps ---------------------------------------------------------------------


def sweep_columns(names=ALL) -> list:
    return (["chi_t", "n0", "n1", "n2", "lo_population"] + QuadratureMoments.field_names()
            + criteria_columns(names))


def _meta(mode: str, echo: dict) -> dict:
    meta = {"package_version": __version__, "mode": mode}
    meta.update({f"config.{k}": _fmt(v) if isinstance(v, float) else str(v) for k, v in echo.items()})
    return meta


def run_sweep(config: RunConfig) -> Table:
    """Evolve, measure and evaluate the selected criteria on every grid point.

    Points whose LO population falls to the floor are kept, with NaN moments
    and every criterion flagged undefined.  Writes the table when
    ``config.output`` is set.
    """
    times = config.times()
    dist = build_distribution(config.kind, config.mean, config.truncation)
    params = ModelParams(config.chi, 0)
    pops, raw = ensemble_raw(dist, params, times, workers=config.workers,
                             relative_cutoff=config.block_cutoff,
                             max_workspace_bytes=config.max_workspace_bytes)
    moments = normalize(raw, config.lo_floor, strict=False)
    data = {"chi_t": config.chi * times, "n0": pops[0], "n1": pops[1], "n2": pops[2],
            "lo_population": np.asarray(raw.n_lo[0], dtype=float)}
    data.update(moments.as_dict())
    data.update(_criteria_data(moments, config.criteria))
    table = Table(sweep_columns(config.criteria), data, _meta("simulate", config.echo()))
    if config.output:
        write_table(table, config.output, config.format)
    return table


def fock_size_configs(sizes, scaled_min: float = 0.0, scaled_max: float = 3.0, points: int = 400,
                      **overrides) -> list:
    """Fock configs whose grids coincide in N chi t."""
    out = []
    for n in sizes:
        if int(n) != n or n <= 0:
            raise ConfigError("sizes", f"need positive integers, got {n!r}")
        out.append(RunConfig(kind=FOCK, mean=int(n), t_min=scaled_min / n, t_max=scaled_max / n,
                             points=points, **overrides))
    return out


def compare_sizes(configs, output: str | None = None, fmt: str = "csv") -> Table:
    """Rescaled criteria of several Fock runs against N chi t, plus the pump curves."""
    if not configs:
        raise ConfigError("sizes", "need at least one run")
    scaled = None
    columns, data = ["scaled_time", "pump_duan", "pump_reid"], {}
    for cfg in configs:
        if cfg.kind != FOCK:
            raise ConfigError("kind", f"size comparison needs Fock runs, got {cfg.kind!r}")
        N = int(cfg.mean)
        if N == 0:
            raise ConfigError("mean", "size comparison needs N > 0")
        s = N * cfg.chi * cfg.times()
        if scaled is None:
            scaled = s
        elif s.shape != scaled.shape or not np.allclose(s, scaled, rtol=1e-12, atol=1e-15):
            raise ContractViolation(f"grid mismatch: N={N} does not share the N chi t grid of the first run")
        sub = run_sweep(RunConfig(**{**asdict(cfg), "criteria": RESCALED, "output": None}))
        prefix = f"N{N}_"
        cols = ["chi_t", "n0", "n1", "lo_population"]
        block = {c: sub.data[c] for c in cols}
        block["depletion"] = 1.0 - sub.data["n0"] / N
        cols.append("depletion")
        for name in RESCALED:
            for suffix in ("lhs", "margin", "violated", "defined"):
                key = f"{name}_{suffix}"
                block[key] = sub.data[key]
                cols.append(key)
        for c in cols:
            if prefix + c in data:
                raise ConfigError("sizes", f"N={N} listed twice")
            columns.append(prefix + c)
            data[prefix + c] = block[c]
    curve = pump_criteria_curve(scaled)
    data.update(scaled_time=scaled, pump_duan=curve["duan"], pump_reid=curve["reid"])
    first = configs[0]
    echo = {"sizes": ",".join(str(int(c.mean)) for c in configs),
            "scaled_min": scaled[0], "scaled_max": scaled[-1], "points": first.points,
            "truncation": first.truncation, "lo_floor": first.lo_floor}
    table = Table(columns, data, _meta("compare", echo))
    if output:
        write_table(table, output, fmt)
    return table
