"""Process-log ingestion, thermal-cycle tagging and regression-set assembly.

Datasets are columnar: every channel is a read-only numpy array of length N.
A :class:`ProcessRecord` is a row view for callers that want one sample at a
time.
"""

from __future__ import annotations

import configparser
import enum
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError, RangeError, SchemaError, SegmentationError

log = logging.getLogger(__name__)

N_SENSORS = 4
SCALAR_CHANNELS = ("t", "T_tool", "omega", "f_t", "f_m", "T_f", "P_f", "T_m", "F_m")
BUILD_CHANNELS = tuple(f"T_build{i}" for i in range(1, N_SENSORS + 1))
POSITION_CHANNELS = ("s_x", "s_y", "s_z")
VELOCITY_CHANNELS = ("v_x", "v_y", "v_z")
ALL_CHANNELS = SCALAR_CHANNELS + BUILD_CHANNELS + POSITION_CHANNELS + VELOCITY_CHANNELS
MANDATORY = ("t", "T_tool") + BUILD_CHANNELS + ("omega", "f_m", "T_f") + POSITION_CHANNELS

# Canonical units: s, degC, rpm, mm/min (feeds), N*m, W, N, mm, mm/s.
_TIME = {"s": 1.0, "ms": 1e-3, "min": 60.0}
_SPEED = {"rpm": 1.0, "rad/s": 60.0 / (2 * math.pi), "hz": 60.0}
_FEED = {"mm/min": 1.0, "mm/s": 60.0, "in/min": 25.4, "m/min": 1000.0}
_TORQUE = {"n*m": 1.0, "nm": 1.0, "n·m": 1.0, "n*cm": 0.01, "lbf*ft": 1.3558179483314004, "lbf*in": 0.1129848290276167}
_POWER = {"w": 1.0, "kw": 1e3}
_FORCE = {"n": 1.0, "kn": 1e3, "lbf": 4.4482216152605}
_LENGTH = {"mm": 1.0, "m": 1e3, "in": 25.4}
_VELOCITY = {"mm/s": 1.0, "mm/min": 1 / 60.0, "m/s": 1e3, "in/s": 25.4}
_TEMPERATURE = ("c", "degc", "f", "degf", "k")

_UNIT_TABLES = {
    "t": _TIME,
    "omega": _SPEED,
    "f_t": _FEED,
    "f_m": _FEED,
    "T_f": _TORQUE,
    "T_m": _TORQUE,
    "P_f": _POWER,
    "F_m": _FORCE,
    **{c: _LENGTH for c in POSITION_CHANNELS},
    **{c: _VELOCITY for c in VELOCITY_CHANNELS},
}
_TEMPERATURE_CHANNELS = ("T_tool",) + BUILD_CHANNELS


class Stage(enum.IntEnum):
    HEAT = 0
    COOL = 1

    def __str__(self):
        return "Heat" if self is Stage.HEAT else "Cool"

    @classmethod
    def parse(cls, value) -> "Stage":
        text = str(value).strip().lower()
        if text in ("heat", "h", "heating", "0"):
            return cls.HEAT
        if text in ("cool", "c", "cooling", "1"):
            return cls.COOL
        raise DataError(f"unrecognised stage label {value!r}")


class ModelKind(enum.Enum):
    TOOL_HEAT = "tool-heat"
    TOOL_COOL = "tool-cool"
    BUILD = "build"


@dataclass(frozen=True)
class PhaseTag:
    layer: int
    stage: Stage


@dataclass(frozen=True, eq=False)
class SensorLayout:
    """Thermocouple positions (mm), one row per sensor."""

    tc_locations: np.ndarray
    depth_offset: float = 2.54

    def __post_init__(self):
        loc = np.array(self.tc_locations, dtype=float).reshape(-1, 3)
        if loc.shape[0] != N_SENSORS:
            raise SchemaError("tc_locations", f"expected {N_SENSORS} sensor locations, got {loc.shape[0]}")
        for i in range(N_SENSORS):
            for j in range(i + 1, N_SENSORS):
                if np.array_equal(loc[i], loc[j]):
                    raise SchemaError("tc_locations", f"sensors {i + 1} and {j + 1} coincide")
        loc.flags.writeable = False
        object.__setattr__(self, "tc_locations", loc)

    @classmethod
    def equally_spaced(cls, wall_length=216.0, depth_offset=2.54, x0=0.0, y=0.0):
        """Four sensors at 1/5 .. 4/5 of the wall, ``depth_offset`` below the surface."""
        xs = x0 + wall_length * np.arange(1, N_SENSORS + 1) / (N_SENSORS + 1)
        loc = np.column_stack([xs, np.full(N_SENSORS, y), np.full(N_SENSORS, -depth_offset)])
        return cls(loc, depth_offset)

    def __eq__(self, other):
        return (
            isinstance(other, SensorLayout)
            and np.array_equal(self.tc_locations, other.tc_locations)
            and self.depth_offset == other.depth_offset
        )


@dataclass(frozen=True)
class ProcessRecord:
    t: float
    T_tool: float
    T_build: tuple
    omega: float
    f_t: float
    f_m: float
    T_f: float
    P_f: float
    T_m: float
    F_m: float
    s_tool: tuple
    v_tool: tuple


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ProcessData:
    """Untagged process log in canonical units."""

    t: np.ndarray
    T_tool: np.ndarray
    T_build: np.ndarray  # (N, 4)
    omega: np.ndarray
    f_t: np.ndarray
    f_m: np.ndarray
    T_f: np.ndarray
    P_f: np.ndarray
    T_m: np.ndarray
    F_m: np.ndarray
    s_tool: np.ndarray  # (N, 3)
    v_tool: np.ndarray  # (N, 3)
    layout: SensorLayout = field(default_factory=SensorLayout.equally_spaced)
    source: str = ""
    skipped_rows: int = 0
    explicit_layer: np.ndarray | None = None
    explicit_stage: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.t)
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("layout", "source", "skipped_rows"):
                continue
            if v is None:
                continue
            dtype = int if f.name in ("explicit_layer", "explicit_stage") else float
            arr = _frozen(v, dtype)
            if f.name == "T_build":
                arr = _frozen(arr.reshape(n, N_SENSORS))
            elif f.name in ("s_tool", "v_tool"):
                arr = _frozen(arr.reshape(n, 3))
            if len(arr) != n:
                raise DataError(f"channel {f.name} has {len(arr)} samples, expected {n}")
            object.__setattr__(self, f.name, arr)
        if n > 1 and not np.all(np.diff(self.t) > 0):
            bad = int(np.flatnonzero(np.diff(self.t) <= 0)[0]) + 1
            raise DataError(f"timestamps not strictly increasing at row {bad}")

    def __len__(self):
        return len(self.t)

    def record(self, i: int) -> ProcessRecord:
        return ProcessRecord(
            t=float(self.t[i]),
            T_tool=float(self.T_tool[i]),
            T_build=tuple(float(v) for v in self.T_build[i]),
            omega=float(self.omega[i]),
            f_t=float(self.f_t[i]),
            f_m=float(self.f_m[i]),
            T_f=float(self.T_f[i]),
            P_f=float(self.P_f[i]),
            T_m=float(self.T_m[i]),
            F_m=float(self.F_m[i]),
            s_tool=tuple(float(v) for v in self.s_tool[i]),
            v_tool=tuple(float(v) for v in self.v_tool[i]),
        )

    def records(self) -> list[ProcessRecord]:
        return [self.record(i) for i in range(len(self))]

    @classmethod
    def from_records(cls, records: Sequence[ProcessRecord], layout: SensorLayout | None = None, **kw):
        cols = {f.name: [getattr(r, f.name) for r in records] for f in fields(ProcessRecord)}
        if not records:
            cols["T_build"] = np.zeros((0, N_SENSORS))
            cols["s_tool"] = np.zeros((0, 3))
            cols["v_tool"] = np.zeros((0, 3))
        return cls(**cols, layout=layout or SensorLayout.equally_spaced(), **kw)

    def take(self, idx) -> "ProcessData":
        idx = np.asarray(idx)
        kw = {}
        for f in fields(self):
            v = getattr(self, f.name)
            kw[f.name] = v[idx] if isinstance(v, np.ndarray) else v
        return ProcessData(**kw)

    def channel(self, name: str) -> np.ndarray:
        """Return one canonical channel by name (``T_build3``, ``s_x`` ... included)."""
        if name in SCALAR_CHANNELS:
            return getattr(self, name)
        if name in BUILD_CHANNELS:
            return self.T_build[:, int(name[-1]) - 1]
        if name in POSITION_CHANNELS:
            return self.s_tool[:, POSITION_CHANNELS.index(name)]
        if name in VELOCITY_CHANNELS:
            return self.v_tool[:, VELOCITY_CHANNELS.index(name)]
        raise SchemaError(name, f"unknown channel {name!r}")


@dataclass(frozen=True, eq=False)
class PhasedDataset:
    data: ProcessData
    layer: np.ndarray
    stage: np.ndarray

    def __post_init__(self):
        layer = _frozen(self.layer, int)
        stage = _frozen(self.stage, np.int8)
        if not (len(layer) == len(stage) == len(self.data)):
            raise DataError("tags length must equal records length")
        if len(layer) > 1:
            key = layer.astype(np.int64) * 2 + stage
            bad = np.flatnonzero(np.diff(key) < 0)
            if len(bad):
                raise DataError(f"phase tags out of (layer, stage) order at row {int(bad[0]) + 1}")
        object.__setattr__(self, "layer", layer)
        object.__setattr__(self, "stage", stage)

    def __len__(self):
        return len(self.data)

    @property
    def L(self) -> int:
        return int(self.layer.max()) if len(self.layer) else 0

    @property
    def layout(self) -> SensorLayout:
        return self.data.layout

    def tag(self, i: int) -> PhaseTag:
        return PhaseTag(int(self.layer[i]), Stage(int(self.stage[i])))

    def take(self, idx) -> "PhasedDataset":
        idx = np.asarray(idx)
        return PhasedDataset(self.data.take(idx), self.layer[idx], self.stage[idx])

    def segments(self) -> list[tuple[int, int, int, Stage]]:
        """Maximal runs of equal (layer, stage) as ``(start, stop, layer, stage)``."""
        return [
            (a, b, int(self.layer[a]), Stage(int(self.stage[a])))
            for a, b in _runs(self.layer.astype(np.int64) * 2 + self.stage)
        ]


def _runs(key: np.ndarray) -> list[tuple[int, int]]:
    if len(key) == 0:
        return []
    cuts = np.flatnonzero(np.diff(key) != 0) + 1
    starts = np.concatenate([[0], cuts])
    stops = np.concatenate([cuts, [len(key)]])
    return [(int(a), int(b)) for a, b in zip(starts, stops)]


# --------------------------------------------------------------------------
# schema + CSV


@dataclass
class Schema:
    """Maps file columns onto canonical channels and declares their units."""

    columns: dict = field(default_factory=lambda: {c: c for c in ALL_CHANNELS})
    units: dict = field(default_factory=dict)
    layer_column: str | None = None
    stage_column: str | None = None
    layout: SensorLayout | None = None

    @classmethod
    def from_file(cls, path) -> "Schema":
        return cls.from_text(Path(path).read_text())

    @classmethod
    def from_text(cls, text: str) -> "Schema":
        """Parse an INI-style schema with [columns], [units], [phase], [layout] sections."""
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise SchemaError("<syntax>", f"malformed schema file: {exc}") from exc
        known = {"columns", "units", "phase", "layout"}
        for sec in cp.sections():
            if sec not in known:
                raise SchemaError(sec, f"unknown schema section [{sec}]")
        schema = cls()
        if cp.has_section("columns"):
            for key, col in cp.items("columns"):
                if key not in ALL_CHANNELS:
                    raise SchemaError(key, f"unknown channel key {key!r} in [columns]")
                schema.columns[key] = col.strip()
        if cp.has_section("units"):
            for key, unit in cp.items("units"):
                _check_unit(key, unit)
                schema.units[key] = unit.strip()
        if cp.has_section("phase"):
            for key, col in cp.items("phase"):
                if key == "layer":
                    schema.layer_column = col.strip()
                elif key == "stage":
                    schema.stage_column = col.strip()
                else:
                    raise SchemaError(key, f"unknown key {key!r} in [phase]")
        if cp.has_section("layout"):
            locs = []
            depth = 2.54
            for key, val in cp.items("layout"):
                if key == "depth_offset":
                    depth = _parse_float(key, val)
                elif key in (f"s{i}" for i in range(1, N_SENSORS + 1)):
                    parts = val.replace(",", " ").split()
                    if len(parts) != 3:
                        raise SchemaError(key, f"{key} must be 'x y z'")
                    locs.append((int(key[1:]), [_parse_float(key, p) for p in parts]))
                else:
                    raise SchemaError(key, f"unknown key {key!r} in [layout]")
            if locs:
                if sorted(i for i, _ in locs) != list(range(1, N_SENSORS + 1)):
                    raise SchemaError("layout", "layout needs s1..s4")
                schema.layout = SensorLayout([p for _, p in sorted(locs)], depth)
        return schema


def _parse_float(key, val):
    try:
        return float(val)
    except ValueError as exc:
        raise SchemaError(key, f"{key}: not a number: {val!r}") from exc


def _check_unit(key: str, unit: str):
    u = unit.strip().lower()
    if key in _TEMPERATURE_CHANNELS:
        if u not in _TEMPERATURE:
            raise SchemaError(key, f"unknown temperature unit {unit!r} for {key}")
        return
    table = _UNIT_TABLES.get(key)
    if table is None:
        raise SchemaError(key, f"unknown channel key {key!r} in [units]")
    if u not in table:
        raise SchemaError(key, f"unknown unit {unit!r} for {key}")


def _to_canonical(key: str, values: np.ndarray, unit: str | None) -> np.ndarray:
    if unit is None:
        return values
    u = unit.strip().lower()
    if key in _TEMPERATURE_CHANNELS:
        if u in ("f", "degf"):
            return (values - 32.0) * 5.0 / 9.0
        if u == "k":
            return values - 273.15
        return values
    return values * _UNIT_TABLES[key][u]


def load_dataset(path, schema: Schema | None = None) -> ProcessData:
    """Read a process log CSV into canonical units.

    Rows with a non-finite mandatory value are dropped and counted in
    ``skipped_rows``. Extra columns are ignored with a warning.
    """
    schema = schema or Schema()
    frame = pd.read_csv(path, float_precision="round_trip")
    available = set(frame.columns)
    for ch in MANDATORY:
        if schema.columns.get(ch) not in available:
            raise SchemaError(ch)
    used = {schema.columns[c] for c in ALL_CHANNELS if schema.columns.get(c) in available}
    used |= {c for c in (schema.layer_column, schema.stage_column) if c}
    extra = sorted(set(frame.columns) - used - {"layer", "stage"})
    if extra:
        log.warning("ignoring unknown columns: %s", ", ".join(map(str, extra)))

    cols = {}
    for ch in ALL_CHANNELS:
        name = schema.columns.get(ch)
        if name in available:
            raw = pd.to_numeric(frame[name], errors="coerce").to_numpy(dtype=float)
            cols[ch] = _to_canonical(ch, raw, schema.units.get(ch))

    mandatory = np.column_stack([cols[c] for c in MANDATORY])
    keep = np.all(np.isfinite(mandatory), axis=1)
    skipped = int((~keep).sum())
    if skipped:
        log.warning("%s: skipped %d rows with non-finite mandatory values", path, skipped)
    cols = {k: v[keep] for k, v in cols.items()}

    t = cols["t"]
    if len(t) > 1:
        dt = np.diff(t)
        if np.any(dt <= 0):
            bad = int(np.flatnonzero(dt <= 0)[0]) + 1
            raise DataError(f"non-monotone timestamps at data row {bad}")

    n = len(t)
    s_tool = np.column_stack([cols[c] for c in POSITION_CHANNELS]) if n else np.zeros((0, 3))
    if all(c in cols for c in VELOCITY_CHANNELS):
        v_tool = np.column_stack([cols[c] for c in VELOCITY_CHANNELS])
    elif n > 1:
        v_tool = np.gradient(s_tool, t, axis=0)
    else:
        v_tool = np.zeros((n, 3))
    f_t = cols["f_t"] if "f_t" in cols else np.hypot(v_tool[:, 0], v_tool[:, 1]) * 60.0
    P_f = cols["P_f"] if "P_f" in cols else cols["T_f"] * cols["omega"] * 2 * math.pi / 60.0
    nan = np.full(n, np.nan)

    layer = stage = None
    if schema.layer_column or schema.stage_column or {"layer", "stage"} <= available:
        lc = schema.layer_column or "layer"
        sc = schema.stage_column or "stage"
        if lc not in available:
            raise SchemaError(lc)
        if sc not in available:
            raise SchemaError(sc)
        layer = frame[lc].to_numpy()[keep].astype(int)
        stage = np.array([int(Stage.parse(v)) for v in frame[sc].to_numpy()[keep]], dtype=int)

    return ProcessData(
        t=t,
        T_tool=cols["T_tool"],
        T_build=np.column_stack([cols[c] for c in BUILD_CHANNELS]) if n else np.zeros((0, N_SENSORS)),
        omega=cols["omega"],
        f_t=f_t,
        f_m=cols["f_m"],
        T_f=cols["T_f"],
        P_f=P_f,
        T_m=cols.get("T_m", nan),
        F_m=cols.get("F_m", nan),
        s_tool=s_tool,
        v_tool=v_tool,
        layout=schema.layout or SensorLayout.equally_spaced(),
        source=str(path),
        skipped_rows=skipped,
        explicit_layer=layer,
        explicit_stage=stage,
    )


def to_frame(dataset: ProcessData | PhasedDataset) -> pd.DataFrame:
    phased = dataset if isinstance(dataset, PhasedDataset) else None
    data = phased.data if phased else dataset
    frame = pd.DataFrame({ch: data.channel(ch) for ch in ALL_CHANNELS})
    if phased is not None:
        frame["layer"] = phased.layer
        frame["stage"] = [str(Stage(int(s))) for s in phased.stage]
    return frame


def write_dataset(dataset: ProcessData | PhasedDataset, path) -> None:
    """Write canonical CSV; tagged datasets gain ``layer`` and ``stage`` columns."""
    to_frame(dataset).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


# --------------------------------------------------------------------------
# phases


@dataclass(frozen=True)
class SegmentationRule:
    """``mode``: "explicit" copies layer/stage columns, "auto" applies the
    rotation+traverse rule, "infer" uses explicit columns when present."""

    mode: str = "infer"
    omega_threshold: float = 50.0  # rpm
    speed_gate: float = 0.1  # mm/s, horizontal tool speed
    require_traverse: bool = True


def segment_phases(data: ProcessData, rule: SegmentationRule = SegmentationRule()) -> PhasedDataset:
    if len(data) == 0:
        raise SegmentationError("cannot segment an empty dataset")
    mode = rule.mode
    if mode == "infer":
        mode = "explicit" if data.explicit_stage is not None else "auto"
    if mode == "explicit":
        if data.explicit_stage is None or data.explicit_layer is None:
            raise SegmentationError("explicit segmentation requested but dataset has no layer/stage columns")
        return PhasedDataset(data, data.explicit_layer, data.explicit_stage)
    if mode != "auto":
        raise SegmentationError(f"unknown segmentation mode {rule.mode!r}")

    heat = data.omega >= rule.omega_threshold
    if rule.require_traverse:
        heat &= np.hypot(data.v_tool[:, 0], data.v_tool[:, 1]) > rule.speed_gate
    if not heat.any():
        raise SegmentationError("auto-segmentation found no Heat samples")
    starts = heat & ~np.concatenate([[False], heat[:-1]])
    # samples before the first Heat block land in layer 0
    layer = np.cumsum(starts)
    stage = np.where(heat, int(Stage.HEAT), int(Stage.COOL))
    return PhasedDataset(data, layer, stage)


def select_layers(phased: PhasedDataset, first: int, last: int, renumber: bool = False) -> PhasedDataset:
    L = phased.L
    if first > last or first < 1 or last > L:
        raise RangeError(f"layer range [{first}, {last}] outside [1, {L}]")
    idx = np.flatnonzero((phased.layer >= first) & (phased.layer <= last))
    if len(idx) == 0:
        raise RangeError(f"layer range [{first}, {last}] selects no records")
    out = phased.take(idx)
    if renumber:
        out = PhasedDataset(out.data, out.layer - first + 1, out.stage)
    return out


def tool_distance(s_tool, s):
    """Euclidean distance (mm) between tool-bottom centre and a location.

    The rotating deposit is treated as a point source at the tool position.
    Broadcasts over leading axes; returns a float for single points.
    """
    d = np.linalg.norm(np.asarray(s_tool, dtype=float) - np.asarray(s, dtype=float), axis=-1)
    return float(d) if np.ndim(d) == 0 else d


def setpoint_breaks(data: ProcessData, channels=("omega", "f_t", "f_m"), rel_tol: float = 0.05) -> np.ndarray:
    """Flag samples at which a controlled setpoint steps.

    ``out[i]`` is True when some channel changes between samples i-1 and i by
    more than ``rel_tol`` of the larger magnitude.
    """
    out = np.zeros(len(data), dtype=bool)
    for ch in channels:
        x = data.channel(ch)
        if len(x) < 2:
            continue
        prev, cur = x[:-1], x[1:]
        scale = np.maximum(np.abs(prev), np.abs(cur))
        jump = np.abs(cur - prev) > rel_tol * scale
        out[1:] |= jump & (scale > 0)
    return out


def segment_ids(phased: PhasedDataset, breaks: np.ndarray | None = None) -> np.ndarray:
    """Integer id per sample; a new id starts at every phase change and at
    every flagged break."""
    key = phased.layer.astype(np.int64) * 2 + phased.stage
    new = np.zeros(len(key), dtype=bool)
    if len(key):
        new[0] = True
        new[1:] = np.diff(key) != 0
    if breaks is not None:
        new |= np.asarray(breaks, dtype=bool)
    return np.cumsum(new) - 1


# --------------------------------------------------------------------------
# regression sets

DEFAULT_FEATURES = {
    ModelKind.TOOL_HEAT: ("T_tool", "omega", "T_f"),
    ModelKind.TOOL_COOL: ("T_tool",),
    ModelKind.BUILD: ("T_build", "T_tool", "d"),
}


@dataclass(frozen=True, eq=False)
class RegressionSet:
    """Feature rows and derivative targets for one model.

    All samples of the selected phase are kept (so column filters can see
    their neighbours); ``valid`` marks the rows that enter the fit. Target
    entries at invalid rows are zero.
    """

    features: tuple
    rows: np.ndarray  # (n, F)
    target: np.ndarray  # (n,)
    valid: np.ndarray  # (n,) bool
    segments: np.ndarray  # (n,) int, never shared across stacked sensors
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.target)

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.features.index(name)]


def build_regression_set(
    phased: PhasedDataset,
    kind: ModelKind,
    derivs: Mapping[str, "object"],
    tc_selection: Iterable[int] = (1, 2, 3),
    features: Sequence[str] | None = None,
    segments: np.ndarray | None = None,
) -> RegressionSet:
    """Assemble rows for ``kind``.

    ``derivs`` maps the target channel (``"T_tool"`` or ``"T_buildN"``) to a
    derivative series with ``values`` and ``valid`` aligned to ``phased``.
    """
    kind = ModelKind(kind)
    feats = tuple(features or DEFAULT_FEATURES[kind])
    seg = segment_ids(phased) if segments is None else np.asarray(segments)
    if kind is ModelKind.BUILD:
        if set(feats) != set(DEFAULT_FEATURES[ModelKind.BUILD]):
            raise SchemaError("features", "build model features must be {T_build, T_tool, d}")
        sensors = tuple(int(i) for i in tc_selection)
        if not sensors:
            raise DataError("no thermocouples selected")
        blocks = []
        offset = 0
        for tc in sensors:
            if not 1 <= tc <= N_SENSORS:
                raise RangeError(f"thermocouple {tc} outside 1..{N_SENSORS}")
            ch = f"T_build{tc}"
            if ch not in derivs:
                raise DataError(f"no derivative series for {ch}")
            dv = derivs[ch]
            cols = {
                "T_build": phased.data.T_build[:, tc - 1],
                "T_tool": phased.data.T_tool,
                "d": tool_distance(phased.data.s_tool, phased.layout.tc_locations[tc - 1]),
            }
            rows = np.column_stack([cols[f] for f in feats])
            blocks.append((rows, np.asarray(dv.values), np.asarray(dv.valid), seg + offset))
            offset += int(seg.max()) + 1 if len(seg) else 0
        rows = np.concatenate([b[0] for b in blocks])
        target = np.concatenate([b[1] for b in blocks])
        valid = np.concatenate([b[2] for b in blocks])
        segs = np.concatenate([b[3] for b in blocks])
        prov = {"dataset": phased.data.source, "channel": [f"T_build{i}" for i in sensors], "phase": "Heat+Cool"}
    else:
        stage = Stage.HEAT if kind is ModelKind.TOOL_HEAT else Stage.COOL
        idx = np.flatnonzero(phased.stage == int(stage))
        if len(idx) == 0:
            raise DataError(f"no {stage} samples for {kind.value} regression")
        if "T_tool" not in derivs:
            raise DataError("no derivative series for T_tool")
        dv = derivs["T_tool"]
        rows = np.column_stack([phased.data.channel(f)[idx] for f in feats])
        target = np.asarray(dv.values)[idx]
        valid = np.asarray(dv.valid)[idx]
        segs = seg[idx]
        prov = {"dataset": phased.data.source, "channel": "T_tool", "phase": str(stage)}

    valid = valid & np.all(np.isfinite(rows), axis=1) & np.isfinite(target)
    target = np.where(valid, target, 0.0)
    if not valid.any():
        raise DataError(f"{kind.value}: no valid regression rows")
    return RegressionSet(feats, rows, target, valid, segs, prov)
