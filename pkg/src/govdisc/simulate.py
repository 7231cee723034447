"""Fixed-step RK4 simulation of the tool and build equations.

Inputs are held constant over each sample interval (zero-order hold). When
the right-hand side is a polynomial in the state with input-dependent
coefficients, the coefficients are precomputed once per interval and the
inner loop only runs Horner's rule.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError
from .govmodel import BuildModel, PiecewiseToolModel
from .sparsereg import SparseModel
from .timeseries import PhasedDataset, SensorLayout, Stage, tool_distance

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e4
ROOM_TEMPERATURE = 24.0


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "RK4"
    substeps: int = 10

    def __post_init__(self):
        if self.method.upper() != "RK4":
            raise ConfigError(f"unsupported integrator {self.method!r}")
        if int(self.substeps) < 1:
            raise ConfigError("substeps must be >= 1")


@dataclass(frozen=True, eq=False)
class Trajectory:
    values: np.ndarray
    diverged: bool = False
    diverged_at: int | None = None  # sample index of the first bad value


def _diverged(x) -> bool:
    return not math.isfinite(x) or abs(x) > DIVERGENCE_LIMIT


def integrate_segment(rhs: Callable, T0: float, t, inputs: Mapping[str, np.ndarray] | None = None,
                      cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate ``dT/dt = rhs(T, u)`` across the sample grid ``t``.

    ``u`` is a dict of input values at the left sample of each interval.
    The returned trajectory has one value per sample, starting at ``T0``.
    """
    t = np.asarray(t, dtype=float)
    n = len(t)
    out = np.full(n, np.nan)
    if n == 0:
        return Trajectory(out)
    inputs = {k: np.asarray(v, dtype=float) for k, v in (inputs or {}).items()}
    T = float(T0)
    out[0] = T
    if _diverged(T):
        return Trajectory(out, True, 0)
    m = cfg.substeps
    for i in range(n - 1):
        u = {k: v[i] for k, v in inputs.items()}
        h = (t[i + 1] - t[i]) / m
        for _ in range(m):
            k1 = rhs(T, u)
            k2 = rhs(T + 0.5 * h * k1, u)
            k3 = rhs(T + 0.5 * h * k2, u)
            k4 = rhs(T + h * k3, u)
            T = T + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if _diverged(T):
                break
        if _diverged(T):
            return Trajectory(out, True, i + 1)
        out[i + 1] = T
    return Trajectory(out)


def integrate_polynomial(C: np.ndarray, T0: float, t, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """RK4 for ``dT/dt = sum_j C[i, j] T**j`` on interval i (scalar state)."""
    t = np.asarray(t, dtype=float)
    n = len(t)
    out = np.full(n, np.nan)
    if n == 0:
        return Trajectory(out)
    T = float(T0)
    out[0] = T
    if _diverged(T):
        return Trajectory(out, True, 0)
    m = cfg.substeps
    dts = np.diff(t) / m
    coeffs = np.asarray(C, dtype=float)[:, ::-1].tolist()  # highest power first
    for i in range(n - 1):
        c = coeffs[i]
        h = float(dts[i])
        hh = 0.5 * h
        h6 = h / 6.0
        for _ in range(m):
            k1 = 0.0
            for a in c:
                k1 = k1 * T + a
            x = T + hh * k1
            k2 = 0.0
            for a in c:
                k2 = k2 * x + a
            x = T + hh * k2
            k3 = 0.0
            for a in c:
                k3 = k3 * x + a
            x = T + h * k3
            k4 = 0.0
            for a in c:
                k4 = k4 * x + a
            T = T + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not (abs(T) <= DIVERGENCE_LIMIT):
            return Trajectory(out, True, i + 1)
        out[i + 1] = T
    return Trajectory(out)


def integrate_polynomial_batch(C: np.ndarray, T0, t, cfg: IntegratorConfig = IntegratorConfig()):
    """Vectorised version over independent states: ``C`` is (n-1, L, J+1).

    Returns (values (n, L), diverged (L,), diverged_at (L,) with -1 for none).
    A diverged state is frozen at NaN while the others continue.
    """
    t = np.asarray(t, dtype=float)
    C = np.asarray(C, dtype=float)
    n = len(t)
    L = C.shape[1] if C.ndim == 3 and C.shape[0] else int(np.size(T0))
    T = np.array(np.broadcast_to(np.asarray(T0, dtype=float), (L,)), dtype=float)
    out = np.full((n, L), np.nan)
    at = np.full(L, -1)
    if n == 0:
        return out, np.zeros(L, dtype=bool), at
    bad = ~np.isfinite(T) | (np.abs(T) > DIVERGENCE_LIMIT)
    at[bad] = 0
    T[bad] = np.nan
    out[0] = T
    m = cfg.substeps
    dts = np.diff(t) / m
    J = C.shape[-1]

    def f(x, c):
        acc = c[:, J - 1].copy()
        for j in range(J - 2, -1, -1):
            acc *= x
            acc += c[:, j]
        return acc

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n - 1):
            c = C[i]
            h = dts[i]
            for _ in range(m):
                k1 = f(T, c)
                k2 = f(T + 0.5 * h * k1, c)
                k3 = f(T + 0.5 * h * k2, c)
                k4 = f(T + h * k3, c)
                T = T + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            new_bad = ~bad & ~(np.abs(T) <= DIVERGENCE_LIMIT)
            if new_bad.any():
                at[new_bad] = i + 1
                bad |= new_bad
                T[bad] = np.nan
            out[i + 1] = T
    return out, bad, at


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Predictions aligned to the driving dataset's timestamps.

    ``segments`` lists ``(start, stop, layer, stage, T_start, T_end)``;
    ``T_end`` is the value the segment hands to its successor.
    """

    t: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    layer: np.ndarray
    stage: np.ndarray
    segments: tuple = ()
    diverged: bool = False
    divergence_time: float | None = None
    wall_time: float = 0.0
    kind: str = ""

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.t,
            "measured": self.measured,
            "predicted": self.predicted,
            "layer": self.layer,
            "stage": [str(Stage(int(s))) for s in self.stage],
        })

    def to_csv(self, path=None) -> str:
        text = self.to_frame().to_csv(index=False, float_format="%.17g", lineterminator="\n")
        if path is not None:
            from .io import write_atomic

            write_atomic(path, text)
        return text

    @property
    def mask(self) -> np.ndarray:
        return np.isfinite(self.predicted)

    def boundary_gaps(self) -> np.ndarray:
        """|T_end(prev) - T_start(next)| for consecutive segments."""
        segs = self.segments
        return np.array([abs(a[5] - b[4]) for a, b in zip(segs[:-1], segs[1:])])


def _tool_inputs(sub: SparseModel, data, idx) -> dict:
    return {f: data.channel(f)[idx] for f in sub.library.features if f != sub.state}


def _run_tool_segment(sub: SparseModel, data, a: int, b: int, T0: float, cfg: IntegratorConfig) -> Trajectory:
    """Integrate samples a..b-1 using inputs held at each left sample."""
    idx = np.arange(a, b)
    if b - a < 2:
        return Trajectory(np.array([T0], dtype=float)[: b - a])
    C = sub.state_polynomial(_tool_inputs(sub, data, idx[:-1]), n=b - a - 1)
    return integrate_polynomial(C, T0, data.t[a:b], cfg)


def _stage_filter(stage) -> set:
    if stage is None or stage == "both":
        return {Stage.HEAT, Stage.COOL}
    return {Stage.parse(stage) if not isinstance(stage, Stage) else stage}


def simulate_type1(model: PiecewiseToolModel, phased: PhasedDataset, stage=None,
                   cfg: IntegratorConfig = IntegratorConfig()) -> SimulationResult:
    """Each (layer, stage) segment integrated from its own measured first value."""
    keep = _stage_filter(stage)
    data = phased.data
    pred = np.full(len(phased), np.nan)
    segs = []
    diverged, div_t = False, None
    start = time.perf_counter()
    for a, b, layer, st in phased.segments():
        if st not in keep:
            continue
        T0 = float(data.T_tool[a])
        if not math.isfinite(T0):
            raise DataError(f"no measured seed at t={data.t[a]} (layer {layer}, {st})")
        tr = _run_tool_segment(model.stage_model(st), data, a, b, T0, cfg)
        pred[a:b] = tr.values
        if tr.diverged and not diverged:
            diverged, div_t = True, float(data.t[a + tr.diverged_at])
        segs.append((a, b, layer, int(st), T0, float(tr.values[-1])))
    if not segs:
        raise DataError("no segments match the stage filter")
    wall = time.perf_counter() - start
    return SimulationResult(data.t, data.T_tool, pred, phased.layer, phased.stage, tuple(segs), diverged, div_t, wall, "type1")


def simulate_type2(model: PiecewiseToolModel, phased: PhasedDataset, T0: float = ROOM_TEMPERATURE,
                   cfg: IntegratorConfig = IntegratorConfig()) -> SimulationResult:
    """One initial value for the whole run; each segment starts where the
    previous one ended.

    A segment is integrated over its own samples plus the interval leading
    to the next segment's first sample, so the hand-over value is exactly
    the next segment's initial value.
    """
    data = phased.data
    n = len(phased)
    pred = np.full(n, np.nan)
    segs = []
    diverged, div_t = False, None
    T = float(T0)
    start = time.perf_counter()
    for a, b, layer, st in phased.segments():
        stop = min(b + 1, n)
        tr = _run_tool_segment(model.stage_model(st), data, a, stop, T, cfg)
        pred[a:stop] = tr.values
        if tr.diverged:
            diverged, div_t = True, float(data.t[a + tr.diverged_at])
            pred[a + tr.diverged_at:] = np.nan
            segs.append((a, b, layer, int(st), T, math.nan))
            log.warning("type II simulation diverged at t=%s", div_t)
            break
        end = float(tr.values[-1])
        segs.append((a, b, layer, int(st), T, end))
        T = end
    wall = time.perf_counter() - start
    return SimulationResult(data.t, data.T_tool, pred, phased.layer, phased.stage, tuple(segs), diverged, div_t, wall, "type2")


# --------------------------------------------------------------------------
# build


@dataclass(frozen=True, eq=False)
class BuildSimulation:
    t: np.ndarray
    locations: np.ndarray  # (L, 3)
    predicted: np.ndarray  # (n, L)
    diverged: np.ndarray  # (L,) bool
    diverged_at: np.ndarray  # (L,) sample index or -1
    distance: np.ndarray  # (n, L)
    wall_time: float = 0.0

    @property
    def n_locations(self) -> int:
        return self.locations.shape[0]

    def trajectory(self, j: int) -> np.ndarray:
        return self.predicted[:, j]

    def to_frame(self) -> pd.DataFrame:
        cols = {"t": self.t}
        for j in range(self.n_locations):
            cols[f"loc{j + 1}"] = self.predicted[:, j]
        return pd.DataFrame(cols)


def centerline_locations(layout: SensorLayout, n: int = 53) -> np.ndarray:
    """``n`` points evenly spaced on the line from the first to the last sensor."""
    if n < 2:
        raise ConfigError("need at least two centerline locations")
    loc = layout.tc_locations
    w = np.linspace(0.0, 1.0, n)[:, None]
    return loc[0] * (1 - w) + loc[-1] * w


def simulate_build(model: BuildModel, t, T_tool, s_tool, locations, T0=ROOM_TEMPERATURE,
                   cfg: IntegratorConfig = IntegratorConfig(), stage=None,
                   freeze_d_on_cool: bool = False) -> BuildSimulation:
    """One build ODE per location, all integrated together.

    ``d`` is the distance from the tool to each location. With
    ``freeze_d_on_cool`` the distance is held at its last Heat value while
    the tool is away (requires ``stage``).
    """
    t = np.asarray(t, dtype=float)
    T_tool = np.asarray(T_tool, dtype=float)
    s_tool = np.asarray(s_tool, dtype=float).reshape(len(t), 3)
    locs = np.atleast_2d(np.asarray(locations, dtype=float))
    if locs.shape[1] != 3:
        raise ConfigError("locations must be (L, 3)")
    if len(T_tool) != len(t):
        raise DataError("tool temperature and timestamps differ in length")
    if not np.all(np.isfinite(T_tool)):
        raise DataError("tool temperature driving the build simulation has gaps")
    d = tool_distance(s_tool[:, None, :], locs[None, :, :])
    d = np.asarray(d).reshape(len(t), len(locs))
    if freeze_d_on_cool:
        if stage is None:
            raise ConfigError("freeze-d-on-cool needs stage labels")
        st = np.asarray(stage)
        for i in range(1, len(t)):
            if st[i] == int(Stage.COOL):
                d[i] = d[i - 1]
    start = time.perf_counter()
    n = len(t)
    if n > 1:
        C = model.model.state_polynomial({"T_tool": T_tool[:-1, None], "d": d[:-1]})
    else:
        C = np.zeros((0, len(locs), 1))
    T0 = np.broadcast_to(np.asarray(T0, dtype=float), (len(locs),))
    values, bad, at = integrate_polynomial_batch(C, T0, t, cfg)
    wall = time.perf_counter() - start
    return BuildSimulation(t, locs, values, bad, at, d, wall)
