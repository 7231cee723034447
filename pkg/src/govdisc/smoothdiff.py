"""Moving-average smoothing and phase-aware finite differences."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)


class SmoothMethod(enum.Enum):
    NONE = "none"
    MOVING_AVERAGE = "ma"


@dataclass(frozen=True)
class SmootherConfig:
    method: SmoothMethod = SmoothMethod.MOVING_AVERAGE
    window: int = 5

    def __post_init__(self):
        object.__setattr__(self, "method", SmoothMethod(self.method))
        if self.window < 1 or self.window % 2 == 0:
            raise ConfigError(f"smoothing window must be a positive odd integer, got {self.window}")

    @property
    def half_width(self) -> int:
        return 0 if self.method is SmoothMethod.NONE else self.window // 2


NO_SMOOTHING = SmootherConfig(SmoothMethod.NONE, 1)


@dataclass(frozen=True, eq=False)
class DerivativeSeries:
    values: np.ndarray
    valid: np.ndarray

    def __len__(self):
        return len(self.values)


def _segment_bounds(n: int, segments) -> list[tuple[int, int]]:
    if segments is None:
        return [(0, n)] if n else []
    seg = np.asarray(segments)
    if len(seg) != n:
        raise ConfigError("segment labels must align with the series")
    if n == 0:
        return []
    cuts = np.flatnonzero(np.diff(seg) != 0) + 1
    starts = np.concatenate([[0], cuts])
    stops = np.concatenate([cuts, [n]])
    return list(zip(starts.tolist(), stops.tolist()))


def _moving_average(x: np.ndarray, window: int) -> np.ndarray:
    # centred mean whose half-width shrinks symmetrically near the ends
    n = len(x)
    hw = window // 2
    csum = np.concatenate([[0.0], np.cumsum(x, dtype=float)])
    i = np.arange(n)
    r = np.minimum(hw, np.minimum(i, n - 1 - i))
    return (csum[i + r + 1] - csum[i - r]) / (2 * r + 1)


def smooth(series, config: SmootherConfig = SmootherConfig(), segments=None) -> np.ndarray:
    """Centred moving average, applied independently inside each segment.

    With ``segments=None`` the whole series is one segment.
    """
    x = np.asarray(series, dtype=float)
    if config.method is SmoothMethod.NONE:
        return x.copy()
    bounds = _segment_bounds(len(x), segments)
    if segments is None and config.window > len(x):
        raise ConfigError(f"window {config.window} longer than series ({len(x)})")
    out = np.empty_like(x)
    for a, b in bounds:
        out[a:b] = _moving_average(x[a:b], config.window)
    return out


def differentiate(series, t, segments=None) -> DerivativeSeries:
    """Central differences that never cross a segment boundary.

    Segment endpoints get one-sided differences, flagged invalid. Segments
    shorter than three samples are entirely invalid.
    """
    x = np.asarray(series, dtype=float)
    t = np.asarray(t, dtype=float)
    n = len(x)
    if len(t) != n:
        raise ConfigError("series and timestamps differ in length")
    if n > 1 and not np.all(np.diff(t) > 0):
        raise ConfigError("timestamps must be strictly increasing")
    values = np.zeros(n)
    valid = np.zeros(n, dtype=bool)
    for a, b in _segment_bounds(n, segments):
        m = b - a
        if m < 2:
            log.warning("segment at %d has %d sample(s); derivative masked", a, m)
            continue
        xs, ts = x[a:b], t[a:b]
        values[a] = (xs[1] - xs[0]) / (ts[1] - ts[0])
        values[b - 1] = (xs[-1] - xs[-2]) / (ts[-1] - ts[-2])
        if m < 3:
            log.warning("segment at %d has %d samples; derivative masked", a, m)
            continue
        values[a + 1 : b - 1] = (xs[2:] - xs[:-2]) / (ts[2:] - ts[:-2])
        valid[a + 1 : b - 1] = True
    return DerivativeSeries(values, valid)


def trim_edges(valid: np.ndarray, segments, width: int) -> np.ndarray:
    """Invalidate ``width`` extra samples at both ends of every segment."""
    out = np.array(valid, dtype=bool)
    if width <= 0:
        return out
    for a, b in _segment_bounds(len(out), segments):
        out[a : min(b, a + width)] = False
        out[max(a, b - width) : b] = False
    return out


def derivative_target(series, t, segments=None, config: SmootherConfig = SmootherConfig()) -> DerivativeSeries:
    """Smooth, difference, then drop samples whose stencil touches a
    truncated smoothing window.

    A central difference at i reads i-1 and i+1, whose windows are complete
    only when i lies at least half_width + 1 samples inside its segment.
    """
    sm = smooth(series, config, segments if segments is not None else np.zeros(len(series), dtype=int))
    d = differentiate(sm, t, segments)
    return DerivativeSeries(d.values, trim_edges(d.valid, segments, config.half_width + 1))
