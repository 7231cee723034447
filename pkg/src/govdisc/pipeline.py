"""End-to-end discovery: tagged dataset -> regression set -> sparse model.

The derivative target is the finite difference of the smoothed state. The
same moving average is applied to every library column (evaluated on the
raw signals), so both sides of the regression see the same filter; rows
whose smoothing window was truncated at a segment edge are dropped.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .featlib import DesignMatrix, build_library, evaluate_library
from .govmodel import BUILD_SYMBOLS, TOOL_SYMBOLS, BuildModel, PiecewiseToolModel
from .metrics import mape
from .simulate import IntegratorConfig, simulate_type2
from .smoothdiff import SmootherConfig, derivative_target, smooth
from .sparsereg import HyperParams, SparseModel, TuningResult, discover, tune_k
from .timeseries import (
    N_SENSORS,
    ModelKind,
    PhasedDataset,
    RegressionSet,
    build_regression_set,
    segment_ids,
    select_layers,
    setpoint_breaks,
)

log = logging.getLogger(__name__)


def default_workers() -> int:
    """Thread cap from ``GOVDISC_THREADS`` (default 1)."""
    raw = os.environ.get("GOVDISC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"GOVDISC_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


@dataclass(frozen=True)
class DiscoveryConfig:
    kind: ModelKind = ModelKind.TOOL_HEAT
    hp: HyperParams = HyperParams()
    features: tuple | None = None
    smoother: SmootherConfig = SmootherConfig()
    tc_selection: tuple = (1, 2, 3)
    split_on_setpoints: bool = True
    method: str = "auto"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))


@dataclass(frozen=True, eq=False)
class PreparedProblem:
    regression: RegressionSet
    design: DesignMatrix  # valid rows only
    target: np.ndarray
    state: str


def _segments(phased: PhasedDataset, split: bool) -> np.ndarray:
    return segment_ids(phased, setpoint_breaks(phased.data) if split else None)


def prepare(phased: PhasedDataset, cfg: DiscoveryConfig) -> PreparedProblem:
    """Build the filtered design matrix and derivative target for ``cfg.kind``."""
    seg = _segments(phased, cfg.split_on_setpoints)
    t = phased.data.t
    if cfg.kind is ModelKind.BUILD:
        derivs = {
            f"T_build{i}": derivative_target(phased.data.channel(f"T_build{i}"), t, seg, cfg.smoother)
            for i in cfg.tc_selection
        }
        state, symbols = "T_build", BUILD_SYMBOLS
    else:
        derivs = {"T_tool": derivative_target(phased.data.T_tool, t, seg, cfg.smoother)}
        state, symbols = "T_tool", TOOL_SYMBOLS
    rs = build_regression_set(phased, cfg.kind, derivs, cfg.tc_selection, cfg.features, seg)
    lib = build_library(rs.features, cfg.hp.max_degree, {k: v for k, v in symbols.items() if k in rs.features})
    raw = evaluate_library(lib, {f: rs.column(f) for f in rs.features}).values
    filtered = np.column_stack([smooth(raw[:, p], cfg.smoother, rs.segments) for p in range(lib.P)]) if lib.P else raw
    design = DesignMatrix(filtered[rs.valid], lib)
    return PreparedProblem(rs, design, rs.target[rs.valid], state)


def discover_model(phased: PhasedDataset, cfg: DiscoveryConfig) -> SparseModel:
    prob = prepare(phased, cfg)
    return discover(prob.design, prob.target, cfg.hp, state=prob.state, method=cfg.method, workers=cfg.workers)


def discover_tool_model(phased: PhasedDataset, heat: DiscoveryConfig, cool: DiscoveryConfig,
                        metadata: dict | None = None) -> PiecewiseToolModel:
    h = discover_model(phased, replace(heat, kind=ModelKind.TOOL_HEAT))
    c = discover_model(phased, replace(cool, kind=ModelKind.TOOL_COOL))
    return PiecewiseToolModel(h, c, metadata or {})


def discover_build_model(phased: PhasedDataset, cfg: DiscoveryConfig, metadata: dict | None = None) -> BuildModel:
    m = discover_model(phased, replace(cfg, kind=ModelKind.BUILD))
    return BuildModel(m, phased.layout, metadata or {})


# --------------------------------------------------------------------------
# k selection by short simulation


def tool_tuning(phased: PhasedDataset, kind: ModelKind, fixed: SparseModel, candidates: Sequence[HyperParams],
                train: tuple[int, int], seed_layer: int, window: int = 5, base: DiscoveryConfig | None = None,
                integrator: IntegratorConfig = IntegratorConfig()) -> TuningResult:
    """Select k for one tool submodel.

    Each candidate is fitted on the ``train`` layers, paired with the
    ``fixed`` submodel for the other stage, and simulated (one initial value)
    from the first sample of ``seed_layer`` for ``window`` layers; the score
    is the MAPE against the measured tool temperature in that window.
    """
    kind = ModelKind(kind)
    if kind is ModelKind.BUILD:
        raise ConfigError("tool_tuning handles tool submodels only")
    last = seed_layer + window - 1
    if seed_layer < 1 or last > phased.L:
        raise ConfigError(f"validation window layers {seed_layer}..{last} not available (dataset has {phased.L})")
    train_set = select_layers(phased, *train)
    val = select_layers(phased, seed_layer, last)
    base = replace(base or DiscoveryConfig(), kind=kind)

    def fit(hp):
        return discover_model(train_set, replace(base, hp=hp))

    def score(sub):
        from .errors import DivergenceError

        pair = (sub, fixed) if kind is ModelKind.TOOL_HEAT else (fixed, sub)
        res = simulate_type2(PiecewiseToolModel(*pair), val, float(val.data.T_tool[0]), integrator)
        if res.diverged:
            raise DivergenceError(f"t={res.divergence_time}")
        return mape(res.measured, res.predicted).value

    return tune_k(list(candidates), fit, score)


def candidate_grid(ks: Sequence[int] = (3, 4, 5), base: HyperParams = HyperParams()) -> list[HyperParams]:
    return [replace(base, k=k) for k in ks]


def all_sensors() -> tuple:
    return tuple(range(1, N_SENSORS + 1))
