import numpy as np
import pytest

from govdisc.errors import ConfigError
from govdisc.govmodel import reference_tool_model
from govdisc.pipeline import (
    DiscoveryConfig,
    all_sensors,
    candidate_grid,
    default_workers,
    discover_build_model,
    discover_tool_model,
    prepare,
    tool_tuning,
)
from govdisc.smoothdiff import SmootherConfig
from govdisc.sparsereg import HyperParams
from govdisc.synth import recovery_report
from govdisc.timeseries import ModelKind

SMALL = HyperParams(k=3, lambda2=1e-4)


def test_default_workers(monkeypatch):
    monkeypatch.delenv("GOVDISC_THREADS", raising=False)
    assert default_workers() == 1
    monkeypatch.setenv("GOVDISC_THREADS", "4")
    assert default_workers() == 4
    monkeypatch.setenv("GOVDISC_THREADS", "many")
    with pytest.raises(ConfigError):
        default_workers()


def test_prepare_shapes(small_synth):
    prob = prepare(small_synth.phased, DiscoveryConfig(kind=ModelKind.TOOL_HEAT))
    assert prob.design.values.shape == (len(prob.target), 35)
    assert prob.state == "T_tool"
    heat_rows = int((small_synth.phased.stage == 0).sum())
    assert len(prob.target) < heat_rows
    assert np.all(np.isfinite(prob.design.values)) and np.all(np.isfinite(prob.target))


def test_prepare_build_stacks_sensors(small_synth):
    one = prepare(small_synth.phased, DiscoveryConfig(kind=ModelKind.BUILD, tc_selection=(1,)))
    three = prepare(small_synth.phased, DiscoveryConfig(kind=ModelKind.BUILD, tc_selection=(1, 2, 3)))
    assert len(three.target) == 3 * len(one.target)
    assert three.state == "T_build"


def test_noiseless_tool_recovery_at_small_ridge(ripple_synth):
    cfg = DiscoveryConfig(hp=SMALL)
    model = discover_tool_model(ripple_synth.phased, cfg, cfg)
    truth = reference_tool_model("135")
    for a, b in ((truth.heating, model.heating), (truth.cooling, model.cooling)):
        r = recovery_report(a, b)
        assert r.exact_support, r.to_text()
        assert r.max_relative_error < 0.01


def test_unsmoothed_pipeline_runs(small_synth):
    cfg = DiscoveryConfig(kind=ModelKind.TOOL_COOL, hp=SMALL, smoother=SmootherConfig("none", 1))
    model = discover_tool_model(small_synth.phased, cfg, cfg).cooling
    assert model.k == 3


def test_build_model_carries_layout(small_synth):
    m = discover_build_model(small_synth.phased, DiscoveryConfig(hp=HyperParams(k=4, lambda2=1e-4)))
    assert m.layout == small_synth.phased.layout
    assert m.model.k == 4


def test_tool_tuning_table(ripple_synth):
    truth = reference_tool_model("135")
    res = tool_tuning(ripple_synth.phased, ModelKind.TOOL_COOL, truth.heating, candidate_grid((2, 3), SMALL),
                      train=(1, 8), seed_layer=9, window=5)
    assert [row[0] for row in res.table] == [2, 3]
    assert res.best.k == 3


def test_tool_tuning_rejects_bad_window(ripple_synth):
    truth = reference_tool_model("135")
    with pytest.raises(ConfigError):
        tool_tuning(ripple_synth.phased, ModelKind.TOOL_COOL, truth.heating, candidate_grid((3,)),
                    train=(1, 8), seed_layer=14, window=5)
    with pytest.raises(ConfigError):
        tool_tuning(ripple_synth.phased, ModelKind.BUILD, truth.heating, candidate_grid((3,)), (1, 8), 9)


def test_all_sensors():
    assert all_sensors() == (1, 2, 3, 4)
