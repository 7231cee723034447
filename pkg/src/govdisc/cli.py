"""Command-line interface: ingest, discover, simulate, synth, validate, report.

Exit codes: 0 success, 1 validation failure, 2 config/schema, 3 data,
4 numerical. Options resolve as flags > ``--config`` file > defaults.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, GovDiscError, SchemaError
from .govmodel import (
    FIXTURE_FILES,
    BuildModel,
    PiecewiseToolModel,
    dumps_model,
    load_fixture,
    load_model,
    pretty_print,
)
from .io import sha256_file, write_atomic
from .metrics import ComparisonRun, comparison_table
from .pipeline import DiscoveryConfig, candidate_grid, default_workers, discover_model, tool_tuning
from .simulate import IntegratorConfig, centerline_locations, simulate_build, simulate_type1, simulate_type2
from .smoothdiff import SmootherConfig
from .sparsereg import HyperParams, SparseModel
from .synth import Constant, ProcessPlan, RampThenHold, WithRipple, generate_ground_truth, recovery_report
from .timeseries import (
    ModelKind,
    Schema,
    SegmentationRule,
    Stage,
    load_dataset,
    segment_phases,
    select_layers,
    to_frame,
)

log = logging.getLogger("govdisc")

DEFAULTS = {
    "ingest": {"segmentation": "infer"},
    "discover": {
        "kind": "tool", "k": 3, "lambda2": 100.0, "big_m": 1000.0, "degree": 4, "window": 5,
        "features": "", "sensors": "1,2,3", "layers": "", "k_candidates": "", "seed_layer": 0,
        "segmentation": "infer", "solver": "auto",
    },
    "simulate": {
        "type": 2, "stage": "both", "T0": 24.0, "substeps": 10, "tool_source": "measured",
        "freeze_d_on_cool": False, "locations": 53, "layers": "", "segmentation": "infer",
    },
    "synth": {
        "layers": 16, "wall_length": 216.0, "traverse_speed": 127.0, "deposit_omega": 135.0,
        "preheat_omega": 350.0, "preheat_duration": 20, "cool_duration": 150, "torque": "constant:60",
        "noise": 0.0, "seed": 0, "truth": "135", "build_truth": "build",
    },
    "validate": {"threshold": 0.01},
    "report": {},
}

# --------------------------------------------------------------------------
# config resolution


def _coerce(command: str, key: str, value):
    kind = type(DEFAULTS[command].get(key, ""))
    if value is None or isinstance(value, kind) and kind is not str:
        return value
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"option {key}: cannot parse {value!r} as {kind.__name__}") from exc


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, the config file section and explicit flags."""
    resolved = dict(DEFAULTS.get(command, {}))
    path = getattr(args, "config", None)
    if path:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
        for section in (command, "plan") if command == "synth" else (command,):
            if cp.has_section(section):
                for key, value in cp.items(section):
                    norm = key.replace("-", "_")
                    if norm not in resolved:
                        raise SchemaError(key, f"unknown key {key!r} in [{section}] of {path}")
                    resolved[norm] = _coerce(command, norm, value)
    for key in list(resolved):
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = _coerce(command, key, flag)
    return resolved


def _manifest(command: str, cfg: dict, inputs: list, outputs: list) -> str:
    doc = {
        "tool": "govdisc",
        "version": __version__,
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "inputs": {str(p): sha256_file(p) for p in inputs if p and Path(p).is_file()},
        "outputs": {str(p): sha256_file(p) for p in outputs if Path(p).is_file()},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_manifest(path, command, cfg, inputs, outputs):
    write_atomic(path, _manifest(command, cfg, inputs, outputs))


def _load_data(args, segmentation: str):
    if not args.data:
        raise ConfigError("--data is required")
    schema = Schema.from_file(args.schema) if args.schema else None
    try:
        data = load_dataset(args.data, schema)
    except FileNotFoundError as exc:
        raise DataError(f"data file not found: {args.data}") from exc
    except (ValueError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse {args.data}: {exc}") from exc
    return segment_phases(data, SegmentationRule(mode=segmentation))


def _layer_range(text: str):
    if not text:
        return None
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError as exc:
        raise ConfigError(f"layer range must look like FIRST:LAST, got {text!r}") from exc


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in str(text).replace(" ", "").split(",") if x)
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _model_from(spec: str):
    """A model file path, or the name of a shipped fixture."""
    if spec in FIXTURE_FILES and not Path(spec).exists():
        return load_fixture(spec)
    return load_model(spec)


# --------------------------------------------------------------------------
# plotting


def _svg(path, draw):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "govdisc", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(10, 4))
        draw(ax)
        fig.tight_layout()
        tmp = Path(path).with_suffix(".svg.part")
        fig.savefig(tmp, format="svg", metadata={"Date": None})
        plt.close(fig)
    Path(tmp).replace(path)


def _line_plot(path, t, series: dict, boundaries=(), title="", ylabel="Temperature (°C)"):
    def draw(ax):
        for name, y in series.items():
            ax.plot(t, y, label=name, linewidth=1)
        for b in boundaries:
            ax.axvline(b, color="0.8", linewidth=0.5)
        ax.set_xlabel("Time (s)")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend(loc="best")

    _svg(path, draw)


# --------------------------------------------------------------------------
# commands


def cmd_ingest(args) -> int:
    cfg = resolve_config("ingest", args)
    phased = _load_data(args, cfg["segmentation"])
    print(f"rows={len(phased)} skipped={phased.data.skipped_rows} layers={phased.L}")
    outputs = []
    if args.out:
        text = to_frame(phased).to_csv(index=False, float_format="%.17g", lineterminator="\n")
        write_atomic(args.out, text)
        outputs.append(args.out)
        _write_manifest(str(args.out) + ".manifest.json", "ingest", cfg, [args.data, args.schema], outputs)
    return 0


def _fit_report(models: dict) -> str:
    lines = []
    for name, sub in models.items():
        d = sub.diagnostics
        lines.append(f"[{name}]")
        lines.append(equation_line(sub))
        lines.append(f"stage1_objective = {d.stage1_objective:.6e}")
        lines.append(f"stage2_residual_norm = {d.stage2_residual_norm:.6e}")
        lines.append(f"n_samples = {d.n_samples}  k = {d.k}  lambda2 = {d.lambda2:g}  M = {d.M:g}  solver = {d.method}")
        if d.excluded:
            lines.append("excluded zero-norm columns: " + ", ".join(sub.library.names()[i] for i in d.excluded))
    return "\n".join(lines) + "\n"


def equation_line(sub: SparseModel) -> str:
    return pretty_print(sub)


def cmd_discover(args) -> int:
    cfg = resolve_config("discover", args)
    if not args.out:
        raise ConfigError("--out is required")
    phased = _load_data(args, cfg["segmentation"])
    rng = _layer_range(cfg["layers"])
    train = select_layers(phased, *rng) if rng else phased
    hp = HyperParams(k=cfg["k"], lambda2=cfg["lambda2"], M=cfg["big_m"], max_degree=cfg["degree"])
    feats = tuple(f.strip() for f in cfg["features"].split(",") if f.strip()) or None
    base = DiscoveryConfig(
        hp=hp, features=feats, smoother=SmootherConfig(window=cfg["window"]) if cfg["window"] > 1
        else SmootherConfig("none", 1), tc_selection=_int_list(cfg["sensors"]), method=cfg["solver"],
        workers=default_workers(),
    )
    kind = cfg["kind"]
    meta = {"dataset": Path(args.data).name, "k": hp.k, "lambda2": hp.lambda2, "M": hp.M, "max_degree": hp.max_degree,
            "units": "T degC, omega rpm, T_f N*m, d mm, t s"}
    report_extra = ""
    if kind == "tool":
        heat = discover_model(train, replace(base, kind=ModelKind.TOOL_HEAT))
        cool = discover_model(train, replace(base, kind=ModelKind.TOOL_COOL))
        ks = _int_list(cfg["k_candidates"])
        if ks:
            if not rng or not cfg["seed_layer"]:
                raise ConfigError("k tuning needs --layers and --seed-layer")
            grid = candidate_grid(ks, hp)
            th = tool_tuning(phased, ModelKind.TOOL_HEAT, cool, grid, rng, cfg["seed_layer"], base=base)
            heat = discover_model(train, replace(base, kind=ModelKind.TOOL_HEAT, hp=th.best))
            tc = tool_tuning(phased, ModelKind.TOOL_COOL, heat, grid, rng, cfg["seed_layer"], base=base)
            cool = discover_model(train, replace(base, kind=ModelKind.TOOL_COOL, hp=tc.best))
            report_extra = _tuning_text("heating", th) + _tuning_text("cooling", tc)
        model = PiecewiseToolModel(heat, cool, meta)
        subs = {"heating": heat, "cooling": cool}
    elif kind in ("tool-heat", "tool-cool", "build"):
        sub = discover_model(train, replace(base, kind=ModelKind(kind)))
        model = BuildModel(sub, phased.layout, meta) if kind == "build" else sub
        subs = {kind: sub}
    else:
        raise ConfigError(f"unknown --kind {kind!r}")
    write_atomic(args.out, dumps_model(model))
    report = _fit_report(subs) + report_extra
    write_atomic(str(args.out) + ".report.txt", report)
    print(report, end="")
    _write_manifest(str(args.out) + ".manifest.json", "discover", cfg, [args.data, args.schema],
                    [args.out, str(args.out) + ".report.txt"])
    return 0


def _tuning_text(name, result) -> str:
    lines = [f"[{name} k selection]"]
    for k, value, msg in result.table:
        lines.append(f"k={k}  MAPE={'n/a' if value is None else f'{value:.4f}%'}  {msg}")
    lines.append(f"selected k = {result.best.k}")
    return "\n".join(lines) + "\n"


def _assemble_models(paths):
    tool = build = None
    heat = cool = None
    for spec in paths:
        m = _model_from(spec)
        if isinstance(m, PiecewiseToolModel):
            tool = m
        elif isinstance(m, BuildModel):
            build = m
        elif isinstance(m, SparseModel):
            if "omega" in m.library.features or "T_f" in m.library.features:
                heat = m
            else:
                cool = m
    if tool is None and heat is not None and cool is not None:
        tool = PiecewiseToolModel(heat, cool)
    elif tool is None and (heat is not None or cool is not None):
        raise ConfigError("tool simulation needs both a heating and a cooling model")
    return tool, build


def cmd_simulate(args) -> int:
    cfg = resolve_config("simulate", args)
    if not args.out:
        raise ConfigError("--out is required")
    if not args.model:
        raise ConfigError("--model is required")
    tool, build = _assemble_models(args.model)
    phased = _load_data(args, cfg["segmentation"])
    rng = _layer_range(cfg["layers"])
    if rng:
        phased = select_layers(phased, *rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    icfg = IntegratorConfig(substeps=cfg["substeps"])
    outputs = []
    runs = []
    layer_starts = [float(phased.data.t[a]) for a, b, layer, st in phased.segments() if st is Stage.HEAT]
    sim = None
    if tool is not None:
        if cfg["type"] == 1:
            sim = simulate_type1(tool, phased, cfg["stage"], icfg)
        elif cfg["type"] == 2:
            sim = simulate_type2(tool, phased, cfg["T0"], icfg)
        else:
            raise ConfigError("--type must be 1 or 2")
        p = out / "tool_trajectory.csv"
        sim.to_csv(p)
        outputs.append(p)
        runs.append(ComparisonRun(f"tool type {cfg['type']}", sim.measured, sim.predicted, sim.wall_time))
        ov = out / "tool_overview.svg"
        _line_plot(ov, sim.t, {"measured": sim.measured, "predicted": sim.predicted}, layer_starts,
                   f"Tool temperature, type {cfg['type']}")
        outputs.append(ov)
        for layer in sorted(set(int(x) for x in phased.layer)):
            idx = np.flatnonzero(phased.layer == layer)
            lp = out / f"tool_layer_{layer:03d}.csv"
            write_atomic(lp, sim.to_frame().iloc[idx].to_csv(index=False, float_format="%.17g", lineterminator="\n"))
            zp = out / f"tool_layer_{layer:03d}.svg"
            _line_plot(zp, sim.t[idx], {"measured": sim.measured[idx], "predicted": sim.predicted[idx]}, (),
                       f"Layer {layer}")
            outputs += [lp, zp]
        if sim.diverged:
            log.warning("tool simulation diverged at t=%s", sim.divergence_time)
    if build is not None:
        data = phased.data
        if cfg["tool_source"] == "simulated":
            if sim is None or cfg["type"] != 2:
                raise ConfigError("--tool-source simulated needs a tool model and --type 2")
            T_tool = sim.predicted
            if not np.all(np.isfinite(T_tool)):
                raise DataError("simulated tool trajectory has gaps (divergence); cannot drive the build")
        elif cfg["tool_source"] == "measured":
            T_tool = data.T_tool
        else:
            raise ConfigError("--tool-source must be measured or simulated")
        layout = data.layout
        bs = simulate_build(build, data.t, T_tool, data.s_tool, layout.tc_locations, cfg["T0"], icfg,
                            phased.stage, cfg["freeze_d_on_cool"])
        frame = bs.to_frame()
        for j in range(4):
            frame[f"measured{j + 1}"] = data.T_build[:, j]
            runs.append(ComparisonRun(f"build TC{j + 1}", data.T_build[:, j], bs.predicted[:, j], bs.wall_time))
        p = out / "build_sensors.csv"
        write_atomic(p, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
        outputs.append(p)
        for j in range(4):
            sp = out / f"build_tc{j + 1}.svg"
            _line_plot(sp, data.t, {"measured": data.T_build[:, j], "predicted": bs.predicted[:, j]}, layer_starts,
                       f"Build TC{j + 1} (tool source: {cfg['tool_source']})")
            outputs.append(sp)
        if cfg["locations"] > 1:
            cl = centerline_locations(layout, cfg["locations"])
            mp = simulate_build(build, data.t, T_tool, data.s_tool, cl, cfg["T0"], icfg, phased.stage,
                                cfg["freeze_d_on_cool"])
            p = out / "build_map.csv"
            write_atomic(p, mp.to_frame().to_csv(index=False, float_format="%.17g", lineterminator="\n"))
            outputs.append(p)
    if tool is None and build is None:
        raise ConfigError("no usable model given")
    table = comparison_table(runs)
    for name, text in (("comparison.csv", table.to_csv()), ("comparison.txt", table.to_text())):
        write_atomic(out / name, text)
        outputs.append(out / name)
    print(table.to_text(), end="")
    _write_manifest(out / "manifest.json", "simulate", cfg, [args.data, args.schema, *args.model], outputs)
    return 0


def parse_torque(text: str):
    parts = str(text).split(":")
    try:
        nums = [float(x) for x in parts[1:]]
        if parts[0] == "constant":
            return Constant(*nums)
        if parts[0] == "ramp":
            return RampThenHold(*nums)
        if parts[0] == "ripple":
            base = Constant(nums[0]) if nums else Constant()
            return WithRipple(base, *nums[1:])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad torque profile {text!r}") from exc
    raise ConfigError(f"unknown torque profile {text!r} (constant:V, ramp:A:B:T, ripple:V:AMP:PERIOD)")


def cmd_synth(args) -> int:
    cfg = resolve_config("synth", args)
    if not args.out:
        raise ConfigError("--out is required")
    plan = ProcessPlan(
        layers=cfg["layers"], wall_length=cfg["wall_length"], traverse_speed=cfg["traverse_speed"],
        deposit_omega=cfg["deposit_omega"], preheat_omega=cfg["preheat_omega"],
        preheat_duration=cfg["preheat_duration"], cool_duration=cfg["cool_duration"],
        torque_profile=parse_torque(cfg["torque"]), noise=cfg["noise"], seed=cfg["seed"],
    )
    tool = _model_from(cfg["truth"])
    if not isinstance(tool, PiecewiseToolModel):
        raise ConfigError("--truth must be a tool model (heating + cooling)")
    build = _model_from(cfg["build_truth"]) if cfg["build_truth"] not in ("", "none") else None
    if build is not None and not isinstance(build, BuildModel):
        raise ConfigError("--build-truth must be a build model")
    ds = generate_ground_truth(tool, build, plan)
    out = Path(args.out)
    shadow = out.with_name(out.stem + ".shadow.csv")
    for path, phased in ((out, ds.phased), (shadow, ds.shadow)):
        write_atomic(path, to_frame(phased).to_csv(index=False, float_format="%.17g", lineterminator="\n"))
    print(f"wrote {len(ds.phased)} samples, {plan.layers} layers to {out}")
    inputs = [p for p in (cfg["truth"], cfg["build_truth"]) if Path(p).is_file()]
    _write_manifest(str(out) + ".manifest.json", "synth", cfg, inputs, [out, shadow])
    return 0


def cmd_validate(args) -> int:
    cfg = resolve_config("validate", args)
    if not args.truth or not args.model:
        raise ConfigError("--truth and --model are required")
    truth = _model_from(args.truth)
    found = _model_from(args.model)

    def subs(m):
        if isinstance(m, PiecewiseToolModel):
            return {"heating": m.heating, "cooling": m.cooling}
        if isinstance(m, BuildModel):
            return {"build": m.model}
        return {"model": m}

    a, b = subs(truth), subs(found)
    if set(a) != set(b):
        raise ConfigError("truth and discovered models have different structure")
    ok = True
    lines = []
    for name in a:
        scores = recovery_report(a[name], b[name])
        lines.append(f"[{name}]")
        lines.append(scores.to_text().rstrip("\n"))
        ok &= scores.passed(cfg["threshold"])
    lines.append(f"result = {'PASS' if ok else 'FAIL'} (threshold {cfg['threshold']:g})")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        write_atomic(args.out, text)
        _write_manifest(str(args.out) + ".manifest.json", "validate", cfg, [args.truth, args.model], [args.out])
    return 0 if ok else 1


def cmd_report(args) -> int:
    cfg = resolve_config("report", args)
    if not args.data or not args.out:
        raise ConfigError("--data (a trajectory CSV) and --out are required")
    import pandas as pd

    try:
        frame = pd.read_csv(args.data)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read {args.data}: {exc}") from exc
    for col in ("t", "measured", "predicted"):
        if col not in frame.columns:
            raise SchemaError(col)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t = frame["t"].to_numpy(float)
    bounds = ()
    if "layer" in frame.columns:
        lay = frame["layer"].to_numpy()
        bounds = tuple(t[np.flatnonzero(np.diff(lay) != 0) + 1])
    svg = out / "report.svg"
    _line_plot(svg, t, {"measured": frame["measured"].to_numpy(float), "predicted": frame["predicted"].to_numpy(float)},
               bounds, Path(args.data).stem)
    table = comparison_table([ComparisonRun(Path(args.data).stem, frame["measured"].to_numpy(float),
                                            frame["predicted"].to_numpy(float))])
    write_atomic(out / "report.txt", table.to_text())
    print(table.to_text(), end="")
    _write_manifest(out / "manifest.json", "report", cfg, [args.data], [svg, out / "report.txt"])
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="govdisc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"govdisc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="INI file with a section named after the command")
        sp.add_argument("--out")
        if data:
            sp.add_argument("--data")
            sp.add_argument("--schema")
            sp.add_argument("--segmentation", choices=("infer", "explicit", "auto"))

    sp = sub.add_parser("ingest", help="load a process log and write the canonical CSV")
    common(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("discover", help="discover a governing equation and write a model file")
    common(sp)
    sp.add_argument("--kind", choices=("tool", "tool-heat", "tool-cool", "build"))
    sp.add_argument("--k", type=int)
    sp.add_argument("--lambda2", type=float)
    sp.add_argument("--big-m", dest="big_m", type=float)
    sp.add_argument("--degree", type=int)
    sp.add_argument("--window", type=int, help="moving-average window (odd, 1 disables)")
    sp.add_argument("--features", help="comma-separated feature names")
    sp.add_argument("--sensors", help="thermocouples stacked for build training, e.g. 1,2,3")
    sp.add_argument("--layers", help="training layers FIRST:LAST")
    sp.add_argument("--k-candidates", dest="k_candidates", help="e.g. 3,4,5 to select k by simulation")
    sp.add_argument("--seed-layer", dest="seed_layer", type=int)
    sp.add_argument("--solver", choices=("auto", "exhaustive", "bnb"))
    sp.set_defaults(func=cmd_discover)

    sp = sub.add_parser("simulate", help="simulate models against a dataset")
    common(sp)
    sp.add_argument("--model", action="append", help="model file or fixture name (repeatable)")
    sp.add_argument("--type", type=int, choices=(1, 2))
    sp.add_argument("--stage", choices=("heat", "cool", "both"))
    sp.add_argument("--T0", dest="T0", type=float)
    sp.add_argument("--substeps", type=int)
    sp.add_argument("--tool-source", dest="tool_source", choices=("measured", "simulated"))
    sp.add_argument("--freeze-d-on-cool", dest="freeze_d_on_cool", action="store_const", const=True)
    sp.add_argument("--locations", type=int, help="centerline map points (0 disables)")
    sp.add_argument("--layers", help="layers FIRST:LAST")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("synth", help="generate a synthetic dataset from known equations")
    common(sp, data=False)
    sp.add_argument("--truth", help="tool model file or fixture name (135, 115, 135&115)")
    sp.add_argument("--build-truth", dest="build_truth", help="build model file, fixture 'build', or 'none'")
    sp.add_argument("--layers", type=int)
    sp.add_argument("--torque", help="constant:V | ramp:A:B:T | ripple:V:AMP:PERIOD")
    sp.add_argument("--noise", type=float)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("validate", help="score a discovered model against the truth")
    common(sp, data=False)
    sp.add_argument("--truth")
    sp.add_argument("--model")
    sp.add_argument("--threshold", type=float, help="relative coefficient error bound (0.01 = 1%%)")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("report", help="plot and score a trajectory CSV")
    common(sp, data=False)
    sp.add_argument("--data")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return int(args.func(args))
    except GovDiscError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
