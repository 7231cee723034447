"""Assembled governing equations, their right-hand sides and model files.

The rotating deposit is treated as a point heat source located at the tool,
so its temperature and position are aliased to ``T_tool`` and ``s_tool``;
nothing separate is stored for it.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigError, CorruptionError, FormatError, SchemaError
from .featlib import TermLibrary, build_library, make_term, term_to_string
from .sparsereg import FitDiagnostics, SparseModel
from .timeseries import SensorLayout, Stage

FORMAT_ID = "govdisc-model"
FORMAT_VERSION = 1

TOOL_SYMBOLS = {"T_tool": "T", "omega": "ω"}
BUILD_SYMBOLS = {"omega": "ω"}


@dataclass(frozen=True, eq=False)
class PiecewiseToolModel:
    heating: SparseModel
    cooling: SparseModel
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.heating, SparseModel) or not isinstance(self.cooling, SparseModel):
            raise ConfigError("tool model needs both heating and cooling submodels")
        for sub in (self.heating, self.cooling):
            if sub.state != "T_tool":
                raise ConfigError(f"tool submodel state must be T_tool, got {sub.state}")
        object.__setattr__(self, "metadata", {str(k): str(v) for k, v in self.metadata.items()})

    def stage_model(self, stage) -> SparseModel:
        return self.heating if Stage.parse(stage) is Stage.HEAT else self.cooling

    def __eq__(self, other):
        if not isinstance(other, PiecewiseToolModel):
            return NotImplemented
        return self.heating == other.heating and self.cooling == other.cooling and self.metadata == other.metadata


@dataclass(frozen=True, eq=False)
class BuildModel:
    model: SparseModel
    layout: SensorLayout | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.model.library.features) != {"T_build", "T_tool", "d"}:
            raise ConfigError("build model features must be exactly {T_build, T_tool, d}")
        if self.model.state != "T_build":
            raise ConfigError("build model state must be T_build")
        object.__setattr__(self, "metadata", {str(k): str(v) for k, v in self.metadata.items()})

    def __eq__(self, other):
        if not isinstance(other, BuildModel):
            return NotImplemented
        return self.model == other.model and self.layout == other.layout and self.metadata == other.metadata


@dataclass(frozen=True)
class InitialConditions:
    T_tool0: float = 24.0
    T_build0: tuple = (24.0, 24.0, 24.0, 24.0)

    def __post_init__(self):
        vals = (self.T_tool0,) + tuple(self.T_build0)
        if not all(math.isfinite(float(v)) for v in vals):
            raise ConfigError("initial conditions must be finite")


# --------------------------------------------------------------------------
# right-hand sides


def rhs_tool(model: PiecewiseToolModel, stage, T, inputs: Mapping[str, object] | None = None):
    """dT_tool/dt for the given stage; scalars in give a scalar out."""
    sub = model.stage_model(stage)
    return _rhs(sub, "T_tool", T, inputs or {})


def rhs_build(model: BuildModel, T_build, T_tool, d):
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise ConfigError("distance must be non-negative")
    return _rhs(model.model, "T_build", T_build, {"T_tool": T_tool, "d": d})


def _rhs(sub: SparseModel, state: str, T, inputs: Mapping[str, object]):
    scalar = np.ndim(T) == 0 and all(np.ndim(v) == 0 for v in inputs.values())
    rows = {state: np.atleast_1d(np.asarray(T, dtype=float))}
    for f in sub.library.features:
        if f == state:
            continue
        if f not in inputs:
            # unused features may be absent; used ones are an error
            E = sub.library.exponent_matrix()[:, sub.library.features.index(f)]
            if np.any(E[list(sub.support)] > 0):
                raise SchemaError(f, f"missing input channel {f!r}")
            rows[f] = np.zeros(1)
        else:
            rows[f] = np.atleast_1d(np.asarray(inputs[f], dtype=float))
    shape = np.broadcast_shapes(*(v.shape for v in rows.values()))
    rows = {k: np.broadcast_to(v, shape).ravel() for k, v in rows.items()}
    out = sub.evaluate(rows).reshape(shape)
    return float(out[0]) if scalar else out


# --------------------------------------------------------------------------
# pretty printing


def equation_text(sub: SparseModel, lhs: str | None = None) -> str:
    lhs = lhs or f"d{sub.library.symbol(sub.state)}/dt"
    if sub.k == 0:
        return f"{lhs} = 0"
    parts = [term_to_string(sub.library.terms[p], sub.xi[p], sub.library) for p in sub.support]
    return f"{lhs} = " + " ".join(parts)


def pretty_print(model) -> str:
    if isinstance(model, SparseModel):
        return equation_text(model)
    if isinstance(model, PiecewiseToolModel):
        return "\n".join([
            "Heat: " + equation_text(model.heating),
            "Cool: " + equation_text(model.cooling),
        ])
    if isinstance(model, BuildModel):
        return equation_text(model.model)
    raise ConfigError(f"cannot print {type(model).__name__}")


# --------------------------------------------------------------------------
# model files


def _num(x: float) -> str:
    return format(float(x), ".17e")


def _sub_section(name: str, sub: SparseModel) -> list[str]:
    lib = sub.library
    d = sub.diagnostics
    lines = [
        f"[model {name}]",
        f"state = {sub.state}",
        f"features = {' '.join(lib.features)}",
        f"max_degree = {lib.max_degree}",
        f"symbols = {' '.join(f'{k}:{v}' for k, v in lib.symbols)}",
        f"stage1_objective = {_num(d.stage1_objective)}",
        f"stage2_residual_norm = {_num(d.stage2_residual_norm)}",
        f"n_samples = {d.n_samples}",
        f"k = {d.k}",
        f"lambda2 = {_num(d.lambda2)}",
        f"M = {_num(d.M)}",
        f"method = {d.method}",
        f"excluded = {' '.join(str(i) for i in d.excluded)}",
        f"[terms {name}]",
    ]
    for p in sub.support:
        powers = " ".join(f"{f}^{e}" for f, e in lib.terms[p].exponents) or "1"
        lines.append(f"{powers} | {_num(sub.xi[p])}")
    return lines


def dumps_model(model) -> str:
    body = ["[metadata]"]
    if isinstance(model, PiecewiseToolModel):
        kind, subs, meta = "tool", [("heating", model.heating), ("cooling", model.cooling)], model.metadata
    elif isinstance(model, BuildModel):
        kind, subs, meta = "build", [("build", model.model)], model.metadata
    elif isinstance(model, SparseModel):
        kind, subs, meta = "single", [("single", model)], {}
    else:
        raise ConfigError(f"cannot serialise {type(model).__name__}")
    body.append(f"kind = {kind}")
    for key in sorted(meta):
        value = meta[key].replace("\n", " ")
        body.append(f"{key} = {value}")
    if isinstance(model, BuildModel) and model.layout is not None:
        body.append("[layout]")
        body.append(f"depth_offset = {_num(model.layout.depth_offset)}")
        for i, row in enumerate(model.layout.tc_locations, 1):
            body.append(f"s{i} = {' '.join(_num(v) for v in row)}")
    for name, sub in subs:
        body.extend(_sub_section(name, sub))
    text = "\n".join(body) + "\n"
    digest = hashlib.sha256(text.encode()).hexdigest()
    return f"{FORMAT_ID} {FORMAT_VERSION} sha256={digest}\n" + text


def save_model(model, path) -> None:
    from .io import write_atomic

    write_atomic(path, dumps_model(model))


def _parse_sections(text: str) -> list[tuple[str, list[str]]]:
    sections: list[tuple[str, list[str]]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            sections.append((line[1:-1].strip(), []))
        elif not sections:
            raise FormatError(f"content before first section: {line!r}")
        else:
            sections[-1][1].append(line)
    return sections


def _kv(lines: list[str], where: str) -> dict:
    out = {}
    for line in lines:
        if "=" not in line:
            raise FormatError(f"[{where}]: expected key = value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _build_sub(meta: dict, term_lines: list[str], name: str) -> SparseModel:
    try:
        feats = tuple(meta["features"].split())
        deg = int(meta["max_degree"])
        state = meta["state"]
    except KeyError as exc:
        raise SchemaError(exc.args[0], f"[model {name}] lacks key {exc.args[0]!r}") from exc
    symbols = dict(s.split(":", 1) for s in meta.get("symbols", "").split())
    lib = build_library(feats, deg, symbols)
    gamma = np.zeros(lib.P, dtype=bool)
    xi = np.zeros(lib.P)
    for line in term_lines:
        if "|" not in line:
            raise FormatError(f"[terms {name}]: expected 'powers | coefficient', got {line!r}")
        lhs, rhs = line.split("|", 1)
        powers = {}
        if lhs.strip() != "1":
            for tok in lhs.split():
                f, _, e = tok.partition("^")
                powers[f] = powers.get(f, 0) + int(e or 1)
        p = lib.index(make_term(feats, powers))
        if gamma[p]:
            raise FormatError(f"[terms {name}]: duplicate term {lhs.strip()!r}")
        gamma[p] = True
        xi[p] = float(rhs)

    def fnum(key):
        return float(meta[key]) if key in meta else math.nan

    diag = FitDiagnostics(
        stage1_objective=fnum("stage1_objective"),
        stage2_residual_norm=fnum("stage2_residual_norm"),
        n_samples=int(meta.get("n_samples", 0)),
        k=int(meta.get("k", int(gamma.sum()))),
        lambda2=fnum("lambda2"),
        M=fnum("M"),
        method=meta.get("method", ""),
        excluded=tuple(int(i) for i in meta.get("excluded", "").split()),
    )
    return SparseModel(lib, gamma, xi, state, diag)


def loads_model(text: str):
    head, _, body = text.partition("\n")
    parts = head.split()
    if len(parts) < 2 or parts[0] != FORMAT_ID:
        raise FormatError(f"not a model file (header {head!r})")
    try:
        version = int(parts[1])
    except ValueError as exc:
        raise FormatError(f"bad format version {parts[1]!r}") from exc
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {version} (expected {FORMAT_VERSION})")
    for tok in parts[2:]:
        if tok.startswith("sha256="):
            if hashlib.sha256(body.encode()).hexdigest() != tok[7:]:
                raise CorruptionError("model file checksum mismatch")

    sections = _parse_sections(body)
    by_name: dict[str, list[str]] = {}
    for name, lines in sections:
        if name in by_name:
            raise FormatError(f"duplicate section [{name}]")
        by_name[name] = lines
    if "metadata" not in by_name:
        raise FormatError("missing [metadata] section")
    meta = _kv(by_name["metadata"], "metadata")
    kind = meta.pop("kind", None)

    def sub(name):
        if f"model {name}" not in by_name:
            raise FormatError(f"missing [model {name}] section")
        return _build_sub(_kv(by_name[f"model {name}"], f"model {name}"), by_name.get(f"terms {name}", []), name)

    if kind == "tool":
        return PiecewiseToolModel(sub("heating"), sub("cooling"), meta)
    if kind == "build":
        layout = None
        if "layout" in by_name:
            lk = _kv(by_name["layout"], "layout")
            rows = [[float(v) for v in lk[f"s{i}"].split()] for i in range(1, 5)]
            layout = SensorLayout(rows, float(lk.get("depth_offset", 2.54)))
        return BuildModel(sub("build"), layout, meta)
    if kind == "single":
        return sub("single")
    raise FormatError(f"unknown model kind {kind!r}")


def load_model(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    return loads_model(text)


# --------------------------------------------------------------------------
# reference coefficient sets

# Heating terms: (w^3 T_f, T w^2 T_f, w T^3); the last enters with a minus sign.
# In the three-column table the second and third heating values are printed
# swapped relative to the per-term listing; they are stored here in term order.
REFERENCE_COEFFICIENTS = {
    "135": {"a": (2.7640e-9, 1.1382e-8, 1.8361e-9), "b": (0.3282, 0.0135, 6.0601e-6)},
    "115": {"a": (2.1621e-9, 1.1865e-8, 1.7824e-9), "b": (0.0198, 0.0044, 2.7474e-5)},
    "135&115": {"a": (2.8781e-9, 1.0621e-8, 1.6599e-9), "b": (0.1187, 0.0083, 1.8550e-5)},
}
# Build terms: (T_build^4, d^2 T_tool, d^2 T_tool^2, d^3), signs included.
BUILD_COEFFICIENTS = (-6.3398e-10, -4.6003e-6, 2.1208e-7, 4.3869e-8)

FIXTURE_FILES = {"135": "tool_135.model", "115": "tool_115.model", "135&115": "tool_135_115.model", "build": "build_135.model"}


def heating_library(max_degree: int = 4) -> TermLibrary:
    return build_library(("T_tool", "omega", "T_f"), max_degree, TOOL_SYMBOLS)


def cooling_library(max_degree: int = 4) -> TermLibrary:
    return build_library(("T_tool",), max_degree, {"T_tool": "T"})


def build_term_library(max_degree: int = 4) -> TermLibrary:
    return build_library(("T_build", "T_tool", "d"), max_degree, BUILD_SYMBOLS)


def reference_tool_model(name: str = "135") -> PiecewiseToolModel:
    try:
        a, b = REFERENCE_COEFFICIENTS[name]["a"], REFERENCE_COEFFICIENTS[name]["b"]
    except KeyError as exc:
        raise ConfigError(f"unknown reference set {name!r}") from exc
    heat = SparseModel.from_terms(heating_library(), "T_tool", [
        ({"omega": 3, "T_f": 1}, a[0]),
        ({"T_tool": 1, "omega": 2, "T_f": 1}, a[1]),
        ({"T_tool": 3, "omega": 1}, -a[2]),
    ])
    cool = SparseModel.from_terms(cooling_library(), "T_tool", [
        ({}, b[0]),
        ({"T_tool": 1}, -b[1]),
        ({"T_tool": 2}, -b[2]),
    ])
    meta = {
        "dataset": f"{name}-rpm",
        "coefficient_order": "heating stored per term: w^3*T_f, T*w^2*T_f, w*T^3",
    }
    return PiecewiseToolModel(heat, cool, meta)


def reference_build_model(layout: SensorLayout | None = None) -> BuildModel:
    c = BUILD_COEFFICIENTS
    sub = SparseModel.from_terms(build_term_library(), "T_build", [
        ({"T_build": 4}, c[0]),
        ({"T_tool": 1, "d": 2}, c[1]),
        ({"T_tool": 2, "d": 2}, c[2]),
        ({"d": 3}, c[3]),
    ])
    return BuildModel(sub, layout or SensorLayout.equally_spaced(), {"dataset": "135-rpm", "units": "T degC, d mm, t s"})


def load_fixture(name: str):
    """Load one of the shipped model files: "135", "115", "135&115" or "build"."""
    if name not in FIXTURE_FILES:
        raise ConfigError(f"unknown fixture {name!r}; choose from {sorted(FIXTURE_FILES)}")
    ref = resources.files("govdisc").joinpath("fixtures", FIXTURE_FILES[name])
    return loads_model(ref.read_text(encoding="utf-8"))
