"""Synthetic process runs integrated from known equations.

The generator builds a layer-by-layer input schedule (preheat, deposition,
cool), integrates the tool and build equations through it with
continuous-time inputs, samples at 1 Hz and optionally adds multiplicative
Gaussian noise to the temperature channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import ConfigError
from .govmodel import BuildModel, PiecewiseToolModel
from .sparsereg import SparseModel
from .timeseries import PhasedDataset, ProcessData, SensorLayout, Stage

PREHEAT, DEPOSIT, COOL = 0, 1, 2
_LIMIT = 1e4


# --------------------------------------------------------------------------
# torque profiles (N*m as a function of time since the Heat stage began)


@dataclass(frozen=True)
class Constant:
    value: float = 60.0

    def __call__(self, tau):
        return np.full(np.shape(tau), float(self.value))


@dataclass(frozen=True)
class RampThenHold:
    start: float = 40.0
    hold: float = 80.0
    ramp_time: float = 60.0  # s

    def __call__(self, tau):
        w = np.clip(np.asarray(tau, dtype=float) / self.ramp_time, 0.0, 1.0)
        return self.start + (self.hold - self.start) * w


@dataclass(frozen=True)
class WithRipple:
    base: Union[Constant, RampThenHold] = Constant(60.0)
    amplitude: float = 0.1  # relative
    period: float = 20.0  # s

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.base(tau) * (1.0 + self.amplitude * np.sin(2 * np.pi * tau / self.period))


TorqueProfile = Union[Constant, RampThenHold, WithRipple]


@dataclass(frozen=True)
class ProcessPlan:
    layers: int = 16
    wall_length: float = 216.0  # mm
    traverse_speed: float = 127.0  # mm/min
    deposit_omega: float = 135.0  # rpm
    preheat_omega: float = 350.0  # rpm
    preheat_duration: int = 20  # s
    cool_duration: int = 150  # s
    torque_profile: TorqueProfile = Constant(60.0)
    noise: float = 0.0  # relative sigma on temperatures
    seed: int = 0
    preheat_feed: float = 0.93  # mm/s feedstock
    deposit_feed: float = 1.93  # mm/s feedstock
    layer_height: float = 1.52  # mm
    room_temperature: float = 24.0
    layout: SensorLayout = field(default_factory=SensorLayout.equally_spaced)
    substeps: int = 10

    def __post_init__(self):
        if self.layers < 0:
            raise ConfigError("layers must be >= 0")
        for name in ("wall_length", "traverse_speed", "deposit_omega", "preheat_omega",
                     "preheat_duration", "cool_duration", "layer_height"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"plan parameter {name} must be positive")
        if self.noise < 0:
            raise ConfigError("noise must be >= 0")
        if int(self.preheat_duration) != self.preheat_duration or int(self.cool_duration) != self.cool_duration:
            raise ConfigError("phase durations must be whole seconds")

    @property
    def deposit_duration(self) -> int:
        """Seconds to traverse the wall, rounded to the 1 Hz sample grid."""
        return int(round(self.wall_length / (self.traverse_speed / 60.0)))

    @property
    def cycle(self) -> int:
        return int(self.preheat_duration) + self.deposit_duration + int(self.cool_duration)


@dataclass(frozen=True, eq=False)
class Profile:
    """Per-sample inputs plus the phase context needed to evaluate them
    between samples."""

    plan: ProcessPlan
    t: np.ndarray
    phase: np.ndarray  # PREHEAT / DEPOSIT / COOL per sample
    layer: np.ndarray
    phase_start: np.ndarray  # start time of the sample's phase
    heat_start: np.ndarray  # start time of the sample's Heat stage
    omega: np.ndarray
    T_f: np.ndarray
    f_m: np.ndarray  # mm/min
    f_t: np.ndarray  # mm/min
    s_tool: np.ndarray
    v_tool: np.ndarray

    @property
    def stage(self) -> np.ndarray:
        return np.where(self.phase == COOL, int(Stage.COOL), int(Stage.HEAT))

    def __len__(self):
        return len(self.t)

    def evaluate(self, i, times):
        """Inputs for interval context ``i`` (array) at ``times``; left limits
        at phase switches come for free because the context is fixed."""
        p = self.plan
        phase = self.phase[i]
        speed = p.traverse_speed / 60.0
        omega = np.select([phase == PREHEAT, phase == DEPOSIT], [p.preheat_omega, p.deposit_omega], 0.0)
        torque = np.where(phase == COOL, 0.0, p.torque_profile(times - self.heat_start[i]))
        x = np.where(phase == DEPOSIT, np.minimum((times - self.phase_start[i]) * speed, p.wall_length), 0.0)
        z = self.layer[i] * p.layer_height
        return omega * np.ones_like(times), torque, x, z * np.ones_like(times)


def generate_profile(plan: ProcessPlan) -> Profile:
    pre, dep, cool = int(plan.preheat_duration), plan.deposit_duration, int(plan.cool_duration)
    cyc = plan.cycle
    n = plan.layers * cyc
    t = np.arange(n, dtype=float)
    k = np.arange(n) % cyc
    layer = np.arange(n) // cyc + 1
    phase = np.where(k < pre, PREHEAT, np.where(k < pre + dep, DEPOSIT, COOL))
    cycle_start = (layer - 1) * cyc
    phase_start = cycle_start + np.select([phase == PREHEAT, phase == DEPOSIT], [0, pre], pre + dep)
    heat_start = cycle_start.astype(float)
    proto = Profile(plan, t, phase, layer, phase_start.astype(float), heat_start,
                    *(np.zeros(n) for _ in range(4)), np.zeros((n, 3)), np.zeros((n, 3)))
    omega, torque, x, z = proto.evaluate(np.arange(n), t)
    speed = plan.traverse_speed / 60.0
    f_m = np.select([phase == PREHEAT, phase == DEPOSIT], [plan.preheat_feed, plan.deposit_feed], 0.0) * 60.0
    f_t = np.where(phase == DEPOSIT, plan.traverse_speed, 0.0)
    s_tool = np.column_stack([x, np.zeros(n), z])
    v_tool = np.column_stack([np.where(phase == DEPOSIT, speed, 0.0), np.zeros(n), np.zeros(n)])
    return replace(proto, omega=omega, T_f=torque, f_m=f_m, f_t=f_t, s_tool=s_tool, v_tool=v_tool)


# --------------------------------------------------------------------------
# ground truth


def _rk4_prescribed(C: np.ndarray, y0: np.ndarray, h: float) -> np.ndarray:
    """RK4 on dy/dt = sum_j C[s, k, ..., j] y**j with coefficients given at
    the three stage times k = (t, t+h/2, t+h) of every step s.

    Returns y at every step boundary, shape (S+1, ...). Vectorised over the
    trailing state dimensions.
    """
    S = C.shape[0]
    J = C.shape[-1]
    out = np.empty((S + 1,) + y0.shape)
    y = y0.astype(float).copy()
    out[0] = y

    def f(x, c):
        acc = c[..., J - 1].copy()
        for j in range(J - 2, -1, -1):
            acc = acc * x + c[..., j]
        return acc

    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(S):
            c0, c1, c2 = C[s, 0], C[s, 1], C[s, 2]
            k1 = f(y, c0)
            k2 = f(y + 0.5 * h * k1, c1)
            k3 = f(y + 0.5 * h * k2, c1)
            k4 = f(y + h * k3, c2)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            out[s + 1] = y
    return out


def _tool_coefficients(model: PiecewiseToolModel, profile: Profile, offsets: np.ndarray):
    """State-polynomial coefficients of the tool equation at t_i + offsets."""
    n = len(profile) - 1
    idx = np.arange(n)[:, None] * np.ones_like(offsets)[None, :]
    idx = idx.astype(int)
    times = profile.t[idx] + offsets[None, :]
    omega, torque, _, _ = profile.evaluate(idx, times)
    inputs = {"omega": omega, "T_f": torque, "f_m": profile.f_m[idx], "f_t": profile.f_t[idx]}
    heat = model.heating.state_polynomial({k: v for k, v in inputs.items() if k in model.heating.library.features})
    cool = model.cooling.state_polynomial({k: v for k, v in inputs.items() if k in model.cooling.library.features})
    J = max(heat.shape[-1], cool.shape[-1])
    C = np.zeros(idx.shape + (J,))
    is_heat = (profile.phase[idx] != COOL)[..., None]
    C[..., : heat.shape[-1]] += np.where(is_heat, np.broadcast_to(heat, idx.shape + heat.shape[-1:]), 0.0)
    C[..., : cool.shape[-1]] += np.where(is_heat, 0.0, np.broadcast_to(cool, idx.shape + cool.shape[-1:]))
    return C


def integrate_truth(tool: PiecewiseToolModel, build: BuildModel | None, profile: Profile):
    """Noiseless tool (n,) and build (n, 4) temperatures at the samples.

    The tool equation runs at half the build step so the build equation can
    read the tool temperature at its own RK stage times.
    """
    plan = profile.plan
    n = len(profile)
    if n == 0:
        return np.zeros(0), np.zeros((0, 4))
    m = plan.substeps
    h = 1.0 / m
    # tool: step h/2, stage offsets at quarter steps
    q = np.arange(4 * m + 1) * (h / 4)
    Ct = _tool_coefficients(tool, profile, q)  # (n-1, 4m+1, J)
    steps = np.stack([Ct[:, 0:-1:2], Ct[:, 1::2], Ct[:, 2::2]], axis=2)  # (n-1, 2m, 3, J)
    steps = steps.reshape(-1, 3, Ct.shape[-1])
    T_fine = _rk4_prescribed(steps, np.asarray(plan.room_temperature, dtype=float), h / 2)
    bad = ~np.isfinite(T_fine) | (np.abs(T_fine) > _LIMIT)
    if bad.any():
        when = float(np.flatnonzero(bad)[0] * h / 2)
        raise ConfigError(f"ground-truth tool integration diverged at t={when:.1f} s; "
                          f"check torque_profile={plan.torque_profile!r} and preheat_omega={plan.preheat_omega}")
    T_tool = T_fine[:: 2 * m]
    if build is None:
        return T_tool, np.full((n, 4), np.nan)

    # build: step h; tool values at half-step points are T_fine itself
    locs = plan.layout.tc_locations
    half = np.arange(2 * m + 1) * (h / 2)
    idx = np.repeat(np.arange(n - 1)[:, None], 2 * m + 1, axis=1)
    times = profile.t[idx] + half[None, :]
    _, _, x, z = profile.evaluate(idx, times)
    pos = np.stack([x, np.zeros_like(x), z], axis=-1)
    d = np.linalg.norm(pos[..., None, :] - locs[None, None, :, :], axis=-1)  # (n-1, 2m+1, 4)
    fine_idx = np.arange(n - 1)[:, None] * (2 * m) + np.arange(2 * m + 1)[None, :]
    Tt = T_fine[fine_idx]
    Cb = build.model.state_polynomial({"T_tool": Tt[..., None], "d": d})  # (n-1, 2m+1, 4, J)
    steps = np.stack([Cb[:, 0:-1:2], Cb[:, 1::2], Cb[:, 2::2]], axis=2)  # (n-1, m, 3, 4, J)
    steps = steps.reshape((-1, 3) + Cb.shape[2:])
    Tb_fine = _rk4_prescribed(steps, np.full(4, plan.room_temperature), h)
    bad = ~np.isfinite(Tb_fine) | (np.abs(Tb_fine) > _LIMIT)
    if bad.any():
        when = float(np.flatnonzero(bad.any(axis=1))[0] * h)
        raise ConfigError(f"ground-truth build integration diverged at t={when:.1f} s; "
                          f"check layout/wall_length={plan.wall_length}")
    return T_tool, Tb_fine[::m]


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    phased: PhasedDataset
    shadow: PhasedDataset
    tool_model: PiecewiseToolModel
    build_model: BuildModel | None
    plan: ProcessPlan
    profile: Profile


def _process_data(profile: Profile, T_tool, T_build, source: str) -> ProcessData:
    n = len(profile)
    P_f = profile.T_f * profile.omega * 2 * math.pi / 60.0
    return ProcessData(
        t=profile.t, T_tool=T_tool, T_build=T_build, omega=profile.omega, f_t=profile.f_t,
        f_m=profile.f_m, T_f=profile.T_f, P_f=P_f, T_m=np.full(n, np.nan), F_m=np.full(n, np.nan),
        s_tool=profile.s_tool, v_tool=profile.v_tool, layout=profile.plan.layout, source=source,
        explicit_layer=profile.layer, explicit_stage=profile.stage,
    )


def add_noise(T_tool, T_build, sigma: float, seed: int):
    """Multiplicative Gaussian noise: T * (1 + sigma * eps)."""
    if sigma == 0:
        return np.array(T_tool, dtype=float), np.array(T_build, dtype=float)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((len(T_tool), 5))
    return T_tool * (1 + sigma * eps[:, 0]), T_build * (1 + sigma * eps[:, 1:])


def generate_ground_truth(tool_model: PiecewiseToolModel, build_model: BuildModel | None,
                          plan: ProcessPlan = ProcessPlan()) -> SyntheticDataset:
    profile = generate_profile(plan)
    T_tool, T_build = integrate_truth(tool_model, build_model, profile)
    shadow = _process_data(profile, T_tool, T_build, "synthetic:shadow")
    nT, nB = add_noise(T_tool, T_build, plan.noise, plan.seed)
    noisy = _process_data(profile, nT, nB, f"synthetic:seed={plan.seed}:noise={plan.noise}")
    tag = (profile.layer, profile.stage)
    return SyntheticDataset(PhasedDataset(noisy, *tag), PhasedDataset(shadow, *tag),
                            tool_model, build_model, plan, profile)


def with_noise(ds: SyntheticDataset, sigma: float, seed: int) -> SyntheticDataset:
    """Re-noise an existing dataset from its shadow without re-integrating."""
    plan = replace(ds.plan, noise=sigma, seed=seed)
    sh = ds.shadow.data
    nT, nB = add_noise(sh.T_tool, sh.T_build, sigma, seed)
    noisy = replace(sh, T_tool=nT, T_build=nB, source=f"synthetic:seed={seed}:noise={sigma}")
    return replace(ds, phased=PhasedDataset(noisy, ds.shadow.layer, ds.shadow.stage), plan=plan)


# --------------------------------------------------------------------------
# recovery scoring


@dataclass(frozen=True)
class RecoveryScores:
    jaccard: float
    exact_support: bool
    relative_errors: tuple  # (term name, relative error) on the intersection
    missing: tuple
    extra: tuple

    @property
    def max_relative_error(self) -> float:
        return max((e for _, e in self.relative_errors), default=0.0)

    def passed(self, threshold: float) -> bool:
        return self.exact_support and self.max_relative_error < threshold

    def to_text(self) -> str:
        lines = [
            f"jaccard = {self.jaccard:.4f}",
            f"exact_support = {self.exact_support}",
        ]
        lines += [f"rel_error[{name}] = {err:.6e}" for name, err in self.relative_errors]
        if self.missing:
            lines.append("missing = " + ", ".join(self.missing))
        if self.extra:
            lines.append("extra = " + ", ".join(self.extra))
        return "\n".join(lines) + "\n"


def recovery_report(truth: SparseModel, discovered: SparseModel) -> RecoveryScores:
    if truth.library != discovered.library:
        raise ConfigError("cannot compare models built on different term libraries")
    a, b = set(truth.support), set(discovered.support)
    union = a | b
    jac = len(a & b) / len(union) if union else 1.0
    names = truth.library.names()
    errs = []
    for p in sorted(a & b):
        ref = truth.xi[p]
        err = abs(discovered.xi[p] - ref) / abs(ref) if ref != 0 else abs(discovered.xi[p])
        errs.append((names[p], float(err)))
    return RecoveryScores(
        jaccard=float(jac),
        exact_support=a == b,
        relative_errors=tuple(errs),
        missing=tuple(names[p] for p in sorted(a - b)),
        extra=tuple(names[p] for p in sorted(b - a)),
    )
