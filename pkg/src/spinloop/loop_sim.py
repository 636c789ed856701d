"""Closed-loop plant / sensor / controller simulation.

The plant is the spin direction integrated with RK4 on the torque flow
dv/dt = omega x v at a fixed plant step.  The sensor samples once per
controller period; the control rate passes through a FIFO transport delay
(quantized to plant steps) and is held constant between updates.
"""

from __future__ import annotations

import math
import os
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import controller as ctl
from .controller import FixedPointFormat, QktSchedule
from .measurement import MeasurementModel, measure, pointing_uncertainty, qpn_variance
from .models import KtParams, LmgParams, kt_step
from .spin_core import RotationNoise, SphericalAngles, SpinVector, draw_shot_noise, from_angles

LN2 = math.log(2.0)


@dataclass(frozen=True)
class LoopConfig:
    sample_period: float = 2e-6  # 500 kHz controller
    latency: float = 6e-6  # measurement-to-actuation transport delay
    plant_dt: float = 1e-7
    duration: float = 1.5e-3
    decay_half_time: float | None = 2e-3  # None disables spin-length decay
    initial_state: SphericalAngles = SphericalAngles(math.pi / 2.0, 0.0)
    qpn: bool = False  # initial-tilt + frozen-offset projection noise
    shot: bool = False  # photon shot noise on each sample
    rotation_noise: RotationNoise | None = None
    rf_phase_convention: float = 0.0  # azimuth of the linear-drive axis
    fixed_point: FixedPointFormat | None = None  # controller arithmetic mode
    rate_cap: float = ctl.DEFAULT_RATE_CAP

    def __post_init__(self) -> None:
        if self.plant_dt <= 0 or self.sample_period <= 0 or self.duration <= 0:
            raise ValueError("timing fields must be > 0")
        if self.plant_dt > self.sample_period + 1e-15:
            raise ValueError("plant_dt must not exceed sample_period")
        r = self.sample_period / self.plant_dt
        if abs(r - round(r)) > 1e-6:
            raise ValueError("sample_period must be an integer number of plant steps")
        if self.latency < 0:
            raise ValueError("latency must be >= 0")
        if self.decay_half_time is not None and self.decay_half_time <= 0:
            raise ValueError("decay_half_time must be > 0 or None")

    @property
    def steps_per_sample(self) -> int:
        return round(self.sample_period / self.plant_dt)

    @property
    def latency_steps(self) -> int:
        return round(self.latency / self.plant_dt)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.sample_period))


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    j_true: np.ndarray
    meas: np.ndarray
    ctl_z: np.ndarray
    ctl_x: np.ndarray
    j_est: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.t)
        for name in ("x", "y", "z", "j_true", "meas", "ctl_z", "ctl_x", "j_est"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} length mismatch")

    COLUMNS = ("t", "x", "y", "z", "j_true", "meas", "ctl_z", "ctl_x", "j_est")

    def column_stack(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in self.COLUMNS])


def latency_metric(alpha_lin: float, latency: float) -> float:
    """Dimensionless latency severity alpha_lin * tau_delay."""
    return alpha_lin * latency


def _rk4_rotation_step(x, y, z, wx, wz, dt):
    """One RK4 step of dv/dt = omega x v, omega = (wx, 0, wz), renormalized."""

    def f(vx, vy, vz):
        return (-wz * vy, wz * vx - wx * vz, wx * vy)

    k1 = f(x, y, z)
    k2 = f(x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1], z + 0.5 * dt * k1[2])
    k3 = f(x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1], z + 0.5 * dt * k2[2])
    k4 = f(x + dt * k3[0], y + dt * k3[1], z + dt * k3[2])
    x += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    y += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    z += dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    n = math.sqrt(x * x + y * y + z * z)
    return x / n, y / n, z / n


def _initial_vector(cfg: LoopConfig, model: MeasurementModel, rng) -> SpinVector:
    v = from_angles(cfg.initial_state)
    if not cfg.qpn:
        return v
    # projection-noise pointing error: Gaussian tilt at a random azimuth
    sigma = pointing_uncertainty(model)
    tilt = sigma * rng.standard_normal()
    chi = rng.uniform(0.0, 2.0 * math.pi)
    seed = SpinVector(0.0, 0.0, 1.0) if abs(v.z) < 0.9 else SpinVector(1.0, 0.0, 0.0)
    e1 = seed.cross(v)
    e1 = e1.normalized()
    e2 = v.cross(e1)
    axis = SpinVector(
        math.cos(chi) * e1.x + math.sin(chi) * e2.x,
        math.cos(chi) * e1.y + math.sin(chi) * e2.y,
        math.cos(chi) * e1.z + math.sin(chi) * e2.z,
    )
    from .spin_core import rotate

    return rotate(v, axis, tilt)


def _j_true(j0: float, t: float, half_time: float | None) -> float:
    if half_time is None:
        return j0
    return j0 * 2.0 ** (-t / half_time)


def run_lmg_loop(
    cfg: LoopConfig, p: LmgParams, model: MeasurementModel, rng
) -> TrajectoryRecord:
    """Closed-loop emulation of the linear-plus-quadratic flow.

    The plant sees a constant linear drive about the equatorial axis set by
    rf_phase_convention plus the delayed, zero-order-held feedback rate
    about z."""
    n = cfg.n_samples
    sps = cfg.steps_per_sample
    eff_model = model if cfg.shot else replace(model, sn_coeff=0.0)
    j0 = model.j_collective

    shot_draw = None
    detuning = 0.0
    amp = 1.0
    if cfg.rotation_noise is not None:
        shot_draw = draw_shot_noise(cfg.rotation_noise, rng)
        detuning = shot_draw.detuning
        amp = 1.0 + shot_draw.amp_error

    v = _initial_vector(cfg, model, rng)
    x, y, z = v.x, v.y, v.z
    qpn_offset = (
        math.sqrt(qpn_variance(model)) * rng.standard_normal() if cfg.qpn else 0.0
    )

    wx = amp * p.alpha_lin
    fmt = cfg.fixed_point

    t_arr = np.empty(n)
    xs = np.empty(n)
    ys = np.empty(n)
    zs = np.empty(n)
    js = np.empty(n)
    ms = np.empty(n)
    cz = np.empty(n)
    cx = np.empty(n)
    je = np.empty(n)

    pending: deque[tuple[int, float]] = deque()
    applied = 0.0
    step = 0
    dt = cfg.plant_dt
    half = cfg.decay_half_time

    for k in range(n):
        t_k = k * cfg.sample_period
        j_now = _j_true(j0, t_k, half)
        sample = measure(
            max(-1.0, min(1.0, z)), j_now, eff_model, cfg.sample_period, rng,
            qpn_offset=qpn_offset, t=t_k,
        )
        if half is None:
            j_est = j0
        else:
            j_est = ctl.decay_estimate(j0, half, t_k, fmt)
        rate = ctl.lmg_control(sample.value, j_est, p, model.chi_p, cfg.rate_cap)
        pending.append((step + cfg.latency_steps, rate))

        t_arr[k] = t_k
        xs[k], ys[k], zs[k] = x, y, z
        js[k] = j_now
        ms[k] = sample.value
        cz[k] = applied
        cx[k] = wx
        je[k] = j_est

        for _ in range(sps):
            while pending and pending[0][0] <= step:
                applied = pending.popleft()[1]
            x, y, z = _rk4_rotation_step(x, y, z, wx, amp * applied + detuning, dt)
            step += 1

    rec = TrajectoryRecord(t_arr, xs, ys, zs, js, ms, cz, cx, je)
    rec.meta["final_state"] = (x, y, z)
    rec.meta["model"] = "lmg"
    rec.meta["params"] = {"s": p.s, "lambda": p.lambda_}
    return rec


def run_kt_loop(
    cfg: LoopConfig,
    sched: QktSchedule,
    p: KtParams,
    model: MeasurementModel,
    rng,
) -> TrajectoryRecord:
    """Closed-loop kicked-top emulation.

    Each step is a linear segment (x rotation through alpha), a drive-free
    gap in which the measurement is taken, and a kick segment (z rotation
    through the wrapped feedback angle).  Stroboscopic indices are stored
    in meta: 'strob_gap_idx' (measurement samples) and 'strob_period_idx'
    (period boundaries, comparable to the iterated map)."""
    sps = cfg.steps_per_sample
    if cfg.latency > sched.t_gap + 1e-15:
        raise ValueError("latency exceeds the measurement gap")
    n_lin = round(sched.t_linear / cfg.sample_period)
    n_gap = round(sched.t_gap / cfg.sample_period)
    n_kick = round(sched.t_kick / cfg.sample_period)
    n_per = n_lin + n_gap + n_kick
    n = sched.n_steps * n_per + 1  # final period boundary included
    if (n - 1) * cfg.sample_period > cfg.duration + 1e-15:
        raise ValueError("schedule does not fit in the configured duration")

    eff_model = model if cfg.shot else replace(model, sn_coeff=0.0)
    j0 = model.j_collective
    half = cfg.decay_half_time
    fmt = cfg.fixed_point

    shot_draw = None
    detuning = 0.0
    amp = 1.0
    if cfg.rotation_noise is not None:
        shot_draw = draw_shot_noise(cfg.rotation_noise, rng)
        detuning = shot_draw.detuning
        amp = 1.0 + shot_draw.amp_error

    v = _initial_vector(cfg, model, rng)
    x, y, z = v.x, v.y, v.z
    qpn_offset = (
        math.sqrt(qpn_variance(model)) * rng.standard_normal() if cfg.qpn else 0.0
    )

    # the map's linear rotation corresponds to a drive of -alpha about the
    # x axis in flow form, and the kick to +psi about z
    w_lin = -amp * p.alpha / sched.t_linear

    cols = {name: np.empty(n) for name in TrajectoryRecord.COLUMNS}
    gap_idx = []
    period_idx = []

    dt = cfg.plant_dt
    k_samp = 0
    kick_rate = 0.0

    def record(wz_applied, wx_applied, m_val, j_est_val):
        t_k = k_samp * cfg.sample_period
        cols["t"][k_samp] = t_k
        cols["x"][k_samp] = x
        cols["y"][k_samp] = y
        cols["z"][k_samp] = z
        cols["j_true"][k_samp] = _j_true(j0, t_k, half)
        cols["meas"][k_samp] = m_val
        cols["ctl_z"][k_samp] = wz_applied
        cols["ctl_x"][k_samp] = wx_applied
        cols["j_est"][k_samp] = j_est_val

    for _step in range(sched.n_steps):
        for _ in range(n_lin):
            record(0.0, w_lin, math.nan, math.nan)
            k_samp += 1
            for _ in range(sps):
                x, y, z = _rk4_rotation_step(x, y, z, w_lin, detuning, dt)
        # measurement in the gap; the kick value is ready because the
        # transport delay is no longer than the gap
        t_now = k_samp * cfg.sample_period
        j_now = _j_true(j0, t_now, half)
        sample = measure(
            max(-1.0, min(1.0, z)), j_now, eff_model, cfg.sample_period, rng,
            qpn_offset=qpn_offset, t=t_now,
        )
        j_est = j0 if half is None else ctl.decay_estimate(j0, half, t_now, fmt)
        m_norm = max(-1.0, min(1.0, sample.value / (model.chi_p * j_est)))
        psi = ctl.kick_angle(m_norm, p.k, fmt)
        kick_rate = amp * psi / sched.t_kick
        gap_idx.append(k_samp)
        for i in range(n_gap):
            record(0.0, 0.0, sample.value if i == 0 else math.nan, j_est)
            k_samp += 1
            # free evolution in the gap
        for _ in range(n_kick):
            record(kick_rate, 0.0, math.nan, math.nan)
            k_samp += 1
            for _ in range(sps):
                x, y, z = _rk4_rotation_step(x, y, z, 0.0, kick_rate, dt)
        period_idx.append(k_samp)

    record(0.0, 0.0, math.nan, math.nan)

    rec = TrajectoryRecord(**cols)
    rec.meta["final_state"] = (x, y, z)
    rec.meta["model"] = "kt"
    rec.meta["params"] = {"alpha": p.alpha, "k": p.k, "tau": sched.period}
    rec.meta["strob_gap_idx"] = gap_idx
    rec.meta["strob_period_idx"] = period_idx
    return rec


def shot_rng(master_seed: int, i: int) -> np.random.Generator:
    """Independent stream for shot i, reproducible in isolation."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(i,))
    return np.random.Generator(np.random.PCG64(ss))


def _run_one(args):
    cfg, params, model, sched, master_seed, i = args
    rng = shot_rng(master_seed, i)
    if isinstance(params, KtParams):
        rec = run_kt_loop(cfg, sched, params, model, rng)
    else:
        rec = run_lmg_loop(cfg, params, model, rng)
    rec.meta["seed"] = (master_seed, i)
    return rec


def run_batch(
    cfg: LoopConfig,
    params,
    model: MeasurementModel,
    n_shots: int,
    master_seed: int,
    sched: QktSchedule | None = None,
) -> list[TrajectoryRecord]:
    """Ensemble driver; shot i uses a stream derived from (master_seed, i),
    so results do not depend on execution order.  Set SPINLOOP_JOBS to run
    shots in parallel processes."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    jobs = int(os.environ.get("SPINLOOP_JOBS", "1"))
    work = [(cfg, params, model, sched, master_seed, i) for i in range(n_shots)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_one, work))
    return [_run_one(w) for w in work]
