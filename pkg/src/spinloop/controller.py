"""Digital feedforward controller emulation: fixed-point arithmetic, the
rational exponential used by the decay tracker, kick-angle wrapping, control
laws and gain calibration, and the kicked-top pulse schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

# [5,5] rational approximation of exp(x); denominator has alternating signs
_PADE_NUM = (1.0, 1.0 / 2.0, 1.0 / 9.0, 1.0 / 72.0, 1.0 / 1008.0, 1.0 / 30240.0)

DEFAULT_RATE_CAP = 2 * math.pi * 56.7e3  # 90% of the 63 kHz drive limit, rad/s


@dataclass(frozen=True)
class FixedPointFormat:
    """(signed, word_bits, int_bits); int_bits includes the sign bit."""

    signed: bool = True
    word_bits: int = 32
    int_bits: int = 4

    def __post_init__(self) -> None:
        if not (1 <= self.int_bits <= self.word_bits <= 64):
            raise ValueError("need 1 <= int_bits <= word_bits <= 64")

    @property
    def frac_bits(self) -> int:
        return self.word_bits - self.int_bits

    @property
    def step(self) -> float:
        return 2.0 ** (-self.frac_bits)

    @property
    def raw_max(self) -> int:
        return (1 << (self.word_bits - 1)) - 1 if self.signed else (1 << self.word_bits) - 1

    @property
    def raw_min(self) -> int:
        return -(1 << (self.word_bits - 1)) if self.signed else 0


DEFAULT_FXP = FixedPointFormat()


@dataclass(frozen=True)
class FixedPointValue:
    raw: int
    fmt: FixedPointFormat

    @property
    def value(self) -> float:
        return self.raw * self.fmt.step

    @property
    def saturated(self) -> bool:
        return self.raw in (self.fmt.raw_min, self.fmt.raw_max)


def fxp_quantize(x: float, fmt: FixedPointFormat = DEFAULT_FXP) -> FixedPointValue:
    """Round-to-nearest quantization with silent saturation at the ends."""
    raw = math.floor(x * (1 << fmt.frac_bits) + 0.5)
    raw = max(fmt.raw_min, min(fmt.raw_max, raw))
    return FixedPointValue(raw, fmt)


def _sat(raw: int, fmt: FixedPointFormat) -> int:
    return max(fmt.raw_min, min(fmt.raw_max, raw))


def _fxp_add(a: FixedPointValue, b: FixedPointValue) -> FixedPointValue:
    return FixedPointValue(_sat(a.raw + b.raw, a.fmt), a.fmt)


def _fxp_mul(a: FixedPointValue, b: FixedPointValue) -> FixedPointValue:
    f = a.fmt.frac_bits
    prod = a.raw * b.raw
    # round to nearest on the dropped fraction bits
    raw = (prod + (1 << (f - 1))) >> f
    return FixedPointValue(_sat(raw, a.fmt), a.fmt)


def _fxp_div(a: FixedPointValue, b: FixedPointValue) -> FixedPointValue:
    if b.raw == 0:
        raise ZeroDivisionError("fixed-point division by zero")
    f = a.fmt.frac_bits
    sign = 1 if (a.raw >= 0) == (b.raw >= 0) else -1
    q, r = divmod(abs(a.raw) << f, abs(b.raw))
    if 2 * r >= abs(b.raw):
        q += 1
    return FixedPointValue(_sat(sign * q, a.fmt), a.fmt)


def _pade_ratio_float(x: float) -> float:
    num = 0.0
    den = 0.0
    for c in reversed(_PADE_NUM):
        num = num * x + c
        den = den * (-x) + c
    if den <= 0:
        raise ValueError("rational exponential out of domain")
    return num / den


def pade_exp(x):
    """Rational [5,5] approximation of exp(x) for x <= 0.

    Accepts a float or a FixedPointValue (evaluated in that format).
    Arguments below -1 are range-reduced by halving and squaring so the
    core rational is only ever evaluated on [-1, 0].
    """
    if isinstance(x, FixedPointValue):
        return _pade_exp_fxp(x)
    if x > 0:
        raise ValueError("pade_exp is defined for x <= 0")
    halvings = 0
    while x < -1.0:
        x *= 0.5
        halvings += 1
    r = _pade_ratio_float(x)
    for _ in range(halvings):
        r *= r
    return r


def _pade_exp_fxp(x: FixedPointValue) -> FixedPointValue:
    fmt = x.fmt
    if x.raw > 0:
        raise ValueError("pade_exp is defined for x <= 0")
    halvings = 0
    raw = x.raw
    while raw * fmt.step < -1.0:
        # arithmetic shift with round-to-nearest
        raw = (raw + 1) >> 1
        halvings += 1
    xr = FixedPointValue(raw, fmt)
    num = fxp_quantize(0.0, fmt)
    den = fxp_quantize(0.0, fmt)
    for c in reversed(_PADE_NUM):
        cq = fxp_quantize(c, fmt)
        num = _fxp_add(_fxp_mul(num, xr), cq)
        den = _fxp_add(_fxp_mul(den, FixedPointValue(-xr.raw, fmt)), cq)
    if den.raw <= 0:
        raise ValueError("rational exponential out of domain")
    r = _fxp_div(num, den)
    for _ in range(halvings):
        r = _fxp_mul(r, r)
    return r


def bmod2(x: FixedPointValue) -> FixedPointValue:
    """sign(x) * mod(|x|, 2), done by masking the fraction bits plus the
    lowest integer bit of |x| and reapplying the sign."""
    if not x.fmt.signed:
        raise ValueError("bmod2 requires a signed format")
    mask = (1 << (x.fmt.frac_bits + 1)) - 1
    mag = abs(x.raw) & mask
    return FixedPointValue(-mag if x.raw < 0 else mag, x.fmt)


def kick_angle(m_norm: float, k: float, fmt: FixedPointFormat | None = None) -> float:
    """Wrapped kick angle pi * bmod2(k * m_norm / pi), equivalent (mod 2pi,
    sign-matched) to the raw angle k * m_norm.  Result in (-2pi, 2pi)."""
    m_norm = max(-1.0, min(1.0, m_norm))
    x = k * m_norm / math.pi
    if fmt is None:
        wrapped = math.copysign(math.fmod(abs(x), 2.0), x)
    else:
        wrapped = bmod2(fxp_quantize(x, fmt)).value
    return math.pi * wrapped


def decay_estimate(
    j0: float, half_time: float, t: float, fmt: FixedPointFormat | None = None
) -> float:
    """Tracked spin length j0 * 2^(-t/half_time) via the rational exponential."""
    if half_time <= 0:
        raise ValueError("half_time must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    x = -t * math.log(2.0) / half_time
    if fmt is None:
        return j0 * pade_exp(x)
    return j0 * pade_exp(fxp_quantize(x, fmt)).value


@dataclass(frozen=True)
class CoilCalibration:
    n_loops: int = 1
    gamma: float = 3.5e3  # Hz/uT
    geom_factor: float = 4.5  # uT/A
    amp_gain: float = 1.0
    resistance: float = 5.75  # ohm

    def __post_init__(self) -> None:
        for name in ("n_loops", "gamma", "geom_factor", "amp_gain", "resistance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def ctl_gain(c: CoilCalibration) -> float:
    """Voltage-to-rotation-rate gain 2 N gamma G g / R, in Hz/V."""
    return 2.0 * c.n_loops * c.gamma * c.geom_factor * c.amp_gain / c.resistance


def lmg_control(
    m: float,
    j_est: float,
    p,
    chi_p: float = 1.0,
    rate_cap: float = DEFAULT_RATE_CAP,
) -> float:
    """Feedback z-rotation rate k_nl * clamp(m / (chi_p * j_est), -1, 1),
    saturated at the drive-rate cap."""
    if j_est <= 0:
        raise ValueError("j_est must be > 0")
    z_est = max(-1.0, min(1.0, m / (chi_p * j_est)))
    rate = p.k_nl * z_est
    return max(-rate_cap, min(rate_cap, rate))


@dataclass(frozen=True)
class QktSchedule:
    t_linear: float
    t_gap: float
    t_kick: float
    n_steps: int

    @property
    def period(self) -> float:
        return self.t_linear + self.t_gap + self.t_kick

    @property
    def total(self) -> float:
        return self.n_steps * self.period


def qkt_schedule(
    t_linear: float,
    t_gap: float,
    t_kick: float,
    n_steps: int,
    sample_period: float = 2e-6,
    window: float | None = None,
) -> QktSchedule:
    for name, t in (("t_linear", t_linear), ("t_gap", t_gap), ("t_kick", t_kick)):
        if t <= 0:
            raise ValueError(f"{name} must be > 0")
        ratio = t / sample_period
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"{name} must be a multiple of the sample period")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    sched = QktSchedule(t_linear, t_gap, t_kick, n_steps)
    if window is not None and sched.total > window + 1e-15:
        raise ValueError(
            f"schedule needs {sched.total:g} s but the run window is {window:g} s"
        )
    return sched
