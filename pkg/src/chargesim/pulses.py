"""Detuning pulse shapes and the experiment pulse schedules.

Pulses are trapezoids on one of the two detuning channels: linear rise,
flat top, linear fall, all inside the programmed base width.  A pulse
whose width is shorter than rise + fall never reaches full amplitude and
degenerates into a triangle.  A schedule holds the channel baselines, the
pulses, and an optional synchronization offset that delays every
upper-channel pulse (the inter-line system delay of the setup).

Times in ps, detunings in ueV, gate voltages in mV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidLabel, OutOfRange

__all__ = [
    "DEFAULT_RISE_PS",
    "DEFAULT_FALL_PS",
    "DEFAULT_GAP_PS",
    "DEFAULT_SYNC_OFFSET_PS",
    "DRIVE_EDGE_PS",
    "Channel",
    "LeverArm",
    "Pulse",
    "Schedule",
    "mv_to_detuning",
    "pulse_envelope",
    "evaluate",
    "breakpoints",
    "piecewise_segments",
    "waveform_table",
    "rabi_schedule",
    "two_pulse_schedule",
    "tomography_schedule",
    "lzs_schedule",
    "sync_schedule",
    "TOMOGRAPHY_LABELS",
]

DEFAULT_RISE_PS = 65.0
DEFAULT_FALL_PS = 65.0
DEFAULT_GAP_PS = 100.0
DEFAULT_SYNC_OFFSET_PS = 200.0

# Edge used for rotation-drive rectangles (gate, preparation and leakage
# pulses).  Short against the ~161 ps flip period, so the plateau angle
# dominates; long enough to keep the integrator comfortably resolved.
# Sweep/interference pulses keep the 65 ps hardware-like edges above.
DRIVE_EDGE_PS = 2.5

TOMOGRAPHY_LABELS = ("00", "01", "10", "11")

_TIME_TOL = 1e-9


class Channel(Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class LeverArm:
    """Gate-voltage to detuning conversion factors [ueV/mV]."""

    barrier: float = 100.0
    plunger: float = 30.0


def mv_to_detuning(voltage_mv: float, gate: str = "plunger", arms: LeverArm = LeverArm()) -> float:
    """Detuning excursion [ueV] produced by a gate-voltage step [mV]."""
    if gate == "plunger":
        return arms.plunger * voltage_mv
    if gate == "barrier":
        return arms.barrier * voltage_mv
    raise ValueError(f"gate must be 'plunger' or 'barrier', got {gate!r}")


@dataclass(frozen=True)
class Pulse:
    """One trapezoidal detuning pulse on a single channel.

    ``width`` is the total base duration including both edges; amplitude
    adds to the channel baseline (positive drives toward and past the
    balance point for the usual negative baselines).
    """

    channel: Channel
    start: float
    width: float
    amplitude: float
    rise: float = DEFAULT_RISE_PS
    fall: float = DEFAULT_FALL_PS

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"width must be > 0, got {self.width}")
        if self.rise < 0 or self.fall < 0:
            raise ValueError("rise and fall must be >= 0")
        if self.start < 0:
            raise ValueError(f"start must be >= 0, got {self.start}")

    @property
    def end(self) -> float:
        return self.start + self.width

    @property
    def has_plateau(self) -> bool:
        return self.width > self.rise + self.fall

    @property
    def peak_fraction(self) -> float:
        """Fraction of full amplitude actually reached (1 with a plateau)."""
        if self.has_plateau:
            return 1.0
        return self.width / (self.rise + self.fall)


def pulse_envelope(pulse: Pulse, t):
    """Unitless envelope at time(s) ``t``: max(0, min(1, tau/rise, (W-tau)/fall)).

    Zero rise or fall drops the corresponding constraint (sharp edge).
    Accepts scalars or arrays.
    """
    tau = np.asarray(t, dtype=float) - pulse.start
    env = np.ones_like(tau)
    if pulse.rise > 0:
        env = np.minimum(env, tau / pulse.rise)
    if pulse.fall > 0:
        env = np.minimum(env, (pulse.width - tau) / pulse.fall)
    env = np.clip(env, 0.0, 1.0)
    env = np.where((tau < 0.0) | (tau > pulse.width), 0.0, env)
    if np.ndim(t) == 0:
        return float(env)
    return env


@dataclass(frozen=True)
class Schedule:
    """Baselines plus pulses for both channels over [0, total_duration].

    ``sync_offset`` shifts every upper-channel pulse later in time; lower
    pulses are unaffected.  Same-channel pulses must not overlap (after
    the offset) and everything must fit inside the total duration.
    """

    eps_u0: float
    eps_l0: float
    pulses: tuple[Pulse, ...]
    total_duration: float
    sync_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        if self.total_duration < 0:
            raise ValueError("total_duration must be >= 0")
        for ch in Channel:
            off = self.channel_offset(ch)
            spans = sorted(
                (p.start + off, p.end + off) for p in self.pulses if p.channel is ch
            )
            for (s0, e0), (s1, _) in zip(spans, spans[1:]):
                if s1 < e0 - _TIME_TOL:
                    raise ValueError(
                        f"overlapping {ch.value} pulses: [{s0}, {e0}] and start {s1}"
                    )
            for s0, e0 in spans:
                if s0 < -_TIME_TOL:
                    raise ValueError(f"{ch.value} pulse begins before t=0 ({s0})")
                if e0 > self.total_duration + _TIME_TOL:
                    raise ValueError(
                        f"{ch.value} pulse ends at {e0} past total_duration "
                        f"{self.total_duration}"
                    )

    def channel_offset(self, channel: Channel) -> float:
        return self.sync_offset if channel is Channel.UPPER else 0.0


def _channel_value(schedule: Schedule, channel: Channel, t) -> np.ndarray:
    base = schedule.eps_u0 if channel is Channel.UPPER else schedule.eps_l0
    off = schedule.channel_offset(channel)
    out = np.full_like(np.asarray(t, dtype=float), base)
    for p in schedule.pulses:
        if p.channel is channel:
            out = out + p.amplitude * pulse_envelope(p, np.asarray(t) - off)
    return out


def evaluate(schedule: Schedule, t: float) -> tuple[float, float]:
    """Instantaneous (eps_u, eps_l) [ueV]; t must lie in [0, total_duration]."""
    if t < -_TIME_TOL or t > schedule.total_duration + _TIME_TOL:
        raise OutOfRange(
            f"t={t} outside schedule domain [0, {schedule.total_duration}]"
        )
    return (
        float(_channel_value(schedule, Channel.UPPER, t)),
        float(_channel_value(schedule, Channel.LOWER, t)),
    )


def breakpoints(schedule: Schedule) -> np.ndarray:
    """Sorted times where either waveform has a kink, bracketed by 0 and T."""
    pts = [0.0, schedule.total_duration]
    for p in schedule.pulses:
        off = schedule.channel_offset(p.channel)
        corners = (
            p.start,
            p.start + min(p.rise, p.width),
            p.start + max(p.width - p.fall, 0.0),
            p.end,
        )
        for c in corners:
            c = c + off
            if _TIME_TOL < c < schedule.total_duration - _TIME_TOL:
                pts.append(c)
    pts.sort()
    out = [pts[0]]
    for c in pts[1:]:
        if c - out[-1] > _TIME_TOL:
            out.append(c)
    if out[-1] != schedule.total_duration:
        out[-1] = schedule.total_duration
    return np.asarray(out)


def piecewise_segments(schedule: Schedule):
    """Exact piecewise-linear form of both waveforms between breakpoints.

    Returns (times, au, bu, al, bl) with K+1 breakpoint times and K
    per-segment coefficients such that eps(t) = a[k] + b[k]*(t - times[k])
    on segment k.  Used by the integrator so that every kink lands on a
    step boundary.
    """
    ts = breakpoints(schedule)
    if len(ts) < 2:  # zero-length schedule
        return ts, np.empty(0), np.empty(0), np.empty(0), np.empty(0)
    # sample two interior points per segment: exact for linear segments and
    # insensitive to the boundary value at a sharp (zero rise/fall) edge
    dt = np.diff(ts)
    q1 = ts[:-1] + 0.25 * dt
    q3 = ts[:-1] + 0.75 * dt
    v1 = _channel_value(schedule, Channel.UPPER, q1)
    v3 = _channel_value(schedule, Channel.UPPER, q3)
    bu = (v3 - v1) / (0.5 * dt)
    au = v1 - bu * 0.25 * dt
    v1 = _channel_value(schedule, Channel.LOWER, q1)
    v3 = _channel_value(schedule, Channel.LOWER, q3)
    bl = (v3 - v1) / (0.5 * dt)
    al = v1 - bl * 0.25 * dt
    return ts, au, bu, al, bl


def waveform_table(schedule: Schedule, dt: float = 1.0):
    """Sampled waveform for CSV dumps: arrays (t_ps, eps_u_uev, eps_l_uev)."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n = int(math.floor(schedule.total_duration / dt + _TIME_TOL)) + 1
    t = np.arange(n) * dt
    return (
        t,
        _channel_value(schedule, Channel.UPPER, t),
        _channel_value(schedule, Channel.LOWER, t),
    )


# ----------------------------------------------------------------- builders


def rabi_schedule(
    w1: float,
    *,
    eps_u0: float = -200.0,
    eps_l0: float = -200.0,
    amplitude: float | None = None,
    rise: float = DEFAULT_RISE_PS,
    fall: float = DEFAULT_FALL_PS,
) -> Schedule:
    """Single upper-qubit drive pulse of base width ``w1``.

    Default amplitude -eps_u0 lands the plateau exactly on the upper
    balance point.  ``w1 <= 0`` builds a pulse-free schedule.
    """
    amp = -eps_u0 if amplitude is None else amplitude
    pulses = ()
    if w1 > 0:
        pulses = (Pulse(Channel.UPPER, 0.0, w1, amp, rise, fall),)
    return Schedule(eps_u0, eps_l0, pulses, max(w1, 0.0))


def two_pulse_schedule(
    w1: float,
    w2: float,
    gap: float = DEFAULT_GAP_PS,
    *,
    eps_u0: float = -200.0,
    eps_l0: float = -200.0,
    amp_u: float | None = None,
    amp_l: float | None = None,
    rise: float = DEFAULT_RISE_PS,
    fall: float = DEFAULT_FALL_PS,
) -> Schedule:
    """Lower pulse of width ``w2`` first, upper pulse of width ``w1`` after
    ``gap``; both aimed at their balance points unless amplitudes are given.
    Zero widths drop the corresponding pulse."""
    amp_u = -eps_u0 if amp_u is None else amp_u
    amp_l = -eps_l0 if amp_l is None else amp_l
    pulses = []
    if w2 > 0:
        pulses.append(Pulse(Channel.LOWER, 0.0, w2, amp_l, rise, fall))
    upper_start = max(w2, 0.0) + gap
    if w1 > 0:
        pulses.append(Pulse(Channel.UPPER, upper_start, w1, amp_u, rise, fall))
    return Schedule(eps_u0, eps_l0, tuple(pulses), upper_start + max(w1, 0.0))


def tomography_schedule(
    input_label: str,
    w_i: float,
    *,
    j_coupling: float,
    eps_u0: float = -200.0,
    eps_l0: float = -200.0,
    upper_prep_width: float = 360.0,
    lower_prep_width: float = 390.0,
    elevated_prep_width: float | None = None,
    gap: float = DEFAULT_GAP_PS,
    rise: float = DEFAULT_RISE_PS,
    fall: float = DEFAULT_FALL_PS,
) -> Schedule:
    """Preparation pulses for one computational input, then the gate pulse.

    Inputs are prepared from |00> with 3pi flips: |10> takes an upper flip,
    |01> a lower flip, |11> a lower flip followed by an upper flip driven at
    the shifted balance point (amplitude -eps_u0 + J, since the partner now
    sits in |1>).  The gate pulse itself is an upper pulse of width ``w_i``
    at the unshifted amplitude -eps_u0.
    """
    if input_label not in TOMOGRAPHY_LABELS:
        raise InvalidLabel(f"unknown input label {input_label!r}")
    if elevated_prep_width is None:
        elevated_prep_width = upper_prep_width
    pulses = []
    t = 0.0
    if input_label in ("01", "11"):
        pulses.append(Pulse(Channel.LOWER, t, lower_prep_width, -eps_l0, rise, fall))
        t += lower_prep_width + gap
    if input_label == "10":
        pulses.append(Pulse(Channel.UPPER, t, upper_prep_width, -eps_u0, rise, fall))
        t += upper_prep_width + gap
    elif input_label == "11":
        pulses.append(
            Pulse(Channel.UPPER, t, elevated_prep_width, -eps_u0 + j_coupling, rise, fall)
        )
        t += elevated_prep_width + gap
    if w_i > 0:
        pulses.append(Pulse(Channel.UPPER, t, w_i, -eps_u0, rise, fall))
    return Schedule(eps_u0, eps_l0, tuple(pulses), t + max(w_i, 0.0))


def lzs_schedule(
    w1: float,
    *,
    a2: float,
    w2: float = 100.0,
    gap: float = 0.0,
    eps_u0: float = -200.0,
    eps_l0: float = -200.0,
    amp_u: float | None = None,
    rise: float = DEFAULT_RISE_PS,
    fall: float = DEFAULT_FALL_PS,
    upper_rise: float | None = None,
    upper_fall: float | None = None,
) -> Schedule:
    """Short lower sweep pulse (amplitude ``a2``, width ``w2``), then an
    upper drive pulse of width ``w1`` immediately after (gap defaults 0).

    The default 100 ps lower width with 65 ps edges is a triangle that
    sweeps the lower qubit through its balance point twice when the
    amplitude is large enough, building the double-passage interference.
    The upper pulse edges default to the lower's but can be set separately
    (``upper_rise``/``upper_fall``) when the drive should stay rectangular.
    """
    amp_u = -eps_u0 if amp_u is None else amp_u
    upper_rise = rise if upper_rise is None else upper_rise
    upper_fall = fall if upper_fall is None else upper_fall
    pulses = []
    if w2 > 0:
        pulses.append(Pulse(Channel.LOWER, 0.0, w2, a2, rise, fall))
    upper_start = max(w2, 0.0) + gap
    if w1 > 0:
        pulses.append(
            Pulse(Channel.UPPER, upper_start, w1, amp_u, upper_rise, upper_fall)
        )
    return Schedule(eps_u0, eps_l0, tuple(pulses), upper_start + max(w1, 0.0))


def sync_schedule(
    predetermined_delay: float,
    *,
    w1: float = 100.0,
    w2: float = 100.0,
    amp_u: float | None = None,
    amp_l: float | None = None,
    sync_offset: float = DEFAULT_SYNC_OFFSET_PS,
    eps_u0: float = -200.0,
    eps_l0: float = -200.0,
    rise: float = DEFAULT_RISE_PS,
    fall: float = DEFAULT_FALL_PS,
) -> Schedule:
    """Lower pulse, then upper pulse programmed ``predetermined_delay`` ps
    after the lower pulse ends; the schedule's ``sync_offset`` then delays
    the upper channel physically.

    A negative programmed delay compensates the system offset: delay
    -sync_offset makes the pulses effectively back-to-back.  A lead time is
    inserted automatically so no programmed start is negative.
    """
    amp_u = -eps_u0 if amp_u is None else amp_u
    amp_l = -eps_l0 if amp_l is None else amp_l
    lead = max(
        0.0,
        -(w2 + predetermined_delay),
        -(w2 + predetermined_delay + sync_offset),
    )
    pulses = []
    if w2 > 0:
        pulses.append(Pulse(Channel.LOWER, lead, w2, amp_l, rise, fall))
    upper_start = lead + max(w2, 0.0) + predetermined_delay
    if w1 > 0:
        pulses.append(Pulse(Channel.UPPER, upper_start, w1, amp_u, rise, fall))
    total = max(lead + max(w2, 0.0), upper_start + max(w1, 0.0) + sync_offset)
    return Schedule(eps_u0, eps_l0, tuple(pulses), total, sync_offset=sync_offset)
