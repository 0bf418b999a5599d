"""Pulse/envelope/schedule tests, with a quadrature oracle for areas."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from chargesim.errors import InvalidLabel, OutOfRange
from chargesim.pulses import (
    Channel,
    LeverArm,
    Pulse,
    Schedule,
    breakpoints,
    evaluate,
    lzs_schedule,
    mv_to_detuning,
    piecewise_segments,
    pulse_envelope,
    rabi_schedule,
    sync_schedule,
    tomography_schedule,
    two_pulse_schedule,
    waveform_table,
)


def envelope_area(pulse):
    """Numeric quadrature of the envelope, split at the kinks."""
    kinks = sorted({0.0, min(pulse.rise, pulse.width),
                    max(pulse.width - pulse.fall, 0.0), pulse.width})
    total = 0.0
    for a, b in zip(kinks, kinks[1:]):
        val, _ = quad(lambda t: pulse_envelope(pulse, pulse.start + t), a, b)
        total += val
    return total


# ---------------------------------------------------------------- envelopes


def test_plateau_envelope_shape():
    p = Pulse(Channel.UPPER, 0.0, 360.0, 200.0)  # default 65/65 edges
    assert pulse_envelope(p, -1.0) == 0.0
    assert pulse_envelope(p, 0.0) == 0.0
    assert pulse_envelope(p, 32.5) == pytest.approx(0.5)
    assert pulse_envelope(p, 65.0) == 1.0
    assert pulse_envelope(p, 200.0) == 1.0
    assert pulse_envelope(p, 295.0) == 1.0
    assert pulse_envelope(p, 360.0 - 32.5) == pytest.approx(0.5)
    assert pulse_envelope(p, 360.0) == 0.0
    assert pulse_envelope(p, 400.0) == 0.0


def test_triangular_envelope_peak():
    # 100 ps base with 65+65 ps edges: no plateau, peak 100/130
    p = Pulse(Channel.LOWER, 0.0, 100.0, 400.0)
    assert not p.has_plateau
    assert p.peak_fraction == pytest.approx(100.0 / 130.0)
    t = np.linspace(0.0, 100.0, 2001)
    env = pulse_envelope(p, t)
    assert env.max() == pytest.approx(100.0 / 130.0, abs=1e-6)
    # peak sits where the two ramps cross: width*rise/(rise+fall) = 50
    assert t[np.argmax(env)] == pytest.approx(50.0, abs=0.1)


def test_rectangle_envelope():
    p = Pulse(Channel.UPPER, 10.0, 50.0, 1.0, rise=0.0, fall=0.0)
    assert pulse_envelope(p, 10.0) == 1.0
    assert pulse_envelope(p, 35.0) == 1.0
    assert pulse_envelope(p, 60.0) == 1.0
    assert pulse_envelope(p, 9.999) == 0.0
    assert pulse_envelope(p, 60.001) == 0.0


def test_envelope_area_matches_quadrature():
    # with a plateau the area is width - (rise+fall)/2
    p = Pulse(Channel.UPPER, 0.0, 360.0, 1.0)
    assert p.width - (p.rise + p.fall) / 2 == pytest.approx(295.0)
    assert envelope_area(p) == pytest.approx(295.0, rel=1e-9)
    p2 = Pulse(Channel.UPPER, 5.0, 500.0, 1.0, rise=30.0, fall=70.0)
    assert envelope_area(p2) == pytest.approx(500.0 - 50.0, rel=1e-9)


def test_triangular_area_matches_quadrature():
    p = Pulse(Channel.LOWER, 0.0, 100.0, 1.0)
    # triangle of height 100/130 over base 100
    assert envelope_area(p) == pytest.approx(0.5 * 100.0 * (100.0 / 130.0), rel=1e-9)


@given(
    width=st.floats(1.0, 500.0),
    rise=st.floats(1.0, 100.0),
    fall=st.floats(1.0, 100.0),
    t1=st.floats(-50.0, 550.0),
    t2=st.floats(-50.0, 550.0),
)
@settings(max_examples=80, deadline=None)
def test_envelope_bounded_and_lipschitz(width, rise, fall, t1, t2):
    p = Pulse(Channel.UPPER, 0.0, width, 1.0, rise=rise, fall=fall)
    e1, e2 = pulse_envelope(p, t1), pulse_envelope(p, t2)
    assert 0.0 <= e1 <= 1.0
    slope = max(1.0 / rise, 1.0 / fall)
    assert abs(e1 - e2) <= slope * abs(t1 - t2) + 1e-9


def test_pulse_validation():
    with pytest.raises(ValueError):
        Pulse(Channel.UPPER, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Pulse(Channel.UPPER, -1.0, 10.0, 1.0)
    with pytest.raises(ValueError):
        Pulse(Channel.UPPER, 0.0, 10.0, 1.0, rise=-1.0)


# ---------------------------------------------------------------- lever arm


def test_lever_arm_conversion():
    assert mv_to_detuning(1.0, "barrier") == pytest.approx(100.0)
    assert mv_to_detuning(1.0, "plunger") == pytest.approx(30.0)
    assert mv_to_detuning(-0.5, "plunger") == pytest.approx(-15.0)
    assert mv_to_detuning(2.0, "barrier", LeverArm(barrier=80.0)) == pytest.approx(160.0)
    with pytest.raises(ValueError):
        mv_to_detuning(1.0, "gate7")


# ---------------------------------------------------------------- schedules


def test_evaluate_superposition_of_pulses():
    pulses = (
        Pulse(Channel.UPPER, 0.0, 300.0, 150.0),
        Pulse(Channel.UPPER, 400.0, 200.0, -40.0),
        Pulse(Channel.LOWER, 100.0, 250.0, 200.0),
    )
    s = Schedule(-200.0, -180.0, pulses, 700.0)
    for t in (0.0, 50.0, 120.0, 350.0, 450.0, 699.0):
        eu, el = evaluate(s, t)
        exp_u = -200.0 + sum(
            p.amplitude * pulse_envelope(p, t) for p in pulses if p.channel is Channel.UPPER
        )
        exp_l = -180.0 + sum(
            p.amplitude * pulse_envelope(p, t) for p in pulses if p.channel is Channel.LOWER
        )
        assert eu == pytest.approx(exp_u, abs=1e-12)
        assert el == pytest.approx(exp_l, abs=1e-12)


def test_evaluate_out_of_range():
    s = rabi_schedule(300.0)
    with pytest.raises(OutOfRange):
        evaluate(s, -1.0)
    with pytest.raises(OutOfRange):
        evaluate(s, 301.0)


def test_schedule_rejects_overlap():
    pulses = (
        Pulse(Channel.UPPER, 0.0, 300.0, 100.0),
        Pulse(Channel.UPPER, 200.0, 300.0, 100.0),
    )
    with pytest.raises(ValueError):
        Schedule(-200.0, -200.0, pulses, 600.0)


def test_schedule_rejects_pulse_past_duration():
    with pytest.raises(ValueError):
        Schedule(-200.0, -200.0, (Pulse(Channel.UPPER, 0.0, 300.0, 100.0),), 200.0)


@given(shift=st.floats(0.0, 500.0))
@settings(max_examples=30, deadline=None)
def test_translation_invariance(shift):
    s = two_pulse_schedule(300.0, 200.0)
    moved = Schedule(
        s.eps_u0,
        s.eps_l0,
        tuple(dataclasses.replace(p, start=p.start + shift) for p in s.pulses),
        s.total_duration + shift,
    )
    for t in (0.0, 80.0, 310.0, 450.0, s.total_duration):
        assert evaluate(moved, t + shift) == pytest.approx(evaluate(s, t), abs=1e-9)


def test_sync_offset_shifts_only_upper():
    base = Schedule(
        -200.0,
        -200.0,
        (
            Pulse(Channel.UPPER, 100.0, 300.0, 200.0),
            Pulse(Channel.LOWER, 50.0, 200.0, 150.0),
        ),
        1200.0,
    )
    shifted = dataclasses.replace(base, sync_offset=200.0)
    t = np.arange(0.0, 1200.0 + 0.5, 1.0)
    eu0 = np.array([evaluate(base, x)[0] for x in t])
    eu1 = np.array([evaluate(shifted, x)[0] for x in t])
    el0 = np.array([evaluate(base, x)[1] for x in t])
    el1 = np.array([evaluate(shifted, x)[1] for x in t])
    assert np.array_equal(el0, el1)  # lower untouched
    # cross-correlation of the baseline-subtracted upper waveforms peaks at
    # exactly +200 ps
    a, b = eu0 + 200.0, eu1 + 200.0
    corr = np.correlate(b, a, mode="full")
    lag = np.argmax(corr) - (len(t) - 1)
    assert lag == 200


def test_breakpoints_and_segments_reconstruct_waveform():
    s = tomography_schedule("11", 360.0, j_coupling=119.0)
    ts, au, bu, al, bl = piecewise_segments(s)
    assert ts[0] == 0.0 and ts[-1] == s.total_duration
    for k in range(len(ts) - 1):
        for frac in (0.01, 0.25, 0.5, 0.99):
            t = ts[k] + frac * (ts[k + 1] - ts[k])
            eu, el = evaluate(s, t)
            assert au[k] + bu[k] * (t - ts[k]) == pytest.approx(eu, abs=1e-9)
            assert al[k] + bl[k] * (t - ts[k]) == pytest.approx(el, abs=1e-9)


def test_waveform_table_shape():
    s = rabi_schedule(300.0)
    t, eu, el = waveform_table(s, dt=1.0)
    assert t[0] == 0.0 and t[-1] == pytest.approx(300.0)
    assert len(t) == len(eu) == len(el) == 301
    assert np.all(el == -200.0)


# ----------------------------------------------------------------- builders


def test_rabi_schedule_structure():
    s = rabi_schedule(500.0)
    assert len(s.pulses) == 1
    p = s.pulses[0]
    assert p.channel is Channel.UPPER
    assert p.amplitude == 200.0  # drives -200 ueV baseline to balance
    assert s.total_duration == 500.0
    # plateau sits exactly at the balance point
    assert evaluate(s, 250.0)[0] == pytest.approx(0.0, abs=1e-12)


def test_rabi_schedule_zero_width():
    s = rabi_schedule(0.0)
    assert s.pulses == ()


def test_two_pulse_schedule_ordering():
    s = two_pulse_schedule(300.0, 250.0)
    lower = [p for p in s.pulses if p.channel is Channel.LOWER][0]
    upper = [p for p in s.pulses if p.channel is Channel.UPPER][0]
    assert lower.start == 0.0 and lower.width == 250.0
    assert upper.start == 350.0  # 250 + default 100 ps gap
    assert s.total_duration == 650.0


def test_two_pulse_degenerate_is_flat():
    s = two_pulse_schedule(0.0, 0.0)
    assert s.pulses == ()
    for t in np.linspace(0.0, s.total_duration, 7):
        assert evaluate(s, t) == (-200.0, -200.0)


def test_tomography_schedule_labels():
    with pytest.raises(InvalidLabel):
        tomography_schedule("20", 360.0, j_coupling=119.0)
    s00 = tomography_schedule("00", 360.0, j_coupling=119.0)
    assert len(s00.pulses) == 1
    s10 = tomography_schedule("10", 360.0, j_coupling=119.0)
    assert len(s10.pulses) == 2
    s01 = tomography_schedule("01", 360.0, j_coupling=119.0)
    assert len(s01.pulses) == 2
    assert s01.pulses[0].channel is Channel.LOWER
    assert s01.pulses[0].width == 390.0


def test_tomography_schedule_11_elevated_amplitude():
    s = tomography_schedule("11", 360.0, j_coupling=119.0)
    chans = [p.channel for p in s.pulses]
    assert chans == [Channel.LOWER, Channel.UPPER, Channel.UPPER]
    prep_lower, prep_upper, gate = s.pulses
    assert prep_lower.amplitude == 200.0
    assert prep_upper.amplitude == pytest.approx(319.0)  # -eps_u0 + J
    assert gate.amplitude == 200.0
    # pulses 100 ps apart, in order
    assert prep_upper.start == pytest.approx(prep_lower.end + 100.0)
    assert gate.start == pytest.approx(prep_upper.end + 100.0)


def test_lzs_schedule_back_to_back():
    s = lzs_schedule(400.0, a2=380.0)
    lower = [p for p in s.pulses if p.channel is Channel.LOWER][0]
    upper = [p for p in s.pulses if p.channel is Channel.UPPER][0]
    assert lower.width == 100.0 and not lower.has_plateau
    assert upper.start == lower.end  # immediately following
    assert lower.amplitude == 380.0


def test_sync_schedule_matches_two_pulse_at_zero():
    a = sync_schedule(0.0, w1=300.0, w2=200.0, sync_offset=0.0)
    b = two_pulse_schedule(300.0, 200.0, gap=0.0)
    assert a.pulses == b.pulses
    for t in np.linspace(0.0, min(a.total_duration, b.total_duration), 23):
        assert evaluate(a, t) == pytest.approx(evaluate(b, t), abs=1e-12)


def test_sync_schedule_back_to_back_at_minus_offset():
    # programmed -200 ps cancels the +200 ps system offset
    s = sync_schedule(-200.0)
    lower = [p for p in s.pulses if p.channel is Channel.LOWER][0]
    upper = [p for p in s.pulses if p.channel is Channel.UPPER][0]
    assert upper.start >= 0.0
    assert upper.start + s.sync_offset == pytest.approx(lower.end)


def test_sync_schedule_large_negative_delay_orders_upper_first():
    s = sync_schedule(-1000.0)
    lower = [p for p in s.pulses if p.channel is Channel.LOWER][0]
    upper = [p for p in s.pulses if p.channel is Channel.UPPER][0]
    eff_upper_end = upper.end + s.sync_offset
    assert eff_upper_end < lower.start  # upper pulse fully precedes lower
    assert upper.start >= 0.0
