"""Named experiment runners: parameter sweeps over pulse schedules.

Each runner evaluates a grid of independent simulations and packs the
results into :class:`ProbabilityMap` (or tomography/fidelity containers).
Grid points are pure functions of their coordinates, so they may be
evaluated concurrently; results are written by grid index, which keeps
the output bit-identical regardless of worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace

import numpy as np

from .analysis import fidelity_report, locate_flip_width, pulse_flip_fidelity
from .dynamics import DecoherenceParams, IntegrationConfig, run_to_populations
from .errors import StateInvalid
from .model import QubitPairParams
from .pulses import (
    DEFAULT_GAP_PS,
    DEFAULT_RISE_PS,
    DEFAULT_SYNC_OFFSET_PS,
    DRIVE_EDGE_PS,
    lzs_schedule,
    rabi_schedule,
    sync_schedule,
    tomography_schedule,
    two_pulse_schedule,
)

__all__ = [
    "TOMOGRAPHY_ORDER",
    "SweepGrid",
    "ProbabilityMap",
    "TomographyMatrix",
    "FidelityCurve",
    "run_conditional_rabi",
    "run_two_pulse",
    "run_cnot_tomography",
    "run_fidelity_vs_j",
    "run_lzs_control",
    "run_controlled_universal",
    "run_sync_scan",
]

# Row and column order of tomography outputs (input label / measured state).
TOMOGRAPHY_ORDER = ("00", "10", "01", "11")

# The charge-basis diagonal is ordered (00, 01, 10, 11); this permutation
# rearranges it into TOMOGRAPHY_ORDER.
_CHARGE_TO_TOMO = np.array([0, 2, 1, 3])

# Width grid for locating odd-pi operating points (covers well past 3pi).
_CALIBRATION_WIDTHS = np.arange(4.0, 500.0, 2.0)


def _check_axis(name: str, values: tuple) -> None:
    if len(values) == 0:
        raise ValueError(f"{name}_values must be non-empty")
    diffs = np.diff(values)
    if diffs.size and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError(f"{name}_values must be strictly monotone")


@dataclass(frozen=True)
class SweepGrid:
    """Axes of a sweep: x always present, y optional for 2-D maps."""

    x_name: str
    x_values: tuple
    x_unit: str
    y_name: str | None = None
    y_values: tuple | None = None
    y_unit: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "x_values", tuple(float(v) for v in self.x_values))
        _check_axis("x", self.x_values)
        if (self.y_name is None) != (self.y_values is None):
            raise ValueError("y_name and y_values must be given together")
        if self.y_values is not None:
            object.__setattr__(self, "y_values", tuple(float(v) for v in self.y_values))
            _check_axis("y", self.y_values)

    @property
    def shape(self) -> tuple:
        ny = 1 if self.y_values is None else len(self.y_values)
        return (ny, len(self.x_values))


@dataclass(frozen=True)
class ProbabilityMap:
    """Ground-state probabilities of both qubits over a sweep grid.

    ``p_u0``/``p_l0`` have shape ``grid.shape`` = (n_y, n_x), with a
    single row for 1-D sweeps.
    """

    grid: SweepGrid
    p_u0: np.ndarray
    p_l0: np.ndarray

    def __post_init__(self):
        for name in ("p_u0", "p_l0"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.grid.shape:
                raise ValueError(
                    f"{name} shape {arr.shape} does not match grid {self.grid.shape}"
                )
            if arr.min() < -1e-9 or arr.max() > 1.0 + 1e-9:
                raise StateInvalid(f"{name} entries outside [0, 1]")
            arr = np.clip(arr, 0.0, 1.0)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class TomographyMatrix:
    """4x4 input->output probabilities, rows and columns in
    ``TOMOGRAPHY_ORDER``."""

    d: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.d, dtype=float)
        if arr.shape != (4, 4):
            raise ValueError(f"tomography matrix must be 4x4, got {arr.shape}")
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 0.02):
            raise StateInvalid(
                f"tomography rows must each sum to 1 +/- 0.02, got {sums}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "d", arr)


@dataclass(frozen=True)
class FidelityCurve:
    """Process-independent (f) and process-dependent (f_prime) gate
    fidelities versus coupling strength."""

    j_values: tuple
    f: tuple
    f_prime: tuple

    def __post_init__(self):
        object.__setattr__(self, "j_values", tuple(float(v) for v in self.j_values))
        object.__setattr__(self, "f", tuple(float(v) for v in self.f))
        object.__setattr__(self, "f_prime", tuple(float(v) for v in self.f_prime))
        if not (len(self.j_values) == len(self.f) == len(self.f_prime)):
            raise ValueError("j_values, f and f_prime must have equal length")
        for v in self.f + self.f_prime:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"fidelities must lie in [0, 1], got {v}")


def _worker_count(parallel: int | None) -> int:
    if parallel is None:
        return os.cpu_count() or 1
    if parallel < 1:
        raise ValueError(f"parallel must be >= 1, got {parallel}")
    return parallel


def _map_indexed(point, n: int, parallel: int | None) -> list:
    """Evaluate point(0..n-1), possibly concurrently; results by index."""
    workers = _worker_count(parallel)
    out = [None] * n
    if workers == 1 or n == 1:
        for i in range(n):
            out[i] = point(i)
        return out
    with ThreadPoolExecutor(max_workers=min(workers, n)) as pool:
        futures = {pool.submit(point, i): i for i in range(n)}
        for fut in as_completed(futures):
            out[futures[fut]] = fut.result()
    return out


def _probability_map(grid, make_schedule, params, dec, cfg, parallel) -> ProbabilityMap:
    ny, nx = grid.shape
    y_values = grid.y_values if grid.y_values is not None else (None,)

    def point(k):
        i, j = divmod(k, nx)
        pops = run_to_populations(
            make_schedule(grid.x_values[j], y_values[i]), params, dec, cfg
        )
        return float(pops[0] + pops[1]), float(pops[0] + pops[2])

    pairs = _map_indexed(point, ny * nx, parallel)
    p_u0 = np.array([p for p, _ in pairs]).reshape(ny, nx)
    p_l0 = np.array([p for _, p in pairs]).reshape(ny, nx)
    return ProbabilityMap(grid=grid, p_u0=p_u0, p_l0=p_l0)


def run_conditional_rabi(
    params: QubitPairParams,
    w1_values,
    eps_l_values,
    dec: DecoherenceParams = DecoherenceParams(),
    *,
    cfg: IntegrationConfig = IntegrationConfig(),
    rise: float = DRIVE_EDGE_PS,
    fall: float | None = None,
    parallel: int | None = None,
) -> ProbabilityMap:
    """Upper-qubit flip pulse of width W1 for each lower-qubit detuning.

    The lower detuning sets whether the coupling shifts the upper balance
    point out from under the drive, so rows switch between full Rabi
    oscillation and leakage-suppressed behaviour.
    """
    fall = rise if fall is None else fall
    grid = SweepGrid("w1", tuple(w1_values), "ps", "eps_l", tuple(eps_l_values), "ueV")

    def make(w1, eps_l):
        return rabi_schedule(
            w1, eps_u0=params.eps_u0, eps_l0=eps_l, rise=rise, fall=fall
        )

    return _probability_map(grid, make, params, dec, cfg, parallel)


def run_two_pulse(
    params: QubitPairParams,
    w1_values,
    w2_values,
    gap: float = DEFAULT_GAP_PS,
    dec: DecoherenceParams = DecoherenceParams(),
    *,
    cfg: IntegrationConfig = IntegrationConfig(),
    rise: float = DRIVE_EDGE_PS,
    fall: float | None = None,
    parallel: int | None = None,
) -> ProbabilityMap:
    """Lower pulse of width W2, then an upper pulse of width W1 after a gap."""
    fall = rise if fall is None else fall
    grid = SweepGrid("w1", tuple(w1_values), "ps", "w2", tuple(w2_values), "ps")

    def make(w1, w2):
        return two_pulse_schedule(
            w1, w2, gap=gap,
            eps_u0=params.eps_u0, eps_l0=params.eps_l0,
            rise=rise, fall=fall,
        )

    return _probability_map(grid, make, params, dec, cfg, parallel)


def _flip_from_schedule(sched, params, dec, cfg, which: str) -> float:
    pops = run_to_populations(sched, params, dec, cfg)
    if which == "upper":
        return float(pops[2] + pops[3])
    return float(pops[1] + pops[3])


def _calibrate_prep_widths(params, gap, cfg, rise, fall, parallel):
    """Locate the 3pi widths of the three preparation pulses by scanning.

    All scans run decoherence-free: the located widths are geometric
    operating points, not decoherence-dependent quantities.
    """
    ideal = DecoherenceParams()
    widths = _CALIBRATION_WIDTHS

    def common(label, **kw):
        return tomography_schedule(
            label, 0.0, j_coupling=params.j_coupling,
            eps_u0=params.eps_u0, eps_l0=params.eps_l0,
            gap=gap, rise=rise, fall=fall, **kw,
        )

    def upper_point(i):
        sched = common("10", upper_prep_width=widths[i])
        return _flip_from_schedule(sched, params, ideal, cfg, "upper")

    def lower_point(i):
        sched = common("01", lower_prep_width=widths[i])
        return _flip_from_schedule(sched, params, ideal, cfg, "lower")

    upper_flips = _map_indexed(upper_point, widths.size, parallel)
    lower_flips = _map_indexed(lower_point, widths.size, parallel)
    w_upper = locate_flip_width(widths, upper_flips, 3)
    w_lower = locate_flip_width(widths, lower_flips, 3)

    # The |11> preparation drives the upper qubit at the coupling-shifted
    # balance point; the steeper ramp moves its effective angle, so it gets
    # its own scan on top of the located lower preparation.
    def elevated_point(i):
        sched = common(
            "11", lower_prep_width=w_lower, elevated_prep_width=widths[i]
        )
        return _flip_from_schedule(sched, params, ideal, cfg, "upper")

    elevated_flips = _map_indexed(elevated_point, widths.size, parallel)
    w_elevated = locate_flip_width(widths, elevated_flips, 3)
    return w_upper, w_lower, w_elevated


def run_cnot_tomography(
    params: QubitPairParams,
    w_i_values,
    dec: DecoherenceParams = DecoherenceParams(),
    *,
    mode: str = "scan",
    gap: float = DEFAULT_GAP_PS,
    cfg: IntegrationConfig = IntegrationConfig(),
    rise: float = DRIVE_EDGE_PS,
    fall: float | None = None,
    parallel: int | None = None,
):
    """Prepare each computational input, apply the gate pulse, read out.

    Returns ``(traces, matrix)``: ``traces`` maps each input label to an
    (n_widths, 4) array of output-state probabilities versus gate width,
    and ``matrix`` is the :class:`TomographyMatrix` extracted at the 3pi
    operating width.  Columns follow ``TOMOGRAPHY_ORDER``.

    ``mode="scan"`` locates the operating widths on a decoherence-free
    scan; ``mode="pin"`` uses the fixed nominal widths (360/390/360 ps
    preparations, 360 ps gate).
    """
    if mode not in ("scan", "pin"):
        raise ValueError(f"mode must be 'scan' or 'pin', got {mode!r}")
    fall = rise if fall is None else fall
    w_i_values = tuple(float(v) for v in w_i_values)
    if mode == "pin":
        w_upper, w_lower, w_elevated = 360.0, 390.0, 360.0
    else:
        w_upper, w_lower, w_elevated = _calibrate_prep_widths(
            params, gap, cfg, rise, fall, parallel
        )
    w_gate = w_upper

    def input_schedule(label, w_i):
        return tomography_schedule(
            label, w_i, j_coupling=params.j_coupling,
            eps_u0=params.eps_u0, eps_l0=params.eps_l0,
            upper_prep_width=w_upper, lower_prep_width=w_lower,
            elevated_prep_width=w_elevated,
            gap=gap, rise=rise, fall=fall,
        )

    n_w = len(w_i_values)
    jobs = [(label, w) for label in TOMOGRAPHY_ORDER
            for w in (*w_i_values, w_gate)]

    def point(k):
        label, w = jobs[k]
        pops = run_to_populations(input_schedule(label, w), params, dec, cfg)
        return pops[_CHARGE_TO_TOMO]

    rows = _map_indexed(point, len(jobs), parallel)
    traces = {}
    d = np.empty((4, 4))
    for li, label in enumerate(TOMOGRAPHY_ORDER):
        block = rows[li * (n_w + 1): (li + 1) * (n_w + 1)]
        traces[label] = np.array(block[:n_w])
        d[li] = block[n_w]
    return traces, TomographyMatrix(d=d)


def run_fidelity_vs_j(
    params: QubitPairParams,
    j_values,
    w_i_max: float = 1000.0,
    dec: DecoherenceParams = DecoherenceParams(t2_star=1200.0),
    *,
    step: float = 4.0,
    cfg: IntegrationConfig = IntegrationConfig(),
    rise: float = DRIVE_EDGE_PS,
    fall: float | None = None,
    parallel: int | None = None,
) -> FidelityCurve:
    """Gate fidelity versus coupling strength.

    For each J the leakage trace is the upper-qubit flip probability versus
    gate width with the lower qubit parked in |1> (detuning mirrored to
    +|eps_l0|); its maximum is the worst-case leakage amplitude A_k, giving
    the process-independent fidelity F = 1 - A_k.  The process-dependent
    F' combines the single-pulse flip fidelities at the requested
    decoherence with the leakage at the 3pi operating width.
    """
    fall = rise if fall is None else fall
    j_values = tuple(float(j) for j in j_values)
    if any(j <= 0 for j in j_values):
        raise ValueError("j_values must be positive")
    widths = np.arange(step, w_i_max + step / 2.0, step)
    ideal = DecoherenceParams()
    eps_l_parked = -params.eps_l0  # mirror the baseline across zero

    def leak_schedule(w):
        return rabi_schedule(
            w, eps_u0=params.eps_u0, eps_l0=eps_l_parked, rise=rise, fall=fall
        )

    # The 3pi width of the gate pulse is a property of the drive geometry
    # alone (located with the lower qubit grounded), independent of J.
    def gate_point(i):
        sched = rabi_schedule(
            _CALIBRATION_WIDTHS[i],
            eps_u0=params.eps_u0, eps_l0=params.eps_l0,
            rise=rise, fall=fall,
        )
        return _flip_from_schedule(sched, params, ideal, cfg, "upper")

    gate_flips = _map_indexed(gate_point, _CALIBRATION_WIDTHS.size, parallel)
    w_3pi = locate_flip_width(_CALIBRATION_WIDTHS, gate_flips, 3)

    f_u = pulse_flip_fidelity(params, dec, 3, "upper", cfg)
    f_l = pulse_flip_fidelity(params, dec, 3, "lower", cfg)

    f_list = []
    f_prime_list = []
    for j in j_values:
        pj = replace(params, j_coupling=j)

        def leak_point(i, pj=pj):
            return _flip_from_schedule(
                leak_schedule(widths[i]), pj, ideal, cfg, "upper"
            )

        flips = _map_indexed(leak_point, widths.size, parallel)
        a_k = float(max(flips))
        a_k_prime = _flip_from_schedule(leak_schedule(w_3pi), pj, dec, cfg, "upper")
        report = fidelity_report(a_k, a_k_prime, f_u, f_l)
        f_list.append(report.f)
        f_prime_list.append(report.f_prime)
    return FidelityCurve(j_values=j_values, f=tuple(f_list), f_prime=tuple(f_prime_list))


def run_lzs_control(
    params: QubitPairParams,
    w1_values,
    *,
    a2_values=None,
    eps_l_values=None,
    a2: float | None = None,
    w2: float = 100.0,
    gap: float = 0.0,
    dec: DecoherenceParams = DecoherenceParams(),
    cfg: IntegrationConfig = IntegrationConfig(),
    amp_u: float | None = None,
    rise: float = DEFAULT_RISE_PS,
    fall: float | None = None,
    upper_rise: float = DRIVE_EDGE_PS,
    upper_fall: float | None = None,
    parallel: int | None = None,
) -> ProbabilityMap:
    """Interference-controlled rotation: triangular lower sweep, then an
    upper drive rectangle of width W1.

    Sweep either the lower pulse amplitude (``a2_values``) or the lower
    baseline detuning (``eps_l_values`` with a fixed ``a2``).  The 100 ps
    lower pulse with stock 65 ps edges is triangular, passing the balance
    point twice whenever its apex clears the detuning; the double passage
    sets the lower-qubit survival that gates the upper rotation.
    ``amp_u=0`` mutes the upper drive, giving the lower-qubit-only
    reference with identical timing.
    """
    fall = rise if fall is None else fall
    upper_fall = upper_rise if upper_fall is None else upper_fall
    if (a2_values is None) == (eps_l_values is None):
        raise ValueError("give exactly one of a2_values or eps_l_values")

    if a2_values is not None:
        grid = SweepGrid("w1", tuple(w1_values), "ps", "a2", tuple(a2_values), "ueV")

        def make(w1, a2_point):
            return lzs_schedule(
                w1, a2=a2_point, w2=w2, gap=gap,
                eps_u0=params.eps_u0, eps_l0=params.eps_l0, amp_u=amp_u,
                rise=rise, fall=fall,
                upper_rise=upper_rise, upper_fall=upper_fall,
            )
    else:
        a2_fixed = -params.eps_l0 if a2 is None else a2
        grid = SweepGrid("w1", tuple(w1_values), "ps", "eps_l", tuple(eps_l_values), "ueV")

        def make(w1, eps_l):
            return lzs_schedule(
                w1, a2=a2_fixed, w2=w2, gap=gap,
                eps_u0=params.eps_u0, eps_l0=eps_l, amp_u=amp_u,
                rise=rise, fall=fall,
                upper_rise=upper_rise, upper_fall=upper_fall,
            )

    return _probability_map(grid, make, params, dec, cfg, parallel)


def run_controlled_universal(
    params: QubitPairParams,
    eps_u_values,
    eps_l_values,
    dec: DecoherenceParams = DecoherenceParams(),
    *,
    amp_u: float | None = None,
    amp_l: float | None = None,
    width: float = 100.0,
    gap: float = 0.0,
    cfg: IntegrationConfig = IntegrationConfig(),
    rise: float = DEFAULT_RISE_PS,
    fall: float | None = None,
    parallel: int | None = None,
) -> ProbabilityMap:
    """Both qubits swept by 100 ps triangular pulses, lower first.

    Fixed pulse amplitudes over a grid of both baseline detunings: each
    qubit shows interference fringes only where its pulse apex clears its
    own detuning, and the upper fringes are gated by the lower survival.
    """
    fall = rise if fall is None else fall
    amp_u = -params.eps_u0 if amp_u is None else amp_u
    amp_l = -params.eps_l0 if amp_l is None else amp_l
    grid = SweepGrid(
        "eps_u", tuple(eps_u_values), "ueV", "eps_l", tuple(eps_l_values), "ueV"
    )

    def make(eps_u, eps_l):
        return lzs_schedule(
            width, a2=amp_l, w2=width, gap=gap,
            eps_u0=eps_u, eps_l0=eps_l, amp_u=amp_u,
            rise=rise, fall=fall,
        )

    return _probability_map(grid, make, params, dec, cfg, parallel)


def run_sync_scan(
    params: QubitPairParams,
    predetermined_delays,
    dec: DecoherenceParams = DecoherenceParams(),
    *,
    w1_values=None,
    w2_values=None,
    sync_offset: float = DEFAULT_SYNC_OFFSET_PS,
    cfg: IntegrationConfig = IntegrationConfig(),
    rise: float = DEFAULT_RISE_PS,
    fall: float | None = None,
    parallel: int | None = None,
) -> dict:
    """Pulse-timing scan: one (W1, W2) probability map per delay.

    The schedule carries the fixed system offset on the upper channel, so
    the specified delay controls how the two pulses actually overlap: at
    -sync_offset they are back-to-back (conditional structure maximal);
    pushing the upper pulse entirely ahead of the lower decouples the
    upper map from W2.
    """
    fall = rise if fall is None else fall
    if w1_values is None:
        w1_values = np.arange(10.0, 301.0, 10.0)
    if w2_values is None:
        w2_values = np.arange(10.0, 301.0, 10.0)
    out = {}
    for delay in predetermined_delays:
        grid = SweepGrid("w1", tuple(w1_values), "ps", "w2", tuple(w2_values), "ps")

        def make(w1, w2, delay=delay):
            return sync_schedule(
                delay, w1=w1, w2=w2, sync_offset=sync_offset,
                eps_u0=params.eps_u0, eps_l0=params.eps_l0,
                rise=rise, fall=fall,
            )

        out[float(delay)] = _probability_map(grid, make, params, dec, cfg, parallel)
    return out
