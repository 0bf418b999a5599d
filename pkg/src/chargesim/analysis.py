"""Curve fitting and gate-fidelity metrics for pulsed two-qubit runs.

The fit model is a decaying cosine with a linear trend,

    p(W) = a0 * exp(-(W/t2_star)**2) * cos(2*pi*f*W + b0) + a1*W + a2,

with W in ps and f reported in GHz.  Fidelity helpers turn leakage traces
and single-qubit flip probabilities into the gate success numbers used by
the experiment runners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DecoherenceParams, IntegrationConfig, run_to_populations
from .errors import FitDiverged, InsufficientData, OutOfRange
from .model import ProbabilityPair, QubitPairParams
from .pulses import DRIVE_EDGE_PS, Channel, Pulse, Schedule, rabi_schedule

__all__ = [
    "RabiFit",
    "FidelityReport",
    "fit_rabi",
    "leakage_amplitude",
    "locate_flip_width",
    "process_fidelity",
    "fidelity_report",
    "pulse_flip_fidelity",
    "cnot_success_min",
    "analytic_two_pulse",
    "analytic_lzs",
    "analytic_controlled_rotation",
]

_REL_TOL = 1e-8
_MAX_ITER = 500
_MAX_DAMPING = 1e12

# GHz * ps = 1e-3 cycles
_GHZ_TO_CYCLES_PER_PS = 1e-3


@dataclass(frozen=True)
class RabiFit:
    """Result of :func:`fit_rabi`.

    ``freq`` is the oscillation frequency in GHz, ``t2_star`` the Gaussian
    decay time in ps, ``a1``/``a2`` the linear trend.  When ``a0`` is ~0 the
    samples carried no detectable oscillation and ``freq`` merely echoes the
    probe frequency used during fitting (it is unconstrained by the data).
    """

    a0: float
    t2_star: float
    freq: float
    b0: float
    a1: float
    a2: float
    residual_rms: float

    def __post_init__(self):
        if self.a0 < 0:
            raise ValueError(f"a0 must be >= 0, got {self.a0}")
        if not self.t2_star > 0:
            raise ValueError(f"t2_star must be > 0, got {self.t2_star}")
        if not self.freq > 0:
            raise ValueError(f"freq must be > 0, got {self.freq}")
        if self.residual_rms < 0:
            raise ValueError(f"residual_rms must be >= 0, got {self.residual_rms}")


@dataclass(frozen=True)
class FidelityReport:
    """Gate-fidelity summary for one coupling strength.

    ``f = 1 - a_k`` is the process-independent fidelity (worst-case leakage
    subtracted from unity); ``f_prime`` is the process-dependent one, the
    minimum of the four per-input success probabilities in ``per_process``.
    """

    a_k: float
    f: float
    a_k_prime: float
    f_u: float
    f_l: float
    f_prime: float
    per_process: tuple[float, float, float, float]

    def __post_init__(self):
        values = (self.a_k, self.f, self.a_k_prime, self.f_u, self.f_l,
                  self.f_prime, *self.per_process)
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"fidelity quantities must lie in [0, 1], got {v}")
        if abs(self.f - (1.0 - self.a_k)) > 1e-12:
            raise ValueError("f must equal 1 - a_k")
        if abs(self.f_prime - min(self.per_process)) > 1e-12:
            raise ValueError("f_prime must equal min(per_process)")


def _rabi_model(w: np.ndarray, theta: np.ndarray) -> np.ndarray:
    a0, t2, f, b0, a1, a2 = theta
    decay = np.exp(-np.square(w / t2))
    return a0 * decay * np.cos(2.0 * np.pi * f * w + b0) + a1 * w + a2


# Floors for finite-difference steps and convergence scales, one per
# parameter (a0, t2, f, b0, a1, a2); they keep steps sensible when a
# parameter passes through zero.
_PARAM_FLOORS = np.array([1e-2, 1.0, 1e-5, 1e-2, 1e-6, 1e-2])


def _jacobian(w: np.ndarray, theta: np.ndarray) -> np.ndarray:
    steps = 1e-6 * np.maximum(np.abs(theta), _PARAM_FLOORS)
    cols = []
    for k in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[k] += steps[k]
        dn[k] -= steps[k]
        cols.append((_rabi_model(w, up) - _rabi_model(w, dn)) / (2.0 * steps[k]))
    return np.column_stack(cols)


def _spectral_seed(w: np.ndarray, y: np.ndarray):
    """Linear detrend, then take the dominant DFT peak for (a0, f, b0)."""
    design = np.column_stack([w, np.ones_like(w)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    n = w.size
    dt = (w[-1] - w[0]) / (n - 1)
    n_pad = max(256, 4 * n)  # refine the frequency grid of the peak search
    spectrum = np.fft.rfft(resid, n=n_pad)
    freqs = np.fft.rfftfreq(n_pad, d=dt)
    k = 1 + int(np.argmax(np.abs(spectrum[1:])))
    f0 = float(freqs[k])
    # amplitude and phase by projection onto the peak frequency
    phase = 2.0 * np.pi * f0 * w
    cc = float(resid @ np.cos(phase))
    ss = float(resid @ np.sin(phase))
    a0 = 2.0 * math.hypot(cc, ss) / n
    b0 = math.atan2(-ss, cc)
    return a0, f0, b0, float(coef[0]), float(coef[1])


def _wrap_angle(b: float) -> float:
    return (b + math.pi) % (2.0 * math.pi) - math.pi


def fit_rabi(samples, initial_guess=None) -> RabiFit:
    """Fit the decaying-cosine model to (width ps, probability) samples.

    ``initial_guess`` optionally supplies (a0, t2_star, freq_ghz, b0, a1, a2)
    and skips the spectral seeding.  Requires at least 20 samples spanning
    at least two oscillation periods of the seeded frequency; constant data
    is accepted and comes back with a0 ~ 0.

    Raises :class:`InsufficientData` on too few/too narrow samples and
    :class:`FitDiverged` when damping escalation cannot reduce the residual.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be an (n, 2) array of (width, probability)")
    if arr.shape[0] < 20:
        raise InsufficientData(f"need at least 20 samples, got {arr.shape[0]}")
    arr = arr[np.argsort(arr[:, 0])]
    w = arr[:, 0]
    y = arr[:, 1]
    span = float(w[-1] - w[0])
    if span <= 0:
        raise InsufficientData("samples span zero width")

    if initial_guess is not None:
        a0_0, t2_0, freq_ghz0, b0_0, a1_0, a2_0 = (float(v) for v in initial_guess)
        f0 = freq_ghz0 * _GHZ_TO_CYCLES_PER_PS
    else:
        a0_0, f0, b0_0, a1_0, a2_0 = _spectral_seed(w, y)
        t2_0 = span

    degenerate = a0_0 <= 1e-6 * max(1.0, float(np.max(np.abs(y))))
    if degenerate:
        a0_0 = 0.0
        if f0 <= 0:
            f0 = 1.0 / span
    elif span * f0 < 2.0:
        raise InsufficientData(
            f"span {span:.3g} ps covers {span * f0:.2f} periods at "
            f"{f0 / _GHZ_TO_CYCLES_PER_PS:.3g} GHz; need at least 2"
        )

    theta = np.array([a0_0, t2_0, f0, b0_0, a1_0, a2_0])
    resid = _rabi_model(w, theta) - y
    cost = float(resid @ resid)
    lam = 1e-3
    for _ in range(_MAX_ITER):
        jac = _jacobian(w, theta)
        grad = jac.T @ resid
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        diag[diag < 1e-14] = 1e-14
        accepted = False
        while lam <= _MAX_DAMPING:
            try:
                delta = np.linalg.solve(hess + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = theta + delta
            resid_new = _rabi_model(w, trial) - y
            cost_new = float(resid_new @ resid_new)
            if cost_new <= cost:
                rel = float(np.max(np.abs(delta) / np.maximum(
                    np.maximum(np.abs(theta), np.abs(trial)), 1e-8)))
                theta = trial
                resid = resid_new
                cost = cost_new
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            raise FitDiverged(
                f"damping escalation exhausted at residual rms "
                f"{math.sqrt(cost / w.size):.3g}"
            )
        if rel < _REL_TOL:
            break

    a0, t2, f, b0, a1, a2 = (float(v) for v in theta)
    if a0 < 0:
        a0, b0 = -a0, b0 + math.pi
    if f < 0:
        f, b0 = -f, -b0
    t2 = abs(t2)
    if t2 < 1e-6:
        t2 = 1e-6
    if f <= 0:
        f = 1.0 / span  # unconstrained (flat data); keep it positive
    return RabiFit(
        a0=a0,
        t2_star=t2,
        freq=f / _GHZ_TO_CYCLES_PER_PS,
        b0=_wrap_angle(b0),
        a1=a1,
        a2=a2,
        residual_rms=math.sqrt(cost / w.size),
    )


def leakage_amplitude(trace) -> float:
    """Largest flip probability over a (width, probability) trace."""
    arr = np.asarray(trace, dtype=float)
    if arr.size == 0:
        raise ValueError("trace is empty")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("trace must be an (n, 2) array of (width, probability)")
    return float(np.max(arr[:, 1]))


def locate_flip_width(widths, flips, n_pi: int) -> float:
    """Width of the ``n_pi``-th (odd) rotation maximum in a flip trace.

    Scans for interior local maxima above 0.5 and returns the one matching
    the requested odd multiple of pi (n_pi=1 -> first, 3 -> second, ...).
    """
    if n_pi < 1 or n_pi % 2 == 0:
        raise ValueError(f"n_pi must be a positive odd integer, got {n_pi}")
    w = np.asarray(widths, dtype=float)
    p = np.asarray(flips, dtype=float)
    if w.shape != p.shape or w.ndim != 1:
        raise ValueError("widths and flips must be matching 1-D arrays")
    wanted = (n_pi + 1) // 2
    found = 0
    for i in range(1, w.size - 1):
        if p[i] >= p[i - 1] and p[i] > p[i + 1] and p[i] > 0.5:
            found += 1
            if found == wanted:
                return float(w[i])
    raise OutOfRange(
        f"found {found} flip maxima above 0.5 in [{w[0]:g}, {w[-1]:g}] ps, "
        f"need {wanted} for a {n_pi}pi pulse"
    )


def process_fidelity(f_u: float, f_l: float, a_k_prime: float):
    """Per-input success probabilities and their minimum.

    The four entries cover inputs (00, 10, 01, 11): a bare flip, a flip
    there and back, a control flip followed by the blocked gate pulse, and
    both flips with residual leakage mixing in.
    """
    for name, v in (("f_u", f_u), ("f_l", f_l), ("a_k_prime", a_k_prime)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    per = (
        f_u,
        f_u ** 2 + (1.0 - f_u) ** 2,
        (1.0 - a_k_prime) * f_l,
        (1.0 - a_k_prime) * f_u * f_l + a_k_prime * (1.0 - f_u) * f_l,
    )
    return per, min(per)


def fidelity_report(a_k: float, a_k_prime: float, f_u: float, f_l: float) -> FidelityReport:
    """Bundle leakage amplitudes and flip fidelities into a report."""
    per, f_prime = process_fidelity(f_u, f_l, a_k_prime)
    return FidelityReport(
        a_k=a_k,
        f=1.0 - a_k,
        a_k_prime=a_k_prime,
        f_u=f_u,
        f_l=f_l,
        f_prime=f_prime,
        per_process=per,
    )


def _single_flip(
    params: QubitPairParams,
    width: float,
    channel: str,
    dec: DecoherenceParams,
    cfg: IntegrationConfig,
) -> float:
    if channel == "upper":
        sched = rabi_schedule(
            width,
            eps_u0=params.eps_u0,
            eps_l0=params.eps_l0,
            rise=DRIVE_EDGE_PS,
            fall=DRIVE_EDGE_PS,
        )
    else:
        pulse = Pulse(Channel.LOWER, 0.0, width, -params.eps_l0,
                      DRIVE_EDGE_PS, DRIVE_EDGE_PS)
        sched = Schedule(params.eps_u0, params.eps_l0, (pulse,), width)
    pops = run_to_populations(sched, params, dec, cfg)
    if channel == "upper":
        return float(pops[2] + pops[3])
    return float(pops[1] + pops[3])


def pulse_flip_fidelity(
    params: QubitPairParams,
    dec: DecoherenceParams,
    n_pi: int,
    channel: str = "upper",
    cfg: IntegrationConfig = IntegrationConfig(),
) -> float:
    """Flip probability of a single-qubit n*pi pulse (n odd).

    The chosen qubit is driven to its balance point while the other idles
    at its deep baseline detuning.  The pulse width is calibrated first on
    a decoherence-free scan, then the flip probability is evaluated with
    the requested decoherence.
    """
    if n_pi < 1 or n_pi % 2 == 0:
        raise ValueError(f"n_pi must be a positive odd integer, got {n_pi}")
    if channel not in ("upper", "lower"):
        raise ValueError(f"channel must be 'upper' or 'lower', got {channel!r}")
    widths = np.arange(4.0, 86.0 * (n_pi + 1), 2.0)
    ideal = DecoherenceParams()
    flips = [_single_flip(params, w, channel, ideal, cfg) for w in widths]
    w_n = locate_flip_width(widths, flips, n_pi)
    return _single_flip(params, w_n, channel, dec, cfg)


def cnot_success_min(d) -> float:
    """Smallest correct-output probability of a tomography matrix.

    Row/column order is (00, 10, 01, 11); the gate maps 00->10, 10->00 and
    leaves 01, 11 in place, so the relevant entries are d[0][1], d[1][0],
    d[2][2] and d[3][3].
    """
    arr = np.asarray(getattr(d, "d", d), dtype=float)
    if arr.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {arr.shape}")
    return float(min(arr[0, 1], arr[1, 0], arr[2, 2], arr[3, 3]))


def analytic_two_pulse(alpha: float, beta: float) -> ProbabilityPair:
    """Closed-form two-pulse outcome for rotation angles (alpha, beta).

    The lower pulse rotates by beta, the conditional upper pulse by alpha;
    the upper rotation only proceeds in the lower-|0> branch.
    """
    cb2 = math.cos(beta) ** 2
    return ProbabilityPair(
        p_u0=1.0 - math.sin(alpha) ** 2 * cb2,
        p_l0=cb2,
    )


def analytic_lzs(u_squared: float, alpha: float) -> ProbabilityPair:
    """Closed-form interference outcome: lower survival u2 gates an upper
    rotation by alpha."""
    if not 0.0 <= u_squared <= 1.0:
        raise ValueError(f"u_squared must lie in [0, 1], got {u_squared}")
    return ProbabilityPair(
        p_u0=1.0 - u_squared * math.sin(alpha) ** 2,
        p_l0=u_squared,
    )


def analytic_controlled_rotation(v_squared: float, u_squared: float) -> ProbabilityPair:
    """Generalized form with both qubits swept: upper flip weight v2 is
    gated by lower survival u2."""
    for name, v in (("v_squared", v_squared), ("u_squared", u_squared)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return ProbabilityPair(
        p_u0=1.0 - v_squared * u_squared,
        p_l0=u_squared,
    )
