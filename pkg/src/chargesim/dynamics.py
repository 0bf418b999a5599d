"""Master-equation time evolution under a pulse schedule.

The equation of motion is

    drho/dt = -(i/hbar) [H(t), rho] - Gamma1 (rho - rho(0)) - D2(rho)

where D2 damps every off-diagonal element at the rate 1/T2* and leaves
the diagonal alone (so the trace is conserved), and the Gamma1 term
relaxes toward the starting state.  The same dynamics is available in a
real-matrix form W = Re(rho) + Im(rho), which evolves as

    dW/dt = -(1/hbar) [H(t), W^T] - Gamma1 (W - W(0)) - D2(W)

and is what the sweep runners integrate (same trajectory, half the
arithmetic).  Integration is classical fixed-step RK4 with steps split at
every waveform kink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import StateInvalid, StepTooLarge
from .model import (
    HBAR_UEV_PS,
    ProbabilityPair,
    QubitPairParams,
    from_real_form,
    thermal_initial_state,
    to_real_form,
    validate_density_matrix,
)
from .pulses import Schedule, piecewise_segments

__all__ = [
    "DecoherenceParams",
    "IntegrationConfig",
    "Trajectory",
    "evolve_complex",
    "evolve_real",
    "run_to_populations",
    "run_to_probabilities",
]

# dt * (max energy)/hbar must stay below this phase advance per step
_MAX_PHASE_PER_STEP = 0.1


@dataclass(frozen=True)
class DecoherenceParams:
    """Dephasing time T2* [ps] (inf disables) and relaxation rate [1/ps]."""

    t2_star: float = math.inf
    gamma1: float = 0.0

    def __post_init__(self):
        if not self.t2_star > 0:
            raise ValueError(f"t2_star must be > 0, got {self.t2_star}")
        if self.gamma1 < 0:
            raise ValueError(f"gamma1 must be >= 0, got {self.gamma1}")

    @property
    def gamma2(self) -> float:
        return 0.0 if math.isinf(self.t2_star) else 1.0 / self.t2_star


@dataclass(frozen=True)
class IntegrationConfig:
    """Step size [ps] and trajectory recording cadence (0 = final only)."""

    dt: float = 0.05
    record_stride: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.record_stride < 0:
            raise ValueError("record_stride must be >= 0")


@dataclass
class Trajectory:
    """Recorded samples along one integration run.

    ``states`` holds whatever form was integrated: W matrices from
    :func:`evolve_real`, density matrices from :func:`evolve_complex`.
    """

    times: np.ndarray
    p_u0: np.ndarray
    p_l0: np.ndarray
    states: np.ndarray | None = None


def _segments_and_steps(schedule: Schedule, params: QubitPairParams, cfg: IntegrationConfig):
    ts, au, bu, al, bl = piecewise_segments(schedule)
    if len(ts) < 2:
        return None  # zero-length schedule: nothing to integrate
    # enforce the step bound against the stiffest Hamiltonian on the path;
    # linear segments take their extremes at the segment ends
    seg_len = np.diff(ts)
    eu_ends = np.concatenate([au, au + bu * seg_len])
    el_ends = np.concatenate([al, al + bl * seg_len])
    max_norm = (
        0.5 * (np.abs(eu_ends).max() + np.abs(el_ends).max())
        + params.j_coupling
        + 0.5 * (params.delta_u + params.delta_l)
    )
    if cfg.dt * max_norm / HBAR_UEV_PS >= _MAX_PHASE_PER_STEP:
        raise StepTooLarge(
            f"dt={cfg.dt} ps advances {cfg.dt * max_norm / HBAR_UEV_PS:.3f} rad "
            f"per step at the stiffest point (limit {_MAX_PHASE_PER_STEP}); "
            "reduce IntegrationConfig.dt"
        )
    seg_n = np.maximum(1, np.ceil(np.diff(ts) / cfg.dt)).astype(np.int64)
    return ts, au, bu, al, bl, seg_n


def _alloc_records(seg_n, stride: int, dtype):
    if stride <= 0:
        return np.empty(0), np.empty((0, 4, 4), dtype=dtype)
    total = int(seg_n.sum())
    slots = total // stride + 2
    return np.empty(slots), np.empty((slots, 4, 4), dtype=dtype)


def evolve_real(
    w0: np.ndarray,
    schedule: Schedule,
    params: QubitPairParams,
    dec: DecoherenceParams = DecoherenceParams(),
    cfg: IntegrationConfig = IntegrationConfig(),
) -> tuple[np.ndarray, Trajectory]:
    """Integrate the real-form state W over the schedule.

    Returns the final W and the recorded trajectory (final sample only
    when ``record_stride`` is 0).
    """
    w0 = np.ascontiguousarray(np.asarray(w0, dtype=float))
    try:
        validate_density_matrix(from_real_form(w0))
    except StateInvalid as err:
        raise StateInvalid(f"initial W invalid: {err}") from None
    prep = _segments_and_steps(schedule, params, cfg)
    w = w0.copy()
    if prep is None:
        traj = _single_sample_trajectory(0.0, w)
        return w, traj
    ts, au, bu, al, bl, seg_n = prep
    rec_t, rec_w = _alloc_records(seg_n, cfg.record_stride, np.float64)
    n_rec = _kernels.rk4_real(
        w, ts, seg_n, au, bu, al, bl,
        params.delta_u, params.delta_l, params.j_coupling,
        HBAR_UEV_PS, dec.gamma1, dec.gamma2,
        cfg.record_stride, rec_t, rec_w,
    )
    traj = _pack_trajectory(rec_t, rec_w, n_rec, schedule.total_duration, w)
    return w, traj


def evolve_complex(
    rho0: np.ndarray,
    schedule: Schedule,
    params: QubitPairParams,
    dec: DecoherenceParams = DecoherenceParams(),
    cfg: IntegrationConfig = IntegrationConfig(),
) -> tuple[np.ndarray, Trajectory]:
    """Integrate the density matrix over the schedule (complex form)."""
    rho0 = np.ascontiguousarray(np.asarray(rho0, dtype=complex))
    validate_density_matrix(rho0)
    prep = _segments_and_steps(schedule, params, cfg)
    rho = rho0.copy()
    if prep is None:
        traj = _single_sample_trajectory(0.0, rho)
        return rho, traj
    ts, au, bu, al, bl, seg_n = prep
    rec_t, rec_rho = _alloc_records(seg_n, cfg.record_stride, np.complex128)
    n_rec = _kernels.rk4_complex(
        rho, ts, seg_n, au, bu, al, bl,
        params.delta_u, params.delta_l, params.j_coupling,
        HBAR_UEV_PS, dec.gamma1, dec.gamma2,
        cfg.record_stride, rec_t, rec_rho,
    )
    traj = _pack_trajectory(rec_t, rec_rho, n_rec, schedule.total_duration, rho)
    return rho, traj


def _single_sample_trajectory(t: float, state: np.ndarray) -> Trajectory:
    d = state.diagonal().real
    return Trajectory(
        times=np.array([t]),
        p_u0=np.array([d[0] + d[1]]),
        p_l0=np.array([d[0] + d[2]]),
        states=state[None, ...].copy(),
    )


def _pack_trajectory(rec_t, rec_states, n_rec, total_duration, final) -> Trajectory:
    if n_rec == 0:  # record_stride == 0: final sample only
        return _single_sample_trajectory(total_duration, final)
    times = rec_t[:n_rec].copy()
    states = rec_states[:n_rec].copy()
    diag = np.einsum("nii->ni", states).real
    return Trajectory(
        times=times,
        p_u0=diag[:, 0] + diag[:, 1],
        p_l0=diag[:, 0] + diag[:, 2],
        states=states,
    )


def run_to_populations(
    schedule: Schedule,
    params: QubitPairParams,
    dec: DecoherenceParams = DecoherenceParams(),
    cfg: IntegrationConfig = IntegrationConfig(),
) -> np.ndarray:
    """Thermal init at the schedule baselines, evolve, return the four
    charge-basis populations."""
    rho0 = thermal_initial_state(params, schedule.eps_u0, schedule.eps_l0)
    w, _ = evolve_real(to_real_form(rho0), schedule, params, dec, cfg)
    return w.diagonal().copy()


def run_to_probabilities(
    schedule: Schedule,
    params: QubitPairParams,
    dec: DecoherenceParams = DecoherenceParams(),
    cfg: IntegrationConfig = IntegrationConfig(),
) -> ProbabilityPair:
    """Same as :func:`run_to_populations`, reduced to (p_u0, p_l0)."""
    d = run_to_populations(schedule, params, dec, cfg)
    return ProbabilityPair(p_u0=float(d[0] + d[1]), p_l0=float(d[0] + d[2]))
