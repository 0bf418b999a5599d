"""Static model of two capacitively coupled double-dot charge qubits.

Each qubit is a two-level charge system with detuning eps and tunnel
coupling delta; the capacitive interaction J raises the energy of the
|11> configuration only.  Working units throughout the package: energies
in ueV, times in ps, temperatures in K.  Frequencies never appear raw --
convert with :func:`ghz_to_uev` / :func:`uev_to_ghz`.

Basis convention: product states ordered |00>, |01>, |10>, |11> with the
upper qubit as the first (most significant) bit, i.e. index = 2*u + l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import OverlapAmbiguity, StateInvalid

__all__ = [
    "HBAR_UEV_PS",
    "PLANCK_H_UEV_PS",
    "PLANCK_H_UEV_PER_GHZ",
    "K_B_UEV_PER_K",
    "PhysicalConstants",
    "ProbabilityPair",
    "QubitPairParams",
    "default_params",
    "ghz_to_uev",
    "uev_to_ghz",
    "build_hamiltonian",
    "eigen_symmetric",
    "thermal_initial_state",
    "probabilities",
    "populations",
    "to_real_form",
    "from_real_form",
    "validate_density_matrix",
]

# CODATA values expressed in the package working units.
HBAR_UEV_PS = 658.2119569            # hbar [ueV*ps]
PLANCK_H_UEV_PS = 4135.667696        # h [ueV*ps]
PLANCK_H_UEV_PER_GHZ = 4.135667696   # h [ueV/GHz]; E = h*f for f in GHz
K_B_UEV_PER_K = 86.17333262          # Boltzmann constant [ueV/K]


@dataclass(frozen=True)
class PhysicalConstants:
    """Bundle of the physical constants in working units."""

    hbar: float = HBAR_UEV_PS
    planck_h: float = PLANCK_H_UEV_PS
    k_boltzmann: float = K_B_UEV_PER_K


def ghz_to_uev(frequency_ghz: float) -> float:
    """Energy splitting [ueV] of an oscillation at ``frequency_ghz``."""
    if frequency_ghz < 0:
        raise ValueError(f"frequency must be >= 0, got {frequency_ghz}")
    return PLANCK_H_UEV_PER_GHZ * frequency_ghz


def uev_to_ghz(energy_uev: float) -> float:
    """Inverse of :func:`ghz_to_uev`."""
    if energy_uev < 0:
        raise ValueError(f"energy must be >= 0, got {energy_uev}")
    return energy_uev / PLANCK_H_UEV_PER_GHZ


class ProbabilityPair(NamedTuple):
    """Ground-state (|0>) occupation probability of each qubit."""

    p_u0: float
    p_l0: float


@dataclass(frozen=True)
class QubitPairParams:
    """Device working point: tunnel couplings, interaction and baselines.

    Attributes:
        delta_u: upper-qubit tunnel coupling [ueV], > 0.
        delta_l: lower-qubit tunnel coupling [ueV], > 0.
        j_coupling: capacitive interaction J [ueV], >= 0.
        eps_u0: upper-qubit baseline detuning [ueV].
        eps_l0: lower-qubit baseline detuning [ueV].
        temperature: electron temperature [K], > 0 (math.inf allowed).
    """

    delta_u: float
    delta_l: float
    j_coupling: float
    eps_u0: float = -200.0
    eps_l0: float = -200.0
    temperature: float = 0.010

    def __post_init__(self):
        if not self.delta_u > 0:
            raise ValueError(f"delta_u must be > 0, got {self.delta_u}")
        if not self.delta_l > 0:
            raise ValueError(f"delta_l must be > 0, got {self.delta_l}")
        if not self.j_coupling >= 0:
            raise ValueError(f"j_coupling must be >= 0, got {self.j_coupling}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        for name in ("eps_u0", "eps_l0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def in_operating_regime(self) -> bool:
        """True when |baseline| > J > tunnel couplings (not enforced anywhere).

        This is the hierarchy the conditional-rotation protocols assume:
        qubits parked far below their balance points, interaction strong
        compared to the splittings.
        """
        dmax = max(self.delta_u, self.delta_l)
        return (
            self.j_coupling > dmax
            and abs(self.eps_u0) > self.j_coupling
            and abs(self.eps_l0) > self.j_coupling
        )


def default_params() -> QubitPairParams:
    """Device parameters used throughout the bundled experiments.

    Tunnel couplings at 6.2 / 6.0 GHz, J = 119 ueV, both qubits parked at
    -200 ueV, electron temperature 10 mK.
    """
    return QubitPairParams(
        delta_u=ghz_to_uev(6.2),
        delta_l=ghz_to_uev(6.0),
        j_coupling=119.0,
        eps_u0=-200.0,
        eps_l0=-200.0,
        temperature=0.010,
    )


def build_hamiltonian(params: QubitPairParams, eps_u: float, eps_l: float) -> np.ndarray:
    """4x4 Hamiltonian [ueV] at instantaneous detunings (eps_u, eps_l).

    H = (eps_U sz + delta_U sx)/2 (x) I + I (x) (eps_L sz + delta_L sx)/2
        + J |1><1| (x) |1><1|

    delta_U/2 sits on the upper-bit-flip positions, delta_L/2 on the
    lower-bit-flip positions; double flips are zero.  J raises only the
    |11> diagonal.
    """
    du = 0.5 * params.delta_u
    dl = 0.5 * params.delta_l
    return np.array(
        [
            [0.5 * (eps_u + eps_l), dl, du, 0.0],
            [dl, 0.5 * (eps_u - eps_l), 0.0, du],
            [du, 0.0, 0.5 * (-eps_u + eps_l), dl],
            [0.0, du, dl, 0.5 * (-eps_u - eps_l) + params.j_coupling],
        ]
    )


def eigen_symmetric(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a real
    symmetric matrix."""
    evals, evecs = np.linalg.eigh(h)
    return evals, evecs


def thermal_initial_state(
    params: QubitPairParams,
    eps_u: float | None = None,
    eps_l: float | None = None,
) -> np.ndarray:
    """Thermal starting state, diagonal in the charge basis.

    Each charge-basis slot is weighted by the Boltzmann factor of the
    eigenvalue whose eigenvector overlaps that slot the most (the adiabatic
    label far from any balance point).  Raises
    :class:`~chargesim.errors.OverlapAmbiguity` when that labelling is not
    clean -- i.e. the state was requested too close to a balance point.
    """
    if eps_u is None:
        eps_u = params.eps_u0
    if eps_l is None:
        eps_l = params.eps_l0
    evals, evecs = eigen_symmetric(build_hamiltonian(params, eps_u, eps_l))

    assigned = []
    energies = np.empty(4)
    for b in range(4):
        overlaps = evecs[b, :] ** 2
        order = np.argsort(overlaps)
        if overlaps[order[-1]] - overlaps[order[-2]] < 1e-6:
            raise OverlapAmbiguity(
                f"charge state {b:02b}: top eigenvector overlaps differ by "
                f"{overlaps[order[-1]] - overlaps[order[-2]]:.2e} at "
                f"(eps_u={eps_u}, eps_l={eps_l}); too close to a balance point"
            )
        assigned.append(int(order[-1]))
        energies[b] = evals[order[-1]]
    if len(set(assigned)) != 4:
        raise OverlapAmbiguity(
            f"eigenvector assignment {assigned} is not a permutation at "
            f"(eps_u={eps_u}, eps_l={eps_l}); too close to a balance point"
        )

    if math.isinf(params.temperature):
        weights = np.full(4, 0.25)
    else:
        kt = K_B_UEV_PER_K * params.temperature
        weights = np.exp(-(energies - energies.min()) / kt)
        weights /= weights.sum()
    return np.diag(weights).astype(np.complex128)


def probabilities(rho: np.ndarray) -> ProbabilityPair:
    """(p_u0, p_l0) read off the diagonal of a density matrix.

    Upper qubit in |0> on basis states 0,1; lower qubit in |0> on 0,2.
    """
    d = rho.diagonal().real
    return ProbabilityPair(p_u0=float(d[0] + d[1]), p_l0=float(d[0] + d[2]))


def populations(rho: np.ndarray) -> np.ndarray:
    """Charge-basis populations, i.e. the real diagonal of rho."""
    return np.ascontiguousarray(rho.diagonal().real)


def to_real_form(rho: np.ndarray) -> np.ndarray:
    """Pack a Hermitian rho into one real matrix W = Re(rho) + Im(rho).

    The symmetric part of W carries Re(rho), the antisymmetric part
    Im(rho); the diagonal of W equals the populations.
    """
    return np.ascontiguousarray(rho.real + rho.imag)


def from_real_form(w: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`to_real_form`."""
    sym = 0.5 * (w + w.T)
    antisym = 0.5 * (w - w.T)
    return sym + 1j * antisym


def validate_density_matrix(
    rho: np.ndarray, herm_tol: float = 1e-10, trace_tol: float = 1e-9
) -> None:
    """Raise :class:`~chargesim.errors.StateInvalid` unless rho is a valid
    4x4 density matrix (Hermitian, unit trace, diagonal within [0, 1])."""
    if rho.shape != (4, 4):
        raise StateInvalid(f"expected shape (4, 4), got {rho.shape}")
    if not np.all(np.isfinite(rho.real)) or not np.all(np.isfinite(rho.imag)):
        raise StateInvalid("non-finite entries")
    herm_err = np.abs(rho - rho.conj().T).max()
    if herm_err > herm_tol:
        raise StateInvalid(f"not Hermitian: max deviation {herm_err:.3e}")
    trace_err = abs(rho.trace().real - 1.0)
    if trace_err > trace_tol:
        raise StateInvalid(f"trace deviates from 1 by {trace_err:.3e}")
    d = rho.diagonal().real
    if np.any(d < -trace_tol) or np.any(d > 1.0 + trace_tol):
        raise StateInvalid(f"diagonal outside [0, 1]: {d}")
