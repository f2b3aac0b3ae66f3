"""Atom-photon entangled states from the write process and their read-out.

Before read-out the first qubit is the atomic spin-wave rail
``{k+, k-}`` and the second is the AS photon polarization, with the
path-to-polarization mapping ``path+ -> H`` and ``path- -> V``. Read-out
maps ``k+ -> H_S`` and ``k- -> V_S`` so the same 4x4 matrix becomes the
S/AS polarization state in the package basis (HH, HV, VH, VV).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .qfc_channel import ZeroSuccessError
from .quantum_core import I2, TwoQubitState, dagger, normalize_to_state, phi_plus, u_theta


@dataclass(frozen=True)
class SourceConfig:
    """Write-process amplitudes plus a minimal pair-level noise model.

    ``dephasing`` damps the k+/k- coherence by ``1 - dephasing``;
    ``white_noise`` mixes in ``I/4`` with that weight; ``read_phase``
    (radians) is the relative phase picked up by the k- branch.
    """

    alpha: complex = 1 / math.sqrt(2)
    beta: complex = 1 / math.sqrt(2)
    dephasing: float = 0.0
    white_noise: float = 0.0
    read_phase: float = 0.0

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm!r}, must be 1")
        for name in ("dephasing", "white_noise"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not math.isfinite(self.read_phase):
            raise ValueError("read_phase must be finite")


@dataclass(frozen=True)
class ScenarioMetadata:
    """Experimental constants carried into reports; no computational role."""

    detuning_MHz: float = 10.0
    write_pulse_ns: float = 70.0
    read_pulse_ns: float = 100.0
    init_pulse_ns: float = 200.0
    trials_per_cycle: int = 990
    mot_load_ms: float = 20.0
    coincidence_window_ns: float = 64.0
    wavelength_S_nm: float = 780.0
    wavelength_AS_nm: float = 780.0


def atom_photon_state(cfg: SourceConfig) -> TwoQubitState:
    psi = np.zeros(4, dtype=complex)
    psi[0] = cfg.alpha
    psi[3] = cfg.beta * cmath.exp(1j * cfg.read_phase)
    rho = np.outer(psi, psi.conj())
    # the only path coherence sits between |k+,H> and |k-,V>
    rho[0, 3] *= 1 - cfg.dephasing
    rho[3, 0] *= 1 - cfg.dephasing
    rho = (1 - cfg.white_noise) * rho + cfg.white_noise * np.eye(4) / 4
    return normalize_to_state(rho)


def read_out(state: TwoQubitState, readout_balance: float = 0.5) -> TwoQubitState:
    """Transfer the atomic rail to the Stokes photon polarization.

    The transfer itself is a relabeling. Unequal read efficiencies for the
    two spin waves act as the filter ``diag(sqrt(w), sqrt(1 - w))`` on the
    former atomic qubit, followed by renormalization.
    """
    if not 0 <= readout_balance <= 1:
        raise ValueError("readout_balance must lie in [0, 1]")
    if readout_balance == 0.5:
        return state
    k = np.diag([math.sqrt(readout_balance), math.sqrt(1 - readout_balance)])
    op = np.kron(k, I2)
    out = op @ state.rho @ dagger(op)
    if np.trace(out).real <= 1e-14:
        raise ZeroSuccessError("read-out filter removes the whole state")
    return normalize_to_state(out)


def werner_state(p: float, theta: float = 0.0) -> TwoQubitState:
    """``p U|phi+><phi+|U^dag + (1 - p) I/4`` with ``U = exp(-i theta Z/2) (x) I``."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    psi = u_theta(theta) @ phi_plus()
    rho = p * np.outer(psi, psi.conj()) + (1 - p) * np.eye(4) / 4
    return normalize_to_state(rho)


def werner_purity(p: float) -> float:
    return p * p + (1 - p * p) / 4


def werner_concurrence(p: float) -> float:
    return max(0.0, (3 * p - 1) / 2)


def werner_fidelity(p: float) -> float:
    return p + (1 - p) / 4
