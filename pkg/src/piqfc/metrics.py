"""Entanglement and quality figures for two-qubit polarization states."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .quantum_core import (
    SY,
    TwoQubitState,
    hermitian_eigensystem,
    phi_plus,
    u_theta,
)

_SYSY = np.kron(SY, SY)


@dataclass(frozen=True)
class MetricsReport:
    concurrence: float
    eof: float
    purity: float
    max_fidelity: float
    theta_star_deg: float

    def to_dict(self) -> dict:
        return asdict(self)


def concurrence(state: TwoQubitState) -> float:
    """Wootters concurrence.

    The lambdas (square roots of the eigenvalues of ``rho rho~``) are taken
    as singular values of ``tau = X^T (Y (x) Y) X``, where the columns of X
    are the ensemble vectors ``sqrt(w_i) v_i``. This avoids the square root
    of near-zero eigenvalues, which loses half the digits for
    rank-deficient states.
    """
    w, v = hermitian_eigensystem(state.rho)
    x = v * np.sqrt(np.clip(w, 0.0, None))
    lam = np.linalg.svd(x.T @ _SYSY @ x, compute_uv=False)
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def eof_from_concurrence(c: float) -> float:
    if c <= 0.0:
        return 0.0
    if c >= 1.0:
        return 1.0
    return binary_entropy(0.5 * (1 + math.sqrt(1 - c * c)))


def eof(state: TwoQubitState) -> float:
    """Entanglement of formation in ebits."""
    return eof_from_concurrence(concurrence(state))


def purity(state: TwoQubitState) -> float:
    rho = state.rho
    return float(np.real(np.sum(rho * rho.T)))


def max_fidelity(state: TwoQubitState) -> tuple[float, float]:
    """Fidelity to ``U_theta |phi+>`` maximized over theta.

    ``U_theta = exp(-i theta Z/2) (x) I`` on the S factor. The overlap is
    ``(rho_00 + rho_33)/2 + Re(exp(i theta) rho_03)``, so the optimum sits
    at ``theta = -arg(rho_03)``.

    Returns
    -------
    (F, theta_star) with theta_star in radians in (-pi, pi]; zero when the
    HH-VV coherence vanishes.
    """
    rho = state.rho
    coh = rho[0, 3]
    f = 0.5 * (rho[0, 0].real + rho[3, 3].real) + abs(coh)
    theta = 0.0 if coh == 0 else -math.atan2(coh.imag, coh.real)
    if theta <= -math.pi:
        theta += 2 * math.pi
    return float(f), theta


def fidelity_at(state: TwoQubitState, theta: float) -> float:
    """``<phi+| U_theta^dag rho U_theta |phi+>`` evaluated directly."""
    psi = u_theta(theta) @ phi_plus()
    return float(np.real(psi.conj() @ state.rho @ psi))


def all_metrics(state: TwoQubitState) -> MetricsReport:
    c = concurrence(state)
    f, th = max_fidelity(state)
    return MetricsReport(
        concurrence=c,
        eof=eof_from_concurrence(c),
        purity=purity(state),
        max_fidelity=f,
        theta_star_deg=math.degrees(th),
    )


METRIC_NAMES = ("concurrence", "eof", "purity", "max_fidelity", "theta_star_deg")


def metric_value(state: TwoQubitState, name: str) -> float:
    return getattr(all_metrics(state), name)
