"""Small dense linear algebra for one- and two-qubit polarization states.

Matrices are plain ``numpy`` complex arrays. The two-qubit basis is fixed
everywhere in the package as ``(HH, HV, VH, VV)`` where the first factor is
the Stokes (S) photon and the second factor is the anti-Stokes (AS) photon,
converted or not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-8
STATE_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

KET_H = np.array([1, 0], dtype=complex)
KET_V = np.array([0, 1], dtype=complex)


class QuantumCoreError(ValueError):
    pass


class NotHermitianError(QuantumCoreError):
    pass


class NotPSDError(QuantumCoreError):
    pass


class ZeroTraceError(QuantumCoreError):
    pass


class InvalidStateError(QuantumCoreError):
    pass


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` into a finite 2-D complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def _check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    if m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"matrix is not square: {m.shape}")
    err = np.max(np.abs(m - dagger(m)))
    if err > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max |m - m^dag| = {err:.3g})")


def hermitian_eigensystem(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray of float, sorted descending
    eigenvectors : ndarray, columns matched to ``eigenvalues``

    Raises
    ------
    NotHermitianError
        If ``m`` deviates from its adjoint by more than 1e-8 in any entry.
    """
    m = as_matrix(m)
    _check_hermitian(m)
    herm = 0.5 * (m + dagger(m))
    w, v = np.linalg.eigh(herm)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def matrix_sqrt_psd(m) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix."""
    w, v = hermitian_eigensystem(m)
    if w[-1] < -HERMITIAN_TOL:
        raise NotPSDError(f"matrix has negative eigenvalue {w[-1]:.3g}")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)
    return 0.5 * (root + dagger(root))


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Validated 4x4 density operator over (HH, HV, VH, VV).

    Construction checks Hermiticity, unit trace and positivity at 1e-10.
    Use :func:`normalize_to_state` to build one from an unnormalized or
    slightly non-physical matrix.
    """

    rho: np.ndarray

    def __post_init__(self):
        rho = as_matrix(self.rho)
        if rho.shape != (4, 4):
            raise InvalidStateError(f"two-qubit state must be 4x4, got {rho.shape}")
        if np.max(np.abs(rho - dagger(rho))) > STATE_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > STATE_TOL:
            raise InvalidStateError(f"density matrix trace is {np.trace(rho).real!r}, not 1")
        w = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
        if w[0] < -STATE_TOL:
            raise InvalidStateError(f"density matrix has negative eigenvalue {w[0]:.3g}")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_ket(cls, psi) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex).reshape(4)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls) -> "TwoQubitState":
        return cls(np.eye(4, dtype=complex) / 4)


def polarization_ket(amplitudes) -> np.ndarray:
    """Normalized single-photon polarization ket over (H, V)."""
    a = np.asarray(amplitudes, dtype=complex).reshape(2)
    n = np.linalg.norm(a)
    if not np.isfinite(n) or n == 0:
        raise ValueError("polarization ket must have nonzero finite norm")
    return a / n


def normalize_to_state(m) -> TwoQubitState:
    """Turn a Hermitian 4x4 matrix with positive trace into a valid state.

    Eigenvalues below -1e-10 are clipped to zero before renormalizing; the
    clipping also removes any roundoff-level negativity above that bound.
    """
    m = as_matrix(m)
    if m.shape != (4, 4):
        raise InvalidStateError(f"expected a 4x4 matrix, got {m.shape}")
    _check_hermitian(m)
    tr = np.trace(m).real
    if tr <= 1e-14:
        raise ZeroTraceError(f"trace {tr:.3g} is not positive")
    w, v = np.linalg.eigh(0.5 * (m + dagger(m)) / tr)
    w = np.clip(w, 0.0, None)
    rho = (v * w) @ dagger(v)
    rho = 0.5 * (rho + dagger(rho))
    return TwoQubitState(rho / np.trace(rho).real)


def trace_distance(a, b) -> float:
    ra = a.rho if isinstance(a, TwoQubitState) else as_matrix(a)
    rb = b.rho if isinstance(b, TwoQubitState) else as_matrix(b)
    d = ra - rb
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + dagger(d))))))


def state_fidelity(a: TwoQubitState, b: TwoQubitState) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(a) b sqrt(a)))**2``."""
    sa = matrix_sqrt_psd(a.rho)
    inner = sa @ b.rho @ sa
    w = np.linalg.eigvalsh(0.5 * (inner + dagger(inner)))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


def phi_plus() -> np.ndarray:
    return np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def rotation_z(theta: float) -> np.ndarray:
    """``exp(-i theta Z / 2)`` on one polarization qubit."""
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def u_theta(theta: float) -> np.ndarray:
    """Phase rotation ``exp(-i theta Z/2)`` on the S factor, identity on AS."""
    return np.kron(rotation_z(theta), I2)


def apply_local(state: TwoQubitState, op_s=None, op_as=None) -> np.ndarray:
    """Conjugate ``state`` by ``op_s (x) op_as`` without renormalizing."""
    a = I2 if op_s is None else np.asarray(op_s, dtype=complex)
    b = I2 if op_as is None else np.asarray(op_as, dtype=complex)
    k = np.kron(a, b)
    return k @ state.rho @ dagger(k)


def random_state(rng: np.random.Generator, rank: int = 4) -> TwoQubitState:
    """Random two-qubit state from a Ginibre matrix of the given rank."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ dagger(g)
    return TwoQubitState(rho / np.trace(rho).real)


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
