import math

import numpy as np
import pytest

from piqfc.metrics import (
    all_metrics,
    binary_entropy,
    concurrence,
    eof,
    eof_from_concurrence,
    fidelity_at,
    max_fidelity,
    purity,
)
from piqfc.quantum_core import (
    SY,
    TwoQubitState,
    apply_local,
    normalize_to_state,
    phi_plus,
    random_state,
    random_unitary,
    u_theta,
)
from piqfc.source_model import werner_state

PHI = TwoQubitState.from_ket(phi_plus())


def concurrence_by_non_hermitian_spectrum(rho):
    """Textbook route: square roots of the eigenvalues of rho * rho_tilde."""
    yy = np.kron(SY, SY)
    w = np.linalg.eigvals(rho @ yy @ rho.conj() @ yy)
    lam = np.sort(np.sqrt(np.clip(w.real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def pure_state_concurrence(psi):
    # |<psi| Y(x)Y |psi*>| for a pure state
    return abs(psi @ np.kron(SY, SY) @ psi)


GRID = np.radians(np.arange(-17999, 18001) / 100)


def grid_kets(grid):
    return np.stack([u_theta(t) @ phi_plus() for t in grid])


GRID_KETS = grid_kets(GRID)


def grid_fidelities(state, grid, kets=None):
    """<phi+| U_t^dag rho U_t |phi+> for every t, built from the kets."""
    kets = grid_kets(grid) if kets is None else kets
    return np.real(np.einsum("ki,ij,kj->k", kets.conj(), state.rho, kets))


def test_grid_helper_matches_pointwise():
    rho = random_state(np.random.default_rng(1))
    grid = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(grid_fidelities(rho, grid), [fidelity_at(rho, t) for t in grid])


def test_concurrence_examples():
    assert concurrence(PHI) == pytest.approx(1, abs=1e-12)
    assert concurrence(TwoQubitState.maximally_mixed()) == pytest.approx(0, abs=1e-12)
    assert concurrence(werner_state(0.6928)) == pytest.approx(0.5392, abs=1e-12)


@pytest.mark.parametrize("seed", range(25))
def test_concurrence_matches_textbook_route(seed):
    rho = random_state(np.random.default_rng(seed), rank=1 + seed % 4)
    assert concurrence(rho) == pytest.approx(concurrence_by_non_hermitian_spectrum(rho.rho), abs=1e-7)


@pytest.mark.parametrize("seed", range(10))
def test_concurrence_pure_states(seed):
    rng = np.random.default_rng(100 + seed)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    assert concurrence(TwoQubitState.from_ket(psi)) == pytest.approx(
        pure_state_concurrence(psi), abs=1e-7
    )


def test_eof_examples():
    assert eof(PHI) == pytest.approx(1, abs=1e-14)
    assert eof(TwoQubitState.maximally_mixed()) == 0.0
    # h((1 + sqrt(1 - C^2)) / 2) at C = (3p - 1)/2, p = 0.6928
    c = (3 * 0.6928 - 1) / 2
    x = (1 + math.sqrt(1 - c * c)) / 2
    h = -x * math.log2(x) - (1 - x) * math.log2(1 - x)
    assert eof(werner_state(0.6928)) == pytest.approx(h, abs=1e-12)
    assert h == pytest.approx(0.398, abs=5e-4)


def test_binary_entropy_edges():
    assert binary_entropy(0) == 0 and binary_entropy(1) == 0
    assert binary_entropy(0.5) == pytest.approx(1)
    assert eof_from_concurrence(1.0) == 1.0
    assert eof_from_concurrence(0.0) == 0.0


def test_eof_zero_iff_concurrence_zero():
    for p in np.linspace(0, 1, 101):
        s = werner_state(p)
        assert (eof(s) <= 1e-12) == (concurrence(s) <= 1e-12)


def test_eof_monotone_in_concurrence():
    cs = np.linspace(0, 1, 1001)
    es = [eof_from_concurrence(c) for c in cs]
    assert np.all(np.diff(es) >= 0)


def test_purity_examples():
    assert purity(PHI) == pytest.approx(1)
    assert purity(TwoQubitState.maximally_mixed()) == pytest.approx(0.25)
    assert purity(werner_state(0.6928)) == pytest.approx(0.6928**2 + (1 - 0.6928**2) / 4)


def test_max_fidelity_examples():
    f, th = max_fidelity(PHI)
    assert f == pytest.approx(1) and th == pytest.approx(0)
    theta0 = math.radians(-65)
    rotated = TwoQubitState.from_ket(u_theta(theta0) @ phi_plus())
    f, th = max_fidelity(rotated)
    assert f == pytest.approx(1, abs=1e-12)
    assert math.degrees(th) == pytest.approx(-65, abs=1e-9)
    f, th = max_fidelity(werner_state(0.6928))
    assert f == pytest.approx(0.6928 + 0.3072 / 4, abs=1e-12)
    assert th == pytest.approx(0, abs=1e-12)


def test_max_fidelity_zero_coherence_convention():
    assert max_fidelity(TwoQubitState.maximally_mixed()) == (0.25, 0.0)


@pytest.mark.parametrize("seed", range(10))
def test_max_fidelity_against_grid(seed):
    rho = random_state(np.random.default_rng(seed))
    values = grid_fidelities(rho, GRID, GRID_KETS)
    best = GRID[int(np.argmax(values))]
    f, th = max_fidelity(rho)
    # a grid can only undershoot the true maximum, by at most
    # |rho_03| (1 - cos(half step))
    slack = abs(rho.rho[0, 3]) * (1 - math.cos(math.radians(0.005)))
    assert -1e-12 <= f - max(values) <= slack + 1e-12
    assert abs(math.remainder(th - best, 2 * math.pi)) <= math.radians(0.005) + 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, rank=2)
    moved = normalize_to_state(apply_local(rho, random_unitary(rng), random_unitary(rng)))
    assert concurrence(moved) == pytest.approx(concurrence(rho), abs=1e-9)
    assert eof(moved) == pytest.approx(eof(rho), abs=1e-9)


@pytest.mark.parametrize("shift", [0.3, -2.0, 3.1])
def test_max_fidelity_covariant_under_u_theta(shift):
    rho = random_state(np.random.default_rng(9))
    u = u_theta(shift)
    moved = normalize_to_state(u @ rho.rho @ u.conj().T)
    f0, t0 = max_fidelity(rho)
    f1, t1 = max_fidelity(moved)
    assert f1 == pytest.approx(f0, abs=1e-12)
    assert math.remainder(t1 - (t0 + shift), 2 * math.pi) == pytest.approx(0, abs=1e-9)


def test_max_fidelity_unchanged_by_factor_swap():
    rho = random_state(np.random.default_rng(12))
    swap = np.eye(4)[[0, 2, 1, 3]]
    swapped = normalize_to_state(swap @ rho.rho @ swap.T)
    f0, t0 = max_fidelity(rho)
    f1, t1 = max_fidelity(swapped)
    assert f1 == pytest.approx(f0, abs=1e-14)
    assert t1 == pytest.approx(t0, abs=1e-12)


def test_metric_ranges():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = all_metrics(random_state(rng, rank=int(rng.integers(1, 5))))
        assert 0 <= m.concurrence <= 1 + 1e-12
        assert 0 <= m.eof <= 1
        assert 0.25 - 1e-12 <= m.purity <= 1 + 1e-12
        assert 0 <= m.max_fidelity <= 1 + 1e-12
        assert -180 < m.theta_star_deg <= 180
