import math

import numpy as np
import pytest

from piqfc.measurement import (
    CountRecord,
    coincidence_probability,
    custom_plan,
    setting_for,
    simulate_counts,
    standard_plan,
)
from piqfc.metrics import max_fidelity
from piqfc.quantum_core import (
    TwoQubitState,
    phi_plus,
    random_state,
    state_fidelity,
    trace_distance,
)
from piqfc.tomography import (
    AllZeroCountsError,
    MleOptions,
    NotInformationallyCompleteError,
    TomographyError,
    bootstrap_metrics,
    derived_seed,
    mle_reconstruct,
    predicted_frequencies,
)

PHI = TwoQubitState.from_ket(phi_plus())
S36 = standard_plan("Standard36")
M16 = standard_plan("Minimal16")


def exact_records(state, plan, scale=1e6, weights=None):
    weights = np.ones(len(plan)) if weights is None else weights
    return [
        CountRecord(s, int(round(scale * w * coincidence_probability(state, s))), float(w))
        for s, w in zip(plan.settings, weights)
    ]


def test_phi_plus_round_trip():
    res = mle_reconstruct(exact_records(PHI, S36))
    assert res.converged
    assert state_fidelity(res.rho, PHI) >= 1 - 1e-6


def test_uniform_counts_give_maximally_mixed():
    recs = [CountRecord(s, 1000) for s in S36.settings]
    res = mle_reconstruct(recs)
    assert trace_distance(res.rho, TwoQubitState.maximally_mixed()) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_poisson_round_trip(seed):
    truth = random_state(np.random.default_rng(seed))
    recs = simulate_counts(truth, S36, 4e5, seed=1000 + seed)
    res = mle_reconstruct(recs)
    assert trace_distance(res.rho, truth) <= 0.01


def test_minimal16_round_trip():
    truth = random_state(np.random.default_rng(77))
    res = mle_reconstruct(exact_records(truth, M16, 1e9), MleOptions(convergence_tol=1e-14))
    assert trace_distance(res.rho, truth) < 1e-4


def test_weighted_records_round_trip():
    truth = random_state(np.random.default_rng(8))
    w = np.random.default_rng(9).uniform(0.5, 2.0, len(S36))
    res = mle_reconstruct(exact_records(truth, S36, 1e9, w), MleOptions(convergence_tol=1e-14))
    assert trace_distance(res.rho, truth) < 1e-4


def test_likelihood_monotone_and_iterates_valid():
    truth = random_state(np.random.default_rng(3), rank=2)
    recs = simulate_counts(truth, S36, 200, seed=4)
    seen = []
    res = mle_reconstruct(recs, on_iterate=seen.append)
    assert len(seen) == len(res.log_likelihood_trace) - 1 == res.iterations_used
    assert np.all(np.diff(res.log_likelihood_trace) >= -1e-9)
    for rho in seen:
        assert np.max(np.abs(rho - rho.conj().T)) <= 1e-10
        assert abs(np.trace(rho) - 1) <= 1e-10
        assert np.linalg.eigvalsh(rho).min() >= -1e-12


def test_permutation_invariance():
    recs = simulate_counts(random_state(np.random.default_rng(5)), S36, 1000, seed=6)
    order = np.random.default_rng(7).permutation(len(recs))
    a = mle_reconstruct(recs)
    b = mle_reconstruct([recs[i] for i in order])
    assert trace_distance(a.rho, b.rho) < 1e-9


@pytest.mark.parametrize("plan", [S36, M16], ids=["Standard36", "Minimal16"])
def test_fixed_point_frequencies(plan):
    truth = random_state(np.random.default_rng(21))
    recs = exact_records(truth, plan)
    counts = np.array([r.count for r in recs], dtype=float)
    # this state has an eigenvalue near 3e-4, where R-rho-R crawls; run the
    # likelihood down to its double-precision floor
    res = mle_reconstruct(recs, MleOptions(100_000, convergence_tol=1e-16))
    assert res.converged
    pred = predicted_frequencies(res.rho, recs)
    assert np.max(np.abs(pred - counts / counts.sum())) < 1e-6


def test_not_informationally_complete():
    recs = [CountRecord(setting_for(lb), 10) for lb in ("HH", "HV", "VH", "VV")]
    with pytest.raises(NotInformationallyCompleteError):
        mle_reconstruct(recs)
    with pytest.raises(TomographyError):
        mle_reconstruct([])


def test_all_zero_counts():
    with pytest.raises(AllZeroCountsError):
        mle_reconstruct([CountRecord(s, 0) for s in S36.settings])


def test_budget_exhaustion_is_flagged():
    recs = simulate_counts(PHI, S36, 1000, seed=1)
    res = mle_reconstruct(recs, MleOptions(max_iterations=2))
    assert not res.converged
    assert res.iterations_used == 2


def test_options_validation():
    with pytest.raises(ValueError):
        MleOptions(convergence_tol=0)
    with pytest.raises(ValueError):
        MleOptions(dilution=0)
    with pytest.raises(ValueError):
        MleOptions(max_iterations=0)


def test_dilution_reaches_same_state():
    recs = simulate_counts(random_state(np.random.default_rng(2)), S36, 5000, seed=3)
    tight = MleOptions(convergence_tol=1e-13)
    a = mle_reconstruct(recs, tight)
    b = mle_reconstruct(recs, MleOptions(convergence_tol=1e-13, dilution=0.3))
    assert trace_distance(a.rho, b.rho) < 1e-4


def test_derived_seed():
    assert derived_seed(1, 0) == derived_seed(1, 0)
    seeds = {derived_seed(1, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert derived_seed(1, 0) != derived_seed(0, 1)
    assert 0 <= derived_seed(2**70, -5) < 2**64


def test_bootstrap_high_statistics():
    summary = bootstrap_metrics(exact_records(PHI, S36, 4e6), resamples=10, seed=1)
    assert summary.failures == 0
    assert summary.stats["max_fidelity"][1] < 0.01


def test_bootstrap_scaling_law():
    state = TwoQubitState(0.7 * PHI.rho + 0.3 * np.eye(4) / 4)
    low = bootstrap_metrics(exact_records(state, S36, 4e3), resamples=40, seed=2)
    high = bootstrap_metrics(exact_records(state, S36, 4e5), resamples=40, seed=2)
    for name in ("concurrence", "purity", "max_fidelity"):
        ratio = low.stats[name][1] / high.stats[name][1]
        assert 10 / 1.5 <= ratio <= 10 * 1.5, (name, ratio)


def test_bootstrap_deterministic():
    recs = simulate_counts(PHI, S36, 50, seed=3)
    a = bootstrap_metrics(recs, resamples=10, seed=9)
    b = bootstrap_metrics(recs, resamples=10, seed=9)
    c = bootstrap_metrics(recs, resamples=10, seed=10)
    assert a.stats == b.stats
    assert a.stats != c.stats


def test_bootstrap_requires_ten_resamples():
    with pytest.raises(ValueError):
        bootstrap_metrics(exact_records(PHI, S36), resamples=9)
    with pytest.raises(ValueError):
        bootstrap_metrics(exact_records(PHI, S36), resamples=10, metric_set=["negativity"])


def test_bootstrap_counts_failures():
    # only one nonzero record: every resample with a zero draw fails
    recs = [CountRecord(s, 1 if i == 0 else 0) for i, s in enumerate(S36.settings)]
    summary = bootstrap_metrics(recs, resamples=20, seed=0)
    assert summary.failures > 0
    assert summary.failure_fraction == summary.failures / 20


def test_bootstrap_theta_is_circular():
    theta = math.radians(179)
    ket = np.array([1, 0, 0, 1]) / math.sqrt(2)
    from piqfc.quantum_core import u_theta

    state = TwoQubitState(0.8 * TwoQubitState.from_ket(u_theta(theta) @ ket).rho + 0.05 * np.eye(4))
    assert math.degrees(max_fidelity(state)[1]) == pytest.approx(179)
    summary = bootstrap_metrics(simulate_counts(state, S36, 400, seed=5), resamples=30, seed=1)
    mean, std = summary.stats["theta_star_deg"]
    assert abs(math.remainder(mean - 179, 360)) < 10
    assert std < 20
