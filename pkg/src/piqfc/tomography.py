"""Iterative maximum-likelihood state reconstruction and Poisson bootstrap.

Each record contributes one weighted projector ``E_j = w_j Pi_j``. With one
detector per arm the absolute flux is unknown, so the model probability of
record j is ``tr(rho E_j) / tr(rho G)`` with ``G = sum_j E_j``. The iteration
runs on ``sigma = G^(1/2) rho G^(1/2)`` (normalized), where the rescaled
projectors ``G^(-1/2) E_j G^(-1/2)`` sum to the identity and the usual
R-rho-R fixed point applies. For the 36-setting plan with equal weights
``G`` is proportional to the identity and ``sigma == rho``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .measurement import CountRecord, projector_rank
from .metrics import METRIC_NAMES, all_metrics
from .quantum_core import TwoQubitState, dagger, normalize_to_state


class TomographyError(ValueError):
    pass


class NotInformationallyCompleteError(TomographyError):
    pass


class AllZeroCountsError(TomographyError):
    pass


@dataclass(frozen=True)
class MleOptions:
    max_iterations: int = 5000
    convergence_tol: float = 1e-10
    dilution: float = 1.0

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if not 0 < self.dilution <= 1:
            raise ValueError("dilution must lie in (0, 1]")


@dataclass
class ReconstructionResult:
    rho: TwoQubitState
    log_likelihood: float
    iterations_used: int
    converged: bool
    log_likelihood_trace: list[float] = field(default_factory=list, repr=False)


def _inv_sqrt(g: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(g)
    return (v / np.sqrt(w)) @ dagger(v)


def _sqrt(g: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(g)
    return (v * np.sqrt(w)) @ dagger(v)


def _prepare(records):
    if not records:
        raise TomographyError("no count records")
    projectors = np.stack([r.setting.projector() for r in records])
    if projector_rank(projectors) < 16:
        raise NotInformationallyCompleteError(
            f"projector span has rank {projector_rank(projectors)} < 16"
        )
    counts = np.array([r.count for r in records], dtype=float)
    if counts.sum() <= 0:
        raise AllZeroCountsError("all coincidence counts are zero")
    weights = np.array([r.acquisition_weight for r in records], dtype=float)
    effects = weights[:, None, None] * projectors
    return effects, counts


def _probabilities(sigma: np.ndarray, effects: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("jab,ba->j", effects, sigma))


def _loglik(counts: np.ndarray, probs: np.ndarray) -> float:
    """Poisson log-likelihood with the free flux profiled out.

    Returns ``sum_j n_j log(p_j)`` where ``p_j`` are normalized model
    probabilities; records with zero counts contribute nothing.
    """
    mask = counts > 0
    with np.errstate(divide="ignore"):
        return float(np.sum(counts[mask] * np.log(probs[mask])))


def mle_reconstruct(
    records, opts: MleOptions | None = None, on_iterate=None
) -> ReconstructionResult:
    """Maximum-likelihood two-qubit state from coincidence records.

    Starts from the maximally mixed state and iterates the diluted map
    ``sigma -> N[S sigma S]`` with ``S = (1 - d) I + d R``; ``d = 1`` is the
    plain R-rho-R step. A step that lowers the
    log-likelihood is rejected and retried with half the dilution, so the
    recorded likelihood trace never decreases. Hitting ``max_iterations``
    is reported through ``converged=False``, not raised.

    ``on_iterate``, if given, is called with every accepted iterate mapped
    back to the rho frame (unnormalized by G, trace one).
    """
    opts = opts or MleOptions()
    effects, counts = _prepare(records)
    freqs = counts / counts.sum()

    g = effects.sum(axis=0)
    g_inv_half = _inv_sqrt(g)
    tilde = g_inv_half[None] @ effects @ g_inv_half[None]
    eye = np.eye(4, dtype=complex)

    # maximally mixed rho maps to sigma proportional to G
    sigma = g / np.trace(g).real
    probs = _probabilities(sigma, tilde)
    ll = _loglik(counts, probs)
    trace = [ll]
    converged = False
    it = 0
    nz = freqs > 0
    for it in range(1, opts.max_iterations + 1):
        ratio = np.zeros_like(freqs)
        ratio[nz] = freqs[nz] / probs[nz]
        r_op = np.einsum("j,jab->ab", ratio, tilde)
        eps = opts.dilution
        for _ in range(60):
            step = (1.0 - eps) * eye + eps * r_op
            cand = step @ sigma @ dagger(step)
            cand = 0.5 * (cand + dagger(cand))
            cand /= np.trace(cand).real
            cand_probs = _probabilities(cand, tilde)
            cand_ll = _loglik(counts, cand_probs)
            if cand_ll >= ll:
                break
            eps *= 0.5
        else:
            # no ascent direction left at double precision
            converged = True
            break
        change = abs(cand_ll - ll) / max(abs(ll), 1e-300)
        sigma, probs, ll = cand, cand_probs, cand_ll
        trace.append(ll)
        if on_iterate is not None:
            back = g_inv_half @ sigma @ g_inv_half
            on_iterate(back / np.trace(back).real)
        if change < opts.convergence_tol:
            converged = True
            break

    rho = g_inv_half @ sigma @ g_inv_half
    rho = 0.5 * (rho + dagger(rho))
    state = normalize_to_state(rho)
    return ReconstructionResult(state, ll, it, converged, trace)


def predicted_frequencies(state: TwoQubitState, records) -> np.ndarray:
    """Model frequencies ``tr(rho E_j) / tr(rho G)`` for the given records."""
    weights = np.array([r.acquisition_weight for r in records], dtype=float)
    effects = weights[:, None, None] * np.stack([r.setting.projector() for r in records])
    p = _probabilities(state.rho, effects)
    return p / p.sum()


def derived_seed(seed: int, index: int) -> int:
    """64-bit seed for resample ``index`` of a bootstrap run seeded with ``seed``."""
    key = f"{int(seed)}:{int(index)}".encode("ascii")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class BootstrapSummary:
    stats: dict[str, tuple[float, float]]
    resamples: int
    failures: int

    @property
    def failure_fraction(self) -> float:
        return self.failures / self.resamples


def _circular_mean_std_deg(values: np.ndarray) -> tuple[float, float]:
    ang = np.radians(values)
    z = np.mean(np.exp(1j * ang))
    mean = math.degrees(math.atan2(z.imag, z.real))
    dev = np.degrees(np.angle(np.exp(1j * (ang - math.radians(mean)))))
    return mean, float(np.std(dev, ddof=1)) if len(values) > 1 else 0.0


def bootstrap_metrics(
    records,
    opts: MleOptions | None = None,
    resamples: int = 100,
    seed: int = 0,
    metric_set=METRIC_NAMES,
) -> BootstrapSummary:
    """Poisson-resampling bootstrap of the reconstructed metrics.

    Resample ``i`` redraws every count as ``Poisson(count_j)`` with a
    generator seeded by ``derived_seed(seed, i)``, so the result does not
    depend on execution order. Resamples whose reconstruction fails are
    dropped and counted. ``theta_star_deg`` uses circular statistics.
    """
    if resamples < 10:
        raise ValueError("need at least 10 bootstrap resamples")
    unknown = set(metric_set) - set(METRIC_NAMES)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    opts = opts or MleOptions()
    counts = np.array([r.count for r in records], dtype=float)
    samples: dict[str, list[float]] = {m: [] for m in metric_set}
    failures = 0
    for i in range(resamples):
        rng = np.random.default_rng(derived_seed(seed, i))
        redrawn = rng.poisson(counts)
        resampled = [
            CountRecord(r.setting, int(c), r.acquisition_weight) for r, c in zip(records, redrawn)
        ]
        try:
            res = mle_reconstruct(resampled, opts)
        except TomographyError:
            failures += 1
            continue
        m = all_metrics(res.rho)
        for name in metric_set:
            samples[name].append(getattr(m, name))
    stats = {}
    for name, vals in samples.items():
        v = np.asarray(vals)
        if len(v) == 0:
            stats[name] = (math.nan, math.nan)
        elif name == "theta_star_deg":
            stats[name] = _circular_mean_std_deg(v)
        else:
            stats[name] = (float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0)
    return BootstrapSummary(stats, resamples, failures)
