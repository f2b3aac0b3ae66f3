"""Dual-polarization frequency conversion as a frequency-domain beamsplitter.

For each polarization X the pump mixes the upper (780 nm) and lower
(1522 nm) frequency modes with ``t_X = cos(theta_X)`` and
``r_X = exp(i phi_X) sin(theta_X)``, where ``theta_X`` is the product of
coupling strength and interaction time. Single-photon amplitudes over
``((u,H), (u,V), (l,H), (l,V))`` transform as ``c_out = U c_in`` with the
per-polarization block ``[[t, -r], [r*, t]]`` on ``(u,X), (l,X)``.

Conditioning on a converted photon leaves the polarization qubit with the
Kraus operator ``diag(r_H*, r_V*)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .quantum_core import I2, TwoQubitState, dagger, normalize_to_state

U_H, U_V, L_H, L_V = range(4)


class QfcError(ValueError):
    pass


class ZeroSuccessError(QfcError):
    pass


class NegativePowerError(QfcError):
    pass


class InsufficientDataError(QfcError):
    pass


class FitDivergedError(QfcError):
    pass


class UnreachableTargetError(QfcError):
    pass


def _wrap_phase(phi: float) -> float:
    """Reduce to (-pi, pi]."""
    r = math.remainder(float(phi), 2 * math.pi)
    return math.pi if r == -math.pi else r


@dataclass(frozen=True)
class FrequencyMeta:
    lambda_upper_nm: float = 780.0
    lambda_lower_nm: float = 1522.0
    lambda_pump_nm: float = 1600.0


@dataclass(frozen=True)
class QfcConfig:
    """Pump-set conversion parameters, all angles in radians.

    ``transmission`` lumps polarization-independent fixed losses of the
    converter (coupling, filters) and scales the success probability only.
    """

    theta_H: float
    theta_V: float
    phi_H: float = 0.0
    phi_V: float = 0.0
    transmission: float = 1.0
    freq_meta: FrequencyMeta = field(default_factory=FrequencyMeta)

    def __post_init__(self):
        for name in ("theta_H", "theta_V", "phi_H", "phi_V", "transmission"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.theta_H < 0 or self.theta_V < 0:
            raise ValueError("theta_H and theta_V must be nonnegative")
        if not 0 < self.transmission <= 1:
            raise ValueError("transmission must lie in (0, 1]")
        object.__setattr__(self, "phi_H", _wrap_phase(self.phi_H))
        object.__setattr__(self, "phi_V", _wrap_phase(self.phi_V))

    @property
    def t(self) -> tuple[float, float]:
        return math.cos(self.theta_H), math.cos(self.theta_V)

    @property
    def r(self) -> tuple[complex, complex]:
        return (
            complex(math.cos(self.phi_H), math.sin(self.phi_H)) * math.sin(self.theta_H),
            complex(math.cos(self.phi_V), math.sin(self.phi_V)) * math.sin(self.theta_V),
        )

    @property
    def transmittances(self) -> tuple[float, float]:
        return math.cos(self.theta_H) ** 2, math.cos(self.theta_V) ** 2

    @property
    def reflectances(self) -> tuple[float, float]:
        return math.sin(self.theta_H) ** 2, math.sin(self.theta_V) ** 2


def mode_transform(cfg: QfcConfig) -> np.ndarray:
    u = np.zeros((4, 4), dtype=complex)
    for (up, low), t, r in zip(((U_H, L_H), (U_V, L_V)), cfg.t, cfg.r):
        u[up, up] = t
        u[up, low] = -r
        u[low, up] = r.conjugate()
        u[low, low] = t
    return u


def conversion_kraus(cfg: QfcConfig) -> np.ndarray:
    """Amplitude map from upper-frequency to converted lower-frequency polarization."""
    r_h, r_v = cfg.r
    return np.diag([r_h.conjugate(), r_v.conjugate()])


class Arm(str, enum.Enum):
    S = "S"
    AS = "AS"


def apply_qfc_postselected(
    rho_in: TwoQubitState, cfg: QfcConfig, arm: Arm | str = Arm.AS
) -> tuple[TwoQubitState, float]:
    """Convert one photon of the pair and keep only converted events.

    Returns the conditional state and the success probability, which
    includes ``cfg.transmission``. Raises :class:`ZeroSuccessError` when
    nothing is converted.
    """
    k = conversion_kraus(cfg)
    op = np.kron(I2, k) if Arm(arm) is Arm.AS else np.kron(k, I2)
    out = op @ rho_in.rho @ dagger(op)
    p = float(np.trace(out).real)
    if p <= 1e-14:
        raise ZeroSuccessError(f"conversion success probability {p:.3g} is zero")
    return normalize_to_state(out), p * cfg.transmission


class Regime(str, enum.Enum):
    IDENTITY = "Identity"
    HALF_BS = "HalfBS"
    FREQUENCY_PBS = "FrequencyPBS"
    PPBS = "PPBS"
    POLARIZATION_INSENSITIVE = "PolarizationInsensitive"


@dataclass(frozen=True)
class OperatingPoint:
    regime: Regime
    reflectance: float | None = None


def classify_operating_point(cfg: QfcConfig, tol: float = 1e-6) -> OperatingPoint:
    """Name the beamsplitter regime realized by ``cfg``.

    Checks in order: no conversion, 50:50 on both polarizations, polarizing
    (one polarization fully transmitted, the other fully converted), any
    other balanced setting, and otherwise partially polarizing.
    """
    if not 0 < tol < 0.1:
        raise ValueError("tol must lie in (0, 0.1)")
    t_h, t_v = cfg.transmittances

    def near(a, b):
        return abs(a - b) <= tol

    if near(t_h, 1) and near(t_v, 1):
        return OperatingPoint(Regime.IDENTITY)
    if near(t_h, 0.5) and near(t_v, 0.5):
        return OperatingPoint(Regime.HALF_BS, 0.5)
    if (near(t_h, 1) and near(t_v, 0)) or (near(t_h, 0) and near(t_v, 1)):
        return OperatingPoint(Regime.FREQUENCY_PBS)
    if near(t_h, t_v):
        return OperatingPoint(Regime.POLARIZATION_INSENSITIVE, 1.0 - 0.5 * (t_h + t_v))
    return OperatingPoint(Regime.PPBS)


# -- pump-power efficiency model ---------------------------------------------


@dataclass(frozen=True)
class EfficiencyModel:
    """``eta(P) = eta_max * sin^2(sqrt(g P))`` with ``g`` in 1/W."""

    eta_max: float
    g: float

    def __post_init__(self):
        if not 0 <= self.eta_max <= 1:
            raise ValueError("eta_max must lie in [0, 1]")
        if not self.g > 0:
            raise ValueError("g must be positive")

    @property
    def peak_power_W(self) -> float:
        return (math.pi / 2) ** 2 / self.g


def efficiency(model: EfficiencyModel, pump_power_W: float) -> float:
    if pump_power_W < 0:
        raise NegativePowerError(f"pump power {pump_power_W} W is negative")
    return model.eta_max * math.sin(math.sqrt(model.g * pump_power_W)) ** 2


def power_for_efficiency(model: EfficiencyModel, target: float) -> float:
    """Smallest pump power reaching ``target`` efficiency."""
    if model.eta_max < target <= model.eta_max * (1 + 1e-12):
        target = model.eta_max
    if target < 0 or target > model.eta_max:
        raise UnreachableTargetError(
            f"target efficiency {target} outside [0, eta_max={model.eta_max}]"
        )
    return math.asin(math.sqrt(target / model.eta_max)) ** 2 / model.g


def config_from_pump(
    model: EfficiencyModel,
    power_H_W: float,
    power_V_W: float | None = None,
    phi_H: float = 0.0,
    phi_V: float = 0.0,
) -> QfcConfig:
    """Channel parameters for given effective pump powers.

    The conversion angle is ``sqrt(g P)`` and ``eta_max`` becomes the fixed
    transmission, so the success probability reproduces ``eta(P)``.
    """
    power_V_W = power_H_W if power_V_W is None else power_V_W
    for p in (power_H_W, power_V_W):
        if p < 0:
            raise NegativePowerError(f"pump power {p} W is negative")
    return QfcConfig(
        theta_H=math.sqrt(model.g * power_H_W),
        theta_V=math.sqrt(model.g * power_V_W),
        phi_H=phi_H,
        phi_V=phi_V,
        transmission=model.eta_max if model.eta_max > 0 else 1.0,
    )


@dataclass(frozen=True)
class FitResult:
    model: EfficiencyModel
    residual: float
    iterations: int


def _model_and_jac(params: np.ndarray, p: np.ndarray):
    eta, g = params
    s = np.sqrt(np.clip(g, 0.0, None) * p)
    sin_s = np.sin(s)
    f = eta * sin_s**2
    d_eta = sin_s**2
    # d/dg sin^2(s) = sin(2s) P / (2s), written via sinc to stay finite at s = 0
    d_g = eta * p * np.sinc(2 * s / np.pi)
    return f, np.column_stack([d_eta, d_g])


def fit_efficiency(data, max_iterations: int = 200, rtol: float = 1e-12) -> FitResult:
    """Least-squares fit of ``(eta_max, g)`` to ``(power_W, efficiency)`` pairs.

    Damped Gauss-Newton (Levenberg-Marquardt) started from
    ``eta_max = max(y)`` and ``g = (pi/2)^2 / P_at_max``. Stops once the
    relative change of the residual sum of squares drops below ``rtol``.
    """
    pts = [(float(p), float(y)) for p, y in data]
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 points, got {len(pts)}")
    p = np.array([q for q, _ in pts])
    y = np.array([v for _, v in pts])
    if np.any(p < 0) or len(set(p.tolist())) != len(p):
        raise ValueError("pump powers must be distinct and nonnegative")
    if np.any(y < 0) or np.any(y > 1):
        raise ValueError("efficiencies must lie in [0, 1]")

    i_max = int(np.argmax(y))
    p_at_max = p[i_max] if p[i_max] > 0 else p.max()
    params = np.array([y.max(), (math.pi / 2) ** 2 / p_at_max])

    f, jac = _model_and_jac(params, p)
    res = f - y
    cost = float(res @ res)
    lam = 1e-3
    it = 0
    done = cost == 0.0
    while not done and it < max_iterations:
        it += 1
        jtj = jac.T @ jac
        grad = jac.T @ res
        improved = False
        while lam < 1e16:
            a = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                step = -np.linalg.solve(a, grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = params + step
            trial[1] = max(trial[1], 1e-12)
            f_t, jac_t = _model_and_jac(trial, p)
            res_t = f_t - y
            cost_t = float(res_t @ res_t)
            if cost_t < cost:
                improved = True
                break
            lam *= 10
        if not improved:
            # no downhill step at any damping: stationary point
            done = True
            break
        rel = (cost - cost_t) / cost
        params, res, cost, jac = trial, res_t, cost_t, jac_t
        lam = max(lam / 10, 1e-12)
        if rel < rtol or cost == 0.0:
            done = True
    if not done or not np.all(np.isfinite(params)):
        raise FitDivergedError(f"efficiency fit did not settle within {max_iterations} iterations")
    eta, g = params
    eta = min(max(float(eta), 0.0), 1.0)
    return FitResult(EfficiencyModel(eta, float(g)), math.sqrt(cost / len(p)), it)


def parse_calibration(text: str) -> list[tuple[float, float]]:
    """Parse ``power_W efficiency`` lines; ``#`` starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'power_W efficiency', got {raw!r}")
        try:
            out.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValueError(f"line {lineno}: not a number in {raw!r}") from None
    return out
