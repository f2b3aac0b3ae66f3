"""Polarization analyzers (QWP -> HWP -> PBS) and coincidence-count simulation.

Each arm carries one analyzer and one detector on the PBS transmitted port,
so a setting yields a single coincidence count. Waveplate conventions are
fixed here and nowhere else::

    HWP(t) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]]
    QWP(t) = [[cos^2 t + i sin^2 t, (1 - i) sin t cos t],
              [(1 - i) sin t cos t, sin^2 t + i cos^2 t]]

Light crosses the QWP first, then the HWP, then the PBS, so the detected
polarization is ``QWP(q)^dag HWP(h)^dag |H>``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .quantum_core import KET_H, KET_V, TwoQubitState, dagger

# Record file angles are written with this many significant digits.
ANGLE_DIGITS = 12


def _reduce_angle(a: float) -> float:
    r = math.fmod(float(a), math.pi)
    if r < 0:
        r += math.pi
    # fmod can return pi itself after the shift for tiny negative inputs
    return 0.0 if r >= math.pi else r


def hwp(theta: float) -> np.ndarray:
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    off = (1 - 1j) * s * c
    return np.array([[c * c + 1j * s * s, off], [off, s * s + 1j * c * c]], dtype=complex)


def analyzer_ket(qwp_angle: float, hwp_angle: float, port: str = "transmitted") -> np.ndarray:
    """Polarization ket projected on by the analyzer.

    ``port="reflected"`` gives the orthogonal ket that would exit the other
    PBS port; it is only used for completeness checks since the setup has
    one detector per arm.
    """
    if port == "transmitted":
        out = KET_H
    elif port == "reflected":
        out = KET_V
    else:
        raise ValueError(f"unknown port {port!r}")
    return dagger(qwp(qwp_angle)) @ (dagger(hwp(hwp_angle)) @ out)


@dataclass(frozen=True)
class MeasurementSetting:
    """Analyzer waveplate angles in radians, reduced to [0, pi)."""

    qwp_S: float
    hwp_S: float
    qwp_AS: float
    hwp_AS: float

    def __post_init__(self):
        for name in ("qwp_S", "hwp_S", "qwp_AS", "hwp_AS"):
            object.__setattr__(self, name, _reduce_angle(getattr(self, name)))

    def projector(self) -> np.ndarray:
        m_s = analyzer_ket(self.qwp_S, self.hwp_S)
        m_as = analyzer_ket(self.qwp_AS, self.hwp_AS)
        ket = np.kron(m_s, m_as)
        return np.outer(ket, ket.conj())


@dataclass(frozen=True)
class CountRecord:
    setting: MeasurementSetting
    count: int
    acquisition_weight: float = 1.0

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 0:
            raise ValueError(f"count must be a nonnegative integer, got {self.count!r}")
        if not (self.acquisition_weight > 0 and math.isfinite(self.acquisition_weight)):
            raise ValueError(f"acquisition weight must be positive, got {self.acquisition_weight!r}")
        object.__setattr__(self, "count", int(self.count))


class PlanName(str, enum.Enum):
    STANDARD36 = "Standard36"
    MINIMAL16 = "Minimal16"
    CUSTOM = "Custom"


# (qwp, hwp) angles selecting each analyzer state.
_Q45 = math.pi / 4
ANALYZER_ANGLES = {
    "H": (0.0, 0.0),
    "V": (0.0, math.pi / 4),
    "D": (_Q45, math.pi / 8),
    "A": (_Q45, -math.pi / 8),
    "R": (_Q45, math.pi / 4),
    "L": (_Q45, 0.0),
}

# Basis labels as kets, for reference and tests. R and L follow the kets the
# analyzer angles above actually select.
LABEL_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "A": np.array([1, -1], dtype=complex) / math.sqrt(2),
    "R": np.array([1, -1j], dtype=complex) / math.sqrt(2),
    "L": np.array([1, 1j], dtype=complex) / math.sqrt(2),
}

# Sixteen-setting sequence of the standard two-qubit tomography protocol
# (James, Kwiat, Munro, White 2001), first letter = S arm.
MINIMAL16_LABELS = (
    "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
    "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL",
)


def setting_for(label: str) -> MeasurementSetting:
    """Setting for a two-letter label such as ``"HD"`` (S arm first)."""
    if len(label) != 2 or any(ch not in ANALYZER_ANGLES for ch in label):
        raise ValueError(f"bad setting label {label!r}")
    q_s, h_s = ANALYZER_ANGLES[label[0]]
    q_as, h_as = ANALYZER_ANGLES[label[1]]
    return MeasurementSetting(q_s, h_s, q_as, h_as)


@dataclass(frozen=True)
class SettingsPlan:
    settings: tuple[MeasurementSetting, ...]
    name: PlanName = PlanName.CUSTOM
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.settings)

    def projectors(self) -> np.ndarray:
        if not self.settings:
            return np.zeros((0, 4, 4), dtype=complex)
        return np.stack([s.projector() for s in self.settings])

    def completeness_rank(self) -> int:
        return projector_rank(self.projectors())

    def is_informationally_complete(self) -> bool:
        return self.completeness_rank() == 16


def projector_rank(projectors: np.ndarray, tol: float = 1e-9) -> int:
    """Dimension of the real span of the vectorized projectors."""
    if len(projectors) == 0:
        return 0
    vecs = np.asarray(projectors).reshape(len(projectors), 16)
    return int(np.linalg.matrix_rank(vecs, tol=tol))


def standard_plan(name) -> SettingsPlan:
    name = PlanName(name)
    if name is PlanName.STANDARD36:
        labels = tuple(a + b for a in "HVDARL" for b in "HVDARL")
    elif name is PlanName.MINIMAL16:
        labels = MINIMAL16_LABELS
    else:
        raise ValueError("only Standard36 and Minimal16 are predefined plans")
    return SettingsPlan(tuple(setting_for(lb) for lb in labels), name, labels)


def custom_plan(settings) -> SettingsPlan:
    return SettingsPlan(tuple(settings), PlanName.CUSTOM)


def coincidence_probability(state: TwoQubitState, setting: MeasurementSetting) -> float:
    p = np.real(np.trace(state.rho @ setting.projector()))
    return float(min(max(p, 0.0), 1.0))


def simulate_counts(
    state: TwoQubitState,
    plan: SettingsPlan,
    mean_pairs_per_setting: float,
    seed: int,
    weights=None,
    background: float = 0.0,
) -> list[CountRecord]:
    """Poisson coincidence counts, one record per setting of ``plan``.

    The mean for setting j is ``mean_pairs_per_setting * w_j * p_j + background``
    where ``p_j`` is the Born probability and ``background`` an optional
    uniform accidental rate per setting.
    """
    if not mean_pairs_per_setting > 0:
        raise ValueError("mean_pairs_per_setting must be positive")
    if background < 0:
        raise ValueError("background must be nonnegative")
    n = len(plan)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError("need one acquisition weight per setting")
    rng = np.random.default_rng(seed)
    probs = np.array([coincidence_probability(state, s) for s in plan.settings])
    counts = rng.poisson(mean_pairs_per_setting * w * probs + background)
    return [CountRecord(s, int(c), float(wj)) for s, c, wj in zip(plan.settings, counts, w)]


def mean_for_total(state: TwoQubitState, plan: SettingsPlan, total: float) -> float:
    """Per-setting mean that gives ``total`` expected coincidences over ``plan``."""
    probs = sum(coincidence_probability(state, s) for s in plan.settings)
    return total / probs


# -- count-record text format -------------------------------------------------
#
#   # comment
#   # scenario <name>            (optional block header)
#   qwp_S hwp_S qwp_AS hwp_AS count weight      (angles in degrees)


def format_records(records, scenario: str | None = None) -> str:
    lines = []
    if scenario is not None:
        lines.append(f"# scenario {scenario}")
    for r in records:
        s = r.setting
        angles = " ".join(
            f"{math.degrees(a):.{ANGLE_DIGITS}g}" for a in (s.qwp_S, s.hwp_S, s.qwp_AS, s.hwp_AS)
        )
        lines.append(f"{angles} {r.count:d} {r.acquisition_weight!r}")
    return "\n".join(lines) + "\n"


class RecordFormatError(ValueError):
    pass


def parse_records(text: str) -> dict[str, list[CountRecord]]:
    """Parse record text into ``{scenario: records}``; unnamed blocks use ``"default"``."""
    blocks: dict[str, list[CountRecord]] = {}
    current = "default"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].split()
            if len(body) == 2 and body[0] == "scenario":
                current = body[1]
                if current in blocks:
                    raise RecordFormatError(f"line {lineno}: duplicate scenario {current!r}")
                blocks[current] = []
            continue
        parts = line.split()
        if len(parts) not in (5, 6):
            raise RecordFormatError(f"line {lineno}: expected 5 or 6 fields, got {len(parts)}")
        try:
            angles = [math.radians(float(p)) for p in parts[:4]]
            count = int(parts[4])
            weight = float(parts[5]) if len(parts) == 6 else 1.0
            rec = CountRecord(MeasurementSetting(*angles), count, weight)
        except ValueError as exc:
            raise RecordFormatError(f"line {lineno}: {exc}") from None
        blocks.setdefault(current, []).append(rec)
    return blocks
