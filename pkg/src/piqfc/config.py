"""Pipeline configuration: INI files in, plain dicts (report echo) out.

Config files are INI with these sections::

    [run]                      plan, seed, bootstrap_resamples
    [mle]                      max_iterations, convergence_tol, dilution
    [metadata]                 ScenarioMetadata fields (informational)
    [scenario.NAME]            mean_pairs_per_setting, readout_balance, background
    [scenario.NAME.source]     alpha, beta, dephasing, white_noise, read_phase_deg
    [scenario.NAME.qfc]        theta_H_deg, theta_V_deg, phi_H_deg, phi_V_deg,
                               transmission   (section absent = no conversion)

Angles are in degrees here and converted to radians only when the domain
objects are built, so the echoed config reproduces a run exactly.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field

from .measurement import PlanName
from .qfc_channel import QfcConfig
from .source_model import ScenarioMetadata, SourceConfig
from .tomography import MleOptions


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _complex_to_json(z: complex):
    return [z.real, z.imag]


def _complex_from_json(v, where: str) -> complex:
    if isinstance(v, (int, float, complex)) and not isinstance(v, bool):
        z = complex(v)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ConfigError(f"{where}: must be finite")
        return z
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(_real(v[0], where), _real(v[1], where))
    raise ConfigError(f"{where}: expected a number or [re, im], got {v!r}")


def _real(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    return v


def _integer(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    return v


@dataclass(frozen=True)
class SourceSection:
    alpha: complex = 1 / math.sqrt(2)
    beta: complex = 1 / math.sqrt(2)
    dephasing: float = 0.0
    white_noise: float = 0.0
    read_phase_deg: float = 0.0

    def build(self) -> SourceConfig:
        return SourceConfig(
            alpha=self.alpha,
            beta=self.beta,
            dephasing=self.dephasing,
            white_noise=self.white_noise,
            read_phase=math.radians(self.read_phase_deg),
        )


@dataclass(frozen=True)
class QfcSection:
    theta_H_deg: float
    theta_V_deg: float
    phi_H_deg: float = 0.0
    phi_V_deg: float = 0.0
    transmission: float = 1.0

    def build(self) -> QfcConfig:
        return QfcConfig(
            theta_H=math.radians(self.theta_H_deg),
            theta_V=math.radians(self.theta_V_deg),
            phi_H=math.radians(self.phi_H_deg),
            phi_V=math.radians(self.phi_V_deg),
            transmission=self.transmission,
        )


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    mean_pairs_per_setting: float
    source: SourceSection = field(default_factory=SourceSection)
    qfc: QfcSection | None = None
    readout_balance: float = 0.5
    background: float = 0.0


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    scenarios: tuple[ScenarioConfig, ...]
    plan: str = PlanName.STANDARD36.value
    bootstrap_resamples: int = 100
    mle: MleOptions = field(default_factory=MleOptions)
    metadata: ScenarioMetadata = field(default_factory=ScenarioMetadata)

    def with_overrides(self, seed: int | None = None, resamples: int | None = None):
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
        if resamples is not None:
            cfg = dataclasses.replace(cfg, bootstrap_resamples=resamples)
        # re-run validation on the modified values
        return PipelineConfig.from_dict(cfg.to_dict())

    def scenario(self, name: str) -> ScenarioConfig:
        for s in self.scenarios:
            if s.name == name:
                return s
        raise KeyError(name)

    # -- dict form ----------------------------------------------------------

    def to_dict(self) -> dict:
        scenarios = []
        for s in self.scenarios:
            src = dataclasses.asdict(s.source)
            src["alpha"] = _complex_to_json(s.source.alpha)
            src["beta"] = _complex_to_json(s.source.beta)
            scenarios.append(
                {
                    "name": s.name,
                    "mean_pairs_per_setting": s.mean_pairs_per_setting,
                    "readout_balance": s.readout_balance,
                    "background": s.background,
                    "source": src,
                    "qfc": None if s.qfc is None else dataclasses.asdict(s.qfc),
                }
            )
        return {
            "run": {
                "plan": self.plan,
                "seed": self.seed,
                "bootstrap_resamples": self.bootstrap_resamples,
            },
            "mle": dataclasses.asdict(self.mle),
            "metadata": dataclasses.asdict(self.metadata),
            "scenarios": scenarios,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        _expect_keys(d, "config", {"run", "scenarios"}, {"mle", "metadata"})
        run = d["run"]
        _expect_keys(run, "[run]", {"seed"}, {"plan", "bootstrap_resamples"})
        seed = _integer(run["seed"], "[run] seed")
        plan = run.get("plan", PlanName.STANDARD36.value)
        if plan not in (PlanName.STANDARD36.value, PlanName.MINIMAL16.value):
            raise ConfigError(f"[run] plan: must be Standard36 or Minimal16, got {plan!r}")
        resamples = _integer(run.get("bootstrap_resamples", 100), "[run] bootstrap_resamples")
        if resamples < 10:
            raise ConfigError("[run] bootstrap_resamples: must be at least 10")

        mle = _build(MleOptions, d.get("mle", {}), "[mle]",
                     {"max_iterations": _integer, "convergence_tol": _real, "dilution": _real})
        meta_types = {
            f.name: (_integer if f.type in ("int", int) else _real)
            for f in dataclasses.fields(ScenarioMetadata)
        }
        metadata = _build(ScenarioMetadata, d.get("metadata", {}), "[metadata]", meta_types)

        raw_scenarios = d["scenarios"]
        if not isinstance(raw_scenarios, list) or not raw_scenarios:
            raise ConfigError("config: at least one [scenario.NAME] section is required")
        scenarios = []
        seen = set()
        for raw in raw_scenarios:
            scenarios.append(_scenario_from_dict(raw))
            if scenarios[-1].name in seen:
                raise ConfigError(f"[scenario.{scenarios[-1].name}]: duplicate scenario")
            seen.add(scenarios[-1].name)
        return cls(seed, tuple(scenarios), plan, resamples, mle, metadata)


def _expect_keys(d, where, required, optional):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a section, got {d!r}")
    missing = required - d.keys()
    if missing:
        raise ConfigError(f"{where}: missing required field(s) {', '.join(sorted(missing))}")
    unknown = d.keys() - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")


def _build(kind, values: dict, where: str, types: dict):
    required = {
        f.name
        for f in dataclasses.fields(kind)
        if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
    }
    _expect_keys(values, where, required, set(types) - required)
    kwargs = {k: types[k](v, f"{where} {k}") for k, v in values.items()}
    try:
        return kind(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _scenario_from_dict(raw) -> ScenarioConfig:
    if not isinstance(raw, dict) or "name" not in raw:
        raise ConfigError(f"scenario entry without a name: {raw!r}")
    name = raw["name"]
    if not isinstance(name, str) or not name or any(c.isspace() for c in name):
        raise ConfigError(f"scenario name must be a non-empty word, got {name!r}")
    where = f"[scenario.{name}]"
    _expect_keys(raw, where, {"name", "mean_pairs_per_setting"},
                 {"readout_balance", "background", "source", "qfc"})
    mean = _real(raw["mean_pairs_per_setting"], f"{where} mean_pairs_per_setting")
    if mean <= 0:
        raise ConfigError(f"{where} mean_pairs_per_setting: must be positive")
    balance = _real(raw.get("readout_balance", 0.5), f"{where} readout_balance")
    if not 0 <= balance <= 1:
        raise ConfigError(f"{where} readout_balance: must lie in [0, 1]")
    background = _real(raw.get("background", 0.0), f"{where} background")
    if background < 0:
        raise ConfigError(f"{where} background: must be nonnegative")

    swhere = f"[scenario.{name}.source]"
    src_raw = raw.get("source") or {}
    _expect_keys(src_raw, swhere, set(),
                 {"alpha", "beta", "dephasing", "white_noise", "read_phase_deg"})
    src_kwargs = {}
    for key, value in src_raw.items():
        conv = _complex_from_json if key in ("alpha", "beta") else _real
        src_kwargs[key] = conv(value, f"{swhere} {key}")
    source = SourceSection(**src_kwargs)
    try:
        source.build()
    except ValueError as exc:
        raise ConfigError(f"{swhere}: {exc}") from None

    qfc = None
    if raw.get("qfc") is not None:
        qwhere = f"[scenario.{name}.qfc]"
        qfc = _build(QfcSection, raw["qfc"], qwhere,
                     {k: _real for k in ("theta_H_deg", "theta_V_deg", "phi_H_deg",
                                         "phi_V_deg", "transmission")})
        try:
            qfc.build()
        except ValueError as exc:
            raise ConfigError(f"{qwhere}: {exc}") from None
    return ScenarioConfig(name, mean, source, qfc, balance, background)


# -- INI reading ----------------------------------------------------------------


def _parse_value(text: str, where: str):
    t = text.strip()
    for conv in (int, float, complex):
        try:
            return conv(t)
        except ValueError:
            pass
    if not t:
        raise ConfigError(f"{where}: empty value")
    return t


def parse_config(text: str) -> PipelineConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None

    d: dict = {"scenarios": []}
    by_name: dict[str, dict] = {}
    for section in parser.sections():
        values = {k: _parse_value(v, f"[{section}] {k}") for k, v in parser.items(section)}
        if section in ("run", "mle", "metadata"):
            if section == "run" and "plan" in values:
                values["plan"] = str(parser.get(section, "plan")).strip()
            d[section] = values
            continue
        parts = section.split(".")
        if parts[0] != "scenario" or len(parts) not in (2, 3) or not parts[1]:
            raise ConfigError(f"[{section}]: unknown section")
        entry = by_name.setdefault(parts[1], {"name": parts[1]})
        if len(parts) == 2:
            entry.update(values)
        elif parts[2] in ("source", "qfc"):
            entry[parts[2]] = values
        else:
            raise ConfigError(f"[{section}]: unknown section")
    for entry in by_name.values():
        d["scenarios"].append(entry)
    if "run" not in d:
        raise ConfigError("config: missing [run] section")
    return PipelineConfig.from_dict(d)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
