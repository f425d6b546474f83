"""Scenario files: one flat, diff-friendly description of an experiment.

Format: `section.field = value` lines, `#` comments, blank lines ignored.
Unspecified keys take the built-in defaults (the nominal mission parameters
baked into the dataclass defaults). Values are floats, ints, booleans
(true/false), comma-separated float lists, or `r0:days` histogram pairs.

dump_scenario emits the canonical form: every key, registry order, shortest
round-tripping float representation, so dump(load(x)) is a fixed point.
"""
from __future__ import annotations

import math
import typing
from dataclasses import dataclass, fields, replace

from .events import SimConfig
from .keyrate import FriedHistogram, SourceDetectorParams
from .linkbudget import Atmosphere, BackgroundModel, LinkParams
from .orbit import OrbitSpec

_FLOAT_TUPLE = tuple[float, ...]
_HIST_TUPLE = tuple[tuple[float, float], ...]


class ScenarioError(ValueError):
    """Malformed scenario text; carries the offending line number if known."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ModelConfig:
    """Switchable model conventions (see linkbudget and keyrate)."""

    zenith_r0_scaling: bool = True
    cross_term_sign: int = -1

    def __post_init__(self) -> None:
        if self.cross_term_sign not in (-1, 1):
            raise ValueError(f"cross_term_sign must be -1 or +1, got {self.cross_term_sign}")


@dataclass(frozen=True)
class IntegrationConfig:
    """Per-pass key integration window."""

    min_elevation_rad: float = math.radians(20.0)
    loss_cutoff_db: float = 45.0
    max_window_s: float = 300.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_elevation_rad < math.pi / 2:
            raise ValueError(
                f"min_elevation_rad must be in [0, pi/2), got {self.min_elevation_rad}"
            )
        if self.loss_cutoff_db <= 0:
            raise ValueError(f"loss_cutoff_db must be > 0, got {self.loss_cutoff_db}")
        if self.max_window_s <= 0:
            raise ValueError(f"max_window_s must be > 0, got {self.max_window_s}")


@dataclass(frozen=True)
class SweepConfig:
    """Grids used by the sweep-style CLI commands."""

    a_db_min: float = 30.0
    a_db_max: float = 60.0
    a_db_step: float = 0.25
    dcr_values: tuple[float, ...] = (100.0, 250.0, 1000.0)
    r0_values: tuple[float, ...] = (0.15, 0.20, 0.25)
    wavelengths_m: tuple[float, ...] = (808e-9,)
    wavelength_a_atm0_db: tuple[float, ...] = (3.0,)
    profile_dt_s: float = 1.0

    def __post_init__(self) -> None:
        if self.a_db_step <= 0:
            raise ValueError(f"a_db_step must be > 0, got {self.a_db_step}")
        if self.a_db_max < self.a_db_min:
            raise ValueError("a_db_max must be >= a_db_min")
        if self.profile_dt_s <= 0:
            raise ValueError(f"profile_dt_s must be > 0, got {self.profile_dt_s}")
        if len(self.wavelengths_m) != len(self.wavelength_a_atm0_db):
            raise ValueError(
                "wavelengths_m and wavelength_a_atm0_db must have the same length"
            )


@dataclass(frozen=True)
class AnnualConfig:
    """Inputs of the annual-yield estimate."""

    passes_per_year: float = 100.0
    histogram: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.passes_per_year < 0:
            raise ValueError("passes_per_year must be >= 0")
        if self.histogram:
            FriedHistogram(bins=self.histogram)  # validates ordering/positivity


@dataclass(frozen=True)
class BudgetConfig:
    """Inputs of the data-budget report."""

    horizon_s: float = 180.0 * 86400.0
    delta_t_s: float = 25e-12
    event_rate_cps: float = 1e4
    experiment_duration_s: float = 300.0
    passes_per_day: float = 3.0
    hk_channels: int = 64
    hk_bytes_per_value: int = 2
    hk_sample_rate_hz: float = 1.0
    hk_duration_s: float = 86400.0

    def __post_init__(self) -> None:
        if not self.horizon_s >= self.delta_t_s > 0:
            raise ValueError("need horizon_s >= delta_t_s > 0")
        for name in (
            "event_rate_cps",
            "experiment_duration_s",
            "passes_per_day",
            "hk_sample_rate_hz",
            "hk_duration_s",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.hk_channels < 0 or self.hk_bytes_per_value < 0:
            raise ValueError("housekeeping channel counts must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    """One complete experiment description."""

    orbit: OrbitSpec
    link: LinkParams
    atmosphere: Atmosphere
    source: SourceDetectorParams
    background: BackgroundModel
    sim: SimConfig
    model: ModelConfig
    integration: IntegrationConfig
    sweep: SweepConfig
    annual: AnnualConfig
    budget: BudgetConfig


_SECTIONS: dict[str, type] = {
    "orbit": OrbitSpec,
    "link": LinkParams,
    "atmosphere": Atmosphere,
    "source": SourceDetectorParams,
    "background": BackgroundModel,
    "sim": SimConfig,
    "model": ModelConfig,
    "integration": IntegrationConfig,
    "sweep": SweepConfig,
    "annual": AnnualConfig,
    "budget": BudgetConfig,
}

_DEFAULT_KW: dict[str, dict] = {"orbit": {"altitude_km": 550.0}}


def default_scenario() -> ScenarioConfig:
    """The all-defaults scenario (nominal mission parameters)."""
    return ScenarioConfig(
        **{name: cls(**_DEFAULT_KW.get(name, {})) for name, cls in _SECTIONS.items()}
    )


def _field_types() -> dict[str, type]:
    out: dict[str, type] = {}
    for section, cls in _SECTIONS.items():
        hints = typing.get_type_hints(cls)
        for f in fields(cls):
            out[f"{section}.{f.name}"] = hints[f.name]
    return out


_FIELD_TYPES = _field_types()


def scenario_keys() -> list[str]:
    """All recognized dotted keys, in canonical (dump) order."""
    return list(_FIELD_TYPES)


def _parse_value(key: str, raw: str):
    py_type = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if py_type is float:
            return float(raw)
        if py_type is int:
            return int(raw)
        if py_type is bool:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if py_type == _FLOAT_TUPLE:
            if not raw:
                return ()
            return tuple(float(tok) for tok in raw.split(","))
        if py_type == _HIST_TUPLE:
            if not raw:
                return ()
            pairs = []
            for tok in raw.split(","):
                r0, _, days = tok.partition(":")
                if not _:
                    raise ValueError(f"expected r0:days pair, got {tok.strip()!r}")
                pairs.append((float(r0), float(days)))
            return tuple(pairs)
    except ValueError as exc:
        raise ValueError(str(exc)) from None
    raise AssertionError(f"unhandled field type {py_type} for {key}")


def _dump_value(key: str, value) -> str:
    py_type = _FIELD_TYPES[key]
    if py_type is float:
        return repr(float(value))
    if py_type is int:
        return str(int(value))
    if py_type is bool:
        return "true" if value else "false"
    if py_type == _FLOAT_TUPLE:
        return ", ".join(repr(float(v)) for v in value)
    if py_type == _HIST_TUPLE:
        return ", ".join(f"{float(r0)!r}:{float(days)!r}" for r0, days in value)
    raise AssertionError(f"unhandled field type {py_type} for {key}")


def parse_scenario_text(text: str) -> tuple[ScenarioConfig, dict[str, str]]:
    """Parse scenario text; returns the config and the raw overrides.

    Raises ScenarioError (with a line number) for unknown keys, malformed
    lines or out-of-range values.
    """
    raw_values: dict[str, str] = {}
    key_lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, eq, value = stripped.partition("=")
        if not eq:
            raise ScenarioError(f"expected 'key = value', got {stripped!r}", lineno)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ScenarioError(f"unknown key {key!r}", lineno)
        raw_values[key] = value.strip()
        key_lines[key] = lineno

    parsed: dict[str, dict[str, object]] = {}
    for key, raw in raw_values.items():
        section, _, field_name = key.partition(".")
        try:
            parsed.setdefault(section, {})[field_name] = _parse_value(key, raw)
        except ValueError as exc:
            raise ScenarioError(f"{key}: {exc}", key_lines[key]) from None

    kwargs = {}
    for section, cls in _SECTIONS.items():
        values = {**_DEFAULT_KW.get(section, {}), **parsed.get(section, {})}
        try:
            kwargs[section] = cls(**values)
        except ValueError as exc:
            bad_keys = [k for k in raw_values if k.startswith(section + ".")]
            line = key_lines[bad_keys[0]] if bad_keys else None
            raise ScenarioError(f"{section}: {exc}", line) from None
    return ScenarioConfig(**kwargs), raw_values


def loads_scenario(text: str) -> ScenarioConfig:
    return parse_scenario_text(text)[0]


def load_scenario(path) -> ScenarioConfig:
    """Load a scenario file; unspecified keys take the defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_scenario(fh.read())


def dump_scenario(config: ScenarioConfig) -> str:
    """Canonical text form listing every key; load(dump(c)) == c."""
    lines = ["# qkdsim scenario (canonical form)"]
    for key in _FIELD_TYPES:
        section, _, field_name = key.partition(".")
        value = getattr(getattr(config, section), field_name)
        lines.append(f"{key} = {_dump_value(key, value)}")
    return "\n".join(lines) + "\n"


def apply_overrides(config: ScenarioConfig, items: dict[str, str]) -> ScenarioConfig:
    """Return a copy of the scenario with several dotted keys overridden.

    All overrides of a section are applied in one step, so interdependent
    fields (paired lists, bounds) can change together.
    """
    by_section: dict[str, dict[str, object]] = {}
    for key, raw_value in items.items():
        if key not in _FIELD_TYPES:
            raise ScenarioError(f"unknown key {key!r}")
        section, _, field_name = key.partition(".")
        try:
            by_section.setdefault(section, {})[field_name] = _parse_value(key, raw_value)
        except ValueError as exc:
            raise ScenarioError(f"{key}: {exc}") from None
    out = config
    for section, values in by_section.items():
        try:
            out = replace(out, **{section: replace(getattr(out, section), **values)})
        except ValueError as exc:
            raise ScenarioError(f"{section}: {exc}") from None
    return out


def set_value(config: ScenarioConfig, key: str, raw_value: str) -> ScenarioConfig:
    """Return a copy of the scenario with one dotted key overridden."""
    return apply_overrides(config, {key: raw_value})
