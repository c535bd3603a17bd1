"""Scenario configuration: schema, validation, JSON loading, presets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path

from .errors import ConfigError, UnknownPreset

__all__ = ["ScenarioConfig", "load_config", "config_from_dict", "preset",
           "PRESET_NAMES", "bundled_cdl_path"]

_TOP_FIELDS = {
    "carrier_ghz",
    "bs_aperture",
    "ue_aperture",
    "spacing_list",
    "spectrum_spec",
    "pattern_spec",
    "efficiency_spec",
    "snr_db",
    "realizations",
    "users",
    "seed",
}

_SPEC_FIELDS = {
    "spectrum_spec": {
        "isotropic": set(),
        "cdl": {"path", "asd_deg", "asa_deg"},
    },
    "pattern_spec": {
        "uniform": set(),
        "dipole": set(),
        "file": {"path"},
    },
    "efficiency_spec": {
        "relative_eta": {"eta"},
        "hannan": set(),
        "sparams": {"bs_path", "ue_path"},
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one experiment.

    Apertures and spacings are in wavelengths (arrays are square); the
    nested specs select the propagation environment, the element pattern,
    and the efficiency model.
    """

    carrier_ghz: float
    bs_aperture: float
    ue_aperture: float
    spacing_list: tuple
    spectrum_spec: dict
    pattern_spec: dict
    efficiency_spec: dict
    snr_db: float
    realizations: int
    users: int
    seed: int

    def validate(self) -> "ScenarioConfig":
        if self.carrier_ghz <= 0:
            raise ConfigError(f"carrier_ghz must be positive, got {self.carrier_ghz}")
        for name, aperture in (
            ("bs_aperture", self.bs_aperture),
            ("ue_aperture", self.ue_aperture),
        ):
            if aperture <= 0:
                raise ConfigError(f"{name} must be positive, got {aperture}")
        if not self.spacing_list:
            raise ConfigError("spacing_list must not be empty")
        for spacing in self.spacing_list:
            if spacing <= 0:
                raise ConfigError(f"spacing {spacing} must be positive")
            for aperture in (self.bs_aperture, self.ue_aperture):
                ratio = aperture / spacing
                if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                    raise ConfigError(
                        f"spacing {spacing} does not divide aperture {aperture}"
                    )
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.users < 1:
            raise ConfigError("users must be >= 1")
        for spec_name in ("spectrum_spec", "pattern_spec", "efficiency_spec"):
            spec = getattr(self, spec_name)
            if not isinstance(spec, dict) or "kind" not in spec:
                raise ConfigError(f"{spec_name} needs a 'kind' field")
            kinds = _SPEC_FIELDS[spec_name]
            kind = spec["kind"]
            if kind not in kinds:
                raise ConfigError(
                    f"{spec_name} kind {kind!r} not one of {sorted(kinds)}"
                )
            extra = set(spec) - kinds[kind] - {"kind"}
            if extra:
                raise ConfigError(f"unknown {spec_name} keys: {sorted(extra)}")
            missing = kinds[kind] - set(spec)
            if missing:
                raise ConfigError(f"{spec_name} missing keys: {sorted(missing)}")
        if self.spectrum_spec["kind"] == "cdl":
            for key in ("asd_deg", "asa_deg"):
                value = self.spectrum_spec[key]
                if not 0.0 < value < 21.0:
                    raise ConfigError(
                        f"spectrum_spec.{key}={value} outside the valid "
                        f"angular-spread range (0, 21) degrees"
                    )
        if self.efficiency_spec["kind"] == "relative_eta":
            eta = self.efficiency_spec["eta"]
            if not 0.0 <= eta <= 1.0:
                raise ConfigError(f"relative efficiency {eta} outside [0, 1]")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spacing_list"] = list(self.spacing_list)
        return d


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build and validate a config from a JSON-shaped dict.

    Unknown keys are rejected at the top level and inside the nested specs.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(data) - _TOP_FIELDS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    missing = _TOP_FIELDS - set(data)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    try:
        config = ScenarioConfig(
            carrier_ghz=float(data["carrier_ghz"]),
            bs_aperture=float(data["bs_aperture"]),
            ue_aperture=float(data["ue_aperture"]),
            spacing_list=tuple(float(s) for s in data["spacing_list"]),
            spectrum_spec=dict(data["spectrum_spec"]),
            pattern_spec=dict(data["pattern_spec"]),
            efficiency_spec=dict(data["efficiency_spec"]),
            snr_db=float(data["snr_db"]),
            realizations=int(data["realizations"]),
            users=int(data["users"]),
            seed=int(data["seed"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc
    return config.validate()


def load_config(path) -> ScenarioConfig:
    """Load a ScenarioConfig from a JSON file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def bundled_cdl_path() -> str:
    """Filesystem path of the packaged CDL-B cluster table."""
    return str(resources.files("holomimo").joinpath("data/cdl_b.csv"))


PRESET_NAMES = (
    "fig3-isotropic",
    "fig3-cdlb",
    "fig3-hannan",
    "fig3-dipole",
    "fig4-multiuser",
)


def preset(name: str) -> ScenarioConfig:
    """Named single-user and multi-user evaluation scenarios.

    All presets share the 3.5 GHz carrier, a 4x4 wavelength transmit
    aperture, a 1x1 wavelength receive aperture, 0 dB SNR, 1000 channel
    realizations, and the spacing sweep {1/2, 1/4, 1/8} wavelengths.
    """
    if name not in PRESET_NAMES:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    base = ScenarioConfig(
        carrier_ghz=3.5,
        bs_aperture=4.0,
        ue_aperture=1.0,
        spacing_list=(0.5, 0.25, 0.125),
        spectrum_spec={"kind": "isotropic"},
        pattern_spec={"kind": "uniform"},
        efficiency_spec={"kind": "relative_eta", "eta": 1.0},
        snr_db=0.0,
        realizations=1000,
        users=1,
        seed=0,
    )
    cdl_spec = {
        "kind": "cdl",
        "path": bundled_cdl_path(),
        "asd_deg": 10.0,
        "asa_deg": 20.0,
    }
    if name == "fig3-isotropic":
        config = base
    elif name == "fig3-cdlb":
        config = replace(base, spectrum_spec=cdl_spec)
    elif name == "fig3-hannan":
        config = replace(base, efficiency_spec={"kind": "hannan"})
    elif name == "fig3-dipole":
        config = replace(base, pattern_spec={"kind": "dipole"})
    else:  # fig4-multiuser
        config = replace(base, spectrum_spec=cdl_spec, users=10)
    return config.validate()
