"""Experiment configuration: dataclass, JSON loading, and validation.

One structured JSON file per run; unknown keys are rejected and every
validation failure names the offending field. The `paper` profile selects
publication-scale sizes, `ci` desk-scale ones.
"""

import dataclasses
import json
from dataclasses import dataclass, field

EXPERIMENTS = ("los-pattern", "fading-ccdf", "scatter-map", "psd-compare")
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Configuration failure with a field-level message."""


@dataclass
class ExperimentConfig:
    experiment: str
    schema_version: int = SCHEMA_VERSION
    profile: str = "ci"
    # array / users / channel
    num_antennas: int | None = None  # profile default when None
    num_users: int | None = None
    num_taps: int = 15
    num_scatterers: int = 20
    # waveform
    baud_rate: float = 20e6
    rolloff: float = 0.22
    oversampling: int = 7
    span_symbols: int = 32
    num_symbols: int | None = None
    constellation: str = "gaussian"
    carrier_frequency: float = 2e9
    # front end
    target_aclr_db: float = 23.0
    siso_target_aclr_db: float | None = None  # defaults to target_aclr_db
    a3_over_a1: float = -0.05
    # precoding
    allocation_mode: str = "equal"
    user_angles_deg: list[float] | None = None
    user_path_gains: list[float] | None = None
    # analysis grids
    angle_start_deg: float = -90.0
    angle_stop_deg: float = 90.0
    angle_step_deg: float = 0.25
    psd_segment_length: int = 4096
    # Monte Carlo
    num_realizations: int | None = None
    master_seed: int = 1
    # scatter map geometry
    region_center_east_m: float = 250.0
    region_size_m: float = 100.0
    map_grid: int = 100
    # correlated-victim statistics (paper case 2) are out of scope; the flag
    # exists so configs can state the assumption explicitly
    victim_correlated: bool = False
    out_dir: str = "out"

    def __post_init__(self):
        self.validate()

    # profile-dependent defaults, by experiment
    _PROFILE_DEFAULTS = {
        "los-pattern": {
            "ci": {"num_antennas": 64, "num_users": 1, "num_symbols": 8192, "num_realizations": 1},
            "paper": {"num_antennas": 300, "num_users": 1, "num_symbols": 8192, "num_realizations": 1},
        },
        "fading-ccdf": {
            "ci": {"num_antennas": 100, "num_users": 10, "num_symbols": 16384, "num_realizations": 10_000},
            "paper": {"num_antennas": 100, "num_users": 10, "num_symbols": 16384, "num_realizations": 100_000},
        },
        "scatter-map": {
            "ci": {"num_antennas": 100, "num_users": 3, "num_symbols": 8192, "num_realizations": 1},
            "paper": {"num_antennas": 100, "num_users": 3, "num_symbols": 8192, "num_realizations": 1},
        },
        "psd-compare": {
            "ci": {"num_antennas": 100, "num_users": 1, "num_symbols": 4096, "num_realizations": 32},
            "paper": {"num_antennas": 100, "num_users": 1, "num_symbols": 4096, "num_realizations": 200},
        },
    }

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: {self.experiment!r} not one of {EXPERIMENTS}")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"schema_version: got {self.schema_version}, this build reads {SCHEMA_VERSION}"
            )
        if self.profile not in ("ci", "paper"):
            raise ConfigError(f"profile: {self.profile!r} not one of ('ci', 'paper')")
        defaults = self._PROFILE_DEFAULTS[self.experiment][self.profile]
        for name, value in defaults.items():
            if getattr(self, name) is None:
                setattr(self, name, value)
        for name in (
            "num_antennas",
            "num_users",
            "num_taps",
            "num_scatterers",
            "oversampling",
            "span_symbols",
            "num_symbols",
            "num_realizations",
            "psd_segment_length",
            "map_grid",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name}: must be a positive integer, got {value!r}")
        for name in ("baud_rate", "carrier_frequency", "region_size_m", "angle_step_deg"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(f"{name}: must be positive, got {value!r}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigError(f"rolloff: must lie in [0, 1], got {self.rolloff}")
        if self.constellation not in ("gaussian", "qpsk"):
            raise ConfigError(f"constellation: {self.constellation!r} unknown")
        if self.allocation_mode not in ("equal", "inverse_path_loss"):
            raise ConfigError(f"allocation_mode: {self.allocation_mode!r} unknown")
        if self.num_users > self.num_antennas:
            raise ConfigError(
                f"num_users: {self.num_users} exceeds num_antennas {self.num_antennas}"
            )
        if self.angle_stop_deg <= self.angle_start_deg:
            raise ConfigError("angle_stop_deg: must exceed angle_start_deg")
        if self.user_angles_deg is not None and len(self.user_angles_deg) != self.num_users:
            raise ConfigError(
                f"user_angles_deg: {len(self.user_angles_deg)} entries for "
                f"{self.num_users} users"
            )
        if self.user_path_gains is not None:
            if len(self.user_path_gains) != self.num_users:
                raise ConfigError(
                    f"user_path_gains: {len(self.user_path_gains)} entries for "
                    f"{self.num_users} users"
                )
            if any(g <= 0 for g in self.user_path_gains):
                raise ConfigError("user_path_gains: all gains must be positive")
        if self.victim_correlated:
            raise ConfigError(
                "victim_correlated: correlated victim/served channels (case 2) are "
                "out of scope; only false is supported"
            )
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ConfigError(f"master_seed: must be a nonnegative integer, got {self.master_seed!r}")

    @property
    def siso_aclr_db(self) -> float:
        return self.target_aclr_db if self.siso_target_aclr_db is None else self.siso_target_aclr_db

    def angle_grid_deg(self):
        import numpy as np

        count = int(round((self.angle_stop_deg - self.angle_start_deg) / self.angle_step_deg)) + 1
        return np.linspace(self.angle_start_deg, self.angle_stop_deg, count)

    def resolved_user_angles_deg(self):
        import numpy as np

        if self.user_angles_deg is not None:
            return list(self.user_angles_deg)
        if self.num_users == 1:
            return [0.0]
        return list(np.linspace(-45.0, 45.0, self.num_users))

    def resolved_path_gains(self):
        if self.user_path_gains is not None:
            return list(self.user_path_gains)
        return [1.0] * self.num_users

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def config_from_dict(data: dict, overrides: dict | None = None) -> ExperimentConfig:
    data = dict(data)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "experiment" not in data:
        raise ConfigError("experiment: required field missing")
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str, overrides: dict | None = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return config_from_dict(data, overrides)
