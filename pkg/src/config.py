"""
Module for handling JSON run configuration files.

Author:
Nikki Hess (nkhess@umich.edu)
"""

# built-in
from dataclasses import dataclass, replace
from pathlib import Path
import hashlib
import json
import math

# pypi
import numpy as np

# my modules
from nikki_utils import tsprint
from .cavity import CavityConfig, LaserConfig
from .errors import ConfigError, ValidationError
from .membrane import MembraneGeometry, Mode, mode_frequencies, rescale_sound_speed
from .noise import MechanicalMode

CONFIG_DEFAULTS_PATH = Path(__file__).resolve().parent.parent / "config_defaults"
DEFAULT_CONFIG_NAME = "tabletop.json"
SPACINGS = ("linear", "log")

@dataclass(frozen=True)
class GridConfig:
    f_min: float
    f_max: float
    points: int
    spacing: str = "log"

    def __post_init__(self):
        if not self.f_min > 0:
            raise ValidationError("f_min must be positive", "grid")
        if not self.f_min < self.f_max:
            raise ValidationError(f"f_min ({self.f_min}) must be below f_max ({self.f_max})", "grid")
        if self.points < 2:
            raise ValidationError("need at least 2 points", "grid")
        if self.spacing not in SPACINGS:
            raise ValidationError(f"spacing must be one of {SPACINGS}", "grid.spacing")

@dataclass(frozen=True)
class ReadoutConfig:
    port: int = 2
    zeta: float = math.pi / 2
    optimal_readout: bool = False

    def __post_init__(self):
        if self.port not in (1, 2):
            raise ValidationError("port must be 1 or 2", "readout.port")
        if not 0 < self.zeta <= math.pi:
            raise ValidationError("homodyne angle must be in (0, pi]", "readout.zeta_rad")

@dataclass(frozen=True)
class MembraneConfig:
    geometry: MembraneGeometry
    f11: float | None
    quality_factor: float
    max_m: int
    max_n: int
    mass_fraction: float
    effective_mass: float | None

@dataclass(frozen=True)
class MechanicsConfig:
    free_mass: bool
    mass: float | None
    omega_m_hz: float | None
    quality_factor: float | None

@dataclass(frozen=True)
class RunConfig:
    cavity: CavityConfig
    laser: LaserConfig
    membrane: MembraneConfig
    mechanics: MechanicsConfig
    grid: GridConfig
    readout: ReadoutConfig
    back_mirror_power_transmission: float = 0.0
    waist_um: tuple = ()
    config_hash: str = ""
    source: str = ""

    def modes(self) -> list[Mode]:
        """Membrane mode ladder, rescaled to the measured fundamental when one is configured."""
        membrane = self.membrane
        modes = mode_frequencies(
            membrane.geometry, membrane.max_m, membrane.max_n, membrane.quality_factor,
            membrane.mass_fraction, membrane.effective_mass,
        )
        if membrane.f11 is not None:
            modes = rescale_sound_speed(modes, membrane.f11)
        return modes

    @property
    def mass(self) -> float:
        """Test mass, the explicit mechanics mass or else the membrane's modal mass."""
        if self.mechanics.mass is not None:
            return self.mechanics.mass
        return self.modes()[0].M_eff

    def mechanical_mode(self) -> MechanicalMode:
        mechanics = self.mechanics
        if mechanics.free_mass:
            return MechanicalMode.free(self.mass)

        fundamental = self.modes()[0]
        frequency = mechanics.omega_m_hz if mechanics.omega_m_hz is not None else fundamental.frequency
        quality = mechanics.quality_factor if mechanics.quality_factor is not None else fundamental.Q
        return MechanicalMode.from_quality(self.mass, 2 * math.pi * frequency, quality)

    def frequencies_hz(self) -> np.ndarray:
        return frequency_grid_hz(self.grid)

    def omega_grid(self) -> np.ndarray:
        return frequency_grid(self.grid)

def frequency_grid_hz(grid: GridConfig) -> np.ndarray:
    if grid.spacing == "log":
        return np.geomspace(grid.f_min, grid.f_max, grid.points)
    return np.linspace(grid.f_min, grid.f_max, grid.points)

def frequency_grid(grid: GridConfig) -> np.ndarray:
    """Sideband angular frequencies for a grid given in Hz, rad/s."""
    return 2 * math.pi * frequency_grid_hz(grid)

def with_grid(config: RunConfig, f_min: float | None = None, f_max: float | None = None,
              points: int | None = None) -> RunConfig:
    """Returns a copy with selected grid fields replaced (re-validated)."""
    grid = config.grid
    new_grid = GridConfig(
        f_min=grid.f_min if f_min is None else f_min,
        f_max=grid.f_max if f_max is None else f_max,
        points=grid.points if points is None else points,
        spacing=grid.spacing,
    )
    return replace(config, grid=new_grid)

def config_hash(config_path: str) -> str:
    """sha256 of the config file's bytes."""
    return hashlib.sha256(Path(config_path).read_bytes()).hexdigest()

def _unknown_keys(data: dict, schema: dict, prefix: str = "") -> list[str]:
    unknown = []
    for key, value in data.items():
        location = f"{prefix}{key}"
        if key not in schema:
            unknown.append(location)
        elif isinstance(value, dict) and isinstance(schema[key], dict):
            unknown.extend(_unknown_keys(value, schema[key], f"{location}."))
    return unknown

def get_and_verify_config_data(config_path: str, defaults_name: str = DEFAULT_CONFIG_NAME) -> dict:
    """
    Opens a config file based on its (relative or absolute) path and checks it against
    the shipped defaults. Nested fields missing from the file are filled in from the
    defaults with a warning.

    :param config_path: the (relative or absolute) path of the config file to open
    :type config_path: str

    :param defaults_name: file in config_defaults used as the schema. default = tabletop.json
    :type defaults_name: str

    :raises ConfigError: if the file is missing, empty, malformed, lacks a section or has unknown keys

    :return: the config's data
    :rtype: dict
    """
    config_file = Path(config_path)
    tsprint(f'Getting/verifying config data for "{config_file.name}"')

    config_defaults = CONFIG_DEFAULTS_PATH / defaults_name
    if not config_defaults.exists():
        tsprint(f'ERROR: Defaults did not exist at "{config_defaults}". Verify the defaults exist.')
        raise ConfigError("defaults schema is missing", defaults_name)

    if not config_file.exists():
        tsprint(f'ERROR: Config file "{config_file}" does not exist.')
        raise ConfigError("file does not exist", config_file.name)

    # check for empty config file
    if config_file.stat().st_size == 0 or not config_file.read_text().strip():
        tsprint(f'ERROR: Config file "{config_file.name}" was empty.')
        raise ConfigError("config file was empty", config_file.name)

    # check for malformed JSON
    try:
        config_data = json.loads(config_file.read_text())
    except json.JSONDecodeError as e:
        tsprint(f'ERROR: Config JSON was malformed for "{config_file.name}": {e}')
        raise ConfigError(f"malformed JSON: {e}", config_file.name)

    if not isinstance(config_data, dict):
        tsprint(f'ERROR: Config JSON for "{config_file.name}" is not an object.')
        raise ConfigError("top level must be a JSON object", config_file.name)

    # check for missing and unknown fields
    tsprint(f'Checking for missing fields in config "{config_file.name}" from defaults.')
    config_defaults_data: dict = json.loads(config_defaults.read_text())
    missing_fields = [key for key in config_defaults_data.keys() if key not in config_data]
    if missing_fields:
        missing_fields_str = ", ".join(missing_fields)
        tsprint(f'ERROR: Required fields were missing in "{config_file.name}": {missing_fields_str}')
        raise ConfigError(f"missing sections: {missing_fields_str}", config_file.name)

    unknown = _unknown_keys(config_data, config_defaults_data)
    if unknown:
        tsprint(f'ERROR: Unknown fields in "{config_file.name}": {", ".join(unknown)}')
        raise ConfigError("unknown key", unknown[0])

    for section, defaults in config_defaults_data.items():
        if not isinstance(config_data[section], dict):
            raise ConfigError("section must be a JSON object", section)
        for key, value in defaults.items():
            if key not in config_data[section]:
                tsprint(f'WARNING: "{section}.{key}" missing, using default {value!r}.')
                config_data[section][key] = value

    tsprint("No missing fields found. Proceeding.")
    return config_data

def _number(section: dict, name: str, key: str, optional: bool = False) -> float | None:
    value = section[key]
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"expected a number, got {value!r}", f"{name}.{key}")
    return float(value)

def _integer(section: dict, name: str, key: str) -> int:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"expected an integer, got {value!r}", f"{name}.{key}")
    return value

def _number_list(section: dict, name: str, key: str) -> tuple[float, ...]:
    values = section[key]
    if values is None:
        return ()
    if not isinstance(values, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
        raise ConfigError(f"expected a list of numbers, got {values!r}", f"{name}.{key}")
    return tuple(values)

def _build(data: dict) -> dict:
    cavity = data["cavity"]
    override_hz = _number(cavity, "cavity", "linewidth_override_hz", optional=True)
    cavity_cfg = CavityConfig.from_powers(
        _number(cavity, "cavity", "length_1_m"),
        _number(cavity, "cavity", "length_2_m"),
        _number(cavity, "cavity", "front_power_transmission"),
        _number(cavity, "cavity", "membrane_power_reflectivity"),
        None if override_hz is None else 2 * math.pi * override_hz,
    )

    laser = data["laser"]
    laser_cfg = LaserConfig(
        _number(laser, "laser", "wavelength_m"),
        _number(laser, "laser", "input_power_w"),
        laser["branch"],
    )

    membrane = data["membrane"]
    membrane_cfg = MembraneConfig(
        geometry=MembraneGeometry(
            _number(membrane, "membrane", "side_x_m"),
            _number(membrane, "membrane", "side_y_m"),
            _number(membrane, "membrane", "stress_pa"),
            _number(membrane, "membrane", "density_kg_m3"),
            _number(membrane, "membrane", "thickness_m"),
        ),
        f11=_number(membrane, "membrane", "f11_hz", optional=True),
        quality_factor=_number(membrane, "membrane", "quality_factor"),
        max_m=_integer(membrane, "membrane", "max_m"),
        max_n=_integer(membrane, "membrane", "max_n"),
        mass_fraction=_number(membrane, "membrane", "effective_mass_fraction"),
        effective_mass=_number(membrane, "membrane", "effective_mass_kg", optional=True),
    )

    mechanics = data["mechanics"]
    if not isinstance(mechanics["free_mass"], bool):
        raise ValidationError("expected true or false", "mechanics.free_mass")
    mechanics_cfg = MechanicsConfig(
        free_mass=mechanics["free_mass"],
        mass=_number(mechanics, "mechanics", "mass_kg", optional=True),
        omega_m_hz=_number(mechanics, "mechanics", "omega_m_hz", optional=True),
        quality_factor=_number(mechanics, "mechanics", "quality_factor", optional=True),
    )
    if mechanics_cfg.mass is not None and not mechanics_cfg.mass > 0:
        raise ValidationError("mass must be positive", "mechanics.mass_kg")

    grid = data["grid"]
    grid_cfg = GridConfig(
        _number(grid, "grid", "f_min_hz"),
        _number(grid, "grid", "f_max_hz"),
        _integer(grid, "grid", "points"),
        grid["spacing"],
    )

    readout = data["readout"]
    if not isinstance(readout["optimal_readout"], bool):
        raise ValidationError("expected true or false", "readout.optimal_readout")
    readout_cfg = ReadoutConfig(
        _integer(readout, "readout", "port"),
        _number(readout, "readout", "zeta_rad"),
        readout["optimal_readout"],
    )

    back_mirror = _number(cavity, "cavity", "back_mirror_power_transmission")
    if not 0 <= back_mirror < 1:
        raise ValidationError("must be in [0, 1)", "cavity.back_mirror_power_transmission")

    return {
        "cavity": cavity_cfg,
        "laser": laser_cfg,
        "membrane": membrane_cfg,
        "mechanics": mechanics_cfg,
        "grid": grid_cfg,
        "readout": readout_cfg,
        "back_mirror_power_transmission": back_mirror,
        "waist_um": _number_list(cavity, "cavity", "waist_um"),
    }

def load_config(config_path: str) -> RunConfig:
    """
    Loads and validates a run configuration.

    :param config_path: the (relative or absolute) path of the config file
    :type config_path: str

    :raises ConfigError: for unreadable files or structural problems
    :raises ValidationError: for values that violate an invariant, with a dotted location

    :return: the validated configuration
    :rtype: RunConfig
    """
    config_data = get_and_verify_config_data(config_path)

    try:
        sections = _build(config_data)
    except ValidationError as e:
        tsprint(f"ERROR: Invalid configuration: {e}")
        raise

    config = RunConfig(**sections, config_hash=config_hash(config_path), source=str(Path(config_path).resolve()))
    tsprint(f'Config file "{Path(config_path).name}" loaded successfully.')
    return config
