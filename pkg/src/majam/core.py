"""Configuration, unit conversions and shared conventions.

Everything internal runs in linear units (watts, meters); dB and dBm
appear only at the configuration and reporting boundaries, which keeps
the SINR arithmetic free of mixed-unit mistakes.  The defaults describe
the desk-scale reference setup: a 4-antenna base station at the origin
serving four single-antenna users spread over a disk, and a 4-antenna
movable-array jammer sitting on the x-axis at (100, 0).

Config files are TOML with four sections: ``[system]``, ``[geometry]``,
``[algorithm]`` and ``[sweep]``.  Power-like keys accept either linear
values (``jammer_power_w = 1.0``) or unit strings (``jammer_power =
"30 dBm"``, ``pathloss_ref_bs = "-30 dB"``).  An empty file yields the
defaults below.  Invalid combinations are rejected with the offending
field named, never silently clamped.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

# Jamming configurations understood by the simulator and the sweep engine.
JAM_MODES = ("none", "fpa-partial", "fpa-full", "ma-partial", "ma-full")


class ConfigError(ValueError):
    """Configuration could not be read, parsed, or violates an invariant."""


# ---------------------------------------------------------------------------
# Unit conversions
# ---------------------------------------------------------------------------

def dbm_to_watts(p_dbm: float) -> float:
    """Convert a power in dBm to linear watts: 10^((p_dbm - 30) / 10)."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    """Convert a strictly positive power in watts to dBm."""
    if p_watts <= 0.0:
        raise ValueError("watts_to_dbm requires a strictly positive power")
    return 10.0 * math.log10(p_watts) + 30.0


def db_to_linear(x_db: float) -> float:
    """Convert a dB ratio to a linear ratio: 10^(x_db / 10)."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a strictly positive linear ratio to dB."""
    if x <= 0.0:
        raise ValueError("linear_to_db requires a strictly positive ratio")
    return 10.0 * math.log10(x)


# ---------------------------------------------------------------------------
# Configuration dataclasses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Geometry:
    """Site layout on the z = 0 plane, in meters."""

    bs_position: tuple[float, float] = (0.0, 0.0)
    jammer_position: tuple[float, float] = (100.0, 0.0)
    user_center: tuple[float, float] = (50.0, 50.0)
    user_radius_m: float = 40.0


@dataclass(frozen=True)
class AlgorithmParams:
    """Knobs for the alternating jammer optimization and the Monte-Carlo loop."""

    epsilon: float = 1e-4          # Frobenius-delta convergence tolerance
    t1_max: int = 30               # outer (alternating) iteration cap
    t2_max: int = 50               # inner iteration cap per block
    trust_radius_m: float = 1e-3   # per-antenna step bound; wavelength / 10 at defaults
    monte_carlo_runs: int = 100
    master_seed: int = 1
    paper_faithful: bool = False   # raw linearized position steps, no trust region
    position_probe: bool = True    # lattice-probe the start of the position ascent
    probe_pitch_m: float = 5e-4    # probe lattice pitch; wavelength / 20 at defaults


@dataclass(frozen=True)
class SweepParams:
    """Default axes for the power and location experiments."""

    powers_w: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0)
    x_coords_m: tuple[float, ...] = (
        0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0)
    modes: tuple[str, ...] = JAM_MODES


@dataclass(frozen=True)
class SystemConfig:
    """Validated scalar parameters of the whole scenario.

    Defaults: N = K = M = 4, wavelength 0.01 m, BS power 40 dBm (10 W),
    jammer budget 30 dBm (1 W), noise -80 dBm (1e-11 W), reference path
    gains -30 dB / -40 dB, path-loss exponents 2.8, six propagation paths
    per user and a 1 bps/Hz per-user rate threshold.
    """

    n_bs_antennas: int = 4            # N
    n_users: int = 4                  # K
    n_jammer_antennas: int = 4        # M
    wavelength_m: float = 0.01
    array_half_length_m: float = 0.04   # movable antennas live in y in [-L, L]
    min_spacing_m: float = 0.02         # consecutive-antenna spacing, always 2x wavelength
    bs_power_w: float = 10.0
    jammer_power_w: float = 1.0
    noise_power_w: float = 1e-11
    pathloss_ref_bs: float = 1e-3       # linear gain at 1 m, BS-user links
    pathloss_ref_jam: float = 1e-4      # linear gain at 1 m, jammer-user links
    alpha_bs: float = 2.8
    alpha_jam: float = 2.8
    n_paths: int = 6                    # transmit = receive path count per user
    rate_threshold_bps_hz: float = 1.0
    noise_power_per_user_w: tuple[float, ...] | None = None
    random_user_offset: bool = False    # draw a random user antenna offset instead of the local origin
    geometry: Geometry = field(default_factory=Geometry)
    algorithm: AlgorithmParams = field(default_factory=AlgorithmParams)
    sweep: SweepParams = field(default_factory=SweepParams)

    def __post_init__(self) -> None:
        _validate(self)

    def noise_vector(self) -> tuple[float, ...]:
        """Per-user noise powers in watts (shared value unless overridden)."""
        if self.noise_power_per_user_w is not None:
            return self.noise_power_per_user_w
        return (self.noise_power_w,) * self.n_users


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _validate(cfg: SystemConfig) -> None:
    for name in ("n_bs_antennas", "n_users", "n_jammer_antennas", "n_paths"):
        value = getattr(cfg, name)
        _require(isinstance(value, int) and value >= 1,
                 f"{name}: must be a positive integer, got {value!r}")
    _require(cfg.n_users <= cfg.n_bs_antennas,
             f"constraint 'K <= N' violated: n_users={cfg.n_users} > "
             f"n_bs_antennas={cfg.n_bs_antennas}")
    _require(cfg.n_users <= cfg.n_jammer_antennas,
             f"constraint 'K <= M' violated: n_users={cfg.n_users} > "
             f"n_jammer_antennas={cfg.n_jammer_antennas}")
    _require(cfg.wavelength_m > 0, "wavelength_m: must be > 0")
    _require(cfg.array_half_length_m > 0, "array_half_length_m: must be > 0")
    _require(cfg.min_spacing_m > 0, "min_spacing_m: must be > 0")
    _require(math.isclose(cfg.min_spacing_m, 2.0 * cfg.wavelength_m,
                          rel_tol=1e-12),
             f"min_spacing_m: must equal 2 * wavelength_m "
             f"({2.0 * cfg.wavelength_m!r}), got {cfg.min_spacing_m!r}")
    needed = (cfg.n_jammer_antennas - 1) * cfg.wavelength_m
    _require(cfg.array_half_length_m >= needed - 1e-15,
             f"array_half_length_m: {cfg.array_half_length_m!r} cannot fit "
             f"{cfg.n_jammer_antennas} antennas at 2-wavelength spacing "
             f"(needs >= {needed!r})")
    _require(cfg.bs_power_w >= 0, "bs_power_w: must be >= 0")
    _require(cfg.jammer_power_w >= 0, "jammer_power_w: must be >= 0")
    _require(cfg.noise_power_w > 0, "noise_power_w: must be > 0")
    _require(cfg.pathloss_ref_bs > 0, "pathloss_ref_bs: must be > 0")
    _require(cfg.pathloss_ref_jam > 0, "pathloss_ref_jam: must be > 0")
    _require(cfg.alpha_bs > 0, "alpha_bs: must be > 0")
    _require(cfg.alpha_jam > 0, "alpha_jam: must be > 0")
    _require(cfg.rate_threshold_bps_hz > 0, "rate_threshold_bps_hz: must be > 0")
    if cfg.noise_power_per_user_w is not None:
        _require(len(cfg.noise_power_per_user_w) == cfg.n_users,
                 f"noise_power_per_user_w: expected {cfg.n_users} entries, "
                 f"got {len(cfg.noise_power_per_user_w)}")
        _require(all(v > 0 for v in cfg.noise_power_per_user_w),
                 "noise_power_per_user_w: all entries must be > 0")
    _require(cfg.geometry.user_radius_m > 0, "user_radius_m: must be > 0")
    alg = cfg.algorithm
    _require(alg.epsilon > 0, "epsilon: must be > 0")
    _require(alg.t1_max >= 1, "t1_max: must be >= 1")
    _require(alg.t2_max >= 1, "t2_max: must be >= 1")
    _require(alg.trust_radius_m > 0, "trust_radius_m: must be > 0")
    _require(alg.probe_pitch_m > 0, "probe_pitch_m: must be > 0")
    _require(alg.monte_carlo_runs >= 1, "monte_carlo_runs: must be >= 1")
    _require(isinstance(alg.master_seed, int) and alg.master_seed >= 0,
             "master_seed: must be a nonnegative integer")
    _require(all(p >= 0 for p in cfg.sweep.powers_w),
             "sweep.powers_w: powers must be >= 0")
    for mode in cfg.sweep.modes:
        _require(mode in JAM_MODES,
                 f"sweep.modes: unknown mode {mode!r} (choose from {JAM_MODES})")


def make_config(**overrides) -> SystemConfig:
    """Build a SystemConfig, filling wavelength-dependent defaults.

    ``min_spacing_m`` defaults to twice the wavelength and
    ``array_half_length_m`` to ``n_jammer_antennas * wavelength_m`` when
    not given, so overriding the wavelength or the antenna count alone
    produces a consistent geometry.
    """
    wavelength = overrides.get("wavelength_m", 0.01)
    m = overrides.get("n_jammer_antennas", 4)
    overrides.setdefault("min_spacing_m", 2.0 * wavelength)
    overrides.setdefault("array_half_length_m", m * wavelength)
    if "algorithm" not in overrides and not math.isclose(wavelength, 0.01):
        overrides["algorithm"] = AlgorithmParams(
            trust_radius_m=wavelength / 10.0, probe_pitch_m=wavelength / 20.0)
    return SystemConfig(**overrides)


def with_jammer_power(cfg: SystemConfig, p_watts: float) -> SystemConfig:
    return dataclasses.replace(cfg, jammer_power_w=float(p_watts))


def with_jammer_position(cfg: SystemConfig, x_m: float, y_m: float = 0.0) -> SystemConfig:
    geom = dataclasses.replace(cfg.geometry, jammer_position=(float(x_m), float(y_m)))
    return dataclasses.replace(cfg, geometry=geom)


def with_master_seed(cfg: SystemConfig, seed: int) -> SystemConfig:
    alg = dataclasses.replace(cfg.algorithm, master_seed=int(seed))
    return dataclasses.replace(cfg, algorithm=alg)


# ---------------------------------------------------------------------------
# Config file loading
# ---------------------------------------------------------------------------

# Keys that accept a bare linear value or a "NN dBm" / "NN dB" string.
_POWER_ALIASES = {
    "bs_power": "bs_power_w",
    "jammer_power": "jammer_power_w",
    "noise_power": "noise_power_w",
}
_GAIN_KEYS = ("pathloss_ref_bs", "pathloss_ref_jam")

_SYSTEM_KEYS = {
    "n_bs_antennas", "n_users", "n_jammer_antennas", "wavelength_m",
    "array_half_length_m", "min_spacing_m", "bs_power_w", "jammer_power_w",
    "noise_power_w", "bs_power", "jammer_power", "noise_power",
    "pathloss_ref_bs", "pathloss_ref_jam", "alpha_bs", "alpha_jam",
    "n_paths", "rate_threshold_bps_hz", "noise_power_per_user_w",
    "random_user_offset",
}
_GEOMETRY_KEYS = {"bs_position", "jammer_position", "user_center", "user_radius_m"}
_ALGORITHM_KEYS = {"epsilon", "t1_max", "t2_max", "trust_radius_m",
                   "monte_carlo_runs", "master_seed", "paper_faithful",
                   "position_probe", "probe_pitch_m"}
_SWEEP_KEYS = {"powers_w", "x_coords_m", "modes"}


def _parse_unit_value(name: str, value, kind: str) -> float:
    """Parse a power ('dBm') or gain ('dB') entry to its linear value."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        if kind == "power" and text.endswith("dbm"):
            return dbm_to_watts(_parse_float(name, text[:-3]))
        if kind == "gain" and text.endswith("db"):
            return db_to_linear(_parse_float(name, text[:-2]))
        unit = "dBm" if kind == "power" else "dB"
        raise ConfigError(f"{name}: expected a linear value or a '<number> {unit}' "
                          f"string, got {value!r}")
    raise ConfigError(f"{name}: unsupported value {value!r}")


def _parse_float(name: str, text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"{name}: cannot parse number from {text!r}") from None


def _pair(name: str, value) -> tuple[float, float]:
    if (not isinstance(value, (list, tuple))) or len(value) != 2:
        raise ConfigError(f"{name}: expected a 2-element [x, y] list, got {value!r}")
    return (float(value[0]), float(value[1]))


def _check_keys(section: str, data: dict, allowed: set) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"[{section}] has unknown key {key!r}")


def load_config(path: str) -> SystemConfig:
    """Load and validate a TOML config file; missing keys take defaults."""
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid TOML: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> SystemConfig:
    """Build a validated SystemConfig from a nested plain dict."""
    for section in raw:
        if section not in ("system", "geometry", "algorithm", "sweep"):
            raise ConfigError(f"unknown config section [{section}]")
    system = dict(raw.get("system", {}))
    _check_keys("system", system, _SYSTEM_KEYS)
    kwargs: dict = {}
    for alias, target in _POWER_ALIASES.items():
        if alias in system and target in system:
            raise ConfigError(f"[system] sets both {alias!r} and {target!r}")
        if alias in system:
            kwargs[target] = _parse_unit_value(alias, system.pop(alias), "power")
        elif target in system:
            kwargs[target] = _parse_unit_value(target, system.pop(target), "power")
    for key in _GAIN_KEYS:
        if key in system:
            kwargs[key] = _parse_unit_value(key, system.pop(key), "gain")
    if "noise_power_per_user_w" in system:
        values = system.pop("noise_power_per_user_w")
        if not isinstance(values, (list, tuple)):
            raise ConfigError("noise_power_per_user_w: expected a list")
        kwargs["noise_power_per_user_w"] = tuple(
            _parse_unit_value("noise_power_per_user_w", v, "power") for v in values)
    kwargs.update(system)

    if "geometry" in raw:
        geo = dict(raw["geometry"])
        _check_keys("geometry", geo, _GEOMETRY_KEYS)
        geo_kwargs: dict = {}
        for key in ("bs_position", "jammer_position", "user_center"):
            if key in geo:
                geo_kwargs[key] = _pair(key, geo.pop(key))
        geo_kwargs.update({k: float(v) for k, v in geo.items()})
        kwargs["geometry"] = Geometry(**geo_kwargs)

    wavelength = float(kwargs.get("wavelength_m", 0.01))
    if "algorithm" in raw:
        alg = dict(raw["algorithm"])
        _check_keys("algorithm", alg, _ALGORITHM_KEYS)
        alg.setdefault("trust_radius_m", wavelength / 10.0)
        alg.setdefault("probe_pitch_m", wavelength / 20.0)
        kwargs["algorithm"] = AlgorithmParams(**alg)
    elif not math.isclose(wavelength, 0.01):
        kwargs["algorithm"] = AlgorithmParams(
            trust_radius_m=wavelength / 10.0, probe_pitch_m=wavelength / 20.0)

    if "sweep" in raw:
        swp = dict(raw["sweep"])
        _check_keys("sweep", swp, _SWEEP_KEYS)
        sweep_kwargs: dict = {}
        if "powers_w" in swp:
            sweep_kwargs["powers_w"] = tuple(float(v) for v in swp["powers_w"])
        if "x_coords_m" in swp:
            sweep_kwargs["x_coords_m"] = tuple(float(v) for v in swp["x_coords_m"])
        if "modes" in swp:
            sweep_kwargs["modes"] = tuple(str(v) for v in swp["modes"])
        kwargs["sweep"] = SweepParams(**sweep_kwargs)

    m = int(kwargs.get("n_jammer_antennas", 4))
    kwargs.setdefault("min_spacing_m", 2.0 * wavelength)
    kwargs.setdefault("array_half_length_m", m * wavelength)
    try:
        return SystemConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def config_to_dict(cfg: SystemConfig) -> dict:
    """Nested plain-dict snapshot of a config (JSON-serializable)."""
    system = {}
    for f in dataclasses.fields(cfg):
        if f.name in ("geometry", "algorithm", "sweep"):
            continue
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = list(value)
        system[f.name] = value
    if system["noise_power_per_user_w"] is None:
        del system["noise_power_per_user_w"]
    return {
        "system": system,
        "geometry": {
            "bs_position": list(cfg.geometry.bs_position),
            "jammer_position": list(cfg.geometry.jammer_position),
            "user_center": list(cfg.geometry.user_center),
            "user_radius_m": cfg.geometry.user_radius_m,
        },
        "algorithm": dataclasses.asdict(cfg.algorithm),
        "sweep": {
            "powers_w": list(cfg.sweep.powers_w),
            "x_coords_m": list(cfg.sweep.x_coords_m),
            "modes": list(cfg.sweep.modes),
        },
    }


def format_config(cfg: SystemConfig) -> str:
    """Human-readable key = value dump, section by section."""
    parts = []
    for section, data in config_to_dict(cfg).items():
        parts.append(f"[{section}]")
        for key, value in data.items():
            parts.append(f"{key} = {value!r}")
        parts.append("")
    return "\n".join(parts)
