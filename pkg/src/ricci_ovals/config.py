"""Run configuration: key-value config files, environment defaults and validation.

Config files use the ``KEY=value`` format read by python-dotenv. Keys are
case-insensitive and may use dashes or underscores. Values from the command
line override values from the file, which override the built-in defaults.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "RICCI_OVALS_"
DEFAULT_OUTPUT_DIR = "output"
COMMANDS = ("bryant", "barrier", "spectral", "flow", "residual", "predict")


def _bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _floats(value: Any) -> Tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(v) for v in str(value).split(",") if v.strip())


def _ints(value: Any) -> Tuple[int, ...]:
    return tuple(int(v) for v in _floats(value))


@dataclass(frozen=True)
class Param:
    """One typed configuration parameter with its precondition."""

    kind: Callable[[Any], Any]
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    requirement: str = ""


def _all(pred):
    return lambda values: len(values) > 0 and all(pred(v) for v in values)


SCHEMAS: Dict[str, Dict[str, Param]] = {
    "bryant": {
        "rho_max": Param(float, 50.0, lambda v: v >= 10, "rho_max >= 10"),
        "tol": Param(float, 1e-10, lambda v: 1e-14 < v < 1e-4, "1e-14 < tol < 1e-4"),
        "rho_cut": Param(float, 5.0, lambda v: v > 0, "rho_cut > 0"),
    },
    "barrier": {
        "a": Param(_floats, (30.0, 50.0, 100.0), _all(lambda v: v >= 10), "every a >= 10"),
        "eta": Param(float, 0.1, lambda v: 0 < v < 0.5, "0 < eta < 0.5"),
        "r_star": Param(float, 2.0, lambda v: v > 0, "r_star > 0"),
        "u_floor": Param(float, 1.0, lambda v: 0 <= v < math.sqrt(2.0), "0 <= u_floor < sqrt(2)"),
        "n": Param(int, 2001, lambda v: v >= 101, "n >= 101"),
        "tol": Param(float, 1e-10, lambda v: 1e-14 < v < 1e-4, "1e-14 < tol < 1e-4"),
        "with_correction": Param(_bool, True),
    },
    "spectral": {
        "identities": Param(_bool, True),
        "tau": Param(float, -100.0, lambda v: v <= -10, "tau <= -10"),
        "delta": Param(float, 1e-2, lambda v: 0 < v <= 1, "0 < delta <= 1"),
        "theta": Param(float, 0.01, lambda v: 0 < v <= 1, "0 < theta <= 1"),
        "nodes": Param(int, 60, lambda v: v >= 40, "nodes >= 40"),
        "sigma_max": Param(float, 14.0, lambda v: v >= 12, "sigma_max >= 12"),
    },
    "flow": {
        "fixture": Param(str, "sphere", lambda v: v in ("sphere", "dumbbell", "capsule"), "fixture in sphere|dumbbell|capsule"),
        "n": Param(int, 201, lambda v: v >= 21, "n >= 21"),
        "resolutions": Param(_ints, (), lambda v: all(n >= 21 for n in v), "every resolution >= 21"),
        "r": Param(float, 2.0, lambda v: v > 0, "r > 0"),
        "neck": Param(float, 1.5, lambda v: v > 0, "neck > 0"),
        "bulb": Param(float, 2.0, lambda v: v > 0, "bulb > 0"),
        "dt_factor": Param(float, 0.2, lambda v: 0 < v <= 1, "0 < dt_factor <= 1"),
        "t_end": Param(float, 0.5, lambda v: v > 0, "t_end > 0"),
        "output_every": Param(int, 10, lambda v: v >= 1, "output_every >= 1"),
        "symmetry": Param(_bool, True),
        "tip_collar": Param(float, 0.9, lambda v: v == 0 or 0.5 <= v < 1, "tip_collar = 0 or 0.5 <= tip_collar < 1"),
        "max_steps": Param(int, 200000, lambda v: v >= 1, "max_steps >= 1"),
        "mode": Param(str, "unrescaled", lambda v: v in ("unrescaled", "rescaled"), "mode in unrescaled|rescaled"),
        "dtau": Param(float, 1e-3, lambda v: 0 < v <= 0.1, "0 < dtau <= 0.1"),
        "tau_end": Param(float, 1.0),
    },
    "residual": {
        "region": Param(str, "parabolic", lambda v: v in ("parabolic", "intermediate", "tip", "all"), "region in parabolic|intermediate|tip|all"),
        "tau_ladder": Param(_floats, (100.0, 200.0, 400.0, 800.0), _all(lambda v: abs(v) >= 10), "every |tau| >= 10"),
        "L": Param(float, 5.0, lambda v: v > 0, "L > 0"),
        "theta": Param(float, 0.5, lambda v: 0 < v < math.sqrt(2.0), "0 < theta < sqrt(2)"),
        "n": Param(int, 16001, lambda v: v >= 1001, "n >= 1001"),
        "kappa_log_coeff": Param(float, 0.0),
        "delta": Param(float, 0.5, lambda v: v > 0, "delta > 0"),
    },
    "predict": {
        "t": Param(_floats, (-1e6,), _all(lambda v: v <= -math.e**2), "every t <= -e^2"),
    },
}


ALIASES = {"n_sigma": "n"}


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


@dataclass(frozen=True)
class RunConfig:
    """A validated run request.

    Attributes:
        command: Pipeline name, one of ``COMMANDS``.
        params: Typed parameters with defaults filled in.
        output_dir: Directory receiving ``summary.json`` and CSV tables.
    """

    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = DEFAULT_OUTPUT_DIR

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command: {self.command}")

    def provenance(self) -> Dict[str, Any]:
        return {"command": self.command, "params": dict(self.params)}


def environment_defaults(dotenv_path: Optional[str] = None) -> Dict[str, str]:
    """Read ``RICCI_OVALS_*`` settings, loading a ``.env`` file when present."""
    load_dotenv(dotenv_path, override=False)
    return {
        normalize_key(key[len(ENV_PREFIX) :]): value
        for key, value in os.environ.items()
        if key.startswith(ENV_PREFIX)
    }


def read_config_file(path: str) -> Dict[str, str]:
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}")
    values = dotenv_values(path)
    return {normalize_key(k): v for k, v in values.items() if v is not None}


def coerce_params(command: str, raw: Mapping[str, Any]) -> Dict[str, Any]:
    """Coerce raw values to typed parameters and check every precondition.

    Raises:
        ConfigError: On unknown keys, unparsable values or failed preconditions.
    """
    if command not in SCHEMAS:
        raise ConfigError(f"Unknown command: {command}")
    schema = SCHEMAS[command]
    raw = {ALIASES.get(key, key): value for key, value in raw.items()}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"Unknown parameters for {command}: {', '.join(unknown)}")
    params = {}
    for name, param in schema.items():
        value = raw.get(name, param.default)
        try:
            value = param.kind(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid value for {name}: {value!r} ({e})") from e
        if param.check is not None and not param.check(value):
            raise ConfigError(f"Invalid value for {name}: {value!r}; requires {param.requirement}")
        params[name] = value
    return params


def build_config(
    command: str,
    overrides: Optional[Mapping[str, Any]] = None,
    config_path: Optional[str] = None,
    output_dir: Optional[str] = None,
) -> RunConfig:
    """Merge defaults, config file and command-line overrides into a RunConfig."""
    env = environment_defaults()
    raw: Dict[str, Any] = {}
    if config_path:
        raw.update(read_config_file(config_path))
    file_output = raw.pop("output_dir", None)
    raw.pop("command", None)
    raw.update({normalize_key(k): v for k, v in (overrides or {}).items() if v is not None})
    resolved_dir = output_dir or file_output or env.get("output_dir") or DEFAULT_OUTPUT_DIR
    cfg = RunConfig(command=command, params=coerce_params(command, raw), output_dir=resolved_dir)
    logger.debug(f"Resolved configuration for {command}: {cfg.params}")
    return cfg
