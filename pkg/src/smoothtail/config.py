"""Run configuration: TOML in, validated dataclass out, TOML back for
archiving. Unknown keys are rejected by name instead of being ignored so a
typo cannot silently fall back to a default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .weight_models import WeightModel, model_from_dict, model_to_dict

__all__ = [
    "DEFAULT_SEED",
    "MIN_POOL_SIZE",
    "RunConfig",
    "load_config",
    "parse_config",
    "config_to_dict",
    "dumps_toml",
    "resolve_seed",
    "resolve_threads",
]

DEFAULT_SEED = 0x5EED0
MIN_POOL_SIZE = 100
SEED_ENV_VAR = "SMOOTHTAIL_SEED"

_RUN_KEYS = {
    "pool_size",
    "max_generations",
    "convergence_tol",
    "seed",
    "threads",
    "require_assumptions",
}
_ANALYTICS_KEYS = {
    "identity_points",
    "identity_s",
    "grid_points",
    "lower_quantile",
    "bootstrap",
    "extrapolate",
    "hill_k",
    "scan_window",
    "gamma_k",
    "degeneracy_tol",
}
_SPECIAL_KEYS = {"scale", "t_values", "count"}
_OUTPUT_KEYS = {"dir", "format"}
_TOP_KEYS = {"model", "run", "analytics", "special", "output"}


@dataclass
class RunConfig:
    model: WeightModel
    pool_size: int = 100_000
    max_generations: int = 200
    convergence_tol: float = 0.005
    seed: int = DEFAULT_SEED
    seed_source: str = "default"
    threads: int = 1
    require_assumptions: bool = False
    identity_points: int = 5
    identity_s: Optional[list] = None
    grid_points: int = 512
    lower_quantile: float = 1e-4
    bootstrap: int = 200
    extrapolate: str = "auto"
    hill_k: Optional[int] = None
    scan_window: tuple = (0.99, 0.9999)
    gamma_k: int = 1
    degeneracy_tol: float = 1e-9
    special_scale: float = 1.0
    special_t: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    special_count: int = 1 << 17
    out_dir: str = "runs/latest"
    out_format: str = "json"


def _require_keys(table: dict, allowed: set, prefix: str) -> None:
    for key in table:
        if key not in allowed:
            name = f"{prefix}.{key}" if prefix else key
            raise ParseError(f"unknown key {name!r}", key=name)


def _coerce_int(value, name: str, minimum=None, maximum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValidationError(f"{name} must be <= {maximum}, got {value}")
    return value


def _coerce_float(value, name: str, minimum=None, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if positive and not value > 0:
        raise ValidationError(f"{name} must be positive, got {value}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return value


def parse_config(text: str) -> RunConfig:
    """Parse TOML text into a validated RunConfig."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML: {exc}") from exc
    return _build(raw)


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_config(data.decode("utf-8"))


def _build(raw: dict) -> RunConfig:
    _require_keys(raw, _TOP_KEYS, "")
    if "model" not in raw:
        raise ValidationError("config needs a [model] section")
    model = model_from_dict(raw["model"])

    cfg = RunConfig(model=model)

    run = raw.get("run", {})
    _require_keys(run, _RUN_KEYS, "run")
    if "pool_size" in run:
        cfg.pool_size = _coerce_int(run["pool_size"], "run.pool_size", minimum=MIN_POOL_SIZE)
    if "max_generations" in run:
        cfg.max_generations = _coerce_int(run["max_generations"], "run.max_generations", minimum=1)
    if "convergence_tol" in run:
        cfg.convergence_tol = _coerce_float(run["convergence_tol"], "run.convergence_tol", positive=True)
    if "seed" in run:
        cfg.seed = _coerce_int(run["seed"], "run.seed", minimum=0, maximum=2**64 - 1)
        cfg.seed_source = "config"
    if "threads" in run:
        cfg.threads = _coerce_int(run["threads"], "run.threads", minimum=0)
    if "require_assumptions" in run:
        if not isinstance(run["require_assumptions"], bool):
            raise ValidationError("run.require_assumptions must be a boolean")
        cfg.require_assumptions = run["require_assumptions"]

    analytics = raw.get("analytics", {})
    _require_keys(analytics, _ANALYTICS_KEYS, "analytics")
    if "identity_points" in analytics:
        cfg.identity_points = _coerce_int(analytics["identity_points"], "analytics.identity_points", minimum=1)
    if "identity_s" in analytics:
        values = analytics["identity_s"]
        if not isinstance(values, list) or not values:
            raise ValidationError("analytics.identity_s must be a nonempty list")
        cfg.identity_s = [
            _coerce_float(v, "analytics.identity_s", positive=True) for v in values
        ]
    if "grid_points" in analytics:
        cfg.grid_points = _coerce_int(analytics["grid_points"], "analytics.grid_points", minimum=8)
    if "lower_quantile" in analytics:
        q = _coerce_float(analytics["lower_quantile"], "analytics.lower_quantile", positive=True)
        if q >= 0.5:
            raise ValidationError("analytics.lower_quantile must be < 0.5")
        cfg.lower_quantile = q
    if "bootstrap" in analytics:
        cfg.bootstrap = _coerce_int(analytics["bootstrap"], "analytics.bootstrap", minimum=0)
    if "extrapolate" in analytics:
        mode = analytics["extrapolate"]
        if mode not in ("auto", "force", "off"):
            raise ValidationError("analytics.extrapolate must be auto, force, or off")
        cfg.extrapolate = mode
    if "hill_k" in analytics:
        cfg.hill_k = _coerce_int(analytics["hill_k"], "analytics.hill_k", minimum=1)
    if "scan_window" in analytics:
        win = analytics["scan_window"]
        if (
            not isinstance(win, list)
            or len(win) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in win)
        ):
            raise ValidationError("analytics.scan_window must be a list of two numbers")
        lo, hi = float(win[0]), float(win[1])
        if not (0.0 < lo < hi < 1.0):
            raise ValidationError("analytics.scan_window must satisfy 0 < lo < hi < 1")
        cfg.scan_window = (lo, hi)
    if "gamma_k" in analytics:
        cfg.gamma_k = _coerce_int(analytics["gamma_k"], "analytics.gamma_k", minimum=1)
    if "degeneracy_tol" in analytics:
        cfg.degeneracy_tol = _coerce_float(analytics["degeneracy_tol"], "analytics.degeneracy_tol", positive=True)

    special = raw.get("special", {})
    _require_keys(special, _SPECIAL_KEYS, "special")
    if "scale" in special:
        cfg.special_scale = _coerce_float(special["scale"], "special.scale", positive=True)
    if "t_values" in special:
        values = special["t_values"]
        if not isinstance(values, list) or not values:
            raise ValidationError("special.t_values must be a nonempty list")
        cfg.special_t = [_coerce_float(v, "special.t_values") for v in values]
    if "count" in special:
        cfg.special_count = _coerce_int(special["count"], "special.count", minimum=100)

    output = raw.get("output", {})
    _require_keys(output, _OUTPUT_KEYS, "output")
    if "dir" in output:
        if not isinstance(output["dir"], str) or not output["dir"]:
            raise ValidationError("output.dir must be a nonempty string")
        cfg.out_dir = output["dir"]
    if "format" in output:
        if output["format"] not in ("json", "csv"):
            raise ValidationError("output.format must be json or csv")
        cfg.out_format = output["format"]

    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    """Nested-dict form of a config, suitable for TOML or a report."""
    out = {
        "model": model_to_dict(cfg.model),
        "run": {
            "pool_size": cfg.pool_size,
            "max_generations": cfg.max_generations,
            "convergence_tol": cfg.convergence_tol,
            "seed": cfg.seed,
            "threads": cfg.threads,
            "require_assumptions": cfg.require_assumptions,
        },
        "analytics": {
            "identity_points": cfg.identity_points,
            "grid_points": cfg.grid_points,
            "lower_quantile": cfg.lower_quantile,
            "bootstrap": cfg.bootstrap,
            "extrapolate": cfg.extrapolate,
            "scan_window": list(cfg.scan_window),
            "gamma_k": cfg.gamma_k,
            "degeneracy_tol": cfg.degeneracy_tol,
        },
        "special": {
            "scale": cfg.special_scale,
            "t_values": list(cfg.special_t),
            "count": cfg.special_count,
        },
        "output": {"dir": cfg.out_dir, "format": cfg.out_format},
    }
    if cfg.identity_s is not None:
        out["analytics"]["identity_s"] = list(cfg.identity_s)
    if cfg.hill_k is not None:
        out["analytics"]["hill_k"] = cfg.hill_k
    return out


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__} as TOML")


def dumps_toml(data: dict) -> str:
    """Render a nested dict of plain values as TOML. Covers exactly the
    shapes `config_to_dict` produces; not a general-purpose emitter."""
    lines = []

    def walk(table: dict, prefix: str) -> None:
        scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
        subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
        if prefix and (scalars or not subtables):
            lines.append(f"[{prefix}]")
        for key, value in scalars.items():
            lines.append(f"{key} = {_toml_value(value)}")
        if scalars:
            lines.append("")
        for key, sub in subtables.items():
            walk(sub, f"{prefix}.{key}" if prefix else key)

    walk(data, "")
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines) + "\n"


def resolve_seed(cli_seed: Optional[int], cfg: Optional[RunConfig]) -> tuple:
    """Seed precedence: command line, then environment, then config file,
    then the package default. Returns (seed, source)."""
    if cli_seed is not None:
        return int(cli_seed), "cli"
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            value = int(env, 0)
        except ValueError as exc:
            raise ValidationError(
                f"{SEED_ENV_VAR} must be an integer, got {env!r}"
            ) from exc
        if not 0 <= value < 2**64:
            raise ValidationError(f"{SEED_ENV_VAR} must fit in 64 bits")
        return value, "env"
    if cfg is not None and cfg.seed_source == "config":
        return cfg.seed, "config"
    return DEFAULT_SEED, "default"


def resolve_threads(threads: int) -> int:
    """0 means one worker per available CPU."""
    if threads == 0:
        return os.cpu_count() or 1
    return threads
