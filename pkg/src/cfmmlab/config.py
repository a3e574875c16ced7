"""Experiment configuration: strict TOML parsing and domain-object builders.

Configs are the provenance record of every run, so parsing is strict:
unknown sections or keys are rejected, all numerics must be finite, and
every referenced variant must exist.
"""

from __future__ import annotations

import math
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import cfmm as cf
from . import distributions as dist
from . import economy as eco
from .errors import CfmmLabError, ConfigError

_SECTIONS = {"cfmm", "utility", "distribution", "run", "equilibrium", "mev", "lp", "stationary"}

_KEYS = {
    "cfmm": {"variant", "reserves", "fee", "lambda", "coefficients", "weights"},
    "utility": {"variant", "weights", "shifts"},
    "distribution": {"variant", "lo", "hi", "points", "probs", "p", "delta_max", "dimension"},
    "run": {"steps", "seed", "record_every", "out_dir", "heatmap_bins"},
    "equilibrium": {"n_samples", "seed", "tolerance"},
    "mev": {"mode", "builder_endowment", "capacity", "transactions", "allow_heuristic"},
    "lp": {"cfmm", "reserves", "weights", "coefficients", "price_lo", "price_hi", "price_count", "price_scale"},
    "stationary": {"r1", "r2"},
}

_CFMM_VARIANTS = {
    "constant_sum",
    "constant_product",
    "geometric_mean",
    "constant_min",
    "quadratic_over_linear",
    "exp_product",
}
_UTILITY_VARIANTS = {"cobb_douglas", "weighted_geometric", "shifted_log_sum"}
_DIST_VARIANTS = {"uniform_box", "discrete_atoms", "bernoulli_product"}


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    unknown = set(doc) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}; allowed: {sorted(_SECTIONS)}")
    for section, table in doc.items():
        if not isinstance(table, dict):
            raise ConfigError(f"section [{section}] must be a table")
        bad = set(table) - _KEYS[section]
        if bad:
            raise ConfigError(
                f"unknown keys {sorted(bad)} in [{section}]; allowed: {sorted(_KEYS[section])}"
            )
    doc["_path"] = str(path)
    return doc


def require_section(doc: dict, name: str) -> dict:
    if name not in doc:
        raise ConfigError(f"config is missing the [{name}] section")
    return doc[name]


def _finite_floats(value, what: str) -> list[float]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{what} must be an array of numbers")
    out = []
    for v in value:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(float(v)):
            raise ConfigError(f"{what} must contain finite numbers, got {value!r}")
        out.append(float(v))
    return out


def _finite_scalar(value, what: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(float(value)):
        raise ConfigError(f"{what} must be a finite number, got {value!r}")
    return float(value)


def _int(value, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{what} must be an integer, got {value!r}")
    return value


def build_trading_function(section: dict, *, key_prefix: str = "cfmm"):
    variant = section.get("variant") if "variant" in section else section.get("cfmm")
    if variant not in _CFMM_VARIANTS:
        raise ConfigError(
            f"[{key_prefix}] variant must be one of {sorted(_CFMM_VARIANTS)}, got {variant!r}"
        )
    try:
        if variant == "constant_sum":
            if "coefficients" not in section:
                raise ConfigError("[cfmm] constant_sum needs `coefficients`")
            return cf.ConstantSum(tuple(_finite_floats(section["coefficients"], "coefficients")))
        if variant == "constant_product":
            return cf.ConstantProduct()
        if variant == "geometric_mean":
            if "weights" not in section:
                raise ConfigError("[cfmm] geometric_mean needs `weights`")
            return cf.GeometricMean(tuple(_finite_floats(section["weights"], "weights")))
        if variant == "constant_min":
            return cf.ConstantMin()
        if variant == "quadratic_over_linear":
            return cf.QuadraticOverLinear()
        return cf.ExpProduct()
    except CfmmLabError as exc:
        raise ConfigError(f"invalid [{key_prefix}] parameters: {exc}") from exc


def build_cfmm_state(doc: dict) -> tuple[cf.CfmmState, float]:
    section = require_section(doc, "cfmm")
    function = build_trading_function(section)
    if "reserves" not in section:
        raise ConfigError("[cfmm] needs `reserves`")
    reserves = tuple(_finite_floats(section["reserves"], "reserves"))
    fee = _finite_scalar(section.get("fee", 0.0), "fee")
    scale = _finite_scalar(section.get("lambda", 1.0), "lambda")
    if scale <= 0:
        raise ConfigError(f"[cfmm] lambda must be > 0, got {scale}")
    try:
        state = cf.CfmmState(function, reserves, fee)
    except CfmmLabError as exc:
        raise ConfigError(f"invalid [cfmm]: {exc}") from exc
    return state, scale


def build_utility(doc: dict):
    section = require_section(doc, "utility")
    variant = section.get("variant")
    if variant not in _UTILITY_VARIANTS:
        raise ConfigError(
            f"[utility] variant must be one of {sorted(_UTILITY_VARIANTS)}, got {variant!r}"
        )
    try:
        if variant == "cobb_douglas":
            return eco.CobbDouglasProduct()
        if variant == "weighted_geometric":
            if "weights" not in section:
                raise ConfigError("[utility] weighted_geometric needs `weights`")
            return eco.WeightedGeometric(tuple(_finite_floats(section["weights"], "weights")))
        if "shifts" not in section:
            raise ConfigError("[utility] shifted_log_sum needs `shifts`")
        return eco.ShiftedLogSum(tuple(_finite_floats(section["shifts"], "shifts")))
    except CfmmLabError as exc:
        raise ConfigError(f"invalid [utility]: {exc}") from exc


def build_distribution(doc: dict):
    section = require_section(doc, "distribution")
    variant = section.get("variant")
    if variant not in _DIST_VARIANTS:
        raise ConfigError(
            f"[distribution] variant must be one of {sorted(_DIST_VARIANTS)}, got {variant!r}"
        )
    try:
        if variant == "uniform_box":
            if "lo" not in section or "hi" not in section:
                raise ConfigError("[distribution] uniform_box needs `lo` and `hi`")
            return dist.UniformBox(
                tuple(_finite_floats(section["lo"], "lo")),
                tuple(_finite_floats(section["hi"], "hi")),
            )
        if variant == "discrete_atoms":
            if "points" not in section or "probs" not in section:
                raise ConfigError("[distribution] discrete_atoms needs `points` and `probs`")
            points = tuple(
                tuple(_finite_floats(p, "points entry")) for p in section["points"]
            )
            return dist.DiscreteAtoms(points, tuple(_finite_floats(section["probs"], "probs")))
        return dist.BernoulliProduct(
            _finite_scalar(section.get("p", 0.5), "p"),
            _finite_scalar(section.get("delta_max", 1.0), "delta_max"),
            _int(section.get("dimension", 2), "dimension"),
        )
    except CfmmLabError as exc:
        raise ConfigError(f"invalid [distribution]: {exc}") from exc


def build_run_params(doc: dict, overrides: dict | None = None) -> dict:
    section = dict(require_section(doc, "run"))
    if overrides:
        for key, value in overrides.items():
            if value is not None:
                section[key] = value
    steps = _int(section.get("steps", 0), "steps")
    if steps < 1:
        raise ConfigError(f"[run] steps must be >= 1, got {steps}")
    seed = _int(section.get("seed", 0), "seed")
    record_every = _int(section.get("record_every", 1), "record_every")
    if record_every < 1:
        raise ConfigError(f"[run] record_every must be >= 1, got {record_every}")
    bins = _int(section.get("heatmap_bins", 50), "heatmap_bins")
    if bins < 1:
        raise ConfigError(f"[run] heatmap_bins must be >= 1, got {bins}")
    out_dir = section.get("out_dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError(f"[run] out_dir must be a string, got {out_dir!r}")
    return {
        "steps": steps,
        "seed": seed,
        "record_every": record_every,
        "heatmap_bins": bins,
        "out_dir": out_dir,
    }


def config_echo(doc: dict) -> dict:
    """A JSON-safe echo of the parsed document (deterministic key order)."""
    echo = {}
    for section in sorted(set(doc) - {"_path"}):
        echo[section] = {k: doc[section][k] for k in sorted(doc[section])}
    return echo
