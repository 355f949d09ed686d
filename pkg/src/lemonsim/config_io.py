"""Config files: a small sectioned key = value format.

The format is INI-shaped but deliberately hand-parsed: every rejection
(unknown section, unknown key, bad value, duplicate) carries the file name
and line number, which configparser does not give us.  Sections group the
simulation parameters the same way the dataclass declares them, plus a
[policy] section holding scenario-knob overrides that apply to whichever
scenario a run selects.

Absent keys keep their defaults, so the empty file is a valid config equal
to ``default_params()``.  ``emit_config`` writes a complete snapshot that
``load_config`` reads back to an equal parameter set.
"""

from __future__ import annotations

import os
from dataclasses import replace

from .params import SimParams, default_params, validate_params

CONFIG_SECTIONS: dict[str, tuple[str, ...]] = {
    "market": ("n_firms", "n_consumers", "n_periods", "n_reps", "n_industries",
               "initial_washer_share", "tech_lo", "tech_hi", "fin_lo",
               "fin_hi", "rep_lo", "rep_hi"),
    "costs": ("ai_substantive_cost", "ai_wash_cost", "wash_cost_savings_rate",
              "green_cost_ref", "unit_cost", "markup"),
    "learning": ("learning_rate", "info_update_frequency", "signal_noise_sd",
                 "claim_anchor_weight", "detection_threshold"),
    "penalty": ("share_loss_rate", "price_discount_rate",
                "reputation_recovery_rate", "reputation_damage_rate",
                "reputation_floor"),
    "innovation": ("payback_period", "spillover_coeff", "green_depreciation",
                   "green_quality_gain", "honest_green_target",
                   "washer_green_target", "green_floor", "green_cap",
                   "green_patent_rate", "initial_stock_multiple"),
    "design": ("logit_temperature", "reputation_price_slope", "quality_base",
               "quality_ai_gain", "revision_prob", "profit_window",
               "share_feedback_gain", "reservation_utility",
               "initial_cash_scale", "honest_desc_alpha", "honest_desc_beta",
               "washer_desc_alpha", "washer_desc_beta",
               "honest_base_statements", "washer_base_statements"),
}

POLICY_KEYS: dict[str, type] = {
    "inspection_interval": int,
    "fine_rate": float,
    "detection_prob": float,
    "evasion_growth": float,
    "learning_rate_multiplier": float,
    "blacklist_duration": int,
    "sanction_discount": float,
    "premium_exclusion": bool,
    "publicity_weight": float,
    "publicity_duration": int,
}

_PARAM_SECTION = {key: section
                  for section, keys in CONFIG_SECTIONS.items() for key in keys}
_DEFAULTS = SimParams()
_OPTIONAL_FLOAT_KEYS = {"wash_cost_savings_rate"}


def _parse_scalar(key: str, raw: str, target: type, where: str):
    if target is bool:
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"{where}: invalid boolean for {key!r}: {raw!r}")
    try:
        if target is int:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ValueError(f"{where}: invalid {target.__name__} for "
                         f"{key!r}: {raw!r}") from None


def _parse_param_value(key: str, raw: str, where: str):
    if key in _OPTIONAL_FLOAT_KEYS and raw.lower() == "none":
        return None
    target = type(getattr(_DEFAULTS, key))
    if getattr(_DEFAULTS, key) is None:
        target = float
    return _parse_scalar(key, raw, target, where)


def parse_config(text: str, source: str = "<config>") \
        -> tuple[SimParams, dict[str, object]]:
    """Parse config text into (params, scenario overrides).

    Unknown sections and keys are rejected with the offending line number;
    keys that exist but sit in the wrong section get a hint about where
    they belong.
    """
    values: dict[str, object] = {}
    policy: dict[str, object] = {}
    seen: dict[tuple[str, str], int] = {}
    section: str | None = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        where = f"{source}:{lineno}"
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ValueError(f"{where}: malformed section header "
                                 f"{stripped!r}")
            name = stripped[1:-1].strip()
            if name not in CONFIG_SECTIONS and name != "policy":
                raise ValueError(f"{where}: unknown section [{name}]")
            section = name
            continue
        if "=" not in stripped:
            raise ValueError(f"{where}: expected 'key = value', got "
                             f"{stripped!r}")
        if section is None:
            raise ValueError(f"{where}: key outside any [section]")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not key:
            raise ValueError(f"{where}: missing key before '='")
        prev = seen.get((section, key))
        if prev is not None:
            raise ValueError(f"{where}: duplicate key {key!r} in [{section}] "
                             f"(first set on line {prev})")
        seen[(section, key)] = lineno

        if section == "policy":
            if key not in POLICY_KEYS:
                raise ValueError(f"{where}: unknown key {key!r} in [policy]")
            policy[key] = _parse_scalar(key, raw, POLICY_KEYS[key], where)
            continue
        if key not in CONFIG_SECTIONS[section]:
            hint = _PARAM_SECTION.get(key)
            extra = f" (belongs in [{hint}])" if hint else ""
            raise ValueError(f"{where}: unknown key {key!r} in "
                             f"[{section}]{extra}")
        values[key] = _parse_param_value(key, raw, where)

    params = replace(default_params(), **values)
    bad = validate_params(params)
    if bad:
        raise ValueError(f"{source}: invalid parameters: " + "; ".join(bad))
    return params, policy


def load_config(path: str | os.PathLike) \
        -> tuple[SimParams, dict[str, object]]:
    """Read a config file; see ``parse_config`` for the format and errors."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, source=str(path))


def _format_value(value: object) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(params: SimParams,
                policy_overrides: dict[str, object] | None = None) -> str:
    """Render a complete config snapshot that parses back to equal values."""
    lines: list[str] = []
    for section, keys in CONFIG_SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_format_value(getattr(params, key))}")
        lines.append("")
    if policy_overrides:
        unknown = set(policy_overrides) - set(POLICY_KEYS)
        if unknown:
            raise ValueError("unknown policy override(s): "
                             + ", ".join(sorted(unknown)))
        lines.append("[policy]")
        for key in POLICY_KEYS:
            if key in policy_overrides:
                lines.append(f"{key} = "
                             f"{_format_value(policy_overrides[key])}")
        lines.append("")
    return "\n".join(lines)
