"""Parameter set and validation for the washing-market simulator.

All tunable quantities live on one flat dataclass so that a run is fully
described by (params, scenario, seed).  Fields are grouped the same way the
config file sections are: market sizing, cost rates, consumer learning,
penalties, green innovation, and market-design constants.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass
class SimParams:
    # market sizing
    n_firms: int = 200
    n_consumers: int = 1000
    n_periods: int = 200
    n_reps: int = 500
    n_industries: int = 1
    initial_washer_share: float = 0.10

    # firm endowment intervals (uniform draws)
    tech_lo: float = 0.3
    tech_hi: float = 0.9
    fin_lo: float = 0.2
    fin_hi: float = 0.8
    rep_lo: float = 0.4
    rep_hi: float = 0.8

    # cost rates (fractions of revenue unless noted)
    ai_substantive_cost: float = 0.15
    ai_wash_cost: float = 0.05
    # optional override: when set, washing cost = substantive * (1 - rate)
    wash_cost_savings_rate: float | None = None
    green_cost_ref: float = 0.10
    unit_cost: float = 0.8
    markup: float = 0.30

    # consumer learning
    learning_rate: float = 0.20
    info_update_frequency: int = 5
    signal_noise_sd: float = 0.10
    # ongoing disclosure exposure: beliefs drift toward the standing claim
    # with this per-period weight, so cheap talk never fully stops working
    # unless something (experience, revelations) keeps correcting it
    claim_anchor_weight: float = 0.025
    detection_threshold: float = 0.15
    # penalties on exposed firms
    share_loss_rate: float = 0.05
    price_discount_rate: float = 0.10

    # green innovation
    payback_period: int = 4
    spillover_coeff: float = 0.22
    green_depreciation: float = 0.60
    green_quality_gain: float = 0.30
    honest_green_target: float = 0.07
    washer_green_target: float = 0.021
    green_floor: float = 0.02
    green_cap: float = 0.15
    # expected green patent filings per unit of green capital stock; a pure
    # reporting proxy, nothing in the market dynamics reads the counts
    green_patent_rate: float = 40.0
    # firms enter the run holding green capital from a pre-run investment
    # boom: this multiple of the level their current intensity would sustain
    initial_stock_multiple: float = 2.5

    # market design
    logit_temperature: float = 0.09
    reputation_price_slope: float = 0.2
    quality_base: float = 0.5
    quality_ai_gain: float = 0.4
    revision_prob: float = 0.05
    profit_window: int = 5
    share_feedback_gain: float = 0.5
    reservation_utility: float = 0.2
    initial_cash_scale: float = 0.15
    reputation_recovery_rate: float = 0.02
    reputation_damage_rate: float = 0.12
    reputation_floor: float = 0.10

    # disclosure generation
    honest_desc_alpha: float = 2.0
    honest_desc_beta: float = 8.0
    washer_desc_alpha: float = 8.0
    washer_desc_beta: float = 2.0
    honest_base_statements: int = 4
    washer_base_statements: int = 8

    def effective_wash_cost(self) -> float:
        """Washing cost rate, honouring the savings-rate override when set."""
        if self.wash_cost_savings_rate is not None:
            return self.ai_substantive_cost * (1.0 - self.wash_cost_savings_rate)
        return self.ai_wash_cost


def default_params() -> SimParams:
    return SimParams()


_COUNT_FIELDS = ("n_consumers", "n_periods", "n_reps", "n_industries",
                 "info_update_frequency", "profit_window")

_UNIT_FRACTION_FIELDS = (
    "initial_washer_share", "ai_substantive_cost", "green_cost_ref",
    "learning_rate", "claim_anchor_weight", "share_loss_rate",
    "price_discount_rate",
    "spillover_coeff", "honest_green_target", "washer_green_target",
    "green_floor", "green_cap", "green_depreciation", "green_quality_gain",
    "reputation_floor", "reputation_recovery_rate", "reputation_damage_rate",
    "revision_prob",
)

_NONNEGATIVE_FIELDS = (
    "unit_cost", "markup", "signal_noise_sd", "detection_threshold",
    "logit_temperature", "reputation_price_slope", "quality_base",
    "quality_ai_gain", "share_feedback_gain", "initial_cash_scale",
    "green_patent_rate", "initial_stock_multiple", "honest_desc_alpha",
    "honest_desc_beta", "washer_desc_alpha", "washer_desc_beta",
    "payback_period",
)


def validate_params(p: SimParams) -> list[str]:
    """Return a human-readable message for every violated invariant.

    An empty list means the parameter set is usable.  Messages name the
    offending field so config errors point somewhere actionable.
    """
    bad: list[str] = []

    if p.n_firms < 2:
        bad.append(f"n_firms: must satisfy n_firms >= 2, got {p.n_firms}")
    for name in _COUNT_FIELDS:
        v = getattr(p, name)
        if v < 1:
            bad.append(f"{name}: count must be >= 1, got {v}")

    for lo_name, hi_name in (("tech_lo", "tech_hi"), ("fin_lo", "fin_hi"),
                             ("rep_lo", "rep_hi")):
        lo, hi = getattr(p, lo_name), getattr(p, hi_name)
        if not (0.0 <= lo < hi <= 1.0):
            bad.append(f"{lo_name}/{hi_name}: need 0 <= lo < hi <= 1, "
                       f"got [{lo}, {hi}]")

    for name in _UNIT_FRACTION_FIELDS:
        v = getattr(p, name)
        if not (0.0 <= v <= 1.0):
            bad.append(f"{name}: fraction must lie in [0, 1], got {v}")

    for name in _NONNEGATIVE_FIELDS:
        v = getattr(p, name)
        if v < 0:
            bad.append(f"{name}: must be non-negative, got {v}")

    if not (0.0 <= p.ai_wash_cost <= 1.0):
        bad.append(f"ai_wash_cost: fraction must lie in [0, 1], "
                   f"got {p.ai_wash_cost}")
    if p.wash_cost_savings_rate is not None:
        r = p.wash_cost_savings_rate
        if not (0.0 < r < 1.0):
            bad.append(f"wash_cost_savings_rate: must lie in (0, 1), got {r}")
    if p.effective_wash_cost() >= p.ai_substantive_cost:
        bad.append("ai_wash_cost: washing must cost less than substantive "
                   f"investment ({p.effective_wash_cost()} >= "
                   f"{p.ai_substantive_cost})")

    if p.green_floor >= p.green_cap:
        bad.append(f"green_floor/green_cap: need floor < cap, "
                   f"got [{p.green_floor}, {p.green_cap}]")
    for name in ("honest_green_target", "washer_green_target"):
        v = getattr(p, name)
        if not (p.green_floor <= v <= p.green_cap):
            bad.append(f"{name}: target {v} outside "
                       f"[{p.green_floor}, {p.green_cap}]")

    if p.n_industries > p.n_firms:
        bad.append(f"n_industries: cannot exceed n_firms "
                   f"({p.n_industries} > {p.n_firms})")
    elif p.n_firms // p.n_industries < 2:
        bad.append(f"n_industries: every industry needs at least 2 firms "
                   f"for peer indices ({p.n_firms} firms over "
                   f"{p.n_industries} industries)")
    if p.honest_base_statements < 0 or p.washer_base_statements < 0:
        bad.append("base statement counts must be non-negative")
    return bad


def param_field_names() -> list[str]:
    return [f.name for f in fields(SimParams)]
