"""Policy scenarios and intervention hooks.

Scenarios compose three independent levers (inspection-and-fine regulation,
consumer education, reputation sanctions) plus a perfect-information bound
used as the welfare denominator.  Hooks mutate the engine's market state in
place; they are called once per period between consumer learning and market
clearing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .engine import MarketState

SCENARIO_NAMES = ("baseline", "regulation", "education", "reputation",
                  "combined", "optimum")

# one-off programme cost per scenario, in the reference study's units
IMPLEMENTATION_COST = {
    "baseline": 0.0,
    "regulation": 100.0,
    "education": 65.0,
    "reputation": 80.0,
    "combined": 140.0,
    "optimum": None,
}


@dataclass
class PolicyScenario:
    name: str
    regulation_active: bool = False
    inspection_interval: int = 10
    fine_rate: float = 0.5
    detection_prob: float = 0.6
    evasion_growth: float = 0.05
    education_active: bool = False
    learning_rate_multiplier: float = 1.5
    reputation_active: bool = False
    blacklist_duration: int = 5
    sanction_discount: float = 0.20
    premium_exclusion: bool = True
    # publishing an inspection catch corrects consumer beliefs about the
    # caught firm (a one-off jump of publicity_weight toward delivered
    # quality) and drowns out its own messaging for publicity_duration
    # periods, during which its claims stop anchoring beliefs
    publicity_weight: float = 1.0
    publicity_duration: int = 5
    optimum_active: bool = False
    implementation_cost: float | None = 0.0


def make_scenario(name: str, **overrides) -> PolicyScenario:
    """Build one of the six named scenarios, optionally overriding knobs."""
    if name not in SCENARIO_NAMES:
        raise ValueError(f"unknown scenario {name!r}; expected one of "
                         f"{', '.join(SCENARIO_NAMES)}")
    sc = PolicyScenario(
        name=name,
        regulation_active=name in ("regulation", "combined"),
        education_active=name in ("education", "combined"),
        reputation_active=name in ("reputation", "combined"),
        optimum_active=name == "optimum",
        implementation_cost=IMPLEMENTATION_COST[name],
    )
    if overrides:
        allowed = {"inspection_interval", "fine_rate", "detection_prob",
                   "evasion_growth", "learning_rate_multiplier",
                   "blacklist_duration", "sanction_discount",
                   "premium_exclusion", "publicity_weight",
                   "publicity_duration"}
        unknown = set(overrides) - allowed
        if unknown:
            raise ValueError(f"unknown scenario override(s): "
                             f"{', '.join(sorted(unknown))}")
        sc = replace(sc, **overrides)
    violations = validate_scenario(sc)
    if violations:
        raise ValueError("invalid scenario: " + "; ".join(violations))
    return sc


def validate_scenario(sc: PolicyScenario) -> list[str]:
    bad = []
    if sc.optimum_active and (sc.regulation_active or sc.education_active
                              or sc.reputation_active):
        bad.append("optimum excludes all other interventions")
    if sc.name == "combined" and not (sc.regulation_active
                                      and sc.education_active
                                      and sc.reputation_active):
        bad.append("combined requires all three interventions")
    if sc.inspection_interval < 1:
        bad.append("inspection_interval must be >= 1")
    if not (0.0 <= sc.detection_prob <= 1.0):
        bad.append("detection_prob must lie in [0, 1]")
    if not (0.0 <= sc.fine_rate <= 1.0):
        bad.append("fine_rate must lie in [0, 1]")
    if sc.blacklist_duration < 0:
        bad.append("blacklist_duration must be >= 0")
    if not (0.0 <= sc.sanction_discount < 1.0):
        bad.append("sanction_discount must lie in [0, 1)")
    if not (0.0 <= sc.publicity_weight <= 1.0):
        bad.append("publicity_weight must lie in [0, 1]")
    if sc.publicity_duration < 0:
        bad.append("publicity_duration must be >= 0")
    return bad


# --- per-period hooks ------------------------------------------------------

EVASION_CAP = 0.9


def apply_regulation(state: "MarketState", sc: PolicyScenario) -> None:
    """Inspect washers on the inspection schedule.

    Caught firms are publicly flagged, later fined half of any positive
    current-period profit (handled at settlement, once profit is known), and
    learn to evade a little better each time.  Publishing the inspection
    report corrects consumer beliefs about the caught firms.
    """
    state.fined_this_period[:] = False
    if not sc.regulation_active:
        return
    t = state.period
    if t == 0 or t % sc.inspection_interval != 0:
        return
    if sc.detection_prob <= 0.0:
        # a toothless inspectorate draws nothing, so a zero-probability
        # regulation run replays the baseline random stream exactly
        return
    u = state.rng.random(state.n_firms)
    caught = state.is_washer & (u < sc.detection_prob * (1.0 - state.evasion))
    state.detected |= caught
    state.fined_this_period[:] = caught
    state.evasion[caught] = np.minimum(state.evasion[caught] + sc.evasion_growth,
                                       EVASION_CAP)
    publicize(state, caught, sc.publicity_weight)
    state.publicized[caught] = np.maximum(state.publicized[caught],
                                          sc.publicity_duration)


def publicize(state: "MarketState", firms: np.ndarray, weight: float) -> None:
    """Snap consumer beliefs about ``firms`` toward delivered quality.

    Models the headline effect of a public catch or blacklisting; no random
    draws, so hooks can call it without touching the stream.
    """
    if weight <= 0.0 or not firms.any():
        return
    cols = state.beliefs[:, firms]
    state.beliefs[:, firms] = cols + weight * (state.quality[firms] - cols)


def apply_reputation_sanctions(state: "MarketState", sc: PolicyScenario) -> None:
    """Keep flagged firms on the sanctions register.

    A firm stays listed for as long as its public flag stands, and for
    ``blacklist_duration`` further periods once the flag clears (the
    delisting lag).  Listing is a commercial sanction, not an information
    channel: the mandated discount attracts bargain hunters while the fat
    cost rates stay, which is what makes the register bite.
    """
    if not sc.reputation_active:
        return
    state.blacklist[state.detected] = sc.blacklist_duration


def apply_optimum(state: "MarketState") -> None:
    """Perfect-information bound: beliefs equal true quality, no flags."""
    state.beliefs[:, :] = state.quality[None, :]
    state.detected[:] = False


def welfare_improvement(trajectory, baseline, optimum) -> float:
    """Scenario welfare gain as a percentage of the attainable gain.

    Uses endpoint consumer utility indices:
    100 * (U_s - U_base) / (U_opt - U_base).
    """
    if not (len(trajectory) == len(baseline) == len(optimum)):
        raise ValueError("welfare_improvement: trajectory length mismatch")
    u_s = trajectory[-1].consumer_utility_index
    u_b = baseline[-1].consumer_utility_index
    u_o = optimum[-1].consumer_utility_index
    if u_o <= u_b:
        raise ValueError("welfare_improvement: optimum does not dominate "
                         f"baseline (U_opt={u_o:.4g} <= U_base={u_b:.4g})")
    return 100.0 * (u_s - u_b) / (u_o - u_b)
