"""Agent records and population sampling.

``sample_population`` is the only stochastic entry point here.  Draw order is
fixed and documented so that identical seeds always produce identical
populations: firm tech capabilities, financial strengths, reputations, the
washer placement offset, green-intensity noise, then the premium-consumer
permutation.  Everything downstream (the engine) consumes the same generator,
so the whole replication is reproducible from one seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import SimParams, validate_params

HONEST = "honest"
WASHER = "washer"


@dataclass
class DisclosureRecord:
    """Statement counts from one firm-period disclosure."""
    n_descriptive: int
    n_substantive: int

    @property
    def n_total(self) -> int:
        return self.n_descriptive + self.n_substantive


@dataclass
class FirmState:
    id: int
    industry_id: int
    tech_capability: float
    financial_strength: float
    reputation: float
    strategy: str
    green_intensity: float
    green_stock: float
    green_stock_history: list[float]
    cash: float
    detected: bool
    blacklist_remaining: int
    profit_history: list[float]
    market_share: float
    evasion_skill: float
    disclosure: DisclosureRecord | None = None


@dataclass
class ConsumerState:
    id: int
    beliefs: np.ndarray
    last_firm: int | None = None
    is_premium: bool = False


def washer_count(share: float, n_firms: int) -> int:
    """Number of initial washers: round-half-up of share * n_firms."""
    return int(math.floor(share * n_firms + 0.5))


def claimed_quality(theta, p: SimParams):
    """Quality pitched in disclosures: base plus the full substantive gain.

    Both strategies pitch the same formula.  Honest firms under-state their
    delivered quality (green capital adds on top), washers over-state theirs
    (the substantive term never materializes), and that asymmetry is what
    the detection gap test keys on.
    """
    theta = np.asarray(theta, dtype=float)
    q = p.quality_base + p.quality_ai_gain * theta
    if q.ndim == 0:
        return float(q)
    return q


def sample_population(p: SimParams, rng: np.random.Generator,
                      ) -> tuple[list[FirmState], list[ConsumerState]]:
    """Draw an initial market population.

    Exactly ``washer_count(initial_washer_share, n_firms)`` firms start as
    washers, placed by a systematic sample over the capability distribution
    (every (n/k)-th firm of the theta order, from a random offset) so the
    starting washer pool is representative of the capability mix in every
    replication.  Consumer belief vectors are allocated here but filled with
    the period-0 quality claims by the engine, which owns the quality
    formula.
    """
    bad = validate_params(p)
    if bad:
        raise ValueError("invalid params: " + "; ".join(bad))

    n = p.n_firms
    theta = rng.uniform(p.tech_lo, p.tech_hi, size=n)
    fin = rng.uniform(p.fin_lo, p.fin_hi, size=n)
    rep = rng.uniform(p.rep_lo, p.rep_hi, size=n)

    k = washer_count(p.initial_washer_share, n)
    is_washer = np.zeros(n, dtype=bool)
    if k > 0:
        order = np.argsort(theta, kind="stable")
        picks = np.floor((np.arange(k) + rng.uniform()) * (n / k))
        is_washer[order[picks.astype(np.int64)]] = True

    g_noise = rng.uniform(-0.005, 0.005, size=n)
    targets = np.where(is_washer, p.washer_green_target, p.honest_green_target)
    g0 = np.clip(targets + g_noise, p.green_floor, p.green_cap)

    # Green capital at entry: the sustainable level for the firm's current
    # intensity (accumulation g * revenue against geometric depreciation has
    # fixed point g * revenue / depreciation, with revenue approximated by an
    # even split of consumer spending at the base price), scaled up by the
    # pre-run boom multiple.  Stocks then erode toward what current spending
    # sustains, which is what drags delivered quality down over the run.
    even_revenue = (p.n_consumers * p.unit_cost * (1.0 + p.markup)
                    / p.n_firms)
    stock0 = (p.initial_stock_multiple * g0 * even_revenue
              / p.green_depreciation)

    firms = []
    hist_len = p.payback_period + 1
    for i in range(n):
        firms.append(FirmState(
            id=i,
            industry_id=i % p.n_industries,
            tech_capability=float(theta[i]),
            financial_strength=float(fin[i]),
            reputation=float(rep[i]),
            strategy=WASHER if is_washer[i] else HONEST,
            green_intensity=float(g0[i]),
            green_stock=float(stock0[i]),
            green_stock_history=[float(stock0[i])] * hist_len,
            cash=float(fin[i] * p.initial_cash_scale),
            detected=False,
            blacklist_remaining=0,
            profit_history=[],
            market_share=1.0 / n,
            evasion_skill=0.0,
        ))

    premium = np.zeros(p.n_consumers, dtype=bool)
    premium[rng.permutation(p.n_consumers)[:p.n_consumers // 4]] = True

    consumers = [
        ConsumerState(id=c, beliefs=np.zeros(n), last_firm=None,
                      is_premium=bool(premium[c]))
        for c in range(p.n_consumers)
    ]
    return firms, consumers
