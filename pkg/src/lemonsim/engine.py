"""Market engine: runs one replication of the disclosure-washing market.

Each period executes, in order: strategy revision, investment choice,
disclosure emission, true-quality refresh, consumer learning, policy hooks,
market clearing, settlement, and bookkeeping (reputation drift, blacklist
timers, the period record).  Period 0 is a snapshot period: no revision or
investment happens, so the recorded washer share and green intensities are
exactly the sampled initial conditions.

Determinism contract
--------------------
A replication consumes a single ``numpy.random.Generator`` in a fixed order.
Within a period the draws are, in sequence (sizes in parentheses):

1. revision gate uniforms (n_firms), revision switch uniforms (n_firms)
   -- periods >= 1 only
2. investment noise uniforms (n_firms) -- periods >= 1 only -- then
   patent-count Poissons (n_firms) -- every period
3. disclosure descriptive-fraction Betas (n_firms) -- every period
4. experience-signal normals (n_consumers) -- periods >= 1
5. inspection uniforms (n_firms) -- regulation scenarios with a positive
   detection probability, on inspection periods only
6. choice uniforms (n_consumers) -- every period

Firm-indexed draws are always consumed in firm-id order and consumer-indexed
draws in consumer-id order, so trajectories are bit-reproducible.  A scenario
shares the baseline's stream until the first period in which one of its hooks
actually fires (the optimum scenario diverges immediately: it replaces
consumer learning from period 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import policy as policy_mod
from .agents import (HONEST, WASHER, ConsumerState, FirmState,
                     claimed_quality, sample_population)
from .metrics import peer_means_excluding_self, washing_index_from_counts
from .params import SimParams
from .policy import PolicyScenario, make_scenario

# statement-count slopes in the disclosure generator
HONEST_STATEMENT_SLOPE = 6.0
WASHER_STATEMENT_SLOPE = 8.0
# revision temperature and switching deadband, both as fractions of the
# market's mean absolute rolling profit
REVISION_TEMPERATURE_FACTOR = 0.05
REVISION_DEADBAND_FACTOR = 0.25
# profit statistic a firm compares itself against: the opposite camp's
# "mean" or its "median" (the typical firm, insensitive to a few winners)
REVISION_REFERENCE = "mean"
# investment rule jitter half-width
INVESTMENT_NOISE = 0.005


@dataclass
class PeriodRecord:
    period: int
    washer_share: float
    mean_green_intensity_all: float
    mean_green_intensity_honest: float
    mean_green_intensity_washer: float
    consumer_utility_index: float
    mean_washing_index: float
    mean_peer_washing_index: float
    detected_count: int
    mean_profit_honest: float
    mean_profit_washer: float
    mean_price: float
    green_output_total: int


@dataclass
class RunTrace:
    """Per-period conservation bookkeeping, collected on demand for tests."""
    cash_start: np.ndarray
    share_sums: list[float] = field(default_factory=list)
    consumer_spending: list[float] = field(default_factory=list)
    firm_revenue: list[float] = field(default_factory=list)
    profits: list[np.ndarray] = field(default_factory=list)
    fines: list[np.ndarray] = field(default_factory=list)


@dataclass
class Trajectory:
    records: list[PeriodRecord]
    panel: dict[str, np.ndarray] | None = None
    trace: RunTrace | None = None

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


class MarketState:
    """Array-backed market state for one replication."""

    def __init__(self, p: SimParams, scenario: PolicyScenario,
                 firms: list[FirmState], consumers: list[ConsumerState],
                 rng: np.random.Generator):
        self.p = p
        self.scenario = scenario
        self.rng = rng
        self.period = 0
        self.n_firms = p.n_firms
        self.n_consumers = p.n_consumers

        self.theta = np.array([f.tech_capability for f in firms])
        self.fin = np.array([f.financial_strength for f in firms])
        self.rep0 = np.array([f.reputation for f in firms])
        self.rep = self.rep0.copy()
        self.industry = np.array([f.industry_id for f in firms])
        self.is_washer = np.array([f.strategy == WASHER for f in firms])
        self.green = np.array([f.green_intensity for f in firms])
        self.green_stock = np.array([f.green_stock for f in firms])
        self.stock_hist = np.zeros((self.n_firms, p.n_periods + 1))
        self.cash = np.array([f.cash for f in firms])
        self.detected = np.zeros(self.n_firms, dtype=bool)
        self.blacklist = np.zeros(self.n_firms, dtype=np.int64)
        self.publicized = np.zeros(self.n_firms, dtype=np.int64)
        self.evasion = np.zeros(self.n_firms)
        self.claimed = claimed_quality(self.theta, p)

        self.profit_ring = np.zeros((self.n_firms, p.profit_window))
        self.profit_pos = 0
        self.profit_len = np.zeros(self.n_firms, dtype=np.int64)

        # green capex is billed in equal installments over the payback
        # horizon, so this ring holds the commitments still being paid off
        self.green_ring = np.zeros((self.n_firms, p.payback_period))
        self.green_pos = 0
        self.green_len = 0

        self.share_latest = np.full(self.n_firms, 1.0 / self.n_firms)
        self.share_before = self.share_latest.copy()
        self.prev_revenue = np.zeros(self.n_firms)

        # Beliefs start at the claims: consumers take the pitches at face
        # value until experience and revelations correct them.
        self.beliefs = np.tile(self.claimed, (self.n_consumers, 1))
        self.last_firm = np.full(self.n_consumers, -1, dtype=np.int64)
        self.premium = np.array([c.is_premium for c in consumers])

        self.quality = np.zeros(self.n_firms)
        self.n_desc = np.zeros(self.n_firms, dtype=np.int64)
        self.n_sub = np.zeros(self.n_firms, dtype=np.int64)
        self.green_output = np.zeros(self.n_firms, dtype=np.int64)
        self.fined_this_period = np.zeros(self.n_firms, dtype=bool)
        self.detected_at_period_start = np.zeros(self.n_firms, dtype=bool)
        self.utility_index_denominator: float | None = None
        self.last_spending = 0.0
        self.last_profit = np.zeros(self.n_firms)
        self.last_fines = np.zeros(self.n_firms)


def true_quality(theta, is_honest, lagged_stock, industry_mean_lagged_stock,
                 p: SimParams):
    """Delivered quality: base, substantive-AI gain, own and spillover green.

    Green stocks enter with a payback lag upstream of this function; both
    green terms saturate at a stock of one.
    """
    theta = np.asarray(theta, dtype=float)
    honest = np.asarray(is_honest, dtype=bool)
    own = np.minimum(1.0, np.asarray(lagged_stock, dtype=float))
    spill = np.minimum(1.0, np.asarray(industry_mean_lagged_stock, dtype=float))
    q = (p.quality_base
         + p.quality_ai_gain * theta * honest
         + p.green_quality_gain * own
         + p.spillover_coeff * spill)
    if q.ndim == 0:
        return float(q)
    return q


def switch_probability(delta, temperature):
    """Logistic switching curve; delta > 0 favours defection."""
    z = np.clip(np.asarray(delta, dtype=float) / temperature, -60.0, 60.0)
    out = 1.0 / (1.0 + np.exp(-z))
    if out.ndim == 0:
        return float(out)
    return out


def revise_strategies(state: MarketState) -> None:
    """Imitation dynamics on rolling profit with a switching deadband.

    Each firm reconsiders with probability ``revision_prob`` and compares
    its own rolling profit against the opposite camp's mean.  It switches
    with logistic probability in the advantage net of a deadband; both the
    deadband and the logistic temperature scale with the market's mean
    absolute profit, so the rule is invariant to the overall profit level.
    The deadband keeps firms from churning between camps whose profits are
    equally dismal.  A camp that has died out cannot be re-seeded.
    """
    p = state.p
    gate_u = state.rng.random(state.n_firms)
    switch_u = state.rng.random(state.n_firms)
    if state.profit_len.max() == 0:
        return
    washer = state.is_washer
    if washer.all() or not washer.any():
        return
    rolling = (state.profit_ring.sum(axis=1)
               / np.maximum(state.profit_len, 1))
    stat = np.median if REVISION_REFERENCE == "median" else np.mean
    opposite = np.where(washer, stat(rolling[~washer]),
                        stat(rolling[washer]))
    scale = max(float(np.abs(rolling).mean()), 1e-12)
    delta = opposite - rolling - REVISION_DEADBAND_FACTOR * scale
    temp = REVISION_TEMPERATURE_FACTOR * scale
    prob = switch_probability(delta, temp)
    flip = (gate_u < p.revision_prob) & (switch_u < prob)
    state.is_washer = np.where(flip, ~washer, washer)


def choose_investments(state: MarketState) -> None:
    """Set green intensity and roll the green stock forward.

    Intensity is the strategy target plus a share-momentum nudge and a small
    jitter, clamped to [floor, cap]; firms with negative cash drop to the
    floor.  Investment is funded from the previous period's revenue, and
    patent counts are drawn from the updated stock.
    """
    p = state.p
    noise = state.rng.uniform(-INVESTMENT_NOISE, INVESTMENT_NOISE,
                              state.n_firms)
    target = np.where(state.is_washer, p.washer_green_target,
                      p.honest_green_target)
    d_share = state.share_latest - state.share_before
    g = target + p.share_feedback_gain * d_share + noise
    g = np.where(state.cash < 0.0, p.green_floor, g)
    state.green = np.clip(g, p.green_floor, p.green_cap)
    state.green_stock = ((1.0 - p.green_depreciation) * state.green_stock
                         + state.green * state.prev_revenue)
    state.stock_hist[:, state.period] = state.green_stock
    state.green_output = state.rng.poisson(p.green_patent_rate * state.green)


def emit_disclosures(state: MarketState) -> None:
    """Draw each firm's statement mix for the period.

    Washers talk more and skew descriptive; honest firms skew substantive.
    Claimed quality is identical for both strategies, which is precisely the
    washer's lie.
    """
    p = state.p
    washer = state.is_washer
    n_total = np.where(
        washer,
        p.washer_base_statements + np.rint(WASHER_STATEMENT_SLOPE * state.theta),
        p.honest_base_statements + np.rint(HONEST_STATEMENT_SLOPE * state.theta),
    ).astype(np.int64)
    alpha = np.where(washer, p.washer_desc_alpha, p.honest_desc_alpha)
    beta = np.where(washer, p.washer_desc_beta, p.honest_desc_beta)
    frac = state.rng.beta(alpha, beta)
    state.n_desc = np.rint(frac * n_total).astype(np.int64)
    state.n_sub = n_total - state.n_desc


def refresh_quality(state: MarketState) -> None:
    p = state.p
    # before the lag window opens, treat pre-run stocks as the initial
    # (steady-state) level rather than zero
    lag = max(state.period - p.payback_period, 0)
    lagged = state.stock_hist[:, lag]
    sums = np.bincount(state.industry, weights=lagged, minlength=p.n_industries)
    counts = np.bincount(state.industry, minlength=p.n_industries)
    ind_mean = sums / counts
    state.quality = true_quality(state.theta, ~state.is_washer, lagged,
                                 ind_mean[state.industry], p)


def consumer_learning(state: MarketState) -> None:
    """Claim exposure and experience every period; revelations on schedule.

    Beliefs first drift toward the standing claims (disclosure keeps being
    read), then each consumer's experience with the purchased firm pulls its
    belief toward a noisy quality signal.

    A revelation pulls every belief toward delivered quality and re-evaluates
    the public detection flags: firms whose standing claims overstate
    delivered quality by more than the threshold are flagged, and firms whose
    gap has closed are cleared.
    """
    p = state.p
    sc = state.scenario
    lam = p.learning_rate
    if sc.education_active:
        lam = min(1.0, lam * sc.learning_rate_multiplier)

    if state.period >= 1 and p.claim_anchor_weight > 0.0:
        # standing disclosures keep tugging beliefs toward the claims;
        # experience and revelations below push back toward the truth.
        # Firms whose catch is still in the news or who sit on the sanctions
        # register get no such pull: nobody takes their pitch at face value.
        pull = p.claim_anchor_weight * (state.claimed[None, :] - state.beliefs)
        muted = (state.publicized > 0) | (state.blacklist > 0)
        if muted.any():
            pull[:, muted] = 0.0
        state.beliefs += pull

    if state.period >= 1:
        eps = state.rng.normal(0.0, p.signal_noise_sd, state.n_consumers)
        has_last = state.last_firm >= 0
        rows = np.nonzero(has_last)[0]
        if rows.size:
            cols = state.last_firm[rows]
            signal = state.quality[cols] + eps[rows]
            state.beliefs[rows, cols] = ((1.0 - lam) * state.beliefs[rows, cols]
                                         + lam * signal)

    if state.period >= 1 and state.period % p.info_update_frequency == 0:
        state.beliefs *= (1.0 - lam)
        state.beliefs += lam * state.quality[None, :]
        # the gap test is one-sided: overstating delivered quality is what
        # gets flagged, a firm that quietly over-delivers is safe
        gap = state.claimed - state.quality
        state.detected = gap > p.detection_threshold


def compute_prices(state: MarketState) -> np.ndarray:
    """Cost-plus price with a reputation premium and penalty discounts.

    The discount multiplier is exactly one of {1, 1 - price_discount_rate,
    1 - sanction_discount}: blacklisted firms take the deeper sanction cut,
    other detected firms the standard one.
    """
    p = state.p
    sc = state.scenario
    discount = np.ones(state.n_firms)
    discount[state.detected] = 1.0 - p.price_discount_rate
    if sc.reputation_active:
        discount[state.blacklist > 0] = 1.0 - sc.sanction_discount
    return (p.unit_cost * (1.0 + p.markup)
            * (1.0 + p.reputation_price_slope * (state.rep - 0.5))
            * discount)


def choice_probabilities(state: MarketState, prices: np.ndarray
                         ) -> np.ndarray:
    """Logit choice probabilities over belief minus price.

    Firms currently flagged for overstating lose a ``share_loss_rate``
    slice of whatever demand the logit would give them, redistributed to
    the unflagged; this is the demand-side penalty of a standing flag.  A
    non-positive temperature degenerates to hard argmax (no penalty shave
    on that branch: choice is no longer probabilistic there).
    """
    p = state.p
    sc = state.scenario
    v = state.beliefs - prices[None, :]
    if sc.reputation_active and sc.premium_exclusion:
        barred = state.blacklist > 0
        if barred.any():
            v[np.ix_(state.premium, barred)] = -np.inf

    if p.logit_temperature <= 0.0:
        probs = np.zeros_like(v)
        probs[np.arange(v.shape[0]), np.argmax(v, axis=1)] = 1.0
        return probs
    z = (v - v.max(axis=1, keepdims=True)) / p.logit_temperature
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    if p.share_loss_rate > 0.0 and state.detected.any():
        z[:, state.detected] *= 1.0 - p.share_loss_rate
        z /= z.sum(axis=1, keepdims=True)
    return z


def clear_market(state: MarketState) -> tuple[np.ndarray, np.ndarray, float]:
    """One round of consumer choice; returns (units, prices, mean utility)."""
    p = state.p
    prices = compute_prices(state)

    probs = choice_probabilities(state, prices)
    u = state.rng.random(state.n_consumers)
    choice = (probs.cumsum(axis=1) < u[:, None]).sum(axis=1)
    np.clip(choice, 0, state.n_firms - 1, out=choice)

    units = np.bincount(choice, minlength=state.n_firms).astype(float)
    state.share_before = state.share_latest
    state.share_latest = units / state.n_consumers
    state.last_spending = float(prices[choice].sum())

    utility = state.quality[choice] - prices[choice] + p.reservation_utility
    state.last_firm = choice
    return units, prices, float(utility.mean())


def naive_expected_utility(state: MarketState, prices: np.ndarray) -> float:
    """Expected realized utility if consumers chose on face-value claims.

    Evaluated at the current period's prices and delivered qualities, with
    the logit choice taken over claimed quality minus price.  This is the
    utility-index denominator: anchoring every scenario to the same day-one
    expectation keeps the indices comparable, including for the
    perfect-information bound whose actual day-one choices are better
    informed than anyone else's.
    """
    p = state.p
    v = state.claimed - prices
    if p.logit_temperature <= 0.0:
        j = int(np.argmax(v))
        return float(state.quality[j] - prices[j] + p.reservation_utility)
    z = (v - v.max()) / p.logit_temperature
    np.exp(z, out=z)
    z /= z.sum()
    return float(z @ (state.quality - prices) + p.reservation_utility)


def settle_profits(state: MarketState, units: np.ndarray,
                   prices: np.ndarray) -> np.ndarray:
    """Book revenue, costs, and fines; update cash and rolling profits.

    Green spending is committed against current revenue but paid in equal
    installments over the payback horizon, so a commitment made in a fat
    period keeps billing through lean ones.  The longer the horizon, the
    more yesterday's spending weighs on today's books.
    """
    p = state.p
    sc = state.scenario
    revenue = units * prices
    ai_rate = np.where(state.is_washer, p.effective_wash_cost(),
                       p.ai_substantive_cost)
    state.green_ring[:, state.green_pos] = state.green * revenue
    state.green_pos = (state.green_pos + 1) % p.payback_period
    state.green_len = min(state.green_len + 1, p.payback_period)
    green_outflow = state.green_ring.sum(axis=1) / state.green_len
    profit = (prices - p.unit_cost) * units - ai_rate * revenue \
        - green_outflow
    fines = np.where(state.fined_this_period,
                     sc.fine_rate * np.maximum(profit, 0.0), 0.0)
    profit = profit - fines
    state.cash += profit
    state.profit_ring[:, state.profit_pos] = profit
    state.profit_pos = (state.profit_pos + 1) % p.profit_window
    np.minimum(state.profit_len + 1, p.profit_window, out=state.profit_len)
    state.prev_revenue = revenue
    state.last_profit = profit
    state.last_fines = fines
    return profit


def _end_of_period_bookkeeping(state: MarketState) -> None:
    p = state.p
    damaged = state.detected
    state.rep = np.where(
        damaged,
        state.rep - p.reputation_damage_rate * (state.rep - p.reputation_floor),
        state.rep + p.reputation_recovery_rate * (state.rep0 - state.rep),
    )
    np.clip(state.rep, 0.0, 1.0, out=state.rep)
    np.maximum(state.blacklist - 1, 0, out=state.blacklist)
    np.maximum(state.publicized - 1, 0, out=state.publicized)


def _build_record(state: MarketState, profit: np.ndarray,
                  prices: np.ndarray, mean_util: float) -> PeriodRecord:
    washer = state.is_washer
    honest = ~washer
    w_index = washing_index_from_counts(state.n_desc)
    peer = peer_means_excluding_self(w_index, state.industry)

    if state.utility_index_denominator is None:
        state.utility_index_denominator = naive_expected_utility(state, prices)
    index = 100.0 * mean_util / state.utility_index_denominator

    def group_mean(values, mask):
        return float(values[mask].mean()) if mask.any() else 0.0

    return PeriodRecord(
        period=state.period,
        washer_share=float(washer.mean()),
        mean_green_intensity_all=float(state.green.mean()),
        mean_green_intensity_honest=group_mean(state.green, honest),
        mean_green_intensity_washer=group_mean(state.green, washer),
        consumer_utility_index=float(index),
        mean_washing_index=float(w_index.mean()),
        mean_peer_washing_index=float(peer.mean()),
        detected_count=int(state.detected.sum()),
        mean_profit_honest=group_mean(profit, honest),
        mean_profit_washer=group_mean(profit, washer),
        mean_price=float(prices.mean()),
        green_output_total=int(state.green_output.sum()),
    )


def step(state: MarketState) -> PeriodRecord:
    """Advance the market one period and return its record."""
    if state.period > state.p.n_periods:
        raise ValueError("replication already ran its configured horizon")
    sc = state.scenario
    state.detected_at_period_start = state.detected.copy()

    if state.period >= 1:
        revise_strategies(state)
        choose_investments(state)
    else:
        state.stock_hist[:, 0] = state.green_stock
        state.green_output = state.rng.poisson(
            state.p.green_patent_rate * state.green)

    emit_disclosures(state)
    refresh_quality(state)

    if sc.optimum_active:
        policy_mod.apply_optimum(state)
        state.fined_this_period[:] = False
    else:
        consumer_learning(state)
        policy_mod.apply_regulation(state, sc)
        policy_mod.apply_reputation_sanctions(state, sc)

    units, prices, mean_util = clear_market(state)
    profit = settle_profits(state, units, prices)
    _end_of_period_bookkeeping(state)
    record = _build_record(state, profit, prices, mean_util)
    state.period += 1
    return record


def run_replication(p: SimParams, scenario: PolicyScenario | None = None,
                    seed: int = 0, collect_panel: bool = False,
                    collect_trace: bool = False) -> Trajectory:
    """Run one seeded replication; returns n_periods + 1 period records.

    ``collect_panel`` additionally returns firm-period disclosure and patent
    arrays; ``collect_trace`` captures conservation bookkeeping for tests.
    Neither changes the random stream.
    """
    sc = scenario if scenario is not None else make_scenario("baseline")
    rng = np.random.Generator(np.random.PCG64(seed))
    firms, consumers = sample_population(p, rng)
    state = MarketState(p, sc, firms, consumers, rng)

    records: list[PeriodRecord] = []
    panel_chunks: list[dict[str, np.ndarray]] = []
    trace = RunTrace(cash_start=state.cash.copy()) if collect_trace else None

    for t in range(p.n_periods + 1):
        record = step(state)
        records.append(record)
        if collect_panel:
            panel_chunks.append({
                "firm_id": np.arange(p.n_firms, dtype=np.int64),
                "industry_id": state.industry.copy(),
                "period": np.full(p.n_firms, t, dtype=np.int64),
                "n_descriptive": state.n_desc.copy(),
                "n_substantive": state.n_sub.copy(),
                "washing_index": washing_index_from_counts(state.n_desc),
                "green_output": state.green_output.copy(),
            })
        if collect_trace:
            trace.share_sums.append(float(state.share_latest.sum()))
            trace.consumer_spending.append(state.last_spending)
            trace.firm_revenue.append(float(state.prev_revenue.sum()))
            trace.profits.append(state.last_profit.copy())
            trace.fines.append(state.last_fines.copy())

    panel = None
    if collect_panel:
        panel = {k: np.concatenate([c[k] for c in panel_chunks])
                 for k in panel_chunks[0]}
    return Trajectory(records=records, panel=panel, trace=trace)
