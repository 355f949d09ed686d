"""Monte Carlo batches over the market engine, and their statistics.

One replication is a single seeded run; everything here is about running
many of them reproducibly.  Per-replication seeds come from a splitmix64
mix of (base seed, replication index), so no scheduling decision can change
which random stream a replication gets.  Worker results land in slots
indexed by replication and are reduced in slot order, which keeps every
emitted byte identical whether a batch ran on one process or eight.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .engine import run_replication
from .metrics import pearson, peer_means_excluding_self
from .params import SimParams, validate_params
from .policy import IMPLEMENTATION_COST, SCENARIO_NAMES, PolicyScenario, make_scenario
from .reference import POLICY_TARGETS

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix_seed(base_seed: int, index: int) -> int:
    """Derive the seed for replication ``index`` from ``base_seed``.

    splitmix64 finalizer applied to ``base_seed`` plus a multiple of the
    golden-ratio gamma.  The ``index + 1`` offset keeps replication 0 from
    collapsing onto the bare base seed.
    """
    if index < 0:
        raise ValueError(f"mix_seed: index must be >= 0, got {index}")
    z = (base_seed + (index + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return (z ^ (z >> 31)) & _MASK


def resolve_threads(requested: int | None = None) -> int:
    """Worker count for a batch: argument, else LEMONSIM_THREADS, else CPUs.

    Zero from either source means "auto" (one worker per CPU).  When both
    are given, the environment variable acts as a cap, so batch jobs can be
    throttled without touching call sites.
    """
    cap: int | None = None
    env = os.environ.get("LEMONSIM_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(
                f"LEMONSIM_THREADS must be an integer, got {env!r}") from None
        if cap < 0:
            raise ValueError(f"LEMONSIM_THREADS must be >= 0, got {cap}")
        if cap == 0:
            cap = None
    n = requested
    if n is not None and n < 0:
        raise ValueError(f"threads must be >= 0, got {n}")
    if not n:
        n = os.cpu_count() or 1
    if cap is not None:
        n = min(n, cap)
    return max(1, n)


# --- summary statistics ---------------------------------------------------


@dataclass(frozen=True)
class StatSummary:
    """Sample statistics in the shape the robustness table reports.

    ``sd`` uses the n-1 denominator; skewness and kurtosis use population
    central moments (m3 / m2^1.5 and m4 / m2^2, so a normal sits near 3).
    The confidence interval is the usual mean +/- 1.96 sd / sqrt(n).
    """

    n: int
    mean: float
    sd: float
    cv: float
    ci_lo: float
    ci_hi: float
    skewness: float
    kurtosis: float


def summarize(values: Sequence[float] | np.ndarray) -> StatSummary:
    """Summary statistics of a sample; needs n >= 2 and some spread."""
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError(f"summarize: need at least 2 values, got {n}")
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        raise ValueError("degenerate distribution: zero variance")
    if mean == 0.0:
        raise ValueError("cv undefined: mean is zero")
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    sd = math.sqrt(m2 * n / (n - 1))
    half = 1.96 * sd / math.sqrt(n)
    return StatSummary(n=n, mean=mean, sd=sd, cv=sd / mean,
                       ci_lo=mean - half, ci_hi=mean + half,
                       skewness=m3 / m2 ** 1.5, kurtosis=m4 / m2 ** 2)


def from_moments(n: int, mean: float, sd: float) -> StatSummary:
    """Recompute cv and the confidence interval from reported (n, mean, sd).

    Used to check published summary rows for internal consistency: skewness
    and kurtosis are not derivable from these three numbers and come back
    as nan.
    """
    if n < 2:
        raise ValueError(f"from_moments: need n >= 2, got {n}")
    if sd < 0:
        raise ValueError(f"from_moments: sd must be >= 0, got {sd}")
    if mean == 0.0:
        raise ValueError("cv undefined: mean is zero")
    half = 1.96 * sd / math.sqrt(n)
    return StatSummary(n=n, mean=mean, sd=sd, cv=sd / mean,
                       ci_lo=mean - half, ci_hi=mean + half,
                       skewness=float("nan"), kurtosis=float("nan"))


# --- replicated experiments ------------------------------------------------

TRAJECTORY_METRICS = (
    "washer_share",
    "mean_green_intensity_all",
    "mean_green_intensity_honest",
    "mean_green_intensity_washer",
    "consumer_utility_index",
    "mean_washing_index",
    "mean_peer_washing_index",
    "detected_count",
    "mean_profit_honest",
    "mean_profit_washer",
    "mean_price",
    "green_output_total",
)


@dataclass
class ExperimentResult:
    """Replicated runs of one scenario, reduced in replication order.

    ``trajectories`` maps each metric to an (n_reps, n_periods + 1) array;
    ``endpoints`` holds the final column per replication.  Metrics whose
    endpoint distribution is degenerate (for instance the detected count
    under perfect information, which is always zero) are left out of
    ``endpoint_summary`` but keep their raw arrays.
    """

    scenario: str
    n_reps: int
    base_seed: int
    trajectories: dict[str, np.ndarray]
    mean_trajectory: dict[str, np.ndarray]
    endpoints: dict[str, np.ndarray]
    endpoint_summary: dict[str, StatSummary]


def _replication_rows(p: SimParams, scenario: PolicyScenario,
                      seed: int) -> np.ndarray:
    traj = run_replication(p, scenario, seed)
    rows = np.empty((len(TRAJECTORY_METRICS), len(traj)))
    for i, name in enumerate(TRAJECTORY_METRICS):
        rows[i] = [getattr(rec, name) for rec in traj]
    return rows


def _panel_worker(p: SimParams, scenario: PolicyScenario,
                  seed: int) -> dict[str, np.ndarray]:
    return run_replication(p, scenario, seed, collect_panel=True).panel


def _run_slots(worker: Callable, p: SimParams, scenario: PolicyScenario,
               seeds: Sequence[int], threads: int | None) -> list:
    """Run ``worker(p, scenario, seed)`` per seed; results in seed order."""
    results = [None] * len(seeds)
    n_workers = min(resolve_threads(threads), len(seeds))
    if n_workers <= 1:
        for k, s in enumerate(seeds):
            results[k] = worker(p, scenario, s)
        return results
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        futures = [(k, pool.submit(worker, p, scenario, s))
                   for k, s in enumerate(seeds)]
        for k, fut in futures:
            results[k] = fut.result()
    return results


def _resolve_scenario(scenario: PolicyScenario | str | None) -> PolicyScenario:
    if scenario is None:
        return make_scenario("baseline")
    if isinstance(scenario, str):
        return make_scenario(scenario)
    return scenario


def run_experiment(params: SimParams,
                   scenario: PolicyScenario | str = "baseline",
                   n_reps: int = 100, base_seed: int = 0,
                   threads: int | None = None) -> ExperimentResult:
    """Replicated runs of one scenario with deterministic per-rep seeds.

    Replication k runs on ``mix_seed(base_seed, k)``; aggregation follows
    replication index, never completion order, so the result is bit-stable
    under any parallel schedule.
    """
    if n_reps < 2:
        raise ValueError(f"run_experiment: need n_reps >= 2, got {n_reps}")
    bad = validate_params(params)
    if bad:
        raise ValueError("invalid params: " + "; ".join(bad))
    sc = _resolve_scenario(scenario)
    seeds = [mix_seed(base_seed, k) for k in range(n_reps)]
    rows = _run_slots(_replication_rows, params, sc, seeds, threads)
    stack = np.stack(rows)
    trajectories = {name: stack[:, i, :].copy()
                    for i, name in enumerate(TRAJECTORY_METRICS)}
    endpoints = {name: arr[:, -1].copy() for name, arr in trajectories.items()}
    endpoint_summary = {}
    for name, vals in endpoints.items():
        try:
            endpoint_summary[name] = summarize(vals)
        except ValueError:
            continue
    return ExperimentResult(
        scenario=sc.name, n_reps=n_reps, base_seed=base_seed,
        trajectories=trajectories,
        mean_trajectory={n: a.mean(axis=0) for n, a in trajectories.items()},
        endpoints=endpoints, endpoint_summary=endpoint_summary)


# --- policy comparison ------------------------------------------------------


@dataclass(frozen=True)
class PolicyRow:
    """One line of the policy comparison table (fractions, not percent).

    ``welfare_improvement`` is computed from the simulated utility indices;
    ``welfare_reference`` is the frozen target for the same cell, or None
    where the reference table leaves it blank.
    """

    scenario: str
    washer_share: float
    green_intensity: float
    utility_index: float
    implementation_cost: float | None
    welfare_improvement: float
    welfare_reference: float | None


@dataclass
class PolicyComparison:
    rows: list[PolicyRow]
    experiments: dict[str, ExperimentResult]


def compare_policies(params: SimParams, n_reps: int = 100, base_seed: int = 0,
                     threads: int | None = None) -> PolicyComparison:
    """Endpoint table over all six scenarios on the same replication seeds.

    Welfare improvement anchors the baseline at 0 and the perfect
    information bound at 100, using mean endpoint utility indices.
    """
    experiments = {name: run_experiment(params, name, n_reps, base_seed, threads)
                   for name in SCENARIO_NAMES}
    util = {name: float(e.endpoints["consumer_utility_index"].mean())
            for name, e in experiments.items()}
    u_base, u_opt = util["baseline"], util["optimum"]
    if u_opt <= u_base:
        raise ValueError("optimum does not dominate baseline: "
                         f"U_opt={u_opt:.4g} <= U_base={u_base:.4g}")
    rows = []
    for name in SCENARIO_NAMES:
        e = experiments[name]
        target = POLICY_TARGETS.get(name)
        rows.append(PolicyRow(
            scenario=name,
            washer_share=float(e.endpoints["washer_share"].mean()),
            green_intensity=float(e.endpoints["mean_green_intensity_all"].mean()),
            utility_index=util[name],
            implementation_cost=IMPLEMENTATION_COST[name],
            welfare_improvement=100.0 * (util[name] - u_base) / (u_opt - u_base),
            welfare_reference=target.welfare_improvement if target else None))
    return PolicyComparison(rows=rows, experiments=experiments)


# --- sensitivity sweep ------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    """Outcome of one single-parameter adjustment (fractions, not percent).

    ``coefficient`` is |relative change in endpoint washer share| divided
    by |relative change in the parameter|.
    """

    parameter: str
    baseline_value: float
    adjusted_value: float
    washer_share: float
    green_intensity: float
    direction: str
    coefficient: float


SWEEP_ADJUSTMENTS = (
    ("learning_rate", 0.30),
    ("learning_rate", 0.15),
    ("share_loss_rate", 0.08),
    ("share_loss_rate", 0.03),
    ("wash_cost_savings_rate", 0.50),
    ("wash_cost_savings_rate", 0.15),
    ("payback_period", 3),
    ("payback_period", 5),
)

# The cost-savings rows use the savings-rate convention (washing cost =
# substantive cost times one minus the rate), so their reference run pins
# the rate here instead of using the engine's absolute-cost default.
WASH_SAVINGS_REFERENCE = 0.30


def sensitivity_sweep(params: SimParams, n_reps: int = 20, base_seed: int = 0,
                      threads: int | None = None) -> list[SweepResult]:
    """One-at-a-time adjustments of the headline calibration knobs.

    Each adjustment reruns the baseline scenario (same seeds, so the
    comparison is paired) with a single parameter changed.  Improvement
    means the endpoint washer share fell while mean green intensity rose
    relative to the matching reference run; any other combination counts
    as Deterioration.  Adjustments equal to their reference value carry no
    defined relative change and are skipped.
    """

    def endpoint_pair(p: SimParams) -> tuple[float, float]:
        e = run_experiment(p, "baseline", n_reps, base_seed, threads)
        return (float(e.endpoints["washer_share"].mean()),
                float(e.endpoints["mean_green_intensity_all"].mean()))

    references: dict[str, tuple[float, float]] = {}
    results: list[SweepResult] = []
    for name, adjusted in SWEEP_ADJUSTMENTS:
        if name == "wash_cost_savings_rate":
            base_value = params.wash_cost_savings_rate
            if base_value is None:
                base_value = WASH_SAVINGS_REFERENCE
            ref_params = replace(params, wash_cost_savings_rate=base_value)
            ref_key = f"savings={base_value}"
        else:
            base_value = getattr(params, name)
            ref_params = params
            ref_key = "as-given"
        if adjusted == base_value:
            continue
        if base_value == 0:
            raise ValueError("sensitivity_sweep: relative change undefined "
                             f"for zero baseline value of {name}")
        if ref_key not in references:
            references[ref_key] = endpoint_pair(ref_params)
        share_ref, intensity_ref = references[ref_key]
        share_adj, intensity_adj = endpoint_pair(
            replace(params, **{name: adjusted}))
        improved = share_adj < share_ref and intensity_adj > intensity_ref
        coefficient = (abs((share_adj - share_ref) / share_ref)
                       / abs((adjusted - base_value) / base_value))
        results.append(SweepResult(
            parameter=name, baseline_value=float(base_value),
            adjusted_value=float(adjusted), washer_share=share_adj,
            green_intensity=intensity_adj,
            direction="Improvement" if improved else "Deterioration",
            coefficient=coefficient))
    return results


def settling_periods(share_matrix: np.ndarray, tol: float = 0.02) -> np.ndarray:
    """Per-replication period after which a trajectory stays near its end.

    For each row, the first period t such that every later value sits within
    ``tol`` of the final value; 0 when the whole path already does.  Used as
    the equilibrium-cycle estimate in the robustness table.
    """
    x = np.asarray(share_matrix, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("settling_periods: need a (reps, periods) matrix")
    offside = np.abs(x - x[:, -1:]) > tol
    from_end = offside[:, ::-1].argmax(axis=1)
    last_offside = x.shape[1] - 1 - from_end
    return np.where(offside.any(axis=1), last_offside + 1, 0)


# --- pooled-panel correlation ------------------------------------------------


def build_pooled_panel(params: SimParams, n_reps: int = 10, base_seed: int = 0,
                       scenario: PolicyScenario | str = "baseline",
                       threads: int | None = None) -> dict[str, np.ndarray]:
    """Firm-period disclosure panel pooled over replications.

    Industry ids are offset per replication so leave-one-out peer means
    never mix firms from different runs; a ``rep`` column tags the origin.
    """
    if n_reps < 1:
        raise ValueError(f"build_pooled_panel: need n_reps >= 1, got {n_reps}")
    sc = _resolve_scenario(scenario)
    seeds = [mix_seed(base_seed, k) for k in range(n_reps)]
    panels = _run_slots(_panel_worker, params, sc, seeds, threads)
    merged: dict[str, np.ndarray] = {}
    for key in panels[0]:
        parts = []
        for k, pan in enumerate(panels):
            col = pan[key]
            if key == "industry_id":
                col = col + k * params.n_industries
            parts.append(col)
        merged[key] = np.concatenate(parts)
    merged["rep"] = np.concatenate(
        [np.full(len(pan["period"]), k, dtype=np.int64)
         for k, pan in enumerate(panels)])
    return merged


def correlation_echo(panel: dict[str, np.ndarray]) -> float:
    """Pooled correlation between peer talk and own green output.

    Pearson r between the leave-one-out peer washing index and
    ln(1 + green output) over every firm-period cell.  A precomputed
    ``peer_washing_index`` column is used when present; otherwise peers are
    same-industry firms in the same period.
    """
    periods = np.asarray(panel["period"], dtype=np.int64)
    if np.unique(periods).size < 3:
        raise ValueError("correlation_echo: need at least 3 periods")
    if "peer_washing_index" in panel:
        peer = np.asarray(panel["peer_washing_index"], dtype=float)
    else:
        groups = (np.asarray(panel["industry_id"], dtype=np.int64)
                  * (int(periods.max()) + 1) + periods)
        peer = peer_means_excluding_self(panel["washing_index"], groups)
    return pearson(peer, np.log1p(panel["green_output"]))
