"""Frozen reference values the replication is checked against.

Every number here is copied verbatim from the published tables this
simulation reproduces; nothing in the package computes them.  The bands at
the bottom are the acceptance gates: they say how close a desk-scale batch
must land for the replication to count, and they are shared by the test
suite and the table-replication report so the two can never drift apart.

Units follow the printed tables: shares and intensities in percent, cv in
percent, utility as an index anchored at 100.  Simulation internals use
fractions; convert at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

REFERENCE_SEED = 42


# --- baseline evolution (checkpoint rows) -----------------------------------


@dataclass(frozen=True)
class CheckpointRow:
    period: int
    washer_share: float
    intensity_all: float
    intensity_honest: float
    intensity_washer: float
    utility_index: float


BASELINE_CHECKPOINTS = (
    CheckpointRow(0, 10.0, 8.50, 8.80, 3.20, 100.0),
    CheckpointRow(25, 23.5, 7.42, 8.65, 2.87, 94.3),
    CheckpointRow(50, 38.7, 6.23, 8.51, 2.45, 88.7),
    CheckpointRow(75, 44.2, 5.34, 8.76, 2.21, 85.2),
    CheckpointRow(100, 45.8, 4.89, 9.12, 2.14, 83.1),
    CheckpointRow(125, 45.3, 4.56, 9.28, 2.08, 82.4),
    CheckpointRow(150, 44.9, 4.37, 9.35, 2.05, 81.9),
    CheckpointRow(175, 45.1, 4.24, 9.31, 2.02, 81.5),
    CheckpointRow(200, 45.0, 4.18, 9.33, 2.10, 81.3),
)


# --- policy comparison at the final period -----------------------------------


@dataclass(frozen=True)
class PolicyTarget:
    scenario: str
    washer_share: float
    green_intensity: float
    utility_index: float
    implementation_cost: float | None
    welfare_improvement: float | None


POLICY_TARGETS = {
    "baseline": PolicyTarget("baseline", 45.0, 4.18, 81.3, 0.0, 0.0),
    "regulation": PolicyTarget("regulation", 28.3, 6.12, 88.7, 100.0, 28.5),
    "education": PolicyTarget("education", 18.2, 7.34, 92.4, 65.0, 42.3),
    "reputation": PolicyTarget("reputation", 12.4, 7.76, 94.1, 80.0, 51.7),
    "combined": PolicyTarget("combined", 7.8, 8.62, 96.8, 140.0, 64.9),
    "optimum": PolicyTarget("optimum", 0.0, 9.50, 100.0, None, None),
}

# Ascending endpoint washer share; green intensity orders the other way.
POLICY_SHARE_ORDER = ("combined", "reputation", "education",
                      "regulation", "baseline")


# --- sensitivity adjustments --------------------------------------------------


@dataclass(frozen=True)
class SweepTarget:
    parameter: str
    baseline_value: float
    adjusted_value: float
    washer_share: float
    green_intensity: float
    direction: str
    coefficient: float


SWEEP_TARGETS = (
    SweepTarget("learning_rate", 0.20, 0.30, 33.2, 6.02, "Improvement", 0.62),
    SweepTarget("learning_rate", 0.20, 0.15, 52.1, 3.34, "Deterioration", 0.48),
    SweepTarget("share_loss_rate", 0.05, 0.08, 30.4, 5.87, "Improvement", 0.71),
    SweepTarget("share_loss_rate", 0.05, 0.03, 58.7, 3.12, "Deterioration", 0.83),
    SweepTarget("wash_cost_savings_rate", 0.30, 0.50, 53.4, 3.46,
                "Deterioration", 0.55),
    SweepTarget("wash_cost_savings_rate", 0.30, 0.15, 31.8, 5.76,
                "Improvement", 0.64),
    SweepTarget("payback_period", 4, 3, 40.2, 5.23, "Improvement", 0.42),
    SweepTarget("payback_period", 4, 5, 49.3, 3.67, "Deterioration", 0.38),
)


# --- robustness summary (500 replications) ------------------------------------


@dataclass(frozen=True)
class RobustnessTarget:
    metric: str
    n: int
    mean: float
    sd: float
    cv: float
    ci_lo: float
    ci_hi: float
    skewness: float
    kurtosis: float


ROBUSTNESS_TARGETS = (
    RobustnessTarget("ai_wash_proportion", 500, 45.03, 2.87, 6.4,
                     44.78, 45.28, 0.12, 2.89),
    RobustnessTarget("green_innovation_intensity", 500, 4.18, 0.31, 7.4,
                     4.15, 4.21, -0.08, 3.12),
    RobustnessTarget("consumer_utility", 500, 81.34, 4.23, 5.2,
                     80.97, 81.71, 0.05, 2.95),
    RobustnessTarget("market_equilibrium_cycle", 500, 127.5, 8.9, 7.0,
                     126.7, 128.3, 0.21, 3.34),
)


# --- acceptance bands ----------------------------------------------------------


@dataclass(frozen=True)
class Band:
    """Closed interval; the gates below are all stated as one of these."""

    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def __str__(self) -> str:
        return f"[{self.lo:g}, {self.hi:g}]"


# Simulation-unit bands (fractions) for desk-scale batches of the baseline.
PERIOD0_SHARE = 0.10
ENDPOINT_SHARE_BAND = Band(0.40, 0.50)
ENDPOINT_INTENSITY_BAND = Band(0.035, 0.050)
ENDPOINT_UTILITY_BAND = Band(76.0, 87.0)
HONEST_DRIFT_TOLERANCE = 0.15
WASHER_INTENSITY_CEILING = 0.035

# Policy comparison gates.
OPTIMUM_SHARE_CEILING = 0.02
ADJACENT_SHARE_SEPARATION = 0.02

# Robustness and correlation gates.
ROBUSTNESS_CV_CEILING = 0.10
ECHO_R_CEILING = -0.05
