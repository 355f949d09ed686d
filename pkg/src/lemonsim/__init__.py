"""Agent-based simulator of disclosure washing in a lemons market.

Firms choose between substantive AI investment and cheap descriptive
disclosure; consumers learn quality from experience and periodic
revelations; a policy laboratory compares regulation, consumer education,
and reputation sanctions against the unmanaged baseline.
"""

from .agents import (HONEST, WASHER, ConsumerState, DisclosureRecord,
                     FirmState, claimed_quality, sample_population,
                     washer_count)
from .engine import (MarketState, PeriodRecord, RunTrace, Trajectory,
                     run_replication, step, switch_probability, true_quality)
from .metrics import (ai_tone, panel_correlation, panel_peer_indices, pearson,
                      peer_means_excluding_self, peer_washing_index,
                      read_panel_csv, washing_index,
                      washing_index_from_counts, write_panel_csv)
from .params import SimParams, default_params, validate_params
from .policy import (IMPLEMENTATION_COST, SCENARIO_NAMES, PolicyScenario,
                     make_scenario, validate_scenario, welfare_improvement)

__version__ = "0.1.0"

__all__ = [
    "HONEST", "WASHER", "ConsumerState", "DisclosureRecord", "FirmState",
    "claimed_quality", "sample_population", "washer_count",
    "MarketState", "PeriodRecord", "RunTrace", "Trajectory",
    "run_replication", "step", "switch_probability", "true_quality",
    "ai_tone", "panel_correlation", "panel_peer_indices", "pearson",
    "peer_means_excluding_self", "peer_washing_index", "read_panel_csv",
    "washing_index", "washing_index_from_counts", "write_panel_csv",
    "SimParams", "default_params", "validate_params",
    "IMPLEMENTATION_COST", "SCENARIO_NAMES", "PolicyScenario",
    "make_scenario", "validate_scenario", "welfare_improvement",
    "__version__",
]
