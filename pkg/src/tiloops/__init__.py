"""Seeded simulation and probability analysis of transactional-interpretation causal loops."""

from .analysis import (
    BigSpaceRegion,
    ConsistencyReport,
    Verdict,
    big_space_conditional,
    big_space_partition,
    coin_loop_trial,
    consistency_report,
    many_spaces_probability,
)
from .scenario import (
    Absorber,
    FrequencyTable,
    Relocation,
    Scenario,
    Setting,
    Timeline,
    TrialRecord,
    bilking_probe,
    build_maudlin,
    build_trivial,
    run_batch,
    run_trial,
)
from .scenario_file import dumps_scenario, load_scenario, loads_scenario
from .waves import (
    emit_offer,
    emitter_advanced_remnant,
    respond_confirmation,
    superpose,
    transaction_weights,
)

__version__ = "0.1.0"
