"""Causal network learning and stress-scenario generation for binary
financial factor data.

The pipeline: simulate or load binary up/down data, learn a causal network
whose arcs satisfy temporal priority and probability raising, optionally
sharpen it by bootstrap confidence pruning, then sample stress scenarios by
clamping the factor configurations a decision tree flags as risky.
"""

from .bootstrap import BootstrapReport, edge_confidence, prune, resample
from .classifier import (
    PROFITABLE,
    RISKY,
    DecisionTree,
    Leaf,
    Portfolio,
    Split,
    implied_up_cut,
    label_scenarios,
    learn_tree,
    predict,
    risky_paths,
    up_count,
    up_counts,
)
from .datagen import (
    FactorModelSpec,
    RealSeries,
    binarize,
    estimate_spec,
    ground_truth_dag,
    lag_align,
    market_factor_spec,
    simulate,
    simulate_dataset,
    sparse_random_instance,
)
from .evaluation import (
    SweepConfig,
    SweepReport,
    arc_contingency,
    roc_point,
    roc_upper_envelope,
    run_sweep,
)
from .learn import (
    EdgeSet,
    EmptyStratumError,
    LearnOptions,
    empirical_conditional,
    empirical_marginal,
    fit_cpts,
    hill_climb,
    learn_bn,
    learn_sbcn,
    log_likelihood,
    prima_facie_edges,
    regularized_score,
)
from .model import (
    BinaryDataset,
    ContingencyStats,
    Cpt,
    CsvFormatError,
    Dag,
    ModelSchemaError,
    SbcnModel,
    Scenario,
    dag_from_json,
    dag_to_json,
    has_cycle,
    scenarios_to_csv,
    validate_model,
)
from .sampling import ancestral_sample, clamp, stress_sample, topological_order
from .seeds import derive_seed, rng_for

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
