"""choquet-risk - Randomly distorted Choquet integrals on finite sample spaces."""

from .capacity import (
    Capacity,
    DistortedProbability,
    ExplicitTable,
    SupOfProbabilities,
    capacity_from_generator,
    probability_capacity,
    uniform_capacity,
    validate_capacity,
)
from .choquet import (
    ComonotonicForm,
    Comonotonicity,
    ConditionalValue,
    are_comonotonic,
    choquet,
    choquet_of_form,
    comonotonic_decomposition,
    generalized_avar,
    generalized_var,
    rd_choquet,
    rd_choquet_concave_dual,
    rd_choquet_oracle,
)
from .config import (
    ChoquetConfig,
    disable_debug,
    enable_debug,
    get_config,
    reset_config,
    set_config,
)
from .distortion import (
    AVaR,
    DistortionCurve,
    Identity,
    RandomDistortion,
    VaR,
    WeightCurve,
    build_distortion,
    builtin_distortion,
    eval_distortion,
    is_concave,
)
from .dominance import (
    DominanceVerdict,
    TestUtility,
    Witness,
    dominates_sl,
    dominates_st,
    falsify_icx,
    integrated_survival,
    is_icx_witness,
    tail_quantile_integral,
    weighted_quantile_integral,
)
from .errors import (
    CharacterizationMismatch,
    PluginError,
    ScenarioError,
    ValidationError,
)
from .executor import cleanup_executor
from .representation import (
    AxiomReport,
    BuiltFromDistortion,
    CallableRiskMeasure,
    ConditionalExpectation,
    GridDistortion,
    NestedChain,
    PluginRiskMeasure,
    build_nested_chain,
    check_axioms,
    extract_distortion,
    verify_representation,
)
from .scenario import Scenario, parse_scenario, serialize_results, serialize_scenario
from .space import BlockPartition, Position, SampleSpace, is_block_measurable
from .stepfn import QuantilePair, StepFunction, distribution_function, quantiles
from .types import RiskMeasure

__version__ = "0.1.0"
__all__ = [
    # Spaces
    "SampleSpace",
    "BlockPartition",
    "Position",
    "is_block_measurable",
    # Capacities
    "Capacity",
    "ExplicitTable",
    "DistortedProbability",
    "SupOfProbabilities",
    "validate_capacity",
    "capacity_from_generator",
    "uniform_capacity",
    "probability_capacity",
    "StepFunction",
    "QuantilePair",
    "distribution_function",
    "quantiles",
    # Distortions
    "DistortionCurve",
    "RandomDistortion",
    "VaR",
    "AVaR",
    "Identity",
    "WeightCurve",
    "build_distortion",
    "builtin_distortion",
    "eval_distortion",
    "is_concave",
    # Integrals
    "ConditionalValue",
    "rd_choquet",
    "rd_choquet_oracle",
    "rd_choquet_concave_dual",
    "choquet",
    "generalized_var",
    "generalized_avar",
    "Comonotonicity",
    "ComonotonicForm",
    "are_comonotonic",
    "comonotonic_decomposition",
    "choquet_of_form",
    # Dominance
    "DominanceVerdict",
    "Witness",
    "TestUtility",
    "dominates_st",
    "dominates_sl",
    "falsify_icx",
    "is_icx_witness",
    "integrated_survival",
    "tail_quantile_integral",
    "weighted_quantile_integral",
    # Representation
    "RiskMeasure",
    "BuiltFromDistortion",
    "ConditionalExpectation",
    "CallableRiskMeasure",
    "PluginRiskMeasure",
    "NestedChain",
    "GridDistortion",
    "AxiomReport",
    "build_nested_chain",
    "extract_distortion",
    "check_axioms",
    "verify_representation",
    # Scenarios
    "Scenario",
    "parse_scenario",
    "serialize_scenario",
    "serialize_results",
    # Config
    "ChoquetConfig",
    "get_config",
    "set_config",
    "reset_config",
    "enable_debug",
    "disable_debug",
    "cleanup_executor",
    # Errors
    "ValidationError",
    "CharacterizationMismatch",
    "PluginError",
    "ScenarioError",
]
