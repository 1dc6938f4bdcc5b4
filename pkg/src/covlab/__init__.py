"""Census coverage-error estimation from capture-recapture surveys.

The package splits into the estimation core (`ds_core`, `estimators`),
survey machinery (`sampling`, `matching`), a synthetic world generator
(`popsim`) and the Monte Carlo harness (`harness`, `cli`).
"""

from .constants import ABS_TOL_LOGLIK, REL_TOL_IDENTITY, TIE_TOL_SEARCH
from .ds_core import (
    CoverageSummary,
    DsTable,
    LikelihoodParts,
    MleResult,
    ds_estimate_cells,
    ds_estimate_margins,
    estimate_x00,
    log_likelihood,
    mle_by_search,
)
from .errors import (
    ConfigError,
    CoverageLabError,
    DegenerateInputs,
    DegenerateTable,
    DesignError,
    DomainError,
    DuplicateKey,
    EmptyCell,
    InvalidEstimates,
    InvalidMargins,
    MissingField,
    MissingWeight,
    SchemaError,
    UnresolvedCode,
    ValidationError,
)
from .estimators import (
    EmpiricalDsInputs,
    F30Placement,
    FCodeTallies,
    MoverTallies,
    Procedure,
    ProcedureCEstimates,
    ProcedureCResult,
    empirical_ds_estimate,
    fcode_estimate,
    fcode_missed_both,
    mover_ratio,
    net_undercount,
    procedure_c_table,
)
from .matching import (
    MatchErrorModel,
    MatchResult,
    MatchTallies,
    match_and_code,
    tally_groups,
)
from .popsim import (
    CaptureProbabilities,
    CensusSim,
    GroundTruthLedger,
    PesSim,
    Population,
    PopulationConfig,
    ground_truth_ledger,
    simulate_census,
    simulate_pes,
    synthesize_population,
)
from .sampling import (
    District,
    DrawnSample,
    SampleDesign,
    SampledHousehold,
    WeightedHousehold,
    draw_sample,
    noninterview_adjust,
    selection_probability,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ABS_TOL_LOGLIK",
    "REL_TOL_IDENTITY",
    "TIE_TOL_SEARCH",
    "CoverageSummary",
    "DsTable",
    "LikelihoodParts",
    "MleResult",
    "ds_estimate_cells",
    "ds_estimate_margins",
    "estimate_x00",
    "log_likelihood",
    "mle_by_search",
    "CoverageLabError",
    "ConfigError",
    "DegenerateInputs",
    "DegenerateTable",
    "DesignError",
    "DomainError",
    "DuplicateKey",
    "EmptyCell",
    "InvalidEstimates",
    "InvalidMargins",
    "MissingField",
    "MissingWeight",
    "SchemaError",
    "UnresolvedCode",
    "ValidationError",
    "EmpiricalDsInputs",
    "F30Placement",
    "FCodeTallies",
    "MoverTallies",
    "Procedure",
    "ProcedureCEstimates",
    "ProcedureCResult",
    "empirical_ds_estimate",
    "fcode_estimate",
    "fcode_missed_both",
    "mover_ratio",
    "net_undercount",
    "procedure_c_table",
    "MatchErrorModel",
    "MatchResult",
    "MatchTallies",
    "match_and_code",
    "tally_groups",
    "CaptureProbabilities",
    "CensusSim",
    "GroundTruthLedger",
    "PesSim",
    "Population",
    "PopulationConfig",
    "ground_truth_ledger",
    "simulate_census",
    "simulate_pes",
    "synthesize_population",
    "District",
    "DrawnSample",
    "SampleDesign",
    "SampledHousehold",
    "WeightedHousehold",
    "draw_sample",
    "noninterview_adjust",
    "selection_probability",
]
