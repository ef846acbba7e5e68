"""Regulation-aware interaction analysis for multidimensional molecular data.

Pipeline stages: (1) estimate the sparse regulation matrix and extract
regulatory modules by sequential biclustering, (2) integrate each module into
principal-component scores, (3) fit a penalized hierarchical interaction
model of the outcome on molecular features and environmental factors, for
continuous or right-censored responses.
"""

__version__ = "0.1.0"

from .bicluster import (
    RegulatoryModule,
    extract_modules,
    ks_test_two_sample,
    permutation_null_weights,
    select_gene_set,
    sparse_two_means,
    subtract_module,
)
from .data import (
    Dataset,
    FeatureSet,
    ModuleBlock,
    Scaler,
    load_dataset,
    marginal_prescreen,
    save_dataset,
    standardize,
)
from .errors import (
    AllCensoredError,
    ConvergenceError,
    DataFormatError,
    DegenerateWeightsError,
    NumericError,
    PipelineError,
    StructuralError,
)
from .integrate import assemble_features, module_pca, transform_features
from .interact import (
    FittedModel,
    SurvivalWeights,
    cd_fit,
    coefficient_table,
    default_grids,
    ebic_select,
    km_weights,
    kkt_spot_check,
    objective,
    predict,
)
from .regulation import (
    RegulationMatrix,
    estimate_regulation,
    kkt_check,
    lasso_column,
    lasso_path_bic,
)
from .simbench import (
    GroundTruth,
    SelectionResult,
    SimConfig,
    TuningParams,
    concordance_ipcw,
    evaluate_resampling,
    generate_dataset,
    generate_regulators,
    generate_theta,
    predict_rows,
    run_benchmark,
    run_pipeline,
    rv_coefficient,
    score_identification,
)

__all__ = [name for name in dir() if not name.startswith("_")]
