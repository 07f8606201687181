"""Near-field channel estimation for large uniform planar arrays.

Modified 2D-DFT sparse dictionaries, 2D pattern-coupled sparse Bayesian
learning with a GAMP E-step, greedy baselines and a Monte-Carlo harness.
"""
from .channel import (
    FieldBoundaries,
    PathParams,
    UpaGeometry,
    distance_approx,
    distance_exact,
    field_boundaries,
    steering_matrix_exact,
    steering_matrix_factored,
    synthesize_channel,
    ula_steering_vector,
)
from .dictionary import (
    ModifiedDft,
    PolarDictionary,
    SparseGridCoefficients,
    UpaDictionary,
    kron_dictionary,
    modified_dft,
    polar_dictionary,
    sigma_support,
    to_sparse_domain,
    upa_dictionary,
)
from .estimators import (
    PcsblHyperParams,
    RecoveryResult,
    bomp_estimate,
    neighbor_set,
    pcsbl_estimate,
    polar_omp_estimate,
)
from .gamp import GampConfig, GampResult, gamp_gaussian, posterior_direct
from .simulation import EstimatorSettings, ScenarioConfig, nmse_db, run_sweep

__version__ = "0.1.0"
