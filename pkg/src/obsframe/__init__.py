"""obsframe: observability, controllability, and sampling-frame numerics."""

from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    GuardViolationError,
    InvariantError,
    NonFiniteError,
    NotApplicableError,
    NotDiagonalizableError,
    NotObservableError,
    NotSelfAdjointError,
    NotStronglyStableError,
    ObsframeError,
    ParseError,
    QuadratureError,
    SchemaError,
    TailNotCertifiableError,
)
from .model import (
    ContinuousFinite,
    ContinuousInfinite,
    DiagonalizableSystem,
    DiscreteFinite,
    DiscreteInfinite,
    ObservationOperator,
    Operator,
    SamplingFamily,
    Spectrum,
    SystemSpec,
    matrix_exponential,
    operator_power,
    spectral_decomposition,
    stability_classification,
)
from .dynamics import (
    ContinuousSignal,
    DiscreteSignal,
    QuadratureGrid,
    certify_tail,
    controllability_map,
    controllability_tests,
    evolve_continuous,
    evolve_discrete,
    gauss_legendre_grid,
)
from .observability import (
    FrameReport,
    ObservabilityMatrix,
    ObservationRecord,
    admissibility_bound_check,
    duality_check,
    frame_report,
    grammian,
    grammian_closed_form_diagonal,
    observability_matrix,
    observe,
    read_observations_csv,
    reconstruct,
    write_observations_csv,
)
from .criteria import (
    CriteriaReport,
    EigenSamplePair,
    carleson_disc,
    carleson_halfplane,
    continuous_infinite_check,
    derive_pair,
    mobius_point,
    mobius_transfer,
    mode_energy,
    norm_ratio_condition,
    one_point_frame_check,
    spectrum_inclusion_report,
)
from .experiments import (
    bessel_admissibility_operator,
    discretization_sweep,
    kalman_independence,
    selfadjoint_independence,
    stable_truncation_bound,
)
from .sysio import load_pair, load_system, save_pair

__version__ = "0.1.0"
