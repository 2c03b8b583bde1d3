"""Classification machinery for loxodromic elements and pairs of the
isometry group of complex hyperbolic space, over the bordered Hermitian
form of signature (n,1)."""

from .boundary import (
    BoundaryPoint,
    BoundaryTuple,
    CrossRatioEntry,
    InvariantVector,
    cartan_invariant,
    cross_ratio,
    invariant_vector,
    invariant_vectors_close,
    projective_distance,
    projectively_equal,
    random_boundary_point,
    random_boundary_tuple,
    tuples_congruent,
)
from .errors import (
    ClusterAmbiguityError,
    CollisionError,
    CxhypError,
    DegenerateConfigurationError,
    DegenerateFrameError,
    DimensionError,
    GramSchmidtError,
    InconsistentRegularityError,
    InvalidPairError,
    MarginalClassificationError,
    NormalizationError,
    NotFullRankError,
    NotInGroupError,
    NotLoxodromicError,
    OutsideDomainError,
    ZeroVectorError,
)
from .form import (
    FormContext,
    HVector,
    Isometry,
    classify_vector,
    complete_frame,
    h_orthonormalize,
    herm_product,
    inverse_in_group,
    is_su,
    project_out_null_pair,
    random_null_lift,
    random_su,
    standard_lift,
    su_residuals,
)
from .loxodromic import (
    EigenStructure,
    Eigenframe,
    Multiplicity,
    TraceTuple,
    char_poly,
    classify_isometry,
    eigen_structure,
    eigenframe,
    eigenpoints,
    eigenvalue_gap_regular,
    is_regular,
    multiplicity,
    random_loxodromic,
    resultant,
    same_element_class,
    self_inversive_residual,
    sylvester_matrix,
    trace_tuple,
)
from .pairs import (
    CanonicalEigenpoint,
    ConjugacyVerdict,
    LoxodromicPair,
    PairProfile,
    ReferenceEigenpoint,
    canonical_eigenpoint,
    global_scalar_deviation,
    is_good_pair_I,
    is_nonsingular,
    make_pair,
    normalize_good_I,
    normalize_nonsingular,
    pair_flags,
    pairs_conjugate,
    random_nonsingular_pair,
    random_pair,
    reference_eigenpoint,
    reference_invariants,
    transport_frame,
)

__version__ = "0.1.0"
