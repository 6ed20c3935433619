"""Non-autonomous discrete fragmentation: coefficients, weights, evolution families."""

from ._validation import DomainError, PreconditionError
from .coefficients import (
    AffineRates,
    CoefficientFamily,
    Generator,
    HolderCertificate,
    MassRuleReport,
    SineModulation,
    becker_doring_family,
    check_mass_rule,
    check_nonnegativity,
    estimate_holder,
    eval_lambda,
    power_law_family,
)
from .diagnostics import (
    DecayReport,
    check_monomer_decay,
    check_opnorm_decay,
    decay_envelope,
    decomp_bound_check,
    inf_rate,
    monomer_distance,
)
from .estimators import FragmentationPropagator, WeightConstructor
from .operators import (
    StateVector,
    TriangularMatrix,
    apply_A,
    apply_B,
    apply_G,
    check_B_bound,
    check_holder_opnorm,
    check_resolvent_bound,
    first_moment,
    opnorm_weighted,
    phi_w,
    weighted_norm,
)
from .solver import (
    SolverConfig,
    SolverError,
    Trajectory,
    column_voc,
    compose_check,
    evolution_matrix,
    integrate,
    product_oracle,
)
from .weights import (
    WeightCertificate,
    certify_kappa,
    construct_weight,
    power_weight,
    powerlaw_kappa_bound,
    shift_weight,
)

__version__ = "0.1.0"
