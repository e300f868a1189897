"""Entanglement sudden-death analysis for the icosahedral transverse-field Ising model.

Library layers:

- :mod:`icoent.qstate`: dense states, partial trace/transpose, norms, eigh.
- :mod:`icoent.spin_system`: the 12-spin icosahedron model, spectra, thermal
  and quenched states, observables.
- :mod:`icoent.measures`: logarithmic negativity, distance to the separable
  set, the 3-party witness, separable-ball certificates, threshold solvers.
- :mod:`icoent.fermionic`: parity-superselected mode ensembles and their
  explicit biseparable decompositions.
- :mod:`icoent.experiments` / :mod:`icoent.cli`: reproducible sweep drivers
  with CSV/JSON output.
"""

__version__ = "0.1.0"

from .errors import (
    BracketingError,
    DegenerateGroundStateError,
    DomainError,
    MonotonicityError,
    NumericalError,
)
from .qstate import (
    BasisConvention,
    DensityMatrix,
    HermitianEigensystem,
    PureState,
    eigh,
    frobenius_distance,
    kron,
    partial_trace,
    partial_transpose,
    reorder_sites,
    trace_norm,
)
from .spin_system import (
    IcosahedronGraph,
    ModelParams,
    SpectrumCache,
    build_hamiltonian,
    build_icosahedron,
    diagonalize,
    frh_sweep,
    ground_state,
    observables,
    pair_at_distance,
    product_basis_state,
    quench_state,
    thermal_state_rdm,
    triangle_scaled,
)
from .measures import (
    LocalUnitaryTriple,
    OptimizerConfig,
    ProductMixtureAnsatz,
    SeparableBall,
    geometric_entanglement,
    gme_W,
    gme_W_raw,
    in_separable_ball,
    log_negativity,
    separable_ball,
    temperature_threshold,
    zero_crossing,
)
from .fermionic import (
    BiseparableDecomposition,
    EvenModeState,
    FermionicEnsemble,
    ParityBreakingPerturbation,
    VerificationReport,
    assemble_rho_eps,
    biseparable_decomposition_m3,
    biseparable_decomposition_m4,
    build_mirrored_ensemble,
    epsilon_star,
    verify_decomposition,
)
