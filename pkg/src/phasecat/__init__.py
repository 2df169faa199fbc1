"""phasecat: 1-D scattering, Fourier-phase analysis, and gradient-blow-up
diagnostics."""

from .catastrophe_family import (
    CatastropheReport,
    FamilyParams,
    blaschke_spectrum,
    family_report,
    laguerre_closed_form,
    laguerre_eval,
)
from .errors import NumericalError, PhasecatError, ValidationError
from .forward_scattering import (
    BoundState,
    Potential,
    ScatteringData,
    born_series,
    bound_states,
    dispersion_s11,
    jost_relation_check,
    jost_solve,
    scattering_matrix,
    staggered_k_grid,
)
from .grid_fourier import (
    GridFunction,
    GridSpec,
    NormReport,
    SpectralFunction,
    agmon_check,
    forward_transform,
    inverse_transform,
    norms,
    phase_decompose,
    translate_via_phase,
)
from .inverse_scattering import (
    MarchenkoKernel,
    TriangularKernel,
    accumulation_experiment,
    build_omega,
    recover_potential,
    solve_marchenko,
)
from .phase_reconstruction import (
    PhaseSystem,
    bound_report,
    build_phase_system,
    correction_terms,
    phase_from_s11,
    q_representation_residual,
    r_terms,
    relation_residual,
    solve_uv,
)

__version__ = "0.1.0"
