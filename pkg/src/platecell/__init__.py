"""Effective bending behavior of thin plates with random in-plane structure.

The package samples planar microstructures (periodic textures and marked
Voronoi tessellations), solves periodic cell problems on a thickness-resolved
representative volume, reduces them to effective membrane/bending tensors,
studies their spatial-average statistics, and builds finite-thickness
deformations whose scaled energy approaches the homogenized bending energy.
"""

from .cellsolve import (
    CellLoad,
    CellOperator,
    CorrectorField,
    CoupledEffectiveTensor,
    EffectiveBendingForm,
    RVEGrid,
    cell_energy,
    coupled_tensor,
    effective_bending,
    effective_form,
    gamma_rescale_check,
    qgamma_eval,
    solve_corrector,
    sym2_to_voigt3,
    unit_loads,
)
from .decomposition import (
    MixedDecomposition,
    MixedField,
    SecondOrderSplit,
    cof_sym_grad,
    decompose_mixed,
    decompose_second_order,
    div_cof_residual,
    gradient_field,
    hessian_pairing,
    mixed_inner,
    mixed_norm,
    orthogonality_report,
    random_mixed_field,
)
from .ergodic import (
    BirkhoffSeries,
    EnsembleResult,
    IsotropyReport,
    birkhoff_average,
    birkhoff_rate,
    ensemble_effective,
    isotropy_defect,
    isotropy_report,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateRealizationError,
    NumericalError,
)
from .material import (
    PhaseMaterial,
    StrainForm,
    coercivity_constants,
    embed_plane,
    isotropic_form,
    material_table,
    material_table_from_json,
    material_table_to_json,
    q0_apply,
    svk_energy,
    sym_to_voigt6,
    taylor_check,
    voigt6_to_sym,
)
from .microstructure import (
    MicrostructureModel,
    MicrostructureRealization,
    PhaseGrid,
    phase_at,
    rasterize,
    sample_realization,
    shift,
)
from .recovery import (
    CellCorrectorSource,
    DeformationSampler,
    IsometrySpec,
    RecoveryConfig,
    RecoveryFamily,
    build_recovery,
    cylinder_isometry,
    evaluate_scaled_energy,
    flat_isometry,
    limit_energy,
    recovery_gaps,
)

__version__ = "0.1.0"

__all__ = [
    "BirkhoffSeries",
    "CellCorrectorSource",
    "CellLoad",
    "CellOperator",
    "ConfigError",
    "ConvergenceError",
    "CorrectorField",
    "CoupledEffectiveTensor",
    "DeformationSampler",
    "DegenerateRealizationError",
    "EffectiveBendingForm",
    "EnsembleResult",
    "IsometrySpec",
    "IsotropyReport",
    "MicrostructureModel",
    "MicrostructureRealization",
    "MixedDecomposition",
    "MixedField",
    "NumericalError",
    "PhaseGrid",
    "PhaseMaterial",
    "RVEGrid",
    "RecoveryConfig",
    "RecoveryFamily",
    "SecondOrderSplit",
    "StrainForm",
    "birkhoff_average",
    "birkhoff_rate",
    "build_recovery",
    "cell_energy",
    "coercivity_constants",
    "cof_sym_grad",
    "coupled_tensor",
    "cylinder_isometry",
    "decompose_mixed",
    "decompose_second_order",
    "div_cof_residual",
    "effective_bending",
    "effective_form",
    "embed_plane",
    "ensemble_effective",
    "evaluate_scaled_energy",
    "flat_isometry",
    "gamma_rescale_check",
    "gradient_field",
    "hessian_pairing",
    "isotropic_form",
    "isotropy_defect",
    "isotropy_report",
    "limit_energy",
    "material_table",
    "material_table_from_json",
    "material_table_to_json",
    "mixed_inner",
    "mixed_norm",
    "orthogonality_report",
    "phase_at",
    "q0_apply",
    "qgamma_eval",
    "random_mixed_field",
    "rasterize",
    "recovery_gaps",
    "sample_realization",
    "shift",
    "solve_corrector",
    "svk_energy",
    "sym2_to_voigt3",
    "sym_to_voigt6",
    "taylor_check",
    "unit_loads",
    "voigt6_to_sym",
]
