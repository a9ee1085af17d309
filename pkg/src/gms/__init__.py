"""Minimal-surface energy minimization for differential forms on periodic
grids, symmetry-reduced closed forms, and Born-Infeld identity checks."""

__version__ = "0.1.0"

from .borninfeld import (
    SelfDualDecomp,
    TwoForm4,
    bi_density,
    bi_el_residual,
    det_identity_gap,
    reduced_bi_energy,
    resolvent_asym_gap,
    sandwich,
    sd_split,
    selfdual_inverse_gap,
    wedge_square,
)
from .compare import closed_form_cochain_gap, exact_edge_averages
from .energy import (
    AdmissibilityReport,
    EnergyReport,
    RhoModel,
    admissibility_probe,
    custom_model,
    gms_model,
    grad_potential,
    hessian_apply,
    linear_model,
    tgms_model,
    total_energy,
)
from .exterior import (
    Cochain,
    ConformalMetric,
    GridComplex,
    HarmonicReport,
    build_torus,
    codifferential,
    constant_form,
    d,
    harmonic_rep,
    inner_product,
    is_closed,
    periods,
    pointwise_norm,
)
from .optimize import Solution, SolverConfig, SweepReport, minimize, t_sweep
from .reduced import (
    HFunction,
    Profile,
    ReducedSolution,
    ThresholdReport,
    builtin_h,
    class_scale,
    closed_profile,
    constant_for_class_scale,
    critical_class_scale,
    critical_constant,
    h_from_table,
    make_h_function,
    make_profile,
    profile_value,
    reduced_energy,
    reduced_minimize,
    solution_norm_value,
    sphere_volume,
)
