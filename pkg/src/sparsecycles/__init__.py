"""Sparse planar polynomial fields with many nested limit cycles.

The package builds one-parameter families of Hamiltonian vector fields
whose period annuli support prescribed numbers of limit cycles under a
sparse polynomial perturbation, certifies the cycle counts through signed
first-order displacement integrals, and cross-checks the certificates by
direct trajectory simulation and Hopf analysis of small example families.
"""

from .abelian import (
    CatastrophicCancellation,
    IntegralValue,
    RegionBox,
    SignOutcome,
    green_integral,
    line_integral,
    region_box,
    sign_certificate,
)
from .construct import (
    AnnulusOvals,
    AnnulusTable,
    CancellationUnresolved,
    CertificateFailed,
    CycleCertificate,
    ExponentCapExceeded,
    InfeasibleThresholds,
    OvalSystem,
    TableEntry,
    attach_inner_ovals,
    build_outer_system,
    certify,
    choose_thresholds,
    discover_annuli,
    select_exponents,
)
from .dynamics import (
    CycleNotFound,
    DisplacementProfile,
    FirstOrderReport,
    FitUnstable,
    HopfReport,
    NoReturn,
    StepUnderflow,
    Trajectory,
    VerifiedCounts,
    check_reversibility,
    count_cycles,
    displacement_profile,
    first_order_check,
    hopf_analysis,
    integrate,
    verify_counts,
    verify_m4_cycles,
)
from .families import (
    BoundPair,
    NotHamiltonian,
    PerturbationSpec,
    PlanarField,
    SECOND_ORDER_A,
    SingularityReport,
    base_field,
    center_determinant,
    classify_singularities,
    five_monomial_field,
    four_monomial_field,
    hamiltonian_of,
    monomial_count,
    nested_cycle_count,
    optimal_split,
    perturbation_poly,
    perturbed_field,
    quadratic_lower_bound,
)
from .geometry import (
    AmplitudeUnreachable,
    DegenerateLevel,
    GeometryError,
    LevelOutOfRange,
    NoBoundingSaddle,
    NotStarShaped,
    Oval,
    PeriodAnnulus,
    VirtualOval,
    axis_amplitude,
    find_annulus,
    oval_by_amplitude,
    shrink_to_xwidth,
    trace_oval,
)
from .polyalg import (
    EvaluationOverflow,
    LogValue,
    Monomial2,
    SparsePoly2,
    antiderivative,
    differentiate,
    evaluate,
    evaluate_exact,
    term_strings,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeUnreachable",
    "AnnulusOvals",
    "AnnulusTable",
    "BoundPair",
    "CancellationUnresolved",
    "CatastrophicCancellation",
    "CertificateFailed",
    "CycleCertificate",
    "CycleNotFound",
    "DegenerateLevel",
    "DisplacementProfile",
    "EvaluationOverflow",
    "ExponentCapExceeded",
    "FirstOrderReport",
    "FitUnstable",
    "GeometryError",
    "HopfReport",
    "InfeasibleThresholds",
    "IntegralValue",
    "LevelOutOfRange",
    "LogValue",
    "Monomial2",
    "NoBoundingSaddle",
    "NoReturn",
    "NotHamiltonian",
    "NotStarShaped",
    "Oval",
    "OvalSystem",
    "PeriodAnnulus",
    "PerturbationSpec",
    "PlanarField",
    "RegionBox",
    "SECOND_ORDER_A",
    "SignOutcome",
    "SingularityReport",
    "SparsePoly2",
    "StepUnderflow",
    "TableEntry",
    "Trajectory",
    "VerifiedCounts",
    "VirtualOval",
    "antiderivative",
    "attach_inner_ovals",
    "axis_amplitude",
    "base_field",
    "build_outer_system",
    "center_determinant",
    "certify",
    "check_reversibility",
    "choose_thresholds",
    "classify_singularities",
    "count_cycles",
    "differentiate",
    "discover_annuli",
    "displacement_profile",
    "evaluate",
    "evaluate_exact",
    "find_annulus",
    "first_order_check",
    "five_monomial_field",
    "four_monomial_field",
    "green_integral",
    "hamiltonian_of",
    "hopf_analysis",
    "integrate",
    "line_integral",
    "monomial_count",
    "nested_cycle_count",
    "optimal_split",
    "oval_by_amplitude",
    "perturbation_poly",
    "perturbed_field",
    "quadratic_lower_bound",
    "region_box",
    "select_exponents",
    "shrink_to_xwidth",
    "sign_certificate",
    "term_strings",
    "trace_oval",
    "verify_counts",
    "verify_m4_cycles",
    "__version__",
]
