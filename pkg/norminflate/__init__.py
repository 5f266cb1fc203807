from .__version__ import __version__
from .lab import Lab
from .lacunary import (
    LacunaryParams,
    make_frequencies,
    make_initial_data,
    rule_params,
    verify_construction,
)
from .picard import (
    DuhamelKernel,
    bilinear,
    bilinear_parts,
    duhamel_integral,
    first_iterates,
    remainder_bound_M,
    rho1_split,
    rho10_coefficient,
)
from .spectral import SimConfig, residual_decompose, simulate, validate_resolution
from .trig_field import (
    TrigField,
    advect,
    besov_norm,
    divergence,
    gradient,
    heat,
    leray_project,
    linf_norm,
    product,
    to_grid,
)
from .verify import (
    BoundReport,
    SweepResult,
    inflation_experiment,
    theorem_witness,
)


__all__ = [
    "__version__",
    "BoundReport",
    "DuhamelKernel",
    "Lab",
    "LacunaryParams",
    "SimConfig",
    "SweepResult",
    "TrigField",
    "advect",
    "besov_norm",
    "bilinear",
    "bilinear_parts",
    "divergence",
    "duhamel_integral",
    "first_iterates",
    "gradient",
    "heat",
    "inflation_experiment",
    "leray_project",
    "linf_norm",
    "make_frequencies",
    "make_initial_data",
    "product",
    "remainder_bound_M",
    "residual_decompose",
    "rho1_split",
    "rho10_coefficient",
    "rule_params",
    "simulate",
    "theorem_witness",
    "to_grid",
    "validate_resolution",
    "verify_construction",
]
