"""rmdl: von Mangoldt convolutions and random Goldbach-type Dirichlet series."""

__version__ = "0.1.0"

from .arithmetic import MangoldtTable, build_mangoldt_table, mangoldt, is_prime, read_dump, write_dump
from .config import (
    Budgets,
    BudgetError,
    CapacityError,
    DegenerateError,
    PrecisionError,
    RmdlError,
    default_budgets,
)
from .convolution import (
    CoefficientArrays,
    composition_count,
    convolve_power_direct,
    convolve_power_fft,
    goldbach_coefficients,
)
from .dirichlet import (
    AbscissaEstimate,
    PartialSumTrace,
    estimate_abscissa,
    geometric_checkpoints,
    growth_exponent,
    partial_sum_trace,
    truncate_unit,
    truncated_variance,
    variance_series,
)
from .ensemble import (
    EXACT,
    SURROGATE,
    ExactDistribution,
    SeedSpec,
    SignedPath,
    draw_sign,
    exact_distribution,
    sample_coefficient,
    sample_path,
    symmetry_check,
)
from .goldbach import (
    divergence_diagnostic_sigma1,
    goldbach_record,
    hl_lower_bound_check,
    hl_ratio_scan,
    prime_pair_count,
    singular_series,
    w2_prime_part,
)
