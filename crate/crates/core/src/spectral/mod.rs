//! Spectral calculus of the Grushin operator: multipliers `F(L)`, their
//! kernels, operator and weighted norms, and the sweeps that measure the
//! constants in the multiplier theorems.

mod kernel;
mod lemmas;
mod multiplier;
mod norms;
mod plancherel;
mod sobolev;
mod sweeps;

pub use kernel::{
    column_l2_squared, kernel_column, kernel_value_direct, synthesize, KernelColumn, KernelEngine,
    KernelOptions, KernelRow, RowGrid,
};
pub use lemmas::{
    commutation_suite, random_coefficients, random_sum_integral_instance, spectral_gap,
    sum_integral_check, sum_integral_suite, weighted_commutation_check, Coefficient,
    CommutationCheck, LogLipschitz, SumIntegralCheck, COMMUTATION_SLACK,
};
pub use multiplier::{
    norm_n2, BochnerRiesz, Bump, Heat, IndicatorZero, Multiplier, MultiplierRegistry,
    MultiplierSpec, Rescaled, SqrtArg, Tabulated, Truncation,
};
pub use norms::{
    default_columns, l1_operator_norm, triple_norm, triple_norms, ColumnSup, ColumnValue,
    TripleNormSpec,
};
pub use plancherel::{
    plancherel_scan_high, plancherel_scan_low, plancherel_sum_high, plancherel_sum_low, IndexRange,
    PlancherelBlock, PlancherelReport, PlancherelRow, PlancherelScanSpec, PLANCHEREL_BAND,
};
pub use sobolev::{sobolev_norm, SobolevGrid};
pub use sweeps::{
    bochner_riesz_sweep, distinct_eigenvalues, eigenvalue_ladder, heat_column_and_fit,
    heat_columns, heat_gaussian_fit, heat_sweep, heat_triple_norm, mihlin_statistic,
    weighted_plancherel_sweep, BochnerRieszRow, BochnerRieszSweep, GaussianFit, HeatRow, HeatSweep,
    MihlinConfig, MihlinReport, MihlinRow, WeightedPlancherelGroup, WeightedPlancherelRow,
    WeightedPlancherelSweep, BOCHNER_RIESZ_BAND, HEAT_BAND, WEIGHTED_PLANCHEREL_BAND,
};
