//! Experiments on top of the solver: subsidy schemes, parameter sweeps,
//! subsidy comparisons and claim verification.

mod claims;
mod compare;
mod path;
mod subsidy;
mod sweep;

pub use claims::{
    verify_claim, ClaimFailure, ClaimPoint, ClaimReport, ClaimSpec, Proposition, Trend,
};
pub use compare::{
    appendix_c_experiments, beliefs_sweep, compare_subsidies, delta_sweep, sign_with_ties,
    subsidy_delta, DeltaRow, SubsidyComparison, Variant, TIE_FLOOR,
};
pub use path::{ParamPath, PathTarget};
pub use subsidy::{apply_scheme, SubsidyScheme, SubsidyTarget};
pub use sweep::{
    delta_rows, param_series, point_spec, risk_mode_series, run_series_sweep, run_sweep, PlayerRow,
    Series, SweepRow, SweepSpec,
};
