//! Reduced Green functions, their asymptotic series and the approximate
//! fundamental solutions built from them.

pub mod coeffs;
pub mod fourier;
pub mod fundamental;
pub mod oracle;
pub mod oracle_table;
pub mod series;

pub use coeffs::{fit_green_coeffs, fit_green_coeffs_with, FitOptions, GreenCoeffs};
pub use fourier::reduced_green_fourier;
pub use oracle::{line_green_oracle, radial_green_derivative, reduced_green_oracle, tail_exponent};
pub use series::{line_green_series, reduced_green_series, s_kernel};
pub use fundamental::{ApproxFundamental, ExactFundamental, Linear, SourcePoint, SpaceTimeFunction, TimeReversed, TimeShifted};
pub use oracle_table::OracleTable;
