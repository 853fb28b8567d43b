//! Instance files, the check runner and the command-line front end for
//! the exact ε-subdifferential calculus in `convexint-core`.

pub mod analytic;
pub mod format;
pub mod generate;
pub mod render;
pub mod run;
