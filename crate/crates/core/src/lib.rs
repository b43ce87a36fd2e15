//! Exact graded Betti tables of the toric surfaces `X_δ` embedded by `L_d`, a
//! brute-force Koszul cohomology oracle to check them, and the asymptotic
//! machinery for comparing table rows with a Gaussian profile.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod exact_betti;
pub mod koszul_oracle;
pub mod lattice;

pub use error::{Error, Result};
pub use exact_betti::{betti_table, BettiTable, FormulaVariant, N1Interpretation};
pub use lattice::SurfaceSpec;
