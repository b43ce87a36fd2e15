use num_bigint::BigInt;
use thiserror::Error;

use crate::lattice::SurfaceSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid surface: delta = {delta}, d = {d} (need d >= 1)")]
    InvalidSpec { delta: i64, d: i64 },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("homological index p = {p} outside {lo}..={hi}")]
    IndexOutOfRange { p: i64, lo: i64, hi: i64 },

    #[error("Koszul degree q = {0} outside 0..=4")]
    DegreeOutOfRange(i64),

    #[error("negative Betti number {value} reconstructed at p = {p}")]
    NegativeBetti { p: i64, value: BigInt },

    #[error("oracle infeasible for {spec}: r = {r} exceeds {max_r}")]
    OracleInfeasible { spec: SurfaceSpec, r: u64, max_r: u64 },

    #[error("Koszul stratum needs {entries} matrix entries, limit is {limit}")]
    ResourceLimit { entries: u128, limit: u128 },

    #[error("nonzero Betti number k_{{{p},{q}}} = {value} outside rows 0..=2")]
    SupportViolation { p: usize, q: usize, value: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cannot parse formula variant {0:?}")]
    InvalidVariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
