//! Exact Betti tables of `(X_δ; L_d)`.
//!
//! The table is supported in rows `q = 0, 1, 2`, with row 0 equal to `(1, 0, 0, …)`.
//! Row 2 has a one-term closed form `max{p − n + ν + κ, 0}·C(r−2, p)`, and row 1 is
//! then forced by the Hilbert numerator: the coefficient of `t^{p+1}` in
//! `(1−t)^{r+1}·Σ_k H(k) t^k` equals `(−1)^p k_{p,1} + (−1)^{p−1} k_{p−1,2}`.
//!
//! The printed three-term row-1 expression is kept as a separate, signed diagnostic
//! ([`printed_row1`]); it is never used to fill a table.

mod reconcile;

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{ehrhart_count, SurfaceSpec};

pub use reconcile::{reconcile, CellEvidence, VariantCell, VariantReport};

/// `C(n, k)`, zero when `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Signed-top binomial: `C(n, k)` with `n` possibly negative treated as an empty row.
pub(crate) fn binomial_i(n: i64, k: i64) -> BigUint {
    if n < 0 {
        BigUint::zero()
    } else {
        binomial(n as u64, k)
    }
}

/// The full row `C(n, 0), …, C(n, n)`.
pub fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut cur = BigUint::one();
    row.push(cur.clone());
    for i in 0..n {
        cur = cur * (n - i) / (i + 1);
        row.push(cur.clone());
    }
    row
}

/// Which count stands in for `n^(1)` in the printed formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum N1Interpretation {
    /// `r/3 + E_δ`
    PaperAlgebraic,
    /// `#(int Δ_d ∩ Z²)`
    GeometricInterior,
    /// `#{(x, 1) ∈ Δ_d}`
    HeightOne,
}

impl N1Interpretation {
    pub const ALL: [N1Interpretation; 3] = [
        N1Interpretation::PaperAlgebraic,
        N1Interpretation::GeometricInterior,
        N1Interpretation::HeightOne,
    ];

    /// The selected count, from closed forms that `lattice::constants` cross-checks
    /// against enumeration.
    pub fn value(self, spec: &SurfaceSpec) -> Result<i64> {
        let height_one = (spec.d() + spec.delta() / 2 + 1) as i64;
        Ok(match self {
            N1Interpretation::PaperAlgebraic => {
                let g = spec.gcd_delta_2() as i64;
                let n1 = Ratio::new(spec.r() as i64, 3) + Ratio::new(g - 1, 3);
                assert!(n1.is_integer(), "r/3 + E_delta is not integral");
                n1.to_integer()
            }
            N1Interpretation::GeometricInterior => height_one - spec.gcd_delta_2() as i64,
            N1Interpretation::HeightOne => height_one,
        })
    }

    fn label(self) -> &'static str {
        match self {
            N1Interpretation::PaperAlgebraic => "paper",
            N1Interpretation::GeometricInterior => "interior",
            N1Interpretation::HeightOne => "height-one",
        }
    }
}

/// One reading of the ambiguous constants in the printed row formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaVariant {
    n1: N1Interpretation,
    q2_max_shift: u8,
    q1_coeff_shift: u8,
}

impl FormulaVariant {
    pub fn new(n1: N1Interpretation, q2_max_shift: u8, q1_coeff_shift: u8) -> Result<Self> {
        if !(2..=3).contains(&q2_max_shift) || !(1..=2).contains(&q1_coeff_shift) {
            return Err(Error::InvalidVariant(format!(
                "{}:{q2_max_shift}:{q1_coeff_shift}",
                n1.label()
            )));
        }
        Ok(Self {
            n1,
            q2_max_shift,
            q1_coeff_shift,
        })
    }

    /// The variant that reproduces the Koszul oracle: interior count with `κ = 3`,
    /// and `s = 2`, which keeps the printed row-1 expression closest to the truth.
    pub fn validated() -> Self {
        Self {
            n1: N1Interpretation::GeometricInterior,
            q2_max_shift: 3,
            q1_coeff_shift: 2,
        }
    }

    /// All twelve variants, in a fixed order.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(12);
        for n1 in N1Interpretation::ALL {
            for k in [2, 3] {
                for s in [1, 2] {
                    out.push(Self::new(n1, k, s).unwrap());
                }
            }
        }
        out
    }

    pub fn n1_interpretation(&self) -> N1Interpretation {
        self.n1
    }

    pub fn q2_max_shift(&self) -> u8 {
        self.q2_max_shift
    }

    pub fn q1_coeff_shift(&self) -> u8 {
        self.q1_coeff_shift
    }

    /// The part of the variant that row 2 (and therefore the table) depends on.
    pub fn q2_key(&self) -> (N1Interpretation, u8) {
        (self.n1, self.q2_max_shift)
    }
}

impl fmt::Display for FormulaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.n1.label(), self.q2_max_shift, self.q1_coeff_shift)
    }
}

/// Parses `validated` or `<n1>:<kappa>:<s>` with `<n1>` one of `paper`, `interior`,
/// `height-one`.
impl FromStr for FormulaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "validated" {
            return Ok(Self::validated());
        }
        let bad = || Error::InvalidVariant(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let n1 = match parts[0] {
            "paper" => N1Interpretation::PaperAlgebraic,
            "interior" => N1Interpretation::GeometricInterior,
            "height-one" => N1Interpretation::HeightOne,
            _ => return Err(bad()),
        };
        let k: u8 = parts[1].parse().map_err(|_| bad())?;
        let q1: u8 = parts[2].parse().map_err(|_| bad())?;
        Self::new(n1, k, q1).map_err(|_| bad())
    }
}

/// Coefficients of `N(t) = (1−t)^{r+1}·Σ_k H(k) t^k`, indexed `0..=r+3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumeratorCoefficients {
    pub a: Vec<BigInt>,
}

impl NumeratorCoefficients {
    pub fn get(&self, j: usize) -> BigInt {
        self.a.get(j).cloned().unwrap_or_default()
    }
}

/// Per-coefficient access to the Hilbert numerator without materializing all of it.
///
/// Holds the row `C(r+1, ·)` and the Hilbert function values; each coefficient then
/// costs `O(r)` big-integer-by-word products.
#[derive(Debug, Clone)]
pub struct NumeratorStream {
    r: u64,
    binom: Vec<BigUint>,
    hilbert: Vec<u64>,
}

impl NumeratorStream {
    pub fn new(spec: &SurfaceSpec) -> Result<Self> {
        let r = spec.r();
        let hilbert = (0..=r + 3)
            .map(|k| ehrhart_count(spec, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            r,
            binom: binomial_row(r + 1),
            hilbert,
        })
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    /// `a[j] = Σ_{i=0..min(j, r+1)} (−1)^i C(r+1, i) H(j−i)`.
    pub fn coefficient(&self, j: usize) -> BigInt {
        if j > self.r as usize + 3 {
            return BigInt::zero();
        }
        let mut pos = BigUint::zero();
        let mut neg = BigUint::zero();
        for i in 0..=j.min(self.r as usize + 1) {
            let term = &self.binom[i] * self.hilbert[j - i];
            if i % 2 == 0 {
                pos += term;
            } else {
                neg += term;
            }
        }
        BigInt::from_biguint(Sign::Plus, pos) - BigInt::from_biguint(Sign::Plus, neg)
    }
}

pub fn hilbert_numerator(spec: &SurfaceSpec) -> Result<NumeratorCoefficients> {
    let stream = NumeratorStream::new(spec)?;
    let a = (0..=stream.r as usize + 3).map(|j| stream.coefficient(j)).collect();
    Ok(NumeratorCoefficients { a })
}

fn check_p(p: i64, lo: i64, hi: i64) -> Result<()> {
    if p < lo || p > hi {
        Err(Error::IndexOutOfRange { p, lo, hi })
    } else {
        Ok(())
    }
}

/// The printed row-2 term, `max{p − n + ν + κ, 0}·C(r−2, p)`.
pub fn row2(spec: &SurfaceSpec, p: i64, variant: FormulaVariant) -> Result<BigUint> {
    let r = spec.r() as i64;
    check_p(p, 0, r)?;
    let nu = variant.n1.value(spec)?;
    let m = p - spec.n() as i64 + nu + variant.q2_max_shift as i64;
    if m <= 0 {
        return Ok(BigUint::zero());
    }
    Ok(binomial_i(r - 2, p) * m as u64)
}

/// The printed three-term row-1 expression, evaluated verbatim. May be negative.
///
/// In terms of `n = r + 1` and `ν = n^(1)` it reads
/// `max{p − n + ν + 2, 0}·C(r−2, p−1) + p·C(r, p+1) − (n + ν − 1 − s)·C(r−2, p)`.
pub fn printed_row1(spec: &SurfaceSpec, p: i64, variant: FormulaVariant) -> Result<BigInt> {
    let r = spec.r() as i64;
    check_p(p, 0, r)?;
    let n = spec.n() as i64;
    let nu = variant.n1.value(spec)?;
    let lead = (p - n + nu + 2).max(0);
    let coeff = n + nu - 1 - variant.q1_coeff_shift as i64;
    let first = BigInt::from(lead) * BigInt::from(binomial_i(r - 2, p - 1));
    let second = BigInt::from(p) * BigInt::from(binomial_i(r, p + 1));
    let third = BigInt::from(coeff) * BigInt::from(binomial_i(r - 2, p));
    Ok(first + second - third)
}

/// `k_{p,1} = (−1)^p a[p+1] + k_{p−1,2}` using a precomputed numerator stream.
pub fn row1_with(
    stream: &NumeratorStream,
    spec: &SurfaceSpec,
    p: i64,
    variant: FormulaVariant,
) -> Result<BigUint> {
    check_p(p, 1, stream.r as i64)?;
    let mut a = stream.coefficient(p as usize + 1);
    if p % 2 == 1 {
        a = -a;
    }
    let value = a + BigInt::from(row2(spec, p - 1, variant)?);
    if value.is_negative() {
        return Err(Error::NegativeBetti { p, value });
    }
    Ok(value.magnitude().clone())
}

pub fn row1_from_numerator(spec: &SurfaceSpec, p: i64, variant: FormulaVariant) -> Result<BigUint> {
    let stream = NumeratorStream::new(spec)?;
    row1_with(&stream, spec, p, variant)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    PrintedFormula,
    NumeratorReconstruction,
    Oracle,
}

/// Exact Betti table, rows `q = 0, 1, 2`, columns `p = 0..=r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiTable {
    r: usize,
    rows: [Vec<BigUint>; 3],
    provenance: Provenance,
}

impl BettiTable {
    pub(crate) fn from_rows(r: usize, rows: [Vec<BigUint>; 3], provenance: Provenance) -> Self {
        debug_assert!(rows.iter().all(|row| row.len() == r + 1));
        debug_assert!(rows[0][0] == BigUint::one());
        Self { r, rows, provenance }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `k_{p,q}`, zero outside the stored range.
    pub fn get(&self, p: usize, q: usize) -> BigUint {
        self.rows
            .get(q)
            .and_then(|row| row.get(p))
            .cloned()
            .unwrap_or_default()
    }

    pub fn row(&self, q: usize) -> &[BigUint] {
        &self.rows[q]
    }

    /// Entry-wise equality, ignoring provenance.
    pub fn same_entries(&self, other: &BettiTable) -> bool {
        self.r == other.r && self.rows == other.rows
    }

    /// `Σ_p (−1)^p Σ_q k_{p,q} t^{p+q}`, as coefficients indexed `0..=r+3`.
    pub fn k_polynomial(&self) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.r + 4];
        for (q, row) in self.rows.iter().enumerate() {
            for (p, k) in row.iter().enumerate() {
                let term = BigInt::from(k.clone());
                if p % 2 == 0 {
                    out[p + q] += term;
                } else {
                    out[p + q] -= term;
                }
            }
        }
        out
    }

    /// Closed interval of `p` where row `q` is nonzero.
    pub fn support(&self, q: usize) -> Option<(usize, usize)> {
        let row = &self.rows[q];
        let lo = row.iter().position(|k| !k.is_zero())?;
        let hi = row.iter().rposition(|k| !k.is_zero())?;
        Some((lo, hi))
    }
}

/// Text layout: one line per `q`, one column per `p`, zeros shown as `-`.
impl fmt::Display for BettiTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|k| if k.is_zero() { "-".to_string() } else { k.to_string() })
                    .collect()
            })
            .collect();
        let width: Vec<usize> = (0..=self.r)
            .map(|p| {
                cells
                    .iter()
                    .map(|row| row[p].len())
                    .chain(std::iter::once(p.to_string().len()))
                    .max()
                    .unwrap()
            })
            .collect();
        write!(f, "  |")?;
        for (p, w) in width.iter().enumerate() {
            write!(f, " {:>w$}", p, w = w)?;
        }
        writeln!(f)?;
        writeln!(f, "--+{}", "-".repeat(width.iter().map(|w| w + 1).sum()))?;
        for (q, row) in cells.iter().enumerate() {
            write!(f, "{q} |")?;
            for (cell, w) in row.iter().zip(&width) {
                write!(f, " {:>w$}", cell, w = w)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Rows 0..=2 from the row-2 closed form and the numerator reconstruction of row 1.
pub fn betti_table(spec: &SurfaceSpec, variant: FormulaVariant) -> Result<BettiTable> {
    let r = spec.r() as usize;
    let stream = NumeratorStream::new(spec)?;
    let mut row0 = vec![BigUint::zero(); r + 1];
    row0[0] = BigUint::one();
    let row2 = (0..=r as i64)
        .map(|p| row2(spec, p, variant))
        .collect::<Result<Vec<_>>>()?;
    let mut row1 = vec![BigUint::zero(); r + 1];
    for p in 1..=r {
        // k_{p,1} = (−1)^p a[p+1] + k_{p−1,2}
        let mut a = stream.coefficient(p + 1);
        if p % 2 == 1 {
            a = -a;
        }
        let value = a + BigInt::from(row2[p - 1].clone());
        if value.is_negative() {
            return Err(Error::NegativeBetti { p: p as i64, value });
        }
        row1[p] = value.magnitude().clone();
    }
    Ok(BettiTable::from_rows(
        r,
        [row0, row1, row2],
        Provenance::NumeratorReconstruction,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(delta: i64, d: i64) -> SurfaceSpec {
        SurfaceSpec::new(delta, d).unwrap()
    }

    fn pascal(n: usize) -> Vec<Vec<BigUint>> {
        let mut rows = vec![vec![BigUint::one()]];
        for i in 1..=n {
            let prev = &rows[i - 1];
            let mut row = vec![BigUint::one(); i + 1];
            for k in 1..i {
                row[k] = &prev[k - 1] + &prev[k];
            }
            rows.push(row);
        }
        rows
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(4, 7), BigUint::zero());
        assert_eq!(binomial(4, -1), BigUint::zero());
        let triangle = pascal(100);
        assert_eq!(binomial(100, 50), triangle[100][50]);
        assert_eq!(
            binomial(100, 50).to_string(),
            "100891344545564193334812497256"
        );
        assert_eq!(binomial_row(100), triangle[100]);
    }

    proptest! {
        #[test]
        fn pascal_rule(n in 1u64..200, k in -2i64..202) {
            prop_assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
        }
    }

    #[test]
    fn numerator_of_the_scroll() {
        let a = hilbert_numerator(&spec(0, 1)).unwrap().a;
        let want: Vec<BigInt> = [1, 0, -6, 8, -3, 0, 0, 0, 0].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(a, want);
    }

    #[test]
    fn numerator_low_coefficients() {
        for delta in 0..5 {
            for d in 1..8 {
                let a = hilbert_numerator(&spec(delta, d)).unwrap();
                assert_eq!(a.get(0), BigInt::one());
                assert_eq!(a.get(1), BigInt::zero());
                let r = spec(delta, d).r() as usize;
                assert!(a.a[r + 1..].iter().all(Zero::is_zero));
            }
        }
    }

    #[test]
    fn row2_examples() {
        let v = FormulaVariant::new(N1Interpretation::GeometricInterior, 3, 1).unwrap();
        assert_eq!(row2(&spec(0, 1), 3, v).unwrap(), BigUint::zero());
        assert_eq!(row2(&spec(0, 2), 6, v).unwrap(), BigUint::one());
        for var in FormulaVariant::all() {
            for (delta, d) in [(0, 1), (3, 2), (1, 5)] {
                assert_eq!(row2(&spec(delta, d), 0, var).unwrap(), BigUint::zero());
            }
        }
        assert!(matches!(
            row2(&spec(0, 1), 6, v),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(row2(&spec(0, 1), -1, v).is_err());
    }

    #[test]
    fn printed_row1_examples() {
        let v = FormulaVariant::new(N1Interpretation::PaperAlgebraic, 3, 1).unwrap();
        assert_eq!(printed_row1(&spec(0, 1), 1, v).unwrap(), BigInt::from(-8));
        assert_eq!(printed_row1(&spec(0, 2), 1, v).unwrap(), BigInt::from(-32));
        for var in FormulaVariant::all() {
            assert!(!printed_row1(&spec(0, 3), 0, var).unwrap().is_positive());
        }
        assert!(printed_row1(&spec(0, 1), 9, v).is_err());
    }

    #[test]
    fn row1_examples() {
        let v = FormulaVariant::validated();
        assert_eq!(row1_from_numerator(&spec(0, 1), 1, v).unwrap(), BigUint::from(6u32));
        assert_eq!(row1_from_numerator(&spec(0, 1), 3, v).unwrap(), BigUint::from(3u32));
        assert_eq!(row1_from_numerator(&spec(0, 2), 1, v).unwrap(), BigUint::from(20u32));
        assert!(row1_from_numerator(&spec(0, 1), 0, v).is_err());
    }

    #[test]
    fn paper_variant_predicts_scroll_row2() {
        let v = FormulaVariant::new(N1Interpretation::PaperAlgebraic, 3, 1).unwrap();
        assert_eq!(row2(&spec(0, 1), 2, v).unwrap(), BigUint::from(3u32));
    }

    #[test]
    fn scroll_table() {
        let t = betti_table(&spec(0, 1), FormulaVariant::validated()).unwrap();
        let row1: Vec<u32> = [0, 6, 8, 3, 0, 0].to_vec();
        assert_eq!(t.row(1), row1.iter().map(|&v| BigUint::from(v)).collect::<Vec<_>>().as_slice());
        assert!(t.row(2).iter().all(Zero::is_zero));
        assert_eq!(t.get(0, 0), BigUint::one());
        assert_eq!(t.provenance(), Provenance::NumeratorReconstruction);
    }

    #[test]
    fn table_entry_62() {
        let t = betti_table(&spec(0, 2), FormulaVariant::validated()).unwrap();
        assert_eq!(t.get(6, 2), BigUint::one());
        assert_eq!(t.support(2), Some((6, 6)));
    }

    #[test]
    fn tables_satisfy_numerator_identity() {
        for delta in 0..=4 {
            for d in 1..=6 {
                let s = spec(delta, d);
                let t = betti_table(&s, FormulaVariant::validated()).unwrap();
                assert_eq!(t.k_polynomial(), hilbert_numerator(&s).unwrap().a, "{s}");
                assert_eq!(t.get(0, 0), BigUint::one());
                assert!((1..=t.r()).all(|p| t.get(p, 0).is_zero()));
            }
        }
    }

    #[test]
    fn row2_support_for_products() {
        for d in 1..=20u64 {
            let t = betti_table(&spec(0, d as i64), FormulaVariant::validated()).unwrap();
            let want = if 2 * d + 2 <= 3 * d { Some((2 * d as usize + 2, 3 * d as usize)) } else { None };
            assert_eq!(t.support(2), want, "d = {d}");
        }
    }

    #[test]
    fn n1_closed_forms_match_enumeration() {
        for delta in 0..=8 {
            for d in 1..=12 {
                let s = spec(delta, d);
                let c = crate::lattice::constants(&s).unwrap();
                assert_eq!(N1Interpretation::PaperAlgebraic.value(&s).unwrap(), c.n1_paper.to_integer());
                assert_eq!(N1Interpretation::GeometricInterior.value(&s).unwrap(), c.interior as i64);
                assert_eq!(N1Interpretation::HeightOne.value(&s).unwrap(), c.height_one as i64);
            }
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("validated".parse::<FormulaVariant>().unwrap(), FormulaVariant::validated());
        let v: FormulaVariant = "height-one:2:1".parse().unwrap();
        assert_eq!(v.q2_key(), (N1Interpretation::HeightOne, 2));
        assert_eq!(v.to_string().parse::<FormulaVariant>().unwrap(), v);
        assert!("interior:4:1".parse::<FormulaVariant>().is_err());
        assert!("interior:3".parse::<FormulaVariant>().is_err());
        assert_eq!(FormulaVariant::all().len(), 12);
    }

    #[test]
    fn printed_row1_is_asymptotically_right() {
        let exact = FormulaVariant::validated();
        for d in [50, 100, 200] {
            let s = spec(0, d);
            let r = s.r() as i64;
            let p = (r + 1) / 2;
            let truth = BigInt::from(row1_from_numerator(&s, p, exact).unwrap());
            let best = FormulaVariant::all()
                .into_iter()
                .map(|v| {
                    let diff = printed_row1(&s, p, v).unwrap() - &truth;
                    crate::asymptotics::ln_big(diff.magnitude()) - crate::asymptotics::ln_big(truth.magnitude())
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best.exp() <= 10.0 / (r as f64).sqrt(), "d = {d}");
        }
    }
}
