//! Scaled Betti rows, the local de Moivre–Laplace approximation, and the
//! desk-scale checks for the row-1 Gaussian limit and the row-2 failure.
//!
//! Every comparison is made at the effective coordinate `a = (2p − r)/√r`, the unique
//! `a` with `p = r/2 + a√r/2`, so targets are `e^{−a²/2}` with no rounding of `p`.
//! Big integers are brought into floating point through their logarithm.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact_betti::{binomial_i, row1_with, row2, FormulaVariant, NumeratorStream};
use crate::lattice::SurfaceSpec;

/// Accepted range for the fitted error exponent of the row-1 check.
pub const SLOPE_RANGE: (f64, f64) = (-1.3, -0.3);

/// Natural log of a big integer from its top 64 bits and binary exponent.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap();
    (top as f64).ln() + shift as f64 * LN_2
}

/// `a = (2p − r)/√r`.
pub fn effective_a(r: u64, p: i64) -> f64 {
    (2.0 * p as f64 - r as f64) / (r as f64).sqrt()
}

/// `F₁(r) = 3√(2π)/(2^r·√r)`, kept in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactor {
    pub ln: f64,
    /// `F₁` itself when it is a normal `f64`.
    pub value: Option<f64>,
}

pub fn scale_factor_f1(r: u64) -> ScaleFactor {
    let r = r as f64;
    let ln = 3f64.ln() + 0.5 * (2.0 * PI).ln() - r * LN_2 - 0.5 * r.ln();
    let value = ln.exp();
    ScaleFactor {
        ln,
        value: value.is_normal().then_some(value),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowSample {
    pub p: usize,
    pub a_eff: f64,
    pub raw: BigUint,
    pub scaled: f64,
}

#[derive(Debug, Clone)]
pub struct RowDistribution {
    pub spec: SurfaceSpec,
    pub q: usize,
    pub samples: Vec<RowSample>,
    pub scale_description: String,
}

impl RowDistribution {
    pub fn raw_values(&self) -> Vec<BigUint> {
        self.samples.iter().map(|s| s.raw.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RowOptions {
    /// Rows with `r` above this are restricted to `|a_eff| ≤ window`.
    pub full_row_max_r: u64,
    pub window: f64,
}

impl Default for RowOptions {
    fn default() -> Self {
        Self {
            full_row_max_r: 1000,
            window: 6.0,
        }
    }
}

fn scaled(ln_scale: f64, raw: &BigUint) -> f64 {
    if raw.is_zero() {
        0.0
    } else {
        (ln_scale + ln_big(raw)).exp()
    }
}

pub fn scaled_row(spec: &SurfaceSpec, q: usize, variant: FormulaVariant) -> Result<RowDistribution> {
    scaled_row_with(spec, q, variant, &RowOptions::default())
}

/// Row `q ∈ {1, 2}` multiplied by `F₁(r)`.
pub fn scaled_row_with(
    spec: &SurfaceSpec,
    q: usize,
    variant: FormulaVariant,
    opts: &RowOptions,
) -> Result<RowDistribution> {
    if !(1..=2).contains(&q) {
        return Err(Error::Domain(format!("row q = {q} is not 1 or 2")));
    }
    let r = spec.r();
    let range: Vec<i64> = if r <= opts.full_row_max_r {
        (0..=r as i64).collect()
    } else {
        window_range(r, opts.window)
    };
    let f1 = scale_factor_f1(r);
    let stream = (q == 1).then(|| NumeratorStream::new(spec)).transpose()?;
    let samples = range
        .into_par_iter()
        .map(|p| {
            let raw = match &stream {
                Some(_) if p == 0 => BigUint::zero(),
                Some(st) => row1_with(st, spec, p, variant)?,
                None => row2(spec, p, variant)?,
            };
            Ok(RowSample {
                p: p as usize,
                a_eff: effective_a(r, p),
                scaled: scaled(f1.ln, &raw),
                raw,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RowDistribution {
        spec: *spec,
        q,
        samples,
        scale_description: "F1(r) = 3*sqrt(2*pi)/(2^r*sqrt(r))".to_string(),
    })
}

/// Integers `p ∈ 0..=r` with `|effective_a(r, p)| ≤ window`.
pub fn window_range(r: u64, window: f64) -> Vec<i64> {
    let half = window * (r as f64).sqrt() / 2.0;
    let lo = ((r as f64 / 2.0 - half).floor() as i64 - 1).max(0);
    let hi = ((r as f64 / 2.0 + half).ceil() as i64 + 1).min(r as i64);
    (lo..=hi)
        .filter(|&p| effective_a(r, p).abs() <= window)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltSample {
    pub r: u64,
    pub p: i64,
    pub c1: i64,
    pub c2: i64,
    pub value: f64,
    pub target: f64,
}

/// `√(2πr)/2^{r+1}·C(r+c₁, p+c₂)` against `2^{c₁}·e^{−a²/2}`.
pub fn clt_value(r: u64, p: i64, c1: i64, c2: i64) -> CltSample {
    let binom = binomial_i(r as i64 + c1, p + c2);
    let value = if binom.is_zero() {
        0.0
    } else {
        let rf = r as f64;
        (0.5 * (2.0 * PI * rf).ln() - (rf + 1.0) * LN_2 + ln_big(&binom)).exp()
    };
    let a = effective_a(r, p);
    CltSample {
        r,
        p,
        c1,
        c2,
        value,
        target: 2f64.powi(c1 as i32) * (-a * a / 2.0).exp(),
    }
}

/// `(r/(r+a√r))^{(r+a√r)/2} · (r/(r−a√r))^{(r−a√r)/2}`.
pub fn lemma_lhs(r: u64, a: f64) -> Result<f64> {
    let rf = r as f64;
    let s = rf.sqrt();
    if a.abs() >= s {
        return Err(Error::Domain(format!("|a| = {} must be below sqrt(r) = {s}", a.abs())));
    }
    let x = a / s;
    let exponent = -(rf + a * s) / 2.0 * x.ln_1p() - (rf - a * s) / 2.0 * (-x).ln_1p();
    Ok(exponent.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(ln r, ln error)`.
pub fn decay_fit(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} samples, need at least 4",
            samples.len()
        )));
    }
    if let Some(&(r, e)) = samples.iter().find(|&&(r, e)| !(e > 0.0) || !(r > 0.0)) {
        return Err(Error::InsufficientData(format!("nonpositive sample ({r}, {e})")));
    }
    let points: Vec<(f64, f64)> = samples.iter().map(|&(r, e)| (r.ln(), e.ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all r values coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(DecayFit {
        points,
        slope,
        intercept: my - slope * mx,
    })
}

/// Row-1 error at one `d`: `max |F₁(r)·k_{p,1} − e^{−a²/2}|` over the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Row1Check {
    pub d: u64,
    pub r: u64,
    pub max_error: f64,
    pub argmax_p: usize,
    pub argmax_a: f64,
    /// `max_error·√r`, the constant in the `K/√r` form of the bound.
    pub k_constant: f64,
}

/// Row-2 behavior at one `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row2Check {
    pub d: u64,
    pub r: u64,
    pub support: Option<(usize, usize)>,
    /// `p` with `|a_eff| ≤ window` and `k_{p,2} ≠ 0`.
    pub central_nonzero: Vec<usize>,
    pub past_threshold: bool,
}

#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub delta: u64,
    pub variant: FormulaVariant,
    pub a_window: f64,
    pub row1: Vec<Row1Check>,
    pub row1_fit: Option<DecayFit>,
    pub row2: Vec<Row2Check>,
    /// Smallest `d` from which the row-2 max-term is negative on the whole window.
    pub row2_threshold: u64,
}

impl TheoremReport {
    pub fn row1_decreasing(&self) -> bool {
        self.row1.windows(2).all(|w| w[1].max_error < w[0].max_error)
    }

    pub fn slope_in_range(&self) -> bool {
        self.row1_fit
            .as_ref()
            .is_some_and(|f| f.slope >= SLOPE_RANGE.0 && f.slope <= SLOPE_RANGE.1)
    }

    pub fn row2_central_zero(&self) -> bool {
        self.row2
            .iter()
            .filter(|c| c.past_threshold)
            .all(|c| c.central_nonzero.is_empty())
    }

    /// `(description, passed)` per checked claim.
    pub fn criteria(&self) -> Vec<(String, bool)> {
        let slope = self
            .row1_fit
            .as_ref()
            .map_or("n/a".to_string(), |f| format!("{:.4}", f.slope));
        vec![
            (
                "row 1: max error over the window decreases with d".to_string(),
                self.row1_decreasing(),
            ),
            (
                format!(
                    "row 1: error decay slope {slope} in [{}, {}]",
                    SLOPE_RANGE.0, SLOPE_RANGE.1
                ),
                self.slope_in_range(),
            ),
            (
                format!(
                    "row 2: zero on |a| <= {} for every d >= {}",
                    self.a_window, self.row2_threshold
                ),
                self.row2_central_zero(),
            ),
        ]
    }

    pub fn passed(&self) -> bool {
        self.criteria().iter().all(|c| c.1)
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "delta = {}, variant = {}, |a| <= {}",
            self.delta, self.variant, self.a_window
        )?;
        writeln!(f, "row 1: d, r, max error, at p, at a, K = error*sqrt(r)")?;
        for c in &self.row1 {
            writeln!(
                f,
                "  {} {} {:.6e} {} {:.4} {:.4}",
                c.d, c.r, c.max_error, c.argmax_p, c.argmax_a, c.k_constant
            )?;
        }
        if let Some(fit) = &self.row1_fit {
            writeln!(f, "  fitted slope {:.4}, intercept {:.4}", fit.slope, fit.intercept)?;
        }
        writeln!(f, "row 2: d, r, support, nonzero in window (threshold d = {})", self.row2_threshold)?;
        for c in &self.row2 {
            let support = c
                .support
                .map_or("empty".to_string(), |(lo, hi)| format!("[{lo}, {hi}]"));
            writeln!(f, "  {} {} {} {}", c.d, c.r, support, c.central_nonzero.len())?;
        }
        for (what, ok) in self.criteria() {
            writeln!(f, "{}: {what}", if ok { "PASS" } else { "FAIL" })?;
        }
        Ok(())
    }
}

/// Closed interval of `p` with `k_{p,2} ≠ 0`: the max-term must be positive and
/// `C(r−2, p)` nonzero.
pub fn row2_support(spec: &SurfaceSpec, variant: FormulaVariant) -> Result<Option<(usize, usize)>> {
    let r = spec.r() as i64;
    let first_positive = spec.n() as i64
        - variant.n1_interpretation().value(spec)?
        - variant.q2_max_shift() as i64
        + 1;
    let lo = first_positive.max(0);
    let hi = r - 2;
    if lo > hi {
        return Ok(None);
    }
    debug_assert!(!row2(spec, lo, variant)?.is_zero() && !row2(spec, hi, variant)?.is_zero());
    Ok(Some((lo as usize, hi as usize)))
}

/// First `d` after which the row-2 max-term stays negative at the right edge of the
/// window, using the continuous edge `r/2 + w√r/2`. The edge value is concave in
/// `d`, so a scan for its last positive point suffices.
pub fn row2_threshold(delta: u64, a_window: f64, variant: FormulaVariant) -> Result<u64> {
    const SCAN: u64 = 1_000_000;
    let mut last_positive = 0;
    for d in 1..=SCAN {
        let spec = SurfaceSpec::new(delta as i64, d as i64)?;
        let r = spec.r() as f64;
        let edge = r / 2.0 + a_window * r.sqrt() / 2.0;
        let nu = variant.n1_interpretation().value(&spec)? as f64;
        let m = edge - spec.n() as f64 + nu + variant.q2_max_shift() as f64;
        if m > 0.0 {
            last_positive = d;
        } else if d > 4 * last_positive + 64 {
            break;
        }
    }
    Ok(last_positive + 1)
}

fn row1_check(spec: &SurfaceSpec, a_window: f64, variant: FormulaVariant) -> Result<Row1Check> {
    let r = spec.r();
    let stream = NumeratorStream::new(spec)?;
    let f1 = scale_factor_f1(r);
    let mut best: Option<(f64, usize, f64)> = None;
    for p in window_range(r, a_window) {
        let raw = if p == 0 { BigUint::zero() } else { row1_with(&stream, spec, p, variant)? };
        let a = effective_a(r, p);
        let err = (scaled(f1.ln, &raw) - (-a * a / 2.0).exp()).abs();
        if best.map_or(true, |b| err > b.0) {
            best = Some((err, p as usize, a));
        }
    }
    let (max_error, argmax_p, argmax_a) =
        best.ok_or_else(|| Error::InsufficientData(format!("empty window at r = {r}")))?;
    Ok(Row1Check {
        d: spec.d(),
        r,
        max_error,
        argmax_p,
        argmax_a,
        k_constant: max_error * (r as f64).sqrt(),
    })
}

fn row2_check(spec: &SurfaceSpec, a_window: f64, variant: FormulaVariant, threshold: u64) -> Result<Row2Check> {
    let r = spec.r();
    let mut central_nonzero = vec![];
    for p in window_range(r, a_window) {
        if !row2(spec, p, variant)?.is_zero() {
            central_nonzero.push(p as usize);
        }
    }
    Ok(Row2Check {
        d: spec.d(),
        r,
        support: row2_support(spec, variant)?,
        central_nonzero,
        past_threshold: spec.d() >= threshold,
    })
}

/// Row-1 convergence and row-2 central vanishing over a list of `d`.
pub fn theorem_check(
    delta: u64,
    d_list: &[u64],
    a_window: f64,
    variant: FormulaVariant,
) -> Result<TheoremReport> {
    if d_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("d list must be nondecreasing".into()));
    }
    if !(a_window > 0.0) {
        return Err(Error::Domain(format!("window {a_window} must be positive")));
    }
    let specs = d_list
        .iter()
        .map(|&d| SurfaceSpec::new(delta as i64, d as i64))
        .collect::<Result<Vec<_>>>()?;
    let threshold = row2_threshold(delta, a_window, variant)?;
    let row1 = specs
        .par_iter()
        .map(|s| row1_check(s, a_window, variant))
        .collect::<Result<Vec<_>>>()?;
    let row2 = specs
        .par_iter()
        .map(|s| row2_check(s, a_window, variant, threshold))
        .collect::<Result<Vec<_>>>()?;
    let fit_points: Vec<(f64, f64)> = row1.iter().map(|c| (c.r as f64, c.max_error)).collect();
    let row1_fit = decay_fit(&fit_points).ok();
    Ok(TheoremReport {
        delta,
        variant,
        a_window,
        row1,
        row1_fit,
        row2,
        row2_threshold: threshold,
    })
}

/// Single peak: nondecreasing up to the maximum, nonincreasing after it.
pub fn is_unimodal(values: &[BigUint]) -> bool {
    let Some(peak) = values.iter().enumerate().max_by(|a, b| a.1.cmp(b.1)).map(|(i, _)| i) else {
        return true;
    };
    values[..=peak].windows(2).all(|w| w[0] <= w[1]) && values[peak..].windows(2).all(|w| w[0] >= w[1])
}

/// `raw / max(row)`, from both values shifted down to the top 64 bits of the maximum.
pub fn normalize_by_max(values: &[BigUint]) -> Vec<f64> {
    let Some(max) = values.iter().max() else {
        return vec![];
    };
    if max.is_zero() {
        return vec![0.0; values.len()];
    }
    let shift = max.bits().saturating_sub(64);
    let denom = (max >> shift).to_u64().unwrap() as f64;
    values
        .iter()
        .map(|v| (v >> shift).to_u64().unwrap() as f64 / denom)
        .collect()
}
