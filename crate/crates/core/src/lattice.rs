//! Lattice points of the trapezoid `conv{(0,0), (d,0), (0,2), (d+δ,2)}` and its dilates.
//!
//! The trapezoid is the moment polytope of the divisor `L_d` on the toric surface
//! `X_δ` whose fan has rays `(1,0), (0,1), (0,-1), (-2,δ)`. For even `δ` this is the
//! Hirzebruch surface `F_{δ/2}`. Graded pieces of the section ring have monomial bases
//! indexed by the lattice points of the dilates `kΔ_d`, so everything downstream
//! (Hilbert function, Koszul bases) is built from the enumeration here.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};

/// The pair `(δ, d)` selecting the surface `X_δ` and the divisor `L_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfaceSpec {
    delta: u64,
    d: u64,
}

impl SurfaceSpec {
    pub fn new(delta: i64, d: i64) -> Result<Self> {
        if delta < 0 || d < 1 {
            return Err(Error::InvalidSpec { delta, d });
        }
        Ok(Self {
            delta: delta as u64,
            d: d as u64,
        })
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    /// `gcd(δ, 2)` with the convention `gcd(0, 2) = 2`.
    pub fn gcd_delta_2(&self) -> u64 {
        self.delta.gcd(&2).max(1)
    }

    /// Projective dimension `r_d = #(Δ_d ∩ Z²) − 1`, from the closed form.
    pub fn r(&self) -> u64 {
        3 * self.d + self.delta + self.delta / 2 + 2
    }

    /// `n_d = r_d + 1 = dim H⁰(X_δ, L_d)`.
    pub fn n(&self) -> u64 {
        self.r() + 1
    }

    /// Number of lattice points of `kΔ_d` on the horizontal line at height `y`.
    ///
    /// The slanted edge runs from `(kd, 0)` to `(k(d+δ), 2k)`, so the row ends at
    /// `x = ⌊(2kd + yδ)/2⌋`.
    fn row_len(&self, k: u64, y: u64) -> Result<u64> {
        let twice = 2u64
            .checked_mul(k)
            .and_then(|v| v.checked_mul(self.d))
            .and_then(|v| y.checked_mul(self.delta).and_then(|w| v.checked_add(w)))
            .ok_or(Error::Overflow("row length"))?;
        Ok(twice / 2 + 1)
    }
}

impl fmt::Display for SurfaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(delta={}, d={})", self.delta, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

impl std::ops::Add for LatticePoint {
    type Output = LatticePoint;

    fn add(self, rhs: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x + rhs.x, self.y + rhs.y)
    }
}

/// Lattice points of `kΔ_d` in lexicographic `(y, x)` order.
pub fn lattice_points(spec: &SurfaceSpec, k: u64) -> Result<Vec<LatticePoint>> {
    let mut pts = Vec::with_capacity(ehrhart_count(spec, k)? as usize);
    for y in 0..=2 * k {
        let len = spec.row_len(k, y)?;
        pts.extend((0..len).map(|x| LatticePoint::new(x as i64, y as i64)));
    }
    Ok(pts)
}

/// `#(kΔ_d ∩ Z²)` from the Ehrhart polynomial `A·k² + (B/2)·k + 1`, where
/// `A = 2d + δ` is the area and `B = 2d + δ + 2 + gcd(δ,2)` the boundary count.
pub fn ehrhart_count(spec: &SurfaceSpec, k: u64) -> Result<u64> {
    let area = 2 * spec.d + spec.delta;
    let boundary = 2 * spec.d + spec.delta + 2 + spec.gcd_delta_2();
    debug_assert!(boundary % 2 == 0);
    let quad = k
        .checked_mul(k)
        .and_then(|kk| kk.checked_mul(area))
        .ok_or(Error::Overflow("Ehrhart quadratic term"))?;
    let lin = k
        .checked_mul(boundary / 2)
        .ok_or(Error::Overflow("Ehrhart linear term"))?;
    quad.checked_add(lin)
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("Ehrhart count"))
}

/// Hilbert function of the section ring, `H(k) = #(kΔ_d ∩ Z²)`, with `H(k) = 0` for `k < 0`.
pub fn hilbert_function(spec: &SurfaceSpec, k: i64) -> Result<u64> {
    if k < 0 {
        Ok(0)
    } else {
        ehrhart_count(spec, k as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolytopeConstants {
    pub r: u64,
    pub n: u64,
    pub c_delta: Ratio<i64>,
    pub e_delta: Ratio<i64>,
    /// The algebraic `r_d/3 + E_δ`.
    pub n1_paper: Ratio<i64>,
    /// Lattice points strictly inside `Δ_d`.
    pub interior: u64,
    /// Lattice points of `Δ_d` on the line `y = 1`.
    pub height_one: u64,
}

pub fn constants(spec: &SurfaceSpec) -> Result<PolytopeConstants> {
    let pts = lattice_points(spec, 1)?;
    let n = pts.len() as u64;
    assert_eq!(n, ehrhart_count(spec, 1)?, "enumeration disagrees with Ehrhart count");
    assert_eq!(n, spec.n(), "enumeration disagrees with closed-form n");
    let r = n - 1;

    let delta = spec.delta as i64;
    let g = spec.gcd_delta_2() as i64;
    let c_delta = Ratio::new(3 * delta, 2) + Ratio::new(g, 2) + Ratio::from_integer(1);
    let e_delta = Ratio::new(g, 3) - Ratio::new(1, 3);
    assert_eq!(
        Ratio::from_integer(r as i64),
        Ratio::from_integer(3 * spec.d as i64) + c_delta,
        "r = 3d + C_delta violated"
    );
    let n1_paper = Ratio::new(r as i64, 3) + e_delta;

    // Strict interior: 0 < y < 2 and 0 < 2x < 2d + yδ.
    let interior = pts
        .iter()
        .filter(|p| {
            p.y > 0 && p.y < 2 && p.x > 0 && 2 * p.x < 2 * spec.d as i64 + p.y * delta
        })
        .count() as u64;
    let height_one = pts.iter().filter(|p| p.y == 1).count() as u64;

    Ok(PolytopeConstants {
        r,
        n,
        c_delta,
        e_delta,
        n1_paper,
        interior,
        height_one,
    })
}

/// Position lookup for the lattice points of a dilate `kΔ_d`, consistent with the
/// order produced by [`lattice_points`].
#[derive(Debug, Clone)]
pub struct DilateIndex {
    offsets: Vec<usize>,
    lens: Vec<usize>,
}

impl DilateIndex {
    pub fn new(spec: &SurfaceSpec, k: u64) -> Result<Self> {
        let mut offsets = Vec::with_capacity(2 * k as usize + 1);
        let mut lens = Vec::with_capacity(2 * k as usize + 1);
        let mut acc = 0usize;
        for y in 0..=2 * k {
            let len = spec.row_len(k, y)? as usize;
            offsets.push(acc);
            lens.push(len);
            acc += len;
        }
        Ok(Self { offsets, lens })
    }

    pub fn len(&self) -> usize {
        self.offsets.last().map_or(0, |o| o + self.lens[self.lens.len() - 1])
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, pt: LatticePoint) -> Option<usize> {
        if pt.y < 0 || pt.x < 0 {
            return None;
        }
        let y = pt.y as usize;
        let x = pt.x as usize;
        if y >= self.lens.len() || x >= self.lens[y] {
            return None;
        }
        Some(self.offsets[y] + x)
    }
}
