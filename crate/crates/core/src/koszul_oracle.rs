//! Brute-force Koszul cohomology over a prime field.
//!
//! `k_{p,q}` is the dimension of the middle cohomology of
//!
//! ```text
//! ∧^{p+1}V ⊗ H⁰((q−1)L) → ∧^p V ⊗ H⁰(qL) → ∧^{p−1}V ⊗ H⁰((q+1)L)
//! ```
//!
//! where `V = H⁰(L)` has the lattice points of `Δ_d` as basis and `H⁰(kL)` the
//! points of `kΔ_d`. Multiplication of monomials is addition of lattice points.
//! Exterior basis elements are bitmasks over `V`'s basis, ordered colex (which is
//! plain numeric order of the masks), and ranked with the combinatorial number system.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact_betti::{BettiTable, Provenance};
use crate::lattice::{hilbert_function, lattice_points, DilateIndex, SurfaceSpec};

pub const DEFAULT_PRIME: u32 = 32003;
pub const ALT_PRIME: u32 = 65521;

/// Largest `r` the oracle accepts.
pub const MAX_ORACLE_R: u64 = 15;

/// Default bound on the number of nonzero entries of a single Koszul matrix.
pub const DEFAULT_ENTRY_LIMIT: u128 = 5_000_000;

/// Environment variable overriding [`DEFAULT_ENTRY_LIMIT`].
pub const ENTRY_LIMIT_ENV: &str = "TORIC_BETTI_ORACLE_LIMIT";

/// Components with at most this many dense cells are eliminated densely.
const DENSE_AREA: usize = 1 << 22;

pub fn entry_limit_from_env() -> u128 {
    std::env::var(ENTRY_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ENTRY_LIMIT)
}

fn binom_table() -> &'static [[u64; 33]; 33] {
    static TABLE: OnceLock<[[u64; 33]; 33]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0u64; 33]; 33];
        for n in 0..33 {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
            }
        }
        t
    })
}

fn choose(n: usize, k: usize) -> u64 {
    if k > n {
        0
    } else {
        binom_table()[n][k]
    }
}

/// Colex rank of a subset given as a bitmask.
fn colex_rank(mut mask: u32) -> usize {
    let mut rank = 0u64;
    let mut j = 1;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        rank += choose(i, j);
        j += 1;
        mask &= mask - 1;
    }
    rank as usize
}

/// All `m`-subsets of `{0..n}` as bitmasks, in colex order.
fn subsets(n: usize, m: usize) -> Vec<u32> {
    if m > n {
        return vec![];
    }
    if m == 0 {
        return vec![0];
    }
    let mut out = Vec::with_capacity(choose(n, m) as usize);
    let mut v: u32 = (1u32 << m) - 1;
    let limit: u64 = 1u64 << n;
    while (v as u64) < limit {
        out.push(v);
        // Gosper's hack: next larger integer with the same popcount.
        let c = v & v.wrapping_neg();
        let r = v.wrapping_add(c);
        if r == 0 {
            break;
        }
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Dimensions of the three spaces around `K_{p,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KoszulStratum {
    pub spec: SurfaceSpec,
    pub p: usize,
    pub q: usize,
    pub left_dim: u64,
    pub mid_dim: u64,
    pub right_dim: u64,
}

impl KoszulStratum {
    pub fn new(spec: SurfaceSpec, p: usize, q: usize) -> Result<Self> {
        let n = spec.n() as usize;
        if p > n {
            return Err(Error::IndexOutOfRange { p: p as i64, lo: 0, hi: n as i64 });
        }
        if q > 3 {
            return Err(Error::DegreeOutOfRange(q as i64));
        }
        let h = |k: i64| hilbert_function(&spec, k);
        let ext = |m: i64| if m < 0 { 0 } else { choose(n, m as usize) };
        let (p, q) = (p as i64, q as i64);
        Ok(Self {
            spec,
            p: p as usize,
            q: q as usize,
            left_dim: ext(p + 1) * h(q - 1)?,
            mid_dim: ext(p) * h(q)?,
            right_dim: ext(p - 1) * h(q + 1)?,
        })
    }
}

/// Sparse matrix over `F_P`, stored as `(row, col, value)` triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    prime: u32,
    entries: Vec<(u32, u32, u32)>,
}

impl SparseMatrix {
    /// Reduces values mod `prime` and drops zeros. Panics on out-of-range indices.
    pub fn new(rows: usize, cols: usize, prime: u32, entries: Vec<(u32, u32, u32)>) -> Self {
        let entries = entries
            .into_iter()
            .map(|(r, c, v)| {
                assert!((r as usize) < rows && (c as usize) < cols, "index out of range");
                (r, c, v % prime)
            })
            .filter(|e| e.2 != 0)
            .collect();
        Self { rows, cols, prime, entries }
    }

    pub fn zero(rows: usize, cols: usize, prime: u32) -> Self {
        Self { rows, cols, prime, entries: vec![] }
    }

    pub fn identity(n: usize, prime: u32) -> Self {
        Self::new(n, n, prime, (0..n as u32).map(|i| (i, i, 1)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn entries(&self) -> &[(u32, u32, u32)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn max_col_nnz(&self) -> usize {
        let mut counts = vec![0usize; self.cols];
        for &(_, c, _) in &self.entries {
            counts[c as usize] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// `self · rhs`.
    pub fn compose(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        assert_eq!(self.prime, rhs.prime, "prime mismatch");
        let p = self.prime as u64;
        let mut by_col: Vec<Vec<(u32, u32)>> = vec![vec![]; self.cols];
        for &(r, c, v) in &self.entries {
            by_col[c as usize].push((r, v));
        }
        let mut acc: HashMap<(u32, u32), u64> = HashMap::new();
        for &(k, j, b) in &rhs.entries {
            for &(i, a) in &by_col[k as usize] {
                let e = acc.entry((i, j)).or_insert(0);
                *e = (*e + a as u64 * b as u64) % p;
            }
        }
        let mut entries: Vec<_> = acc
            .into_iter()
            .filter(|&(_, v)| v != 0)
            .map(|((i, j), v)| (i, j, v as u32))
            .collect();
        entries.sort_unstable();
        SparseMatrix { rows: self.rows, cols: rhs.cols, prime: self.prime, entries }
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Nonzero entries of `koszul_matrix(spec, p, q)`, without building it.
pub fn koszul_entry_count(spec: &SurfaceSpec, p: usize, q: i64) -> Result<u128> {
    let n = spec.n() as usize;
    if n > 32 {
        return Err(Error::OracleInfeasible { spec: *spec, r: spec.r(), max_r: 31 });
    }
    let cols = choose(n, p + 1) as u128 * hilbert_function(spec, q - 1)? as u128;
    Ok(cols * (p as u128 + 1))
}

/// Matrix of `∧^{p+1}V ⊗ H⁰((q−1)L) → ∧^p V ⊗ H⁰(qL)` over `F_32003`.
pub fn koszul_matrix(spec: &SurfaceSpec, p: usize, q: i64) -> Result<SparseMatrix> {
    koszul_matrix_mod(spec, p, q, DEFAULT_PRIME)
}

/// Tensor bases are ordered exterior-index major, monomial minor.
pub fn koszul_matrix_mod(spec: &SurfaceSpec, p: usize, q: i64, prime: u32) -> Result<SparseMatrix> {
    let n = spec.n() as usize;
    if p > n {
        return Err(Error::IndexOutOfRange { p: p as i64, lo: 0, hi: n as i64 });
    }
    if !(0..=4).contains(&q) {
        return Err(Error::DegreeOutOfRange(q));
    }
    if n > 31 {
        return Err(Error::OracleInfeasible { spec: *spec, r: spec.r(), max_r: 30 });
    }
    let target_mono = hilbert_function(spec, q)? as usize;
    let rows = choose(n, p) as usize * target_mono;
    if q == 0 || p + 1 > n {
        let source_mono = hilbert_function(spec, q - 1)? as usize;
        return Ok(SparseMatrix::zero(rows, choose(n, p + 1) as usize * source_mono, prime));
    }
    let v = lattice_points(spec, 1)?;
    let source = lattice_points(spec, (q - 1) as u64)?;
    let target = DilateIndex::new(spec, q as u64)?;
    let cols = choose(n, p + 1) as usize * source.len();

    let minus_one = prime - 1;
    let mut entries = Vec::with_capacity(cols * (p + 1));
    for (si, &mask) in subsets(n, p + 1).iter().enumerate() {
        let mut faces = Vec::with_capacity(p + 1);
        let mut rest = mask;
        let mut j = 0;
        while rest != 0 {
            let i = rest.trailing_zeros();
            rest &= rest - 1;
            let sign = if j % 2 == 0 { 1 } else { minus_one };
            faces.push((i as usize, colex_rank(mask & !(1 << i)), sign));
            j += 1;
        }
        for (mi, &m) in source.iter().enumerate() {
            let col = (si * source.len() + mi) as u32;
            for &(i, face, sign) in &faces {
                let prod = target.index(v[i] + m).expect("V·H⁰((q−1)L) lands in H⁰(qL)");
                let row = (face * target_mono + prod) as u32;
                entries.push((row, col, sign));
            }
        }
    }
    Ok(SparseMatrix { rows, cols, prime, entries })
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }
}

/// Exact rank over `F_P`.
///
/// The matrix is first split into the connected components of its row/column
/// incidence graph (for Koszul matrices these refine the torus multigrading), and
/// each block is eliminated on its own: densely when small, otherwise by sparse
/// elimination with Markowitz pivoting.
pub fn rank_mod_p(m: &SparseMatrix) -> usize {
    if m.entries.is_empty() {
        return 0;
    }
    let mut uf = UnionFind::new(m.rows + m.cols);
    for &(r, c, _) in &m.entries {
        uf.union(r, m.rows as u32 + c);
    }
    // Relabel rows and columns inside their component.
    let mut comp_of: HashMap<u32, usize> = HashMap::new();
    let mut blocks: Vec<(usize, usize, Vec<(u32, u32, u32)>)> = vec![];
    let mut local_row = vec![u32::MAX; m.rows];
    let mut local_col = vec![u32::MAX; m.cols];
    for &(r, c, v) in &m.entries {
        let root = uf.find(r);
        let b = *comp_of.entry(root).or_insert_with(|| {
            blocks.push((0, 0, vec![]));
            blocks.len() - 1
        });
        let block = &mut blocks[b];
        if local_row[r as usize] == u32::MAX {
            local_row[r as usize] = block.0 as u32;
            block.0 += 1;
        }
        if local_col[c as usize] == u32::MAX {
            local_col[c as usize] = block.1 as u32;
            block.1 += 1;
        }
        block.2.push((local_row[r as usize], local_col[c as usize], v));
    }
    blocks
        .into_iter()
        .map(|(rows, cols, entries)| {
            if rows.saturating_mul(cols) <= DENSE_AREA {
                dense_rank(rows, cols, &entries, m.prime)
            } else {
                sparse_rank(rows, cols, entries, m.prime)
            }
        })
        .sum()
}

fn dense_rank(rows: usize, cols: usize, entries: &[(u32, u32, u32)], prime: u32) -> usize {
    let p = prime as u64;
    // Eliminate along the shorter side.
    let (h, w, transpose) = if rows <= cols { (rows, cols, false) } else { (cols, rows, true) };
    let mut a = vec![0u64; h * w];
    for &(r, c, v) in entries {
        let (i, j) = if transpose { (c, r) } else { (r, c) };
        a[i as usize * w + j as usize] = v as u64;
    }
    let mut rank = 0;
    for col in 0..w {
        if rank == h {
            break;
        }
        let Some(piv) = (rank..h).find(|&i| a[i * w + col] != 0) else {
            continue;
        };
        if piv != rank {
            for j in col..w {
                a.swap(piv * w + j, rank * w + j);
            }
        }
        let inv = inv_mod(a[rank * w + col], p);
        for j in col..w {
            a[rank * w + j] = a[rank * w + j] * inv % p;
        }
        let (head, tail) = a.split_at_mut((rank + 1) * w);
        let pivot_row = &head[rank * w..];
        for row in tail.chunks_exact_mut(w) {
            let f = row[col];
            if f == 0 {
                continue;
            }
            let f = p - f;
            for j in col..w {
                row[j] = (row[j] + f * pivot_row[j]) % p;
            }
        }
        rank += 1;
    }
    rank
}

fn sparse_rank(rows: usize, cols: usize, entries: Vec<(u32, u32, u32)>, prime: u32) -> usize {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let p = prime as u64;
    let mut mat: Vec<Vec<(u32, u32)>> = vec![vec![]; rows];
    for (r, c, v) in entries {
        mat[r as usize].push((c, v));
    }
    let mut col_rows: Vec<Vec<u32>> = vec![vec![]; cols];
    let mut col_count = vec![0usize; cols];
    for (r, row) in mat.iter_mut().enumerate() {
        row.sort_unstable_by_key(|e| e.0);
        for &(c, _) in row.iter() {
            col_rows[c as usize].push(r as u32);
            col_count[c as usize] += 1;
        }
    }
    let mut active = vec![true; rows];
    let mut heap: BinaryHeap<Reverse<(usize, u32)>> =
        mat.iter().enumerate().map(|(r, row)| Reverse((row.len(), r as u32))).collect();

    let mut rank = 0;
    let mut scratch: Vec<(u32, u32)> = vec![];
    while let Some(Reverse((len, r))) = heap.pop() {
        let r = r as usize;
        if !active[r] || mat[r].len() != len {
            continue;
        }
        if len == 0 {
            active[r] = false;
            continue;
        }
        // Markowitz: shortest row, then the column touching the fewest rows.
        let &(pc, pv) = mat[r].iter().min_by_key(|&&(c, _)| col_count[c as usize]).unwrap();
        active[r] = false;
        rank += 1;
        let pivot = std::mem::take(&mut mat[r]);
        for &(c, _) in &pivot {
            col_count[c as usize] -= 1;
        }
        let inv = inv_mod(pv as u64, p);
        let targets = std::mem::take(&mut col_rows[pc as usize]);
        for o in targets {
            let o = o as usize;
            if !active[o] {
                continue;
            }
            let Ok(pos) = mat[o].binary_search_by_key(&pc, |e| e.0) else {
                continue;
            };
            let f = (p - mat[o][pos].1 as u64 * inv % p) % p;
            // row_o += f · pivot
            scratch.clear();
            let (mut i, mut j) = (0, 0);
            let old = &mat[o];
            while i < old.len() || j < pivot.len() {
                let take_old = j >= pivot.len() || (i < old.len() && old[i].0 < pivot[j].0);
                let take_piv = i >= old.len() || (j < pivot.len() && pivot[j].0 < old[i].0);
                if take_old {
                    scratch.push(old[i]);
                    i += 1;
                } else if take_piv {
                    let c = pivot[j].0;
                    let v = (f * pivot[j].1 as u64 % p) as u32;
                    scratch.push((c, v));
                    col_count[c as usize] += 1;
                    col_rows[c as usize].push(o as u32);
                    j += 1;
                } else {
                    let c = old[i].0;
                    let v = ((old[i].1 as u64 + f * pivot[j].1 as u64) % p) as u32;
                    if v == 0 {
                        col_count[c as usize] -= 1;
                    } else {
                        scratch.push((c, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
            std::mem::swap(&mut mat[o], &mut scratch);
            heap.push(Reverse((mat[o].len(), o as u32)));
        }
    }
    rank
}

/// Configuration for oracle runs.
#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub prime: u32,
    pub entry_limit: u128,
}

impl Default for Oracle {
    fn default() -> Self {
        Self { prime: DEFAULT_PRIME, entry_limit: entry_limit_from_env() }
    }
}

impl Oracle {
    pub fn with_prime(prime: u32) -> Self {
        Self { prime, ..Self::default() }
    }

    fn check_spec(&self, spec: &SurfaceSpec) -> Result<()> {
        if spec.r() > MAX_ORACLE_R {
            return Err(Error::OracleInfeasible { spec: *spec, r: spec.r(), max_r: MAX_ORACLE_R });
        }
        Ok(())
    }

    fn check_entries(&self, spec: &SurfaceSpec, p: usize, q: i64) -> Result<()> {
        let entries = koszul_entry_count(spec, p, q)?;
        if entries > self.entry_limit {
            return Err(Error::ResourceLimit { entries, limit: self.entry_limit });
        }
        Ok(())
    }

    /// Rank of `koszul_matrix(spec, p, q)`; zero when `p < 0` or the map is trivially zero.
    pub fn koszul_rank(&self, spec: &SurfaceSpec, p: i64, q: i64) -> Result<usize> {
        if p < 0 || q <= 0 || p as u64 + 1 > spec.n() {
            return Ok(0);
        }
        self.check_entries(spec, p as usize, q)?;
        let m = koszul_matrix_mod(spec, p as usize, q, self.prime)?;
        Ok(rank_mod_p(&m))
    }

    pub fn kpq(&self, spec: &SurfaceSpec, p: usize, q: usize) -> Result<u64> {
        self.check_spec(spec)?;
        if p as u64 > spec.r() {
            return Err(Error::IndexOutOfRange { p: p as i64, lo: 0, hi: spec.r() as i64 });
        }
        let stratum = KoszulStratum::new(*spec, p, q)?;
        let (p, q) = (p as i64, q as i64);
        let out = self.koszul_rank(spec, p - 1, q + 1)? as u64;
        let inc = self.koszul_rank(spec, p, q)? as u64;
        assert!(inc + out <= stratum.mid_dim, "negative cohomology at {p},{q}");
        Ok(stratum.mid_dim - out - inc)
    }

    /// All `k_{p,q}` for `p ≤ r`, `q ≤ 3`; row 3 must vanish and is dropped.
    pub fn table(&self, spec: &SurfaceSpec) -> Result<BettiTable> {
        self.check_spec(spec)?;
        let r = spec.r() as usize;
        let mut needed: Vec<(i64, i64)> = vec![];
        for p in 0..=r as i64 {
            for q in 0..=3 {
                needed.push((p, q));
                needed.push((p - 1, q + 1));
            }
        }
        needed.sort_unstable();
        needed.dedup();
        needed.retain(|&(p, q)| p >= 0 && q > 0 && p as u64 + 1 <= spec.n());
        for &(p, q) in &needed {
            self.check_entries(spec, p as usize, q)?;
        }
        let ranks: HashMap<(i64, i64), u64> = needed
            .par_iter()
            .map(|&(p, q)| self.koszul_rank(spec, p, q).map(|rk| ((p, q), rk as u64)))
            .collect::<Result<_>>()?;
        let rank = |p: i64, q: i64| ranks.get(&(p, q)).copied().unwrap_or(0);

        let mut rows: [Vec<BigUint>; 3] = Default::default();
        for row in rows.iter_mut() {
            row.resize(r + 1, BigUint::default());
        }
        for p in 0..=r {
            for q in 0..=3usize {
                let mid = KoszulStratum::new(*spec, p, q)?.mid_dim;
                let (pi, qi) = (p as i64, q as i64);
                let used = rank(pi - 1, qi + 1) + rank(pi, qi);
                assert!(used <= mid, "negative cohomology at {p},{q}");
                let k = mid - used;
                if q == 3 {
                    if k != 0 {
                        return Err(Error::SupportViolation { p, q, value: k });
                    }
                } else {
                    rows[q][p] = BigUint::from(k);
                }
            }
        }
        Ok(BettiTable::from_rows(r, rows, Provenance::Oracle))
    }
}

pub fn oracle_kpq(spec: &SurfaceSpec, p: usize, q: usize) -> Result<u64> {
    Oracle::default().kpq(spec, p, q)
}

pub fn oracle_table(spec: &SurfaceSpec) -> Result<BettiTable> {
    Oracle::default().table(spec)
}
