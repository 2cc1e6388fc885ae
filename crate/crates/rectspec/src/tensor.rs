//! Storage and evaluation primitives for rectangular tensors.
//!
//! An (r,s)-order (n,m)-dimensional rectangular tensor holds a real entry
//! `a[i1..ir][j1..js]` for every tuple of r lower indices in `0..n` and
//! s upper indices in `0..m`. The module provides the bi-homogeneous form
//!
//! ```text
//! f_A(x, y) = sum a[i1..ir][j1..js] * x[i1]..x[ir] * y[j1]..y[js]
//! ```
//!
//! together with its two partial contractions (fixing the first lower or
//! first upper slot), partial-symmetry checks, orbit symmetrization, the
//! lower/upper transpose, and the Gram product for (1,s)-order tensors.
//!
//! Storage is a sparse coordinate list keyed by [`MultiIndex`]; tensors
//! whose full capacity n^r * m^s is at most [`DENSE_CAPACITY_LIMIT`] are
//! kept dense. Both representations iterate stored entries in lexicographic
//! index order and accumulate into a single `f64` per output component, so
//! contraction results are bit-identical across storage modes and runs.
//!
//! Indices are 0-based throughout the API; the text format of
//! [`parse_rect_tensor`] is 1-based.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use itertools::Itertools;

use crate::error::{Error, Result};

/// Dense storage is selected when n^r * m^s does not exceed this.
pub const DENSE_CAPACITY_LIMIT: usize = 4096;

/// Default absolute tolerance for the partial-symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Position of one tensor entry: r lower indices in `0..n`, s upper in `0..m`.
///
/// The derived ordering (lower tuple first, then upper) is the canonical
/// summation order used by every contraction kernel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
}

impl MultiIndex {
    pub fn new(lower: Vec<usize>, upper: Vec<usize>) -> Self {
        MultiIndex { lower, upper }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Sparse(BTreeMap<MultiIndex, f64>),
    Dense(Vec<f64>),
}

/// Nonnegative-by-convention rectangular tensor with cached structure flags.
#[derive(Debug)]
pub struct RectTensor {
    r: usize,
    s: usize,
    n: usize,
    m: usize,
    storage: Storage,
    nonneg: OnceLock<bool>,
    // (tol, verdict) of the last partial-symmetry check
    symmetry: OnceLock<(f64, bool)>,
}

impl Clone for RectTensor {
    fn clone(&self) -> Self {
        RectTensor {
            r: self.r,
            s: self.s,
            n: self.n,
            m: self.m,
            storage: self.storage.clone(),
            nonneg: self.nonneg.clone(),
            symmetry: self.symmetry.clone(),
        }
    }
}

fn dense_capacity(r: usize, s: usize, n: usize, m: usize) -> Option<usize> {
    let cap = (n as u128).checked_pow(r as u32)?
        .checked_mul((m as u128).checked_pow(s as u32)?)?;
    usize::try_from(cap).ok()
}

impl RectTensor {
    /// All-zero tensor. Dense storage is chosen automatically for small shapes.
    ///
    /// Orders and dimensions must be positive; `r <= n` or `s <= m` is *not*
    /// required here (solver entry points enforce their own preconditions).
    pub fn zeros(r: usize, s: usize, n: usize, m: usize) -> Self {
        assert!(r >= 1 && s >= 1 && n >= 1 && m >= 1, "orders and dimensions must be positive");
        let storage = match dense_capacity(r, s, n, m) {
            Some(cap) if cap <= DENSE_CAPACITY_LIMIT => Storage::Dense(vec![0.0; cap]),
            _ => Storage::Sparse(BTreeMap::new()),
        };
        RectTensor {
            r,
            s,
            n,
            m,
            storage,
            nonneg: OnceLock::new(),
            symmetry: OnceLock::new(),
        }
    }

    /// Tensor with every entry equal to one.
    pub fn ones(r: usize, s: usize, n: usize, m: usize) -> Self {
        let mut t = RectTensor::zeros(r, s, n, m);
        let mut idx = MultiIndex::new(vec![0; r], vec![0; s]);
        loop {
            t.set_index(&idx, 1.0);
            if !t.advance(&mut idx) {
                break;
            }
        }
        t
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Sparse(map) => map.len(),
            Storage::Dense(v) => v.iter().filter(|&&a| a != 0.0).count(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    fn check_bounds(&self, lower: &[usize], upper: &[usize]) -> Result<()> {
        if lower.len() != self.r || upper.len() != self.s {
            return Err(Error::domain(format!(
                "index needs {} lower and {} upper entries, got {} and {}",
                self.r,
                self.s,
                lower.len(),
                upper.len()
            )));
        }
        for &i in lower {
            if i >= self.n {
                return Err(Error::domain(format!(
                    "lower index {} out of range [1..{}]",
                    i + 1,
                    self.n
                )));
            }
        }
        for &j in upper {
            if j >= self.m {
                return Err(Error::domain(format!(
                    "upper index {} out of range [1..{}]",
                    j + 1,
                    self.m
                )));
            }
        }
        Ok(())
    }

    fn dense_offset(&self, lower: &[usize], upper: &[usize]) -> usize {
        let mut off = 0usize;
        for &i in lower {
            off = off * self.n + i;
        }
        for &j in upper {
            off = off * self.m + j;
        }
        off
    }

    /// Entry at the given 0-based position (absent sparse entries read as 0).
    pub fn get(&self, lower: &[usize], upper: &[usize]) -> f64 {
        debug_assert!(self.check_bounds(lower, upper).is_ok());
        match &self.storage {
            Storage::Sparse(map) => map
                .get(&MultiIndex::new(lower.to_vec(), upper.to_vec()))
                .copied()
                .unwrap_or(0.0),
            Storage::Dense(v) => v[self.dense_offset(lower, upper)],
        }
    }

    /// Store an entry, replacing any previous value. Setting 0 clears a
    /// sparse slot. Cached structure flags are invalidated.
    pub fn set(&mut self, lower: &[usize], upper: &[usize], value: f64) -> Result<()> {
        self.check_bounds(lower, upper)?;
        self.set_index(&MultiIndex::new(lower.to_vec(), upper.to_vec()), value);
        Ok(())
    }

    fn set_index(&mut self, idx: &MultiIndex, value: f64) {
        match &mut self.storage {
            Storage::Sparse(map) => {
                if value == 0.0 {
                    map.remove(idx);
                } else {
                    map.insert(idx.clone(), value);
                }
            }
            Storage::Dense(_) => {
                let off = self.dense_offset(&idx.lower, &idx.upper);
                if let Storage::Dense(v) = &mut self.storage {
                    v[off] = value;
                }
            }
        }
        self.nonneg = OnceLock::new();
        self.symmetry = OnceLock::new();
    }

    // Advance idx one step in lexicographic order; false once exhausted.
    fn advance(&self, idx: &mut MultiIndex) -> bool {
        for d in (0..self.s).rev() {
            if idx.upper[d] + 1 < self.m {
                idx.upper[d] += 1;
                return true;
            }
            idx.upper[d] = 0;
        }
        for d in (0..self.r).rev() {
            if idx.lower[d] + 1 < self.n {
                idx.lower[d] += 1;
                return true;
            }
            idx.lower[d] = 0;
        }
        false
    }

    /// Visit every stored nonzero entry in lexicographic index order.
    pub fn for_each_entry(&self, mut f: impl FnMut(&[usize], &[usize], f64)) {
        match &self.storage {
            Storage::Sparse(map) => {
                for (idx, &a) in map {
                    f(&idx.lower, &idx.upper, a);
                }
            }
            Storage::Dense(v) => {
                let mut idx = MultiIndex::new(vec![0; self.r], vec![0; self.s]);
                for &a in v {
                    if a != 0.0 {
                        f(&idx.lower, &idx.upper, a);
                    }
                    self.advance(&mut idx);
                }
            }
        }
    }

    /// True when no stored entry is negative (cached after the first scan).
    pub fn is_nonnegative(&self) -> bool {
        *self.nonneg.get_or_init(|| {
            let mut ok = true;
            self.for_each_entry(|_, _, a| {
                if a < 0.0 {
                    ok = false;
                }
            });
            ok
        })
    }

    /// Minimum positive entry, if any.
    pub fn min_positive_entry(&self) -> Option<f64> {
        let mut min: Option<f64> = None;
        self.for_each_entry(|_, _, a| {
            if a > 0.0 && min.is_none_or(|b| a < b) {
                min = Some(a);
            }
        });
        min
    }

    /// Copy with sparse storage, regardless of shape.
    pub fn to_sparse(&self) -> RectTensor {
        let mut map = BTreeMap::new();
        self.for_each_entry(|lower, upper, a| {
            map.insert(MultiIndex::new(lower.to_vec(), upper.to_vec()), a);
        });
        RectTensor {
            r: self.r,
            s: self.s,
            n: self.n,
            m: self.m,
            storage: Storage::Sparse(map),
            nonneg: self.nonneg.clone(),
            symmetry: self.symmetry.clone(),
        }
    }

    /// Copy with dense storage; fails when the full capacity is implausibly
    /// large for a dense array.
    pub fn to_dense(&self) -> Result<RectTensor> {
        let cap = dense_capacity(self.r, self.s, self.n, self.m)
            .filter(|&c| c <= (1 << 28))
            .ok_or_else(|| Error::Scale("tensor capacity too large for dense storage".into()))?;
        let mut v = vec![0.0; cap];
        self.for_each_entry(|lower, upper, a| {
            v[self.dense_offset(lower, upper)] = a;
        });
        Ok(RectTensor {
            r: self.r,
            s: self.s,
            n: self.n,
            m: self.m,
            storage: Storage::Dense(v),
            nonneg: self.nonneg.clone(),
            symmetry: self.symmetry.clone(),
        })
    }

    fn check_pair(&self, z: &VectorPair) -> Result<()> {
        if z.x.len() != self.n || z.y.len() != self.m {
            return Err(Error::Dimension {
                n: self.n,
                m: self.m,
                got_n: z.x.len(),
                got_m: z.y.len(),
            });
        }
        Ok(())
    }

    /// The form f_A(x, y) = A x^r y^s.
    ///
    /// Cost is proportional to the number of stored entries; zero entries of
    /// a sparse tensor are never touched.
    pub fn evaluate_form(&self, z: &VectorPair) -> Result<f64> {
        self.check_pair(z)?;
        let mut acc = 0.0f64;
        self.for_each_entry(|lower, upper, a| {
            acc += a * prod(&z.x, lower) * prod(&z.y, upper);
        });
        Ok(acc)
    }

    /// The n-vector A x^{r-1} y^s: component i sums entries whose first
    /// lower index is i against the remaining x and all y factors.
    ///
    /// Satisfies `sum_i x_i * out_i == evaluate_form(x, y)`.
    pub fn contract_x(&self, z: &VectorPair) -> Result<Vec<f64>> {
        self.check_pair(z)?;
        let mut out = vec![0.0f64; self.n];
        self.for_each_entry(|lower, upper, a| {
            out[lower[0]] += a * prod(&z.x, &lower[1..]) * prod(&z.y, upper);
        });
        Ok(out)
    }

    /// The m-vector A x^r y^{s-1}: mirror of [`RectTensor::contract_x`] with
    /// the first upper index fixed.
    pub fn contract_y(&self, z: &VectorPair) -> Result<Vec<f64>> {
        self.check_pair(z)?;
        let mut out = vec![0.0f64; self.m];
        self.for_each_entry(|lower, upper, a| {
            out[upper[0]] += a * prod(&z.x, lower) * prod(&z.y, &upper[1..]);
        });
        Ok(out)
    }

    // Distinct positions in the S_r x S_s orbit of an index, lexicographic.
    fn orbit_positions(&self, idx: &MultiIndex) -> Vec<MultiIndex> {
        let lowers: Vec<Vec<usize>> = idx
            .lower
            .iter()
            .copied()
            .permutations(self.r)
            .sorted()
            .dedup()
            .collect();
        let uppers: Vec<Vec<usize>> = idx
            .upper
            .iter()
            .copied()
            .permutations(self.s)
            .sorted()
            .dedup()
            .collect();
        let mut out = Vec::with_capacity(lowers.len() * uppers.len());
        for lo in &lowers {
            for up in &uppers {
                out.push(MultiIndex::new(lo.clone(), up.clone()));
            }
        }
        out
    }

    fn canonical_key(idx_lower: &[usize], idx_upper: &[usize]) -> MultiIndex {
        let mut lo = idx_lower.to_vec();
        let mut up = idx_upper.to_vec();
        lo.sort_unstable();
        up.sort_unstable();
        MultiIndex::new(lo, up)
    }

    /// Whether every orbit under separate lower/upper index permutations has
    /// entries agreeing within `tol` (absolute, via the orbit's max - min).
    ///
    /// The verdict is cached; calling again with a different tolerance
    /// recomputes without touching the cache.
    pub fn is_partially_symmetric(&self, tol: f64) -> bool {
        if let Some(&(cached_tol, verdict)) = self.symmetry.get() {
            if cached_tol == tol {
                return verdict;
            }
            return self.partial_symmetry_scan(tol);
        }
        let verdict = self.partial_symmetry_scan(tol);
        let _ = self.symmetry.set((tol, verdict));
        verdict
    }

    fn partial_symmetry_scan(&self, tol: f64) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        let mut ok = true;
        self.for_each_entry(|lower, upper, _| {
            if !ok {
                return;
            }
            let key = Self::canonical_key(lower, upper);
            if !seen.insert(key.clone()) {
                return;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for pos in self.orbit_positions(&key) {
                let a = self.get(&pos.lower, &pos.upper);
                lo = lo.min(a);
                hi = hi.max(a);
            }
            if hi - lo > tol {
                ok = false;
            }
        });
        ok
    }

    /// Partially symmetric representative with the same form: every orbit is
    /// replaced by its average over the full S_r x S_s group action.
    pub fn symmetrize(&self) -> RectTensor {
        let mut out = RectTensor::zeros(self.r, self.s, self.n, self.m);
        let mut seen = std::collections::BTreeSet::new();
        let group = (factorial(self.r) * factorial(self.s)) as f64;
        self.for_each_entry(|lower, upper, _| {
            let key = Self::canonical_key(lower, upper);
            if !seen.insert(key.clone()) {
                return;
            }
            // group average: permutations with repeated indices hit the same
            // position multiple times, which is exactly the right weighting
            let mut sum = 0.0;
            for lo in key.lower.iter().copied().permutations(self.r) {
                for up in key.upper.iter().copied().permutations(self.s) {
                    sum += self.get(&lo, &up);
                }
            }
            let avg = sum / group;
            for pos in self.orbit_positions(&key) {
                out.set_index(&pos, avg);
            }
        });
        let _ = out.symmetry.set((SYMMETRY_TOL, true));
        if self.nonneg.get() == Some(&true) {
            let _ = out.nonneg.set(true);
        }
        out
    }

    /// Swap the lower and upper roles: (r,s,n,m) becomes (s,r,m,n) and
    /// `transpose(A)[j..][i..] = A[i..][j..]`.
    pub fn transpose(&self) -> RectTensor {
        let mut out = RectTensor::zeros(self.s, self.r, self.m, self.n);
        self.for_each_entry(|lower, upper, a| {
            out.set_index(&MultiIndex::new(upper.to_vec(), lower.to_vec()), a);
        });
        if let Some(&v) = self.nonneg.get() {
            let _ = out.nonneg.set(v);
        }
        if let Some(&c) = self.symmetry.get() {
            let _ = out.symmetry.set(c);
        }
        out
    }

    /// Gram product B = A'A of a (1,s)-order tensor:
    /// `B[k1..ks][j1..js] = sum_i A[i][k1..ks] * A[i][j1..js]`.
    ///
    /// Defined only for r = 1; for s = 1 this is the matrix product A'A.
    pub fn gram_tensor(&self) -> Result<RectTensor> {
        if self.r != 1 {
            return Err(Error::UnsupportedOrder {
                r: self.r,
                s: self.s,
                required: "the Gram product A'A is defined for (1,s)-order tensors only",
            });
        }
        // slices grouped by the single lower index, in index order
        let mut slices: Vec<Vec<(Vec<usize>, f64)>> = vec![Vec::new(); self.n];
        self.for_each_entry(|lower, upper, a| {
            slices[lower[0]].push((upper.to_vec(), a));
        });
        let mut out = RectTensor::zeros(self.s, self.s, self.m, self.m);
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for slice in &slices {
            for (k, ak) in slice {
                for (j, aj) in slice {
                    *acc.entry(MultiIndex::new(k.clone(), j.clone())).or_insert(0.0) +=
                        ak * aj;
                }
            }
        }
        for (idx, v) in acc {
            out.set_index(&idx, v);
        }
        if self.is_nonnegative() {
            let _ = out.nonneg.set(true);
        }
        Ok(out)
    }

    /// Serialize in the `rect-tensor v1` text format (1-based indices,
    /// lexicographic entry order).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rect-tensor v1 {} {} {} {}", self.r, self.s, self.n, self.m);
        self.for_each_entry(|lower, upper, a| {
            let mut line = String::new();
            for &i in lower {
                let _ = write!(line, "{} ", i + 1);
            }
            for &j in upper {
                let _ = write!(line, "{} ", j + 1);
            }
            let _ = writeln!(out, "{}{:?}", line, a);
        });
        out
    }
}

fn factorial(k: usize) -> usize {
    (1..=k).product::<usize>().max(1)
}

#[inline]
fn prod(v: &[f64], idx: &[usize]) -> f64 {
    let mut p = 1.0;
    for &i in idx {
        p *= v[i];
    }
    p
}

/// Parse the `rect-tensor v1` text format.
///
/// Header `rect-tensor v1 r s n m`, then one line per nonzero entry:
/// r lower indices, s upper indices (1-based) and a decimal value.
/// `#` starts a comment. A repeated index tuple keeps the last value and
/// produces a warning string for the caller's diagnostic stream.
pub fn parse_rect_tensor(text: &str) -> Result<(RectTensor, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut lines = numbered_lines(text);
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input".to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "rect-tensor" || fields[1] != "v1" {
        return Err(Error::parse(
            header_no,
            "expected header `rect-tensor v1 r s n m`".to_string(),
        ));
    }
    let dims: Vec<usize> = fields[2..]
        .iter()
        .map(|f| {
            f.parse::<usize>()
                .map_err(|_| Error::parse(header_no, format!("bad header field `{f}`")))
        })
        .collect::<Result<_>>()?;
    let (r, s, n, m) = (dims[0], dims[1], dims[2], dims[3]);
    if r == 0 || s == 0 || n == 0 || m == 0 {
        return Err(Error::parse(header_no, "orders and dimensions must be positive".to_string()));
    }
    let mut tensor = RectTensor::zeros(r, s, n, m);
    let mut seen: std::collections::BTreeSet<MultiIndex> = std::collections::BTreeSet::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != r + s + 1 {
            return Err(Error::parse(
                line_no,
                format!("expected {} indices and a value, got {} fields", r + s, fields.len()),
            ));
        }
        let parse_index = |f: &str, dim: usize, side: &str| -> Result<usize> {
            let v = f
                .parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("bad index `{f}`")))?;
            if v == 0 || v > dim {
                return Err(Error::parse(
                    line_no,
                    format!("{side} index {v} out of range [1..{dim}]"),
                ));
            }
            Ok(v - 1)
        };
        let lower: Vec<usize> = fields[..r]
            .iter()
            .map(|f| parse_index(f, n, "lower"))
            .collect::<Result<_>>()?;
        let upper: Vec<usize> = fields[r..r + s]
            .iter()
            .map(|f| parse_index(f, m, "upper"))
            .collect::<Result<_>>()?;
        let value: f64 = fields[r + s]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad value `{}`", fields[r + s])))?;
        let idx = MultiIndex::new(lower, upper);
        if !seen.insert(idx.clone()) {
            warnings.push(format!(
                "line {line_no}: duplicate index tuple, last value wins"
            ));
        }
        tensor.set_index(&idx, value);
    }
    Ok((tensor, warnings))
}

// 1-based line numbers with comments and blank lines stripped
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, line)| {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((k + 1, trimmed))
        }
    })
}

/// A pair (x in R^n, y in R^m), the argument of every form and contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorPair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        VectorPair { x, y }
    }

    /// Pair of all-ones vectors.
    pub fn ones(n: usize, m: usize) -> Self {
        VectorPair::new(vec![1.0; n], vec![1.0; m])
    }

    pub fn is_nonnegative(&self) -> bool {
        self.iter_all().all(|v| v >= 0.0)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.iter_all().all(|v| v > 0.0)
    }

    /// All n + m coordinates, x block first.
    pub fn iter_all(&self) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().chain(self.y.iter()).copied()
    }

    pub fn scaled(&self, t: f64) -> VectorPair {
        VectorPair::new(
            self.x.iter().map(|v| v * t).collect(),
            self.y.iter().map(|v| v * t).collect(),
        )
    }

    /// Entrywise power on both blocks.
    pub fn powi_map(&self, u: f64) -> VectorPair {
        VectorPair::new(
            self.x.iter().map(|v| v.powf(u)).collect(),
            self.y.iter().map(|v| v.powf(u)).collect(),
        )
    }
}

/// The p-norm of a nonnegative vector.
pub fn norm_p(v: &[f64], p: f64) -> f64 {
    v.iter().map(|a| a.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Scale a vector to unit p-norm (no-op for the zero vector).
pub fn normalize_p(v: &mut [f64], p: f64) {
    let norm = norm_p(v, p);
    if norm > 0.0 {
        for a in v {
            *a /= norm;
        }
    }
}
