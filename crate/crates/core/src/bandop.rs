//! Symmetric finite-propagation operators over a metric space.
//!
//! A [`BandOperator`] stores a sparse symmetric real matrix together with the
//! space its rows and columns are indexed by. The propagation
//! `sup { d(x,y) : T_xy != 0 }` is cached at construction; an entry counts as
//! nonzero iff its value is not exactly zero, so propagation is well defined
//! without an epsilon.
//!
//! Only self-adjoint operators are supported: every operator appearing in the
//! constructions here (scale-R Laplacians, compressions, polynomial images) is
//! symmetric, which halves storage and keeps the spectrum real.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::space::MetricSpace;
use crate::{Error, Result};

/// Supports up to this size use a dense eigensolve for norms; larger ones use
/// Lanczos iteration with a deterministic start vector.
pub const DENSE_NORM_CAP: usize = 1024;

const LANCZOS_MAX_ITER: usize = 800;
const NORM_RTOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BandOperator {
    space: Arc<MetricSpace>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    propagation: f64,
}

impl BandOperator {
    /// Builds an operator from entry triplets. Both orientations of an entry
    /// may be supplied as long as they agree; exact zeros are dropped.
    pub fn from_entries<I>(space: Arc<MetricSpace>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let n = space.len();
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (x, y, v) in entries {
            if x >= n {
                return Err(Error::PointOutOfRange { point: x, n });
            }
            if y >= n {
                return Err(Error::PointOutOfRange { point: y, n });
            }
            if v == 0.0 {
                continue;
            }
            for key in [(x, y), (y, x)] {
                match map.get(&key) {
                    Some(&existing) if existing != v => {
                        return Err(Error::ConflictingEntries { x, y, a: existing, b: v })
                    }
                    _ => {
                        map.insert(key, v);
                    }
                }
                if x == y {
                    break;
                }
            }
        }
        Ok(Self::from_sorted_map(space, map))
    }

    fn from_sorted_map(space: Arc<MetricSpace>, map: BTreeMap<(usize, usize), f64>) -> Self {
        let n = space.len();
        let mut row_ptr = vec![0usize; n + 1];
        for &(x, _) in map.keys() {
            row_ptr[x + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut cols = Vec::with_capacity(map.len());
        let mut vals = Vec::with_capacity(map.len());
        let mut propagation = 0.0f64;
        for (&(x, y), &v) in &map {
            cols.push(y);
            vals.push(v);
            propagation = propagation.max(space.dist(x, y));
        }
        BandOperator { space, row_ptr, cols, vals, propagation }
    }

    /// Builds from a dense symmetric-in-exact-arithmetic matrix, averaging
    /// the two triangles to absorb floating-point asymmetry. Structural zeros
    /// (both triangles exactly zero) stay zero.
    pub fn from_dense(space: Arc<MetricSpace>, m: &DMatrix<f64>) -> Result<Self> {
        let n = space.len();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
        let mut map = BTreeMap::new();
        for x in 0..n {
            for y in x..n {
                let v = if x == y { m[(x, x)] } else { 0.5 * (m[(x, y)] + m[(y, x)]) };
                if v != 0.0 {
                    map.insert((x, y), v);
                    map.insert((y, x), v);
                }
            }
        }
        Ok(Self::from_sorted_map(space, map))
    }

    /// Builds from per-column dense vectors (`columns[x][y] = T_yx`),
    /// averaging the triangles as in [`BandOperator::from_dense`].
    pub(crate) fn from_columns(space: Arc<MetricSpace>, columns: &[Vec<f64>]) -> Result<Self> {
        let n = space.len();
        if columns.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: columns.len() });
        }
        let mut map = BTreeMap::new();
        for x in 0..n {
            for y in x..n {
                let v = if x == y {
                    columns[x][x]
                } else {
                    0.5 * (columns[x][y] + columns[y][x])
                };
                if v != 0.0 {
                    map.insert((x, y), v);
                    map.insert((y, x), v);
                }
            }
        }
        Ok(Self::from_sorted_map(space, map))
    }

    pub fn zero(space: Arc<MetricSpace>) -> Self {
        Self::from_sorted_map(space, BTreeMap::new())
    }

    pub fn identity(space: Arc<MetricSpace>) -> Self {
        let n = space.len();
        let map = (0..n).map(|x| ((x, x), 1.0)).collect();
        Self::from_sorted_map(space, map)
    }

    /// Laplacian at scale `r`: diagonal `|{y != x : d(x,y) <= r}|` and `-1`
    /// exactly on pairs with `0 < d(x,y) <= r`. Positive semidefinite with
    /// propagation at most `r`.
    pub fn laplacian(space: Arc<MetricSpace>, r: f64) -> Result<Self> {
        if r < 0.0 {
            return Err(Error::InvalidParameter(format!("negative Laplacian scale {r}")));
        }
        let n = space.len();
        let mut map = BTreeMap::new();
        for x in 0..n {
            let mut deg = 0usize;
            for y in 0..n {
                if y != x && space.dist(x, y) <= r {
                    deg += 1;
                    map.insert((x, y), -1.0);
                }
            }
            if deg > 0 {
                map.insert((x, x), deg as f64);
            }
        }
        Ok(Self::from_sorted_map(space, map))
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Cached propagation `sup { d(x,y) : T_xy != 0 }`; zero for diagonal
    /// operators and the zero operator.
    pub fn propagation(&self) -> f64 {
        self.propagation
    }

    /// Recomputes propagation from the stored entries (invariant check).
    pub fn recompute_propagation(&self) -> f64 {
        let mut p = 0.0f64;
        for x in 0..self.len() {
            for idx in self.row_ptr[x]..self.row_ptr[x + 1] {
                p = p.max(self.space.dist(x, self.cols[idx]));
            }
        }
        p
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        let row = &self.cols[self.row_ptr[x]..self.row_ptr[x + 1]];
        match row.binary_search(&y) {
            Ok(pos) => self.vals[self.row_ptr[x] + pos],
            Err(_) => 0.0,
        }
    }

    /// All stored entries (both triangles), row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |x| {
            (self.row_ptr[x]..self.row_ptr[x + 1])
                .map(move |idx| (x, self.cols[idx], self.vals[idx]))
        })
    }

    /// Upper-triangle entries `x <= y`, sorted; the serialization form.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        self.entries().filter(|&(x, y, _)| x <= y).collect()
    }

    /// Points with at least one nonzero entry in their row.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.row_ptr[x] < self.row_ptr[x + 1]).collect()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: v.len() });
        }
        let mut out = vec![0.0; self.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for x in 0..self.len() {
            let mut acc = 0.0;
            for idx in self.row_ptr[x]..self.row_ptr[x + 1] {
                acc += self.vals[idx] * v[self.cols[idx]];
            }
            out[x] = acc;
        }
    }

    /// Euclidean norm of column `x`.
    pub fn column_norm(&self, x: usize) -> f64 {
        let mut acc = 0.0;
        for idx in self.row_ptr[x]..self.row_ptr[x + 1] {
            acc += self.vals[idx] * self.vals[idx];
        }
        acc.sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Zeroes every entry with `d(x,y) > r`. Idempotent; the identity on
    /// operators whose propagation is already at most `r`.
    pub fn truncate(&self, r: f64) -> Result<BandOperator> {
        if r < 0.0 {
            return Err(Error::InvalidParameter(format!("negative truncation radius {r}")));
        }
        let map = self
            .entries()
            .filter(|&(x, y, _)| self.space.dist(x, y) <= r)
            .map(|(x, y, v)| ((x, y), v))
            .collect();
        Ok(Self::from_sorted_map(self.space.clone(), map))
    }

    /// Entries strictly outside the band: `T - truncate(T, r)`, computed
    /// directly.
    pub fn band_complement(&self, r: f64) -> Result<BandOperator> {
        if r < 0.0 {
            return Err(Error::InvalidParameter(format!("negative truncation radius {r}")));
        }
        let map = self
            .entries()
            .filter(|&(x, y, _)| self.space.dist(x, y) > r)
            .map(|(x, y, v)| ((x, y), v))
            .collect();
        Ok(Self::from_sorted_map(self.space.clone(), map))
    }

    /// Compression `P T P` restricted to `points`, as an operator on the
    /// induced subspace (the spectral picture on l^2(A)).
    pub fn compress(&self, points: &[usize]) -> Result<BandOperator> {
        let sub = self.space.restrict(points)?;
        let lookup: std::collections::HashMap<usize, usize> =
            points.iter().enumerate().map(|(a, &p)| (p, a)).collect();
        if lookup.len() != points.len() {
            return Err(Error::InvalidParameter("duplicate point in compression".into()));
        }
        let mut map = BTreeMap::new();
        for (x, y, v) in self.entries() {
            if let (Some(&a), Some(&b)) = (lookup.get(&x), lookup.get(&y)) {
                map.insert((a, b), v);
            }
        }
        Ok(Self::from_sorted_map(Arc::new(sub), map))
    }

    /// Compression `P T P` kept on the ambient space: entries outside
    /// `points x points` are zeroed.
    pub fn mask(&self, points: &[usize]) -> Result<BandOperator> {
        if points.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut keep = vec![false; self.len()];
        for &p in points {
            if p >= self.len() {
                return Err(Error::PointOutOfRange { point: p, n: self.len() });
            }
            keep[p] = true;
        }
        let map = self
            .entries()
            .filter(|&(x, y, _)| keep[x] && keep[y])
            .map(|(x, y, v)| ((x, y), v))
            .collect();
        Ok(Self::from_sorted_map(self.space.clone(), map))
    }

    pub fn scale(&self, factor: f64) -> BandOperator {
        let map = self.entries().map(|(x, y, v)| ((x, y), v * factor)).collect();
        Self::from_sorted_map(self.space.clone(), map)
    }

    pub fn add(&self, other: &BandOperator) -> Result<BandOperator> {
        self.merge(other, 1.0)
    }

    pub fn sub(&self, other: &BandOperator) -> Result<BandOperator> {
        self.merge(other, -1.0)
    }

    fn merge(&self, other: &BandOperator, sign: f64) -> Result<BandOperator> {
        if self.len() != other.len() {
            return Err(Error::SpaceMismatch { a: self.len(), b: other.len() });
        }
        let mut map: BTreeMap<(usize, usize), f64> =
            self.entries().map(|(x, y, v)| ((x, y), v)).collect();
        for (x, y, v) in other.entries() {
            *map.entry((x, y)).or_insert(0.0) += sign * v;
        }
        map.retain(|_, v| *v != 0.0);
        Ok(Self::from_sorted_map(self.space.clone(), map))
    }

    /// Sparse product `T * T`; symmetric since `T` is.
    pub fn square(&self) -> BandOperator {
        let n = self.len();
        let mut map = BTreeMap::new();
        let mut acc = vec![0.0f64; n];
        let mut touched = Vec::new();
        for x in 0..n {
            for idx in self.row_ptr[x]..self.row_ptr[x + 1] {
                let y = self.cols[idx];
                let vxy = self.vals[idx];
                for jdx in self.row_ptr[y]..self.row_ptr[y + 1] {
                    let z = self.cols[jdx];
                    if acc[z] == 0.0 {
                        touched.push(z);
                    }
                    acc[z] += vxy * self.vals[jdx];
                }
            }
            touched.sort_unstable();
            for &z in &touched {
                if acc[z] != 0.0 {
                    map.insert((x, z), acc[z]);
                }
                acc[z] = 0.0;
            }
            touched.clear();
        }
        Self::from_sorted_map(self.space.clone(), map)
    }

    /// Dense representation (tests and small-block spectral work).
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (x, y, v) in self.entries() {
            m[(x, y)] = v;
        }
        m
    }

    /// Dense submatrix over `points`, in the given order.
    pub fn dense_submatrix(&self, points: &[usize]) -> DMatrix<f64> {
        let k = points.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, &x) in points.iter().enumerate() {
            for (b, &y) in points.iter().enumerate() {
                m[(a, b)] = self.entry(x, y);
            }
        }
        m
    }

    /// Spectral norm to relative tolerance 1e-8: dense eigensolve when the
    /// support has at most [`DENSE_NORM_CAP`] points, Lanczos iteration with a
    /// deterministic start vector above that.
    pub fn op_norm(&self) -> Result<f64> {
        let (lo, hi) = self.extreme_eigenvalues()?;
        Ok(lo.abs().max(hi.abs()))
    }

    /// Smallest and largest eigenvalue of the operator on the full space.
    /// When the support is a proper subset, the complement contributes the
    /// eigenvalue zero.
    pub fn extreme_eigenvalues(&self) -> Result<(f64, f64)> {
        let support = self.support();
        if support.is_empty() {
            return Ok((0.0, 0.0));
        }
        let (mut lo, mut hi) = if support.len() <= DENSE_NORM_CAP {
            let sub = self.dense_submatrix(&support);
            let eigs = sym_eigenvalues(&sub);
            (eigs[0], eigs[eigs.len() - 1])
        } else {
            self.lanczos_extremes(&support)?
        };
        if support.len() < self.len() {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        Ok((lo, hi))
    }

    /// Lanczos with full reorthogonalization. The start vector is the
    /// normalized all-ones vector on the support plus a SplitMix64-hashed
    /// perturbation, which avoids accidental orthogonality to an extreme
    /// eigenvector.
    fn lanczos_extremes(&self, support: &[usize]) -> Result<(f64, f64)> {
        let n = self.len();
        let mut v = vec![0.0f64; n];
        for &p in support {
            let mut h = crate::generators::SplitMix64::new(p as u64 + 1);
            v[p] = 1.0 + 1e-3 * (h.next_f64() - 0.5);
        }
        normalize(&mut v);

        let max_iter = LANCZOS_MAX_ITER.min(support.len());
        let mut basis: Vec<Vec<f64>> = vec![v.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0f64; n];
        let mut best: Option<(f64, f64, f64)> = None; // (lo, hi, residual)

        for k in 0..max_iter {
            self.apply_into(&basis[k], &mut w);
            let alpha = dot(&basis[k], &w);
            alphas.push(alpha);
            axpy(&mut w, -alpha, &basis[k]);
            if k > 0 {
                let beta_prev = betas[k - 1];
                let prev = basis[k - 1].clone();
                axpy(&mut w, -beta_prev, &prev);
            }
            // Full reorthogonalization keeps the small Krylov bases clean.
            for q in &basis {
                let c = dot(q, &w);
                axpy(&mut w, -c, q);
            }
            let (theta_lo, theta_hi, res_lo, res_hi) = tridiag_extremes(&alphas, &betas);
            let scale = theta_lo.abs().max(theta_hi.abs()).max(f64::MIN_POSITIVE);
            let beta = norm(&w);
            let res = res_lo.max(res_hi) * beta;
            best = Some((theta_lo, theta_hi, res));
            if res <= NORM_RTOL * scale || beta <= 1e-14 * scale {
                return Ok((theta_lo, theta_hi));
            }
            if k + 1 < max_iter {
                let mut next = w.clone();
                for x in next.iter_mut() {
                    *x /= beta;
                }
                betas.push(beta);
                basis.push(next);
            }
        }
        let (lo, hi, res) = best.unwrap();
        Err(Error::NormNonConvergence {
            lower: lo.abs().max(hi.abs()),
            upper: lo.abs().max(hi.abs()) + res,
            iterations: max_iter,
        })
    }

    /// Splits into per-group compressions when no entry crosses the groups.
    /// Groups must be disjoint and cover the support.
    pub fn block_decompose(&self, groups: &[Vec<usize>]) -> Result<BlockDecomposition> {
        let n = self.len();
        let mut assignment: Vec<Option<usize>> = vec![None; n];
        for (g, group) in groups.iter().enumerate() {
            for &p in group {
                if p >= n {
                    return Err(Error::PointOutOfRange { point: p, n });
                }
                if assignment[p].is_some() {
                    return Err(Error::InvalidParameter(format!(
                        "point {p} assigned to two groups"
                    )));
                }
                assignment[p] = Some(g);
            }
        }
        let mut maps: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); groups.len()];
        for (x, y, v) in self.entries() {
            match (assignment[x], assignment[y]) {
                (Some(a), Some(b)) if a == b => {
                    maps[a].insert((x, y), v);
                }
                (Some(_), Some(_)) => return Err(Error::CrossGroupEntry { x, y, value: v }),
                _ => {
                    let point = if assignment[x].is_none() { x } else { y };
                    return Err(Error::UncoveredSupport { point });
                }
            }
        }
        let blocks = maps
            .into_iter()
            .map(|m| Self::from_sorted_map(self.space.clone(), m))
            .collect();
        Ok(BlockDecomposition { groups: groups.to_vec(), blocks })
    }

    /// Maximum absolute entrywise difference (tests).
    pub fn max_abs_diff(&self, other: &BandOperator) -> f64 {
        let mut m = 0.0f64;
        for (x, y, v) in self.entries() {
            m = m.max((v - other.entry(x, y)).abs());
        }
        for (x, y, v) in other.entries() {
            m = m.max((v - self.entry(x, y)).abs());
        }
        m
    }
}

/// A block-diagonal view of an operator along disjoint groups. Blocks are
/// kept on the ambient space (masked), so reassembly is a plain sum.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    groups: Vec<Vec<usize>>,
    blocks: Vec<BandOperator>,
}

impl BlockDecomposition {
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn blocks(&self) -> &[BandOperator] {
        &self.blocks
    }

    pub fn norms(&self) -> Result<Vec<f64>> {
        let results = crate::exec::map_slice(&self.blocks, |b| b.op_norm());
        results.into_iter().collect()
    }

    /// Reassembles the block-diagonal sum; equals the original operator when
    /// the decomposition was valid.
    pub fn reassemble(&self) -> Result<BandOperator> {
        let space = self.blocks[0].space().clone();
        let mut acc = BandOperator::zero(space);
        for b in &self.blocks {
            acc = acc.add(b)?;
        }
        Ok(acc)
    }
}

/// Eigenvalues of a symmetric dense matrix, ascending.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut eigs: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Full symmetric eigendecomposition, eigenvalues ascending with matching
/// eigenvector columns.
pub(crate) fn sym_eigendecomposition(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let se = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (out_col, &i) in order.iter().enumerate() {
        vecs.set_column(out_col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Extreme eigenvalues of the Lanczos tridiagonal together with the absolute
/// last components of their Ritz vectors (the residual factors). Bisection
/// with Sturm counts for the eigenvalues, inverse iteration for the vectors;
/// both are O(k) per call so convergence can be checked every step.
fn tridiag_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64, f64, f64) {
    let k = alphas.len();
    if k == 1 {
        return (alphas[0], alphas[0], 1.0, 1.0);
    }
    let lo = tridiag_extreme_eig(alphas, betas, false);
    let hi = tridiag_extreme_eig(alphas, betas, true);
    let res_lo = tridiag_last_component(alphas, betas, lo);
    let res_hi = tridiag_last_component(alphas, betas, hi);
    (lo, hi, res_lo, res_hi)
}

/// Number of eigenvalues of the symmetric tridiagonal strictly below `x`
/// (Sturm sequence, with the standard underflow guard).
fn sturm_count_below(alphas: &[f64], betas: &[f64], x: f64) -> usize {
    let mut count = 0usize;
    let mut q = alphas[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..alphas.len() {
        let denom = if q == 0.0 { 1e-300 } else { q };
        q = alphas[i] - x - betas[i - 1] * betas[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiag_extreme_eig(alphas: &[f64], betas: &[f64], want_max: bool) -> f64 {
    // Gershgorin interval.
    let k = alphas.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let mut radius = 0.0;
        if i > 0 {
            radius += betas[i - 1].abs();
        }
        if i < k - 1 {
            radius += betas[i].abs();
        }
        lo = lo.min(alphas[i] - radius);
        hi = hi.max(alphas[i] + radius);
    }
    let tol = 1e-13 * hi.abs().max(lo.abs()).max(1.0);
    let target = if want_max { k - 1 } else { 0 };
    let mut a = lo;
    let mut b = hi;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        // Eigenvalue index `target` lies below mid iff at least target+1
        // eigenvalues are below mid.
        if sturm_count_below(alphas, betas, mid) > target {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

/// Absolute last component of the unit eigenvector for `theta`, by inverse
/// iteration with a pivoted tridiagonal solve.
fn tridiag_last_component(alphas: &[f64], betas: &[f64], theta: f64) -> f64 {
    let k = alphas.len();
    let scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1.0);
    let shift = theta + 1e-13 * scale;
    let mut y = vec![1.0f64; k];
    normalize(&mut y);
    for _ in 0..3 {
        y = tridiag_solve_shifted(alphas, betas, shift, &y);
        normalize(&mut y);
    }
    y[k - 1].abs()
}

/// Solves `(T - shift I) x = rhs` for symmetric tridiagonal `T` by Gaussian
/// elimination with partial pivoting (one superdiagonal of fill-in).
///
/// During elimination row `i` holds entries in columns `i`, `i+1`, `i+2`
/// (`d[i]`, `c[i]`, `e[i]`); the entry of row `i+1` in column `i` is `sub`.
fn tridiag_solve_shifted(alphas: &[f64], betas: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let k = alphas.len();
    let mut d: Vec<f64> = alphas.iter().map(|a| a - shift).collect();
    let mut c = vec![0.0f64; k];
    let mut e = vec![0.0f64; k];
    for i in 0..k - 1 {
        c[i] = betas[i];
    }
    let mut b = rhs.to_vec();

    for i in 0..k - 1 {
        let mut sub = betas[i]; // entry (i+1, i)
        if sub.abs() > d[i].abs() {
            // Swap rows i and i+1 over columns i, i+1, i+2.
            let (ri0, ri1, ri2) = (d[i], c[i], e[i]);
            let (rj0, rj1, rj2) = (sub, d[i + 1], c[i + 1]);
            d[i] = rj0;
            c[i] = rj1;
            e[i] = rj2;
            sub = ri0;
            d[i + 1] = ri1;
            c[i + 1] = ri2;
            b.swap(i, i + 1);
        }
        let pivot = if d[i] == 0.0 { 1e-300 } else { d[i] };
        let factor = sub / pivot;
        d[i + 1] -= factor * c[i];
        c[i + 1] -= factor * e[i];
        b[i + 1] -= factor * b[i];
    }
    let mut x = vec![0.0f64; k];
    for i in (0..k).rev() {
        let mut acc = b[i];
        if i + 1 < k {
            acc -= c[i] * x[i + 1];
        }
        if i + 2 < k {
            acc -= e[i] * x[i + 2];
        }
        let pivot = if d[i] == 0.0 { 1e-300 } else { d[i] };
        x[i] = acc / pivot;
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// On-disk operator format: a space reference and the upper triangle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorFile {
    pub space: String,
    pub entries: Vec<(usize, usize, f64)>,
}

impl OperatorFile {
    pub fn from_operator(op: &BandOperator, space_ref: &str) -> Self {
        OperatorFile { space: space_ref.to_string(), entries: op.upper_entries() }
    }

    pub fn to_operator(&self, space: Arc<MetricSpace>) -> Result<BandOperator> {
        BandOperator::from_entries(space, self.entries.iter().copied())
    }
}
