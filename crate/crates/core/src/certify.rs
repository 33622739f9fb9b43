//! Numerical certification: weak-expander constants, the ball-gap lower
//! bound, localization profiles, ghost decay, and truncation-error profiles.
//!
//! Conventions, stated on every report: boundary counts are over ordered
//! pairs `(x,y)` with `d(x,y) <= R`, denominators are `sum |phi|`, and
//! radius-S balls realize every support of diameter at most S with a factor-2
//! slack (a ball of radius S has diameter at most 2S).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bandop::BandOperator;
use crate::exec;
use crate::space::{BoxSpace, MetricSpace};
use crate::spectral::{lambda_min_compressed, EIG_DENSE_CAP};
use crate::{Error, Result};

/// Convention string embedded in reports.
pub const RATIO_CONVENTION: &str = "numerator: ordered pairs (x,y) with d(x,y)<=R and exactly one endpoint in A; denominator: |A| (co-area form of sum|phi|); ball supports of radius S cover all diameter-S supports with factor-2 slack";

/// Exhaustive-subset cap: `2^20` subsets with incremental boundary updates.
pub const EXHAUSTIVE_SUBSET_CAP: usize = 20;

/// The minimized boundary-to-size ratio over nonempty subsets of a support
/// set. `boundary` counts ordered pairs, so `value = boundary / size`
/// reproduces exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRatio {
    pub value: f64,
    pub boundary: u64,
    pub size: u64,
    pub witness: Vec<usize>,
    pub exact: bool,
}

/// Minimizes `|{ordered (x,y) in E^R : exactly one of x,y in A}| / |A|` over
/// nonempty `A` contained in `support`. Exhaustive (Gray-code enumeration
/// with incremental boundary updates) up to [`EXHAUSTIVE_SUBSET_CAP`] points;
/// larger supports get a peel-and-swap local search flagged as a heuristic
/// upper bound.
pub fn subset_ratio_min(space: &MetricSpace, r: f64, support: &[usize]) -> Result<SubsetRatio> {
    if support.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n = space.len();
    let mut in_support = vec![false; n];
    for &p in support {
        if p >= n {
            return Err(Error::PointOutOfRange { point: p, n });
        }
        if in_support[p] {
            return Err(Error::InvalidParameter(format!("duplicate point {p} in support")));
        }
        in_support[p] = true;
    }
    let k = support.len();
    // Neighbors inside the support (by support index) and counts of
    // neighbors outside it; the latter always cross once the point enters A.
    let mut nbrs_in: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut ext_out: Vec<u64> = vec![0; k];
    for (a, &p) in support.iter().enumerate() {
        for q in 0..n {
            if q != p && space.dist(p, q) <= r {
                if in_support[q] {
                    if let Some(b) = support.iter().position(|&s| s == q) {
                        nbrs_in[a].push(b);
                    }
                } else {
                    ext_out[a] += 1;
                }
            }
        }
    }

    if k <= EXHAUSTIVE_SUBSET_CAP {
        Ok(exhaustive_min(support, &nbrs_in, &ext_out))
    } else {
        Ok(local_search_min(support, &nbrs_in, &ext_out))
    }
}

/// Compares `a/b <= c/d` for nonnegative integers without rounding.
fn fraction_le(a: u64, b: u64, c: u64, d: u64) -> bool {
    (a as u128) * (d as u128) <= (c as u128) * (b as u128)
}

fn exhaustive_min(support: &[usize], nbrs_in: &[Vec<usize>], ext_out: &[u64]) -> SubsetRatio {
    let k = support.len();
    let mut in_a = vec![false; k];
    let mut crossing: i64 = 0; // unordered crossing count
    let mut size: u64 = 0;
    let mut best: Option<(u64, u64, Vec<bool>)> = None;

    let total = 1u64 << k;
    let mut gray_prev = 0u64;
    for i in 1..total {
        let gray = i ^ (i >> 1);
        let flip = (gray ^ gray_prev).trailing_zeros() as usize;
        gray_prev = gray;
        let entering = !in_a[flip];
        let mut delta: i64 = ext_out[flip] as i64;
        for &q in &nbrs_in[flip] {
            if in_a[q] {
                delta -= 1;
            } else {
                delta += 1;
            }
        }
        if entering {
            crossing += delta;
            size += 1;
        } else {
            crossing -= delta;
            size -= 1;
        }
        in_a[flip] = entering;
        if size == 0 {
            continue;
        }
        let boundary = 2 * crossing as u64;
        let better = match &best {
            None => true,
            Some((bb, bs, _)) => {
                // Strict improvement only: ties keep the first witness found.
                !fraction_le(*bb, *bs, boundary, size)
            }
        };
        if better {
            best = Some((boundary, size, in_a.clone()));
        }
    }
    let (boundary, size, mask) = best.unwrap();
    let witness: Vec<usize> =
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| support[i]).collect();
    SubsetRatio {
        value: boundary as f64 / size as f64,
        boundary,
        size,
        witness,
        exact: true,
    }
}

/// Greedy peel plus single-point swaps from two starts (the full support and
/// its best singleton); an upper bound, never exact.
fn local_search_min(support: &[usize], nbrs_in: &[Vec<usize>], ext_out: &[u64]) -> SubsetRatio {
    let k = support.len();
    let crossing_of = |in_a: &[bool]| -> u64 {
        let mut c = 0u64;
        for a in 0..k {
            if !in_a[a] {
                continue;
            }
            c += ext_out[a];
            for &q in &nbrs_in[a] {
                if !in_a[q] {
                    c += 1;
                }
            }
        }
        c
    };
    let improve = |mut in_a: Vec<bool>| -> (u64, u64, Vec<bool>) {
        let mut size: u64 = in_a.iter().filter(|&&b| b).count() as u64;
        let mut crossing = crossing_of(&in_a);
        loop {
            let mut best_move: Option<(usize, u64, u64)> = None;
            for p in 0..k {
                let removing = in_a[p];
                if removing && size == 1 {
                    continue;
                }
                let mut delta: i64 = ext_out[p] as i64;
                for &q in &nbrs_in[p] {
                    if in_a[q] && q != p {
                        delta -= 1;
                    } else {
                        delta += 1;
                    }
                }
                let (nc, ns) = if removing {
                    ((crossing as i64 - delta) as u64, size - 1)
                } else {
                    ((crossing as i64 + delta) as u64, size + 1)
                };
                let current_best = best_move
                    .map(|(_, c, s)| (c, s))
                    .unwrap_or((crossing, size));
                if !fraction_le(current_best.0 * 2, current_best.1, nc * 2, ns) {
                    best_move = Some((p, nc, ns));
                }
            }
            match best_move {
                Some((p, nc, ns)) => {
                    in_a[p] = !in_a[p];
                    crossing = nc;
                    size = ns;
                }
                None => break,
            }
        }
        (2 * crossing, size, in_a)
    };

    let full = improve(vec![true; k]);
    let best_singleton = (0..k)
        .min_by(|&a, &b| {
            let ca = ext_out[a] + nbrs_in[a].len() as u64;
            let cb = ext_out[b] + nbrs_in[b].len() as u64;
            ca.cmp(&cb)
        })
        .unwrap();
    let mut single = vec![false; k];
    single[best_singleton] = true;
    let from_single = improve(single);

    let (boundary, size, mask) =
        if fraction_le(full.0, full.1, from_single.0, from_single.1) { full } else { from_single };
    let witness: Vec<usize> =
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| support[i]).collect();
    SubsetRatio {
        value: boundary as f64 / size as f64,
        boundary,
        size,
        witness,
        exact: false,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakExpanderEntry {
    pub block: usize,
    pub block_size: usize,
    pub s: f64,
    /// `c_n(R, S)`: the minimum ratio over radius-S ball supports.
    pub c: f64,
    pub boundary: u64,
    pub subset_size: u64,
    /// Ball center attaining the minimum (block-local index).
    pub center: usize,
    /// Optimizing subset (block-local indices).
    pub witness: Vec<usize>,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakExpanderReport {
    pub r: f64,
    pub s_values: Vec<f64>,
    pub entries: Vec<WeakExpanderEntry>,
    pub convention: String,
}

impl WeakExpanderReport {
    pub fn entry(&self, block: usize, s: f64) -> Option<&WeakExpanderEntry> {
        self.entries.iter().find(|e| e.block == block && e.s == s)
    }

    /// Uniform constant over all blocks at one scale.
    pub fn min_c_at(&self, s: f64) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.s == s)
            .map(|e| e.c)
            .min_by(f64::total_cmp)
    }
}

/// Per-block weak-expander constants
/// `c_n(R,S) = min over centers x of subset_ratio_min(X_n, R, ball(x, S))`.
pub fn weak_expander_constants(
    box_space: &BoxSpace,
    r: f64,
    s_values: &[f64],
) -> Result<WeakExpanderReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("weak expander scale must be positive: {r}")));
    }
    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_by(f64::total_cmp);
    if s_sorted.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidParameter("ball radii must be positive".into()));
    }
    let mut entries = Vec::new();
    for (block_idx, block) in box_space.blocks().iter().enumerate() {
        for &s in &s_sorted {
            let per_center = exec::map_indexed(block.len(), |x| {
                let ball = block.ball(x, s)?;
                subset_ratio_min(block, r, &ball)
            });
            let mut best: Option<(usize, SubsetRatio)> = None;
            for (x, res) in per_center.into_iter().enumerate() {
                let ratio = res?;
                let better = match &best {
                    None => true,
                    Some((_, b)) => !fraction_le(b.boundary, b.size, ratio.boundary, ratio.size),
                };
                if better {
                    best = Some((x, ratio));
                }
            }
            let (center, ratio) = best.expect("blocks are nonempty");
            entries.push(WeakExpanderEntry {
                block: block_idx,
                block_size: block.len(),
                s,
                c: ratio.value,
                boundary: ratio.boundary,
                subset_size: ratio.size,
                center,
                witness: ratio.witness,
                exact: ratio.exact,
            });
        }
    }
    Ok(WeakExpanderReport {
        r,
        s_values: s_sorted,
        entries,
        convention: RATIO_CONVENTION.to_string(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KappaBoundRow {
    pub block: usize,
    /// Global index of the ball center.
    pub center: usize,
    pub ball_size: usize,
    pub lambda_min: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KappaBoundLedger {
    pub r: f64,
    pub s: f64,
    /// Global ball bound `M = N(R)` of the realized space.
    pub m: usize,
    /// Uniform constant `min_n c_n(R,S)` and its threshold `c^2 / (8M)`.
    pub global_c: f64,
    pub global_threshold: f64,
    pub rows: Vec<KappaBoundRow>,
    pub violations: usize,
}

/// Checks `lambda_min(P Delta_R P) >= c_n^2 / (8M)` for every radius-S ball
/// in every block, with `c_n` taken from an exact weak-expander certificate.
/// A violation falsifies the implementation, not the inequality.
pub fn verify_kappa_bound(
    box_space: &BoxSpace,
    r: f64,
    s: f64,
    report: &WeakExpanderReport,
) -> Result<KappaBoundLedger> {
    let used: Vec<&WeakExpanderEntry> =
        report.entries.iter().filter(|e| e.s == s).collect();
    if used.len() != box_space.block_count() {
        return Err(Error::InvalidParameter(format!(
            "certificate does not cover all blocks at S = {s}"
        )));
    }
    if used.iter().any(|e| !e.exact) {
        return Err(Error::CertificateNotExact);
    }
    if report.r != r {
        return Err(Error::InvalidParameter(format!(
            "certificate was computed at R = {}, requested R = {r}",
            report.r
        )));
    }
    let realized = box_space.realized();
    let m = realized.geometry_profile(&[r])?.pairs[0].1;
    let delta = BandOperator::laplacian(realized.clone(), r)?;

    let global_c = used.iter().map(|e| e.c).fold(f64::INFINITY, f64::min);
    let global_threshold = global_c * global_c / (8.0 * m as f64);

    let mut rows = Vec::new();
    for (block_idx, range) in box_space.ranges().iter().enumerate() {
        let c_n = used.iter().find(|e| e.block == block_idx).unwrap().c;
        let threshold = c_n * c_n / (8.0 * m as f64);
        let centers: Vec<usize> = range.clone().collect();
        let per_center = exec::map_slice(&centers, |&x| {
            let ball = realized.ball(x, s)?;
            let lm = lambda_min_compressed(&delta, &ball)?;
            Ok::<(usize, f64), Error>((ball.len(), lm))
        });
        for (x, res) in centers.iter().zip(per_center) {
            let (ball_size, lambda_min) = res?;
            // 1e-9 guard absorbs eigensolver rounding; the inequality itself
            // is exact in real arithmetic.
            let pass = lambda_min >= threshold - 1e-9;
            rows.push(KappaBoundRow {
                block: block_idx,
                center: *x,
                ball_size,
                lambda_min,
                threshold,
                pass,
            });
        }
    }
    let violations = rows.iter().filter(|r| !r.pass).count();
    Ok(KappaBoundLedger { r, s, m, global_c, global_threshold, rows, violations })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationProfile {
    pub operator: String,
    pub s_values: Vec<f64>,
    /// `loc_S(T) = max over centers of || T P_{ball(x,S)} ||`.
    pub loc: Vec<f64>,
    /// Center attaining each value.
    pub centers: Vec<usize>,
    pub op_norm: f64,
    pub convention: String,
}

/// Localization profile of a symmetric operator: per scale, the largest
/// singular value of `T` restricted to inputs supported in a radius-S ball.
/// Every diameter-S support lies in some radius-S ball, so `loc_S(T) <= c`
/// certifies `||T xi|| <= c` for all unit vectors with diameter-S support.
pub fn localization_profile(
    op: &BandOperator,
    s_values: &[f64],
    label: &str,
) -> Result<LocalizationProfile> {
    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_by(f64::total_cmp);
    let space = op.space().clone();
    let square = op.square();

    // || T P_B ||^2 = lambda_max( (T^2)[B x B] ); identical balls share it.
    let mut cache: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut loc = Vec::with_capacity(s_sorted.len());
    let mut centers = Vec::with_capacity(s_sorted.len());
    for &s in &s_sorted {
        let balls: Vec<Vec<usize>> = (0..space.len())
            .map(|x| space.ball(x, s))
            .collect::<Result<_>>()?;
        let mut unique: Vec<Vec<usize>> = Vec::new();
        for b in &balls {
            if !cache.contains_key(b) && !unique.contains(b) {
                unique.push(b.clone());
            }
        }
        let computed = exec::map_slice(&unique, |ball| {
            if ball.len() > EIG_DENSE_CAP {
                return Err(Error::SizeCapExceeded { size: ball.len(), cap: EIG_DENSE_CAP });
            }
            let sub = square.dense_submatrix(ball);
            let eigs = crate::bandop::sym_eigenvalues(&sub);
            Ok(eigs[eigs.len() - 1].max(0.0))
        });
        for (ball, res) in unique.into_iter().zip(computed) {
            cache.insert(ball, res?);
        }
        let mut best = 0.0f64;
        let mut best_center = 0usize;
        for (x, ball) in balls.iter().enumerate() {
            let v = cache[ball];
            if v > best {
                best = v;
                best_center = x;
            }
        }
        loc.push(best.sqrt());
        centers.push(best_center);
    }
    Ok(LocalizationProfile {
        operator: label.to_string(),
        s_values: s_sorted,
        loc,
        centers,
        op_norm: op.op_norm()?,
        convention: RATIO_CONVENTION.to_string(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhostDecayRow {
    pub block: usize,
    pub block_size: usize,
    /// Largest column norm `max_x || T delta_x ||` over the block.
    pub g: f64,
    /// Largest matrix entry touching the block.
    pub e: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhostDecayReport {
    pub rows: Vec<GhostDecayRow>,
}

/// Per-block ghost metrics of an operator over a box space.
pub fn ghost_decay(op: &BandOperator, box_space: &BoxSpace) -> Result<GhostDecayReport> {
    if op.len() != box_space.realized().len() {
        return Err(Error::SpaceMismatch { a: op.len(), b: box_space.realized().len() });
    }
    let mut rows: Vec<GhostDecayRow> = box_space
        .ranges()
        .iter()
        .enumerate()
        .map(|(b, range)| GhostDecayRow {
            block: b,
            block_size: range.len(),
            g: 0.0,
            e: 0.0,
        })
        .collect();
    for (b, range) in box_space.ranges().iter().enumerate() {
        for x in range.clone() {
            rows[b].g = rows[b].g.max(op.column_norm(x));
        }
    }
    for (x, y, v) in op.entries() {
        let bx = box_space.block_of(x)?;
        rows[bx].e = rows[bx].e.max(v.abs());
        let by = box_space.block_of(y)?;
        if by != bx {
            rows[by].e = rows[by].e.max(v.abs());
        }
    }
    Ok(GhostDecayReport { rows })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoeMembershipProfile {
    pub radii: Vec<f64>,
    /// `err_R = || T - truncate(T, R) ||`.
    pub err: Vec<f64>,
    pub propagation: f64,
}

/// Truncation-error profile: distance from the operator to its band
/// truncations, quantifying finite-propagation membership.
pub fn roe_membership_profile(op: &BandOperator, radii: &[f64]) -> Result<RoeMembershipProfile> {
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    let err = sorted
        .iter()
        .map(|&r| op.band_complement(r)?.op_norm())
        .collect::<Result<Vec<_>>>()?;
    Ok(RoeMembershipProfile { radii: sorted, err, propagation: op.propagation() })
}
