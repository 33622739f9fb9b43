//! The two constructive ghost pipelines.
//!
//! The gap pipeline filters the scale-R Laplacian of a box space through a
//! low bump: wherever every ball at the polynomial's reach has a compressed
//! spectral gap above the bump's cutoff, columns of the result are small, and
//! the kernel vectors of each connected block are fixed vectors witnessing
//! non-compactness.
//!
//! The block pipeline runs the inductive construction: request a localized
//! witness at a growing scale, split it block-diagonally along an R-separated
//! decomposition of one annular side, select the first block above the
//! `(1+c)/2` threshold, normalize, and finally filter the direct sum through
//! a high bump.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bandop::BandOperator;
use crate::certify::{ghost_decay, localization_profile, GhostDecayReport};
use crate::exec;
use crate::space::{r_separated_decomposition, BoxSpace, MetricSpace};
use crate::spectral::{
    apply_filter, design_filter, exact_filter_small, lambda_min_compressed, ApproxTarget,
    FilterApprox, SpectralFilter,
};
use crate::{Error, Result};

/// A positive norm-one operator certified to act with norm at most `c` on
/// every unit vector supported in a radius-`s` ball.
#[derive(Debug, Clone)]
pub struct LocalizedWitness {
    pub op: BandOperator,
    pub r: f64,
    pub c: f64,
    pub s: f64,
    /// Minimal compressed Laplacian gap over radius-`s` balls.
    pub kappa_ball: f64,
    /// Laplacian norm used in `T = I - Delta/m`.
    pub m: f64,
}

/// Smallest `lambda_min` of the compressed operator over the radius-`s`
/// balls centered at `centers`. Balls containing a whole component of the
/// `d <= scale_r` relation contribute exactly zero without an eigensolve.
fn min_ball_gap(
    delta: &BandOperator,
    space: &MetricSpace,
    centers: &[usize],
    s: f64,
    components: &[Vec<usize>],
) -> Result<f64> {
    let mut unique: BTreeMap<Vec<usize>, ()> = BTreeMap::new();
    for &x in centers {
        unique.entry(space.ball(x, s)?).or_insert(());
    }
    let balls: Vec<Vec<usize>> = unique.into_keys().collect();
    for ball in &balls {
        if components.iter().any(|comp| is_sorted_subset(comp, ball)) {
            return Ok(0.0);
        }
    }
    let gaps = exec::map_slice(&balls, |ball| lambda_min_compressed(delta, ball));
    let mut min = f64::INFINITY;
    for g in gaps {
        min = min.min(g?);
    }
    Ok(min)
}

/// `needle` and `haystack` sorted ascending.
fn is_sorted_subset(needle: &[usize], haystack: &[usize]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.by_ref().any(|h| h == n))
}

/// Supplies `(R, c, S)`-localized witnesses of the form `T = I - Delta_R/m`.
/// The certificate `c = sqrt(1 - kappa_B/m)` comes from the minimal
/// compressed-Laplacian gap over all radius-`s` balls; it fails (no witness)
/// as soon as some ball swallows a whole component, because the constant
/// vector there is fixed by `T`.
pub fn localized_witness_provider(
    box_space: &BoxSpace,
    r: f64,
    s: f64,
) -> Result<LocalizedWitness> {
    let realized = box_space.realized().clone();
    let delta = BandOperator::laplacian(realized.clone(), r)?;
    let m = delta.op_norm()?;
    if m <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Laplacian at scale {r} vanishes; no witness available"
        )));
    }
    let components = realized.components(r);
    let centers: Vec<usize> = (0..realized.len()).collect();
    let kappa_ball = min_ball_gap(&delta, &realized, &centers, s, &components)?;
    if kappa_ball <= 1e-9 {
        return Err(Error::NoLocalizedWitness { s, kappa_ball });
    }
    let op = BandOperator::identity(realized).sub(&delta.scale(1.0 / m))?;
    let c = (1.0 - kappa_ball / m).sqrt();
    Ok(LocalizedWitness { op, r, c, s, kappa_ball, m })
}

/// Independent re-verification of a witness: norm one, propagation within
/// `r`, localization profile below the certified `c`.
pub fn verify_witness(witness: &LocalizedWitness) -> Result<Vec<String>> {
    let mut violations = Vec::new();
    let norm = witness.op.op_norm()?;
    if (norm - 1.0).abs() > 1e-6 {
        violations.push(format!("norm {norm} differs from 1"));
    }
    if witness.op.propagation() > witness.r {
        violations.push(format!(
            "propagation {} exceeds {}",
            witness.op.propagation(),
            witness.r
        ));
    }
    let profile = localization_profile(&witness.op, &[witness.s], "witness")?;
    if profile.loc[0] > witness.c + 1e-9 {
        violations.push(format!(
            "localization {} exceeds certified c = {}",
            profile.loc[0], witness.c
        ));
    }
    Ok(violations)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapLedgerRow {
    pub block: usize,
    pub block_size: usize,
    /// Reach of the polynomial: `degree * r`.
    pub s_check: f64,
    /// Minimal compressed gap over radius-`s_check` balls centered in the
    /// block.
    pub gap: f64,
    /// Whether the gap test `gap >= kappa` holds, i.e. whether the column
    /// bound `g <= 2 eps` is implied on this block.
    pub applicable: bool,
    pub g: f64,
    pub e: f64,
    /// Largest eigenvalue of the output restricted to the block.
    pub top_eig: f64,
}

#[derive(Debug, Clone)]
pub struct GapGhostOutput {
    pub op: BandOperator,
    pub approx: FilterApprox,
    pub decay: GhostDecayReport,
    pub ledger: Vec<GapLedgerRow>,
    pub kappa: f64,
    pub eps: f64,
    /// Laplacian norm (the approximation domain is `[0, m]`).
    pub m: f64,
}

/// Gap pipeline: `f(Delta_R)` for a low bump at `kappa`, approximated to sup
/// error below `eps`. Returns the operator, the per-block ledger, and the
/// decay report. Blocks where the ledger gap test fails are marked
/// inapplicable rather than failing the run.
pub fn build_gap_ghost(
    box_space: &BoxSpace,
    r: f64,
    kappa: f64,
    eps: f64,
) -> Result<GapGhostOutput> {
    let realized = box_space.realized().clone();
    let delta = BandOperator::laplacian(realized.clone(), r)?;
    let m = delta.op_norm()?;
    if m <= 0.0 {
        return Err(Error::InvalidParameter(
            "Laplacian vanishes at this scale; nothing to filter".into(),
        ));
    }
    let filter = SpectralFilter::low_bump(kappa, m)?;
    let approx = design_filter(&filter, ApproxTarget::SupError(eps))?;
    let op = apply_filter(&approx, &delta)?;
    let decay = ghost_decay(&op, box_space)?;

    let s_check = approx.degree() as f64 * r;
    let components = realized.components(r);
    let mut ledger = Vec::new();
    for (block_idx, range) in box_space.ranges().iter().enumerate() {
        let centers: Vec<usize> = range.clone().collect();
        let gap = min_ball_gap(&delta, &realized, &centers, s_check, &components)?;
        let points: Vec<usize> = range.clone().collect();
        let sub = op.dense_submatrix(&points);
        let eigs = crate::bandop::sym_eigenvalues(&sub);
        ledger.push(GapLedgerRow {
            block: block_idx,
            block_size: range.len(),
            s_check,
            gap,
            applicable: gap >= kappa - 1e-12,
            g: decay.rows[block_idx].g,
            e: decay.rows[block_idx].e,
            top_eig: eigs[eigs.len() - 1],
        });
    }
    Ok(GapGhostOutput { op, approx, decay, ledger, kappa, eps, m })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedVectorRow {
    pub block: usize,
    pub component_size: usize,
    /// `|| G v - v ||` for the normalized component indicator `v`.
    pub residual: f64,
    pub fixed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedVectorReport {
    pub eps: f64,
    pub rows: Vec<FixedVectorRow>,
    /// Number of near-fixed orthonormal vectors found; a lower bound on the
    /// rank at which the operator stays away from finite-rank approximants.
    pub fixed_count: usize,
}

/// Verifies that the normalized indicator of every `d <= r` component is
/// moved by at most `eps`. Requires a filter with value 1 at zero.
pub fn kernel_fixed_vectors(
    ghost: &BandOperator,
    box_space: &BoxSpace,
    r: f64,
    eps: f64,
) -> Result<FixedVectorReport> {
    let realized = box_space.realized();
    if ghost.len() != realized.len() {
        return Err(Error::SpaceMismatch { a: ghost.len(), b: realized.len() });
    }
    let comps = realized.components(r);
    let mut rows = Vec::new();
    for comp in comps {
        let block = box_space.block_of(comp[0])?;
        let scale = 1.0 / (comp.len() as f64).sqrt();
        let mut v = vec![0.0; realized.len()];
        for &p in &comp {
            v[p] = scale;
        }
        let gv = ghost.apply(&v)?;
        let residual: f64 =
            gv.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        rows.push(FixedVectorRow {
            block,
            component_size: comp.len(),
            residual,
            fixed: residual <= eps,
        });
    }
    let fixed_count = rows.iter().filter(|r| r.fixed).count();
    Ok(FixedVectorReport { eps, rows, fixed_count })
}

/// One step of the inductive construction: the normalized selected block.
#[derive(Debug, Clone)]
pub struct ConstructionBlock {
    /// Normalized operator on the ambient space, supported in `support`.
    pub op: BandOperator,
    pub support: Vec<usize>,
    pub s: f64,
    /// Certified localization constant of the witness this block came from.
    pub witness_c: f64,
    /// Index of the selected group in the R-separated decomposition.
    pub group_index: usize,
    /// Norm of the selected block before normalization.
    pub selected_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ConstructionOutput {
    pub blocks: Vec<ConstructionBlock>,
    pub kappa: f64,
    pub c: f64,
    pub r: f64,
    /// The annular side the construction ran on (true = even annuli).
    pub side_is_even: bool,
    pub side: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
}

/// Runs the inductive block construction for `count` steps.
///
/// Fix the annular split at the first point of the first block and run on
/// whichever side meets the witness support. Each step chooses
/// `S_n > max(S_{n-1}, n, diam of the group prefix covering all previous
/// supports)`, requests a witness, block-decomposes it along the R-separated
/// decomposition of the side, and selects the first group whose norm exceeds
/// `(1 + c)/2`.
///
/// When `c_target` is given, every witness must certify at most that
/// constant; otherwise the selection threshold uses each witness's own
/// certificate and `kappa = 2c/(1+c)` is formed from the largest certificate
/// seen, which only widens the bound the output blocks must satisfy.
pub fn onl_block_construction<P>(
    box_space: &BoxSpace,
    r: f64,
    count: usize,
    c_target: Option<f64>,
    provider: P,
) -> Result<ConstructionOutput>
where
    P: Fn(&BoxSpace, f64, f64) -> Result<LocalizedWitness>,
{
    if count == 0 {
        return Err(Error::InvalidParameter("construction needs count >= 1".into()));
    }
    if let Some(ct) = c_target {
        if !(ct > 0.0 && ct < 1.0) {
            return Err(Error::InvalidParameter(format!("c must lie in (0,1), got {ct}")));
        }
    }
    let realized = box_space.realized().clone();
    let (even, odd) = realized.annular_decomposition(0)?;

    // Probe at the base scale to pick the side meeting the witness support.
    let probe = provider(box_space, r, 1.0)
        .map_err(|e| Error::ProviderExhausted { step: 1, s: 1.0, source: Box::new(e) })?;
    let probe_support = probe.op.support();
    let side_is_even = even.iter().any(|p| probe_support.binary_search(p).is_ok());
    let side = if side_is_even { even } else { odd };
    let groups = r_separated_decomposition(box_space, &side, r)?;

    let mut blocks: Vec<ConstructionBlock> = Vec::new();
    let mut c_max = 0.0f64;
    let mut max_group_used: Option<usize> = None;
    let mut s_prev = 0.0f64;

    for step in 1..=count {
        let s = if step == 1 {
            1.0
        } else {
            let prefix_end = max_group_used.expect("previous step selected a group");
            let prefix: Vec<usize> =
                groups[..=prefix_end].iter().flatten().copied().collect();
            let diam = realized.subset_diameter(&prefix);
            (step as f64).max(s_prev + 1.0).max(diam.floor() + 1.0)
        };
        let witness = if step == 1 {
            probe.clone()
        } else {
            provider(box_space, r, s).map_err(|e| Error::ProviderExhausted {
                step,
                s,
                source: Box::new(e),
            })?
        };
        if let Some(ct) = c_target {
            if witness.c > ct + 1e-12 {
                return Err(Error::WitnessTooWeak { s, certified: witness.c, requested: ct });
            }
        }
        let c_step = c_target.unwrap_or(witness.c);
        c_max = c_max.max(c_step);

        let masked = witness.op.mask(&side)?;
        let decomposition = masked.block_decompose(&groups)?;
        let norms = decomposition.norms()?;
        let threshold = 0.5 * (1.0 + c_step);
        let selected = norms.iter().position(|&n| n > threshold).ok_or_else(|| {
            Error::NoBlockAboveThreshold {
                threshold,
                best: norms.iter().fold(0.0f64, |m, &v| m.max(v)),
            }
        })?;
        if let Some(prev) = max_group_used {
            if selected <= prev {
                return Err(Error::InvalidParameter(format!(
                    "step {step}: selected group {selected} lies inside the covered prefix \
                     (<= {prev}); the witness at S = {s} was not localized enough"
                )));
            }
        }
        let op = decomposition.blocks()[selected].scale(1.0 / norms[selected]);
        blocks.push(ConstructionBlock {
            op,
            support: groups[selected].clone(),
            s,
            witness_c: witness.c,
            group_index: selected,
            selected_norm: norms[selected],
        });
        max_group_used = Some(selected);
        s_prev = s;
    }
    let kappa = 2.0 * c_max / (1.0 + c_max);
    Ok(ConstructionOutput {
        blocks,
        kappa,
        c: c_max,
        r,
        side_is_even,
        side,
        groups,
    })
}

/// Machine-checks the five construction invariants; returns a description of
/// every violation (empty when the output is valid).
pub fn check_construction_invariants(co: &ConstructionOutput) -> Result<Vec<String>> {
    let mut violations = Vec::new();
    // (a) scales strictly increasing with S_n >= n.
    for (i, b) in co.blocks.iter().enumerate() {
        if b.s < (i + 1) as f64 {
            violations.push(format!("(a) S_{} = {} < {}", i + 1, b.s, i + 1));
        }
        if i > 0 && b.s <= co.blocks[i - 1].s {
            violations.push(format!("(a) S_{} = {} not increasing", i + 1, b.s));
        }
    }
    // (b) positive norm-one blocks.
    for (i, b) in co.blocks.iter().enumerate() {
        let norm = b.op.op_norm()?;
        if (norm - 1.0).abs() > 1e-6 {
            violations.push(format!("(b) ||T_{}|| = {norm}", i + 1));
        }
        let (lo, _) = b.op.extreme_eigenvalues()?;
        if lo < -1e-9 {
            violations.push(format!("(b) T_{} has negative eigenvalue {lo}", i + 1));
        }
    }
    // (c) pairwise disjoint supports.
    for i in 0..co.blocks.len() {
        for j in (i + 1)..co.blocks.len() {
            if co.blocks[i].support.iter().any(|p| co.blocks[j].support.contains(p)) {
                violations.push(format!("(c) supports {} and {} intersect", i + 1, j + 1));
            }
        }
    }
    // (d) support containment: P_n T_n P_n = T_n exactly.
    for (i, b) in co.blocks.iter().enumerate() {
        let masked = b.op.mask(&b.support)?;
        if masked.max_abs_diff(&b.op) != 0.0 {
            violations.push(format!("(d) T_{} has entries outside its support", i + 1));
        }
    }
    // (e) localization at the construction scales.
    for (i, b) in co.blocks.iter().enumerate() {
        let profile = localization_profile(&b.op, &[b.s], &format!("T_{}", i + 1))?;
        if profile.loc[0] > co.kappa + 1e-6 {
            violations.push(format!(
                "(e) loc_{{S_{}}}(T_{}) = {} exceeds kappa = {}",
                i + 1,
                i + 1,
                profile.loc[0],
                co.kappa
            ));
        }
    }
    Ok(violations)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockGhostRow {
    pub block: usize,
    pub support_size: usize,
    pub s: f64,
    /// Largest value of the exact filter on the block's spectrum.
    pub top_eig_exact: f64,
    /// Largest eigenvalue of the polynomial image restricted to the block.
    pub top_eig_poly: f64,
    pub g: f64,
    pub e: f64,
    /// Whether `S_n > 2 * degree * r`, the regime where the column bound
    /// `g <= 2 eps` is implied.
    pub bound_applies: bool,
}

#[derive(Debug, Clone)]
pub struct BlockGhostOutput {
    pub op: BandOperator,
    pub approx: FilterApprox,
    pub kappa: f64,
    pub eps: f64,
    pub rows: Vec<BlockGhostRow>,
}

/// Block pipeline: filters the direct sum of the construction blocks through
/// a high bump at the construction's `kappa`.
pub fn build_block_ghost(
    co: &ConstructionOutput,
    box_space: &BoxSpace,
    eps: f64,
) -> Result<BlockGhostOutput> {
    if co.blocks.is_empty() {
        return Err(Error::InvalidParameter("construction output has no blocks".into()));
    }
    let realized = box_space.realized().clone();
    let mut total = BandOperator::zero(realized);
    for b in &co.blocks {
        total = total.add(&b.op)?;
    }
    let filter = SpectralFilter::high_bump(co.kappa)?;
    let approx = design_filter(&filter, ApproxTarget::SupError(eps))?;
    let ghost = apply_filter(&approx, &total)?;

    let degree = approx.degree() as f64;
    let mut rows = Vec::new();
    for (i, b) in co.blocks.iter().enumerate() {
        let induced = b.op.compress(&b.support)?;
        let (vals, _) = crate::spectral::eig_dense(&induced)?;
        let top_eig_exact =
            vals.iter().map(|&l| filter.eval(l)).fold(f64::NEG_INFINITY, f64::max);
        let gsub = ghost.dense_submatrix(&b.support);
        let geigs = crate::bandop::sym_eigenvalues(&gsub);
        let mut g = 0.0f64;
        let mut e = 0.0f64;
        for &x in &b.support {
            g = g.max(ghost.column_norm(x));
        }
        for (x, y, v) in ghost.entries() {
            if b.support.contains(&x) || b.support.contains(&y) {
                e = e.max(v.abs());
            }
        }
        rows.push(BlockGhostRow {
            block: i,
            support_size: b.support.len(),
            s: b.s,
            top_eig_exact,
            top_eig_poly: geigs[geigs.len() - 1],
            g,
            e,
            bound_applies: b.s > 2.0 * degree * co.r,
        });
    }
    Ok(BlockGhostOutput { op: ghost, approx, kappa: co.kappa, eps, rows })
}

/// Exact-calculus version of the block ghost, `⊕ f(T_n)` through per-block
/// eigendecompositions; the oracle for [`build_block_ghost`].
pub fn exact_block_ghost(co: &ConstructionOutput, box_space: &BoxSpace) -> Result<BandOperator> {
    let realized = box_space.realized().clone();
    let filter = SpectralFilter::high_bump(co.kappa)?;
    let mut total = BandOperator::zero(realized.clone());
    for b in &co.blocks {
        let induced = b.op.compress(&b.support)?;
        let filtered = exact_filter_small(|t| filter.eval(t), &induced)?;
        let embedded = BandOperator::from_entries(
            realized.clone(),
            filtered
                .upper_entries()
                .into_iter()
                .map(|(a, bb, v)| (b.support[a], b.support[bb], v)),
        )?;
        total = total.add(&embedded)?;
    }
    Ok(total)
}

/// Keeps the blocks with the given indices and zeroes the rest.
pub fn block_select(
    ghost: &BandOperator,
    blocks: &[Vec<usize>],
    indices: &[usize],
) -> Result<BandOperator> {
    for &i in indices {
        if i >= blocks.len() {
            return Err(Error::InvalidParameter(format!(
                "block index {i} out of range ({} blocks)",
                blocks.len()
            )));
        }
    }
    let mut union: Vec<usize> = indices.iter().flat_map(|&i| blocks[i].iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    if union.is_empty() {
        return Ok(BandOperator::zero(ghost.space().clone()));
    }
    ghost.mask(&union)
}
