//! Finite metric spaces and box spaces.
//!
//! A [`MetricSpace`] is a finite point set with a validated distance table.
//! Distances are nonnegative doubles; points in different connected pieces sit
//! at the sentinel value [`f64::INFINITY`]. Every generator in this crate
//! produces integer distances, so distance comparisons are exact.
//!
//! A [`BoxSpace`] is a disjoint union of finite spaces realized as one global
//! metric: points of blocks `a != b` sit at the constant distance
//! `R_a + R_b`, where `R_n = diam(X_n) + n` (1-indexed). This keeps the
//! triangle inequality by construction and separates blocks by more than the
//! sum of their diameters, with slack `a + b`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::exec;
use crate::{Error, Result};

/// A finite metric space: points `0..n`, a symmetric distance table, and
/// optional point labels. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
    /// Weighted edge list the metric was derived from. Spaces built from raw
    /// distance tables keep the complete graph of finite pairs here so that
    /// serialization never stores distances directly.
    edges: Vec<(usize, usize, f64)>,
}

impl MetricSpace {
    /// Builds the shortest-path metric of a weighted graph. Edge weights must
    /// be strictly positive (a zero weight would identify its endpoints).
    /// Points in different components end up at infinite distance.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("space must have at least one point".into()));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut canonical = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i >= n {
                return Err(Error::PointOutOfRange { point: i, n });
            }
            if j >= n {
                return Err(Error::PointOutOfRange { point: j, n });
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at point {i}")));
            }
            if !(w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i},{j}) has non-positive weight {w}"
                )));
            }
            adj[i].push((j, w));
            adj[j].push((i, w));
            canonical.push((i.min(j), i.max(j), w));
        }
        canonical.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        canonical.dedup();

        // Dijkstra from every source; integer weights stay exact in f64.
        let rows = exec::map_indexed(n, |src| {
            let mut d = vec![f64::INFINITY; n];
            d[src] = 0.0;
            let mut heap: BinaryHeap<Reverse<(OrdF64, usize)>> = BinaryHeap::new();
            heap.push(Reverse((OrdF64(0.0), src)));
            while let Some(Reverse((OrdF64(du), u))) = heap.pop() {
                if du > d[u] {
                    continue;
                }
                for &(v, w) in &adj[u] {
                    let cand = du + w;
                    if cand < d[v] {
                        d[v] = cand;
                        heap.push(Reverse((OrdF64(cand), v)));
                    }
                }
            }
            d
        });
        let mut dist = Vec::with_capacity(n * n);
        for row in rows {
            dist.extend_from_slice(&row);
        }
        Ok(MetricSpace { n, dist, labels: None, edges: canonical })
    }

    /// Validates a raw distance table: zero diagonal, symmetry, positivity off
    /// the diagonal, and the triangle inequality over all finite triples. A
    /// violation is rejected with the offending triple.
    pub fn from_distance_table(table: &[Vec<f64>]) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidParameter("space must have at least one point".into()));
        }
        for (x, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "row {x} has length {} in a {n}-point table",
                    row.len()
                )));
            }
        }
        let mut dist = vec![0.0f64; n * n];
        for x in 0..n {
            for y in 0..n {
                let d = table[x][y];
                if d < 0.0 {
                    return Err(Error::NegativeDistance { x, y, d });
                }
                if x == y && d != 0.0 {
                    return Err(Error::NonzeroDiagonal { x, d });
                }
                if x != y && d == 0.0 {
                    return Err(Error::ZeroDistance { x, y });
                }
                if table[y][x] != d {
                    return Err(Error::AsymmetricDistance { x, y, dxy: d, dyx: table[y][x] });
                }
                dist[x * n + y] = d;
            }
        }
        // Exact comparisons: generator-produced distances are integers.
        for z in 0..n {
            for x in 0..n {
                let dxz = dist[x * n + z];
                if dxz.is_infinite() {
                    continue;
                }
                for y in 0..n {
                    let sum = dxz + dist[z * n + y];
                    if dist[x * n + y] > sum {
                        return Err(Error::TriangleViolation {
                            x,
                            y,
                            z,
                            dxy: dist[x * n + y],
                            sum,
                        });
                    }
                }
            }
        }
        let mut edges = Vec::new();
        for x in 0..n {
            for y in (x + 1)..n {
                let d = dist[x * n + y];
                if d.is_finite() {
                    edges.push((x, y, d));
                }
            }
        }
        Ok(MetricSpace { n, dist, labels: None, edges })
    }

    /// Constructor for metrics that hold the triangle inequality by
    /// construction (shortest paths, box-space realizations).
    pub(crate) fn from_trusted_parts(
        n: usize,
        dist: Vec<f64>,
        edges: Vec<(usize, usize, f64)>,
        labels: Option<Vec<String>>,
    ) -> Self {
        debug_assert_eq!(dist.len(), n * n);
        MetricSpace { n, dist, labels, edges }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Vec<String>) -> Result<()> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(())
    }

    /// The generating edge list (canonical order, `i < j`).
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Closed ball `{y : d(x,y) <= s}`; always contains `x`.
    pub fn ball(&self, x: usize, s: f64) -> Result<Vec<usize>> {
        if x >= self.n {
            return Err(Error::PointOutOfRange { point: x, n: self.n });
        }
        if s < 0.0 {
            return Err(Error::InvalidParameter(format!("negative radius {s}")));
        }
        Ok((0..self.n).filter(|&y| self.dist(x, y) <= s).collect())
    }

    /// Largest finite distance from `x` (infinite if some point is unreachable).
    pub fn eccentricity(&self, x: usize) -> f64 {
        (0..self.n).map(|y| self.dist(x, y)).fold(0.0, f64::max)
    }

    /// Largest distance in the space; infinite when disconnected.
    pub fn diameter(&self) -> f64 {
        (0..self.n).map(|x| self.eccentricity(x)).fold(0.0, f64::max)
    }

    /// Connected components of the relation `d(x,y) <= r`, each sorted, in
    /// order of their minimal point.
    pub fn components(&self, r: f64) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for x in 0..self.n {
            for y in (x + 1)..self.n {
                if self.dist(x, y) <= r {
                    let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for x in 0..self.n {
            let root = find(&mut parent, x);
            buckets[root].push(x);
        }
        buckets.into_iter().filter(|c| !c.is_empty()).collect()
    }

    /// Measured bounded-geometry profile: `N(R)` is the largest ball
    /// cardinality at radius `R`.
    pub fn geometry_profile(&self, radii: &[f64]) -> Result<GeometryProfile> {
        let mut sorted = radii.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate radii in profile request".into()));
        }
        if sorted.first().is_some_and(|&r| r < 0.0) {
            return Err(Error::InvalidParameter("negative radius in profile request".into()));
        }
        let per_radius = exec::map_slice(&sorted, |&r| {
            (0..self.n)
                .map(|x| (0..self.n).filter(|&y| self.dist(x, y) <= r).count())
                .max()
                .unwrap_or(0)
        });
        Ok(GeometryProfile { pairs: sorted.into_iter().zip(per_radius).collect() })
    }

    /// Splits the space along the annuli `m^2 <= d(x0, x) < (m+1)^2`: even
    /// annulus indices go to the first set, odd to the second. The half-open
    /// convention makes the two sets a partition. Requires every distance to
    /// the basepoint to be finite.
    pub fn annular_decomposition(&self, x0: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if x0 >= self.n {
            return Err(Error::PointOutOfRange { point: x0, n: self.n });
        }
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for x in 0..self.n {
            let d = self.dist(x0, x);
            if d.is_infinite() {
                return Err(Error::InfiniteDistance { from: x0, to: x });
            }
            if annulus_index(d) % 2 == 0 {
                even.push(x);
            } else {
                odd.push(x);
            }
        }
        Ok((even, odd))
    }

    /// Induced metric on a subset of points, in the given order.
    pub fn restrict(&self, points: &[usize]) -> Result<MetricSpace> {
        if points.is_empty() {
            return Err(Error::EmptySelection);
        }
        for &p in points {
            if p >= self.n {
                return Err(Error::PointOutOfRange { point: p, n: self.n });
            }
        }
        let k = points.len();
        let mut dist = vec![0.0f64; k * k];
        for (a, &x) in points.iter().enumerate() {
            for (b, &y) in points.iter().enumerate() {
                dist[a * k + b] = self.dist(x, y);
            }
        }
        let mut edges = Vec::new();
        for a in 0..k {
            for b in (a + 1)..k {
                let d = dist[a * k + b];
                if d.is_finite() {
                    edges.push((a, b, d));
                }
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|ls| points.iter().map(|&p| ls[p].clone()).collect());
        Ok(MetricSpace::from_trusted_parts(k, dist, edges, labels))
    }

    /// Largest pairwise distance within a point set.
    pub fn subset_diameter(&self, points: &[usize]) -> f64 {
        let mut diam = 0.0f64;
        for (i, &x) in points.iter().enumerate() {
            for &y in &points[i + 1..] {
                diam = diam.max(self.dist(x, y));
            }
        }
        diam
    }
}

/// Index `m` of the annulus `[m^2, (m+1)^2)` containing `d`. Robust against
/// floating-point sqrt at perfect squares.
fn annulus_index(d: f64) -> u64 {
    debug_assert!(d >= 0.0 && d.is_finite());
    let mut m = d.sqrt().floor() as u64;
    while (m as f64 + 1.0) * (m as f64 + 1.0) <= d {
        m += 1;
    }
    while m > 0 && (m as f64) * (m as f64) > d {
        m -= 1;
    }
    m
}

/// Total order on finite distances for the Dijkstra heap.
#[derive(Clone, Copy)]
struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Measured bounded-geometry profile: pairs `(R, N(R))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryProfile {
    pub pairs: Vec<(f64, usize)>,
}

impl GeometryProfile {
    /// `N(R)` for the largest requested radius `<= r`.
    pub fn n_at(&self, r: f64) -> Option<usize> {
        self.pairs.iter().filter(|(rad, _)| *rad <= r).map(|(_, n)| *n).next_back()
    }

    pub fn is_monotone(&self) -> bool {
        self.pairs.windows(2).all(|w| w[0].1 <= w[1].1)
    }
}

/// A disjoint union of finite metric spaces realized as one global metric.
#[derive(Debug, Clone)]
pub struct BoxSpace {
    blocks: Vec<MetricSpace>,
    offsets: Vec<f64>,
    ranges: Vec<Range<usize>>,
    realized: Arc<MetricSpace>,
}

impl BoxSpace {
    /// Assembles a box space. Every block must be nonempty with a finite
    /// internal metric; the realized cross-block distance between blocks `a`
    /// and `b` is `R_a + R_b` with `R_n = diam(X_n) + n` (1-indexed).
    pub fn new(blocks: Vec<MetricSpace>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyBlockList);
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            let diam = b.diameter();
            if !diam.is_finite() {
                return Err(Error::DisconnectedBlock { block: i });
            }
            offsets.push(diam + (i + 1) as f64);
        }
        let mut ranges = Vec::with_capacity(blocks.len());
        let mut start = 0usize;
        for b in &blocks {
            ranges.push(start..start + b.len());
            start += b.len();
        }
        let total = start;

        let mut dist = vec![0.0f64; total * total];
        for (a, block) in blocks.iter().enumerate() {
            let ra = ranges[a].clone();
            for i in 0..block.len() {
                for j in 0..block.len() {
                    dist[(ra.start + i) * total + (ra.start + j)] = block.dist(i, j);
                }
            }
            for b in (a + 1)..blocks.len() {
                let cross = offsets[a] + offsets[b];
                let rb = ranges[b].clone();
                for x in ra.clone() {
                    for y in rb.clone() {
                        dist[x * total + y] = cross;
                        dist[y * total + x] = cross;
                    }
                }
            }
        }

        // Separation: cross distance exceeds the sum of the two diameters.
        for a in 0..blocks.len() {
            for b in (a + 1)..blocks.len() {
                let cross = offsets[a] + offsets[b];
                let diam_sum = blocks[a].diameter() + blocks[b].diameter();
                assert!(
                    cross > diam_sum,
                    "box separation violated between blocks {a} and {b}"
                );
            }
        }

        let mut edges = Vec::new();
        for (a, block) in blocks.iter().enumerate() {
            let base = ranges[a].start;
            for &(i, j, w) in block.edges() {
                edges.push((base + i, base + j, w));
            }
        }
        let labels = if blocks.iter().all(|b| b.labels().is_some()) {
            let mut ls = Vec::with_capacity(total);
            for b in &blocks {
                ls.extend(b.labels().unwrap().iter().cloned());
            }
            Some(ls)
        } else {
            None
        };
        // The realized table is a metric by construction: within-block
        // distances are metrics, cross distances are constant per block pair,
        // and R_a + R_b >= diam(X_a) dominates every detour.
        let realized = Arc::new(MetricSpace::from_trusted_parts(total, dist, edges, labels));
        Ok(BoxSpace { blocks, offsets, ranges, realized })
    }

    pub fn blocks(&self) -> &[MetricSpace] {
        &self.blocks
    }

    /// Per-block offsets `R_n` used to realize cross-block distances.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Global index ranges of the blocks.
    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn realized(&self) -> &Arc<MetricSpace> {
        &self.realized
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Block index containing a global point.
    pub fn block_of(&self, point: usize) -> Result<usize> {
        self.ranges
            .iter()
            .position(|r| r.contains(&point))
            .ok_or(Error::PointOutOfRange { point, n: self.realized.len() })
    }

    /// Global point indices of one block.
    pub fn block_points(&self, block: usize) -> Result<Vec<usize>> {
        self.ranges
            .get(block)
            .map(|r| r.clone().collect())
            .ok_or(Error::InvalidParameter(format!("block {block} out of range")))
    }

    /// Smallest distance between any two distinct blocks.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..self.blocks.len() {
            for b in (a + 1)..self.blocks.len() {
                best = best.min(self.offsets[a] + self.offsets[b]);
            }
        }
        best
    }
}

/// Splits a subset of a box space into groups of consecutive block fragments
/// with pairwise distance `> r`.
///
/// Fragments are the per-block intersections of `subset`, in block order. A
/// cut between consecutive fragments is allowed only when every pair of
/// fragments across it is more than `r` apart; the groups are the maximal
/// runs between allowed cuts, so `d(Y_a, Y_b) > r` holds for all pairs. When
/// no cut is allowed the whole subset comes back as a single group.
pub fn r_separated_decomposition(
    box_space: &BoxSpace,
    subset: &[usize],
    r: f64,
) -> Result<Vec<Vec<usize>>> {
    if subset.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n = box_space.realized().len();
    let mut seen = vec![false; n];
    for &p in subset {
        if p >= n {
            return Err(Error::PointOutOfRange { point: p, n });
        }
        if seen[p] {
            return Err(Error::InvalidParameter(format!("duplicate point {p} in subset")));
        }
        seen[p] = true;
    }

    // Per-block fragments, in block order.
    let mut fragments: Vec<(usize, Vec<usize>)> = Vec::new();
    for (b, range) in box_space.ranges().iter().enumerate() {
        let frag: Vec<usize> = range.clone().filter(|&p| seen[p]).collect();
        if !frag.is_empty() {
            fragments.push((b, frag));
        }
    }

    // Cross-fragment distance is the constant cross-block distance.
    let frag_dist = |a: usize, b: usize| -> f64 {
        box_space.offsets()[fragments[a].0] + box_space.offsets()[fragments[b].0]
    };
    let k = fragments.len();
    let mut groups = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for i in 0..k {
        current.extend_from_slice(&fragments[i].1);
        if i + 1 == k {
            groups.push(std::mem::take(&mut current));
            break;
        }
        let cut_ok = (0..=i).all(|a| ((i + 1)..k).all(|b| frag_dist(a, b) > r));
        if cut_ok {
            groups.push(std::mem::take(&mut current));
        }
    }
    Ok(groups)
}

/// On-disk space format: `{"blocks": [{"n": int, "edges": [[i,j,w],...]}]}`.
/// Weights are optional on input (default 1); distances are always derived,
/// never stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    pub blocks: Vec<BlockFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockFile {
    pub n: usize,
    pub edges: Vec<Vec<f64>>,
}

impl SpaceFile {
    pub fn from_box(box_space: &BoxSpace) -> Self {
        SpaceFile {
            blocks: box_space
                .blocks()
                .iter()
                .map(|b| BlockFile {
                    n: b.len(),
                    edges: b
                        .edges()
                        .iter()
                        .map(|&(i, j, w)| vec![i as f64, j as f64, w])
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_box(&self) -> Result<BoxSpace> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for bf in &self.blocks {
            let mut edges = Vec::with_capacity(bf.edges.len());
            for e in &bf.edges {
                match e.len() {
                    2 => edges.push((e[0] as usize, e[1] as usize, 1.0)),
                    3 => edges.push((e[0] as usize, e[1] as usize, e[2])),
                    len => {
                        return Err(Error::InvalidParameter(format!(
                            "edge record has {len} fields; expected [i, j] or [i, j, w]"
                        )))
                    }
                }
            }
            blocks.push(MetricSpace::from_edges(bf.n, &edges)?);
        }
        BoxSpace::new(blocks)
    }
}
