//! Shared test support: a small two-phase simplex, the signed-minimum oracle
//! for boundary ratios, and deterministic random-space builders.
//!
//! The oracle here must stay independent of the library's subset solver: it
//! minimizes over genuinely signed real functions (sign patterns times a
//! linear program per orthant), so agreement with the subset enumeration is
//! evidence, not circularity.

#![allow(dead_code)]

use ghostbench_core::generators::SplitMix64;
use ghostbench_core::space::MetricSpace;

const TOL: f64 = 1e-10;

/// Minimizes `c . z` subject to `a_ub z <= b_ub`, `a_eq z = b_eq`, `z >= 0`.
/// Dense two-phase simplex with Bland's rule; right-hand sides must be
/// nonnegative. Returns the optimal value.
pub fn solve_lp_min(
    c: &[f64],
    a_ub: &[Vec<f64>],
    b_ub: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
) -> Option<f64> {
    let n = c.len();
    let m_ub = a_ub.len();
    let m_eq = a_eq.len();
    let m = m_ub + m_eq;
    assert!(b_ub.iter().all(|&b| b >= 0.0) && b_eq.iter().all(|&b| b >= 0.0));

    // Columns: structural | slacks (ub) | artificials (eq) | rhs.
    let cols = n + m_ub + m_eq + 1;
    let mut t = vec![vec![0.0f64; cols]; m];
    let mut basis = vec![0usize; m];
    for (i, row) in a_ub.iter().enumerate() {
        t[i][..n].copy_from_slice(row);
        t[i][n + i] = 1.0;
        t[i][cols - 1] = b_ub[i];
        basis[i] = n + i;
    }
    for (j, row) in a_eq.iter().enumerate() {
        let i = m_ub + j;
        t[i][..n].copy_from_slice(row);
        t[i][n + m_ub + j] = 1.0;
        t[i][cols - 1] = b_eq[j];
        basis[i] = n + m_ub + j;
    }

    // Phase 1: minimize the sum of artificials.
    let mut obj = vec![0.0f64; cols];
    for j in 0..m_eq {
        obj[n + m_ub + j] = 1.0;
    }
    for i in m_ub..m {
        for j in 0..cols {
            obj[j] -= t[i][j];
        }
    }
    pivot_until_optimal(&mut t, &mut obj, &mut basis, cols)?;
    if -obj[cols - 1] > 1e-7 {
        return None; // infeasible
    }

    // Phase 2: original objective; artificial columns are barred by never
    // letting them enter (their reduced costs are forced up).
    let mut obj2 = vec![0.0f64; cols];
    obj2[..n].copy_from_slice(c);
    for i in 0..m {
        if basis[i] < n {
            let coef = c[basis[i]];
            if coef != 0.0 {
                for j in 0..cols {
                    obj2[j] -= coef * t[i][j];
                }
            }
        }
    }
    for j in 0..m_eq {
        obj2[n + m_ub + j] = f64::INFINITY;
    }
    pivot_until_optimal(&mut t, &mut obj2, &mut basis, cols)?;
    Some(-obj2[cols - 1])
}

fn pivot_until_optimal(
    t: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    cols: usize,
) -> Option<()> {
    let m = t.len();
    for _ in 0..20_000 {
        // Bland: the lowest-index column with a negative reduced cost.
        let entering = (0..cols - 1).find(|&j| obj[j] < -TOL);
        let entering = match entering {
            Some(j) => j,
            None => return Some(()),
        };
        // Ratio test, ties broken by the smallest basis index (Bland).
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][entering] > TOL {
                let ratio = t[i][cols - 1] / t[i][entering];
                let better = match leaving {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - TOL || (ratio < lr + TOL && basis[i] < basis[li])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let (leave_row, _) = leaving?; // unbounded if None
        let pivot = t[leave_row][entering];
        for v in t[leave_row].iter_mut() {
            *v /= pivot;
        }
        for i in 0..m {
            if i != leave_row && t[i][entering].abs() > 0.0 {
                let f = t[i][entering];
                let src = t[leave_row].clone();
                for (v, s) in t[i].iter_mut().zip(&src) {
                    *v -= f * s;
                }
            }
        }
        if obj[entering].abs() > 0.0 && obj[entering].is_finite() {
            let f = obj[entering];
            let src = t[leave_row].clone();
            for (v, s) in obj.iter_mut().zip(&src) {
                *v -= f * s;
            }
        }
        basis[leave_row] = entering;
    }
    None // cycle guard tripped
}

/// Minimum of `sum over ordered pairs in E^R of |phi(x) - phi(y)|` over real
/// `phi` supported in `support` with `sum |phi| = 1`: brute force over sign
/// patterns, continuous minimization via one LP per orthant.
pub fn signed_phi_minimum(space: &MetricSpace, r: f64, support: &[usize]) -> f64 {
    let k = support.len();
    assert!(k >= 1 && k <= 12);
    // Pairs within the support and counts of edges leaving it.
    let mut in_pairs: Vec<(usize, usize)> = Vec::new();
    let mut ext = vec![0.0f64; k];
    for a in 0..k {
        for q in 0..space.len() {
            let d = space.dist(support[a], q);
            if q != support[a] && d <= r {
                match support.iter().position(|&s| s == q) {
                    Some(b) => {
                        if a < b {
                            in_pairs.push((a, b));
                        }
                    }
                    None => ext[a] += 1.0,
                }
            }
        }
    }
    let p = in_pairs.len();
    let n_vars = k + p; // t_0..t_{k-1}, u_0..u_{p-1}
    let mut best = f64::INFINITY;
    // Fix the first sign to +1: the objective is invariant under global
    // negation.
    for mask in 0..(1u32 << (k - 1)) {
        let sigma: Vec<f64> = (0..k)
            .map(|i| if i > 0 && (mask >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 })
            .collect();
        let mut c = vec![0.0f64; n_vars];
        for a in 0..k {
            c[a] = 2.0 * ext[a];
        }
        for e in 0..p {
            c[k + e] = 2.0;
        }
        // u_e >= +-(sigma_a t_a - sigma_b t_b)  =>  two <=-0 rows each.
        let mut a_ub = Vec::with_capacity(2 * p);
        for (e, &(a, b)) in in_pairs.iter().enumerate() {
            let mut row1 = vec![0.0f64; n_vars];
            row1[a] = sigma[a];
            row1[b] = -sigma[b];
            row1[k + e] = -1.0;
            let row2: Vec<f64> = row1.iter().map(|v| -v).collect();
            let mut row2 = row2;
            row2[k + e] = -1.0;
            a_ub.push(row1);
            a_ub.push(row2);
        }
        let b_ub = vec![0.0f64; 2 * p];
        let mut eq = vec![0.0f64; n_vars];
        for v in eq.iter_mut().take(k) {
            *v = 1.0;
        }
        let value = solve_lp_min(&c, &a_ub, &b_ub, &[eq], &[1.0])
            .expect("orthant LP is feasible and bounded");
        best = best.min(value);
    }
    best
}

/// Random unit-weight graph space with `3..=max_n` points; components vary.
pub fn random_space(rng: &mut SplitMix64, max_n: usize) -> MetricSpace {
    let n = 3 + rng.uniform((max_n - 2) as u64) as usize;
    let target_edges = 1 + rng.uniform((2 * n) as u64) as usize;
    let mut edges = std::collections::BTreeSet::new();
    for _ in 0..target_edges {
        let i = rng.uniform(n as u64) as usize;
        let j = rng.uniform(n as u64) as usize;
        if i != j {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let list: Vec<(usize, usize, f64)> =
        edges.into_iter().map(|(i, j)| (i, j, 1.0)).collect();
    MetricSpace::from_edges(n, &list).unwrap()
}

/// Random vector with entries in [-1, 1).
pub fn random_vector(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect()
}
