//! Multilateration from pseudo-ranges.
//!
//! Subtracting the squared range equation of the reference anchor (index 1)
//! from that of anchor `k` gives one linear equation
//!
//! ```text
//! (x_k - x_1) x + (y_k - y_1) y = 1/2 (x_k^2 + y_k^2 - x_1^2 - y_1^2 + D_1^2 - D_k^2)
//! ```
//!
//! Every subset of at least three such equations is solved by least squares
//! and scored by the sum of squared range mismatches at its solution; the
//! subset with the smallest score wins. A biased range then tends to be left
//! out of the winning subset.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Default relative singular-value cutoff for declaring a system degenerate.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub pos: Point,
    /// 1-based; index 1 is the reference.
    pub index: usize,
}

/// Anchors with their measured ranges; the first anchor is the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSet {
    anchors: Vec<Anchor>,
    ranges: Vec<f64>,
}

impl RangeSet {
    /// Anchors are numbered 1..=n in the order given.
    pub fn new(positions: &[Point], ranges: &[f64]) -> Result<Self> {
        if positions.len() != ranges.len() {
            return Err(Error::RangeSet("anchor and range counts differ"));
        }
        if positions.is_empty() {
            return Err(Error::RangeSet("reference anchor missing"));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::RangeSet("anchor coordinates must be finite"));
        }
        if ranges.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::RangeSet("ranges must be finite and non-negative"));
        }
        Ok(Self {
            anchors: positions
                .iter()
                .enumerate()
                .map(|(i, &pos)| Anchor { pos, index: i + 1 })
                .collect(),
            ranges: ranges.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    pub fn reference(&self) -> &Anchor {
        &self.anchors[0]
    }

    fn anchor(&self, k: usize) -> Result<(Point, f64)> {
        if k == 0 || k > self.len() {
            return Err(Error::RangeSet("anchor index out of range"));
        }
        Ok((self.anchors[k - 1].pos, self.ranges[k - 1]))
    }

    /// Equation indices `2..=n`.
    pub fn equation_indices(&self) -> Vec<usize> {
        (2..=self.len()).collect()
    }
}

/// Rows `A` and right-hand side `b` of the linearized system.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub rows: Vec<[f64; 2]>,
    pub rhs: Vec<f64>,
}

/// One row per anchor index `k` in `subset` (each in `2..=n`).
pub fn build_linear_system(rs: &RangeSet, subset: &[usize]) -> Result<LinearSystem> {
    let (p1, d1) = rs.anchor(1)?;
    let mut rows = Vec::with_capacity(subset.len());
    let mut rhs = Vec::with_capacity(subset.len());
    for &k in subset {
        if k < 2 {
            return Err(Error::RangeSet("equation index must be >= 2"));
        }
        let (pk, dk) = rs.anchor(k)?;
        rows.push([pk.x - p1.x, pk.y - p1.y]);
        rhs.push(0.5 * (pk.dot(pk) - p1.dot(p1) + d1 * d1 - dk * dk));
    }
    Ok(LinearSystem { rows, rhs })
}

/// Least-squares solution of a two-unknown system by Givens QR.
///
/// Returns `None` when the smallest singular value is below `rel_tol` times
/// the largest, or when there are fewer than two rows.
pub fn solve_ls(system: &LinearSystem, rel_tol: f64) -> Option<Point> {
    if system.rows.len() < 2 || system.rows.len() != system.rhs.len() {
        return None;
    }
    // Upper-triangular R = [[r11, r12], [0, r22]] and the first two entries of Q^T b.
    let (mut r11, mut r12, mut r22) = (0.0f64, 0.0f64, 0.0f64);
    let (mut c1, mut c2) = (0.0f64, 0.0f64);
    for (&[a, b], &y) in system.rows.iter().zip(&system.rhs) {
        let (mut b, mut y) = (b, y);
        if a != 0.0 {
            let r = libm::hypot(r11, a);
            let (c, s) = (r11 / r, a / r);
            r11 = r;
            let (nr12, nb) = (c * r12 + s * b, c * b - s * r12);
            r12 = nr12;
            b = nb;
            let (nc1, ny) = (c * c1 + s * y, c * y - s * c1);
            c1 = nc1;
            y = ny;
        }
        if b != 0.0 {
            let r = libm::hypot(r22, b);
            let (c, s) = (r22 / r, b / r);
            r22 = r;
            c2 = c * c2 + s * y;
        }
    }
    // Singular values of R, which equal those of A.
    let s_max = 0.5 * (libm::hypot(r11 + r22, r12) + libm::hypot(r11 - r22, r12));
    if !(s_max.is_finite() && s_max > 0.0) {
        return None;
    }
    let s_min = (r11 * r22).abs() / s_max;
    if s_min < rel_tol * s_max {
        return None;
    }
    let y = c2 / r22;
    let x = (c1 - r12 * y) / r11;
    let p = Point::new(x, y);
    p.is_finite().then_some(p)
}

/// Sum over anchor indices in `members` of `(D_m - |position - anchor_m|)^2`.
pub fn residual(position: Point, rs: &RangeSet, members: &[usize]) -> f64 {
    members
        .iter()
        .filter_map(|&m| rs.anchor(m).ok())
        .map(|(p, d)| {
            let e = d - position.distance(p);
            e * e
        })
        .sum()
}

/// Solution of one equation subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSolution {
    /// Anchor indices `k` of the equations used, ascending.
    pub subset: Vec<usize>,
    pub position: Point,
    /// Residual over the subset's anchors and the reference; drives selection.
    pub residual: f64,
    /// Residual over the subset's anchors alone.
    pub residual_subset_only: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixStatus {
    Ok,
    InsufficientRanges,
    Degenerate,
}

impl FixStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixStatus::Ok => "OK",
            FixStatus::InsufficientRanges => "INSUFFICIENT_RANGES",
            FixStatus::Degenerate => "DEGENERATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionFix {
    /// NaN unless `status` is `Ok`.
    pub position: Point,
    pub chosen_subset: Vec<usize>,
    pub residual: f64,
    pub residual_subset_only: f64,
    pub status: FixStatus,
}

impl PositionFix {
    pub fn unavailable(status: FixStatus) -> Self {
        Self {
            position: Point::new(f64::NAN, f64::NAN),
            chosen_subset: Vec::new(),
            residual: f64::NAN,
            residual_subset_only: f64::NAN,
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == FixStatus::Ok
    }
}

/// All `k`-element combinations of `items`, in lexicographic order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Equation subsets considered for `n` ranges: every subset of size at
/// least three, or the single full system when only two equations exist.
pub fn candidate_subsets(n_ranges: usize) -> Vec<Vec<usize>> {
    if n_ranges < 3 {
        return Vec::new();
    }
    let eqs: Vec<usize> = (2..=n_ranges).collect();
    if eqs.len() == 2 {
        return alloc::vec![eqs];
    }
    (3..=eqs.len())
        .flat_map(|k| combinations(&eqs, k))
        .collect()
}

/// Solves every candidate subset, skipping degenerate ones.
pub fn subset_solutions(rs: &RangeSet, rel_tol: f64) -> Vec<SubsetSolution> {
    candidate_subsets(rs.len())
        .into_iter()
        .filter_map(|subset| {
            let system = build_linear_system(rs, &subset).ok()?;
            let position = solve_ls(&system, rel_tol)?;
            let residual_subset_only = residual(position, rs, &subset);
            let residual = residual_subset_only + residual(position, rs, &[1]);
            Some(SubsetSolution {
                subset,
                position,
                residual,
                residual_subset_only,
            })
        })
        .collect()
}

/// Minimum-residual subset solution. Ties go to the lexicographically
/// smallest subset.
pub fn position_fix(rs: &RangeSet, rel_tol: f64) -> PositionFix {
    if rs.len() < 3 {
        return PositionFix::unavailable(FixStatus::InsufficientRanges);
    }
    let best = subset_solutions(rs, rel_tol).into_iter().min_by(|a, b| {
        a.residual
            .total_cmp(&b.residual)
            .then_with(|| a.subset.cmp(&b.subset))
    });
    match best {
        Some(s) => PositionFix {
            position: s.position,
            chosen_subset: s.subset,
            residual: s.residual,
            residual_subset_only: s.residual_subset_only,
            status: FixStatus::Ok,
        },
        None => PositionFix::unavailable(FixStatus::Degenerate),
    }
}

/// Plain least squares over all equations, no subset selection.
pub fn full_system_fix(rs: &RangeSet, rel_tol: f64) -> Option<Point> {
    if rs.len() < 3 {
        return None;
    }
    solve_ls(
        &build_linear_system(rs, &rs.equation_indices()).ok()?,
        rel_tol,
    )
}
