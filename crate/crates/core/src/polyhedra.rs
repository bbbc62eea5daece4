//! H-representation polyhedra `{x : Cx ≤ d}`.
//!
//! Construction, scaling and Farkas containment work in any dimension. Vertex
//! enumeration, Fourier–Motzkin projection and Minkowski sums are exponential
//! in the dimension and are capped; they back the small-dimension oracles.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{matrix_from_rows, matrix_to_rows};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::{Error, Result};

/// Default Farkas containment slack.
pub const CONTAINMENT_TOL: f64 = 1e-7;
/// Slack used when checking points and vertices against constraints.
pub const POINT_TOL: f64 = 1e-9;

/// Dimension caps for the combinatorial operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub vertices: usize,
    pub projection: usize,
    pub minkowski: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            vertices: 12,
            projection: 12,
            minkowski: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    c: DMatrix<f64>,
    d: DVector<f64>,
    contains_origin: bool,
}

/// Outcome of a Farkas containment test.
#[derive(Clone, Debug)]
pub enum Containment {
    /// `witness` is `T ≥ 0` with `T·H_inner = G_outer`, `T·h_inner ≤ g_outer + tol`;
    /// `None` when the inner set is empty.
    Contained { witness: Option<DMatrix<f64>> },
    /// The first outer row whose support value exceeds its bound.
    NotContained { row: usize },
}

impl Containment {
    pub fn holds(&self) -> bool {
        matches!(self, Containment::Contained { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexList {
    pub vertices: Vec<DVector<f64>>,
}

impl VertexList {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.len())
    }
}

impl Polyhedron {
    pub fn new(c: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        if c.ncols() == 0 {
            return Err(Error::InvalidDimension("ambient dimension must be ≥ 1".into()));
        }
        if c.nrows() == 0 {
            return Err(Error::InvalidDimension("need at least one constraint row".into()));
        }
        if c.nrows() != d.len() {
            return Err(Error::DimensionMismatch {
                expected: c.nrows(),
                found: d.len(),
            });
        }
        if c.iter().chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite polyhedron data".into()));
        }
        let contains_origin = d.iter().all(|&v| v >= 0.0);
        Ok(Polyhedron {
            c,
            d,
            contains_origin,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], d: Vec<f64>) -> Result<Self> {
        Polyhedron::new(matrix_from_rows(rows)?, DVector::from_vec(d))
    }

    /// `{x : x ≤ 1, −x ≤ 1}` with the `+I` block first.
    pub fn unit_box(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("unit box needs n ≥ 1".into()));
        }
        let mut c = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            c[(i, i)] = 1.0;
            c[(n + i, i)] = -1.0;
        }
        Polyhedron::new(c, DVector::from_element(2 * n, 1.0))
    }

    /// Axis-aligned box `lo ≤ x ≤ hi`.
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let n = lo.len();
        let mut c = DMatrix::zeros(2 * n, n);
        let mut d = DVector::zeros(2 * n);
        for i in 0..n {
            c[(i, i)] = 1.0;
            d[i] = hi[i];
            c[(n + i, i)] = -1.0;
            d[n + i] = -lo[i];
        }
        Polyhedron::new(c, d)
    }

    /// Placeholder for an empty set in dimension `n`: the single row `0·x ≤ −1`.
    pub fn empty(n: usize) -> Result<Self> {
        Polyhedron::new(DMatrix::zeros(1, n), DVector::from_element(1, -1.0))
    }

    /// `R^n` written as the single trivial row `0·x ≤ 1`.
    pub fn whole_space(n: usize) -> Result<Self> {
        Polyhedron::new(DMatrix::zeros(1, n), DVector::from_element(1, 1.0))
    }

    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.c.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn contains_origin(&self) -> bool {
        self.contains_origin
    }

    /// `{x : Cx ≤ s·d}`, which is `s·P` whenever `0 ∈ P`.
    pub fn scale(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidScale(s));
        }
        Polyhedron::new(self.c.clone(), &self.d * s)
    }

    /// Preimage `{x : C·(M x) ≤ d}` under a linear map.
    pub fn preimage(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: m.nrows(),
            });
        }
        Polyhedron::new(&self.c * m, self.d.clone())
    }

    /// Stacks the constraints of both sets.
    pub fn intersect(&self, other: &Polyhedron) -> Result<Self> {
        self.check_dim(other.dim())?;
        let rows = self.num_rows() + other.num_rows();
        let mut c = DMatrix::zeros(rows, self.dim());
        c.rows_mut(0, self.num_rows()).copy_from(&self.c);
        c.rows_mut(self.num_rows(), other.num_rows()).copy_from(&other.c);
        let d = DVector::from_iterator(rows, self.d.iter().chain(other.d.iter()).copied());
        Polyhedron::new(c, d)
    }

    /// Cartesian product `self × other` with block-diagonal constraints.
    pub fn product(&self, other: &Polyhedron) -> Result<Self> {
        let (r1, n1) = self.c.shape();
        let (r2, n2) = other.c.shape();
        let mut c = DMatrix::zeros(r1 + r2, n1 + n2);
        c.view_mut((0, 0), (r1, n1)).copy_from(&self.c);
        c.view_mut((r1, n1), (r2, n2)).copy_from(&other.c);
        let d = DVector::from_iterator(r1 + r2, self.d.iter().chain(other.d.iter()).copied());
        Polyhedron::new(c, d)
    }

    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim() && self.max_violation(x) <= tol
    }

    /// `max_i (C x − d)_i`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        (&self.c * x - &self.d).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `r ≥ 0` with `r·v ∈ P`, for `P` containing the origin.
    /// Infinite when the ray never leaves `P`.
    pub fn ray_extent(&self, v: &DVector<f64>) -> f64 {
        let cv = &self.c * v;
        cv.iter()
            .zip(self.d.iter())
            .filter(|(a, _)| **a > 1e-14)
            .map(|(a, b)| (b / a).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }

    fn feasibility_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.dim());
        for (i, row) in self.c.row_iter().enumerate() {
            lp.add_le(row.iter().copied().enumerate(), self.d[i]);
        }
        lp
    }

    pub fn is_empty(&self) -> Result<bool> {
        match lp::solve(&self.feasibility_lp(), POINT_TOL).status {
            LpStatus::Optimal => Ok(false),
            LpStatus::Infeasible => Ok(true),
            status => Err(Error::solver(status, "testing polyhedron emptiness")),
        }
    }

    /// `max dir·x` over `P`: `Some(value)` when attained, `None` when unbounded.
    pub fn support(&self, dir: &DVector<f64>) -> Result<Option<(f64, DVector<f64>)>> {
        self.check_dim(dir.len())?;
        let mut lp = self.feasibility_lp();
        for (j, v) in dir.iter().enumerate() {
            lp.set_objective(j, -v);
        }
        let out = lp::solve(&lp, POINT_TOL);
        match out.status {
            LpStatus::Optimal => Ok(Some((-out.objective_value, DVector::from_vec(out.solution)))),
            LpStatus::Unbounded => Ok(None),
            LpStatus::Infeasible => Err(Error::Empty),
            status => Err(Error::solver(status, "evaluating a support function")),
        }
    }

    /// True when the recession cone `{y : Cy ≤ 0}` is trivial.
    pub fn is_bounded(&self) -> Result<bool> {
        let n = self.dim();
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut lp = LinearProgram::new(n);
                for row in self.c.row_iter() {
                    lp.add_le(row.iter().copied().enumerate(), 0.0);
                }
                for k in 0..n {
                    lp.add_le([(k, 1.0)], 1.0);
                    lp.add_le([(k, -1.0)], 1.0);
                }
                lp.set_objective(j, -sign);
                let out = lp::solve(&lp, POINT_TOL);
                match out.status {
                    LpStatus::Optimal if -out.objective_value > 1e-9 => return Ok(false),
                    LpStatus::Optimal => {}
                    status => return Err(Error::solver(status, "testing boundedness")),
                }
            }
        }
        Ok(true)
    }

    /// Farkas containment `inner ⊆ self`: for each outer row `g_i`, minimize
    /// `t·h` over `t ≥ 0, t·H = g_i`. The rows of `T` are independent, so
    /// the containment LP is solved one row at a time.
    pub fn contains(&self, inner: &Polyhedron, tol: f64) -> Result<Containment> {
        self.check_dim(inner.dim())?;
        if inner.is_empty()? {
            return Ok(Containment::Contained { witness: None });
        }
        let p = inner.num_rows();
        let n = self.dim();
        let mut witness = DMatrix::zeros(self.num_rows(), p);
        for i in 0..self.num_rows() {
            let mut lp = LinearProgram::new(p);
            for k in 0..p {
                lp.set_nonneg(k);
                lp.set_objective(k, inner.d[k]);
            }
            for j in 0..n {
                lp.add_eq((0..p).map(|k| (k, inner.c[(k, j)])), self.c[(i, j)]);
            }
            let out = lp::solve(&lp, POINT_TOL);
            match out.status {
                LpStatus::Optimal if out.objective_value <= self.d[i] + tol => {
                    for k in 0..p {
                        witness[(i, k)] = out.solution[k].max(0.0);
                    }
                }
                LpStatus::Optimal | LpStatus::Infeasible => {
                    return Ok(Containment::NotContained { row: i })
                }
                status => return Err(Error::solver(status, "solving a Farkas containment row")),
            }
        }
        Ok(Containment::Contained {
            witness: Some(witness),
        })
    }

    /// Bounds `(lo, hi)` when every row touches exactly one coordinate and
    /// each coordinate is bounded on both sides.
    pub fn as_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        for (i, row) in self.c.row_iter().enumerate() {
            let mut nz = row.iter().enumerate().filter(|(_, v)| **v != 0.0);
            let (j, &a) = nz.next()?;
            if nz.next().is_some() {
                return None;
            }
            let bound = self.d[i] / a;
            if a > 0.0 {
                hi[j] = hi[j].min(bound);
            } else {
                lo[j] = lo[j].max(bound);
            }
        }
        if lo.iter().chain(hi.iter()).all(|v| v.is_finite()) {
            Some((lo, hi))
        } else {
            None
        }
    }

    pub fn enumerate_vertices(&self) -> Result<VertexList> {
        self.enumerate_vertices_capped(Caps::default().vertices)
    }

    /// Boxes get their sign patterns directly; other polytopes go through
    /// every `n`-subset of rows with a feasibility filter.
    pub fn enumerate_vertices_capped(&self, cap: usize) -> Result<VertexList> {
        let n = self.dim();
        if n > cap {
            return Err(Error::CapExceeded {
                op: "vertex enumeration",
                dim: n,
                cap,
            });
        }
        if let Some((lo, hi)) = self.as_box() {
            if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                return Err(Error::Empty);
            }
            let mut vertices: Vec<DVector<f64>> = (0..1usize << n)
                .map(|mask| {
                    DVector::from_iterator(
                        n,
                        (0..n).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }),
                    )
                })
                .collect();
            dedup_points(&mut vertices, 1e-12);
            return Ok(VertexList { vertices });
        }
        if self.is_empty()? {
            return Err(Error::Empty);
        }
        if !self.is_bounded()? {
            return Err(Error::Unbounded);
        }

        let rows = self.num_rows();
        let scale = 1.0 + self.d.amax();
        let mut vertices = Vec::new();
        let mut subset: Vec<usize> = (0..n).collect();
        loop {
            let mut m = DMatrix::zeros(n, n);
            let mut b = DVector::zeros(n);
            for (r, &i) in subset.iter().enumerate() {
                m.row_mut(r).copy_from(&self.c.row(i));
                b[r] = self.d[i];
            }
            let lu = m.lu();
            if let Some(x) = lu.solve(&b) {
                if x.iter().all(|v| v.is_finite()) && self.max_violation(&x) <= POINT_TOL * scale {
                    vertices.push(x);
                }
            }
            if !next_combination(&mut subset, rows) {
                break;
            }
        }
        dedup_points(&mut vertices, 1e-8 * scale);
        if vertices.is_empty() {
            return Err(Error::Empty);
        }
        Ok(VertexList { vertices })
    }

    /// Drops zero rows, parallel duplicates and LP-redundant rows.
    pub fn remove_redundant(&self) -> Result<Polyhedron> {
        let n = self.dim();
        let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
        for (i, row) in self.c.row_iter().enumerate() {
            let a = row.transpose();
            let norm = a.norm();
            if norm <= 1e-12 {
                if self.d[i] < -POINT_TOL {
                    return Polyhedron::empty(n);
                }
                continue;
            }
            rows.push((a / norm, self.d[i] / norm));
        }
        if rows.is_empty() {
            return Polyhedron::whole_space(n);
        }
        rows.sort_by(|x, y| lex_cmp(&x.0, &y.0).then(x.1.total_cmp(&y.1)));
        let mut uniq: Vec<(DVector<f64>, f64)> = Vec::new();
        for (a, b) in rows {
            match uniq.last() {
                Some((pa, _)) if (pa - &a).amax() <= 1e-10 => {}
                _ => uniq.push((a, b)),
            }
        }

        let mut keep = vec![true; uniq.len()];
        for i in 0..uniq.len() {
            let mut lp = LinearProgram::new(n);
            for (k, (a, b)) in uniq.iter().enumerate() {
                if !keep[k] {
                    continue;
                }
                let rhs = if k == i { b + 1.0 } else { *b };
                lp.add_le(a.iter().copied().enumerate(), rhs);
            }
            for (j, v) in uniq[i].0.iter().enumerate() {
                lp.set_objective(j, -v);
            }
            let out = lp::solve(&lp, POINT_TOL);
            match out.status {
                LpStatus::Optimal => {
                    if -out.objective_value <= uniq[i].1 + 1e-9 {
                        keep[i] = false;
                    }
                }
                LpStatus::Unbounded => {}
                LpStatus::Infeasible => return Polyhedron::empty(n),
                status => return Err(Error::solver(status, "removing redundant rows")),
            }
        }
        let kept: Vec<&(DVector<f64>, f64)> =
            uniq.iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| r).collect();
        let c = DMatrix::from_fn(kept.len(), n, |i, j| kept[i].0[j]);
        let d = DVector::from_iterator(kept.len(), kept.iter().map(|r| r.1));
        Polyhedron::new(c, d)
    }

    pub fn project(&self, keep: &[usize]) -> Result<Polyhedron> {
        self.project_capped(keep, Caps::default().projection)
    }

    /// Fourier–Motzkin elimination of every coordinate not in `keep`, with
    /// redundancy removal after each step. The result's coordinates follow
    /// the order of `keep`.
    pub fn project_capped(&self, keep: &[usize], cap: usize) -> Result<Polyhedron> {
        let n = self.dim();
        if n > cap {
            return Err(Error::CapExceeded {
                op: "projection",
                dim: n,
                cap,
            });
        }
        if keep.is_empty() || keep.iter().any(|&k| k >= n) {
            return Err(Error::InvalidDimension(format!(
                "projection indices {keep:?} invalid for dimension {n}"
            )));
        }
        let mut cols: Vec<usize> = (0..n).collect();
        let mut current = self.clone();
        loop {
            let pending: Vec<usize> = (0..cols.len()).filter(|&j| !keep.contains(&cols[j])).collect();
            if pending.is_empty() {
                break;
            }
            let cost = |j: usize| {
                let pos = current.c.column(j).iter().filter(|v| **v > 1e-12).count();
                let neg = current.c.column(j).iter().filter(|v| **v < -1e-12).count();
                pos * neg
            };
            let j = *pending.iter().min_by_key(|&&j| cost(j)).unwrap();
            current = current.eliminate(j)?;
            cols.remove(j);
            if current.d.iter().any(|v| *v < 0.0) && current.is_empty()? {
                return Polyhedron::empty(keep.len());
            }
        }
        let order: Vec<usize> = keep
            .iter()
            .map(|k| cols.iter().position(|c| c == k).unwrap())
            .collect();
        let c = DMatrix::from_fn(current.num_rows(), keep.len(), |i, j| current.c[(i, order[j])]);
        Polyhedron::new(c, current.d)
    }

    /// One Fourier–Motzkin step on column `j`.
    fn eliminate(&self, j: usize) -> Result<Polyhedron> {
        let n = self.dim();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..self.num_rows() {
            let a = self.c[(i, j)];
            let scale = self.c.row(i).amax().max(1e-300);
            if a.abs() <= 1e-12 * scale {
                let row: Vec<f64> = (0..n).filter(|&k| k != j).map(|k| self.c[(i, k)]).collect();
                out.push((row, self.d[i]));
            } else if a > 0.0 {
                pos.push(i);
            } else {
                neg.push(i);
            }
        }
        for &p in &pos {
            for &q in &neg {
                let wp = -self.c[(q, j)];
                let wq = self.c[(p, j)];
                let row: Vec<f64> = (0..n)
                    .filter(|&k| k != j)
                    .map(|k| wp * self.c[(p, k)] + wq * self.c[(q, k)])
                    .collect();
                out.push((row, wp * self.d[p] + wq * self.d[q]));
            }
        }
        if out.is_empty() {
            return Polyhedron::whole_space(n - 1);
        }
        let c = DMatrix::from_fn(out.len(), n - 1, |i, k| out[i].0[k]);
        let d = DVector::from_iterator(out.len(), out.iter().map(|r| r.1));
        Polyhedron::new(c, d)?.remove_redundant()
    }

    pub fn minkowski_sum(&self, other: &Polyhedron) -> Result<Polyhedron> {
        self.minkowski_sum_capped(other, Caps::default().minkowski)
    }

    /// `P ⊕ Q` as the projection onto `z` of `{(z, x) : x ∈ P, z − x ∈ Q}`.
    pub fn minkowski_sum_capped(&self, other: &Polyhedron, cap: usize) -> Result<Polyhedron> {
        self.check_dim(other.dim())?;
        let n = self.dim();
        if n > cap {
            return Err(Error::CapExceeded {
                op: "Minkowski sum",
                dim: n,
                cap,
            });
        }
        let (rp, rq) = (self.num_rows(), other.num_rows());
        let mut c = DMatrix::zeros(rp + rq, 2 * n);
        c.view_mut((0, n), (rp, n)).copy_from(&self.c);
        c.view_mut((rp, 0), (rq, n)).copy_from(&other.c);
        c.view_mut((rp, n), (rq, n)).copy_from(&(-&other.c));
        let d = DVector::from_iterator(rp + rq, self.d.iter().chain(other.d.iter()).copied());
        let lifted = Polyhedron::new(c, d)?;
        let keep: Vec<usize> = (0..n).collect();
        lifted.project_capped(&keep, 2 * cap)
    }

    /// Convex hull of planar points as an H-representation with one row per edge.
    pub fn hull_2d(points: &[DVector<f64>]) -> Result<Polyhedron> {
        let hull = convex_hull_2d(points);
        if hull.len() < 3 {
            return Err(Error::InvalidDimension("degenerate planar hull".into()));
        }
        let k = hull.len();
        let mut c = DMatrix::zeros(k, 2);
        let mut d = DVector::zeros(k);
        for i in 0..k {
            let (p, q) = (hull[i], hull[(i + 1) % k]);
            // counter-clockwise order: outward normal is (dy, -dx)
            let nx = q[1] - p[1];
            let ny = p[0] - q[0];
            let norm = (nx * nx + ny * ny).sqrt();
            c[(i, 0)] = nx / norm;
            c[(i, 1)] = ny / norm;
            d[i] = (nx * p[0] + ny * p[1]) / norm;
        }
        Polyhedron::new(c, d)
    }
}

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// collinear points.
pub fn convex_hull_2d(points: &[DVector<f64>]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let scale = pts.iter().map(|p| p[0].abs().max(p[1].abs())).fold(1.0, f64::max);
    let eps = 1e-12 * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > 1e-10 {
            return x.total_cmp(y);
        }
    }
    Ordering::Equal
}

fn dedup_points(points: &mut Vec<DVector<f64>>, tol: f64) {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        if !out.iter().any(|q| (q - &p).amax() <= tol) {
            out.push(p);
        }
    }
    *points = out;
}

/// Advances `subset` (strictly increasing indices below `n`) to the next
/// combination in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Serialize, Deserialize)]
struct PolyhedronJson {
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    d: Vec<f64>,
    #[serde(default)]
    contains_origin: Option<bool>,
}

impl Serialize for Polyhedron {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyhedronJson {
            c: matrix_to_rows(&self.c),
            d: self.d.iter().copied().collect(),
            contains_origin: Some(self.contains_origin),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polyhedron {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PolyhedronJson::deserialize(de)?;
        let p = Polyhedron::from_rows(&raw.c, raw.d).map_err(D::Error::custom)?;
        if raw.contains_origin == Some(true) && !p.contains_origin {
            return Err(D::Error::custom(
                "polyhedron tagged contains_origin but d has a negative entry",
            ));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn has_vertex(list: &VertexList, x: &[f64]) -> bool {
        list.vertices.iter().any(|p| (p - v(x)).amax() < 1e-9)
    }

    #[test]
    fn unit_box_layout() {
        let b = Polyhedron::unit_box(1).unwrap();
        assert_eq!(b.matrix().as_slice(), &[1.0, -1.0]);
        assert_eq!(b.rhs().as_slice(), &[1.0, 1.0]);
        assert!(b.contains_origin());
        assert_eq!(Polyhedron::unit_box(20).unwrap().num_rows(), 40);
        assert!(matches!(Polyhedron::unit_box(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn scaling() {
        let b = Polyhedron::unit_box(2).unwrap();
        assert_eq!(b.scale(10.0).unwrap().rhs().as_slice(), &[10.0; 4]);
        assert_eq!(b.scale(1.0).unwrap(), b);
        let half = Polyhedron::unit_box(1).unwrap().scale(0.5).unwrap();
        assert_eq!(half.as_box(), Some((vec![-0.5], vec![0.5])));
        assert!(matches!(b.scale(0.0), Err(Error::InvalidScale(_))));
        assert!(matches!(b.scale(-1.0), Err(Error::InvalidScale(_))));
    }

    #[test]
    fn containment_examples() {
        for n in 1..=4 {
            let b = Polyhedron::unit_box(n).unwrap();
            let b2 = b.scale(2.0).unwrap();
            match b2.contains(&b, CONTAINMENT_TOL).unwrap() {
                Containment::Contained { witness: Some(t) } => {
                    // T = 0.5 I is a valid witness; check ours satisfies the same conditions
                    let th = &t * b.matrix();
                    assert!((th - b2.matrix()).amax() < 1e-9);
                    let tb = &t * b.rhs();
                    assert!((0..tb.len()).all(|i| tb[i] <= b2.rhs()[i] + 1e-7));
                    assert!(t.iter().all(|x| *x >= 0.0));
                }
                other => panic!("expected containment, got {other:?}"),
            }
            assert!(!b.contains(&b2, CONTAINMENT_TOL).unwrap().holds());
            assert!(b.contains(&b, CONTAINMENT_TOL).unwrap().holds());
        }
    }

    #[test]
    fn half_identity_is_a_farkas_witness() {
        // 2·B³ written as {x : 0.5·x ≤ 1, −0.5·x ≤ 1}
        let b = Polyhedron::unit_box(3).unwrap();
        let outer = Polyhedron::new(b.matrix() * 0.5, b.rhs().clone()).unwrap();
        let t = DMatrix::<f64>::identity(6, 6) * 0.5;
        assert_eq!(&t * b.matrix(), *outer.matrix());
        assert!((&t * b.rhs()).iter().zip(outer.rhs().iter()).all(|(l, r)| l <= r));
        assert!(outer.contains(&b, CONTAINMENT_TOL).unwrap().holds());
    }

    #[test]
    fn empty_inner_is_vacuously_contained() {
        let outer = Polyhedron::unit_box(2).unwrap();
        let empty = Polyhedron::from_bounds(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(empty.is_empty().unwrap());
        assert!(matches!(
            outer.contains(&empty, CONTAINMENT_TOL).unwrap(),
            Containment::Contained { witness: None }
        ));
    }

    #[test]
    fn containment_dimension_mismatch() {
        let a = Polyhedron::unit_box(2).unwrap();
        let b = Polyhedron::unit_box(3).unwrap();
        assert!(matches!(a.contains(&b, 1e-7), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn unbounded_inner_is_not_contained() {
        let halfplane = Polyhedron::from_rows(&[vec![1.0, 0.0]], vec![1.0]).unwrap();
        let outer = Polyhedron::unit_box(2).unwrap().scale(100.0).unwrap();
        assert!(!outer.contains(&halfplane, CONTAINMENT_TOL).unwrap().holds());
    }

    #[test]
    fn box_vertices() {
        let sq = Polyhedron::unit_box(2).unwrap().enumerate_vertices().unwrap();
        assert_eq!(sq.len(), 4);
        for x in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            assert!(has_vertex(&sq, &x));
        }
        assert_eq!(Polyhedron::unit_box(12).unwrap().enumerate_vertices().unwrap().len(), 4096);
        assert!(matches!(
            Polyhedron::unit_box(13).unwrap().enumerate_vertices(),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn simplex_vertices() {
        let s = Polyhedron::from_rows(
            &[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]],
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        let vs = s.enumerate_vertices().unwrap();
        assert_eq!(vs.len(), 3);
        for x in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
            assert!(has_vertex(&vs, &x));
        }
    }

    #[test]
    fn unbounded_vertex_enumeration_fails() {
        let quadrant = Polyhedron::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0]).unwrap();
        assert!(matches!(quadrant.enumerate_vertices(), Err(Error::Unbounded)));
        assert!(!quadrant.is_bounded().unwrap());
    }

    #[test]
    fn project_square_onto_axis() {
        let p = Polyhedron::unit_box(2).unwrap().project(&[0]).unwrap();
        let (lo, hi) = p.as_box().unwrap();
        assert!((lo[0] + 1.0).abs() < 1e-12 && (hi[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn project_diagonal_segment() {
        // {x = y, |y| ≤ 1}
        let p = Polyhedron::from_rows(
            &[vec![1.0, -1.0], vec![-1.0, 1.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![0.0, 0.0, 1.0, 1.0],
        )
        .unwrap();
        let q = p.project(&[0]).unwrap();
        let (lo, hi) = q.as_box().unwrap();
        assert!((lo[0] + 1.0).abs() < 1e-12 && (hi[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn project_keeps_requested_order() {
        let b = Polyhedron::from_bounds(&[0.0, -1.0, -2.0], &[1.0, 1.0, 2.0]).unwrap();
        let q = b.project(&[2, 0]).unwrap();
        let (lo, hi) = q.as_box().unwrap();
        assert_eq!(lo, vec![-2.0, 0.0]);
        assert_eq!(hi, vec![2.0, 1.0]);
    }

    #[test]
    fn projection_cap() {
        let b = Polyhedron::unit_box(13).unwrap();
        assert!(matches!(b.project(&[0]), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn minkowski_intervals() {
        let b = Polyhedron::unit_box(1).unwrap();
        let s = b.minkowski_sum(&b).unwrap();
        let (lo, hi) = s.as_box().unwrap();
        assert!((lo[0] + 2.0).abs() < 1e-12 && (hi[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn minkowski_with_origin_is_identity() {
        let p = Polyhedron::from_rows(
            &[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, -1.0]],
            vec![2.0, 1.0, 1.0],
        )
        .unwrap();
        let origin = Polyhedron::from_bounds(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let s = p.minkowski_sum(&origin).unwrap();
        assert!(s.contains(&p, 1e-7).unwrap().holds());
        assert!(p.contains(&s, 1e-7).unwrap().holds());
    }

    #[test]
    fn minkowski_cap() {
        let b = Polyhedron::unit_box(5).unwrap();
        assert!(matches!(b.minkowski_sum(&b), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn hull_of_square_points() {
        let pts = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0]), v(&[0.0, 1.0]), v(&[0.5, 0.5])];
        let h = Polyhedron::hull_2d(&pts).unwrap();
        assert_eq!(h.num_rows(), 4);
        assert!(h.contains_point(&v(&[0.5, 0.5]), 0.0));
        assert!(!h.contains_point(&v(&[1.5, 0.5]), 1e-9));
    }

    #[test]
    fn ray_extent_of_box() {
        let b = Polyhedron::unit_box(2).unwrap();
        assert!((b.ray_extent(&v(&[1.0, 0.0])) - 1.0).abs() < 1e-15);
        let diag = v(&[1.0, 1.0]) / 2f64.sqrt();
        assert!((b.ray_extent(&diag) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn json_roundtrip_and_origin_tag() {
        let b = Polyhedron::unit_box(2).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"C\""));
        let back: Polyhedron = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        let bad = r#"{"C": [[1.0]], "d": [-1.0], "contains_origin": true}"#;
        assert!(serde_json::from_str::<Polyhedron>(bad).is_err());
        let ragged = r#"{"C": [[1.0, 2.0], [1.0]], "d": [1.0, 1.0]}"#;
        assert!(serde_json::from_str::<Polyhedron>(ragged).is_err());
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut s = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut s, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
    }
}
