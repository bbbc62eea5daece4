//! Linear programming contract plus the reference dense simplex solver.
//!
//! A [`LinearProgram`] minimizes `cᵀw` subject to sparse equality rows
//! `A_eq·w = b_eq` and inequality rows `A_in·w ≤ b_in`. Variables are free
//! unless flagged nonnegative. Every certificate and membership query in the
//! crate reduces to a single call of [`LpSolver::solve`].
//!
//! The reference solver is a two-phase primal simplex on a dense tableau.
//! Free variables are split into nonnegative pairs, pricing is Dantzig's rule
//! with a fallback to Bland's rule after a run of degenerate pivots, and the
//! ratio test is the two-pass Harris test. Pivots only touch the nonzero
//! pattern of the pivot row and column, which keeps the highly structured
//! certificate LPs cheap even when the tableau itself is large.
//!
//! Rows are equilibrated before the solve, and the right-hand sides of `≤`
//! rows are relaxed by a tiny deterministic amount to break degeneracy. The
//! relaxation is removed from the final basis; if that basis is then no
//! longer feasible the solve is repeated without it.

use std::fmt;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Sparse row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    nonneg: Vec<bool>,
    eq_rows: Vec<SparseRow>,
    eq_rhs: Vec<f64>,
    le_rows: Vec<SparseRow>,
    le_rhs: Vec<f64>,
}

impl LinearProgram {
    /// Feasibility problem over `num_vars` free variables.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            nonneg: vec![false; num_vars],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rows.len()
    }

    pub fn num_le(&self) -> usize {
        self.le_rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn is_nonneg(&self, var: usize) -> bool {
        self.nonneg[var]
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, nonneg: bool) -> usize {
        self.num_vars += 1;
        self.objective.push(0.0);
        self.nonneg.push(nonneg);
        self.num_vars - 1
    }

    pub fn set_nonneg(&mut self, var: usize) {
        self.nonneg[var] = true;
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_eq<I: IntoIterator<Item = (usize, f64)>>(&mut self, row: I, rhs: f64) -> usize {
        self.eq_rows.push(compact(row));
        self.eq_rhs.push(rhs);
        self.eq_rows.len() - 1
    }

    pub fn add_le<I: IntoIterator<Item = (usize, f64)>>(&mut self, row: I, rhs: f64) -> usize {
        self.le_rows.push(compact(row));
        self.le_rhs.push(rhs);
        self.le_rows.len() - 1
    }

    /// `a·w ≥ rhs`, stored as `−a·w ≤ −rhs`.
    pub fn add_ge<I: IntoIterator<Item = (usize, f64)>>(&mut self, row: I, rhs: f64) -> usize {
        self.add_le(row.into_iter().map(|(j, v)| (j, -v)), -rhs)
    }

    pub fn set_eq_rhs(&mut self, row: usize, rhs: f64) {
        self.eq_rhs[row] = rhs;
    }

    pub fn set_le_rhs(&mut self, row: usize, rhs: f64) {
        self.le_rhs[row] = rhs;
    }

    /// Checks column indices and finiteness of every coefficient.
    pub fn validate(&self) -> Result<(), String> {
        let rows = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .chain(self.le_rows.iter().zip(&self.le_rhs));
        for (row, rhs) in rows {
            if !rhs.is_finite() {
                return Err(format!("non-finite right-hand side {rhs}"));
            }
            for &(j, v) in row {
                if j >= self.num_vars {
                    return Err(format!("column {j} out of range ({} vars)", self.num_vars));
                }
                if !v.is_finite() {
                    return Err(format!("non-finite coefficient {v} in column {j}"));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err("non-finite objective coefficient".into());
        }
        Ok(())
    }

    /// Largest constraint violation of `w`: equality residual, inequality
    /// excess and negativity of nonnegative variables, in that order.
    pub fn violations(&self, w: &[f64]) -> (f64, f64, f64) {
        let dot = |row: &SparseRow| row.iter().map(|&(j, v)| v * w[j]).sum::<f64>();
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r) - b).abs())
            .fold(0.0, f64::max);
        let le = self
            .le_rows
            .iter()
            .zip(&self.le_rhs)
            .map(|(r, b)| dot(r) - b)
            .fold(0.0, f64::max);
        let neg = w
            .iter()
            .zip(&self.nonneg)
            .filter(|(_, &nn)| nn)
            .map(|(x, _)| -x)
            .fold(0.0, f64::max);
        (eq, le, neg)
    }

    pub fn objective_value(&self, w: &[f64]) -> f64 {
        self.objective.iter().zip(w).map(|(c, x)| c * x).sum()
    }

    /// Writes the LP in a line-oriented text format, one constraint per line.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "vars {}", self.num_vars)?;
        let nn: Vec<String> = (0..self.num_vars)
            .filter(|&j| self.nonneg[j])
            .map(|j| j.to_string())
            .collect();
        writeln!(out, "nonneg {}", nn.join(" "))?;
        let obj: Vec<String> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| format!("{c:+e}*w{j}"))
            .collect();
        writeln!(out, "min {}", obj.join(" "))?;
        for (kind, rows, rhs) in [
            ("=", &self.eq_rows, &self.eq_rhs),
            ("<=", &self.le_rows, &self.le_rhs),
        ] {
            for (row, b) in rows.iter().zip(rhs.iter()) {
                let terms: Vec<String> = row.iter().map(|(j, v)| format!("{v:+e}*w{j}")).collect();
                writeln!(out, "{} {kind} {b:e}", terms.join(" "))?;
            }
        }
        Ok(())
    }
}

fn compact<I: IntoIterator<Item = (usize, f64)>>(row: I) -> SparseRow {
    let mut row: SparseRow = row.into_iter().filter(|(_, v)| *v != 0.0).collect();
    row.sort_by_key(|(j, _)| *j);
    row.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
    row.retain(|(_, v)| *v != 0.0);
    row
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal solution, empty unless `status` is optimal.
    pub solution: Vec<f64>,
    /// `cᵀw` at the solution; NaN unless optimal.
    pub objective_value: f64,
    pub iterations: usize,
}

impl LpOutcome {
    fn without_solution(status: LpStatus, iterations: usize) -> Self {
        LpOutcome {
            status,
            solution: Vec::new(),
            objective_value: f64::NAN,
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Primal feasibility tolerance, checked against the original rows.
    pub feas_tol: f64,
    /// Reduced-cost optimality tolerance.
    pub opt_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
    /// Iteration cap; `None` picks a bound from the tableau size.
    pub max_iters: Option<usize>,
    /// Size of the right-hand-side relaxation used against degeneracy;
    /// 0 disables it.
    pub perturbation: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-8,
            pivot_tol: 1e-9,
            degenerate_limit: 50,
            max_iters: None,
            perturbation: 1e-7,
        }
    }
}

impl SolveOptions {
    pub fn with_feas_tol(feas_tol: f64) -> Self {
        SolveOptions {
            feas_tol,
            ..Default::default()
        }
    }
}

/// Seam for swapping LP backends. Implementations must be deterministic.
pub trait LpSolver: Send + Sync {
    fn solve(&self, lp: &LinearProgram) -> LpOutcome;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DenseSimplex {
    pub options: SolveOptions,
}

impl DenseSimplex {
    pub fn new(options: SolveOptions) -> Self {
        DenseSimplex { options }
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> LpOutcome {
        if let Err(msg) = lp.validate() {
            log::warn!("malformed LP: {msg}");
            return LpOutcome::without_solution(LpStatus::NumericalFailure, 0);
        }
        let out = Tableau::build(lp, self.options).run(lp);
        if out.status == LpStatus::NumericalFailure && self.options.perturbation > 0.0 {
            let plain = SolveOptions {
                perturbation: 0.0,
                ..self.options
            };
            log::debug!("retrying without perturbation after {} pivots", out.iterations);
            let retry = Tableau::build(lp, plain).run(lp);
            return LpOutcome {
                iterations: out.iterations + retry.iterations,
                ..retry
            };
        }
        out
    }
}

/// Solves `lp` with the reference solver.
pub fn solve(lp: &LinearProgram, feas_tol: f64) -> LpOutcome {
    DenseSimplex::new(SolveOptions::with_feas_tol(feas_tol)).solve(lp)
}

const ARTIFICIAL: usize = usize::MAX;

/// Deterministic value in `[0, 1)` per row.
fn unit_hash(i: usize) -> f64 {
    let h = (i as u64 ^ 0x5851_F42D_4C95_7F2D).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn max_violation(lp: &LinearProgram, w: &[f64]) -> f64 {
    let (eq, le, neg) = lp.violations(w);
    eq.max(le).max(neg)
}
const DROP: f64 = 1e-13;
const REFRESH_EVERY: usize = 500;

/// Column of the standard-form tableau.
#[derive(Clone, Copy)]
enum Col {
    /// `sign * w[var]`.
    Var { var: usize, sign: f64 },
    Slack,
}

struct Tableau {
    opts: SolveOptions,
    rows: usize,
    width: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    cols: Vec<Col>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    iterations: usize,
    degenerate_run: usize,
    pivot_row: Vec<(usize, f64)>,
    /// `(row, slack column, shift)` of every relaxed inequality.
    shifts: Vec<(usize, usize, f64)>,
}

enum Step {
    Optimal,
    Unbounded,
    Stalled,
    Pivoted,
}

impl Tableau {
    fn build(lp: &LinearProgram, opts: SolveOptions) -> Self {
        let mut cols = Vec::new();
        let mut var_cols = Vec::with_capacity(lp.num_vars);
        for var in 0..lp.num_vars {
            let plus = cols.len();
            cols.push(Col::Var { var, sign: 1.0 });
            let minus = if lp.nonneg[var] {
                None
            } else {
                cols.push(Col::Var { var, sign: -1.0 });
                Some(cols.len() - 1)
            };
            var_cols.push((plus, minus));
        }
        let first_slack = cols.len();
        cols.extend(std::iter::repeat_n(Col::Slack, lp.le_rows.len()));

        let rows = lp.eq_rows.len() + lp.le_rows.len();
        let width = cols.len();
        let mut a = vec![0.0; rows * width];
        let mut rhs = vec![0.0; rows];
        let mut basis = vec![ARTIFICIAL; rows];
        let mut is_basic = vec![false; width];
        let mut shifts = Vec::new();

        let all_rows = lp
            .eq_rows
            .iter()
            .zip(&lp.eq_rhs)
            .map(|(r, b)| (r, *b, None))
            .chain(
                lp.le_rows
                    .iter()
                    .zip(&lp.le_rhs)
                    .enumerate()
                    .map(|(k, (r, b))| (r, *b, Some(first_slack + k))),
            );
        for (i, (row, b, slack)) in all_rows.enumerate() {
            let flip = if b < 0.0 { -1.0 } else { 1.0 };
            let line = &mut a[i * width..(i + 1) * width];
            for &(var, v) in row {
                let (plus, minus) = var_cols[var];
                line[plus] += flip * v;
                if let Some(minus) = minus {
                    line[minus] -= flip * v;
                }
            }
            rhs[i] = flip * b;
            let scale = line.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                line.iter_mut().for_each(|v| *v /= scale);
                rhs[i] /= scale;
            }
            if let Some(s) = slack {
                // the slack is rescaled with its row so that it stays a unit column
                line[s] = flip;
                if flip > 0.0 {
                    basis[i] = s;
                    is_basic[s] = true;
                    if opts.perturbation > 0.0 {
                        let shift = opts.perturbation * (1.0 + unit_hash(i));
                        rhs[i] += shift;
                        shifts.push((i, s, shift));
                    }
                }
            }
        }

        let cost = cols
            .iter()
            .map(|c| match *c {
                Col::Var { var, sign } => sign * lp.objective[var],
                Col::Slack => 0.0,
            })
            .collect();

        Tableau {
            opts,
            rows,
            width,
            a,
            rhs,
            basis,
            is_basic,
            cols,
            cost,
            reduced: vec![0.0; width],
            iterations: 0,
            degenerate_run: 0,
            pivot_row: Vec::new(),
            shifts,
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let max_iters = self
            .opts
            .max_iters
            .unwrap_or(20 * (self.rows + self.width) + 1000);

        if self.basis.contains(&ARTIFICIAL) {
            if let Err(status) = self.iterate(true, max_iters) {
                let status = match status {
                    LpStatus::Unbounded => LpStatus::NumericalFailure,
                    other => other,
                };
                return LpOutcome::without_solution(status, self.iterations);
            }
            let infeasibility: f64 = (0..self.rows)
                .filter(|&i| self.basis[i] == ARTIFICIAL)
                .map(|i| self.rhs[i])
                .sum();
            if infeasibility > self.opts.feas_tol {
                return LpOutcome::without_solution(LpStatus::Infeasible, self.iterations);
            }
            self.evict_artificials();
        }

        if let Err(status) = self.iterate(false, max_iters) {
            return LpOutcome::without_solution(status, self.iterations);
        }

        if !self.remove_shifts() {
            return LpOutcome::without_solution(LpStatus::NumericalFailure, self.iterations);
        }
        let mut w = self.basic_solution(lp.num_vars);
        let mut worst = max_violation(lp, &w);
        if worst > self.opts.feas_tol {
            // pivoting error accumulated; recompute the vertex of the final basis
            if let Some(polished) = self.resolve_basis(lp) {
                let polished_worst = max_violation(lp, &polished);
                if polished_worst < worst {
                    w = polished;
                    worst = polished_worst;
                }
            }
        }
        if worst > self.opts.feas_tol {
            log::debug!(
                "simplex solution violates constraints by {worst:e} after {} pivots",
                self.iterations
            );
            return LpOutcome::without_solution(LpStatus::NumericalFailure, self.iterations);
        }
        LpOutcome {
            status: LpStatus::Optimal,
            objective_value: lp.objective_value(&w),
            solution: w,
            iterations: self.iterations,
        }
    }

    /// Undoes the right-hand-side relaxation. The tableau column of the slack
    /// of row `i` is `B⁻¹·e_i`, so the unshifted basic values are
    /// `x_B − Σ shift_i·B⁻¹·e_i`. Reduced costs do not depend on the right-hand
    /// side, so the basis stays optimal whenever these values are feasible.
    fn remove_shifts(&mut self) -> bool {
        if self.shifts.is_empty() {
            return true;
        }
        let w = self.width;
        for i in 0..self.rows {
            let line = &self.a[i * w..(i + 1) * w];
            let correction: f64 = self.shifts.iter().map(|&(_, s, shift)| shift * line[s]).sum();
            self.rhs[i] -= correction;
        }
        let worst = (0..self.rows)
            .filter(|&i| self.basis[i] != ARTIFICIAL)
            .map(|i| self.rhs[i])
            .fold(0.0, f64::min);
        if worst < -self.opts.feas_tol {
            log::debug!("basis infeasible by {:e} once the relaxation is removed", -worst);
            return false;
        }
        for v in &mut self.rhs {
            *v = v.max(0.0);
        }
        self.shifts.clear();
        true
    }

    fn basic_solution(&self, num_vars: usize) -> Vec<f64> {
        let mut w = vec![0.0; num_vars];
        for (i, &c) in self.basis.iter().enumerate() {
            if c == ARTIFICIAL {
                continue;
            }
            if let Col::Var { var, sign } = self.cols[c] {
                w[var] += sign * self.rhs[i];
            }
        }
        w
    }

    /// Solves `B·x_B = b` for the final basis directly from the original
    /// rows with a dense LU factorization.
    fn resolve_basis(&self, lp: &LinearProgram) -> Option<Vec<f64>> {
        let n = self.rows;
        let mut position = vec![usize::MAX; self.width];
        for (i, &c) in self.basis.iter().enumerate() {
            if c != ARTIFICIAL {
                position[c] = i;
            }
        }
        let mut var_cols = vec![(usize::MAX, usize::MAX); lp.num_vars];
        for (c, col) in self.cols.iter().enumerate() {
            if let Col::Var { var, sign } = *col {
                if sign > 0.0 {
                    var_cols[var].0 = c;
                } else {
                    var_cols[var].1 = c;
                }
            }
        }
        let mut bm = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        let first_slack = self.width - lp.le_rows.len();
        let rows = lp.eq_rows.iter().zip(&lp.eq_rhs).chain(lp.le_rows.iter().zip(&lp.le_rhs));
        for (i, (row, rhs)) in rows.enumerate() {
            b[i] = *rhs;
            for &(var, v) in row {
                let (plus, minus) = var_cols[var];
                if position[plus] != usize::MAX {
                    bm[(i, position[plus])] += v;
                }
                if minus != usize::MAX && position[minus] != usize::MAX {
                    bm[(i, position[minus])] -= v;
                }
            }
            if i >= lp.eq_rows.len() {
                let s = first_slack + i - lp.eq_rows.len();
                if position[s] != usize::MAX {
                    bm[(i, position[s])] = 1.0;
                }
            }
        }
        for (i, &c) in self.basis.iter().enumerate() {
            if c == ARTIFICIAL {
                bm[(i, i)] = 1.0;
            }
        }
        let lu = bm.clone().lu();
        let mut x = lu.solve(&b)?;
        // one round of iterative refinement
        let r = &b - &bm * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
        let mut w = vec![0.0; lp.num_vars];
        for (i, &c) in self.basis.iter().enumerate() {
            if c == ARTIFICIAL {
                continue;
            }
            if let Col::Var { var, sign } = self.cols[c] {
                let v = if lp.nonneg[var] || sign < 0.0 { x[i].max(0.0) } else { x[i] };
                w[var] += sign * v;
            }
        }
        Some(w)
    }

    /// Pivots until optimal. Reduced costs are updated incrementally and
    /// recomputed from scratch periodically and before any terminal verdict.
    fn iterate(&mut self, phase_one: bool, max_iters: usize) -> std::result::Result<(), LpStatus> {
        self.refresh_costs(phase_one);
        let mut fresh = true;
        loop {
            if self.iterations >= max_iters {
                return Err(LpStatus::NumericalFailure);
            }
            if !fresh && self.iterations.is_multiple_of(REFRESH_EVERY) {
                self.refresh_costs(phase_one);
                fresh = true;
            }
            match self.step(phase_one) {
                Step::Pivoted => fresh = false,
                Step::Optimal | Step::Unbounded if !fresh => {
                    self.refresh_costs(phase_one);
                    fresh = true;
                }
                Step::Optimal => return Ok(()),
                Step::Unbounded => return Err(LpStatus::Unbounded),
                Step::Stalled => return Err(LpStatus::NumericalFailure),
            }
        }
    }

    fn refresh_costs(&mut self, phase_one: bool) {
        if phase_one {
            self.phase_one_costs();
        } else {
            self.phase_two_costs();
        }
    }

    /// Reduced costs of `min Σ artificials`.
    fn phase_one_costs(&mut self) {
        self.reduced.iter_mut().for_each(|d| *d = 0.0);
        for i in 0..self.rows {
            if self.basis[i] != ARTIFICIAL {
                continue;
            }
            let line = &self.a[i * self.width..(i + 1) * self.width];
            for (d, &v) in self.reduced.iter_mut().zip(line) {
                *d -= v;
            }
        }
        self.zero_basic_costs();
    }

    fn phase_two_costs(&mut self) {
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.rows {
            let b = self.basis[i];
            if b == ARTIFICIAL || self.cost[b] == 0.0 {
                continue;
            }
            let cb = self.cost[b];
            let line = &self.a[i * self.width..(i + 1) * self.width];
            for (d, &v) in self.reduced.iter_mut().zip(line) {
                if v != 0.0 {
                    *d -= cb * v;
                }
            }
        }
        self.zero_basic_costs();
    }

    fn zero_basic_costs(&mut self) {
        for (d, &basic) in self.reduced.iter_mut().zip(&self.is_basic) {
            if basic {
                *d = 0.0;
            }
        }
    }

    /// Pivots remaining zero-level artificials out of the basis where a
    /// usable pivot exists; rows without one are linearly redundant.
    fn evict_artificials(&mut self) {
        for i in 0..self.rows {
            if self.basis[i] != ARTIFICIAL {
                continue;
            }
            self.rhs[i] = 0.0;
            let line = &self.a[i * self.width..(i + 1) * self.width];
            let best = line
                .iter()
                .enumerate()
                .filter(|(j, _)| !self.is_basic[*j])
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()).then(y.0.cmp(&x.0)));
            if let Some((j, v)) = best {
                if v.abs() > 1e-7 {
                    self.pivot(i, j);
                }
            }
        }
    }

    fn step(&mut self, phase_one: bool) -> Step {
        let bland = self.degenerate_run >= self.opts.degenerate_limit;
        let tol = self.opts.opt_tol;
        let entering = if bland {
            (0..self.width).find(|&j| !self.is_basic[j] && self.reduced[j] < -tol)
        } else {
            let mut best = None;
            let mut best_val = -tol;
            for j in 0..self.width {
                let d = self.reduced[j];
                if d < best_val && !self.is_basic[j] {
                    best_val = d;
                    best = Some(j);
                }
            }
            best
        };
        let Some(q) = entering else {
            return Step::Optimal;
        };

        let Some(p) = self.ratio_test(q, phase_one, bland) else {
            return Step::Unbounded;
        };
        let piv = self.a[p * self.width + q];
        if piv.abs() < self.opts.pivot_tol {
            return Step::Stalled;
        }
        let step = self.rhs[p] / piv;
        if step.abs() <= 1e-12 {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
        self.pivot(p, q);
        self.iterations += 1;
        Step::Pivoted
    }

    /// Two-pass Harris ratio test. Zero-level artificials left over from
    /// phase one block any move that would change them.
    fn ratio_test(&self, q: usize, phase_one: bool, bland: bool) -> Option<usize> {
        let ptol = self.opts.pivot_tol;
        let delta = 1e-9;
        let col = |i: usize| self.a[i * self.width + q];

        if !phase_one {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                if self.basis[i] == ARTIFICIAL {
                    let v = col(i).abs();
                    if v > ptol && best.is_none_or(|(_, bv)| v > bv) {
                        best = Some((i, v));
                    }
                }
            }
            if let Some((i, _)) = best {
                return Some(i);
            }
        }

        let mut bound = f64::INFINITY;
        for i in 0..self.rows {
            let v = col(i);
            if v > ptol {
                let r = (self.rhs[i].max(0.0) + delta) / v;
                if r < bound {
                    bound = r;
                }
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut chosen: Option<(usize, f64, f64)> = None;
        for i in 0..self.rows {
            let v = col(i);
            if v <= ptol {
                continue;
            }
            let r = self.rhs[i].max(0.0) / v;
            if r > bound {
                continue;
            }
            let better = match chosen {
                None => true,
                Some((ci, cr, cv)) => {
                    if bland {
                        r < cr || (r == cr && self.basis[i] < self.basis[ci])
                    } else {
                        v > cv
                    }
                }
            };
            if better {
                chosen = Some((i, r, v));
            }
        }
        chosen.map(|(i, _, _)| i)
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width;
        let piv = self.a[p * w + q];
        let inv = 1.0 / piv;

        self.pivot_row.clear();
        {
            let line = &mut self.a[p * w..(p + 1) * w];
            for (j, v) in line.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP {
                        *v = 0.0;
                    } else {
                        self.pivot_row.push((j, *v));
                    }
                }
            }
            line[q] = 1.0;
        }
        self.rhs[p] *= inv;
        let rhs_p = self.rhs[p];

        for i in 0..self.rows {
            if i == p {
                continue;
            }
            let f = self.a[i * w + q];
            if f == 0.0 {
                continue;
            }
            let line = &mut self.a[i * w..(i + 1) * w];
            for &(j, v) in &self.pivot_row {
                let x = line[j] - f * v;
                line[j] = if x.abs() < DROP { 0.0 } else { x };
            }
            line[q] = 0.0;
            let r = self.rhs[i] - f * rhs_p;
            self.rhs[i] = if r < 0.0 && r > -1e-9 { 0.0 } else { r };
        }

        let f = self.reduced[q];
        if f != 0.0 {
            for &(j, v) in &self.pivot_row {
                self.reduced[j] -= f * v;
            }
        }
        self.reduced[q] = 0.0;

        let leaving = self.basis[p];
        if leaving != ARTIFICIAL {
            self.is_basic[leaving] = false;
        }
        self.basis[p] = q;
        self.is_basic[q] = true;
    }
}
