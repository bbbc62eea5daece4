//! Exact small-scale baselines: the vertex-based maximal scaling `α*`, the
//! maximal control invariant set of planar systems, an explicit planar
//! construction of the certified set, bisection ray probing and the
//! block-diagonal benchmark systems.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::invariance::{build_stacked, LinearSystem, ProblemData, StackedSystem};
use crate::linalg::{self, block_diag, is_controllable, spectral_radius};
use crate::lp::{self, LinearProgram, LpStatus, SolveOptions};
use crate::polyhedra::{Polyhedron, CONTAINMENT_TOL};
use crate::{Error, Result};

/// Outcome of the vertex LP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaStar {
    /// Largest `α` such that every vertex of `αΩ` lies in `Q_N^x(αΩ, U, X)`.
    pub alpha: f64,
    /// Number of vertex constraint groups.
    pub groups: usize,
}

fn vertex_group(lp: &mut LinearProgram, s: &StackedSystem, alpha: usize, v: &DVector<f64>) {
    let nu = s.horizon * s.m;
    let u0 = lp.num_vars();
    for _ in 0..nu {
        lp.add_var(false);
    }
    for r in 0..s.num_rows() {
        // Ḡ_x·v·α + Ḡ_u·u − g̃·α ≤ ĝ
        let gx: f64 = (0..s.n).map(|j| s.gbar[(r, j)] * v[j]).sum();
        let mut terms = vec![(alpha, gx - s.gtilde[r])];
        terms.extend((0..nu).map(|l| (u0 + l, s.gbar[(r, s.n + l)])));
        lp.add_le(terms, s.ghat[r]);
    }
}

fn max_alpha(lp: &LinearProgram) -> Result<f64> {
    let out = lp::solve(lp, SolveOptions::default().feas_tol);
    match out.status {
        LpStatus::Optimal => Ok(out.solution[0]),
        LpStatus::Unbounded => Ok(f64::INFINITY),
        status => Err(Error::solver(status, "solving the vertex scaling LP")),
    }
}

/// `α*` as the minimum of one small LP per vertex of `Ω`. The feasible set of
/// `α` for a single vertex is an interval containing 0 because `ĝ ≥ 0`, so the
/// minimum equals the optimum of the joint LP over all vertices.
pub fn exact_alpha_star(problem: &ProblemData) -> Result<AlphaStar> {
    let s = build_stacked(problem)?;
    let vertices = problem.omega.enumerate_vertices()?;
    let mut alpha = f64::INFINITY;
    for v in &vertices.vertices {
        let mut lp = LinearProgram::new(0);
        let a = lp.add_var(true);
        lp.set_objective(a, -1.0);
        vertex_group(&mut lp, &s, a, v);
        alpha = alpha.min(max_alpha(&lp)?);
    }
    Ok(AlphaStar {
        alpha,
        groups: vertices.len(),
    })
}

/// The same quantity from one LP with a shared `α` and one input sequence per vertex.
pub fn exact_alpha_star_joint(problem: &ProblemData) -> Result<AlphaStar> {
    let s = build_stacked(problem)?;
    let vertices = problem.omega.enumerate_vertices()?;
    let mut lp = LinearProgram::new(0);
    let a = lp.add_var(true);
    lp.set_objective(a, -1.0);
    for v in &vertices.vertices {
        vertex_group(&mut lp, &s, a, v);
    }
    Ok(AlphaStar {
        alpha: max_alpha(&lp)?,
        groups: vertices.len(),
    })
}

#[derive(Clone, Debug)]
pub struct MaxInvariant {
    pub set: Polyhedron,
    /// Number of backward steps until the fixed point was reached.
    pub iterations: usize,
}

/// States of `X` that can be mapped into `target` by some input of `U`.
pub fn one_step_backward(
    system: &LinearSystem,
    target: &Polyhedron,
    x_set: &Polyhedron,
    u_set: &Polyhedron,
) -> Result<Polyhedron> {
    let (n, m) = (system.n(), system.m());
    let (c, d) = (target.matrix(), target.rhs());
    let rows = c.nrows() + u_set.num_rows() + x_set.num_rows();
    let mut lc = DMatrix::zeros(rows, n + m);
    let mut ld = DVector::zeros(rows);
    lc.view_mut((0, 0), (c.nrows(), n)).copy_from(&(c * system.a()));
    lc.view_mut((0, n), (c.nrows(), m)).copy_from(&(c * system.b()));
    ld.rows_mut(0, c.nrows()).copy_from(d);
    let r = c.nrows();
    lc.view_mut((r, n), (u_set.num_rows(), m)).copy_from(u_set.matrix());
    ld.rows_mut(r, u_set.num_rows()).copy_from(u_set.rhs());
    let r = r + u_set.num_rows();
    lc.view_mut((r, 0), (x_set.num_rows(), n)).copy_from(x_set.matrix());
    ld.rows_mut(r, x_set.num_rows()).copy_from(x_set.rhs());
    let keep: Vec<usize> = (0..n).collect();
    Polyhedron::new(lc, ld)?.project(&keep)?.remove_redundant()
}

/// Fixed point of `C_0 = X`, `C_{j+1} = X ∩ Pre(C_j)` for planar systems.
pub fn maximal_invariant_2d(
    system: &LinearSystem,
    x_set: &Polyhedron,
    u_set: &Polyhedron,
    max_iters: usize,
) -> Result<MaxInvariant> {
    if system.n() != 2 {
        return Err(Error::InvalidDimension(format!(
            "maximal invariant iteration is planar only, got n = {}",
            system.n()
        )));
    }
    let mut current = x_set.remove_redundant()?;
    for j in 1..=max_iters {
        let next = one_step_backward(system, &current, x_set, u_set)?;
        if next.contains(&current, CONTAINMENT_TOL)?.holds() {
            return Ok(MaxInvariant {
                set: next,
                iterations: j,
            });
        }
        current = next;
    }
    Err(Error::NonConvergence(max_iters))
}

/// `Q_k^x(αΩ, U, X)` by lifting over the input sequence and projecting.
pub fn k_step_set(problem: &ProblemData, alpha: f64, k: usize) -> Result<Polyhedron> {
    let (n, m) = (problem.n(), problem.m());
    let pw = linalg::powers(problem.system.a(), k)?;
    let b = problem.system.b();
    let dim = n + k * m;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut state_rows = |c: &DMatrix<f64>, d: &DVector<f64>, j: usize| {
        for i in 0..c.nrows() {
            let mut row = vec![0.0; dim];
            let cx = c.row(i) * &pw[j];
            row[..n].copy_from_slice(cx.as_slice());
            for t in 0..j {
                let cw = c.row(i) * &pw[j - 1 - t] * b;
                row[n + t * m..n + (t + 1) * m].copy_from_slice(cw.as_slice());
            }
            rows.push(row);
            rhs.push(d[i]);
        }
    };
    state_rows(problem.omega.matrix(), &(problem.omega.rhs() * alpha), k);
    if let Some(x_set) = &problem.state_set {
        for j in 0..=k {
            state_rows(x_set.matrix(), x_set.rhs(), j);
        }
    }
    let (g, gv) = (problem.input_set.matrix(), problem.input_set.rhs());
    for t in 0..k {
        for i in 0..g.nrows() {
            let mut row = vec![0.0; dim];
            for l in 0..m {
                row[n + t * m + l] = g[(i, l)];
            }
            rows.push(row);
            rhs.push(gv[i]);
        }
    }
    let keep: Vec<usize> = (0..n).collect();
    Polyhedron::from_rows(&rows, rhs)?.project(&keep)?.remove_redundant()
}

/// Explicit planar `co(Q_1^x(αΩ) ∪ … ∪ Q_N^x(αΩ))` from the vertices of each `Q_k^x`.
pub fn union_hull_2d(problem: &ProblemData, alpha: f64) -> Result<Polyhedron> {
    if problem.n() != 2 {
        return Err(Error::InvalidDimension(format!(
            "explicit union hull is planar only, got n = {}",
            problem.n()
        )));
    }
    let mut points = Vec::new();
    for k in 1..=problem.horizon {
        let q = k_step_set(problem, alpha, k)?;
        points.extend(q.enumerate_vertices()?.vertices);
    }
    Polyhedron::hull_2d(&points)
}

/// Bisection along `r·v` for a convex set containing the origin. The bracket
/// is doubled until `r_hi·v` falls outside; the loop stops once its width is
/// at most `rel_tol·max(1, r)`.
pub fn dichotomy_ray<F>(mut inside: F, v: &DVector<f64>, r_hi: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(&DVector<f64>) -> Result<bool>,
{
    const MAX_DOUBLINGS: usize = 60;
    if !(r_hi > 0.0 && r_hi.is_finite()) {
        return Err(Error::InvalidScale(r_hi));
    }
    let (mut lo, mut hi) = (0.0, r_hi);
    let mut doublings = 0;
    while inside(&(v * hi))? {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Bracket(hi));
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
    }
    while hi - lo > rel_tol * lo.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if inside(&(v * mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Uniformly distributed unit vector.
pub fn random_direction<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Attempts per accepted random system or bench block.
pub const REJECTION_BUDGET: usize = 1000;

/// Controllable system with `A = Q·diag(λ)·Qᵀ`, `|λ_i| ∈ [0.1, 1.5]` with
/// random signs, `Q` orthogonal and standard normal `B`.
pub fn random_system<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<LinearSystem> {
    for _ in 0..REJECTION_BUDGET {
        let q = random_orthogonal(n, rng);
        let lambda = DVector::from_fn(n, |_, _| {
            let mag = rng.random_range(0.1..=1.5);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        });
        let a = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
        let b = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        if is_controllable(&a, &b) {
            return LinearSystem::new(a, b);
        }
    }
    Err(Error::RejectionBudget {
        attempts: REJECTION_BUDGET,
        accepted: 0,
        wanted: 1,
    })
}

/// Seed of instance `index` in a sweep seeded with `base`.
pub fn instance_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Sweep instance: `Ω = Bⁿ`, `U = 10·Bᵐ`, `X = 100·Bⁿ`, `m = ⌈n/2⌉`.
pub fn random_box_problem(n: usize, horizon: usize, seed: u64) -> Result<ProblemData> {
    let m = n.div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let system = random_system(n, m, &mut rng)?;
    ProblemData::new(
        system,
        Polyhedron::unit_box(n)?,
        Some(Polyhedron::unit_box(n)?.scale(100.0)?),
        Polyhedron::unit_box(m)?.scale(10.0)?,
        horizon,
    )
}

/// Planar single-input block with its maximal control invariant set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchBlock {
    #[serde(with = "crate::invariance::rows")]
    pub a: DMatrix<f64>,
    #[serde(with = "crate::invariance::rows")]
    pub b: DMatrix<f64>,
    /// Maximal control invariant set in `10·B²` with inputs in `10·B¹`.
    pub sigma: Polyhedron,
    pub iterations: usize,
}

/// `A = P⁻¹·diag(A_i)·P`, `B = P⁻¹·diag(B_i)` with planar blocks; in
/// `y = Px` the system decouples and `Σ = Π Σ_i` is its maximal control
/// invariant set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockDiagonalBench {
    pub seed: u64,
    pub blocks: Vec<BenchBlock>,
    #[serde(with = "crate::invariance::rows")]
    pub p: DMatrix<f64>,
}

/// Block state and input bounds.
pub const BLOCK_STATE_BOUND: f64 = 10.0;
pub const BLOCK_INPUT_BOUND: f64 = 10.0;
/// Blocks whose maximal invariant iteration needs more steps are rejected.
pub const BLOCK_MAX_ITERS: usize = 5;

impl BlockDiagonalBench {
    pub fn n(&self) -> usize {
        2 * self.blocks.len()
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn system(&self) -> Result<LinearSystem> {
        let p_inv = self
            .p
            .clone()
            .try_inverse()
            .ok_or(Error::SingularDynamics(f64::INFINITY))?;
        let a_blocks: Vec<_> = self.blocks.iter().map(|b| b.a.clone()).collect();
        let b_blocks: Vec<_> = self.blocks.iter().map(|b| b.b.clone()).collect();
        let a = &p_inv * block_diag(&a_blocks) * &self.p;
        let b = &p_inv * block_diag(&b_blocks);
        LinearSystem::new(a, b)
    }

    /// `Σ` in block coordinates.
    pub fn sigma_y(&self) -> Result<Polyhedron> {
        let mut iter = self.blocks.iter();
        let first = iter.next().ok_or_else(|| Error::InvalidProblem("bench has no blocks".into()))?;
        iter.try_fold(first.sigma.clone(), |acc, b| acc.product(&b.sigma))
    }

    /// `P⁻¹Σ = {x : C_Σ·P·x ≤ d_Σ}`.
    pub fn sigma_x(&self) -> Result<Polyhedron> {
        self.sigma_y()?.preimage(&self.p)
    }

    /// `Ω = P⁻¹Bⁿ`, `X = 10·P⁻¹Bⁿ`, `U = 10·Bᵐ`.
    pub fn problem(&self, horizon: usize) -> Result<ProblemData> {
        let omega = Polyhedron::unit_box(self.n())?.preimage(&self.p)?;
        let x_set = omega.scale(BLOCK_STATE_BOUND)?;
        let u_set = Polyhedron::unit_box(self.m())?.scale(BLOCK_INPUT_BOUND)?;
        ProblemData::new(self.system()?, omega, Some(x_set), u_set, horizon)
    }
}

fn sample_block<R: Rng>(rng: &mut R) -> Result<Option<BenchBlock>> {
    let a = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..=2.0));
    let b = DMatrix::from_fn(2, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let rho = spectral_radius(&a);
    if !(rho > 1.0 && rho <= 2.0) || !is_controllable(&a, &b) {
        return Ok(None);
    }
    let system = match LinearSystem::new(a.clone(), b.clone()) {
        Ok(s) => s,
        Err(Error::SingularDynamics(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let x_set = Polyhedron::unit_box(2)?.scale(BLOCK_STATE_BOUND)?;
    let u_set = Polyhedron::unit_box(1)?.scale(BLOCK_INPUT_BOUND)?;
    match maximal_invariant_2d(&system, &x_set, &u_set, BLOCK_MAX_ITERS) {
        Ok(mi) => Ok(Some(BenchBlock {
            a,
            b,
            sigma: mi.set,
            iterations: mi.iterations,
        })),
        Err(Error::NonConvergence(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `P = Q₁·diag(s)·Q₂` with `s_i ∈ [1, 10]`, so `cond(P) ≤ 10`.
fn sample_similarity<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let q1 = random_orthogonal(n, rng);
    let q2 = random_orthogonal(n, rng);
    let s = DVector::from_fn(n, |_, _| 10f64.powf(rng.random_range(0.0..=1.0)));
    q1 * DMatrix::from_diagonal(&s) * q2
}

/// Rejection-samples `block_count` planar blocks (unstable, controllable,
/// maximal invariant set reached within five backward steps) and a random
/// well-conditioned similarity `P`.
pub fn build_bench(block_count: usize, seed: u64) -> Result<BlockDiagonalBench> {
    if block_count == 0 {
        return Err(Error::InvalidDimension("bench needs at least one block".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(block_count);
    let mut attempts = 0;
    while blocks.len() < block_count {
        if attempts == REJECTION_BUDGET * block_count {
            return Err(Error::RejectionBudget {
                attempts,
                accepted: blocks.len(),
                wanted: block_count,
            });
        }
        attempts += 1;
        if let Some(block) = sample_block(&mut rng)? {
            blocks.push(block);
        }
    }
    let p = sample_similarity(2 * block_count, &mut rng);
    log::debug!(
        "bench with {block_count} blocks after {attempts} attempts, cond(P) = {:.3}",
        linalg::condition_number(&p)
    );
    Ok(BlockDiagonalBench { seed, blocks, p })
}
