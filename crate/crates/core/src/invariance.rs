//! N-step invariance certificates.
//!
//! For `x⁺ = Ax + Bu` with `x ∈ X`, `u ∈ U` and a seed set `Ω = {x : Hx ≤ h}`,
//! the stacked matrices `Ḡ`, `ĝ`, `g̃` describe the lifted set of states and
//! input sequences that reach `Ω` in `N` steps. A nonnegative `T` and a matrix
//! `M` that preserves the state block with `T·H̄ = Ḡ·M` certify that every
//! point of `Ω` can be driven back into `Ω` in exactly `N` steps, which makes
//! the convex hull of the `k`-step sets, `k ≤ N`, control invariant.
//!
//! Inputs in the stacked vector `(x, u_1, …, u_N)` are ordered so that `u_1`
//! is applied last and `u_N` first; the terminal block row is
//! `[H·A^N | H·B | H·A·B | … | H·A^{N−1}·B]`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, matrix_from_rows, matrix_to_rows};
use crate::lp::{DenseSimplex, LinearProgram, LpSolver, LpStatus, SolveOptions};
use crate::polyhedra::Polyhedron;
use crate::{Error, Result};

/// `γ` below this is reported as `α = +∞`.
pub const GAMMA_FLOOR: f64 = 1e-12;
/// Condition number above which `A` is treated as singular.
pub const SINGULAR_COND: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.nrows(),
            });
        }
        if b.ncols() == 0 {
            return Err(Error::InvalidDimension("B needs at least one column".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite system matrix".into()));
        }
        let cond = linalg::condition_number(&a);
        if cond > SINGULAR_COND {
            return Err(Error::SingularDynamics(cond));
        }
        Ok(LinearSystem { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

/// System, seed set `Ω`, optional state set `X`, input set `U` and horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemData {
    pub system: LinearSystem,
    pub omega: Polyhedron,
    pub state_set: Option<Polyhedron>,
    pub input_set: Polyhedron,
    pub horizon: usize,
}

impl ProblemData {
    pub fn new(
        system: LinearSystem,
        omega: Polyhedron,
        state_set: Option<Polyhedron>,
        input_set: Polyhedron,
        horizon: usize,
    ) -> Result<Self> {
        let (n, m) = (system.n(), system.m());
        if horizon == 0 {
            return Err(Error::InvalidProblem("horizon N must be ≥ 1".into()));
        }
        let dims = [
            ("omega", omega.dim(), n),
            ("input_set", input_set.dim(), m),
            ("state_set", state_set.as_ref().map_or(n, Polyhedron::dim), n),
        ];
        for (name, found, expected) in dims {
            if found != expected {
                return Err(Error::InvalidProblem(format!(
                    "{name} has dimension {found}, expected {expected}"
                )));
            }
        }
        let origin_ok = omega.contains_origin()
            && input_set.contains_origin()
            && state_set.as_ref().is_none_or(Polyhedron::contains_origin);
        if !origin_ok {
            return Err(Error::InvalidProblem(
                "omega, state and input sets must contain the origin".into(),
            ));
        }
        Ok(ProblemData {
            system,
            omega,
            state_set,
            input_set,
            horizon,
        })
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        ProblemData::new(
            self.system.clone(),
            self.omega.clone(),
            self.state_set.clone(),
            self.input_set.clone(),
            horizon,
        )
    }

    pub fn with_omega(&self, omega: Polyhedron) -> Result<Self> {
        ProblemData::new(
            self.system.clone(),
            omega,
            self.state_set.clone(),
            self.input_set.clone(),
            self.horizon,
        )
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn m(&self) -> usize {
        self.system.m()
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    omega: Polyhedron,
    #[serde(default)]
    state_set: Option<Polyhedron>,
    input_set: Polyhedron,
    #[serde(rename = "N")]
    horizon: usize,
}

impl Serialize for ProblemData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProblemJson {
            a: matrix_to_rows(self.system.a()),
            b: matrix_to_rows(self.system.b()),
            omega: self.omega.clone(),
            state_set: self.state_set.clone(),
            input_set: self.input_set.clone(),
            horizon: self.horizon,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProblemData {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ProblemJson::deserialize(de)?;
        let a = matrix_from_rows(&raw.a).map_err(D::Error::custom)?;
        let b = matrix_from_rows(&raw.b).map_err(D::Error::custom)?;
        let system = LinearSystem::new(a, b).map_err(D::Error::custom)?;
        ProblemData::new(system, raw.omega, raw.state_set, raw.input_set, raw.horizon)
            .map_err(D::Error::custom)
    }
}

/// Stacked matrices over `x̄ = (x, u_1, …, u_N) ∈ R^{n+Nm}`.
#[derive(Clone, Debug)]
pub struct StackedSystem {
    pub gbar: DMatrix<f64>,
    /// `ḡ = ĝ + g̃`.
    pub gbar_rhs: DVector<f64>,
    pub hbar: DMatrix<f64>,
    /// `(0, g, …, g, f, …, f)`.
    pub ghat: DVector<f64>,
    /// `(h, 0, …, 0)`.
    pub gtilde: DVector<f64>,
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub n_h: usize,
    pub n_g: usize,
    pub n_f: usize,
}

impl StackedSystem {
    pub fn nbar(&self) -> usize {
        self.n + self.horizon * self.m
    }

    pub fn num_rows(&self) -> usize {
        self.gbar.nrows()
    }

    pub fn omega_rows(&self) -> Range<usize> {
        0..self.n_h
    }

    pub fn input_rows(&self) -> Range<usize> {
        self.n_h..self.n_h + self.horizon * self.n_g
    }

    pub fn state_rows(&self) -> Range<usize> {
        let start = self.n_h + self.horizon * self.n_g;
        start..self.num_rows()
    }

    /// Column range of `u_j`, `j ∈ 1..=N`.
    pub fn input_cols(&self, j: usize) -> Range<usize> {
        let start = self.n + (j - 1) * self.m;
        start..start + self.m
    }
}

/// Assembles `Ḡ`, `ḡ`, `H̄`, `ĝ`, `g̃`. With a state set, the state block
/// lists the constraints on `x_N, x_{N−1}, …, x_1, x_0` in that order.
pub fn build_stacked(problem: &ProblemData) -> Result<StackedSystem> {
    let (n, m, horizon) = (problem.n(), problem.m(), problem.horizon);
    let a = problem.system.a();
    let b = problem.system.b();
    let (hm, hv) = (problem.omega.matrix(), problem.omega.rhs());
    let (gm, gv) = (problem.input_set.matrix(), problem.input_set.rhs());
    let n_h = hm.nrows();
    let n_g = gm.nrows();
    let n_f = problem.state_set.as_ref().map_or(0, Polyhedron::num_rows);

    let pw = linalg::powers(a, horizon)?;
    // A^k·B for k = 0..N−1
    let ab: Vec<DMatrix<f64>> = pw[..horizon].iter().map(|p| p * b).collect();

    let nbar = n + horizon * m;
    let rows = n_h + horizon * n_g + (horizon + 1) * n_f;
    let mut gbar = DMatrix::zeros(rows, nbar);
    let mut ghat = DVector::zeros(rows);
    let mut gtilde = DVector::zeros(rows);
    let col = |j: usize| n + (j - 1) * m;

    gbar.view_mut((0, 0), (n_h, n)).copy_from(&(hm * &pw[horizon]));
    for j in 1..=horizon {
        gbar.view_mut((0, col(j)), (n_h, m)).copy_from(&(hm * &ab[j - 1]));
    }
    gtilde.rows_mut(0, n_h).copy_from(hv);

    for j in 1..=horizon {
        let r = n_h + (j - 1) * n_g;
        gbar.view_mut((r, col(j)), (n_g, m)).copy_from(gm);
        ghat.rows_mut(r, n_g).copy_from(gv);
    }

    if let Some(x_set) = &problem.state_set {
        let (fm, fv) = (x_set.matrix(), x_set.rhs());
        let base = n_h + horizon * n_g;
        for (block, steps) in (0..=horizon).rev().enumerate() {
            let r = base + block * n_f;
            gbar.view_mut((r, 0), (n_f, n)).copy_from(&(fm * &pw[steps]));
            // after `steps` steps the inputs u_{N−steps+1}, …, u_N have been applied
            for j in (horizon - steps + 1)..=horizon {
                let power = j - (horizon - steps) - 1;
                gbar.view_mut((r, col(j)), (n_f, m)).copy_from(&(fm * &ab[power]));
            }
            ghat.rows_mut(r, n_f).copy_from(fv);
        }
    }

    let mut hbar = DMatrix::zeros(n_h, nbar);
    hbar.view_mut((0, 0), (n_h, n)).copy_from(hm);

    Ok(StackedSystem {
        gbar_rhs: &ghat + &gtilde,
        gbar,
        hbar,
        ghat,
        gtilde,
        n,
        m,
        horizon,
        n_h,
        n_g,
        n_f,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceCertificate {
    /// Nonnegative `n_ḡ × n_h` multiplier matrix.
    #[serde(with = "rows")]
    pub t: DMatrix<f64>,
    /// `n̄ × n̄` lifting map whose first `n` rows are `[I 0 … 0]`.
    #[serde(with = "rows")]
    pub m: DMatrix<f64>,
    /// 1 for a plain certificate; the minimized scaling otherwise.
    pub gamma: f64,
    /// `1/γ`, infinite when `γ` vanishes.
    pub alpha: f64,
}

/// Residuals of the certificate conditions.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertificateCheck {
    pub min_t: f64,
    pub lifting_residual: f64,
    pub rhs_excess: f64,
    pub state_block_residual: f64,
}

impl CertificateCheck {
    pub fn within(&self, tol: f64) -> bool {
        self.min_t >= -tol
            && self.lifting_residual <= tol
            && self.rhs_excess <= tol
            && self.state_block_residual <= tol
    }
}

impl InvarianceCertificate {
    /// Checks `T ≥ 0`, `T·H̄ = Ḡ·M`, `T·h ≤ γ·ĝ + g̃` and the state-block rows of `M`.
    pub fn check(&self, stacked: &StackedSystem, h: &DVector<f64>) -> CertificateCheck {
        let n = stacked.n;
        let lifting = &self.t * &stacked.hbar - &stacked.gbar * &self.m;
        let rhs = &self.t * h - (&stacked.ghat * self.gamma + &stacked.gtilde);
        let mut block = self.m.rows(0, n).into_owned();
        for i in 0..n {
            block[(i, i)] -= 1.0;
        }
        CertificateCheck {
            min_t: self.t.min().min(0.0),
            lifting_residual: lifting.amax(),
            rhs_excess: rhs.max().max(0.0),
            state_block_residual: block.amax(),
        }
    }

    /// Linear map `x ↦ (u_1, …, u_N)` carried by `M`.
    pub fn input_gain(&self, n: usize) -> DMatrix<f64> {
        let rows = self.m.nrows() - n;
        self.m.view((n, 0), (rows, n)).into_owned()
    }
}

#[derive(Clone, Debug)]
pub enum Certification {
    Certified(InvarianceCertificate),
    /// The sufficient LP condition has no solution. This says nothing about
    /// whether the set is invariant.
    NotFound,
}

impl Certification {
    pub fn certificate(&self) -> Option<&InvarianceCertificate> {
        match self {
            Certification::Certified(c) => Some(c),
            Certification::NotFound => None,
        }
    }

    pub fn into_certificate(self) -> Option<InvarianceCertificate> {
        match self {
            Certification::Certified(c) => Some(c),
            Certification::NotFound => None,
        }
    }
}

/// How a stacked row obtains its multipliers. Rows that are positive
/// multiples of an earlier row reuse its `T` row; when `Ω` is centrally
/// symmetric, so do rows that are negative multiples, with the `T` entries
/// moved to the mirrored facets. Both substitutions are exact.
#[derive(Clone, Copy, Debug)]
enum RowLink {
    Own(usize),
    Copy { of: usize, scale: f64 },
    Mirror { of: usize, scale: f64 },
}

/// For every facet `k` of a centrally symmetric polytope, the facet `π(k)`
/// with `H_π(k) = −ρ_k·H_k`, `h_π(k) = ρ_k·h_k`, as `(π(k), 1/ρ_k)`.
fn mirror_facets(p: &Polyhedron) -> Option<Vec<(usize, f64)>> {
    let (c, d) = (p.matrix(), p.rhs());
    let norms: Vec<f64> = c.row_iter().map(|r| r.amax()).collect();
    if norms.contains(&0.0) {
        return None;
    }
    let mut out = Vec::with_capacity(c.nrows());
    for k in 0..c.nrows() {
        let partner = (0..c.nrows()).find(|&j| {
            let rho = norms[j] / norms[k];
            (0..c.ncols()).all(|i| (c[(j, i)] + rho * c[(k, i)]).abs() <= 1e-12 * norms[j])
                && (d[j] - rho * d[k]).abs() <= 1e-12 * (1.0 + d[j].abs())
        })?;
        out.push((partner, norms[k] / norms[partner]));
    }
    Some(out)
}

fn link_rows(stacked: &StackedSystem, symmetric: bool) -> (Vec<RowLink>, Vec<usize>) {
    let g = &stacked.gbar;
    let rows = stacked.num_rows();
    let norms: Vec<f64> = g.row_iter().map(|r| r.amax()).collect();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    let mut links = Vec::with_capacity(rows);
    let mut owners: Vec<usize> = Vec::new();
    for r in 0..rows {
        let mut link = RowLink::Own(owners.len());
        if norms[r] > 0.0 {
            for &o in &owners {
                let s = norms[r] / norms[o];
                if s == 0.0 || !close(stacked.ghat[r], s * stacked.ghat[o]) || !close(stacked.gtilde[r], s * stacked.gtilde[o]) {
                    continue;
                }
                let tol = 1e-12 * norms[r];
                let same = (0..g.ncols()).all(|i| (g[(r, i)] - s * g[(o, i)]).abs() <= tol);
                if same {
                    link = RowLink::Copy { of: o, scale: s };
                    break;
                }
                if symmetric && (0..g.ncols()).all(|i| (g[(r, i)] + s * g[(o, i)]).abs() <= tol) {
                    link = RowLink::Mirror { of: o, scale: s };
                    break;
                }
            }
        }
        if let RowLink::Own(_) = link {
            owners.push(r);
        }
        links.push(link);
    }
    (links, owners)
}

/// Variable layout of the certificate LP. `M` only enters through its
/// lower-left block `K` (rows `n..n̄`, columns `0..n`); the remaining free
/// entries are set to zero, which keeps `Ḡ·M` zero outside the state columns.
struct CertificateLp {
    lp: LinearProgram,
    n_h: usize,
    k_offset: usize,
    gamma: Option<usize>,
    links: Vec<RowLink>,
    owners: Vec<usize>,
    mirror: Option<Vec<(usize, f64)>>,
}

fn certificate_lp(stacked: &StackedSystem, omega: &Polyhedron, scaled: bool) -> CertificateLp {
    let (h, hv) = (omega.matrix(), omega.rhs());
    let mirror = mirror_facets(omega);
    let (links, owners) = link_rows(stacked, mirror.is_some());
    let (n, n_h) = (stacked.n, stacked.n_h);
    let nu = stacked.horizon * stacked.m;
    let k_offset = owners.len() * n_h;
    let mut lp = LinearProgram::new(k_offset + nu * n);
    for v in 0..k_offset {
        lp.set_nonneg(v);
    }
    let gamma = scaled.then(|| {
        let g = lp.add_var(true);
        lp.set_objective(g, 1.0);
        g
    });
    let t = |i: usize, k: usize| i * n_h + k;
    let kv = |l: usize, j: usize| k_offset + l * n + j;
    for (i, &r) in owners.iter().enumerate() {
        for j in 0..n {
            // Σ_k T[r,k]·H[k,j] − Σ_l Ḡ_u[r,l]·K[l,j] = Ḡ_x[r,j]
            let t_terms = (0..n_h).map(|k| (t(i, k), h[(k, j)]));
            let k_terms = (0..nu).map(|l| (kv(l, j), -stacked.gbar[(r, n + l)]));
            lp.add_eq(t_terms.chain(k_terms), stacked.gbar[(r, j)]);
        }
        let t_terms = (0..n_h).map(move |k| (t(i, k), hv[k]));
        match gamma {
            Some(g) => {
                lp.add_le(t_terms.chain([(g, -stacked.ghat[r])]), stacked.gtilde[r]);
            }
            None => {
                lp.add_le(t_terms, stacked.gbar_rhs[r]);
            }
        }
    }
    CertificateLp {
        lp,
        n_h,
        k_offset,
        gamma,
        links,
        owners,
        mirror,
    }
}

fn decode_certificate(stacked: &StackedSystem, layout: &CertificateLp, w: &[f64]) -> InvarianceCertificate {
    let n = stacked.n;
    let nbar = stacked.nbar();
    let n_h = layout.n_h;
    let own = DMatrix::from_fn(layout.owners.len(), n_h, |i, k| w[i * n_h + k].max(0.0));
    let mut t = DMatrix::zeros(stacked.num_rows(), n_h);
    for (r, link) in layout.links.iter().enumerate() {
        match *link {
            RowLink::Own(i) => t.row_mut(r).copy_from(&own.row(i)),
            RowLink::Copy { of, scale } => {
                let src = t.row(of).into_owned();
                t.row_mut(r).copy_from(&(src * scale));
            }
            RowLink::Mirror { of, scale } => {
                let mirror = layout.mirror.as_ref().expect("mirror links need a symmetric seed set");
                for (k, &(partner, ratio)) in mirror.iter().enumerate() {
                    t[(r, partner)] = scale * ratio * t[(of, k)];
                }
            }
        }
    }
    let mut m = DMatrix::zeros(nbar, nbar);
    for i in 0..n {
        m[(i, i)] = 1.0;
    }
    for l in 0..nbar - n {
        for j in 0..n {
            m[(n + l, j)] = w[layout.k_offset + l * n + j];
        }
    }
    let gamma = layout.gamma.map_or(1.0, |g| w[g].max(0.0));
    let alpha = if gamma < GAMMA_FLOOR {
        f64::INFINITY
    } else {
        1.0 / gamma
    };
    InvarianceCertificate { t, m, gamma, alpha }
}

/// Feasibility of `T·H̄ = Ḡ·M`, `T·h ≤ ḡ`, `T ≥ 0`, state-block preservation.
pub fn certify(problem: &ProblemData) -> Result<Certification> {
    certify_with(problem, &DenseSimplex::default())
}

pub fn certify_with(problem: &ProblemData, solver: &dyn LpSolver) -> Result<Certification> {
    let stacked = build_stacked(problem)?;
    let layout = certificate_lp(&stacked, &problem.omega, false);
    let out = solver.solve(&layout.lp);
    match out.status {
        LpStatus::Optimal => Ok(Certification::Certified(decode_certificate(
            &stacked,
            &layout,
            &out.solution,
        ))),
        LpStatus::Infeasible => Ok(Certification::NotFound),
        status => Err(Error::solver(status, "solving the certificate LP")),
    }
}

/// Minimizes `γ` subject to `T·H̄ = Ḡ·M`, `T·h ≤ γ·ĝ + g̃`, `T ≥ 0`, `γ ≥ 0`
/// and state-block preservation; `α = 1/γ` is the largest certified scaling
/// of `Ω`. `NotFound` means no scaling is certified at any `α`.
pub fn max_scaling(problem: &ProblemData) -> Result<Certification> {
    max_scaling_with(problem, &DenseSimplex::default())
}

pub fn max_scaling_with(problem: &ProblemData, solver: &dyn LpSolver) -> Result<Certification> {
    let stacked = build_stacked(problem)?;
    let layout = certificate_lp(&stacked, &problem.omega, true);
    let out = solver.solve(&layout.lp);
    match out.status {
        LpStatus::Optimal => Ok(Certification::Certified(decode_certificate(
            &stacked,
            &layout,
            &out.solution,
        ))),
        LpStatus::Infeasible => Ok(Certification::NotFound),
        status => Err(Error::solver(status, "solving the scaling LP")),
    }
}

/// The LP behind [`certify`], or [`max_scaling`] when `scaled`.
pub fn certificate_program(problem: &ProblemData, scaled: bool) -> Result<LinearProgram> {
    let stacked = build_stacked(problem)?;
    Ok(certificate_lp(&stacked, &problem.omega, scaled).lp)
}

/// Default solver with the given feasibility tolerance.
pub fn solver_with_tol(feas_tol: f64) -> DenseSimplex {
    DenseSimplex::new(SolveOptions::with_feas_tol(feas_tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    State,
    Input,
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// Step index: the state `x_step` or the input applied at `step`.
    pub step: usize,
    pub kind: ConstraintKind,
    pub row: usize,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ForwardCheck {
    Valid,
    Violation(Violation),
}

impl ForwardCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, ForwardCheck::Valid)
    }
}

/// States `x_0, …, x_k` under the given inputs, applied in order.
pub fn simulate(system: &LinearSystem, x0: &DVector<f64>, controls: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(x0.clone());
    for u in controls {
        let next = system.step(states.last().unwrap(), u);
        states.push(next);
    }
    states
}

fn worst_row(p: &Polyhedron, x: &DVector<f64>, rhs_scale: f64) -> (usize, f64) {
    let r = p.matrix() * x - p.rhs() * rhs_scale;
    r.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
}

/// Simulates `controls` (applied in order) from `x0` and checks every input
/// against `U`, every visited state including `x0` against `X`, and the final
/// state against `α·Ω`.
pub fn verify_forward(
    problem: &ProblemData,
    alpha: f64,
    x0: &DVector<f64>,
    controls: &[DVector<f64>],
    tol: f64,
) -> ForwardCheck {
    let states = simulate(&problem.system, x0, controls);
    if let Some(x_set) = &problem.state_set {
        for (step, x) in states.iter().enumerate() {
            let (row, excess) = worst_row(x_set, x, 1.0);
            if excess > tol {
                return ForwardCheck::Violation(Violation {
                    step,
                    kind: ConstraintKind::State,
                    row,
                    excess,
                });
            }
        }
    }
    for (step, u) in controls.iter().enumerate() {
        let (row, excess) = worst_row(&problem.input_set, u, 1.0);
        if excess > tol {
            return ForwardCheck::Violation(Violation {
                step,
                kind: ConstraintKind::Input,
                row,
                excess,
            });
        }
    }
    let last = states.last().unwrap();
    let (row, excess) = worst_row(&problem.omega, last, alpha);
    if excess > tol {
        return ForwardCheck::Violation(Violation {
            step: controls.len(),
            kind: ConstraintKind::Terminal,
            row,
            excess,
        });
    }
    ForwardCheck::Valid
}

pub(crate) mod rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{matrix_from_rows, matrix_to_rows};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        matrix_from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
