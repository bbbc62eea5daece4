//! Implicit representation of the certified invariant set
//! `Ω̄ = co(Q_1^x(αΩ), …, Q_N^x(αΩ))`.
//!
//! A point `x` lies in `Ω̄` iff it splits as `x = Σ_k z_k` with weights
//! `λ_k ≥ 0`, `Σ λ_k = 1`, and each `z_k` steered by inputs `w_{k,0}, …,
//! w_{k,k−1}` into `λ_k·αΩ` in `k` steps while every input stays in `λ_k·U`
//! and every visited state in `λ_k·X`. Inputs are indexed in time order:
//! `w_{k,t}` is applied at step `t`. Dividing a branch by `λ_k` recovers an
//! admissible trajectory of the original system.

use std::ops::Range;

use nalgebra::DVector;

use crate::invariance::{InvarianceCertificate, ProblemData};
use crate::linalg;
use crate::lp::{DenseSimplex, LinearProgram, LpSolver, LpStatus};
use crate::{Error, Result};

/// Branches with weight below this carry no usable trajectory.
pub const LAMBDA_FLOOR: f64 = 1e-9;

/// Variable layout `(x, z_1..z_N, w_{1,0}, w_{2,0}, w_{2,1}, …, λ_1..λ_N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
}

impl Layout {
    pub fn x(&self) -> Range<usize> {
        0..self.n
    }

    /// `z_k`, `k ∈ 1..=N`.
    pub fn z(&self, k: usize) -> Range<usize> {
        let start = self.n + (k - 1) * self.n;
        start..start + self.n
    }

    /// `w_{k,t}`, `t < k`.
    pub fn w(&self, k: usize, t: usize) -> Range<usize> {
        let start = self.n * (self.horizon + 1) + self.m * (k * (k - 1) / 2 + t);
        start..start + self.m
    }

    pub fn lambda(&self, k: usize) -> usize {
        self.n * (self.horizon + 1) + self.m * self.horizon * (self.horizon + 1) / 2 + k - 1
    }

    pub fn num_vars(&self) -> usize {
        self.n + self.horizon * self.n + self.horizon * (self.horizon + 1) / 2 * self.m + self.horizon
    }
}

#[derive(Clone, Debug)]
pub struct MembershipCertificate {
    pub x: DVector<f64>,
    /// `z[k−1]`.
    pub z: Vec<DVector<f64>>,
    /// `w[k−1][t]`.
    pub w: Vec<Vec<DVector<f64>>>,
    pub lambda: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum Membership {
    Inside(MembershipCertificate),
    Outside,
}

impl MembershipCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        let v = |x: &DVector<f64>| x.iter().copied().collect::<Vec<f64>>();
        serde_json::json!({
            "x": v(&self.x),
            "z": self.z.iter().map(v).collect::<Vec<_>>(),
            "w": self.w.iter().map(|wk| wk.iter().map(v).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "lambda": self.lambda,
        })
    }
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside(_))
    }
}

#[derive(Clone, Debug)]
pub struct RayHit {
    /// Largest `r` with `r·v ∈ Ω̄`.
    pub r: f64,
    pub certificate: MembershipCertificate,
}

/// One admissible trajectory recovered from a membership certificate.
#[derive(Clone, Debug)]
pub struct Branch {
    /// Number of steps `k`.
    pub steps: usize,
    pub weight: f64,
    /// `y_k = z_k/λ_k`.
    pub start: DVector<f64>,
    /// `w_{k,t}/λ_k` in application order.
    pub controls: Vec<DVector<f64>>,
}

impl Branch {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "steps": self.steps,
            "weight": self.weight,
            "start": self.start.iter().copied().collect::<Vec<f64>>(),
            "controls": self.controls.iter().map(|u| u.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct InvariantSetRep {
    problem: ProblemData,
    alpha: f64,
    layout: Layout,
    skeleton: LinearProgram,
    solver: DenseSimplex,
}

impl InvariantSetRep {
    pub fn new(problem: &ProblemData, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidScale(alpha));
        }
        let layout = Layout {
            n: problem.n(),
            m: problem.m(),
            horizon: problem.horizon,
        };
        let skeleton = build_skeleton(problem, alpha, layout)?;
        Ok(InvariantSetRep {
            problem: problem.clone(),
            alpha,
            layout,
            skeleton,
            solver: DenseSimplex::default(),
        })
    }

    pub fn from_certificate(problem: &ProblemData, cert: &InvarianceCertificate) -> Result<Self> {
        InvariantSetRep::new(problem, cert.alpha)
    }

    pub fn with_solver(mut self, solver: DenseSimplex) -> Self {
        self.solver = solver;
        self
    }

    pub fn problem(&self) -> &ProblemData {
        &self.problem
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Query-independent part of the membership LP.
    pub fn skeleton(&self) -> &LinearProgram {
        &self.skeleton
    }

    /// Membership LP for a fixed point.
    pub fn member_lp(&self, x: &DVector<f64>) -> Result<LinearProgram> {
        self.check_dim(x)?;
        let mut lp = self.skeleton.clone();
        for (i, var) in self.layout.x().enumerate() {
            lp.add_eq([(var, 1.0)], x[i]);
        }
        Ok(lp)
    }

    /// Ray LP: maximize `r ≥ 0` subject to `x = r·v`.
    pub fn ray_lp(&self, v: &DVector<f64>) -> Result<(LinearProgram, usize)> {
        self.check_dim(v)?;
        if v.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidProblem("ray direction must be nonzero".into()));
        }
        let mut lp = self.skeleton.clone();
        let r = lp.add_var(true);
        lp.set_objective(r, -1.0);
        for (i, var) in self.layout.x().enumerate() {
            lp.add_eq([(var, 1.0), (r, -v[i])], 0.0);
        }
        Ok((lp, r))
    }

    pub fn member(&self, x: &DVector<f64>) -> Result<Membership> {
        let lp = self.member_lp(x)?;
        let out = self.solver.solve(&lp);
        match out.status {
            LpStatus::Optimal => Ok(Membership::Inside(self.decode(&out.solution))),
            LpStatus::Infeasible => Ok(Membership::Outside),
            status => Err(Error::solver(status, "solving the membership LP")),
        }
    }

    /// Boundary distance of `Ω̄` along `v`. Unbounded when `Ω̄` contains the ray.
    pub fn ray_max(&self, v: &DVector<f64>) -> Result<RayHit> {
        let (lp, r) = self.ray_lp(v)?;
        let out = self.solver.solve(&lp);
        match out.status {
            LpStatus::Optimal => Ok(RayHit {
                r: out.solution[r],
                certificate: self.decode(&out.solution),
            }),
            LpStatus::Unbounded => Err(Error::Unbounded),
            status => Err(Error::solver(status, "solving the ray LP")),
        }
    }

    /// Trajectories of the branches with weight above [`LAMBDA_FLOOR`].
    pub fn extract_controls(&self, cert: &MembershipCertificate) -> Vec<Branch> {
        let mut out = Vec::new();
        for k in 1..=self.layout.horizon {
            let lambda = cert.lambda[k - 1];
            if lambda <= LAMBDA_FLOOR {
                continue;
            }
            out.push(Branch {
                steps: k,
                weight: lambda,
                start: &cert.z[k - 1] / lambda,
                controls: cert.w[k - 1].iter().map(|w| w / lambda).collect(),
            });
        }
        out
    }

    /// First input of the certificate, `u = Σ_k w_{k,0}`, and the successor
    /// state. The input is a convex combination of admissible first inputs,
    /// and the successor is a convex combination of points of `Ω̄`.
    pub fn feedback(&self, cert: &MembershipCertificate) -> (DVector<f64>, DVector<f64>) {
        let mut u = DVector::zeros(self.layout.m);
        for k in 1..=self.layout.horizon {
            u += &cert.w[k - 1][0];
        }
        let next = self.problem.system.step(&cert.x, &u);
        (u, next)
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.layout.n {
            return Err(Error::DimensionMismatch {
                expected: self.layout.n,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn decode(&self, w: &[f64]) -> MembershipCertificate {
        let l = self.layout;
        let slice = |r: Range<usize>| DVector::from_column_slice(&w[r]);
        MembershipCertificate {
            x: slice(l.x()),
            z: (1..=l.horizon).map(|k| slice(l.z(k))).collect(),
            w: (1..=l.horizon)
                .map(|k| (0..k).map(|t| slice(l.w(k, t))).collect())
                .collect(),
            lambda: (1..=l.horizon).map(|k| w[l.lambda(k)].max(0.0)).collect(),
        }
    }
}

fn build_skeleton(problem: &ProblemData, alpha: f64, layout: Layout) -> Result<LinearProgram> {
    let (n, horizon) = (layout.n, layout.horizon);
    let a = problem.system.a();
    let b = problem.system.b();
    let pw = linalg::powers(a, horizon)?;
    let ab: Vec<_> = pw[..horizon].iter().map(|p| p * b).collect();

    let mut lp = LinearProgram::new(layout.num_vars());
    for k in 1..=horizon {
        lp.set_nonneg(layout.lambda(k));
    }
    // x = Σ z_k
    for i in 0..n {
        let terms = (1..=horizon).map(|k| (layout.z(k).start + i, -1.0));
        lp.add_eq([(i, 1.0)].into_iter().chain(terms), 0.0);
    }
    lp.add_eq((1..=horizon).map(|k| (layout.lambda(k), 1.0)), 1.0);

    // C·x_j ≤ λ_k·d for the state after j steps of branch k
    let add_state_rows = |lp: &mut LinearProgram, c: &nalgebra::DMatrix<f64>, d: &DVector<f64>, k: usize, j: usize| {
        let cz = c * &pw[j];
        let cw: Vec<_> = (0..j).map(|t| c * &ab[j - 1 - t]).collect();
        for row in 0..c.nrows() {
            let mut terms: Vec<(usize, f64)> = layout.z(k).zip(cz.row(row).iter().copied()).collect();
            for (t, m) in cw.iter().enumerate() {
                terms.extend(layout.w(k, t).zip(m.row(row).iter().copied()));
            }
            terms.push((layout.lambda(k), -d[row]));
            lp.add_le(terms, 0.0);
        }
    };

    let omega_rhs = problem.omega.rhs() * alpha;
    let (gm, gv) = (problem.input_set.matrix(), problem.input_set.rhs());
    for k in 1..=horizon {
        add_state_rows(&mut lp, problem.omega.matrix(), &omega_rhs, k, k);
        if let Some(x_set) = &problem.state_set {
            for j in 0..=k {
                add_state_rows(&mut lp, x_set.matrix(), x_set.rhs(), k, j);
            }
        }
        for t in 0..k {
            for row in 0..gm.nrows() {
                let mut terms: Vec<(usize, f64)> = layout.w(k, t).zip(gm.row(row).iter().copied()).collect();
                terms.push((layout.lambda(k), -gv[row]));
                lp.add_le(terms, 0.0);
            }
        }
    }
    Ok(lp)
}
