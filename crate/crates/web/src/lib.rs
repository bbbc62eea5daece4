//! Browser demo for planar problems: the certified set traced by ray
//! shooting, the exact maximal invariant set, and membership with a
//! closed-loop trajectory.
//!
//! [`Session`] holds the logic and runs natively; [`Demo`] is its thin
//! `wasm-bindgen` wrapper. Polygons and trajectories cross the boundary as
//! flat `[x0, y0, x1, y1, …]` arrays.

use std::f64::consts::PI;

use invkit::invariance::{max_scaling, Certification, ProblemData};
use invkit::oracle::maximal_invariant_2d;
use invkit::polyhedra::{convex_hull_2d, Polyhedron};
use invkit::setrep::{InvariantSetRep, Membership};
use nalgebra::DVector;
use wasm_bindgen::prelude::*;

/// Problem loaded when the page opens.
pub const PRESET: &str = include_str!("../www/double_integrator.json");

/// Backward-iteration budget for the maximal invariant set.
pub const MAX_ITERS: usize = 200;

#[derive(Debug)]
pub struct Session {
    problem: ProblemData,
    rep: InvariantSetRep,
}

impl Session {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let problem: ProblemData = serde_json::from_str(text).map_err(|e| format!("schema error: {e}"))?;
        if problem.n() != 2 {
            return Err(format!("the demo draws planar systems only, got n = {}", problem.n()));
        }
        let alpha = match max_scaling(&problem).map_err(|e| e.to_string())? {
            Certification::Certified(c) if c.alpha.is_finite() => c.alpha,
            Certification::Certified(_) => return Err("every scaling of Ω is certified; bound X to get a finite set".into()),
            Certification::NotFound => return Err("no scaling of Ω is certified at this horizon".into()),
        };
        let rep = InvariantSetRep::new(&problem, alpha).map_err(|e| e.to_string())?;
        Ok(Session { problem, rep })
    }

    pub fn alpha(&self) -> f64 {
        self.rep.alpha()
    }

    pub fn horizon(&self) -> usize {
        self.problem.horizon
    }

    /// Boundary points of the certified set along `rays` evenly spaced directions.
    pub fn boundary(&self, rays: usize) -> Result<Vec<f64>, String> {
        let mut out = Vec::with_capacity(2 * rays);
        for i in 0..rays {
            let t = 2.0 * PI * i as f64 / rays as f64;
            let v = DVector::from_vec(vec![t.cos(), t.sin()]);
            let r = self.rep.ray_max(&v).map_err(|e| e.to_string())?.r;
            out.extend([r * v[0], r * v[1]]);
        }
        Ok(out)
    }

    /// Vertices of `αΩ`, counter-clockwise.
    pub fn scaled_omega(&self) -> Result<Vec<f64>, String> {
        let p = self.problem.omega.scale(self.alpha()).map_err(|e| e.to_string())?;
        polygon(&p)
    }

    /// Vertices of the state constraint set, counter-clockwise.
    pub fn state_set(&self) -> Result<Vec<f64>, String> {
        polygon(self.problem.state_set.as_ref().ok_or("the problem has no state constraint")?)
    }

    /// Vertices of the maximal control invariant set inside `X`, counter-clockwise.
    pub fn maximal_invariant(&self) -> Result<Vec<f64>, String> {
        let x = self.problem.state_set.as_ref().ok_or("the maximal invariant set needs a state constraint")?;
        let max = maximal_invariant_2d(&self.problem.system, x, &self.problem.input_set, MAX_ITERS)
            .map_err(|e| e.to_string())?;
        polygon(&max.set)
    }

    pub fn contains(&self, x: f64, y: f64) -> Result<bool, String> {
        let p = DVector::from_vec(vec![x, y]);
        Ok(self.rep.member(&p).map_err(|e| e.to_string())?.is_inside())
    }

    /// States visited under the certificate feedback, starting at `(x, y)`;
    /// empty when the start lies outside the set.
    pub fn trajectory(&self, x: f64, y: f64, steps: usize) -> Result<Vec<f64>, String> {
        let mut state = DVector::from_vec(vec![x, y]);
        let mut out = Vec::with_capacity(2 * (steps + 1));
        for _ in 0..=steps {
            let Membership::Inside(cert) = self.rep.member(&state).map_err(|e| e.to_string())? else {
                break;
            };
            out.extend([state[0], state[1]]);
            state = self.rep.feedback(&cert).1;
        }
        Ok(out)
    }
}

fn polygon(p: &Polyhedron) -> Result<Vec<f64>, String> {
    let vs = p.enumerate_vertices().map_err(|e| e.to_string())?;
    Ok(convex_hull_2d(&vs.vertices).into_iter().flatten().collect())
}

#[wasm_bindgen]
pub fn preset() -> String {
    PRESET.to_string()
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(problem_json: &str) -> Result<Demo, JsError> {
        Ok(Demo {
            session: Session::from_json(problem_json).map_err(|e| JsError::new(&e))?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.session.alpha()
    }

    pub fn horizon(&self) -> usize {
        self.session.horizon()
    }

    pub fn boundary(&self, rays: usize) -> Result<Vec<f64>, JsError> {
        self.session.boundary(rays).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = scaledOmega)]
    pub fn scaled_omega(&self) -> Result<Vec<f64>, JsError> {
        self.session.scaled_omega().map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = stateSet)]
    pub fn state_set(&self) -> Result<Vec<f64>, JsError> {
        self.session.state_set().map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = maximalInvariant)]
    pub fn maximal_invariant(&self) -> Result<Vec<f64>, JsError> {
        self.session.maximal_invariant().map_err(|e| JsError::new(&e))
    }

    pub fn contains(&self, x: f64, y: f64) -> Result<bool, JsError> {
        self.session.contains(x, y).map_err(|e| JsError::new(&e))
    }

    pub fn trajectory(&self, x: f64, y: f64, steps: usize) -> Result<Vec<f64>, JsError> {
        self.session.trajectory(x, y, steps).map_err(|e| JsError::new(&e))
    }
}
