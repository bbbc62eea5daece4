//! Experiment drivers shared by the command-line tool and the acceptance suite.

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::invariance::{max_scaling, Certification};
use crate::oracle::{build_bench, dichotomy_ray, exact_alpha_star, instance_seed, random_box_problem, random_direction, BlockDiagonalBench};
use crate::setrep::InvariantSetRep;
use crate::Result;

/// Largest dimension for which the vertex oracle runs by default (`2^12` vertices).
pub const ORACLE_MAX_DIM: usize = 12;

/// One random-system comparison between the certificate LP and the vertex LP.
#[derive(Clone, Debug, Serialize)]
pub struct Ex1Record {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    /// `None` when the scaling LP is infeasible.
    pub alpha: Option<f64>,
    pub alpha_star: Option<f64>,
    /// `|α − α*|/α*`.
    pub gap: Option<f64>,
    pub lp_seconds: f64,
    pub oracle_seconds: Option<f64>,
}

pub fn ex1_instance(index: usize, n: usize, horizon: usize, base_seed: u64, with_oracle: bool) -> Result<Ex1Record> {
    let seed = instance_seed(base_seed, index as u64);
    let problem = random_box_problem(n, horizon, seed)?;
    let start = Instant::now();
    let cert = max_scaling(&problem)?;
    let lp_seconds = start.elapsed().as_secs_f64();
    let alpha = cert.certificate().map(|c| c.alpha);
    let (alpha_star, oracle_seconds) = if with_oracle {
        let start = Instant::now();
        let star = exact_alpha_star(&problem)?;
        (Some(star.alpha), Some(start.elapsed().as_secs_f64()))
    } else {
        (None, None)
    };
    let gap = match (alpha, alpha_star) {
        (Some(a), Some(s)) if s.is_finite() && s > 0.0 => Some((a - s).abs() / s),
        _ => None,
    };
    Ok(Ex1Record {
        index,
        seed,
        n,
        m: problem.m(),
        alpha,
        alpha_star,
        gap,
        lp_seconds,
        oracle_seconds,
    })
}

/// Instances `(index, n)` of a sweep with `per_dim` systems per dimension.
pub fn ex1_plan(dims: impl IntoIterator<Item = usize>, per_dim: usize) -> Vec<(usize, usize)> {
    dims.into_iter()
        .flat_map(|n| std::iter::repeat_n(n, per_dim))
        .enumerate()
        .collect()
}

#[derive(Clone, Debug)]
pub struct Ex2Config {
    pub blocks: usize,
    pub horizons: Vec<usize>,
    pub rays: usize,
    /// Rays that also get a bisection cross-check, counted from the first.
    pub dichotomy_rays: usize,
    pub seed: u64,
}

impl Default for Ex2Config {
    fn default() -> Self {
        Ex2Config {
            blocks: 5,
            horizons: vec![5, 10],
            rays: 100,
            dichotomy_rays: 0,
            seed: 0,
        }
    }
}

/// Bisection tolerance of the cross-check.
pub const DICHOTOMY_REL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct Ex2Ray {
    pub index: usize,
    pub r_sigma: f64,
    /// One entry per horizon.
    pub r_omega: Vec<f64>,
    pub ratio: Vec<f64>,
    pub r_dichotomy: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Ex2Report {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub horizons: Vec<usize>,
    /// `α_N` from the scaling LP for each horizon.
    pub alphas: Vec<f64>,
    /// `min_N α_N`, used by every set representation.
    pub shared_alpha: f64,
    pub scaling_seconds: Vec<f64>,
    pub rays: Vec<Ex2Ray>,
    #[serde(skip)]
    pub bench: BlockDiagonalBench,
}

/// Builds the bench, certifies each horizon, and compares the certified sets
/// with the exact maximal invariant set `P⁻¹Σ` along random directions.
pub fn run_ex2(config: &Ex2Config) -> Result<Ex2Report> {
    run_ex2_on(build_bench(config.blocks, config.seed)?, config)
}

/// [`run_ex2`] on a prebuilt bench; `config.blocks` is ignored.
pub fn run_ex2_on(bench: BlockDiagonalBench, config: &Ex2Config) -> Result<Ex2Report> {
    let sigma = bench.sigma_x()?;
    let n = bench.n();
    let mut alphas = Vec::new();
    let mut scaling_seconds = Vec::new();
    for &horizon in &config.horizons {
        let problem = bench.problem(horizon)?;
        let start = Instant::now();
        let alpha = match max_scaling(&problem)? {
            Certification::Certified(c) => c.alpha,
            Certification::NotFound => 0.0,
        };
        scaling_seconds.push(start.elapsed().as_secs_f64());
        alphas.push(alpha);
    }
    let shared_alpha = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    if !(shared_alpha > 0.0 && shared_alpha.is_finite()) {
        return Err(crate::Error::InvalidProblem(format!(
            "no finite positive scaling certified for the bench (alphas {alphas:?})"
        )));
    }
    let reps = config
        .horizons
        .iter()
        .map(|&h| InvariantSetRep::new(&bench.problem(h)?, shared_alpha))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(config.seed, u64::MAX));
    let directions: Vec<DVector<f64>> = (0..config.rays).map(|_| random_direction(n, &mut rng)).collect();
    let mut rays = Vec::with_capacity(config.rays);
    for (index, v) in directions.iter().enumerate() {
        let r_sigma = sigma.ray_extent(v);
        let r_omega = reps.iter().map(|rep| Ok(rep.ray_max(v)?.r)).collect::<Result<Vec<f64>>>()?;
        let ratio = r_omega.iter().map(|r| r / r_sigma).collect();
        let r_dichotomy = if index < config.dichotomy_rays {
            let probe = reps
                .iter()
                .map(|rep| dichotomy_ray(|x| Ok(rep.member(x)?.is_inside()), v, r_sigma, DICHOTOMY_REL_TOL))
                .collect::<Result<Vec<f64>>>()?;
            Some(probe)
        } else {
            None
        };
        rays.push(Ex2Ray {
            index,
            r_sigma,
            r_omega,
            ratio,
            r_dichotomy,
        });
    }
    Ok(Ex2Report {
        seed: bench.seed,
        n,
        m: bench.m(),
        horizons: config.horizons.clone(),
        alphas,
        shared_alpha,
        scaling_seconds,
        rays,
        bench,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width histogram on `[lo, hi]`; values outside are clamped into the end bins.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<Bin> {
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<Bin> = (0..bins)
        .map(|i| Bin {
            left: lo + i as f64 * width,
            right: lo + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &v in values.iter().filter(|v| v.is_finite()) {
        let i = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        out[i].count += 1;
    }
    out
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { 0.5 * (v[mid - 1] + v[mid]) } else { v[mid] })
}
