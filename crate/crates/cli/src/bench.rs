//! Benchmark sweeps written as versioned CSV.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use invkit::experiments::{ex1_instance, ex1_plan, histogram, median, run_ex2, run_ex2_on, Ex2Config, ORACLE_MAX_DIM};
use invkit::oracle::BlockDiagonalBench;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{self, num, preamble, Sink};
use crate::single::CliResult;

/// Floor applied to gaps before taking `log10`, so exact matches land in the first bin.
const GAP_FLOOR: f64 = 1e-16;

#[derive(Debug, Args)]
pub struct Ex1Args {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Inclusive state-dimension range, `lo..hi`.
    #[arg(long, default_value = "2..12", value_parser = parse_range)]
    n_range: (usize, usize),
    /// Systems per dimension; 1000 reproduces the histogram study.
    #[arg(long, default_value_t = 10)]
    per_dim: usize,
    #[arg(long = "N", value_name = "N", default_value_t = 2)]
    horizon: usize,
    /// Largest dimension for which the vertex oracle also runs.
    #[arg(long, default_value_t = ORACLE_MAX_DIM)]
    oracle_max_dim: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 16)]
    bins: usize,
    /// Leave the timing columns empty so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
pub struct Ex2Args {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Number of planar blocks; the state dimension is twice this.
    #[arg(long, default_value_t = 5)]
    blocks: usize,
    /// Horizons to compare, comma-separated.
    #[arg(long = "N", value_name = "N", value_delimiter = ',', default_value = "5,10")]
    horizons: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    rays: usize,
    /// Rays that also get the bisection cross-check, counted from the first.
    #[arg(long, default_value_t = 5)]
    dichotomy_rays: usize,
    /// Full bench with 15 blocks (n = 30). Expect hours of runtime.
    #[arg(long)]
    full_scale: bool,
    /// Load the bench from JSON instead of sampling it.
    #[arg(long)]
    bench: Option<PathBuf>,
    /// Save the sampled bench as JSON.
    #[arg(long)]
    save_bench: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long)]
    no_timing: bool,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|e| format!("{hi:?}: {e}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("empty or invalid range {s:?}"));
    }
    Ok((lo, hi))
}

#[derive(Serialize)]
struct Ex1Row {
    index: usize,
    seed: u64,
    n: usize,
    m: usize,
    #[serde(rename = "N")]
    horizon: usize,
    alpha: Option<f64>,
    alpha_star: Option<f64>,
    gap: Option<f64>,
    lp_seconds: Option<f64>,
    oracle_seconds: Option<f64>,
    status: String,
}

pub fn ex1(args: &Ex1Args, out: &Sink) -> CliResult {
    let (lo, hi) = args.n_range;
    let plan = ex1_plan(lo..=hi, args.per_dim);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.workers.max(1)).build()?;
    log::info!("bench-ex1: {} instances on {} workers", plan.len(), args.workers.max(1));
    // collect keeps plan order, so the output does not depend on scheduling
    let rows: Vec<Ex1Row> = pool.install(|| {
        plan.par_iter()
            .map(|&(index, n)| {
                let with_oracle = n <= args.oracle_max_dim;
                match ex1_instance(index, n, args.horizon, args.seed, with_oracle) {
                    Ok(r) => {
                        log::debug!("instance {index} (n = {n}): alpha {:?}, gap {:?}", r.alpha, r.gap);
                        Ex1Row {
                            index,
                            seed: r.seed,
                            n,
                            m: r.m,
                            horizon: args.horizon,
                            alpha: r.alpha,
                            alpha_star: r.alpha_star,
                            gap: r.gap,
                            lp_seconds: (!args.no_timing).then_some(r.lp_seconds),
                            oracle_seconds: r.oracle_seconds.filter(|_| !args.no_timing),
                            status: if r.alpha.is_some() { "ok" } else { "not-found" }.into(),
                        }
                    }
                    Err(e) => {
                        log::warn!("instance {index} (n = {n}) failed: {e}");
                        Ex1Row {
                            index,
                            seed: invkit::oracle::instance_seed(args.seed, index as u64),
                            n,
                            m: n.div_ceil(2),
                            horizon: args.horizon,
                            alpha: None,
                            alpha_star: None,
                            gap: None,
                            lp_seconds: None,
                            oracle_seconds: None,
                            status: format!("error: {e}"),
                        }
                    }
                }
            })
            .collect()
    });

    let params = [
        ("seed", args.seed.to_string()),
        ("n_range", format!("{lo}..{hi}")),
        ("per_dim", args.per_dim.to_string()),
        ("N", args.horizon.to_string()),
        ("oracle_max_dim", args.oracle_max_dim.to_string()),
        ("instance_seed", "seed + index * 0x9E3779B97F4A7C15 (wrapping)".into()),
    ];
    let mut w = out.open()?;
    preamble(&mut w, "bench-ex1", &params)?;
    let mut csv = csv::Writer::from_writer(&mut w);
    for row in &rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    drop(csv);

    let log_gaps: Vec<f64> = rows.iter().filter_map(|r| r.gap).map(|g| g.max(GAP_FLOOR).log10()).collect();
    let bins = histogram(&log_gaps, GAP_FLOOR.log10(), 0.0, args.bins);
    let mut h = match out.sibling("_hist") {
        Some(p) => output::open(Some(&p))?,
        None => {
            writeln!(w)?;
            w
        }
    };
    preamble(&mut h, "bench-ex1 log10(gap) histogram", &params)?;
    writeln!(h, "bin_left,bin_right,count")?;
    for b in &bins {
        writeln!(h, "{},{},{}", num(b.left), num(b.right), b.count)?;
    }
    h.flush()?;

    let failed = rows.iter().filter(|r| r.status.starts_with("error")).count();
    log::info!(
        "bench-ex1 done: {} rows, {failed} errors, median gap {:?}",
        rows.len(),
        median(&rows.iter().filter_map(|r| r.gap).collect::<Vec<_>>())
    );
    Ok(0)
}

pub fn ex2(args: &Ex2Args, out: &Sink) -> CliResult {
    let blocks = if args.full_scale { 15 } else { args.blocks };
    if args.full_scale {
        log::warn!("full-scale bench (n = 30): the N = 10 scaling LP alone can take hours");
        eprintln!("warning: --full-scale runs the n = 30 bench; expect hours of runtime");
    }
    let config = Ex2Config {
        blocks,
        horizons: args.horizons.clone(),
        rays: args.rays,
        dichotomy_rays: args.dichotomy_rays,
        seed: args.seed,
    };
    let report = match &args.bench {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let bench: BlockDiagonalBench =
                serde_json::from_str(&text).map_err(|e| format!("schema error in {}: {e}", p.display()))?;
            run_ex2_on(bench, &config)?
        }
        None => run_ex2(&config)?,
    };
    if let Some(p) = &args.save_bench {
        fs::write(p, serde_json::to_string_pretty(&report.bench)? + "\n")?;
    }

    let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";");
    let hs: Vec<String> = report.horizons.iter().map(|h| h.to_string()).collect();
    let mut params = vec![
        ("seed", report.seed.to_string()),
        ("blocks", report.bench.blocks.len().to_string()),
        ("n", report.n.to_string()),
        ("m", report.m.to_string()),
        ("N", hs.join(";")),
        ("alpha_N", join(&report.alphas)),
        ("shared_alpha", num(report.shared_alpha)),
        ("rays", args.rays.to_string()),
    ];
    if !args.no_timing {
        params.push(("scaling_seconds", join(&report.scaling_seconds)));
    }

    let mut w = out.open()?;
    preamble(&mut w, "bench-ex2", &params)?;
    let mut header = vec!["index".to_string(), "r_sigma".to_string()];
    for h in &hs {
        header.extend([format!("r_omega_N{h}"), format!("ratio_N{h}"), format!("r_dichotomy_N{h}")]);
    }
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(&header)?;
    for ray in &report.rays {
        let mut rec = vec![ray.index.to_string(), num(ray.r_sigma)];
        for k in 0..hs.len() {
            let dich = ray.r_dichotomy.as_ref().map_or(String::new(), |d| num(d[k]));
            rec.extend([num(ray.r_omega[k]), num(ray.ratio[k]), dich]);
        }
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    drop(csv);

    let mut h = match out.sibling("_hist") {
        Some(p) => output::open(Some(&p))?,
        None => {
            writeln!(w)?;
            w
        }
    };
    preamble(&mut h, "bench-ex2 ratio histogram", &params)?;
    writeln!(h, "N,bin_left,bin_right,count")?;
    for (k, hz) in hs.iter().enumerate() {
        let ratios: Vec<f64> = report.rays.iter().map(|r| r.ratio[k]).collect();
        for b in histogram(&ratios, 0.0, 1.0, args.bins) {
            writeln!(h, "{hz},{},{},{}", num(b.left), num(b.right), b.count)?;
        }
    }
    h.flush()?;
    Ok(0)
}
