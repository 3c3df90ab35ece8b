//! Monte Carlo coverage experiments.

use dptol_core::tolerance::{self, Side};
use dptol_core::{EmpiricalCdf, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Aggregates over the replications at one sample size.
///
/// Statistics are taken over the replications that produced an interval;
/// `failed` counts the rest. Percentile bounds use type-7 interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub replications: usize,
    pub mean_coverage: f64,
    pub undercoverage_rate: f64,
    pub mean_lower: Option<f64>,
    pub mean_upper: Option<f64>,
    pub mean_length: Option<f64>,
    pub coverage_2_5: f64,
    pub coverage_97_5: f64,
    /// Percentiles of the finite limit (one-sided) or of the length (two-sided).
    pub limit_2_5: Option<f64>,
    pub limit_97_5: Option<f64>,
    pub infeasible: usize,
    pub failed: usize,
}

/// Per-replication result, kept for inspection and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub coverage: f64,
    pub lower: f64,
    pub upper: f64,
    pub infeasible: bool,
}

/// Type-7 sample quantile of `sorted` (ascending, nonempty).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs replication `k` at sample size `n`. `None` when fitting failed.
pub fn replicate(config: &ExperimentConfig, n: usize, k: usize) -> Option<Replication> {
    let mut rng = RngStream::new(config.master_seed, k as u64).split(n as u64);
    let xs = config.dgp.sample_n(&mut rng, n);
    let data = EmpiricalCdf::new(&xs).ok()?;
    let fitted = config.method.fit(&config.spec, &data, &mut rng).ok()?;
    let iv = fitted.interval;
    Some(Replication {
        coverage: tolerance::coverage_probability(&iv, &config.dgp),
        lower: iv.lower,
        upper: iv.upper,
        infeasible: iv.flags.infeasible_small_n,
    })
}

pub fn summarize(config: &ExperimentConfig, n: usize, reps: &[Option<Replication>]) -> SummaryRow {
    let ok: Vec<Replication> = reps.iter().flatten().copied().collect();
    let beta = config.spec.beta;
    let cps: Vec<f64> = ok.iter().map(|r| r.coverage).collect();
    let under = ok.iter().filter(|r| r.coverage < beta).count();
    let side = config.spec.side;
    let lowers: Vec<f64> = ok.iter().map(|r| r.lower).collect();
    let uppers: Vec<f64> = ok.iter().map(|r| r.upper).collect();
    let lengths: Vec<f64> = ok.iter().map(|r| r.upper - r.lower).collect();
    let has_lower = side != Side::Upper;
    let has_upper = side != Side::Lower;
    let limits = match side {
        Side::Upper => uppers.clone(),
        Side::Lower => lowers.clone(),
        Side::TwoSided => lengths.clone(),
    };
    let nonempty = !ok.is_empty();
    let cps_sorted = sorted(cps.clone());
    let limits_sorted = sorted(limits);
    SummaryRow {
        n,
        replications: reps.len(),
        mean_coverage: if nonempty { mean(&cps) } else { f64::NAN },
        undercoverage_rate: if nonempty { under as f64 / ok.len() as f64 } else { f64::NAN },
        mean_lower: (has_lower && nonempty).then(|| mean(&lowers)),
        mean_upper: (has_upper && nonempty).then(|| mean(&uppers)),
        mean_length: (side == Side::TwoSided && nonempty).then(|| mean(&lengths)),
        coverage_2_5: if nonempty { quantile_type7(&cps_sorted, 0.025) } else { f64::NAN },
        coverage_97_5: if nonempty { quantile_type7(&cps_sorted, 0.975) } else { f64::NAN },
        limit_2_5: nonempty.then(|| quantile_type7(&limits_sorted, 0.025)),
        limit_97_5: nonempty.then(|| quantile_type7(&limits_sorted, 0.975)),
        infeasible: ok.iter().filter(|r| r.infeasible).count(),
        failed: reps.len() - ok.len(),
    }
}

/// Runs every sample size of `config` on up to `threads` workers.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<Vec<SummaryRow>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    Ok(config
        .n_values
        .iter()
        .map(|&n| {
            let reps: Vec<Option<Replication>> = pool.install(|| {
                (0..config.replications)
                    .into_par_iter()
                    .map(|k| replicate(config, n, k))
                    .collect()
            });
            summarize(config, n, &reps)
        })
        .collect())
}
