//! The relative-potency case study: every DP row of both interval tables,
//! plus one seeded MDP row, compared against the 90 to 110 band.

use dptol_core::empirical_bayes::{self, ASchedule, ElicitationPlan, FitMode, PriorFamily};
use dptol_core::mdp::{self, MdpConfig};
use dptol_core::tolerance::{self, BonferroniConvention, Kind, Side, ToleranceSpec};
use dptol_core::{DpPosterior, Distribution, EmpiricalCdf, Error};
use serde::{Deserialize, Serialize};

use crate::dataset::{POTENCY, SPEC_LIMITS, TARGET};
use crate::dist_spec;

pub const BETA: f64 = 0.95;
pub const GAMMA: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotencyRow {
    pub method: String,
    /// Set for (beta, gamma) rows.
    pub convention: Option<BonferroniConvention>,
    pub lower: f64,
    pub upper: f64,
    pub within_spec: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotencyReport {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub mdp_seed: u64,
    pub mdp_mean_a: f64,
    pub content_rows: Vec<PotencyRow>,
    pub expectation_rows: Vec<PotencyRow>,
}

pub fn potency_data() -> EmpiricalCdf {
    EmpiricalCdf::new(&POTENCY).expect("bundled data is finite")
}

/// Chain settings for the MDP row: vague Gamma(1, 1) on a, mu ~ N(100, 5^2),
/// sigma^2 ~ IG(1, 1).
pub fn mdp_config(seed: u64) -> MdpConfig {
    MdpConfig {
        mu0: TARGET,
        tau0: 5.0,
        seed,
        ..MdpConfig::default()
    }
}

/// Base measures matched to the sample: Normal, Laplace and 5-dof t, all
/// centred at the target.
pub fn empirical_bayes_bases(data: &EmpiricalCdf) -> Result<Vec<Distribution>, Error> {
    [
        PriorFamily::Normal,
        PriorFamily::Laplace,
        PriorFamily::StudentT { dof: 5.0 },
    ]
    .into_iter()
    .map(|family| {
        let mut plan = ElicitationPlan::new(ASchedule::Constant, 1.0, family, FitMode::MomentMatch)?;
        plan.fixed_location = Some(TARGET);
        empirical_bayes::fit_base(&plan, data)
    })
    .collect()
}

fn empirical_bayes_a(c: f64, n: usize) -> Result<f64, Error> {
    let plan = ElicitationPlan::new(ASchedule::Sqrt, c, PriorFamily::Normal, FitMode::MomentMatch)?;
    empirical_bayes::elicit_a(&plan, n)
}

fn label(a: f64, base: Option<&Distribution>) -> String {
    match base {
        None => format!("DP(a={a})"),
        Some(b) => format!("DP(a={a}, F0={})", short(b)),
    }
}

fn short(d: &Distribution) -> String {
    let p: Vec<String> = d.params().iter().map(|v| format!("{}", (v * 1e4).round() / 1e4)).collect();
    format!("{}:{}", dist_spec::format(d).split(':').next().unwrap_or(""), p.join(","))
}

fn row(method: String, convention: Option<BonferroniConvention>, lower: f64, upper: f64) -> PotencyRow {
    PotencyRow {
        method,
        convention,
        lower,
        upper,
        within_spec: lower >= SPEC_LIMITS.0 && upper <= SPEC_LIMITS.1,
    }
}

const CONVENTIONS: [BonferroniConvention; 2] = [
    BonferroniConvention::LevelAndContentSplit,
    BonferroniConvention::LevelSplit,
];

pub fn content_specs() -> [ToleranceSpec; 2] {
    CONVENTIONS.map(|c| {
        ToleranceSpec::new(BETA, GAMMA, Side::TwoSided, Kind::ContentGamma)
            .expect("valid levels")
            .with_convention(c)
    })
}

pub fn expectation_spec() -> ToleranceSpec {
    ToleranceSpec::new(BETA, GAMMA, Side::TwoSided, Kind::Expectation).expect("valid levels")
}

pub fn run(mdp_seed: u64) -> Result<PotencyReport, Error> {
    let data = potency_data();
    let n = data.n();
    let normal = |sd: f64| Distribution::normal(TARGET, sd).expect("positive sd");
    let eb_bases = empirical_bayes_bases(&data)?;
    let eb: Vec<(f64, Distribution)> = [1.0, 2.0]
        .into_iter()
        .map(|c| empirical_bayes_a(c, n))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flat_map(|a| eb_bases.iter().map(move |b| (a, *b)))
        .collect();

    let mut content_fits: Vec<(f64, Distribution)> =
        vec![(1.0, normal(3.3)), (10.0, normal(3.3)), (1.0, normal(5.0)), (10.0, normal(5.0))];
    let content_split = content_fits.len();
    content_fits.extend(eb.iter().copied());

    let mut content_rows = Vec::new();
    let specs = content_specs();
    let push_dp = |rows: &mut Vec<PotencyRow>, a: f64, base: Distribution| -> Result<(), Error> {
        let dp = DpPosterior::new(a, base, data.clone())?;
        for spec in &specs {
            let iv = tolerance::tolerance_interval(&dp, spec)?;
            rows.push(row(label(a, Some(&base)), Some(spec.convention), iv.lower, iv.upper));
        }
        Ok(())
    };
    for &(a, base) in &content_fits[..content_split] {
        push_dp(&mut content_rows, a, base)?;
    }
    let draws = mdp::gibbs_run(&mdp_config(mdp_seed), &data)?;
    let mix = draws.mixture(&data)?;
    for spec in &specs {
        let iv = tolerance::tolerance_interval(&mix, spec)?;
        content_rows.push(row(
            "MDP(a~Gamma(1,1), mu~N(100,5^2), sigma2~IG(1,1))".into(),
            Some(spec.convention),
            iv.lower,
            iv.upper,
        ));
    }
    for &(a, base) in &content_fits[content_split..] {
        push_dp(&mut content_rows, a, base)?;
    }

    let espec = expectation_spec();
    let mut expectation_rows = Vec::new();
    let zero = DpPosterior::new(0.0, normal(1.0), data.clone())?;
    let iv = tolerance::tolerance_interval(&zero, &espec)?;
    expectation_rows.push(row(label(0.0, None), None, iv.lower, iv.upper));
    let expectation_fits =
        [(1.0, normal(2.0)), (10.0, normal(2.0)), (1.0, normal(5.0)), (10.0, normal(5.0))]
            .into_iter()
            .chain(eb.iter().copied());
    for (a, base) in expectation_fits {
        let dp = DpPosterior::new(a, base, data.clone())?;
        let iv = tolerance::tolerance_interval(&dp, &espec)?;
        expectation_rows.push(row(label(a, Some(&base)), None, iv.lower, iv.upper));
    }

    Ok(PotencyReport {
        n,
        beta: BETA,
        gamma: GAMMA,
        mdp_seed,
        mdp_mean_a: draws.mean_a(),
        content_rows,
        expectation_rows,
    })
}

impl PotencyReport {
    pub fn to_markdown(&self) -> String {
        let (lo, hi) = SPEC_LIMITS;
        let mut s = format!(
            "Relative potency, n = {}, specification band [{lo}, {hi}]\n\n\
             Two-sided (beta = {}, gamma = {}) intervals\n\n\
             | method | convention | lower | upper | band |\n|---|---|---:|---:|---|\n",
            self.n, self.beta, self.gamma
        );
        for r in &self.content_rows {
            s.push_str(&format!(
                "| {} | {} | {:.4} | {:.4} | {} |\n",
                r.method,
                r.convention.map(|c| c.name()).unwrap_or("-"),
                r.lower,
                r.upper,
                if r.within_spec { "inside" } else { "OUTSIDE" }
            ));
        }
        s.push_str(&format!(
            "\nConventions: level_and_content_split puts content (1+beta)/2 and level (1+gamma)/2 on each side; \
             level_split keeps content beta and puts level (1+gamma)/2 on each side. \
             DP rows are read under level_and_content_split and the MDP row under level_split.\n\
             MDP chain seed {}, posterior mean of a {:.4}.\n\n",
            self.mdp_seed, self.mdp_mean_a
        ));
        s.push_str(&format!(
            "Two-sided beta-expectation intervals (beta = {})\n\n\
             | method | lower | upper | band |\n|---|---:|---:|---|\n",
            self.beta
        ));
        for r in &self.expectation_rows {
            s.push_str(&format!(
                "| {} | {:.4} | {:.4} | {} |\n",
                r.method,
                r.lower,
                r.upper,
                if r.within_spec { "inside" } else { "OUTSIDE" }
            ));
        }
        s.push_str(
            "\nNote: parametric Normal-theory intervals are not computed by this tool.\n",
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eb_bases_match_sample_moments() {
        let b = empirical_bayes_bases(&potency_data()).unwrap();
        let sd = b[0].params()[1];
        assert!((sd - 4.221026).abs() < 1e-5);
        assert!((b[1].params()[1] - sd / 2f64.sqrt()).abs() < 1e-12);
        assert!((b[2].params()[1] - sd * (0.6f64).sqrt()).abs() < 1e-12);
        assert_eq!(empirical_bayes_a(2.0, 25).unwrap(), 10.0);
    }

    #[test]
    fn label_rounds_parameters() {
        let d = Distribution::laplace(100.0, 2.984_737_1).unwrap();
        assert_eq!(label(5.0, Some(&d)), "DP(a=5, F0=laplace:100,2.9847)");
    }
}
