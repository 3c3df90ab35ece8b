//! Interval constructions selectable from configs and the command line.

use dptol_core::empirical_bayes::{self, ASchedule, ElicitationPlan, FitMode, PriorFamily, SdDenominator};
use dptol_core::mdp::{self, MdpConfig};
use dptol_core::tolerance::{self, IntervalFlags, Kind, Side, ToleranceInterval, ToleranceSpec};
use dptol_core::{DpPosterior, Distribution, EmpiricalCdf, Error, RngStream};
use serde::{Deserialize, Serialize};

use crate::dist_spec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Concentration {
    Fixed { a: f64 },
    Schedule { schedule: ASchedule, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpec {
    Fixed {
        dist: Distribution,
    },
    Fitted {
        family: PriorFamily,
        mode: FitMode,
        fixed_location: Option<f64>,
        sd_denominator: SdDenominator,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MethodSpec {
    Dp { concentration: Concentration, base: BaseSpec },
    /// Order-statistic limit from the Binomial tail condition.
    Wilks,
    /// The chain seed is replaced by the caller's stream.
    Mdp { config: MdpConfig },
}

/// What a single fit produced, beyond the interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fitted {
    pub interval: ToleranceInterval,
    pub a: Option<f64>,
    pub base: Option<Distribution>,
    pub order_index: Option<usize>,
    pub mdp_mean_a: Option<f64>,
    pub mdp_acceptance: Option<f64>,
}

impl MethodSpec {
    pub fn describe(&self) -> String {
        match self {
            MethodSpec::Dp { concentration, base } => {
                let a = match concentration {
                    Concentration::Fixed { a } => format!("a={a}"),
                    Concentration::Schedule { schedule, c } => match schedule {
                        ASchedule::Constant => format!("a={c}"),
                        ASchedule::Linear => format!("a={c}n"),
                        ASchedule::Sqrt => format!("a={c}sqrt(n)"),
                    },
                };
                let b = match base {
                    BaseSpec::Fixed { dist } => dist_spec::format(dist),
                    BaseSpec::Fitted {
                        family,
                        mode,
                        fixed_location,
                        ..
                    } => {
                        let fam = match family {
                            PriorFamily::Normal => "normal".to_string(),
                            PriorFamily::Laplace => "laplace".to_string(),
                            PriorFamily::StudentT { dof } => format!("t{dof}"),
                        };
                        let mode = match mode {
                            FitMode::Mle => "mle",
                            FitMode::MomentMatch => "moment_match",
                            FitMode::Fixed => "fixed",
                        };
                        match fixed_location {
                            Some(l) => format!("{fam}[{mode}, loc={l}]"),
                            None => format!("{fam}[{mode}]"),
                        }
                    }
                };
                format!("DP({a}, F0={b})")
            }
            MethodSpec::Wilks => "Wilks order statistic".into(),
            MethodSpec::Mdp { config } => format!(
                "MDP(a~Gamma({},{}), mu~N({},{}^2), sigma2~IG({},{}), {:?})",
                config.a_a, config.b_a, config.mu0, config.tau0, config.ig_shape, config.ig_scale, config.base_family
            ),
        }
    }

    /// Fits the configured interval to `sample`; `rng` drives the MDP chain.
    pub fn fit(&self, spec: &ToleranceSpec, sample: &EmpiricalCdf, rng: &mut RngStream) -> Result<Fitted, Error> {
        spec.validate()?;
        match self {
            MethodSpec::Dp { concentration, base } => {
                let a = match *concentration {
                    Concentration::Fixed { a } => a,
                    Concentration::Schedule { schedule, c } => {
                        let plan = ElicitationPlan::new(schedule, c, PriorFamily::Normal, FitMode::Mle)?;
                        empirical_bayes::elicit_a(&plan, sample.n())?
                    }
                };
                let base = match *base {
                    BaseSpec::Fixed { dist } => dist,
                    BaseSpec::Fitted {
                        family,
                        mode,
                        fixed_location,
                        sd_denominator,
                    } => {
                        let mut plan = ElicitationPlan::new(ASchedule::Constant, 1.0, family, mode)?;
                        plan.fixed_location = fixed_location;
                        plan.sd_denominator = sd_denominator;
                        empirical_bayes::fit_base(&plan, sample)?
                    }
                };
                let dp = DpPosterior::new(a, base, sample.clone())?;
                Ok(Fitted {
                    interval: tolerance::tolerance_interval(&dp, spec)?,
                    a: Some(a),
                    base: Some(base),
                    order_index: None,
                    mdp_mean_a: None,
                    mdp_acceptance: None,
                })
            }
            MethodSpec::Wilks => {
                if spec.kind != Kind::ContentGamma || spec.side == Side::TwoSided {
                    return Err(Error::Unsupported(
                        "the order-statistic method covers one-sided (beta, gamma) limits only".into(),
                    ));
                }
                let w = match spec.side {
                    Side::Upper => tolerance::wilks_upper(sample, spec.beta, spec.gamma)?,
                    _ => tolerance::wilks_lower(sample, spec.beta, spec.gamma)?,
                };
                let up_index = if spec.side == Side::Upper { w.m } else { sample.n() + 1 - w.m };
                let confidence = tolerance::binomial_cdf(up_index as i64 - 1, sample.n() as u64, spec.beta);
                let (lower, upper) = match spec.side {
                    Side::Upper => (f64::NEG_INFINITY, w.limit),
                    _ => (w.limit, f64::INFINITY),
                };
                Ok(Fitted {
                    interval: ToleranceInterval {
                        lower,
                        upper,
                        achieved_level: Some(confidence),
                        flags: IntervalFlags {
                            infeasible_small_n: w.infeasible,
                            at_data_point: true,
                            grid_truncated: false,
                        },
                        convention: None,
                    },
                    a: None,
                    base: None,
                    order_index: Some(w.m),
                    mdp_mean_a: None,
                    mdp_acceptance: None,
                })
            }
            MethodSpec::Mdp { config } => {
                let draws = mdp::gibbs_run_with(config, sample, rng)?;
                let mix = draws.mixture(sample)?;
                Ok(Fitted {
                    interval: tolerance::tolerance_interval(&mix, spec)?,
                    a: None,
                    base: None,
                    order_index: None,
                    mdp_mean_a: Some(draws.mean_a()),
                    mdp_acceptance: draws.acceptance_rate,
                })
            }
        }
    }
}
