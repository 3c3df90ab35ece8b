//! Simulation configs in TOML.
//!
//! ```toml
//! name = "dp_a0_normal_n1000"
//! dgp = "normal:0,1"
//! n_values = [1000]
//! replications = 2000
//! master_seed = 4
//!
//! [spec]
//! kind = "expectation"      # bg | expectation
//! side = "two_sided"        # lower | upper | two_sided
//! beta = 0.95
//!
//! [method]
//! type = "dp"               # dp | wilks | mdp
//! a = 0.0
//! ```
//!
//! A `dp` method takes either `a` or `schedule` (constant | linear | sqrt)
//! with `c`, and either `base` (distribution notation) or `fit` (mle |
//! moment_match) with `family` (normal | laplace | t) and optional `dof`,
//! `fixed_location` and `sd_denominator` (n | n-1). An `mdp` method takes
//! the chain settings `a_a`, `b_a`, `mu0`, `tau0`, `ig_shape`, `ig_scale`,
//! `iterations`, `burnin`, `thin` and `base_family` (normal | laplace).

use dptol_core::empirical_bayes::{ASchedule, FitMode, PriorFamily, SdDenominator};
use dptol_core::mdp::{BaseFamily, MdpConfig};
use dptol_core::tolerance::{BonferroniConvention, Kind, Side, ToleranceSpec};
use dptol_core::Distribution;
use serde::{Deserialize, Serialize};

use crate::dist_spec;
use crate::method::{BaseSpec, Concentration, MethodSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dgp: Distribution,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub spec: ToleranceSpec,
    pub method: MethodSpec,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    dgp: Option<String>,
    n_values: Option<Vec<i64>>,
    replications: Option<i64>,
    master_seed: Option<u64>,
    spec: Option<SpecFields>,
    method: Option<MethodFields>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFields {
    pub kind: Option<String>,
    pub side: Option<String>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub q_split: Option<f64>,
    pub convention: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodFields {
    #[serde(rename = "type")]
    pub kind: Option<String>,
    pub a: Option<f64>,
    pub schedule: Option<String>,
    pub c: Option<f64>,
    pub base: Option<String>,
    pub fit: Option<String>,
    pub family: Option<String>,
    pub dof: Option<f64>,
    pub fixed_location: Option<f64>,
    pub sd_denominator: Option<String>,
    pub a_a: Option<f64>,
    pub b_a: Option<f64>,
    pub mu0: Option<f64>,
    pub tau0: Option<f64>,
    pub ig_shape: Option<f64>,
    pub ig_scale: Option<f64>,
    pub iterations: Option<usize>,
    pub burnin: Option<usize>,
    pub thin: Option<usize>,
    pub base_family: Option<String>,
}

/// Every problem found in a config, one message per field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid config ({} problem(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

pub fn parse_side(s: &str) -> Option<Side> {
    match s {
        "lower" => Some(Side::Lower),
        "upper" => Some(Side::Upper),
        "two_sided" | "two" | "two-sided" => Some(Side::TwoSided),
        _ => None,
    }
}

pub fn parse_kind(s: &str) -> Option<Kind> {
    match s {
        "bg" | "content_gamma" => Some(Kind::ContentGamma),
        "expectation" => Some(Kind::Expectation),
        _ => None,
    }
}

pub fn parse_convention(s: &str) -> Option<BonferroniConvention> {
    match s {
        "level_split" | "level" => Some(BonferroniConvention::LevelSplit),
        "level_and_content_split" | "level-content" | "level_content" => {
            Some(BonferroniConvention::LevelAndContentSplit)
        }
        _ => None,
    }
}

pub fn parse_schedule(s: &str) -> Option<ASchedule> {
    match s {
        "constant" => Some(ASchedule::Constant),
        "linear" => Some(ASchedule::Linear),
        "sqrt" => Some(ASchedule::Sqrt),
        _ => None,
    }
}

pub fn parse_fit_mode(s: &str) -> Option<FitMode> {
    match s {
        "mle" => Some(FitMode::Mle),
        "moment_match" | "moment" => Some(FitMode::MomentMatch),
        _ => None,
    }
}

pub fn parse_family(s: &str, dof: Option<f64>) -> Option<PriorFamily> {
    match s {
        "normal" => Some(PriorFamily::Normal),
        "laplace" => Some(PriorFamily::Laplace),
        "t" => Some(PriorFamily::StudentT { dof: dof.unwrap_or(5.0) }),
        _ => None,
    }
}

pub fn parse_sd_denominator(s: &str) -> Option<SdDenominator> {
    match s {
        "n" => Some(SdDenominator::N),
        "n-1" | "n_minus_one" => Some(SdDenominator::NMinusOne),
        _ => None,
    }
}

pub fn parse_base_family(s: &str) -> Option<BaseFamily> {
    match s {
        "normal" => Some(BaseFamily::NormalMeanVar),
        "laplace" => Some(BaseFamily::LaplaceLocScale),
        _ => None,
    }
}

fn pick<T>(errs: &mut Vec<String>, field: &str, v: Option<&str>, parse: impl Fn(&str) -> Option<T>, allowed: &str) -> Option<T> {
    let v = v?;
    let r = parse(v);
    if r.is_none() {
        errs.push(format!("{field}: unknown value `{v}` (expected one of {allowed})"));
    }
    r
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigErrors> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigErrors(vec![e.to_string()]))?;
        let mut errs = Vec::new();

        let name = raw.name.unwrap_or_else(|| "experiment".into());
        let dgp = match raw.dgp.as_deref() {
            None => {
                errs.push("dgp: missing".into());
                None
            }
            Some(s) => dist_spec::parse(s).map_err(|e| errs.push(format!("dgp: {e}"))).ok(),
        };
        let n_values: Vec<usize> = match raw.n_values {
            None => {
                errs.push("n_values: missing".into());
                vec![]
            }
            Some(v) if v.is_empty() => {
                errs.push("n_values: must list at least one sample size".into());
                vec![]
            }
            Some(v) => {
                if v.iter().any(|&n| n < 1) {
                    errs.push("n_values: sample sizes must be positive".into());
                }
                v.into_iter().map(|n| n.max(1) as usize).collect()
            }
        };
        let replications = match raw.replications {
            None => {
                errs.push("replications: missing".into());
                1
            }
            Some(k) if k < 1 => {
                errs.push(format!("replications: must be at least 1, got {k}"));
                1
            }
            Some(k) => k as usize,
        };
        let master_seed = raw.master_seed.unwrap_or(0);

        let spec = build_spec(raw.spec.unwrap_or_default(), "spec.", &mut errs);

        let method = raw
            .method
            .map(|m| build_method(m, "method.", &mut errs))
            .unwrap_or_else(|| {
                errs.push("method: missing".into());
                None
            });

        check_compatible(method.as_ref(), spec.as_ref(), "method.", &mut errs);

        if !errs.is_empty() {
            return Err(ConfigErrors(errs));
        }
        Ok(ExperimentConfig {
            name,
            dgp: dgp.expect("checked"),
            n_values,
            replications,
            master_seed,
            spec: spec.expect("checked"),
            method: method.expect("checked"),
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigErrors> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigErrors(vec![format!("{}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }
}

pub fn check_compatible(method: Option<&MethodSpec>, spec: Option<&ToleranceSpec>, prefix: &str, errs: &mut Vec<String>) {
    if let (Some(MethodSpec::Wilks), Some(s)) = (method, spec) {
        if s.kind != Kind::ContentGamma || s.side == Side::TwoSided {
            errs.push(format!("{prefix}type: wilks supports one-sided bg intervals only"));
        }
    }
}

/// Validates tolerance settings; field names in messages carry `prefix`.
pub fn build_spec(rs: SpecFields, prefix: &str, errs: &mut Vec<String>) -> Option<ToleranceSpec> {
    let f = |name: &str| format!("{prefix}{name}");
    let kind = pick(errs, &f("kind"), rs.kind.as_deref(), parse_kind, "bg, expectation");
    if rs.kind.is_none() {
        errs.push(format!("{}: missing", f("kind")));
    }
    let side = pick(errs, &f("side"), rs.side.as_deref(), parse_side, "lower, upper, two_sided");
    if rs.side.is_none() {
        errs.push(format!("{}: missing", f("side")));
    }
    let convention = pick(
        errs,
        &f("convention"),
        rs.convention.as_deref(),
        parse_convention,
        "level_split, level_and_content_split",
    )
    .unwrap_or_default();
    let beta = rs.beta.unwrap_or_else(|| {
        errs.push(format!("{}: missing", f("beta")));
        0.95
    });
    if !(beta > 0.0 && beta < 1.0) {
        errs.push(format!("{}: must lie in (0, 1), got {beta}", f("beta")));
    }
    let gamma = rs.gamma.unwrap_or(0.95);
    if !(gamma > 0.0 && gamma < 1.0) {
        errs.push(format!("{}: must lie in (0, 1), got {gamma}", f("gamma")));
    }
    let q_split = rs.q_split.unwrap_or(0.5);
    if !(0.0..=1.0).contains(&q_split) {
        errs.push(format!("{}: must lie in [0, 1], got {q_split}", f("q_split")));
    }
    Some(ToleranceSpec {
        beta,
        gamma,
        side: side?,
        kind: kind?,
        q_split,
        convention,
    })
}

/// Validates a method description; field names in messages carry `prefix`.
pub fn build_method(m: MethodFields, prefix: &str, errs: &mut Vec<String>) -> Option<MethodSpec> {
    match m.kind.as_deref() {
        None => {
            errs.push(format!("{prefix}type: missing"));
            None
        }
        Some("wilks") => Some(MethodSpec::Wilks),
        Some("dp") => {
            let concentration = match (m.a, m.schedule.as_deref()) {
                (Some(_), Some(_)) => {
                    errs.push(format!("{prefix}a: give either a or schedule, not both"));
                    None
                }
                (Some(a), None) => {
                    if !(a >= 0.0 && a.is_finite()) {
                        errs.push(format!("{prefix}a: must be finite and >= 0, got {a}"));
                    }
                    Some(Concentration::Fixed { a })
                }
                (None, Some(s)) => {
                    let schedule = pick(errs, &format!("{prefix}schedule"), Some(s), parse_schedule, "constant, linear, sqrt");
                    let c = m.c.unwrap_or_else(|| {
                        errs.push(format!("{prefix}c: required with a schedule"));
                        1.0
                    });
                    if !(c > 0.0) {
                        errs.push(format!("{prefix}c: must be positive, got {c}"));
                    }
                    schedule.map(|schedule| Concentration::Schedule { schedule, c })
                }
                (None, None) => {
                    errs.push(format!("{prefix}a: missing (or give schedule and c)"));
                    None
                }
            };
            let base = match (m.base.as_deref(), m.fit.as_deref()) {
                (Some(_), Some(_)) => {
                    errs.push(format!("{prefix}base: give either base or fit, not both"));
                    None
                }
                (Some(b), None) => dist_spec::parse(b)
                    .map(|dist| BaseSpec::Fixed { dist })
                    .map_err(|e| errs.push(format!("{prefix}base: {e}")))
                    .ok(),
                (None, Some(f)) => {
                    let mode = pick(errs, &format!("{prefix}fit"), Some(f), parse_fit_mode, "mle, moment_match");
                    let family = match m.family.as_deref() {
                        None => {
                            errs.push(format!("{prefix}family: required with fit"));
                            None
                        }
                        fam => pick(errs, &format!("{prefix}family"), fam, |s| parse_family(s, m.dof), "normal, laplace, t"),
                    };
                    let sd_denominator = pick(
                        errs,
                        &format!("{prefix}sd_denominator"),
                        m.sd_denominator.as_deref(),
                        parse_sd_denominator,
                        "n, n-1",
                    )
                    .unwrap_or_default();
                    if let (Some(FitMode::Mle), Some(PriorFamily::StudentT { .. })) = (mode, family) {
                        errs.push(format!("{prefix}fit: mle is not available for the t family; use moment_match"));
                    }
                    match (mode, family) {
                        (Some(mode), Some(family)) => Some(BaseSpec::Fitted {
                            family,
                            mode,
                            fixed_location: m.fixed_location,
                            sd_denominator,
                        }),
                        _ => None,
                    }
                }
                (None, None) => {
                    errs.push(format!("{prefix}base: missing (or give fit and family)"));
                    None
                }
            };
            match (concentration, base) {
                (Some(concentration), Some(base)) => Some(MethodSpec::Dp { concentration, base }),
                _ => None,
            }
        }
        Some("mdp") => {
            let d = MdpConfig::default();
            let base_family = pick(
                errs,
                &format!("{prefix}base_family"),
                m.base_family.as_deref(),
                parse_base_family,
                "normal, laplace",
            )
            .unwrap_or(d.base_family);
            let config = MdpConfig {
                a_a: m.a_a.unwrap_or(d.a_a),
                b_a: m.b_a.unwrap_or(d.b_a),
                base_family,
                mu0: m.mu0.unwrap_or(d.mu0),
                tau0: m.tau0.unwrap_or(d.tau0),
                ig_shape: m.ig_shape.unwrap_or(d.ig_shape),
                ig_scale: m.ig_scale.unwrap_or(d.ig_scale),
                iterations: m.iterations.unwrap_or(d.iterations),
                burnin: m.burnin.unwrap_or(d.burnin),
                thin: m.thin.unwrap_or(d.thin),
                seed: 0,
            };
            if let Err(e) = config.validate() {
                errs.push(format!("method: {e}"));
            }
            Some(MethodSpec::Mdp { config })
        }
        Some(other) => {
            errs.push(format!("{prefix}type: unknown value `{other}` (expected one of dp, wilks, mdp)"));
            None
        }
    }
}
