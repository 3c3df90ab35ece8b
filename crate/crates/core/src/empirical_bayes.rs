//! Data-driven priors: a concentration schedule `a(n)` and a base measure
//! fitted to the sample.

use alloc::vec::Vec;

use crate::distributions::{Distribution, EmpiricalCdf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ASchedule {
    /// `a = c`
    Constant,
    /// `a = c n`
    Linear,
    /// `a = c sqrt(n)`
    Sqrt,
}

impl ASchedule {
    pub fn name(self) -> &'static str {
        match self {
            ASchedule::Constant => "constant",
            ASchedule::Linear => "linear",
            ASchedule::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum PriorFamily {
    Normal,
    Laplace,
    /// `loc + scale * t_dof`
    StudentT { dof: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitMode {
    /// Normal: mean and sd. Laplace: median and mean absolute deviation
    /// about the median.
    Mle,
    /// Matches the family variance to the sample variance.
    MomentMatch,
    /// Uses `ElicitationPlan::fixed_base` unchanged.
    Fixed,
}

/// Denominator of the sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SdDenominator {
    #[default]
    N,
    NMinusOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ElicitationPlan {
    pub a_schedule: ASchedule,
    pub c: f64,
    pub base_family: PriorFamily,
    pub fit_mode: FitMode,
    /// Replaces the fitted location (scales are still estimated about the
    /// fitted location).
    pub fixed_location: Option<f64>,
    pub sd_denominator: SdDenominator,
    /// Required for [`FitMode::Fixed`].
    pub fixed_base: Option<Distribution>,
}

impl ElicitationPlan {
    pub fn new(a_schedule: ASchedule, c: f64, base_family: PriorFamily, fit_mode: FitMode) -> Result<Self> {
        let p = ElicitationPlan {
            a_schedule,
            c,
            base_family,
            fit_mode,
            fixed_location: None,
            sd_denominator: SdDenominator::default(),
            fixed_base: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain(alloc::format!("schedule constant c = {} must be positive", self.c)));
        }
        if let PriorFamily::StudentT { dof } = self.base_family {
            if !(dof > 0.0) {
                return Err(Error::domain("degrees of freedom must be positive"));
            }
            match self.fit_mode {
                FitMode::Mle => {
                    return Err(Error::Unsupported(
                        "closed-form MLE is not available for the Student-t base; use moment_match".into(),
                    ))
                }
                FitMode::MomentMatch if dof <= 2.0 => {
                    return Err(Error::domain("moment matching a Student-t base needs dof > 2"))
                }
                _ => {}
            }
        }
        if self.fit_mode == FitMode::Fixed {
            match self.fixed_base {
                Some(d) => d.validate()?,
                None => return Err(Error::domain("fixed fit mode requires a fixed base distribution")),
            }
        }
        if let Some(loc) = self.fixed_location {
            if !loc.is_finite() {
                return Err(Error::domain("fixed location must be finite"));
            }
        }
        Ok(())
    }
}

pub fn elicit_a(plan: &ElicitationPlan, n: usize) -> Result<f64> {
    plan.validate()?;
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    let n = n as f64;
    Ok(match plan.a_schedule {
        ASchedule::Constant => plan.c,
        ASchedule::Linear => plan.c * n,
        ASchedule::Sqrt => plan.c * libm::sqrt(n),
    })
}

fn sample_sd(xs: &[f64], denom: SdDenominator) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    let d = match denom {
        SdDenominator::N => n,
        SdDenominator::NMinusOne => n - 1.0,
    };
    (mean, libm::sqrt(ss / d))
}

pub fn fit_base(plan: &ElicitationPlan, data: &EmpiricalCdf) -> Result<Distribution> {
    plan.validate()?;
    if plan.fit_mode == FitMode::Fixed {
        return Ok(plan.fixed_base.expect("validated"));
    }
    let xs = data.sorted_values();
    if xs.len() < 2 {
        return Err(Error::DegenerateData("at least two observations are required".into()));
    }
    let (mean, sd) = sample_sd(xs, plan.sd_denominator);
    if !(sd > 0.0) {
        return Err(Error::DegenerateData("sample variance is zero".into()));
    }
    match (plan.base_family, plan.fit_mode) {
        (PriorFamily::Normal, _) => Distribution::normal(plan.fixed_location.unwrap_or(mean), sd),
        (PriorFamily::Laplace, FitMode::Mle) => {
            let med = data.median().expect("nonempty");
            let mad: Vec<f64> = xs.iter().map(|&x| (x - med).abs()).collect();
            let scale = mad.iter().sum::<f64>() / xs.len() as f64;
            if !(scale > 0.0) {
                return Err(Error::DegenerateData("mean absolute deviation is zero".into()));
            }
            Distribution::laplace(plan.fixed_location.unwrap_or(med), scale)
        }
        (PriorFamily::Laplace, _) => {
            Distribution::laplace(plan.fixed_location.unwrap_or(mean), sd / core::f64::consts::SQRT_2)
        }
        (PriorFamily::StudentT { dof }, _) => Distribution::student_t(
            plan.fixed_location.unwrap_or(mean),
            sd * libm::sqrt((dof - 2.0) / dof),
            dof,
        ),
    }
}
