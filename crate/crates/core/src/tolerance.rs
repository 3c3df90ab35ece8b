//! Tolerance intervals from a quantile-process posterior, plus the
//! frequentist order-statistic baseline and sample-size rules.
//!
//! Naming follows the interval, not the letter: an *upper* limit `U` gives
//! the interval `(-inf, U]` and solves `H_beta(U) >= gamma`; a *lower* limit
//! `L` gives `[L, inf)` and is the largest `x` with `H_{1-beta}(x) <= 1-gamma`.

use crate::distributions::{Distribution, EmpiricalCdf};
use crate::dp_quantile::QuantileProcess;
use crate::special::{self, SpecialFnContext};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Side {
    Lower,
    Upper,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Kind {
    /// `(beta, gamma)`: content at least `beta` with posterior probability at
    /// least `gamma`.
    ContentGamma,
    /// Posterior-expected content equal to `beta`.
    Expectation,
}

/// How a two-sided `(beta, gamma)` interval splits its guarantees between
/// the two one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BonferroniConvention {
    /// Each side at level `(1+gamma)/2` and content `beta`.
    LevelSplit,
    /// Each side at level `(1+gamma)/2` and content `(1+beta)/2`, which
    /// bounds the joint content by `beta`.
    #[default]
    LevelAndContentSplit,
}

impl BonferroniConvention {
    pub fn name(self) -> &'static str {
        match self {
            BonferroniConvention::LevelSplit => "level_split",
            BonferroniConvention::LevelAndContentSplit => "level_and_content_split",
        }
    }

    /// `(content, level)` used by each one-sided limit.
    pub fn per_side(self, beta: f64, gamma: f64) -> (f64, f64) {
        let level = 1.0 - (1.0 - gamma) / 2.0;
        match self {
            BonferroniConvention::LevelSplit => (beta, level),
            BonferroniConvention::LevelAndContentSplit => (1.0 - (1.0 - beta) / 2.0, level),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ToleranceSpec {
    pub beta: f64,
    /// Ignored for [`Kind::Expectation`].
    pub gamma: f64,
    pub side: Side,
    pub kind: Kind,
    /// Share of `1 - beta` left below a two-sided expectation interval.
    pub q_split: f64,
    pub convention: BonferroniConvention,
}

impl ToleranceSpec {
    pub fn new(beta: f64, gamma: f64, side: Side, kind: Kind) -> Result<Self> {
        let s = ToleranceSpec {
            beta,
            gamma,
            side,
            kind,
            q_split: 0.5,
            convention: BonferroniConvention::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_q_split(mut self, q_split: f64) -> Result<Self> {
        self.q_split = q_split;
        self.validate()?;
        Ok(self)
    }

    pub fn with_convention(mut self, convention: BonferroniConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::domain(alloc::format!("beta = {} must lie in (0, 1)", self.beta)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::domain(alloc::format!("gamma = {} must lie in (0, 1)", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.q_split) {
            return Err(Error::domain(alloc::format!("q_split = {} must lie in [0, 1]", self.q_split)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalFlags {
    /// The level could only be met at the sample extreme (no prior mass).
    pub infeasible_small_n: bool,
    /// A limit sits on an observation (the cdf jumps there).
    pub at_data_point: bool,
    /// An expectation integral lost more than 1e-8 outside its window.
    pub grid_truncated: bool,
}

impl IntervalFlags {
    fn merge(self, o: IntervalFlags) -> IntervalFlags {
        IntervalFlags {
            infeasible_small_n: self.infeasible_small_n || o.infeasible_small_n,
            at_data_point: self.at_data_point || o.at_data_point,
            grid_truncated: self.grid_truncated || o.grid_truncated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ToleranceInterval {
    /// `-inf` for upper one-sided intervals.
    pub lower: f64,
    /// `+inf` for lower one-sided intervals.
    pub upper: f64,
    /// Posterior probability attained at the returned limits (content-gamma
    /// kind only; a Bonferroni lower bound for two-sided intervals).
    pub achieved_level: Option<f64>,
    pub flags: IntervalFlags,
    /// Set for two-sided content-gamma intervals.
    pub convention: Option<BonferroniConvention>,
}

impl ToleranceInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `(-inf, U]` with `U` the smallest `x` such that `H_beta(x) >= gamma`.
pub fn one_sided_upper_bg<P: QuantileProcess + ?Sized>(
    p: &P,
    beta: f64,
    gamma: f64,
) -> Result<ToleranceInterval> {
    ToleranceSpec::new(beta, gamma, Side::Upper, Kind::ContentGamma)?;
    let c = p.crossing(beta, gamma, false)?;
    Ok(ToleranceInterval {
        lower: f64::NEG_INFINITY,
        upper: c.x,
        achieved_level: Some(c.value),
        flags: IntervalFlags {
            infeasible_small_n: p.is_atomic() && Some(c.x) == p.data().max(),
            at_data_point: c.on_jump,
            grid_truncated: false,
        },
        convention: None,
    })
}

/// `[L, inf)` with `L` the largest `x` such that `H_{1-beta}(x) <= 1 - gamma`.
pub fn one_sided_lower_bg<P: QuantileProcess + ?Sized>(
    p: &P,
    beta: f64,
    gamma: f64,
) -> Result<ToleranceInterval> {
    ToleranceSpec::new(beta, gamma, Side::Lower, Kind::ContentGamma)?;
    let c = p.crossing(1.0 - beta, 1.0 - gamma, true)?;
    let lower = if c.on_jump { c.x } else { c.below };
    Ok(ToleranceInterval {
        lower,
        upper: f64::INFINITY,
        achieved_level: Some(1.0 - c.below_value),
        flags: IntervalFlags {
            infeasible_small_n: p.is_atomic() && Some(c.x) == p.data().min(),
            at_data_point: c.on_jump,
            grid_truncated: false,
        },
        convention: None,
    })
}

/// Intersection of a lower and an upper one-sided limit with Bonferroni-
/// adjusted content and level.
pub fn two_sided_bg_bonferroni<P: QuantileProcess + ?Sized>(
    p: &P,
    beta: f64,
    gamma: f64,
    convention: BonferroniConvention,
) -> Result<ToleranceInterval> {
    ToleranceSpec::new(beta, gamma, Side::TwoSided, Kind::ContentGamma)?;
    let (content, level) = convention.per_side(beta, gamma);
    let lo = one_sided_lower_bg(p, content, level)?;
    let hi = one_sided_upper_bg(p, content, level)?;
    if lo.lower > hi.upper {
        return Err(Error::InvertedInterval {
            lower: lo.lower,
            upper: hi.upper,
        });
    }
    let achieved = match (lo.achieved_level, hi.achieved_level) {
        (Some(l), Some(u)) => Some((l + u - 1.0).max(0.0)),
        _ => None,
    };
    Ok(ToleranceInterval {
        lower: lo.lower,
        upper: hi.upper,
        achieved_level: achieved,
        flags: lo.flags.merge(hi.flags),
        convention: Some(convention),
    })
}

/// Beta-expectation interval from posterior means of quantiles.
///
/// Two-sided: `[E Q(q1), E Q(q1 + beta)]` with `q1 = q_split (1 - beta)`.
pub fn expectation_interval<P: QuantileProcess + ?Sized>(
    p: &P,
    beta: f64,
    side: Side,
    q_split: f64,
) -> Result<ToleranceInterval> {
    ToleranceSpec::new(beta, 0.5, side, Kind::Expectation)?.with_q_split(q_split)?;
    let mut flags = IntervalFlags::default();
    let mut eval = |q: f64| -> Result<f64> {
        let e = p.expected_quantile(q)?;
        flags.grid_truncated |= e.truncated;
        Ok(e.value)
    };
    let (lower, upper) = match side {
        Side::Upper => (f64::NEG_INFINITY, eval(beta)?),
        Side::Lower => (eval(1.0 - beta)?, f64::INFINITY),
        Side::TwoSided => {
            let q1 = q_split * (1.0 - beta);
            let q2 = (q1 + beta).min(1.0);
            (eval(q1)?, eval(q2)?)
        }
    };
    Ok(ToleranceInterval {
        lower,
        upper,
        achieved_level: None,
        flags,
        convention: None,
    })
}

/// Dispatches on the kind and side of `spec`.
pub fn tolerance_interval<P: QuantileProcess + ?Sized>(
    p: &P,
    spec: &ToleranceSpec,
) -> Result<ToleranceInterval> {
    spec.validate()?;
    match (spec.kind, spec.side) {
        (Kind::ContentGamma, Side::Upper) => one_sided_upper_bg(p, spec.beta, spec.gamma),
        (Kind::ContentGamma, Side::Lower) => one_sided_lower_bg(p, spec.beta, spec.gamma),
        (Kind::ContentGamma, Side::TwoSided) => {
            two_sided_bg_bonferroni(p, spec.beta, spec.gamma, spec.convention)
        }
        (Kind::Expectation, side) => expectation_interval(p, spec.beta, side, spec.q_split),
    }
}

/// `P(Bin(trials, p) <= k)`.
pub fn binomial_cdf(k: i64, trials: u64, p: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as u64;
    if k >= trials {
        return 1.0;
    }
    special::reg_inc_beta_pair(&SpecialFnContext::default(), p, (k + 1) as f64, (trials - k) as f64)
        .map(|b| b.complement)
        .unwrap_or(f64::NAN)
}

// Exact ties such as P(Bin(3, 0.5) <= 1) = 0.5 come back a few ulps low.
const TIE_SLACK: f64 = 1e-12;

/// Order-statistic index of the `a = 0` upper limit: the smallest `m` with
/// `1 - Be(beta; m, n - m) >= gamma`, i.e. `P(Bin(n-1, beta) <= m-1) >= gamma`.
/// `None` when no `m <= n - 1` qualifies and the limit falls back to the
/// sample maximum.
pub fn dp_a0_index(n: usize, beta: f64, gamma: f64) -> Option<usize> {
    if n < 2 {
        return None;
    }
    let trials = (n - 1) as u64;
    smallest_index(n - 1, |m| binomial_cdf(m as i64 - 1, trials, beta) >= gamma - TIE_SLACK)
}

fn smallest_index(max: usize, pass: impl Fn(usize) -> bool) -> Option<usize> {
    // pass is monotone in m
    if max == 0 || !pass(max) {
        return None;
    }
    let (mut lo, mut hi) = (1usize, max);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pass(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WilksLimit {
    pub m: usize,
    pub limit: f64,
    pub infeasible: bool,
}

/// Frequentist nonparametric upper limit `X_(m)` with `m` the smallest
/// integer such that `P(Bin(n, beta) <= m - 1) >= gamma`. Falls back to
/// `X_(n)` when no `m <= n` qualifies.
pub fn wilks_upper(data: &EmpiricalCdf, beta: f64, gamma: f64) -> Result<WilksLimit> {
    ToleranceSpec::new(beta, gamma, Side::Upper, Kind::ContentGamma)?;
    let n = data.n();
    if n == 0 {
        return Err(Error::DegenerateData("empty sample".into()));
    }
    match wilks_index(n, beta, gamma) {
        Some(m) => Ok(WilksLimit {
            m,
            limit: data.order_stat(m),
            infeasible: false,
        }),
        None => Ok(WilksLimit {
            m: n,
            limit: data.order_stat(n),
            infeasible: true,
        }),
    }
}

pub fn wilks_index(n: usize, beta: f64, gamma: f64) -> Option<usize> {
    smallest_index(n, |m| binomial_cdf(m as i64 - 1, n as u64, beta) >= gamma - TIE_SLACK)
}

/// Lower-limit counterpart of [`wilks_upper`] by reflection: `X_(n+1-m)`.
pub fn wilks_lower(data: &EmpiricalCdf, beta: f64, gamma: f64) -> Result<WilksLimit> {
    let up = wilks_upper(data, beta, gamma)?;
    let idx = data.n() + 1 - up.m;
    Ok(WilksLimit {
        m: idx,
        limit: data.order_stat(idx),
        infeasible: up.infeasible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeasibilityMethod {
    /// `n >= ln(1-gamma) / ln(beta)`.
    Frequentist,
    /// One more than the frequentist bound.
    DpA0RuleOfThumb,
}

pub fn min_feasible_n(beta: f64, gamma: f64, method: FeasibilityMethod) -> Result<usize> {
    ToleranceSpec::new(beta, gamma, Side::Upper, Kind::ContentGamma)?;
    let mut bound = libm::log1p(-gamma) / libm::log(beta);
    if method == FeasibilityMethod::DpA0RuleOfThumb {
        bound += 1.0;
    }
    Ok((libm::ceil(bound) as usize).max(1))
}

/// `F(upper) - F(lower)` under the true law.
pub fn coverage_probability(interval: &ToleranceInterval, truth: &Distribution) -> f64 {
    let fu = if interval.upper == f64::INFINITY {
        1.0
    } else {
        truth.cdf(interval.upper)
    };
    let fl = if interval.lower == f64::NEG_INFINITY {
        0.0
    } else {
        truth.cdf(interval.lower)
    };
    (fu - fl).clamp(0.0, 1.0)
}
