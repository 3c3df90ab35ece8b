//! Univariate distributions used as DP base measures and data-generating
//! processes, and the empirical distribution function.

use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution as _, Open01, StandardNormal};

use crate::special::{self, SpecialFnContext};
use crate::{Error, Result};

/// A univariate probability law.
///
/// `StudentT` is the location-scale family `loc + scale * t_dof`, so a scaled
/// `2 t_5` is `StudentT { loc: 0, scale: 2, dof: 5 }`. `Gamma` uses a rate,
/// `InverseGamma` a scale, and `HalfNormal` is `loc + |N(0, scale^2)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    Laplace { loc: f64, scale: f64 },
    StudentT { loc: f64, scale: f64, dof: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGamma { shape: f64, scale: f64 },
    Beta { alpha: f64, beta: f64 },
    HalfNormal { loc: f64, scale: f64 },
    Uniform { low: f64, high: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("{name} must be finite, got {v}")))
    }
}

impl Distribution {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Distribution::Normal { mean, sd }.validated()
    }

    pub fn laplace(loc: f64, scale: f64) -> Result<Self> {
        Distribution::Laplace { loc, scale }.validated()
    }

    pub fn student_t(loc: f64, scale: f64, dof: f64) -> Result<Self> {
        Distribution::StudentT { loc, scale, dof }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Distribution::Exponential { rate }.validated()
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Distribution::Gamma { shape, rate }.validated()
    }

    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        Distribution::InverseGamma { shape, scale }.validated()
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Distribution::Beta { alpha, beta }.validated()
    }

    pub fn half_normal(loc: f64, scale: f64) -> Result<Self> {
        Distribution::HalfNormal { loc, scale }.validated()
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        Distribution::Uniform { low, high }.validated()
    }

    /// Checks the parameter constraints of the family.
    pub fn validate(&self) -> Result<()> {
        use Distribution::*;
        match *self {
            Normal { mean, sd } => finite("mean", mean).and(positive("sd", sd)),
            Laplace { loc, scale } => finite("loc", loc).and(positive("scale", scale)),
            StudentT { loc, scale, dof } => finite("loc", loc)
                .and(positive("scale", scale))
                .and(positive("dof", dof)),
            Exponential { rate } => positive("rate", rate),
            Gamma { shape, rate } => positive("shape", shape).and(positive("rate", rate)),
            InverseGamma { shape, scale } => {
                positive("shape", shape).and(positive("scale", scale))
            }
            Beta { alpha, beta } => positive("alpha", alpha).and(positive("beta", beta)),
            HalfNormal { loc, scale } => finite("loc", loc).and(positive("scale", scale)),
            Uniform { low, high } => {
                finite("low", low)?;
                finite("high", high)?;
                if low < high {
                    Ok(())
                } else {
                    Err(Error::domain("uniform requires low < high"))
                }
            }
        }
    }

    fn validated(self) -> Result<Self> {
        self.validate().map(|_| self)
    }

    pub fn family_name(&self) -> &'static str {
        use Distribution::*;
        match self {
            Normal { .. } => "normal",
            Laplace { .. } => "laplace",
            StudentT { .. } => "t",
            Exponential { .. } => "exponential",
            Gamma { .. } => "gamma",
            InverseGamma { .. } => "invgamma",
            Beta { .. } => "beta",
            HalfNormal { .. } => "halfnormal",
            Uniform { .. } => "uniform",
        }
    }

    /// Parameters in the order used by the `family:p1,p2[,p3]` notation.
    pub fn params(&self) -> Vec<f64> {
        use Distribution::*;
        match *self {
            Normal { mean, sd } => alloc::vec![mean, sd],
            Laplace { loc, scale } => alloc::vec![loc, scale],
            StudentT { loc, scale, dof } => alloc::vec![loc, scale, dof],
            Exponential { rate } => alloc::vec![rate],
            Gamma { shape, rate } => alloc::vec![shape, rate],
            InverseGamma { shape, scale } => alloc::vec![shape, scale],
            Beta { alpha, beta } => alloc::vec![alpha, beta],
            HalfNormal { loc, scale } => alloc::vec![loc, scale],
            Uniform { low, high } => alloc::vec![low, high],
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_sf(x).0
    }

    /// Survival function `1 - cdf(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        self.cdf_sf(x).1
    }

    /// `(cdf(x), 1 - cdf(x))`, each evaluated without cancellation where the
    /// family allows it.
    pub fn cdf_sf(&self, x: f64) -> (f64, f64) {
        use Distribution::*;
        if x.is_nan() {
            return (f64::NAN, f64::NAN);
        }
        let ctx = SpecialFnContext::default();
        match *self {
            Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (special::norm_cdf(z), special::norm_cdf(-z))
            }
            Laplace { loc, scale } => {
                let z = (x - loc) / scale;
                if z < 0.0 {
                    let c = 0.5 * libm::exp(z);
                    (c, 1.0 - c)
                } else {
                    let s = 0.5 * libm::exp(-z);
                    (1.0 - s, s)
                }
            }
            StudentT { loc, scale, dof } => {
                let t = (x - loc) / scale;
                if t.is_infinite() {
                    return if t > 0.0 { (1.0, 0.0) } else { (0.0, 1.0) };
                }
                // tail = P(T > |t|) = 0.5 * I_{dof/(dof+t^2)}(dof/2, 1/2)
                let w = dof / (dof + t * t);
                let tail = match special::reg_inc_beta_pair(&ctx, w, 0.5 * dof, 0.5) {
                    Ok(p) => 0.5 * p.value,
                    Err(_) => f64::NAN,
                };
                if t < 0.0 {
                    (tail, 1.0 - tail)
                } else {
                    (1.0 - tail, tail)
                }
            }
            Exponential { rate } => {
                if x <= 0.0 {
                    (0.0, 1.0)
                } else {
                    (-libm::expm1(-rate * x), libm::exp(-rate * x))
                }
            }
            Gamma { shape, rate } => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                match special::reg_inc_gamma(&ctx, shape, rate * x) {
                    Ok(g) => (g.lower, g.upper),
                    Err(_) => (f64::NAN, f64::NAN),
                }
            }
            InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                match special::reg_inc_gamma(&ctx, shape, scale / x) {
                    Ok(g) => (g.upper, g.lower),
                    Err(_) => (f64::NAN, f64::NAN),
                }
            }
            Beta { alpha, beta } => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                if x >= 1.0 {
                    return (1.0, 0.0);
                }
                match special::reg_inc_beta_pair(&ctx, x, alpha, beta) {
                    Ok(p) => (p.value, p.complement),
                    Err(_) => (f64::NAN, f64::NAN),
                }
            }
            HalfNormal { loc, scale } => {
                if x <= loc {
                    return (0.0, 1.0);
                }
                let z = (x - loc) / scale;
                let s = libm::erfc(z / SQRT_2);
                (libm::erf(z / SQRT_2), s)
            }
            Uniform { low, high } => {
                let c = ((x - low) / (high - low)).clamp(0.0, 1.0);
                (c, 1.0 - c)
            }
        }
    }

    pub fn logpdf(&self, x: f64) -> f64 {
        use Distribution::*;
        match *self {
            Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - libm::log(sd) - 0.5 * libm::log(2.0 * PI)
            }
            Laplace { loc, scale } => -libm::fabs(x - loc) / scale - libm::log(2.0 * scale),
            StudentT { loc, scale, dof } => {
                let t = (x - loc) / scale;
                special::ln_gamma(0.5 * (dof + 1.0))
                    - special::ln_gamma(0.5 * dof)
                    - 0.5 * libm::log(dof * PI)
                    - libm::log(scale)
                    - 0.5 * (dof + 1.0) * libm::log1p(t * t / dof)
            }
            Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    libm::log(rate) - rate * x
                }
            }
            Gamma { shape, rate } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * libm::log(rate) + (shape - 1.0) * libm::log(x)
                    - rate * x
                    - special::ln_gamma(shape)
            }
            InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * libm::log(scale) - (shape + 1.0) * libm::log(x)
                    - scale / x
                    - special::ln_gamma(shape)
            }
            Beta { alpha, beta } => {
                if x <= 0.0 || x >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                (alpha - 1.0) * libm::log(x) + (beta - 1.0) * libm::log1p(-x)
                    - special::ln_beta(alpha, beta)
            }
            HalfNormal { loc, scale } => {
                if x < loc {
                    return f64::NEG_INFINITY;
                }
                let z = (x - loc) / scale;
                -0.5 * z * z - libm::log(scale) + 0.5 * (LN_2 - libm::log(PI))
            }
            Uniform { low, high } => {
                if x < low || x > high {
                    f64::NEG_INFINITY
                } else {
                    -libm::log(high - low)
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        libm::exp(self.logpdf(x))
    }

    /// Quantile function for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(alloc::format!("quantile level {p} outside (0, 1)")));
        }
        use Distribution::*;
        Ok(match *self {
            Normal { mean, sd } => mean + sd * special::norm_quantile(p),
            Laplace { loc, scale } => {
                if p < 0.5 {
                    loc + scale * libm::log(2.0 * p)
                } else {
                    loc - scale * libm::log(2.0 * (1.0 - p))
                }
            }
            Exponential { rate } => -libm::log1p(-p) / rate,
            HalfNormal { loc, scale } => loc + scale * special::norm_quantile(0.5 * (1.0 + p)),
            Uniform { low, high } => low + p * (high - low),
            StudentT { loc, scale, .. } => {
                let guess = loc + scale * special::norm_quantile(p);
                self.invert_cdf(p, guess)?
            }
            Gamma { shape, rate } => self.invert_cdf(p, shape / rate)?,
            InverseGamma { shape, scale } => {
                // inverse of a Gamma(shape, rate = scale) variate
                let g = Distribution::Gamma { shape, rate: scale };
                1.0 / g.quantile(1.0 - p)?
            }
            Beta { alpha, beta } => self.invert_cdf(p, alpha / (alpha + beta))?,
        })
    }

    /// Safeguarded Newton iteration on the cdf with bisection fallback.
    fn invert_cdf(&self, p: f64, guess: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.support();
        let upper_tail = p > 0.5;
        let target = if upper_tail { 1.0 - p } else { p };
        // residual oriented so it increases in x
        let resid = |x: f64| {
            let (c, s) = self.cdf_sf(x);
            if upper_tail {
                target - s
            } else {
                c - target
            }
        };
        // finite bracket
        let mut x = guess.clamp(
            if lo.is_finite() { lo } else { f64::MIN },
            if hi.is_finite() { hi } else { f64::MAX },
        );
        if !x.is_finite() || x <= lo || x >= hi {
            x = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo + 1.0
            } else if hi.is_finite() {
                hi - 1.0
            } else {
                0.0
            };
        }
        let r0 = resid(x);
        if r0 >= 0.0 {
            hi = x;
            if !lo.is_finite() {
                let mut step = 1.0_f64.max(x.abs());
                let mut probe = x - step;
                while resid(probe) >= 0.0 {
                    step *= 2.0;
                    probe = x - step;
                    if !probe.is_finite() {
                        return Err(Error::Convergence {
                            routine: "quantile bracket",
                            iterations: 0,
                        });
                    }
                }
                lo = probe;
            }
        } else {
            lo = x;
            if !hi.is_finite() {
                let mut step = 1.0_f64.max(x.abs());
                let mut probe = x + step;
                while resid(probe) < 0.0 {
                    step *= 2.0;
                    probe = x + step;
                    if !probe.is_finite() {
                        return Err(Error::Convergence {
                            routine: "quantile bracket",
                            iterations: 0,
                        });
                    }
                }
                hi = probe;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..400 {
            let r = resid(x);
            if r == 0.0 {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let dens = self.pdf(x);
            let mut next = if dens > 0.0 && dens.is_finite() { x - r / dens } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs())
            {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::Convergence {
            routine: "quantile inversion",
            iterations: 400,
        })
    }

    /// Closed support `(inf, sup)`; infinite ends are reported as infinities.
    pub fn support(&self) -> (f64, f64) {
        use Distribution::*;
        match *self {
            Normal { .. } | Laplace { .. } | StudentT { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Exponential { .. } | Gamma { .. } | InverseGamma { .. } => (0.0, f64::INFINITY),
            Beta { .. } => (0.0, 1.0),
            HalfNormal { loc, .. } => (loc, f64::INFINITY),
            Uniform { low, high } => (low, high),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        use Distribution::*;
        match *self {
            Normal { mean, .. } => Some(mean),
            Laplace { loc, .. } => Some(loc),
            StudentT { loc, dof, .. } => (dof > 1.0).then_some(loc),
            Exponential { rate } => Some(1.0 / rate),
            Gamma { shape, rate } => Some(shape / rate),
            InverseGamma { shape, scale } => (shape > 1.0).then(|| scale / (shape - 1.0)),
            Beta { alpha, beta } => Some(alpha / (alpha + beta)),
            HalfNormal { loc, scale } => Some(loc + scale * libm::sqrt(2.0 / PI)),
            Uniform { low, high } => Some(0.5 * (low + high)),
        }
    }

    /// Draws one variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use Distribution::*;
        match *self {
            Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Laplace { loc, scale } => {
                let u: f64 = Open01.sample(rng);
                let u = u - 0.5;
                if u < 0.0 {
                    loc + scale * libm::log1p(2.0 * u)
                } else {
                    loc - scale * libm::log1p(-2.0 * u)
                }
            }
            StudentT { loc, scale, dof } => {
                let z: f64 = StandardNormal.sample(rng);
                let chi = rand_distr::ChiSquared::new(dof).expect("validated dof").sample(rng);
                loc + scale * z / libm::sqrt(chi / dof)
            }
            Exponential { rate } => {
                let e: f64 = rand_distr::Exp1.sample(rng);
                e / rate
            }
            Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma")
                .sample(rng),
            InverseGamma { shape, scale } => {
                let g = rand_distr::Gamma::new(shape, 1.0 / scale)
                    .expect("validated inverse gamma")
                    .sample(rng);
                1.0 / g
            }
            Beta { alpha, beta } => rand_distr::Beta::new(alpha, beta)
                .expect("validated beta")
                .sample(rng),
            HalfNormal { loc, scale } => {
                let z: f64 = StandardNormal.sample(rng);
                loc + scale * libm::fabs(z)
            }
            Uniform { low, high } => {
                let u: f64 = rng.random();
                low + u * (high - low)
            }
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Empirical distribution function of a sample.
///
/// Keeps the sorted sample plus the distinct values and their cumulative
/// counts so that step evaluation and jump enumeration are logarithmic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    distinct: Vec<f64>,
    cumulative: Vec<usize>,
}

impl EmpiricalCdf {
    /// Builds the ecdf; rejects non-finite values.
    pub fn new(values: &[f64]) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(alloc::format!("non-finite sample value {v}")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mut distinct: Vec<f64> = Vec::new();
        let mut cumulative = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            if distinct.last() == Some(&v) {
                *cumulative.last_mut().unwrap() = i + 1;
            } else {
                distinct.push(v);
                cumulative.push(i + 1);
            }
        }
        Ok(EmpiricalCdf {
            sorted,
            distinct,
            cumulative,
        })
    }

    pub fn empty() -> Self {
        EmpiricalCdf {
            sorted: Vec::new(),
            distinct: Vec::new(),
            cumulative: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn distinct_values(&self) -> &[f64] {
        &self.distinct
    }

    /// Number of observations `<= distinct_values()[j]`.
    pub fn cumulative_counts(&self) -> &[usize] {
        &self.cumulative
    }

    /// Order statistic `X_(i)`, 1-based.
    pub fn order_stat(&self, i: usize) -> f64 {
        self.sorted[i - 1]
    }

    /// `#{i : x_i <= x}`.
    pub fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    /// `#{i : x_i < x}`.
    pub fn count_lt(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v < x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.count_le(x) as f64 / self.n() as f64
    }

    pub fn min(&self) -> Option<f64> {
        self.sorted.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.sorted.last().copied()
    }

    pub fn mean(&self) -> Option<f64> {
        if self.sorted.is_empty() {
            return None;
        }
        Some(self.sorted.iter().sum::<f64>() / self.n() as f64)
    }

    pub fn median(&self) -> Option<f64> {
        let n = self.n();
        if n == 0 {
            return None;
        }
        Some(if n % 2 == 1 {
            self.sorted[n / 2]
        } else {
            0.5 * (self.sorted[n / 2 - 1] + self.sorted[n / 2])
        })
    }
}
