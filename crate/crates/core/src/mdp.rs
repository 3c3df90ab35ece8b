//! Mixture of Dirichlet processes: `X | F ~ F`, `F | a, xi ~ DP(a, F0(xi))`,
//! `a ~ Gamma(a_a, b_a)`, `xi = (mu, sigma^2)` with `mu ~ N(mu0, tau0^2)` and
//! `sigma^2 ~ InvGamma(ig_shape, ig_scale)`.
//!
//! For continuous data all observations are distinct, so the configuration
//! of the Polya urn is trivial and the conditionals only involve the `k`
//! distinct values `y_1..y_k`:
//!
//! * `xi | ...` has density proportional to `p(xi) prod_j f0(y_j; xi)`,
//! * `eta | ... ~ Beta(a, n)`,
//! * `a | ... ~ Gamma(a_a + k, b_a - ln eta)` (shape, rate).
//!
//! Tolerance limits average the quantile-process cdf over the retained draws.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Beta, Distribution as _, Gamma, StandardNormal};

use crate::distributions::{Distribution, EmpiricalCdf};
use crate::dp_quantile::{self, DpPosterior, ExpectedQuantile, QuantileProcess};
use crate::rng::RngStream;
use crate::tolerance::{self, BonferroniConvention, Side, ToleranceInterval};
use crate::{Error, Result};

/// Family of the base measure `F0(xi)`; `xi = (mu, sigma^2)` is the mean and
/// variance in both cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BaseFamily {
    /// `N(mu, sigma^2)`; the `xi` update is Gibbs within the semi-conjugate
    /// Normal / Inverse-Gamma pair.
    #[default]
    NormalMeanVar,
    /// Laplace with location `mu` and variance `sigma^2`; `xi` is updated by
    /// random-walk Metropolis on `(mu, ln sigma)`.
    LaplaceLocScale,
}

impl BaseFamily {
    pub fn distribution(self, mu: f64, var: f64) -> Result<Distribution> {
        let sd = libm::sqrt(var);
        match self {
            BaseFamily::NormalMeanVar => Distribution::normal(mu, sd),
            BaseFamily::LaplaceLocScale => Distribution::laplace(mu, sd / core::f64::consts::SQRT_2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MdpConfig {
    pub a_a: f64,
    pub b_a: f64,
    pub base_family: BaseFamily,
    pub mu0: f64,
    pub tau0: f64,
    pub ig_shape: f64,
    pub ig_scale: f64,
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for MdpConfig {
    fn default() -> Self {
        MdpConfig {
            a_a: 1.0,
            b_a: 1.0,
            base_family: BaseFamily::NormalMeanVar,
            mu0: 0.0,
            tau0: 10.0,
            ig_shape: 1.0,
            ig_scale: 1.0,
            iterations: 5000,
            burnin: 1000,
            thin: 2,
            seed: 0,
        }
    }
}

impl MdpConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a_a", self.a_a),
            ("b_a", self.b_a),
            ("tau0", self.tau0),
            ("ig_shape", self.ig_shape),
            ("ig_scale", self.ig_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(alloc::format!("{name} = {v} must be positive")));
            }
        }
        if !self.mu0.is_finite() {
            return Err(Error::domain("mu0 must be finite"));
        }
        if self.iterations <= self.burnin {
            return Err(Error::domain("iterations must exceed burnin"));
        }
        if self.thin == 0 {
            return Err(Error::domain("thin must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MdpDraws {
    pub base_family: BaseFamily,
    pub a: Vec<f64>,
    /// `(mu, sigma^2)` per retained sweep.
    pub xi: Vec<(f64, f64)>,
    pub eta: Vec<f64>,
    /// Number of distinct observations.
    pub k: usize,
    /// Post-burnin Metropolis acceptance rate (Laplace base only).
    pub acceptance_rate: Option<f64>,
}

impl MdpDraws {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// The quantile-process posterior averaged over the draws.
    pub fn mixture(&self, data: &EmpiricalCdf) -> Result<MdpMixture> {
        if self.is_empty() {
            return Err(Error::domain("no posterior draws"));
        }
        let bases = self
            .xi
            .iter()
            .map(|&(mu, var)| self.base_family.distribution(mu, var))
            .collect::<Result<Vec<_>>>()?;
        Ok(MdpMixture {
            a: self.a.clone(),
            bases,
            data: data.clone(),
        })
    }

    pub fn mean_a(&self) -> f64 {
        mean(&self.a)
    }
}

fn mean(v: &[f64]) -> f64 {
    let mut m = 0.0;
    for (i, &x) in v.iter().enumerate() {
        m += (x - m) / (i + 1) as f64;
    }
    m
}

/// `eta ~ Beta(a, n)`, redrawn until it lies strictly inside (0, 1).
pub fn sample_eta<R: Rng + ?Sized>(rng: &mut R, a: f64, n: usize) -> Result<f64> {
    let d = Beta::new(a, n as f64).map_err(|_| Error::domain("invalid Beta parameters for eta"))?;
    for _ in 0..1000 {
        let e: f64 = d.sample(rng);
        if e > 0.0 && e < 1.0 && e.is_finite() {
            return Ok(e);
        }
    }
    Err(Error::Convergence {
        routine: "eta update",
        iterations: 1000,
    })
}

/// `a ~ Gamma(a_a + k, rate = b_a - ln eta)`.
pub fn sample_a<R: Rng + ?Sized>(rng: &mut R, a_a: f64, b_a: f64, k: usize, eta: f64) -> Result<f64> {
    let rate = b_a - libm::log(eta);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain("non-positive rate in the concentration update"));
    }
    let d = Gamma::new(a_a + k as f64, 1.0 / rate)
        .map_err(|_| Error::domain("invalid Gamma parameters for a"))?;
    for _ in 0..1000 {
        let a: f64 = d.sample(rng);
        if a > 0.0 && a.is_finite() {
            return Ok(a);
        }
    }
    Err(Error::Convergence {
        routine: "concentration update",
        iterations: 1000,
    })
}

fn sample_inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    let d = Gamma::new(shape, 1.0).map_err(|_| Error::domain("invalid Inverse-Gamma shape"))?;
    for _ in 0..1000 {
        let g: f64 = d.sample(rng);
        let v = scale / g;
        if v > 0.0 && v.is_finite() {
            return Ok(v);
        }
    }
    Err(Error::Convergence {
        routine: "variance update",
        iterations: 1000,
    })
}

/// One Gibbs pass over `(mu, sigma^2)` for the Normal base:
/// `mu | sigma^2 ~ N(m, v)`, `v = 1 / (1/tau0^2 + k/sigma^2)`, then
/// `sigma^2 | mu ~ InvGamma(shape + k/2, scale + sum (y - mu)^2 / 2)`.
pub fn sample_normal_xi<R: Rng + ?Sized>(
    rng: &mut R,
    config: &MdpConfig,
    y: &[f64],
    var: f64,
) -> Result<(f64, f64)> {
    let k = y.len() as f64;
    let sum: f64 = y.iter().sum();
    let prec0 = 1.0 / (config.tau0 * config.tau0);
    let v = 1.0 / (prec0 + k / var);
    let m = v * (config.mu0 * prec0 + sum / var);
    let z: f64 = rng.sample(StandardNormal);
    let mu = m + libm::sqrt(v) * z;
    let ss: f64 = y.iter().map(|&x| (x - mu) * (x - mu)).sum();
    let var = sample_inv_gamma(rng, config.ig_shape + 0.5 * k, config.ig_scale + 0.5 * ss)?;
    Ok((mu, var))
}

fn laplace_log_target(config: &MdpConfig, y: &[f64], mu: f64, log_sd: f64) -> f64 {
    let b = libm::exp(log_sd) / core::f64::consts::SQRT_2;
    let dmu = mu - config.mu0;
    let mut lp = -0.5 * dmu * dmu / (config.tau0 * config.tau0);
    // sigma^2 ~ InvGamma on the log-sd scale, including the Jacobian
    lp += -2.0 * config.ig_shape * log_sd - config.ig_scale * libm::exp(-2.0 * log_sd);
    let abs_dev: f64 = y.iter().map(|&x| (x - mu).abs()).sum();
    lp - y.len() as f64 * libm::log(b) - abs_dev / b
}

struct LaplaceWalk {
    step_mu: f64,
    step_log_sd: f64,
    accepted: usize,
    proposed: usize,
}

impl LaplaceWalk {
    fn step<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        config: &MdpConfig,
        y: &[f64],
        mu: f64,
        var: f64,
    ) -> (f64, f64) {
        let log_sd = 0.5 * libm::log(var);
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let mu_p = mu + self.step_mu * z1;
        let ls_p = log_sd + self.step_log_sd * z2;
        let log_ratio = laplace_log_target(config, y, mu_p, ls_p) - laplace_log_target(config, y, mu, log_sd);
        let u: f64 = rng.random();
        self.proposed += 1;
        if libm::log(u) < log_ratio {
            self.accepted += 1;
            (mu_p, libm::exp(2.0 * ls_p))
        } else {
            (mu, var)
        }
    }

    fn adapt(&mut self) {
        if self.proposed == 0 {
            return;
        }
        let rate = self.accepted as f64 / self.proposed as f64;
        let f = if rate > 0.5 {
            1.25
        } else if rate < 0.2 {
            0.8
        } else {
            1.0
        };
        self.step_mu *= f;
        self.step_log_sd *= f;
        self.accepted = 0;
        self.proposed = 0;
    }
}

/// Runs the chain from `a = 1`, `mu = mean`, `sigma^2 = variance` with the
/// generator `RngStream::new(config.seed, 0)`.
pub fn gibbs_run(config: &MdpConfig, data: &EmpiricalCdf) -> Result<MdpDraws> {
    let mut rng = RngStream::new(config.seed, 0);
    gibbs_run_with(config, data, &mut rng)
}

pub fn gibbs_run_with<R: Rng + ?Sized>(
    config: &MdpConfig,
    data: &EmpiricalCdf,
    rng: &mut R,
) -> Result<MdpDraws> {
    config.validate()?;
    let n = data.n();
    if n < 2 {
        return Err(Error::DegenerateData("at least two observations are required".into()));
    }
    let y = data.distinct_values();
    let k = y.len();
    if k < 2 {
        return Err(Error::DegenerateData("all observations are identical".into()));
    }
    let ybar = y.iter().sum::<f64>() / k as f64;
    let yvar = y.iter().map(|&x| (x - ybar) * (x - ybar)).sum::<f64>() / k as f64;

    let mut a = 1.0;
    let mut mu = ybar;
    let mut var = yvar;
    let mut walk = LaplaceWalk {
        step_mu: libm::sqrt(yvar / k as f64),
        step_log_sd: 1.0 / libm::sqrt(k as f64),
        accepted: 0,
        proposed: 0,
    };
    let kept = (config.iterations - config.burnin).div_ceil(config.thin);
    let mut out = MdpDraws {
        base_family: config.base_family,
        a: Vec::with_capacity(kept),
        xi: Vec::with_capacity(kept),
        eta: Vec::with_capacity(kept),
        k,
        acceptance_rate: None,
    };

    for sweep in 0..config.iterations {
        match config.base_family {
            BaseFamily::NormalMeanVar => {
                (mu, var) = sample_normal_xi(rng, config, y, var)?;
            }
            BaseFamily::LaplaceLocScale => {
                (mu, var) = walk.step(rng, config, y, mu, var);
                if sweep < config.burnin && (sweep + 1) % 50 == 0 {
                    walk.adapt();
                }
                if sweep + 1 == config.burnin {
                    walk.adapt();
                    walk.accepted = 0;
                    walk.proposed = 0;
                }
            }
        }
        let eta = sample_eta(rng, a, n)?;
        a = sample_a(rng, config.a_a, config.b_a, k, eta)?;
        if sweep >= config.burnin && (sweep - config.burnin) % config.thin == 0 {
            out.a.push(a);
            out.xi.push((mu, var));
            out.eta.push(eta);
        }
    }
    if config.base_family == BaseFamily::LaplaceLocScale && walk.proposed > 0 {
        out.acceptance_rate = Some(walk.accepted as f64 / walk.proposed as f64);
    }
    Ok(out)
}

/// Posterior-averaged quantile-process cdf
/// `Hbar(x) = (1/S) sum_s H_{n, a_s, q}(x; F0(xi_s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpMixture {
    a: Vec<f64>,
    bases: Vec<Distribution>,
    data: EmpiricalCdf,
}

impl MdpMixture {
    pub fn from_components(a: Vec<f64>, bases: Vec<Distribution>, data: EmpiricalCdf) -> Result<Self> {
        if a.is_empty() || a.len() != bases.len() {
            return Err(Error::domain("mixture needs one base per concentration, at least one"));
        }
        if a.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::domain("concentrations must be finite and >= 0"));
        }
        if a.iter().any(|&v| v == 0.0) && data.is_empty() {
            return Err(Error::UndefinedPosterior);
        }
        Ok(MdpMixture { a, bases, data })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn component(&self, s: usize) -> Result<DpPosterior> {
        DpPosterior::new(self.a[s], self.bases[s], self.data.clone())
    }
}

impl QuantileProcess for MdpMixture {
    fn data(&self) -> &EmpiricalCdf {
        &self.data
    }

    fn cdf_with_count(&self, q: f64, x: f64, count: usize) -> Result<f64> {
        let n = self.data.n();
        let mut m = 0.0;
        for (s, (&a, base)) in self.a.iter().zip(&self.bases).enumerate() {
            let v = dp_quantile::dp_cdf_with_count(a, base, n, q, x, count)?;
            m += (v - m) / (s + 1) as f64;
        }
        Ok(m)
    }

    fn search_bracket(&self) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (&a, base) in self.a.iter().zip(&self.bases) {
            let (l, h) = dp_quantile::dp_search_bracket(a, base, &self.data)?;
            lo = lo.min(l);
            hi = hi.max(h);
        }
        Ok((lo, hi))
    }

    fn is_atomic(&self) -> bool {
        self.a.iter().all(|&a| a == 0.0)
    }

    fn expected_quantile(&self, q: f64) -> Result<ExpectedQuantile> {
        let mut m = 0.0;
        let mut truncated = false;
        for s in 0..self.len() {
            let e = self.component(s)?.expected_quantile(q)?;
            truncated |= e.truncated;
            m += (e.value - m) / (s + 1) as f64;
        }
        Ok(ExpectedQuantile { value: m, truncated })
    }
}

/// `(beta, gamma)` interval from the averaged cdf.
pub fn mdp_tolerance_bg(
    draws: &MdpDraws,
    data: &EmpiricalCdf,
    beta: f64,
    gamma: f64,
    side: Side,
    convention: BonferroniConvention,
) -> Result<ToleranceInterval> {
    let mix = draws.mixture(data)?;
    match side {
        Side::Upper => tolerance::one_sided_upper_bg(&mix, beta, gamma),
        Side::Lower => tolerance::one_sided_lower_bg(&mix, beta, gamma),
        Side::TwoSided => tolerance::two_sided_bg_bonferroni(&mix, beta, gamma, convention),
    }
}

/// `(1/S) sum_s E[Q(q) | X, a_s, xi_s]`.
pub fn mdp_expectation(draws: &MdpDraws, data: &EmpiricalCdf, q: f64) -> Result<ExpectedQuantile> {
    draws.mixture(data)?.expected_quantile(q)
}

/// Per-draw single-DP limits, as a diagnostic alternative to averaging the
/// cdf. `stride` evaluates every `stride`-th draw.
pub fn per_draw_limits(
    draws: &MdpDraws,
    data: &EmpiricalCdf,
    beta: f64,
    gamma: f64,
    side: Side,
    convention: BonferroniConvention,
    stride: usize,
) -> Result<Vec<ToleranceInterval>> {
    let mix = draws.mixture(data)?;
    (0..mix.len())
        .step_by(stride.max(1))
        .map(|s| {
            let dp = mix.component(s)?;
            match side {
                Side::Upper => tolerance::one_sided_upper_bg(&dp, beta, gamma),
                Side::Lower => tolerance::one_sided_lower_bg(&dp, beta, gamma),
                Side::TwoSided => tolerance::two_sided_bg_bonferroni(&dp, beta, gamma, convention),
            }
        })
        .collect()
}
