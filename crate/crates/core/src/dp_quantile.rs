//! The Dirichlet-process posterior and the distribution of its quantile
//! process.
//!
//! With `F ~ DP(a, F0)` and data `X` of size `n`, the posterior is
//! `DP(a + n, (a F0 + n Fn) / (a + n))`. The q-quantile `Q(q)` of the random
//! `F` satisfies `P(Q(q) <= x | X) = P(F(x) >= q | X) = 1 - I_q(A(x), B(x))`
//! with `A(x) = a F0(x) + n Fn(x)` and `B(x) = a (1 - F0(x)) + n (1 - Fn(x))`.
//! This cdf is a continuous function of `x` between data points and jumps at
//! each observation.

use alloc::vec::Vec;

use crate::distributions::{Distribution, EmpiricalCdf};
use crate::quad::{self, QuadOptions};
use crate::special::{self, SpecialFnContext};
use crate::{Error, Result};

/// Absolute x-tolerance used when bisecting a continuous segment.
pub fn root_tolerance(x: f64) -> f64 {
    1e-9 * (1.0 + x.abs())
}

/// `1 - I_q(shape_a, shape_b)` with the point-mass conventions for vanishing
/// shapes: a zero first shape is a point mass at 0, a zero second shape a
/// point mass at 1.
pub(crate) fn beta_upper_tail(q: f64, shape_a: f64, shape_b: f64) -> Result<f64> {
    if shape_a <= 0.0 {
        return Ok(0.0);
    }
    if shape_b <= 0.0 {
        return Ok(1.0);
    }
    Ok(special::reg_inc_beta_pair(&SpecialFnContext::default(), q, shape_a, shape_b)?.complement)
}

/// `H` for a single DP posterior given the count of observations `<= x`.
pub(crate) fn dp_cdf_with_count(
    a: f64,
    base: &Distribution,
    n: usize,
    q: f64,
    x: f64,
    count: usize,
) -> Result<f64> {
    let c = count as f64;
    let (f0, s0) = if a > 0.0 { base.cdf_sf(x) } else { (0.0, 1.0) };
    beta_upper_tail(q, a * f0 + c, a * s0 + (n as f64 - c))
}

pub(crate) fn dp_search_bracket(a: f64, base: &Distribution, data: &EmpiricalCdf) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    if a > 0.0 {
        let tail = (1e-13 / (1.0 + a)).clamp(1e-15, 1e-13);
        lo = base.quantile(tail)?;
        hi = base.quantile(1.0 - tail)?;
    }
    if let (Some(mn), Some(mx)) = (data.min(), data.max()) {
        lo = lo.min(mn);
        hi = hi.max(mx);
    }
    Ok((lo, hi))
}

pub(crate) fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("{name} = {v} must lie in (0, 1)")))
    }
}

/// Where a monotone quantile-process cdf first reaches a level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Smallest x whose cdf value passes the level.
    pub x: f64,
    /// Cdf value at `x`.
    pub value: f64,
    /// Largest evaluated point that does not pass; equals `x` when the
    /// crossing sits on a jump.
    pub below: f64,
    /// Cdf value at `below` (the left limit when on a jump).
    pub below_value: f64,
    pub on_jump: bool,
}

/// Posterior mean of `Q(q)` with a truncation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedQuantile {
    pub value: f64,
    /// Integrand mass outside the integration window exceeded 1e-8.
    pub truncated: bool,
}

/// A posterior whose quantile process has a Hjort–Petrone type cdf:
/// continuous between the observations and jumping at them.
pub trait QuantileProcess {
    fn data(&self) -> &EmpiricalCdf;

    /// `P(Q(q) <= x | X)` where `count` is the number of observations taken
    /// as lying at or below `x`. Passing `count_lt(x)` gives the left limit.
    fn cdf_with_count(&self, q: f64, x: f64, count: usize) -> Result<f64>;

    /// Finite interval outside of which the prior contributes negligibly.
    fn search_bracket(&self) -> Result<(f64, f64)>;

    /// True when the posterior is supported on the data alone (`a = 0`).
    fn is_atomic(&self) -> bool;

    fn expected_quantile(&self, q: f64) -> Result<ExpectedQuantile>;

    fn quantile_process_cdf(&self, q: f64, x: f64) -> Result<f64> {
        check_open_unit("q", q)?;
        self.cdf_with_count(q, x, self.data().count_le(x))
    }

    /// Smallest `x` with cdf `>= level` (or `> level` when `strict`).
    fn crossing(&self, q: f64, level: f64, strict: bool) -> Result<Crossing> {
        check_open_unit("q", q)?;
        locate_crossing(self, q, level, strict)
    }
}

fn locate_crossing<P: QuantileProcess + ?Sized>(
    p: &P,
    q: f64,
    level: f64,
    strict: bool,
) -> Result<Crossing> {
    if !(0.0..1.0).contains(&level) || (!strict && level == 0.0) {
        check_open_unit("level", level)?;
    }
    let pass = |v: f64| if strict { v > level } else { v >= level };
    let data = p.data();
    let pts = data.distinct_values();
    let cum = data.cumulative_counts();
    let m = pts.len();

    // first data point whose right value passes
    let (mut lo, mut hi) = (0usize, m);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pass(p.cdf_with_count(q, pts[mid], cum[mid])?) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let j = lo;
    let count_before = if j == 0 { 0 } else { cum[j - 1] };

    if j < m {
        let left = p.cdf_with_count(q, pts[j], count_before)?;
        if !pass(left) {
            return Ok(Crossing {
                x: pts[j],
                value: p.cdf_with_count(q, pts[j], cum[j])?,
                below: pts[j],
                below_value: left,
                on_jump: true,
            });
        }
        let start = if j > 0 {
            pts[j - 1]
        } else {
            expand_left(p, q, pts[0], count_before, &pass)?
        };
        bisect(p, q, start, pts[j], count_before, &pass)
    } else {
        let count = data.n();
        let start = if m > 0 {
            pts[m - 1]
        } else {
            let (bl, _) = p.search_bracket()?;
            expand_left(p, q, bl, 0, &pass)?
        };
        let end = expand_right(p, q, start, count, &pass, level)?;
        bisect(p, q, start, end, count, &pass)
    }
}

fn expand_left<P: QuantileProcess + ?Sized>(
    p: &P,
    q: f64,
    from: f64,
    count: usize,
    pass: &dyn Fn(f64) -> bool,
) -> Result<f64> {
    let (bl, bh) = p.search_bracket()?;
    let mut step = (bh - bl).max(1.0);
    let mut x = bl.min(from - step * 1e-3);
    for _ in 0..200 {
        if !pass(p.cdf_with_count(q, x, count)?) {
            return Ok(x);
        }
        x -= step;
        step *= 2.0;
        if !x.is_finite() {
            break;
        }
    }
    Err(Error::Convergence {
        routine: "left bracket search",
        iterations: 200,
    })
}

fn expand_right<P: QuantileProcess + ?Sized>(
    p: &P,
    q: f64,
    from: f64,
    count: usize,
    pass: &dyn Fn(f64) -> bool,
    level: f64,
) -> Result<f64> {
    let (bl, bh) = p.search_bracket()?;
    let mut step = (bh - bl).max(1.0);
    let mut x = bh.max(from + step * 1e-3);
    for _ in 0..200 {
        if pass(p.cdf_with_count(q, x, count)?) {
            return Ok(x);
        }
        x += step;
        step *= 2.0;
        if !x.is_finite() {
            break;
        }
    }
    Err(Error::NoCrossing { level })
}

fn bisect<P: QuantileProcess + ?Sized>(
    p: &P,
    q: f64,
    mut lo: f64,
    mut hi: f64,
    count: usize,
    pass: &dyn Fn(f64) -> bool,
) -> Result<Crossing> {
    for _ in 0..4000 {
        if hi - lo <= root_tolerance(hi) {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pass(p.cdf_with_count(q, mid, count)?) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Crossing {
        x: hi,
        value: p.cdf_with_count(q, hi, count)?,
        below: lo,
        below_value: p.cdf_with_count(q, lo, count)?,
        on_jump: false,
    })
}

/// `DP(a + n, (a F0 + n Fn) / (a + n))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DpPosterior {
    a: f64,
    base: Distribution,
    data: EmpiricalCdf,
}

/// Result of inverting the quantile-process cdf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileLimit {
    pub x: f64,
    /// Cdf value at `x`; at least the requested level.
    pub achieved: f64,
    pub at_data_point: bool,
    /// `a = 0` and the level is only reached through the point mass at the
    /// sample maximum.
    pub infeasible: bool,
}

impl DpPosterior {
    pub fn new(a: f64, base: Distribution, data: EmpiricalCdf) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::domain(alloc::format!("concentration a = {a} must be finite and >= 0")));
        }
        base.validate()?;
        if a == 0.0 && data.is_empty() {
            return Err(Error::UndefinedPosterior);
        }
        Ok(DpPosterior { a, base, data })
    }

    pub fn from_sample(a: f64, base: Distribution, sample: &[f64]) -> Result<Self> {
        DpPosterior::new(a, base, EmpiricalCdf::new(sample)?)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    /// `(a F0(x) + n Fn(x)) / (a + n)`.
    pub fn posterior_mix_cdf(&self, x: f64) -> f64 {
        let n = self.n() as f64;
        let f0 = if self.a > 0.0 { self.base.cdf(x) } else { 0.0 };
        (self.a * f0 + self.data.count_le(x) as f64) / (self.a + n)
    }

    /// Smallest `x` with `P(Q(q) <= x | X) >= level`.
    pub fn quantile_process_inverse(&self, q: f64, level: f64) -> Result<QuantileLimit> {
        check_open_unit("level", level)?;
        let c = self.crossing(q, level, false)?;
        Ok(QuantileLimit {
            x: c.x,
            achieved: c.value,
            at_data_point: c.on_jump,
            infeasible: self.is_atomic() && Some(c.x) == self.data.max(),
        })
    }

    /// Posterior mean of `Q(q)` in closed form for `a = 0`:
    /// `sum_i C(n-1, i-1) q^(i-1) (1-q)^(n-i) x_(i)`.
    pub fn expected_quantile_atomic(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain(alloc::format!("q = {q} outside [0, 1]")));
        }
        let xs = self.data.sorted_values();
        let n = xs.len();
        if n == 0 {
            return Err(Error::UndefinedPosterior);
        }
        if q == 0.0 || n == 1 {
            return Ok(xs[0]);
        }
        if q == 1.0 {
            return Ok(xs[n - 1]);
        }
        let lq = libm::log(q);
        let l1q = libm::log1p(-q);
        let m = (n - 1) as u64;
        let mut sum = 0.0;
        for (k, &x) in xs.iter().enumerate() {
            let k = k as u64;
            let lw = special::ln_choose(m, k) + k as f64 * lq + (m - k) as f64 * l1q;
            sum += libm::exp(lw) * x;
        }
        Ok(sum)
    }

    /// Tail-sum integral `E[Q] = lo + int_lo^hi P(Q > x) dx` over a window
    /// that captures all but a negligible part of the prior mass.
    fn expected_quantile_integrated(&self, q: f64) -> Result<ExpectedQuantile> {
        check_open_unit("q", q)?;
        let (lo, hi) = self.search_bracket()?;
        let mut nodes: Vec<f64> = Vec::with_capacity(self.data.distinct_values().len() + 48);
        nodes.push(lo);
        nodes.push(hi);
        nodes.extend_from_slice(self.data.distinct_values());
        for &p in QUANTILE_NODES.iter() {
            for pp in [p, 1.0 - p] {
                let x = self.base.quantile(pp)?;
                if x > lo && x < hi {
                    nodes.push(x);
                }
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
        nodes.dedup();

        let mut total = lo;
        for w in nodes.windows(2) {
            let (u, v) = (w[0], w[1]);
            // heavy-tailed bases give panels thousands of units wide
            let opts = QuadOptions {
                abs_tol: 1e-13 * (v - u).max(1.0),
                rel_tol: 1e-12,
                max_subdivisions: 4000,
            };
            let count = self.data.count_le(u);
            total += quad::integrate(|x| Ok(1.0 - self.cdf_with_count(q, x, count)?), u, v, &opts)?;
        }
        let left_mass = self.cdf_with_count(q, lo, self.data.count_lt(lo))?;
        let right_mass = 1.0 - self.cdf_with_count(q, hi, self.data.n())?;
        Ok(ExpectedQuantile {
            value: total,
            truncated: left_mass > 1e-8 || right_mass > 1e-8,
        })
    }
}

// Lower-tail probabilities whose F0-quantiles (and mirror images) are added
// as panel boundaries for the tail-sum integral.
const QUANTILE_NODES: [f64; 16] = [
    1e-12, 1e-10, 1e-8, 1e-6, 1e-5, 1e-4, 1e-3, 5e-3, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5,
];

impl QuantileProcess for DpPosterior {
    fn data(&self) -> &EmpiricalCdf {
        &self.data
    }

    fn cdf_with_count(&self, q: f64, x: f64, count: usize) -> Result<f64> {
        dp_cdf_with_count(self.a, &self.base, self.n(), q, x, count)
    }

    fn search_bracket(&self) -> Result<(f64, f64)> {
        dp_search_bracket(self.a, &self.base, &self.data)
    }

    fn is_atomic(&self) -> bool {
        self.a == 0.0
    }

    fn expected_quantile(&self, q: f64) -> Result<ExpectedQuantile> {
        if self.is_atomic() {
            Ok(ExpectedQuantile {
                value: self.expected_quantile_atomic(q)?,
                truncated: false,
            })
        } else {
            self.expected_quantile_integrated(q)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal() -> Distribution {
        Distribution::normal(0.0, 1.0).unwrap()
    }

    #[test]
    fn undefined_posterior() {
        assert_eq!(
            DpPosterior::new(0.0, std_normal(), EmpiricalCdf::empty()).unwrap_err(),
            Error::UndefinedPosterior
        );
        assert!(DpPosterior::new(-1.0, std_normal(), EmpiricalCdf::empty()).is_err());
    }

    #[test]
    fn mix_cdf_limits() {
        let base = Distribution::normal(0.0, 2.0).unwrap();
        let xs = [-1.0, 0.5, 2.0, 3.0];
        let e = EmpiricalCdf::new(&xs).unwrap();
        let dp0 = DpPosterior::new(0.0, base, e.clone()).unwrap();
        let prior = DpPosterior::new(3.0, base, EmpiricalCdf::empty()).unwrap();
        let half = DpPosterior::new(4.0, base, e.clone()).unwrap();
        for &x in &[-2.0, 0.0, 0.5, 2.5, 10.0] {
            assert_eq!(dp0.posterior_mix_cdf(x), e.eval(x));
            assert!((prior.posterior_mix_cdf(x) - base.cdf(x)).abs() < 1e-15);
            let mid = 0.5 * (base.cdf(x) + e.eval(x));
            assert!((half.posterior_mix_cdf(x) - mid).abs() < 1e-15);
        }
    }

    #[test]
    fn single_observation_point_mass() {
        let dp = DpPosterior::from_sample(0.0, std_normal(), &[1.5]).unwrap();
        for &q in &[0.01, 0.5, 0.99] {
            assert_eq!(dp.quantile_process_cdf(q, 1.5).unwrap(), 1.0);
            assert_eq!(dp.quantile_process_cdf(q, 7.0).unwrap(), 1.0);
            assert_eq!(dp.quantile_process_cdf(q, 1.4).unwrap(), 0.0);
        }
    }

    #[test]
    fn prior_only_uniform_centre() {
        let dp = DpPosterior::new(1.0, Distribution::uniform(0.0, 1.0).unwrap(), EmpiricalCdf::empty())
            .unwrap();
        assert!((dp.quantile_process_cdf(0.5, 0.5).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn alternate_form_between_order_statistics() {
        // H = I_{1-q}(a(1-F0) + n - i, a F0 + i) for X_(i) <= x < X_(i+1)
        let base = Distribution::normal(0.0, 2.0).unwrap();
        let xs = [-1.3, -0.2, 0.4, 1.1, 2.7];
        let dp = DpPosterior::from_sample(2.5, base, &xs).unwrap();
        let q = 0.8;
        for &(i, x) in [(0usize, -2.0), (3, 0.7), (4, 2.0), (5, 3.5)].iter() {
            let f0 = base.cdf(x);
            let alt = special::reg_inc_beta(
                1.0 - q,
                2.5 * (1.0 - f0) + (5 - i) as f64,
                2.5 * f0 + i as f64,
            )
            .unwrap();
            let h = dp.quantile_process_cdf(q, x).unwrap();
            assert!((h - alt).abs() < 1e-12, "x={x}: {h} vs {alt}");
        }
    }

    #[test]
    fn q_domain() {
        let dp = DpPosterior::from_sample(1.0, std_normal(), &[0.0, 1.0]).unwrap();
        assert!(dp.quantile_process_cdf(0.0, 0.5).is_err());
        assert!(dp.quantile_process_cdf(1.0, 0.5).is_err());
        assert!(dp.quantile_process_inverse(0.5, 1.0).is_err());
        assert!(dp.expected_quantile(0.0).is_err());
    }

    #[test]
    fn atomic_expected_quantile_closed_forms() {
        let dp = DpPosterior::from_sample(0.0, std_normal(), &[2.0, -1.0]).unwrap();
        for &q in &[0.0, 0.1, 0.5, 0.93, 1.0] {
            let v = dp.expected_quantile(q).unwrap().value;
            assert!((v - ((1.0 - q) * -1.0 + q * 2.0)).abs() < 1e-14);
        }
        let dp = DpPosterior::from_sample(0.0, std_normal(), &[3.0, 1.0, 2.0, 5.0]).unwrap();
        assert_eq!(dp.expected_quantile(0.0).unwrap().value, 1.0);
        assert_eq!(dp.expected_quantile(1.0).unwrap().value, 5.0);
    }

    #[test]
    fn atomic_inverse_selects_order_statistic() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let dp = DpPosterior::from_sample(0.0, std_normal(), &xs).unwrap();
        let lim = dp.quantile_process_inverse(0.95, 0.95).unwrap();
        assert_eq!(lim.x, 98.0);
        assert!(lim.at_data_point);
        assert!(!lim.infeasible);
        assert!(lim.achieved >= 0.95);
    }

    #[test]
    fn atomic_inverse_small_n_falls_back_to_maximum() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let dp = DpPosterior::from_sample(0.0, std_normal(), &xs).unwrap();
        let lim = dp.quantile_process_inverse(0.95, 0.95).unwrap();
        assert_eq!(lim.x, 20.0);
        assert!(lim.infeasible);
    }

    #[test]
    fn huge_concentration_tends_to_prior_quantile() {
        let base = Distribution::normal(0.0, 2.0).unwrap();
        let dp = DpPosterior::new(1e6, base, EmpiricalCdf::empty()).unwrap();
        let lim = dp.quantile_process_inverse(0.95, 0.95).unwrap();
        assert!((lim.x - 2.0 * 1.6448536269514722).abs() < 0.02, "{}", lim.x);
    }

    #[test]
    fn inversion_consistency() {
        let base = Distribution::laplace(0.0, 2.0).unwrap();
        let xs = [-2.1, -0.7, 0.3, 0.9, 1.7, 4.2];
        let dp = DpPosterior::from_sample(3.0, base, &xs).unwrap();
        for &(q, g) in &[(0.95, 0.95), (0.5, 0.3), (0.1, 0.9), (0.99, 0.5)] {
            let lim = dp.quantile_process_inverse(q, g).unwrap();
            assert!(dp.quantile_process_cdf(q, lim.x).unwrap() >= g);
            if !lim.at_data_point {
                let below = lim.x - 10.0 * root_tolerance(lim.x);
                assert!(dp.quantile_process_cdf(q, below).unwrap() < g);
            }
        }
    }

    #[test]
    fn tiny_concentration_matches_closed_form() {
        let xs = [0.3, -1.2, 0.8, 2.2, -0.4, 1.5, 0.1, -2.0, 0.9, 1.1];
        let atomic = DpPosterior::from_sample(0.0, std_normal(), &xs).unwrap();
        let tiny = DpPosterior::from_sample(1e-12, std_normal(), &xs).unwrap();
        for &q in &[0.025, 0.5, 0.975] {
            let a = atomic.expected_quantile(q).unwrap().value;
            let t = tiny.expected_quantile(q).unwrap();
            assert!(!t.truncated);
            assert!((a - t.value).abs() < 1e-6, "q={q}: {a} vs {}", t.value);
        }
    }
}
