//! Special functions: log-gamma, log-beta, regularized incomplete beta and gamma.

use crate::{Error, Result};

/// Accuracy controls for the continued-fraction and series evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFnContext {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SpecialFnContext {
    fn default() -> Self {
        SpecialFnContext {
            tolerance: 1e-15,
            max_iterations: 10_000,
        }
    }
}

impl SpecialFnContext {
    pub fn new(tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance <= 1e-6) {
            return Err(Error::domain("special-function tolerance must lie in (0, 1e-6]"));
        }
        if max_iterations < 100 {
            return Err(Error::domain("special-function iteration cap must be at least 100"));
        }
        Ok(SpecialFnContext {
            tolerance,
            max_iterations,
        })
    }
}

const TINY: f64 = 1e-300;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln C(n, k)` via log-gamma; finite for any `k <= n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `I_x(a, b)` together with its complement `1 - I_x(a, b)`, each computed on
/// the side where it does not suffer cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPair {
    pub value: f64,
    pub complement: f64,
}

/// Regularized incomplete beta function `I_x(a, b)` with default accuracy.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    reg_inc_beta_pair(&SpecialFnContext::default(), x, a, b).map(|p| p.value)
}

/// Regularized incomplete beta and its complement.
///
/// Uses the Lentz continued fraction, switching to `1 - I_{1-x}(b, a)` when
/// `x > (a + 1) / (a + b + 2)` so the fraction converges quickly for the
/// large shape parameters produced by DP posteriors.
pub fn reg_inc_beta_pair(ctx: &SpecialFnContext, x: f64, a: f64, b: f64) -> Result<BetaPair> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(alloc::format!("incomplete beta argument {x} outside [0, 1]")));
    }
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::domain(alloc::format!(
            "incomplete beta shapes must be positive and finite (a = {a}, b = {b})"
        )));
    }
    if x == 0.0 {
        return Ok(BetaPair {
            value: 0.0,
            complement: 1.0,
        });
    }
    if x == 1.0 {
        return Ok(BetaPair {
            value: 1.0,
            complement: 0.0,
        });
    }
    let ln_front = ln_beta_front(x, a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let v = libm::exp(ln_front) * beta_cf(ctx, x, a, b)? / a;
        let v = v.clamp(0.0, 1.0);
        Ok(BetaPair {
            value: v,
            complement: 1.0 - v,
        })
    } else {
        let w = libm::exp(ln_front) * beta_cf(ctx, 1.0 - x, b, a)? / b;
        let w = w.clamp(0.0, 1.0);
        Ok(BetaPair {
            value: 1.0 - w,
            complement: w,
        })
    }
}

/// `ln(x^a (1-x)^b / B(a, b))`. For large shapes the direct sum cancels
/// terms of size `a ln a`, so it is rebuilt around `x0 = a / (a + b)`.
fn ln_beta_front(x: f64, a: f64, b: f64) -> f64 {
    if a.min(b) < 10.0 {
        return a * libm::log(x) + b * libm::log1p(-x) - ln_beta(a, b);
    }
    let s = a + b;
    // x - x0 without cancellation against x0
    let dx = (x * s - a) / s;
    let u = dx / (a / s);
    let v = -dx / (b / s);
    let rlog1 = |t: f64| t - libm::log1p(t);
    -(a * rlog1(u) + b * rlog1(v)) + 0.5 * libm::log(a * b / (2.0 * core::f64::consts::PI * s))
        + stirling_tail(s)
        - stirling_tail(a)
        - stirling_tail(b)
}

/// `ln Gamma(z) - ((z - 1/2) ln z - z + ln(2 pi) / 2)` for `z >= 10`.
fn stirling_tail(z: f64) -> f64 {
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
    ];
    let r = 1.0 / (z * z);
    let mut acc = 0.0;
    for &c in C.iter().rev() {
        acc = acc * r + c;
    }
    acc / z
}

fn beta_cf(ctx: &SpecialFnContext, x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=ctx.max_iterations {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= ctx.tolerance {
            return Ok(h);
        }
    }
    Err(Error::Convergence {
        routine: "incomplete beta continued fraction",
        iterations: ctx.max_iterations,
    })
}

/// Regularized lower incomplete gamma `P(s, x)` and upper `Q(s, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPair {
    pub lower: f64,
    pub upper: f64,
}

pub fn reg_inc_gamma(ctx: &SpecialFnContext, s: f64, x: f64) -> Result<GammaPair> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::domain("incomplete gamma shape must be positive"));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain("incomplete gamma argument must be nonnegative"));
    }
    if x == 0.0 {
        return Ok(GammaPair {
            lower: 0.0,
            upper: 1.0,
        });
    }
    if x.is_infinite() {
        return Ok(GammaPair {
            lower: 1.0,
            upper: 0.0,
        });
    }
    let ln_front = s * libm::log(x) - x - ln_gamma(s);
    if x < s + 1.0 {
        // series
        let mut ap = s;
        let mut sum = 1.0 / s;
        let mut del = sum;
        for _ in 0..ctx.max_iterations {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * ctx.tolerance {
                let p = (sum * libm::exp(ln_front)).clamp(0.0, 1.0);
                return Ok(GammaPair {
                    lower: p,
                    upper: 1.0 - p,
                });
            }
        }
        Err(Error::Convergence {
            routine: "incomplete gamma series",
            iterations: ctx.max_iterations,
        })
    } else {
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=ctx.max_iterations {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() <= ctx.tolerance {
                let q = (libm::exp(ln_front) * h).clamp(0.0, 1.0);
                return Ok(GammaPair {
                    lower: 1.0 - q,
                    upper: q,
                });
            }
        }
        Err(Error::Convergence {
            routine: "incomplete gamma continued fraction",
            iterations: ctx.max_iterations,
        })
    }
}

/// Standard normal cdf.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Standard normal quantile (Wichura's AS241, about 1e-16 relative accuracy).
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r
                + 67265.770927008700853)
                * r
                + 45921.953931549871457)
                * r
                + 13731.693765509461125)
                * r
                + 1971.5909503065514427)
                * r
                + 133.14166789178437745)
                * r
                + 3.387132872796366608)
            / (((((((r * 5226.495278852545925 + 28729.085735721942674) * r
                + 39307.89580009271061)
                * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = libm::sqrt(-libm::log(r));
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r
            + 0.24178072517745061177)
            * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734)
            / (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r
                + 0.0151986665636164571966)
                * r
                + 0.14810397642748007459)
                * r
                + 0.68976733498510000455)
                * r
                + 1.6763848301838038494)
                * r
                + 2.05319162663775882187)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r
            + 0.0012426609473880784386)
            * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772)
            / (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r
                + 1.8463183175100546818e-5)
                * r
                + 7.868691311456132591e-4)
                * r
                + 0.0148753612908506148525)
                * r
                + 0.13692988092273580531)
                * r
                + 0.59983220655588793769)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}
