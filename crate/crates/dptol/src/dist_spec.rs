//! `family:p1,p2[,p3]` notation for distributions.
//!
//! | family | parameters |
//! |---|---|
//! | `normal` | mean, sd |
//! | `laplace` | location, scale |
//! | `t` | location, scale, dof (`loc + scale * t_dof`) |
//! | `exponential` | rate |
//! | `gamma` | shape, rate |
//! | `invgamma` | shape, scale |
//! | `beta` | alpha, beta |
//! | `halfnormal` | location, scale |
//! | `uniform` | low, high |

use dptol_core::Distribution;

pub fn parse(s: &str) -> Result<Distribution, String> {
    let s = s.trim();
    let (family, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("`{s}`: expected family:param1,param2"))?;
    let params = rest
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{s}`: `{}` is not a number", p.trim()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let want = |k: usize| -> Result<(), String> {
        if params.len() == k {
            Ok(())
        } else {
            Err(format!("`{s}`: {family} takes {k} parameter(s), got {}", params.len()))
        }
    };
    let p = &params;
    let d = match family.trim().to_ascii_lowercase().as_str() {
        "normal" | "n" => {
            want(2)?;
            Distribution::normal(p[0], p[1])
        }
        "laplace" => {
            want(2)?;
            Distribution::laplace(p[0], p[1])
        }
        "t" | "student_t" | "studentt" => {
            want(3)?;
            Distribution::student_t(p[0], p[1], p[2])
        }
        "exponential" | "exp" => {
            want(1)?;
            Distribution::exponential(p[0])
        }
        "gamma" => {
            want(2)?;
            Distribution::gamma(p[0], p[1])
        }
        "invgamma" | "inverse_gamma" => {
            want(2)?;
            Distribution::inverse_gamma(p[0], p[1])
        }
        "beta" => {
            want(2)?;
            Distribution::beta(p[0], p[1])
        }
        "halfnormal" | "half_normal" => {
            want(2)?;
            Distribution::half_normal(p[0], p[1])
        }
        "uniform" => {
            want(2)?;
            Distribution::uniform(p[0], p[1])
        }
        other => return Err(format!("`{s}`: unknown family `{other}`")),
    };
    d.map_err(|e| format!("`{s}`: {e}"))
}

pub fn format(d: &Distribution) -> String {
    let family = match d {
        Distribution::Normal { .. } => "normal",
        Distribution::Laplace { .. } => "laplace",
        Distribution::StudentT { .. } => "t",
        Distribution::Exponential { .. } => "exponential",
        Distribution::Gamma { .. } => "gamma",
        Distribution::InverseGamma { .. } => "invgamma",
        Distribution::Beta { .. } => "beta",
        Distribution::HalfNormal { .. } => "halfnormal",
        Distribution::Uniform { .. } => "uniform",
    };
    let params: Vec<String> = d.params().iter().map(|p| p.to_string()).collect();
    format!("{family}:{}", params.join(","))
}
