//! Fit reports: a JSON form at full precision and a 4-decimal text form.

use dptol_core::tolerance::{IntervalFlags, Kind, Side, ToleranceSpec};
use serde::{Deserialize, Serialize};

use crate::dist_spec;
use crate::method::{Fitted, MethodSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: String,
    pub n: usize,
    pub kind: Kind,
    pub side: Side,
    pub beta: f64,
    pub gamma: f64,
    /// Only two-sided (beta, gamma) intervals use a convention.
    pub convention: Option<String>,
    /// `None` stands for an infinite limit.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub achieved_level: Option<f64>,
    pub flags: IntervalFlags,
    pub a: Option<f64>,
    pub base: Option<String>,
    pub order_index: Option<usize>,
    pub mdp_mean_a: Option<f64>,
    pub mdp_acceptance: Option<f64>,
    pub input_digest: String,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl FitReport {
    pub fn new(method: &MethodSpec, spec: &ToleranceSpec, n: usize, fitted: &Fitted, input_digest: &str) -> Self {
        let iv = &fitted.interval;
        FitReport {
            method: method.describe(),
            n,
            kind: spec.kind,
            side: spec.side,
            beta: spec.beta,
            gamma: spec.gamma,
            convention: iv.convention.map(|c| c.name().to_string()),
            lower: finite(iv.lower),
            upper: finite(iv.upper),
            achieved_level: iv.achieved_level,
            flags: iv.flags,
            a: fitted.a,
            base: fitted.base.as_ref().map(dist_spec::format),
            order_index: fitted.order_index,
            mdp_mean_a: fitted.mdp_mean_a,
            mdp_acceptance: fitted.mdp_acceptance,
            input_digest: input_digest.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let lim = |v: Option<f64>, inf: &str| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| inf.to_string());
        let kind = match self.kind {
            Kind::ContentGamma => format!("(beta={}, gamma={})", self.beta, self.gamma),
            Kind::Expectation => format!("beta-expectation (beta={})", self.beta),
        };
        let side = match self.side {
            Side::Lower => "lower",
            Side::Upper => "upper",
            Side::TwoSided => "two-sided",
        };
        let mut s = format!(
            "method: {}\nn: {}\ninterval: {side} {kind}\nlimits: [{}, {}]\n",
            self.method,
            self.n,
            lim(self.lower, "-inf"),
            lim(self.upper, "inf"),
        );
        if let Some(c) = &self.convention {
            s.push_str(&format!("convention: {c}\n"));
        }
        if let Some(l) = self.achieved_level {
            s.push_str(&format!("achieved_level: {l:.4}\n"));
        }
        let f = &self.flags;
        s.push_str(&format!(
            "flags: infeasible_small_n={} at_data_point={} grid_truncated={}\n",
            f.infeasible_small_n, f.at_data_point, f.grid_truncated
        ));
        if let Some(a) = self.a {
            s.push_str(&format!("a: {a}\n"));
        }
        if let Some(b) = &self.base {
            s.push_str(&format!("base: {b}\n"));
        }
        if let Some(m) = self.order_index {
            s.push_str(&format!("order_statistic: {m}\n"));
        }
        if let Some(a) = self.mdp_mean_a {
            s.push_str(&format!("mdp_mean_a: {a:.4}\n"));
        }
        if let Some(r) = self.mdp_acceptance {
            s.push_str(&format!("mdp_acceptance: {r:.4}\n"));
        }
        s
    }
}
