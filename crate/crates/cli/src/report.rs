//! JSON report layout and the human-readable summary.

use std::fmt::Write as _;

use bridgetail_core::kernel::TwistedConstants;
use bridgetail_core::verify::FitResult;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// Significant digits of every float in a report.
pub const DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Twist {
    pub theta1: f64,
    pub theta2: f64,
    pub kappa: f64,
    /// `e^{θ₁}`.
    pub z: f64,
    pub d_plus: Option<f64>,
    /// The input was already twisted, so `θ` is reported as `(0, 0)`.
    pub input_twisted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Twisted {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub p0: f64,
    pub s0: f64,
    pub u: f64,
    pub kappa: f64,
}

impl From<&TwistedConstants> for Twisted {
    fn from(t: &TwistedConstants) -> Self {
        Self {
            p: t.p,
            q: t.q,
            s: t.s,
            p0: t.p0,
            s0: t.s0,
            u: t.u,
            kappa: t.kappa,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ModelExtras {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu1_star_threshold: Option<f64>,
    /// `s₀` as printed for the Jackson model, next to the computed value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0_printed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0_computed: Option<f64>,
    /// `r = p₀/q`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cubic_root: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cascade_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    /// `"C+"`, `"C0"` or `"1/dtilde"`.
    pub kind: &'static str,
    pub value: f64,
    pub poly_exponent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0_rederived: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0_printed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_intermediate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dtilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dtilde_printed: Option<f64>,
    pub twisted: Twisted,
    pub model: ModelExtras,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub y: usize,
    pub value: f64,
    /// Bridge only: the variant with `a₀(y)²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squared_variant: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FReport {
    pub value: f64,
    pub se: f64,
    pub coarse_value: f64,
    pub cutoff: f64,
    pub coarse_cutoff: f64,
    pub paths: u64,
    pub censored: u64,
    pub strata: usize,
    pub seed: u64,
    pub replications: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub back_solved: Option<BackSolve>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BackSolve {
    pub value: f64,
    pub se: f64,
    pub window: (usize, usize),
    pub difference: f64,
    pub tolerance: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fit {
    pub rate: f64,
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
}

impl From<&FitResult> for Fit {
    fn from(f: &FitResult) -> Self {
        Self {
            rate: f.rate,
            exponent: f.exponent,
            intercept: f.intercept,
            r_squared: f.r_squared,
            window: f.window,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub level: usize,
    pub value: f64,
    /// `G(ℓ) ℓ^{-exponent}`.
    pub scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantCheck {
    pub name: &'static str,
    pub value: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreensReport {
    pub lmax: usize,
    pub ymax: usize,
    pub steps: usize,
    pub residual_mass: f64,
    pub escaped_mass: f64,
    pub total_visits: f64,
    pub fit: Fit,
    /// `G(lmax)/G(lmax/2)` and the power law's `2^{exponent}`.
    pub doubling_ratio: f64,
    pub doubling_expected: f64,
    pub levels: Vec<LevelRow>,
    pub richardson: f64,
    pub candidates: Vec<ConstantCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winner: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileCheck {
    pub level: usize,
    pub ymax: usize,
    pub max_rel_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squared_max_rel_err: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyReport {
    pub trunc_x: usize,
    pub trunc_y: usize,
    pub method: &'static str,
    pub residual: f64,
    pub fit: Fit,
    pub rate_rel_err: f64,
    pub exponent_err: f64,
    pub profile: ProfileCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Verification {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub greens: Option<GreensReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady: Option<SteadyReport>,
    pub suites: Vec<Suite>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub regime: &'static str,
    pub twist: Twist,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<Constants>,
    pub profile: Vec<ProfileRow>,
    /// `null` means the prefactor is unknown (not simulated).
    pub f: Option<FReport>,
    pub warnings: Vec<String>,
    pub verification: Verification,
    pub config: RunConfig,
    pub normalization: f64,
}

impl Report {
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_value(&mut v);
        v
    }

    pub fn to_json(&self, pretty: bool) -> String {
        let v = self.to_value();
        if pretty {
            serde_json::to_string_pretty(&v)
        } else {
            serde_json::to_string(&v)
        }
        .expect("report serializes")
    }

    pub fn failures(&self) -> Vec<&Suite> {
        self.verification
            .suites
            .iter()
            .filter(|s| !s.pass)
            .collect()
    }

    pub fn human(&self) -> String {
        let mut s = String::new();
        let g = |x: f64| format!("{:.6e}", x);
        let _ = writeln!(s, "{:<16} {}", "command", self.command);
        let _ = writeln!(s, "{:<16} {}", "regime", self.regime);
        let _ = writeln!(s, "{:<16} {}", "theta1", g(self.twist.theta1));
        let _ = writeln!(s, "{:<16} {}", "theta2", g(self.twist.theta2));
        let _ = writeln!(s, "{:<16} {}", "kappa", g(self.twist.kappa));
        if let Some(d) = self.twist.d_plus {
            let _ = writeln!(s, "{:<16} {}", "d+", g(d));
        }
        if let Some(c) = &self.constants {
            let _ = writeln!(
                s,
                "{:<16} {} = {}  (l^{})",
                "constant",
                c.kind,
                g(c.value),
                c.poly_exponent
            );
        }
        match &self.f {
            Some(f) => {
                let _ = writeln!(s, "{:<16} {} +- {}", "f", g(f.value), g(f.se));
            }
            None => {
                let _ = writeln!(s, "{:<16} unknown (not simulated)", "f");
            }
        }
        if let Some(gr) = &self.verification.greens {
            let _ = writeln!(
                s,
                "{:<16} exponent {} rate {} (window {:?})",
                "greens fit",
                g(gr.fit.exponent),
                g(gr.fit.rate),
                gr.fit.window
            );
        }
        if let Some(st) = &self.verification.steady {
            let _ = writeln!(
                s,
                "{:<16} exponent {} rate {} (window {:?})",
                "steady fit",
                g(st.fit.exponent),
                g(st.fit.rate),
                st.fit.window
            );
        }
        for suite in &self.verification.suites {
            let _ = writeln!(
                s,
                "  [{}] {:<32} {} (limit {})",
                if suite.pass { "pass" } else { "FAIL" },
                suite.name,
                g(suite.value),
                g(suite.limit)
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}
