//! The assembled tail law `π(ℓ, y) ∼ f · constant · ℓ^{exponent} e^{-θ₁ℓ} · profile(y)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::greens::{aperiodicity_check, d_plus, tail_constants, TailConstants};
use crate::kernel::{phase_stationary_measure, FreeKernel, PhaseMeasure, TwistedConstants};
use crate::num::{exp, powf};
use crate::spectral::{classify, Regime, DEFAULT_TOL};

/// Phase profile of the tail law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `1` at `y = 0`, `e^{-θ₂y} (p₀/u)(1 + κy/p₀)` for `y ≥ 1`. Covers the
    /// null-recurrent case with `κ = 0`.
    Bridge {
        theta2: f64,
        p0: f64,
        u: f64,
        kappa: f64,
    },
    /// `e^{-θ₂y} φ(y)` with the jitter stationary measure `φ`.
    Jitter { theta2: f64, phi: PhaseMeasure },
}

impl Profile {
    pub fn eval(&self, y: usize) -> f64 {
        match *self {
            Profile::Bridge {
                theta2,
                p0,
                u,
                kappa,
            } => {
                if y == 0 {
                    1.0
                } else {
                    exp(-theta2 * y as f64) * p0 / u * (1.0 + kappa * y as f64 / p0)
                }
            }
            Profile::Jitter { theta2, phi } => exp(-theta2 * y as f64) * phi.value(y),
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `ratio · e^{θ₂} ≥ 1`: paths cascading up the phase axis may dominate.
    Cascade {
        ratio: f64,
        value: f64,
    },
    NonpositiveDrift(f64),
    Periodic {
        r_ud: u64,
        r_s: u64,
    },
    /// Return transform has a period larger than one.
    PeriodicReturn,
    /// Jitter regime with `p ≥ q` after twisting.
    JitterNotSubcritical {
        p: f64,
        q: f64,
    },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::Cascade { ratio, value } => write!(
                f,
                "cascade condition fails: {ratio} * exp(theta2) = {value} >= 1; asymptotics unsupported"
            ),
            Warning::NonpositiveDrift(d) => write!(f, "horizontal drift d+ = {d} is not positive"),
            Warning::Periodic { r_ud, r_s } => {
                write!(f, "periods of PQ ({r_ud}) and S ({r_s}) are not coprime")
            }
            Warning::PeriodicReturn => write!(f, "return transform F has period greater than one"),
            Warning::JitterNotSubcritical { p, q } => {
                write!(f, "jitter twist has p = {p} >= q = {q}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailLaw {
    pub regime: Regime,
    pub theta1: f64,
    pub theta2: f64,
    /// `-3/2`, `-1/2` or `0`.
    pub poly_exponent: f64,
    /// `C₊`, `C₀` or `1/d̃`.
    pub constant: f64,
    pub profile: Profile,
    pub twisted: TwistedConstants,
    pub constants: Option<TailConstants>,
    /// Jitter drift `d̃ = φ(0)(S₀'(1)+P₀'(1)) + (1-φ(0))(P'(1)+Q'(1)+S'(1))`.
    pub dtilde: Option<f64>,
    /// The same weighting with `P(1)` in place of `P'(1)`.
    pub dtilde_printed: Option<f64>,
    /// Prefactor, known only after simulation.
    pub f: Option<Estimate>,
    pub warnings: Vec<Warning>,
}

impl TailLaw {
    /// `constant · ℓ^{exponent} e^{-θ₁ℓ} profile(y)`, without `f`.
    pub fn shape(&self, level: u64, y: usize) -> f64 {
        let l = level as f64;
        self.constant * powf(l, self.poly_exponent) * exp(-self.theta1 * l) * self.profile.eval(y)
    }

    /// Predicted `π(ℓ, y)`; requires `f`.
    pub fn value(&self, level: u64, y: usize) -> Option<f64> {
        self.f.map(|f| f.value * self.shape(level, y))
    }
}

pub fn tail_profile(law: &TailLaw, y: usize) -> f64 {
    law.profile.eval(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub tol: f64,
    /// Ratio whose product with `e^{θ₂}` must stay below one: `ρ₂` for the
    /// Jackson network, `ν/β` for the bathroom model.
    pub cascade_ratio: Option<f64>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            cascade_ratio: None,
        }
    }
}

pub fn analyze(k: &FreeKernel) -> Result<TailLaw> {
    analyze_with(k, &AnalyzeOptions::default())
}

pub fn analyze_with(k: &FreeKernel, opts: &AnalyzeOptions) -> Result<TailLaw> {
    if k.kappa != 0.0 {
        return Err(Error::InvalidKernel(
            "free kernel must have kappa = 0".into(),
        ));
    }
    let tp = classify(k, opts.tol)?;
    let (i, mut tc) = k.twist(tp.theta1, tp.theta2)?;
    let mut law = match tp.regime {
        Regime::Bridge | Regime::NullRecurrent => {
            if tp.regime == Regime::NullRecurrent {
                tc.kappa = 0.0;
            }
            let c = tail_constants(&i, &tc)?;
            TailLaw {
                regime: tp.regime,
                theta1: tp.theta1,
                theta2: tp.theta2,
                poly_exponent: if tp.regime == Regime::Bridge {
                    -1.5
                } else {
                    -0.5
                },
                constant: c.value,
                profile: Profile::Bridge {
                    theta2: tp.theta2,
                    p0: tc.p0,
                    u: tc.u,
                    kappa: tc.kappa,
                },
                twisted: tc,
                constants: Some(c),
                dtilde: None,
                dtilde_printed: None,
                f: None,
                warnings: Vec::new(),
            }
        }
        Regime::Jitter => {
            let phi = phase_stationary_measure(Regime::Jitter, &tc)?;
            let phi0 = phi.value(0);
            let boundary = i.stay0.derivative_real(1.0) + i.up0.derivative_real(1.0);
            let dtilde = phi0 * boundary + (1.0 - phi0) * d_plus(&i);
            let printed = phi0 * boundary
                + (1.0 - phi0)
                    * (i.down.derivative_real(1.0) + i.stay.derivative_real(1.0) + i.up.mass());
            if !(dtilde > 0.0) {
                return Err(Error::Hypothesis(alloc::format!(
                    "jitter drift d~ = {dtilde} must be positive"
                )));
            }
            TailLaw {
                regime: Regime::Jitter,
                theta1: tp.theta1,
                theta2: tp.theta2,
                poly_exponent: 0.0,
                constant: 1.0 / dtilde,
                profile: Profile::Jitter {
                    theta2: tp.theta2,
                    phi,
                },
                twisted: tc,
                constants: None,
                dtilde: Some(dtilde),
                dtilde_printed: Some(printed),
                f: None,
                warnings: Vec::new(),
            }
        }
    };
    law.warnings = validity_checks(&i, &law, opts.cascade_ratio);
    Ok(law)
}

/// Conditions the tail law relies on but does not enforce. `i` is the
/// twisted kernel at the law's point.
pub fn validity_checks(i: &FreeKernel, law: &TailLaw, cascade_ratio: Option<f64>) -> Vec<Warning> {
    let mut w = Vec::new();
    if let Some(ratio) = cascade_ratio {
        let value = ratio * exp(law.theta2);
        if value >= 1.0 {
            w.push(Warning::Cascade { ratio, value });
        }
    }
    if law.regime != Regime::Jitter {
        let dp = d_plus(i);
        if !(dp > 0.0) {
            w.push(Warning::NonpositiveDrift(dp));
        }
        let ap = aperiodicity_check(i);
        if !ap.pass {
            w.push(Warning::Periodic {
                r_ud: ap.r_ud,
                r_s: ap.r_s,
            });
        }
        if !ap.f_period_ok {
            w.push(Warning::PeriodicReturn);
        }
    } else if law.twisted.p >= law.twisted.q {
        w.push(Warning::JitterNotSubcritical {
            p: law.twisted.p,
            q: law.twisted.q,
        });
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        bathroom_kernel, jackson_kernel, traffic_solve, BathroomSpec, JacksonSpec,
    };
    use crate::num::sqrt;
    use proptest::prelude::*;

    fn bathroom(nu: f64, alpha: f64, beta: f64) -> FreeKernel {
        bathroom_kernel(&BathroomSpec { nu, alpha, beta })
            .unwrap()
            .kernel
    }

    #[test]
    fn bathroom_jitter_law() {
        let law = analyze(&bathroom(0.2, 0.3, 0.5)).unwrap();
        assert_eq!(law.regime, Regime::Jitter);
        assert!((law.theta1 - 1.5f64.ln()).abs() < 1e-10);
        assert!(law.theta2.abs() < 1e-10);
        assert!((law.dtilde.unwrap() - 0.1).abs() < 1e-9);
        assert!((law.constant - 10.0).abs() < 1e-7);
        for y in 1..10 {
            let r = law.profile.eval(y + 1) / law.profile.eval(y);
            assert!((r - 0.6).abs() < 1e-9);
        }
        assert_eq!(law.poly_exponent, 0.0);
        assert!(law.warnings.is_empty(), "{:?}", law.warnings);
    }

    #[test]
    fn bathroom_bridge_law() {
        let s = BathroomSpec {
            nu: 0.2,
            alpha: 0.5,
            beta: 0.3,
        };
        let law = analyze_with(
            &bathroom(0.2, 0.5, 0.3),
            &AnalyzeOptions {
                cascade_ratio: Some(s.nu / s.beta),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(law.regime, Regime::Bridge);
        assert_eq!(law.poly_exponent, -1.5);
        // a₃' = e^{θ₁ᵇ}; the slope of the linear factor is 1 - √(β/ν) a₃'^{-1/2}
        let a3 = exp(law.theta1);
        let tc = law.twisted;
        assert!((tc.p0 / tc.u - 1.0).abs() < 1e-12);
        for y in 1..30usize {
            let yf = y as f64;
            let expected =
                powf(0.2 * a3 / 0.3, yf / 2.0) * (1.0 + (1.0 - sqrt(0.3 / 0.2) / sqrt(a3)) * yf);
            assert!((law.profile.eval(y) / expected - 1.0).abs() < 1e-10);
        }
        assert_eq!(law.profile.eval(0), 1.0);
        // e^{θ₂}ν/β < 1 bounds π(0, y) geometrically
        assert!(law.warnings.is_empty(), "{:?}", law.warnings);
    }

    #[test]
    fn bathroom_null_recurrent_law() {
        let law = analyze(&bathroom(0.2, 0.4, 0.4)).unwrap();
        assert_eq!(law.regime, Regime::NullRecurrent);
        assert_eq!(law.poly_exponent, -0.5);
        let c = law.constants.unwrap();
        assert!(c.printed_c0.is_some());
        for y in 1..10 {
            let r = law.profile.eval(y + 1) / law.profile.eval(y);
            assert!((r - exp(-law.theta2)).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_jackson_product_form() {
        let s = JacksonSpec {
            lam1: 0.2,
            lam2: 0.1,
            mu1: 0.3,
            mu2: 0.3,
            mu1_star: 0.3,
            r12: 0.1,
            r21: 0.1,
        };
        let d = traffic_solve(&s).unwrap();
        let law = analyze_with(
            &jackson_kernel(&s).unwrap().kernel,
            &AnalyzeOptions {
                cascade_ratio: Some(d.rho2),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(law.regime, Regime::Jitter);
        assert!((exp(-law.theta1) - d.rho1).abs() < 1e-10);
        let tc = law.twisted;
        assert!((exp(-law.theta2) * tc.p / tc.q - d.rho2).abs() < 1e-10);
        assert!(law.warnings.is_empty(), "{:?}", law.warnings);
    }

    #[test]
    fn cascade_warning() {
        let k = bathroom(0.2, 0.5, 0.3);
        let law = analyze(&k).unwrap();
        let (i, _) = k.twist(law.theta1, law.theta2).unwrap();
        let ratio = 1.2 / exp(law.theta2);
        let w = validity_checks(&i, &law, Some(ratio));
        assert!(matches!(w[..], [Warning::Cascade { value, .. }] if (value - 1.2).abs() < 1e-12));
    }

    #[test]
    fn modified_jackson_bridge_profile_is_affine() {
        let s = JacksonSpec {
            lam1: 0.2,
            lam2: 0.1,
            mu1: 0.3,
            mu2: 0.3,
            mu1_star: 1.2,
            r12: 0.1,
            r21: 0.1,
        };
        let law = analyze(&jackson_kernel(&s).unwrap().kernel).unwrap();
        assert_eq!(law.regime, Regime::Bridge);
        let tc = law.twisted;
        for y in 1..50usize {
            let v = law.profile.eval(y) * exp(law.theta2 * y as f64);
            let affine = tc.p0 / tc.u + tc.kappa / tc.u * y as f64;
            assert!((v - affine).abs() < 1e-12 * affine);
        }
    }

    proptest! {
        #[test]
        fn profile_positive_and_regime_matches_exponent(
            nu in 0.05f64..0.3, da in 0.01f64..0.5, db in 0.01f64..0.5, swap in proptest::bool::ANY
        ) {
            let (a, b) = if swap { (nu + da, nu + db) } else { (nu + db, nu + da) };
            let law = analyze(&bathroom(nu, a, b)).unwrap();
            let expected = match law.regime {
                Regime::Bridge => -1.5,
                Regime::NullRecurrent => -0.5,
                Regime::Jitter => 0.0,
            };
            prop_assert_eq!(law.poly_exponent, expected);
            prop_assert!(law.theta1 > 0.0);
            for y in 0..100 {
                prop_assert!(law.profile.eval(y) > 0.0);
            }
        }
    }
}
