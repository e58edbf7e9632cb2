//! Markov additive kernels with a nearest-neighbour phase and a boundary
//! phase 0, their exponential twists, and the phase chains and measures
//! derived from them.
//!
//! A [`FreeKernel`] is described by five displacement transforms: `up`,
//! `down` and `stay` act when the phase is positive, `up0` and `stay0` act at
//! phase 0, where any missing mass `kappa` kills the walk.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;
use crate::num::exp;
use crate::spectral::Regime;

/// Tolerance for row-mass checks.
pub const MASS_TOL: f64 = 1e-12;

/// Default tabulation horizon for level-dependent phase chains.
pub const DEFAULT_HORIZON: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct FreeKernel {
    pub up: LaurentPoly,
    pub down: LaurentPoly,
    pub stay: LaurentPoly,
    pub up0: LaurentPoly,
    pub stay0: LaurentPoly,
    pub kappa: f64,
}

/// Unvalidated kernel description, as read from a configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawKernel {
    pub up: Vec<(i32, f64)>,
    pub down: Vec<(i32, f64)>,
    pub stay: Vec<(i32, f64)>,
    pub up0: Vec<(i32, f64)>,
    pub stay0: Vec<(i32, f64)>,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeWeight {
        transform: &'static str,
        exponent: i32,
        weight: f64,
    },
    NonFiniteWeight {
        transform: &'static str,
        exponent: i32,
    },
    NegativeKappa(f64),
    InteriorMass(f64),
    BoundaryMass {
        mass: f64,
        expected: f64,
    },
    NonPositive(&'static str),
}

/// Structural checks on a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub interior_mass: f64,
    pub boundary_mass: f64,
    pub kappa: f64,
    /// `(min, max)` exponent of each of up, down, stay, up0, stay0.
    pub support: [Option<(i32, i32)>; 5],
    pub p: f64,
    pub q: f64,
    pub p0: f64,
    /// Set when `kappa > 0`. Not a violation: crude twists kill at the boundary.
    pub substochastic_boundary: bool,
    pub violations: Vec<Violation>,
}

impl Diagnostics {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                s.push_str("; ");
            }
            s.push_str(&format!("{v:?}"));
        }
        s
    }
}

const NAMES: [&str; 5] = ["up", "down", "stay", "up0", "stay0"];

/// Checks a raw description: nonnegative weights, stochastic interior rows,
/// boundary mass `1 - kappa`, and `p, q, p0 > 0`.
pub fn validate(raw: &RawKernel) -> Diagnostics {
    let parts = [&raw.up, &raw.down, &raw.stay, &raw.up0, &raw.stay0];
    let mut violations = Vec::new();
    let mut masses = [0.0; 5];
    let mut support = [None; 5];
    for (i, part) in parts.iter().enumerate() {
        for &(exponent, weight) in part.iter() {
            if !weight.is_finite() {
                violations.push(Violation::NonFiniteWeight {
                    transform: NAMES[i],
                    exponent,
                });
            } else if weight < 0.0 {
                violations.push(Violation::NegativeWeight {
                    transform: NAMES[i],
                    exponent,
                    weight,
                });
            }
        }
        masses[i] = part.iter().map(|t| t.1).sum();
        let lo = part.iter().map(|t| t.0).min();
        let hi = part.iter().map(|t| t.0).max();
        support[i] = lo.zip(hi);
    }
    finish_diagnostics(masses, support, raw.kappa, violations)
}

fn finish_diagnostics(
    masses: [f64; 5],
    support: [Option<(i32, i32)>; 5],
    kappa: f64,
    mut violations: Vec<Violation>,
) -> Diagnostics {
    let [p, q, s, p0, s0] = masses;
    let interior_mass = p + q + s;
    let boundary_mass = p0 + s0;
    if !(kappa >= 0.0) {
        violations.push(Violation::NegativeKappa(kappa));
    }
    if (interior_mass - 1.0).abs() > MASS_TOL {
        violations.push(Violation::InteriorMass(interior_mass));
    }
    if (boundary_mass - (1.0 - kappa)).abs() > MASS_TOL {
        violations.push(Violation::BoundaryMass {
            mass: boundary_mass,
            expected: 1.0 - kappa,
        });
    }
    for (name, m) in [("p", p), ("q", q), ("p0", p0)] {
        if !(m > 0.0) {
            violations.push(Violation::NonPositive(name));
        }
    }
    Diagnostics {
        interior_mass,
        boundary_mass,
        kappa,
        support,
        p,
        q,
        p0,
        substochastic_boundary: kappa > MASS_TOL,
        violations,
    }
}

impl FreeKernel {
    /// Validating constructor.
    pub fn new(
        up: LaurentPoly,
        down: LaurentPoly,
        stay: LaurentPoly,
        up0: LaurentPoly,
        stay0: LaurentPoly,
        kappa: f64,
    ) -> Result<Self> {
        let k = Self {
            up,
            down,
            stay,
            up0,
            stay0,
            kappa,
        };
        let d = k.diagnostics();
        if d.ok() {
            Ok(k)
        } else {
            Err(Error::InvalidKernel(d.summary()))
        }
    }

    pub fn from_raw(raw: &RawKernel) -> Result<Self> {
        let d = validate(raw);
        if !d.ok() {
            return Err(Error::InvalidKernel(d.summary()));
        }
        Self::new(
            LaurentPoly::new(raw.up.iter().copied())?,
            LaurentPoly::new(raw.down.iter().copied())?,
            LaurentPoly::new(raw.stay.iter().copied())?,
            LaurentPoly::new(raw.up0.iter().copied())?,
            LaurentPoly::new(raw.stay0.iter().copied())?,
            raw.kappa,
        )
    }

    pub fn transforms(&self) -> [&LaurentPoly; 5] {
        [&self.up, &self.down, &self.stay, &self.up0, &self.stay0]
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let t = self.transforms();
        let masses = t.map(|h| h.mass());
        let support = t.map(|h| h.min_exponent().zip(h.max_exponent()));
        finish_diagnostics(masses, support, self.kappa, Vec::new())
    }

    /// `R⁺(θ₁, θ₂) = e^{θ₂} P(e^{θ₁}) + S(e^{θ₁}) + e^{-θ₂} Q(e^{θ₁})`.
    pub fn r_plus(&self, theta1: f64, theta2: f64) -> f64 {
        let z = exp(theta1);
        exp(theta2) * self.up.eval_real(z)
            + self.stay.eval_real(z)
            + exp(-theta2) * self.down.eval_real(z)
    }

    /// `R⁻(θ₁, θ₂) = e^{θ₂} P₀(e^{θ₁}) + S₀(e^{θ₁})`.
    pub fn r_minus(&self, theta1: f64, theta2: f64) -> f64 {
        let z = exp(theta1);
        exp(theta2) * self.up0.eval_real(z) + self.stay0.eval_real(z)
    }

    /// `∂R⁺/∂θ₂`.
    pub fn r_plus_dtheta2(&self, theta1: f64, theta2: f64) -> f64 {
        let z = exp(theta1);
        exp(theta2) * self.up.eval_real(z) - exp(-theta2) * self.down.eval_real(z)
    }

    /// Exponential twist by `(θ₁, θ₂)` normalized by `f = R⁺(θ₁, θ₂)`.
    ///
    /// Interior rows of the result are stochastic; the boundary row keeps
    /// mass `R⁻/R⁺` and the rest becomes the killing mass. Fails when the
    /// boundary row would exceed one.
    pub fn twist(&self, theta1: f64, theta2: f64) -> Result<(FreeKernel, TwistedConstants)> {
        let f = self.r_plus(theta1, theta2);
        if !f.is_finite() || f <= 0.0 {
            return Err(Error::Oracle(format!("R+ = {f} at ({theta1}, {theta2})")));
        }
        let c = exp(theta1);
        let (eu, ed) = (exp(theta2), exp(-theta2));
        let up = self.up.scale_argument(c).scaled(eu / f);
        let down = self.down.scale_argument(c).scaled(ed / f);
        let stay = self.stay.scale_argument(c).scaled(1.0 / f);
        let up0 = self.up0.scale_argument(c).scaled(eu / f);
        let stay0 = self.stay0.scale_argument(c).scaled(1.0 / f);
        let boundary = self.r_minus(theta1, theta2) / f;
        if boundary > 1.0 + MASS_TOL {
            return Err(Error::RegimeMismatch(
                "twisted boundary row exceeds one (jitter side of the bridge condition)",
            ));
        }
        let kappa = (1.0 - boundary).max(0.0);
        let (p, q) = (up.mass(), down.mass());
        let tc = TwistedConstants {
            p,
            q,
            s: stay.mass(),
            p0: up0.mass(),
            s0: stay0.mass(),
            u: p.min(q),
            kappa,
            f,
        };
        let k = FreeKernel {
            up,
            down,
            stay,
            up0,
            stay0,
            kappa,
        };
        Ok((k, tc))
    }

    /// One-step masses of this kernel's phase chain.
    pub fn constants(&self) -> TwistedConstants {
        let (p, q) = (self.up.mass(), self.down.mass());
        TwistedConstants {
            p,
            q,
            s: self.stay.mass(),
            p0: self.up0.mass(),
            s0: self.stay0.mass(),
            u: p.min(q),
            kappa: self.kappa,
            f: 1.0,
        }
    }
}

/// One-step phase masses of a twisted kernel, plus the normalizer `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistedConstants {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub p0: f64,
    pub s0: f64,
    pub u: f64,
    pub kappa: f64,
    pub f: f64,
}

/// `h(x, y) = e^{αx} e^{βy} (1 + slope·y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicFunction {
    pub alpha: f64,
    pub beta: f64,
    pub a0_slope: f64,
}

impl HarmonicFunction {
    pub fn new(alpha: f64, beta: f64, a0_slope: f64) -> Result<Self> {
        if !(a0_slope >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "a0 slope {a0_slope} makes h nonpositive"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            a0_slope,
        })
    }

    /// `a₀(y) = 1 + slope·y`.
    pub fn a0(&self, y: usize) -> f64 {
        1.0 + self.a0_slope * y as f64
    }

    /// The phase factor `ĥ(y) = e^{βy} a₀(y)`.
    pub fn phase(&self, y: usize) -> f64 {
        exp(self.beta * y as f64) * self.a0(y)
    }

    pub fn eval(&self, x: i64, y: usize) -> f64 {
        exp(self.alpha * x as f64) * self.phase(y)
    }
}

/// A birth-death chain on `{0, 1, 2, ...}` with reflecting boundary.
pub trait PhaseChain {
    fn up(&self, y: usize) -> f64;
    fn down(&self, y: usize) -> f64;
    fn stay(&self, y: usize) -> f64;

    fn row_sum(&self, y: usize) -> f64 {
        self.up(y) + self.down(y) + self.stay(y)
    }
}

/// Phase chain with constant interior masses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousChain {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub p0: f64,
    pub s0: f64,
}

impl From<&TwistedConstants> for HomogeneousChain {
    fn from(tc: &TwistedConstants) -> Self {
        Self {
            p: tc.p,
            q: tc.q,
            s: tc.s,
            p0: tc.p0,
            s0: tc.s0,
        }
    }
}

impl PhaseChain for HomogeneousChain {
    fn up(&self, y: usize) -> f64 {
        if y == 0 {
            self.p0
        } else {
            self.p
        }
    }
    fn down(&self, y: usize) -> f64 {
        if y == 0 {
            0.0
        } else {
            self.q
        }
    }
    fn stay(&self, y: usize) -> f64 {
        if y == 0 {
            self.s0
        } else {
            self.s
        }
    }
}

/// The h-transform of a bridge crude twist by `a₀(y) = 1 + κy/p₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgePhaseChain {
    pub u: f64,
    pub s: f64,
    pub p0: f64,
    pub s0: f64,
    pub kappa: f64,
}

impl BridgePhaseChain {
    pub fn a0_slope(&self) -> f64 {
        self.kappa / self.p0
    }

    pub fn a0(&self, y: usize) -> f64 {
        1.0 + self.a0_slope() * y as f64
    }

    /// Rows `[down, stay, up]` for `y = 0..=horizon`.
    pub fn tabulate(&self, horizon: usize) -> Vec<[f64; 3]> {
        (0..=horizon)
            .map(|y| [self.down(y), self.stay(y), self.up(y)])
            .collect()
    }
}

impl PhaseChain for BridgePhaseChain {
    fn up(&self, y: usize) -> f64 {
        if y == 0 {
            self.p0 * self.a0(1)
        } else {
            self.u * self.a0(y + 1) / self.a0(y)
        }
    }
    fn down(&self, y: usize) -> f64 {
        if y == 0 {
            0.0
        } else {
            self.u * self.a0(y - 1) / self.a0(y)
        }
    }
    fn stay(&self, y: usize) -> f64 {
        if y == 0 {
            self.s0
        } else {
            self.s
        }
    }
}

/// Bridge-normalization tolerance on `|p - q|`.
pub const BRIDGE_TOL: f64 = 1e-10;

/// Refines a bridge crude twist into a stochastic level-dependent chain.
pub fn h_transform_bridge(tc: &TwistedConstants) -> Result<BridgePhaseChain> {
    if (tc.p - tc.q).abs() > BRIDGE_TOL {
        return Err(Error::NotBridgeNormalized { p: tc.p, q: tc.q });
    }
    if !(tc.u > 0.0) || !(tc.p0 > 0.0) {
        return Err(Error::DegenerateKernel("u = 0 or p0 = 0 in bridge twist"));
    }
    Ok(BridgePhaseChain {
        u: tc.u,
        s: tc.s,
        p0: tc.p0,
        s0: tc.s0,
        kappa: tc.kappa,
    })
}

/// Stationary measure of the refined phase chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseMeasure {
    /// σ-finite: `φ(0) = 1`, `φ(y) = (p₀/u)(1 + κy/p₀)²`.
    Bridge { p0: f64, u: f64, kappa: f64 },
    /// Probability: `φ(0) = Γp/p₀`, `φ(y) = Γ(p/q)^y`.
    Jitter { gamma: f64, p: f64, q: f64, p0: f64 },
}

impl PhaseMeasure {
    pub fn value(&self, y: usize) -> f64 {
        match *self {
            PhaseMeasure::Bridge { p0, u, kappa } => {
                if y == 0 {
                    1.0
                } else {
                    let a = 1.0 + kappa * y as f64 / p0;
                    p0 / u * a * a
                }
            }
            PhaseMeasure::Jitter { gamma, p, q, p0 } => {
                if y == 0 {
                    gamma * p / p0
                } else {
                    gamma * crate::num::powi(p / q, y as i32)
                }
            }
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            PhaseMeasure::Jitter { gamma, .. } => Some(gamma),
            PhaseMeasure::Bridge { .. } => None,
        }
    }

    /// `ρ = p/q` for the jitter measure.
    pub fn rho(&self) -> Option<f64> {
        match *self {
            PhaseMeasure::Jitter { p, q, .. } => Some(p / q),
            PhaseMeasure::Bridge { .. } => None,
        }
    }

    /// Sup over `y ≤ ymax` of `|Σ_x φ(x) K(x, y) / φ(y) - 1|`.
    pub fn stationarity_residual(&self, chain: &impl PhaseChain, ymax: usize) -> f64 {
        (0..=ymax)
            .map(|y| {
                let mut inflow =
                    self.value(y) * chain.stay(y) + self.value(y + 1) * chain.down(y + 1);
                if y > 0 {
                    inflow += self.value(y - 1) * chain.up(y - 1);
                }
                (inflow / self.value(y) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Stationary measure of the twisted phase chain for the given regime.
pub fn phase_stationary_measure(regime: Regime, tc: &TwistedConstants) -> Result<PhaseMeasure> {
    match regime {
        Regime::Bridge | Regime::NullRecurrent => Ok(PhaseMeasure::Bridge {
            p0: tc.p0,
            u: tc.u,
            kappa: if regime == Regime::NullRecurrent {
                0.0
            } else {
                tc.kappa
            },
        }),
        Regime::Jitter => {
            if !(tc.p < tc.q) {
                return Err(Error::RegimeMismatch("jitter measure needs p < q"));
            }
            let gamma = 1.0 / (tc.p / tc.p0 + tc.p / (tc.q - tc.p));
            Ok(PhaseMeasure::Jitter {
                gamma,
                p: tc.p,
                q: tc.q,
                p0: tc.p0,
            })
        }
    }
}

/// `Σ_{n≥1} p₀(p₀+κ) / ((p₀+κn)(p₀+κ(n+1)))`, the transience series of the
/// refined bridge chain. Infinite when `κ = 0`.
pub fn transience_sum(p0: f64, kappa: f64) -> f64 {
    assert!(p0 > 0.0 && kappa >= 0.0);
    if kappa == 0.0 {
        return f64::INFINITY;
    }
    // telescopes: p0(p0+κ)/κ · Σ [1/(p0+κn) − 1/(p0+κ(n+1))]
    p0 / kappa
}
