//! Kernel builders for the modified Jackson network and the bathroom model.
//!
//! Rates are uniformized: every builder divides by the total event rate and
//! records that factor, so the kernels are stochastic.

use alloc::format;

use crate::error::{Error, Result};
use crate::kernel::{FreeKernel, TwistedConstants};
use crate::laurent::LaurentPoly;
use crate::num::exp;

/// A uniformized kernel and the total rate it was divided by.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelKernel {
    pub kernel: FreeKernel,
    pub normalization: f64,
}

/// Two-node Jackson network where node 1 serves at `mu1_star` while node 2
/// is empty. The level is queue 1, the phase is queue 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacksonSpec {
    pub lam1: f64,
    pub lam2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu1_star: f64,
    pub r12: f64,
    pub r21: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacksonDerived {
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub stable: bool,
    /// `(λ₁ - μ₁ρ₂)/(1 - ρ₂)`; `mu1_star` must exceed it. Infinite if `ρ₂ ≥ 1`.
    pub threshold: f64,
}

fn check_rates(pairs: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in pairs {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Infeasible(format!(
                "{name} = {v} must be finite and nonnegative"
            )));
        }
    }
    Ok(())
}

impl JacksonSpec {
    fn validate(&self) -> Result<()> {
        check_rates(&[
            ("lam1", self.lam1),
            ("lam2", self.lam2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu1_star", self.mu1_star),
            ("r12", self.r12),
            ("r21", self.r21),
        ])?;
        if self.r12 > 1.0 || self.r21 > 1.0 {
            return Err(Error::Infeasible(
                "routing probabilities must lie in [0, 1]".into(),
            ));
        }
        if !(self.mu1 > 0.0) || !(self.mu2 > 0.0) {
            return Err(Error::Infeasible("service rates must be positive".into()));
        }
        if self.mu1_star < self.mu1 {
            return Err(Error::Infeasible(format!(
                "mu1_star = {} is below mu1 = {}",
                self.mu1_star, self.mu1
            )));
        }
        Ok(())
    }
}

/// Solves `λᵢ = λ̄ᵢ + λ_{3-i} r_{3-i,i}` and checks stability.
pub fn traffic_solve(spec: &JacksonSpec) -> Result<JacksonDerived> {
    spec.validate()?;
    let loop_gain = spec.r12 * spec.r21;
    if loop_gain >= 1.0 {
        return Err(Error::ClosedNetwork(loop_gain));
    }
    let det = 1.0 - loop_gain;
    let lambda1 = (spec.lam1 + spec.lam2 * spec.r21) / det;
    let lambda2 = (spec.lam2 + spec.lam1 * spec.r12) / det;
    if !(lambda1 > 0.0) || !(lambda2 > 0.0) {
        return Err(Error::Infeasible(
            "both throughputs must be positive".into(),
        ));
    }
    let rho1 = lambda1 / spec.mu1;
    let rho2 = lambda2 / spec.mu2;
    let threshold = if rho2 < 1.0 {
        (lambda1 - spec.mu1 * rho2) / (1.0 - rho2)
    } else {
        f64::INFINITY
    };
    Ok(JacksonDerived {
        lambda1,
        lambda2,
        rho1,
        rho2,
        stable: rho2 < 1.0 && spec.mu1_star > threshold,
        threshold,
    })
}

/// Stability of the modified network: `ρ₂ < 1` and `μ₁* > (λ₁ - μ₁ρ₂)/(1 - ρ₂)`.
/// Returns the verdict and the threshold on `μ₁*`.
pub fn stability_check(spec: &JacksonSpec) -> Result<(bool, f64)> {
    let d = traffic_solve(spec)?;
    Ok((d.stable, d.threshold))
}

/// The uniformized Jackson kernel. Unused node-1 capacity `μ₁* - μ₁` is an
/// interior self-loop, the idle node-2 rate `μ₂` a boundary self-loop.
pub fn jackson_kernel(spec: &JacksonSpec) -> Result<ModelKernel> {
    traffic_solve(spec)?;
    let t = spec.lam1 + spec.lam2 + spec.mu1_star + spec.mu2;
    let (l1, l2) = (spec.lam1 / t, spec.lam2 / t);
    let (m1, m2, m1s) = (spec.mu1 / t, spec.mu2 / t, spec.mu1_star / t);
    let (r12, r21) = (spec.r12, spec.r21);
    let kernel = FreeKernel::new(
        LaurentPoly::new([(0, l2), (-1, m1 * r12)])?,
        LaurentPoly::new([(0, m2 * (1.0 - r21)), (1, m2 * r21)])?,
        LaurentPoly::new([(1, l1), (-1, m1 * (1.0 - r12)), (0, m1s - m1)])?,
        LaurentPoly::new([(0, l2), (-1, m1s * r12)])?,
        LaurentPoly::new([(1, l1), (-1, m1s * (1.0 - r12)), (0, m2)])?,
        0.0,
    )?;
    Ok(ModelKernel {
        kernel,
        normalization: t,
    })
}

/// The closed-form boundary stay mass printed alongside the kernel's own:
/// `λ̄₁e^{θ₁} + μ₁* r₁₀ e^{-θ₁} e^{θ₂}` in uniformized rates, without the
/// `μ₂` self-loop.
pub fn jackson_printed_s0(spec: &JacksonSpec, theta1: f64, theta2: f64) -> f64 {
    let t = spec.lam1 + spec.lam2 + spec.mu1_star + spec.mu2;
    (spec.lam1 * exp(theta1) + spec.mu1_star * (1.0 - spec.r12) * exp(-theta1) * exp(theta2)) / t
}

/// `r = p₀/q` of a twisted Jackson kernel.
pub fn boundary_ratio(tc: &TwistedConstants) -> f64 {
    tc.p0 / tc.q
}

/// Couples arrive at rate `nu` and split into the men's queue (level,
/// service `alpha`) and the ladies' queue (phase, service `beta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathroomSpec {
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BathroomSpec {
    pub fn normalized(&self) -> Result<(BathroomSpec, f64)> {
        check_rates(&[("nu", self.nu), ("alpha", self.alpha), ("beta", self.beta)])?;
        if !(self.nu > 0.0 && self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Infeasible("bathroom rates must be positive".into()));
        }
        if self.nu >= self.alpha || self.nu >= self.beta {
            return Err(Error::Infeasible(format!(
                "unstable: nu = {} must be below alpha = {} and beta = {}",
                self.nu, self.alpha, self.beta
            )));
        }
        let t = self.nu + self.alpha + self.beta;
        Ok((
            BathroomSpec {
                nu: self.nu / t,
                alpha: self.alpha / t,
                beta: self.beta / t,
            },
            t,
        ))
    }
}

/// `P = νz`, `Q = β`, `S = αz⁻¹`, `P₀ = νz`, `S₀ = αz⁻¹ + β`.
pub fn bathroom_kernel(spec: &BathroomSpec) -> Result<ModelKernel> {
    let (b, t) = spec.normalized()?;
    let kernel = FreeKernel::new(
        LaurentPoly::monomial(1, b.nu)?,
        LaurentPoly::monomial(0, b.beta)?,
        LaurentPoly::monomial(-1, b.alpha)?,
        LaurentPoly::monomial(1, b.nu)?,
        LaurentPoly::new([(-1, b.alpha), (0, b.beta)])?,
        0.0,
    )?;
    Ok(ModelKernel {
        kernel,
        normalization: t,
    })
}

/// The root `z > 1` of `4βνz³ = ((α+β+ν)z - α)²`, which is `e^{θ₁ᵇ}`.
pub fn bathroom_cubic_root(spec: &BathroomSpec) -> Result<f64> {
    let (b, _) = spec.normalized()?;
    if b.alpha < b.beta {
        return Err(Error::RegimeMismatch("alpha < beta: use the jitter solver"));
    }
    let sum = b.alpha + b.beta + b.nu;
    let r = |z: f64| {
        let w = sum * z - b.alpha;
        4.0 * b.beta * b.nu * z * z * z - w * w
    };
    let (mut lo, mut hi) = (1.0 + 1e-9, 2.0);
    if !(r(lo) < 0.0) {
        return Err(Error::NoRoot("the bathroom cubic"));
    }
    while r(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoRoot("the bathroom cubic"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if r(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
