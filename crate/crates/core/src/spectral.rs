//! Twist points, regime classification and the Feynman-Kac spectral radius.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{FreeKernel, TwistedConstants};
use crate::num::{exp, ln, sqrt};

/// Default tolerance on `|R⁻(θᵇ) - 1|` separating the null-recurrent case.
pub const DEFAULT_TOL: f64 = 1e-9;

const BRACKET_START: f64 = 1e-9;
const BRACKET_END: f64 = 64.0;
const BISECT_WIDTH: f64 = 1e-13;
const JITTER_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `κ > 0`: tail `C₊ ℓ^{-3/2} e^{-θ₁ᵇ ℓ}`.
    Bridge,
    /// `κ = 0`: tail `C₀ ℓ^{-1/2} e^{-θ₁ᵇ ℓ}`.
    NullRecurrent,
    /// Geometric tail at the jitter point.
    Jitter,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Bridge => "bridge",
            Regime::NullRecurrent => "null-recurrent",
            Regime::Jitter => "jitter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistPoint {
    pub theta1: f64,
    pub theta2: f64,
    pub regime: Regime,
    /// `1 - R⁻` at the point. Negative at a bridge point on a jitter kernel.
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Bridge,
    Jitter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub gamma: f64,
    pub radius: f64,
    pub log_radius: f64,
    /// The `β` at which the radius is attained.
    pub beta: f64,
    pub branch: Branch,
    /// `R⁻ = R⁺` at `β₀` to within `1e-12`; the bridge branch was taken.
    pub tie: bool,
}

/// Minimizer of `β ↦ R⁺(θ₁, β)`: `½ ln(Q/P)` at `e^{θ₁}`.
pub fn beta0(k: &FreeKernel, theta1: f64) -> Result<f64> {
    let z = exp(theta1);
    let (p, q) = (k.up.eval_real(z), k.down.eval_real(z));
    if !(p > 0.0) || !(q > 0.0) {
        return Err(Error::DegenerateKernel("P or Q vanishes; beta0 undefined"));
    }
    Ok(0.5 * ln(q / p))
}

/// `g(θ) = S(e^θ) + 2√(PQ)(e^θ) - 1` and its derivative.
fn bridge_residual(k: &FreeKernel, theta: f64) -> (f64, f64) {
    let z = exp(theta);
    let (p, q, s) = (k.up.eval_real(z), k.down.eval_real(z), k.stay.eval_real(z));
    let (dp, dq, ds) = (
        k.up.derivative_real(z),
        k.down.derivative_real(z),
        k.stay.derivative_real(z),
    );
    let r = sqrt(p * q);
    let g = s + 2.0 * r - 1.0;
    let dg = z * (ds + if r > 0.0 { (dp * q + p * dq) / r } else { 0.0 });
    (g, dg)
}

/// Solves `∂R⁺/∂θ₂ = 0, R⁺ = 1` for `θ₁ > 0`.
///
/// The returned point is labelled `Bridge` or `NullRecurrent` according to
/// [`DEFAULT_TOL`]; `kappa < 0` means the kernel is in the jitter regime.
pub fn solve_bridge_point(k: &FreeKernel) -> Result<TwistPoint> {
    let g0 = bridge_residual(k, 0.0).0;
    if !(g0 < -1e-12) {
        return Err(Error::DegenerateDrift { g0 });
    }
    let mut lo = 0.0;
    let mut hi = BRACKET_START;
    loop {
        let g = bridge_residual(k, hi).0;
        if !(g < 0.0) {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_END {
            return Err(Error::NoRoot("the bridge equation"));
        }
    }
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if bridge_residual(k, mid).0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta1 = 0.5 * (lo + hi);
    let (g, dg) = bridge_residual(k, theta1);
    if dg > 0.0 {
        let next = theta1 - g / dg;
        if next > lo - BISECT_WIDTH
            && next < hi + BISECT_WIDTH
            && bridge_residual(k, next).0.abs() <= g.abs()
        {
            theta1 = next;
        }
    }
    let theta2 = beta0(k, theta1)?;
    let kappa = 1.0 - k.r_minus(theta1, theta2);
    let regime = if kappa.abs() <= DEFAULT_TOL {
        Regime::NullRecurrent
    } else {
        Regime::Bridge
    };
    Ok(TwistPoint {
        theta1,
        theta2,
        regime,
        kappa,
    })
}

/// `β₁(θ₁)`: `e^{β₁}` is the smaller root of `P w² + (S-1) w + Q = 0`.
pub fn beta1(k: &FreeKernel, theta1: f64) -> Result<f64> {
    let z = exp(theta1);
    let (p, q, s) = (k.up.eval_real(z), k.down.eval_real(z), k.stay.eval_real(z));
    let b = 1.0 - s;
    let mut disc = b * b - 4.0 * p * q;
    if disc < 0.0 {
        // rounding at the double root
        if disc > -1e-13 * b * b && b > 0.0 {
            disc = 0.0;
        } else {
            return Err(Error::BeyondBridge { theta1 });
        }
    }
    if !(b > 0.0) || !(q > 0.0) {
        return Err(Error::DegenerateKernel("beta1 needs S < 1 and Q > 0"));
    }
    Ok(ln(2.0 * q / (b + sqrt(disc))))
}

fn jitter_residual(k: &FreeKernel, theta1: f64) -> Result<f64> {
    let b1 = beta1(k, theta1)?;
    Ok(k.r_minus(theta1, b1) - 1.0)
}

/// Solves `R⁺ = R⁻ = 1` with `θ₁ ∈ (0, θ₁ᵇ)`, skipping the trivial root at 0.
pub fn solve_jitter_point(k: &FreeKernel) -> Result<TwistPoint> {
    let tb = solve_bridge_point(k)?;
    jitter_point_below(k, tb.theta1)
}

fn jitter_point_below(k: &FreeKernel, theta_b: f64) -> Result<TwistPoint> {
    let lo_grid = theta_b * 1e-6;
    let ratio = exp(ln(theta_b / lo_grid) / (JITTER_GRID - 1) as f64);
    let mut hi = theta_b;
    if !(jitter_residual(k, hi)? > 0.0) {
        return Err(Error::NoJitterRoot);
    }
    let mut bracket = None;
    for i in (0..JITTER_GRID - 1).rev() {
        let t = lo_grid * crate::num::powi(ratio, i as i32);
        let j = jitter_residual(k, t)?;
        if j <= 0.0 {
            bracket = Some((t, hi));
            break;
        }
        hi = t;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoJitterRoot)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if jitter_residual(k, mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (jl, jh) = (jitter_residual(k, lo)?, jitter_residual(k, hi)?);
    let theta1 = if jl.abs() <= jh.abs() { lo } else { hi };
    let theta2 = beta1(k, theta1)?;
    Ok(TwistPoint {
        theta1,
        theta2,
        regime: Regime::Jitter,
        kappa: 0.0,
    })
}

/// Classifies the kernel by `δ = R⁻(θᵇ)`.
pub fn classify(k: &FreeKernel, tol: f64) -> Result<TwistPoint> {
    let tb = solve_bridge_point(k)?;
    let delta = 1.0 - tb.kappa;
    if delta < 1.0 - tol {
        Ok(TwistPoint {
            regime: Regime::Bridge,
            ..tb
        })
    } else if delta <= 1.0 + tol {
        Ok(TwistPoint {
            regime: Regime::NullRecurrent,
            kappa: 0.0,
            ..tb
        })
    } else {
        jitter_point_below(k, tb.theta1)
    }
}

/// `r(Ĵ_γ)`: `R⁺(γ, β₀)` under the bridge condition, otherwise the common
/// value of `R⁺ = R⁻` at the largest crossing below `β₀`.
pub fn spectral_radius(k: &FreeKernel, gamma: f64) -> Result<SpectralPoint> {
    let b0 = beta0(k, gamma)?;
    let rp = k.r_plus(gamma, b0);
    let rm = k.r_minus(gamma, b0);
    let tie = (rm - rp).abs() <= 1e-12 * rp;
    if rm <= rp || tie {
        return Ok(SpectralPoint {
            gamma,
            radius: rp,
            log_radius: ln(rp),
            beta: b0,
            branch: Branch::Bridge,
            tie,
        });
    }
    let h = |b: f64| k.r_minus(gamma, b) - k.r_plus(gamma, b);
    let mut hi = b0;
    let mut step = 1e-3;
    let mut lo = b0 - step;
    while h(lo) >= 0.0 {
        hi = lo;
        step *= 2.0;
        lo = b0 - step;
        if step > 1e4 {
            return Err(Error::NoRoot("R+ = R- below beta0"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    let radius = k.r_plus(gamma, beta);
    Ok(SpectralPoint {
        gamma,
        radius,
        log_radius: ln(radius),
        beta,
        branch: Branch::Jitter,
        tie: false,
    })
}

/// `f[n]`: probability that the phase chain started at 0 first returns to 0
/// at step `n` (`f[0] = 0`), for `n ≤ nmax`.
pub fn first_return_masses(c: &TwistedConstants, nmax: usize) -> Vec<f64> {
    let mut f = vec![0.0; nmax + 1];
    if nmax == 0 {
        return f;
    }
    f[1] = c.s0;
    // mass[y]: at phase y ≥ 1 after n steps, no return yet
    let mut mass = vec![0.0; nmax + 2];
    let mut next = vec![0.0; nmax + 2];
    mass[1] = c.p0;
    for n in 2..=nmax {
        f[n] = c.q * mass[1];
        let top = n.min(nmax);
        for y in 1..=top {
            let mut v = c.s * mass[y] + c.q * mass[y + 1];
            if y > 1 {
                v += c.p * mass[y - 1];
            }
            next[y] = v;
        }
        core::mem::swap(&mut mass, &mut next);
    }
    f
}

/// `Ψ(u) = Σ_n f⁽ⁿ⁾(0,0) uⁿ` for the phase chain of a bridge-normalized
/// kernel: truncated series by first-return recursion, and the closed form.
pub fn psi_cross_check(i: &FreeKernel, u: f64, nmax: usize) -> Result<(f64, f64)> {
    let c = i.constants();
    let (p, q, s, p0, s0) = (c.p, c.q, c.s, c.p0, c.s0);
    if (p - q).abs() > crate::kernel::BRIDGE_TOL {
        return Err(Error::NotBridgeNormalized { p, q });
    }
    if !(u >= 0.0) {
        return Err(Error::OutsideRegion("u must be nonnegative"));
    }
    if !(u * s < 1.0) {
        return Err(Error::OutsideRegion("|u s| < 1"));
    }
    let ratio = 4.0
        * (p / (p + q))
        * (q / (p + q))
        * u
        * u
        * crate::num::powi((1.0 - s) / (1.0 - u * s), 2);
    if ratio > 1.0 {
        return Err(Error::OutsideRegion(
            "4 (p/(p+q)) (q/(p+q)) u^2 ((1-s)/(1-us))^2 <= 1",
        ));
    }
    let closed =
        s0 * u + ((1.0 - u * s) / (1.0 - s)) * ((p + q) / p) * p0 * 0.5 * (1.0 - sqrt(1.0 - ratio));

    let f = first_return_masses(&c, nmax);
    let mut series = 0.0;
    let mut un = 1.0;
    for fn_ in f.iter().skip(1) {
        un *= u;
        series += fn_ * un;
    }
    Ok((series, closed))
}
