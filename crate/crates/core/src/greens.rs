//! Return transforms and Green's function constants at the boundary phase.
//!
//! For a bridge-normalized kernel (`p = q`) the level displacement accrued
//! during one return to phase 0 has transform
//! `F(z) = A(z) - B(z) √C(z) √(1 - z)`, and the Green's function
//! `G₀(ℓ) = [z^ℓ] 1/(1 - F(z))` decays like `C₊ ℓ^{-3/2}` when `κ > 0` and
//! like `C₀ ℓ^{-1/2}` when `κ = 0`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{FreeKernel, TwistedConstants, BRIDGE_TOL};
use crate::num::{gcd, powf, sqrt, PI};

/// Within this distance of `z = 1`, `C(z)` is replaced by its limit.
pub const C_LIMIT_RADIUS: f64 = 1e-6;

/// Horizontal drift `P'(1) + Q'(1) + S'(1)` above the boundary.
pub fn d_plus(i: &FreeKernel) -> f64 {
    i.up.derivative_real(1.0) + i.down.derivative_real(1.0) + i.stay.derivative_real(1.0)
}

/// The functions `F, A, B, C, D` of a bridge-normalized kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenBundle {
    kernel: FreeKernel,
    p: f64,
    q: f64,
    s: f64,
    d_plus: f64,
    /// Radius of convergence of `E[u^τ]`, `1/(s + 2√(pq))`.
    pub radius: f64,
}

struct Values {
    p: Complex64,
    q: Complex64,
    s: Complex64,
    p0: Complex64,
    s0: Complex64,
}

impl GreenBundle {
    fn values(&self, z: Complex64) -> Result<Values> {
        let k = &self.kernel;
        Ok(Values {
            p: k.up.eval(z)?,
            q: k.down.eval(z)?,
            s: k.stay.eval(z)?,
            p0: k.up0.eval(z)?,
            s0: k.stay0.eval(z)?,
        })
    }

    pub fn d_plus(&self) -> f64 {
        self.d_plus
    }

    /// `B(z) = ((1 - S)/(1 - s)) ((p + q)/P) P₀/2`.
    pub fn b_at(&self, z: Complex64) -> Result<Complex64> {
        let v = self.values(z)?;
        Ok((1.0 - v.s) / (1.0 - self.s) * (self.p + self.q) / v.p * v.p0 * 0.5)
    }

    /// `A(z) = S₀ + B`.
    pub fn a_at(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.kernel.stay0.eval(z)? + self.b_at(z)?)
    }

    /// `C(z) = (1 - 4 PQ/(p+q)² ((1-s)/(1-S))²) / (1 - z)`, continued by
    /// `2d₊/(1-s)` at `z = 1`.
    pub fn c_at(&self, z: Complex64) -> Result<Complex64> {
        let w = Complex64::new(1.0, 0.0) - z;
        if w.norm() < C_LIMIT_RADIUS {
            return Ok(Complex64::new(self.c_limit(), 0.0));
        }
        let v = self.values(z)?;
        let pq = self.p + self.q;
        let ratio = (1.0 - self.s) / (1.0 - v.s);
        Ok((1.0 - 4.0 * v.p * v.q / (pq * pq) * ratio * ratio) / w)
    }

    /// `C(1) = 2d₊/(1 - s)`.
    pub fn c_limit(&self) -> f64 {
        2.0 * self.d_plus / (1.0 - self.s)
    }

    /// `D(z) = P(1-S₀)² - ((1-S)/(1-s))(p+q) P₀ (1-S₀) + P₀² Q`.
    pub fn d_at(&self, z: Complex64) -> Result<Complex64> {
        let v = self.values(z)?;
        let one = Complex64::new(1.0, 0.0);
        let m = one - v.s0;
        Ok(
            v.p * m * m - (one - v.s) / (1.0 - self.s) * (self.p + self.q) * v.p0 * m
                + v.p0 * v.p0 * v.q,
        )
    }

    /// `F(z) = A(z) - B(z) √C(z) √(1 - z)`, principal branches.
    pub fn f_at(&self, z: Complex64) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        Ok(self.a_at(z)? - self.b_at(z)? * self.c_at(z)?.sqrt() * (one - z).sqrt())
    }
}

/// Builds the return transform of `I`.
pub fn return_transform(i: &FreeKernel) -> Result<GreenBundle> {
    let c = i.constants();
    if (c.p - c.q).abs() > BRIDGE_TOL {
        return Err(Error::NotBridgeNormalized { p: c.p, q: c.q });
    }
    let dp = d_plus(i);
    if !(dp > 0.0) {
        return Err(Error::Hypothesis(alloc::format!(
            "horizontal drift d+ = {dp} must be positive"
        )));
    }
    Ok(GreenBundle {
        kernel: i.clone(),
        p: c.p,
        q: c.q,
        s: c.s,
        d_plus: dp,
        radius: 1.0 / (c.s + 2.0 * sqrt(c.p * c.q)),
    })
}

/// `E_{(0,y)}[z^{V}]` where `V` is the level displacement until the phase
/// first hits 0; `y = 0` gives `F(z)`.
///
/// The base `E_{(0,1)}[z^V]` is the smaller root of `P g² - (1-S) g + Q = 0`.
pub fn excursion_transform(i: &FreeKernel, y: u32, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::OutsideRegion("z must be positive"));
    }
    let (p, q, s) = (i.up.eval_real(z), i.down.eval_real(z), i.stay.eval_real(z));
    let b = 1.0 - s;
    if !(b > 0.0) {
        return Err(Error::OutsideRegion("S(z) < 1"));
    }
    let disc = b * b - 4.0 * p * q;
    if disc < 0.0 {
        return Err(Error::OutsideRegion("(1 - S(z))^2 >= 4 P(z) Q(z)"));
    }
    let base = 2.0 * q / (b + sqrt(disc));
    if y == 0 {
        Ok(i.stay0.eval_real(z) + i.up0.eval_real(z) * base)
    } else {
        Ok(powf(base, y as f64))
    }
}

/// `c_n = binomial(2n, n)/(n + 1)` in floating point.
pub fn catalan(n: u32) -> f64 {
    let mut c = 1.0;
    for m in 0..n {
        c *= 2.0 * (2.0 * m as f64 + 1.0) / (m as f64 + 2.0);
    }
    c
}

/// Law of the number of up-steps `U` during one return to phase 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionLaw {
    pub return_mass: f64,
    /// `f[n] = P(U = n, return)`; `f[0] = s₀`.
    pub up_count_masses: Vec<f64>,
}

impl ExcursionLaw {
    /// `f_n = c_{n-1} p₀ (p/(p+q))^{n-1} (q/(p+q))^n` for `1 ≤ n ≤ nmax`.
    pub fn new(tc: &TwistedConstants, nmax: usize) -> Self {
        let a = tc.p / (tc.p + tc.q);
        let b = tc.q / (tc.p + tc.q);
        let mut f = Vec::with_capacity(nmax + 1);
        f.push(tc.s0);
        let mut t = tc.p0 * b;
        for n in 1..=nmax {
            f.push(t);
            // c_n / c_{n-1} = 2(2n - 1)/(n + 1)
            t *= 2.0 * (2.0 * n as f64 - 1.0) / (n as f64 + 1.0) * a * b;
        }
        Self {
            return_mass: 1.0 - tc.kappa,
            up_count_masses: f,
        }
    }

    pub fn catalan(&self, n: u32) -> f64 {
        catalan(n)
    }

    pub fn partial_mass(&self) -> f64 {
        self.up_count_masses.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantKind {
    Cplus,
    Czero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstants {
    pub kind: ConstantKind,
    pub value: f64,
    pub d_plus: f64,
    /// `√((1-s)/(2π d₊))`, the null-recurrent constant without the `1/p₀`
    /// factor. Reported for comparison only.
    pub printed_c0: Option<f64>,
    /// `(1-s)/(p₀ √(2 d₊))`, an alternative normalization of the same limit.
    pub intermediate_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Aperiodicity {
    pub pass: bool,
    pub r_ud: u64,
    pub r_s: u64,
    pub f_period_ok: bool,
}

/// Lattice conditions for the local limit behind the tail constants.
pub fn aperiodicity_check(i: &FreeKernel) -> Aperiodicity {
    let r_ud = i.up.mul(&i.down).period();
    let s = i.stay.mass();
    let r_s = if s > 0.0 { i.stay.period() } else { 0 };
    let pass = if s > 0.0 {
        gcd(r_ud, r_s) == 1
    } else {
        r_ud <= 1
    };
    let f_period = [
        i.stay0.period(),
        i.stay.period(),
        i.up0.mul(&i.down).period(),
        r_ud,
    ]
    .into_iter()
    .fold(0, gcd);
    Aperiodicity {
        pass,
        r_ud,
        r_s,
        f_period_ok: f_period == 1,
    }
}

/// `C₊ = (p₀/κ²) √(d₊/(2π(1-s)))` or `C₀ = (1/p₀) √((1-s)/(2π d₊))`.
pub fn tail_constants(i: &FreeKernel, tc: &TwistedConstants) -> Result<TailConstants> {
    if (tc.p - tc.q).abs() > BRIDGE_TOL {
        return Err(Error::NotBridgeNormalized { p: tc.p, q: tc.q });
    }
    let dp = d_plus(i);
    if !(dp > 0.0) {
        return Err(Error::Hypothesis(alloc::format!(
            "horizontal drift d+ = {dp} must be positive"
        )));
    }
    let ap = aperiodicity_check(i);
    if !ap.pass {
        return Err(Error::Hypothesis(alloc::format!(
            "periods of PQ ({}) and S ({}) are not coprime",
            ap.r_ud,
            ap.r_s
        )));
    }
    let (s, p0, kappa) = (tc.s, tc.p0, tc.kappa);
    if kappa > 0.0 {
        Ok(TailConstants {
            kind: ConstantKind::Cplus,
            value: p0 / (kappa * kappa) * sqrt(dp / (2.0 * PI * (1.0 - s))),
            d_plus: dp,
            printed_c0: None,
            intermediate_c: None,
        })
    } else {
        let printed = sqrt((1.0 - s) / (2.0 * PI * dp));
        Ok(TailConstants {
            kind: ConstantKind::Czero,
            value: printed / p0,
            d_plus: dp,
            printed_c0: Some(printed),
            intermediate_c: Some((1.0 - s) / (p0 * sqrt(2.0 * dp))),
        })
    }
}

/// `C₊ ℓ^{-3/2}` or `C₀ ℓ^{-1/2}`.
pub fn asymptotic_greens(constants: &TailConstants, level: u64) -> f64 {
    let l = level as f64;
    match constants.kind {
        ConstantKind::Cplus => constants.value * powf(l, -1.5),
        ConstantKind::Czero => constants.value * powf(l, -0.5),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::LaurentPoly;
    use crate::models::{bathroom_kernel, BathroomSpec};
    use crate::num::exp;
    use crate::spectral::{first_return_masses, solve_bridge_point};
    use proptest::prelude::*;

    fn lp(t: &[(i32, f64)]) -> LaurentPoly {
        LaurentPoly::new(t.iter().copied()).unwrap()
    }

    fn synthetic(p0: f64) -> FreeKernel {
        FreeKernel::new(
            lp(&[(0, 0.25)]),
            lp(&[(0, 0.25)]),
            lp(&[(1, 0.5)]),
            lp(&[(0, p0)]),
            lp(&[(1, 0.5)]),
            0.5 - p0,
        )
        .unwrap()
    }

    fn bathroom_twist() -> (FreeKernel, TwistedConstants, f64, f64) {
        let k = bathroom_kernel(&BathroomSpec {
            nu: 0.2,
            alpha: 0.5,
            beta: 0.3,
        })
        .unwrap()
        .kernel;
        let tp = solve_bridge_point(&k).unwrap();
        let (i, tc) = k.twist(tp.theta1, tp.theta2).unwrap();
        (i, tc, tp.theta1, tp.theta2)
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn d_plus_examples() {
        let (i, _, t1, t2) = bathroom_twist();
        assert!((d_plus(&i) - (0.2 * exp(t1 + t2) - 0.5 * exp(-t1))).abs() < 1e-12);
        assert_eq!(d_plus(&synthetic(0.25)), 0.5);
        let sym = FreeKernel::new(
            lp(&[(0, 0.25)]),
            lp(&[(0, 0.25)]),
            lp(&[(-1, 0.25), (1, 0.25)]),
            lp(&[(0, 0.5)]),
            lp(&[(0, 0.5)]),
            0.0,
        )
        .unwrap();
        assert_eq!(d_plus(&sym), 0.0);
        assert!(return_transform(&sym).is_err());
    }

    #[test]
    fn return_transform_examples() {
        let g = return_transform(&synthetic(0.25)).unwrap();
        assert!((g.f_at(re(1.0)).unwrap().re - 0.75).abs() < 1e-12);
        assert!((g.c_at(re(1.0)).unwrap().re - 2.0).abs() < 1e-10);
        let g0 = return_transform(&synthetic(0.5)).unwrap();
        assert!((g0.f_at(re(1.0)).unwrap().re - 1.0).abs() < 1e-12);

        let (i, tc, _, _) = bathroom_twist();
        let g = return_transform(&i).unwrap();
        assert!((g.f_at(re(1.0)).unwrap().re - (1.0 - tc.kappa)).abs() < 1e-12);
        assert!((g.radius - 1.0).abs() < 1e-10);

        let skew = FreeKernel::new(
            lp(&[(0, 0.3)]),
            lp(&[(0, 0.2)]),
            lp(&[(1, 0.5)]),
            lp(&[(0, 0.3)]),
            lp(&[(1, 0.5)]),
            0.2,
        )
        .unwrap();
        assert!(matches!(
            return_transform(&skew),
            Err(Error::NotBridgeNormalized { .. })
        ));
    }

    #[test]
    fn c_limit_matches_nearby_value() {
        for i in [synthetic(0.25), bathroom_twist().0] {
            let g = return_transform(&i).unwrap();
            let near = g.c_at(re(1.0 - 1e-6)).unwrap().re;
            assert!(
                (near / g.c_limit() - 1.0).abs() < 1e-4,
                "{near} {}",
                g.c_limit()
            );
        }
    }

    #[test]
    fn d_identities() {
        let (i, tc, _, _) = bathroom_twist();
        let g = return_transform(&i).unwrap();
        assert!((g.d_at(re(1.0)).unwrap().re - tc.u * tc.kappa * tc.kappa).abs() < 1e-10);

        let g0 = return_transform(&synthetic(0.5)).unwrap();
        let h = 1e-6;
        let dd = (g0.d_at(re(1.0 + h)).unwrap().re - g0.d_at(re(1.0 - h)).unwrap().re) / (2.0 * h);
        let expected = 0.5 * 0.5 * g0.d_plus();
        assert!((dd / expected - 1.0).abs() < 1e-6, "{dd} {expected}");
    }

    #[test]
    fn f_matches_excursion_form_and_first_return_series() {
        let (i, _, _, _) = bathroom_twist();
        let g = return_transform(&i).unwrap();
        // deterministic pseudo-random points inside the convergence region
        let mut x = 0.377_f64;
        for _ in 0..20 {
            x = (x * 7.31 + 0.113).fract();
            let z = 0.6 + 0.35 * x;
            let f13 = g.f_at(re(z)).unwrap();
            let f15 = excursion_transform(&i, 0, z).unwrap();
            assert!(f13.im.abs() < 1e-14);
            assert!((f13.re - f15).abs() < 1e-10, "z = {z}: {} vs {f15}", f13.re);

            // weighted first-return recursion: transforms evaluated at z act as weights
            let w = TwistedConstants {
                p: i.up.eval_real(z),
                q: i.down.eval_real(z),
                s: i.stay.eval_real(z),
                p0: i.up0.eval_real(z),
                s0: i.stay0.eval_real(z),
                u: 0.0,
                kappa: 0.0,
                f: 1.0,
            };
            let series: f64 = first_return_masses(&w, 4000).iter().sum();
            assert!((series - f15).abs() < 1e-10, "z = {z}: {series} vs {f15}");
        }
    }

    #[test]
    fn excursion_transform_examples() {
        let i = synthetic(0.5);
        assert!((excursion_transform(&i, 1, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let z = 0.8;
        let one = excursion_transform(&i, 1, z).unwrap();
        assert!((excursion_transform(&i, 2, z).unwrap() - one * one).abs() < 1e-15);
        let g = return_transform(&i).unwrap();
        assert!((excursion_transform(&i, 0, z).unwrap() - g.f_at(re(z)).unwrap().re).abs() < 1e-12);
        assert!(excursion_transform(&i, 1, 1.5).is_err());
        assert!(excursion_transform(&i, 1, -1.0).is_err());
    }

    #[test]
    fn catalan_numbers() {
        let binom = |n: u64, k: u64| -> u128 {
            let mut r: u128 = 1;
            for j in 0..k {
                r = r * (n - j) as u128 / (j + 1) as u128;
            }
            r
        };
        for n in 0..=30u32 {
            let exact = binom(2 * n as u64, n as u64) / (n as u128 + 1);
            assert_eq!(catalan(n).round() as u128, exact, "n = {n}");
        }
        assert_eq!(catalan(3), 5.0);
    }

    #[test]
    fn excursion_law_mass() {
        // p < q: geometric convergence of the up-count series
        let tc = TwistedConstants {
            p: 0.3,
            q: 0.5,
            s: 0.2,
            p0: 0.3,
            s0: 0.5,
            u: 0.3,
            kappa: 0.2,
            f: 1.0,
        };
        let law = ExcursionLaw::new(&tc, 10_000);
        assert!((law.partial_mass() - law.return_mass).abs() < 1e-10);

        // p = q: the tail decays like n^{-1/2}; check the missing mass against
        // c_m 4^{-m} <= 1/(√π m^{3/2})
        let tc = TwistedConstants {
            p: 0.25,
            q: 0.25,
            s: 0.5,
            p0: 0.25,
            s0: 0.5,
            u: 0.25,
            kappa: 0.25,
            f: 1.0,
        };
        let n = 10_000;
        let law = ExcursionLaw::new(&tc, n);
        let missing = law.return_mass - law.partial_mass();
        let nf = n as f64;
        let bound = tc.p0 / 2.0 / sqrt(PI) * (powf(nf, -1.5) + 2.0 / sqrt(nf));
        assert!(missing > 0.0 && missing <= bound, "{missing} {bound}");
        assert!(missing >= 0.5 * bound);
        assert!((law.up_count_masses[4] - catalan(3) * 0.25 * 0.5f64.powi(7)).abs() < 1e-16);
    }

    #[test]
    fn tail_constant_examples() {
        let i = synthetic(0.25);
        let tc = i.constants();
        let c = tail_constants(&i, &tc).unwrap();
        assert_eq!(c.kind, ConstantKind::Cplus);
        assert!((c.value - 4.0 / sqrt(2.0 * PI)).abs() < 1e-12);
        assert!((c.value - 1.59577).abs() < 1e-5);
        assert!((asymptotic_greens(&c, 400) - 1.9947e-4).abs() < 1e-8);
        let r = asymptotic_greens(&c, 800) / asymptotic_greens(&c, 400);
        assert!((r - 0.353_553).abs() < 1e-6);

        let i0 = synthetic(0.5);
        let c0 = tail_constants(&i0, &i0.constants()).unwrap();
        assert_eq!(c0.kind, ConstantKind::Czero);
        assert!((c0.value - 0.797_885).abs() < 1e-6);
        assert!((c0.printed_c0.unwrap() - 0.398_942).abs() < 1e-6);
        let r = asymptotic_greens(&c0, 800) / asymptotic_greens(&c0, 400);
        assert!((r - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);

        // s = 0 and p0 = 1: the two forms coincide
        let k = FreeKernel::new(
            lp(&[(1, 0.5)]),
            lp(&[(0, 0.5)]),
            LaurentPoly::zero(),
            lp(&[(1, 1.0)]),
            LaurentPoly::zero(),
            0.0,
        )
        .unwrap();
        let c = tail_constants(&k, &k.constants()).unwrap();
        assert!((c.value - c.printed_c0.unwrap()).abs() < 1e-15);
        assert!((c.value - sqrt(1.0 / (2.0 * PI * 0.5))).abs() < 1e-15);
    }

    #[test]
    fn aperiodicity_examples() {
        let (i, _, _, _) = bathroom_twist();
        let a = aperiodicity_check(&i);
        assert!(a.pass && a.f_period_ok);
        assert_eq!((a.r_ud, a.r_s), (1, 1));

        let k = FreeKernel::new(
            lp(&[(1, 0.3)]),
            lp(&[(1, 0.3)]),
            lp(&[(-2, 0.4)]),
            lp(&[(1, 0.3)]),
            lp(&[(-2, 0.7)]),
            0.0,
        )
        .unwrap();
        let a = aperiodicity_check(&k);
        assert_eq!((a.r_ud, a.r_s, a.pass), (2, 2, false));
        assert!(tail_constants(&k, &k.constants()).is_err());

        let a = aperiodicity_check(&synthetic(0.25));
        assert_eq!((a.r_ud, a.r_s, a.pass), (0, 1, true));
    }

    proptest! {
        #[test]
        fn f_at_one_is_return_mass(p in 0.05f64..0.45, p0 in 0.05f64..1.0, kf in 0.0f64..1.0, m in 0.05f64..1.0) {
            let s = 1.0 - 2.0 * p;
            let kappa = (1.0 - p0) * kf;
            let s0 = 1.0 - p0 - kappa;
            let i = FreeKernel::new(
                lp(&[(0, p * (1.0 - m)), (1, p * m)]),
                lp(&[(0, p)]),
                lp(&[(1, s)]),
                lp(&[(0, p0)]),
                lp(&[(-1, s0)]),
                kappa,
            ).unwrap();
            let g = return_transform(&i).unwrap();
            prop_assert!((g.f_at(re(1.0)).unwrap().re - (1.0 - kappa)).abs() < 1e-12);
            prop_assert!((g.c_at(re(1.0)).unwrap().re - 2.0 * d_plus(&i) / (1.0 - s)).abs() < 1e-10);
            prop_assert!((g.d_at(re(1.0)).unwrap().re - p * kappa * kappa).abs() < 1e-10);
        }
    }
}
