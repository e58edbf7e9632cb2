//! Finite-support Laurent polynomials with nonnegative weights.
//!
//! A [`LaurentPoly`] `h` stands for the transform `H(z) = Σ_x h(x) z^x` of a
//! sub-probability density on the integers. All displacement transforms of a
//! kernel (up, down, stay; boundary up, boundary stay) are carried this way.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::{gcd, powi};

/// Weights below this are dropped at construction.
pub const DROP_THRESHOLD: f64 = 1e-15;

/// Mass and first moment of a transform: `H(1)` and `H'(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub mean: f64,
}

#[derive(Clone, PartialEq, Default)]
pub struct LaurentPoly {
    // sorted by exponent, exponents unique, weights >= DROP_THRESHOLD
    terms: Vec<(i32, f64)>,
}

impl LaurentPoly {
    /// Builds a transform from `(exponent, weight)` pairs. Repeated exponents
    /// are summed.
    pub fn new<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, f64)>,
    {
        let mut raw: Vec<(i32, f64)> = terms.into_iter().collect();
        for &(exponent, weight) in &raw {
            if !weight.is_finite() {
                return Err(Error::NonFiniteWeight { exponent });
            }
            if weight < 0.0 {
                return Err(Error::NegativeWeight { exponent, weight });
            }
        }
        raw.sort_by_key(|t| t.0);
        let mut terms: Vec<(i32, f64)> = Vec::with_capacity(raw.len());
        for (x, w) in raw {
            match terms.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => terms.push((x, w)),
            }
        }
        terms.retain(|t| t.1 >= DROP_THRESHOLD);
        Ok(Self { terms })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `weight · z^exponent`.
    pub fn monomial(exponent: i32, weight: f64) -> Result<Self> {
        Self::new([(exponent, weight)])
    }

    // Internal constructor for results of operations that preserve
    // nonnegativity and ordering.
    fn from_sorted(mut terms: Vec<(i32, f64)>) -> Self {
        terms.retain(|t| t.1 >= DROP_THRESHOLD);
        Self { terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(i32, f64)] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.terms.iter().copied()
    }

    /// Weight at `exponent`, zero when absent.
    pub fn coeff(&self, exponent: i32) -> f64 {
        self.terms
            .binary_search_by_key(&exponent, |t| t.0)
            .map(|i| self.terms[i].1)
            .unwrap_or(0.0)
    }

    pub fn min_exponent(&self) -> Option<i32> {
        self.terms.first().map(|t| t.0)
    }

    pub fn max_exponent(&self) -> Option<i32> {
        self.terms.last().map(|t| t.0)
    }

    /// `H(z)` at a nonzero complex point.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.norm_sqr() == 0.0 {
            return Err(Error::ZeroArgument);
        }
        Ok(self
            .terms
            .iter()
            .map(|&(x, w)| z.powi(x) * w)
            .fold(Complex64::new(0.0, 0.0), |acc, t| acc + t))
    }

    /// `H(x)` on the positive real axis.
    pub fn eval_real(&self, x: f64) -> f64 {
        debug_assert!(x != 0.0);
        self.terms.iter().map(|&(k, w)| w * powi(x, k)).sum()
    }

    /// `H'(x)` on the positive real axis.
    pub fn derivative_real(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k, w)| w * k as f64 * powi(x, k - 1))
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum()
    }

    pub fn moments(&self) -> Moments {
        let (mass, mean) = self
            .terms
            .iter()
            .fold((0.0, 0.0), |(m, d), &(x, w)| (m + w, d + x as f64 * w));
        Moments { mass, mean }
    }

    /// gcd of the nonzero support exponents. Zero when the support is empty
    /// or `{0}`.
    pub fn period(&self) -> u64 {
        self.terms
            .iter()
            .filter(|t| t.0 != 0)
            .fold(0, |g, t| gcd(g, t.0.unsigned_abs() as u64))
    }

    /// The transform of `z ↦ H(c z)`: weight `h(x)` becomes `h(x) c^x`.
    pub fn scale_argument(&self, c: f64) -> Self {
        assert!(c > 0.0, "scale_argument needs c > 0");
        Self::from_sorted(
            self.terms
                .iter()
                .map(|&(x, w)| (x, w * powi(c, x)))
                .collect(),
        )
    }

    /// Multiplies every weight by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor >= 0.0 && factor.is_finite());
        Self::from_sorted(self.terms.iter().map(|&(x, w)| (x, w * factor)).collect())
    }

    /// Rescaled to unit mass. The zero transform stays zero.
    pub fn normalized(&self) -> Self {
        let m = self.mass();
        if m > 0.0 {
            self.scaled(1.0 / m)
        } else {
            Self::zero()
        }
    }

    /// Product of transforms (convolution of densities).
    pub fn mul(&self, other: &Self) -> Self {
        let mut out: Vec<(i32, f64)> = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(a, wa) in &self.terms {
            for &(b, wb) in &other.terms {
                out.push((a + b, wa * wb));
            }
        }
        // all weights are nonnegative, so `new` cannot fail
        Self::new(out).expect("product of nonnegative transforms")
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.terms.iter().map(|t| (t.0, t.1)))
            .finish()
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(x, w)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match x {
                0 => write!(f, "{w}")?,
                1 => write!(f, "{w}·z")?,
                _ => write!(f, "{w}·z^{x}")?,
            }
        }
        Ok(())
    }
}
