//! Truncated univariate Taylor arithmetic.
//!
//! A [`Jet`] of order `k` stores `f(x0), f'(x0), f''(x0)/2!, …, f^{(k)}(x0)/k!`.
//! All operations are exact up to the truncation order, so the `k`-th
//! derivative of a composite expression is `k! · coeff(k)` to rounding.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The independent variable expanded around `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least one coefficient");
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Normalised Taylor coefficient `f^{(k)}(x0) / k!`.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeff(k) * fact
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn exp(&self) -> Self {
        // h = exp(f): h' = f' h  ⇒  k h_k = Σ_{j=1}^{k} j f_j h_{k-j}
        let n = self.coeffs.len();
        let mut h = vec![0.0; n];
        h[0] = self.coeffs[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.coeffs[j] * h[k - j]).sum();
            h[k] = s / k as f64;
        }
        Self { coeffs: h }
    }

    pub fn recip(&self) -> Self {
        // h f = 1  ⇒  h_k = -(Σ_{j=1}^{k} f_j h_{k-j}) / f_0
        let n = self.coeffs.len();
        let f0 = self.coeffs[0];
        assert!(f0 != 0.0, "reciprocal of a jet with zero value");
        let mut h = vec![0.0; n];
        h[0] = 1.0 / f0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.coeffs[j] * h[k - j]).sum();
            h[k] = -s / f0;
        }
        Self { coeffs: h }
    }

    pub fn powi(&self, p: u32) -> Self {
        let mut out = Self::constant(1.0, self.order());
        for _ in 0..p {
            out = &out * self;
        }
        out
    }

    fn zip(&self, rhs: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "jet order mismatch");
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "jet order mismatch");
        let n = self.coeffs.len();
        let coeffs = (0..n)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * rhs.coeffs[k - j]).sum())
            .collect();
        Jet { coeffs }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}
