//! Threshold detectors preceded by loss.
//!
//! A detector with threshold `θ` and efficiency `η` stays silent ("no click",
//! or "not seen" for the eye) when fewer than `θ` photons survive a binomial
//! loss of transmission `η`. Its POVM is diagonal in the Fock basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{binomial_weight, displacement_columns, displacement_matrix_unchecked, FockOperator, DEFAULT_TAIL_TOLERANCE};
use crate::C64;

/// Threshold (photons) and efficiency of a threshold detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    theta: u32,
    eta: f64,
}

impl DetectorSpec {
    pub fn new(theta: u32, eta: f64) -> Result<Self> {
        if theta == 0 {
            return Err(Error::param("detector threshold must be >= 1"));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::param(format!("detector efficiency {eta} outside (0, 1]")));
        }
        Ok(Self { theta, eta })
    }

    /// Eye model: threshold 7 photons behind 8% transmission.
    pub fn eye() -> Self {
        Self { theta: 7, eta: 0.08 }
    }

    /// Non-photon-number-resolving single-photon detector.
    pub fn single_photon(eta: f64) -> Result<Self> {
        Self::new(1, eta)
    }

    /// Same threshold at unit efficiency (loss moved onto the state).
    pub fn lossless(&self) -> Self {
        Self { theta: self.theta, eta: 1.0 }
    }

    pub fn theta(&self) -> u32 {
        self.theta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Probability that `n` incident photons produce no click:
/// `Σ_{m<θ} C(n,m) η^m (1-η)^{n-m}`.
pub fn no_click_prob_fock(det: &DetectorSpec, n: usize) -> f64 {
    let theta = det.theta as usize;
    if n < theta {
        return 1.0;
    }
    (0..theta).map(|m| binomial_weight(n, m, det.eta)).sum::<f64>().min(1.0)
}

/// Same quantity from the derivative representation
/// `η^θ/(θ-1)! · d^{θ-1}/dx^{θ-1} [x^n / (1-x)]` at `x = 1-η`,
/// with `x^n` differentiated as an exact polynomial and the Leibniz rule.
pub fn no_click_prob_fock_derivative_form(det: &DetectorSpec, n: usize) -> f64 {
    let eta = det.eta;
    let x = 1.0 - eta;
    let r = det.theta as usize - 1;

    let mut poly = vec![0.0; n + 1];
    poly[n] = 1.0;
    let horner = |p: &[f64]| p.iter().rev().fold(0.0, |acc, c| acc * x + c);

    let fact = |k: usize| (1..=k).fold(1.0, |a, i| a * i as f64);
    let mut sum = 0.0;
    let mut binom = 1.0; // C(r, j)
    for j in 0..=r {
        if j > 0 {
            // differentiate the polynomial once more
            poly = poly.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
            binom = binom * (r - j + 1) as f64 / j as f64;
        }
        if poly.is_empty() {
            break;
        }
        let s = r - j;
        // d^s/dx^s (1-x)^{-1} = s! / (1-x)^{s+1}
        sum += binom * horner(&poly) * fact(s) / eta.powi(s as i32 + 1);
    }
    eta.powi(det.theta as i32) / fact(r) * sum
}

pub fn no_click_probs(det: &DetectorSpec, dim: usize) -> Vec<f64> {
    (0..dim).map(|n| no_click_prob_fock(det, n)).collect()
}

/// "No click" POVM element `P_ns`.
pub fn povm_ns_operator(det: &DetectorSpec, dim: usize) -> FockOperator {
    FockOperator::from_diagonal(&no_click_probs(det, dim))
}

/// "Click" POVM element `P_s = 1 - P_ns`.
pub fn povm_s_operator(det: &DetectorSpec, dim: usize) -> FockOperator {
    let p: Vec<f64> = no_click_probs(det, dim).into_iter().map(|q| 1.0 - q).collect();
    FockOperator::from_diagonal(&p)
}

const INCOMPLETE_GAMMA_SWITCH: f64 = 30.0;

/// Probability that a coherent pulse with mean photon number `nbar` is seen
/// (clicks), i.e. the upper Poisson tail at `θ` with mean `η n̄`.
pub fn seen_prob_coherent(det: &DetectorSpec, nbar: f64) -> Result<f64> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::param(format!("nbar = {nbar} must be >= 0")));
    }
    let mu = det.eta * nbar;
    if mu == 0.0 {
        return Ok(0.0);
    }
    let theta = det.theta as f64;
    if mu > INCOMPLETE_GAMMA_SWITCH {
        return Ok(statrs::function::gamma::gamma_lr(theta, mu));
    }
    let mut term = (-mu).exp();
    let mut cdf = term;
    for k in 1..det.theta {
        term *= mu / k as f64;
        cdf += term;
    }
    Ok((1.0 - cdf).clamp(0.0, 1.0))
}

/// First `ncols` columns of `D(α)` on `dim` levels, each verified against
/// the tail tolerance.
pub(crate) fn checked_columns(alpha: C64, dim: usize, ncols: usize) -> Result<DMatrix<C64>> {
    if dim == 0 {
        return Err(Error::Dimension("displacement needs dim >= 1".into()));
    }
    let d = displacement_columns(alpha, dim, ncols);
    let worst = d.column_iter().map(|c| 1.0 - c.norm_squared()).fold(0.0, f64::max);
    if worst > DEFAULT_TAIL_TOLERANCE {
        return Err(Error::Truncation {
            what: format!("D({alpha}) columns 0..{ncols}"),
            deficit: worst,
            tolerance: DEFAULT_TAIL_TOLERANCE,
            dim,
        });
    }
    Ok(d)
}

/// `P(+1 | β, |n⟩) = Σ_m P_ns(m) |⟨m|D(β)|n⟩|²`.
pub fn displaced_no_click_prob(det: &DetectorSpec, beta: C64, n: usize, dim: usize) -> Result<f64> {
    if n >= dim {
        return Err(Error::Dimension(format!("|{n}⟩ does not fit in dim {dim}")));
    }
    let d = checked_columns(beta, dim, n + 1)?;
    let p = no_click_probs(det, dim);
    Ok((0..dim).map(|m| p[m] * d[(m, n)].norm_sqr()).sum())
}

/// `P(+1 | β, |n⟩)` for `n = 0..count`, without truncation checks; the caller
/// picks `dim` comfortably above `count + |β|²`.
pub fn displaced_no_click_probs(det: &DetectorSpec, beta: C64, dim: usize, count: usize) -> Vec<f64> {
    let d = displacement_columns(beta, dim, count);
    let p = no_click_probs(det, dim);
    (0..d.ncols())
        .map(|n| (0..dim).map(|m| p[m] * d[(m, n)].norm_sqr()).sum())
        .collect()
}

/// `D(α)† P_ns D(α)`: the displaced "no click" element.
pub fn displaced_povm_ns(det: &DetectorSpec, alpha: C64, dim: usize) -> FockOperator {
    let d = displacement_matrix_unchecked(alpha, dim);
    let p = no_click_probs(det, dim);
    let weighted = DMatrix::from_fn(dim, dim, |m, n| d.get(m, n) * p[m]);
    let entries = d.entries().adjoint() * weighted;
    FockOperator::new(entries, false).expect("square by construction")
}

/// Qubit-restricted observable `M = c₀·1 + v·σ` on `span{|0⟩, |1⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub v: [f64; 3],
    pub offset: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn transverse(&self) -> f64 {
        self.v[0].hypot(self.v[1])
    }
}

/// Restricts `D(α)† (2 P_ns − 1) D(α)` to the vacuum/single-photon qubit.
pub fn bloch_vector(det: &DetectorSpec, alpha: C64, dim: usize) -> Result<BlochVector> {
    if dim < 2 {
        return Err(Error::Dimension("Bloch restriction needs dim >= 2".into()));
    }
    let d = checked_columns(alpha, dim, 2)?;
    let p = no_click_probs(det, dim);
    let elem = |a: usize, b: usize| -> C64 {
        (0..dim)
            .map(|m| d[(m, a)].conj() * d[(m, b)] * (2.0 * p[m] - 1.0))
            .sum()
    };
    let (m00, m11, m01) = (elem(0, 0).re, elem(1, 1).re, elem(0, 1));
    // σ_x has ⟨0|σ_x|1⟩ = 1, σ_y has ⟨0|σ_y|1⟩ = -i
    Ok(BlochVector {
        v: [m01.re, -m01.im, 0.5 * (m00 - m11)],
        offset: 0.5 * (m00 + m11),
    })
}
