//! Heralded down-conversion source, the two-mode state it produces behind a
//! beamsplitter, and the closed-form expected witness value.
//!
//! One arm of a two-mode squeezed vacuum (`T_g = tanh g`) is heralded by a
//! threshold-1 detector whose per-photon miss probability is `R_h²`,
//! `R_h = 1 − η_h`. The heralded arm passes a transmission `η_t` and a
//! beamsplitter sending `T` to mode B and `R` (default `1 − T`) to mode A.

use crate::detector::DetectorSpec;
use crate::error::{check_unit_interval, Error, Result};
use crate::fock::{loss_distribution, FockOperator, Mode, NumberBlockState, DEFAULT_TAIL_TOLERANCE};
use crate::jet::Jet;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    pub g: f64,
    pub eta_h: f64,
    pub eta_t: f64,
    /// Beamsplitter transmission into mode B.
    pub t: f64,
    /// Reflection into mode A; `None` means `1 − T`.
    pub r: Option<f64>,
    pub eta_a: f64,
    pub eta_b: f64,
    pub theta_a: u32,
    pub theta_b: u32,
    /// Physical displacement amplitudes (before detector loss).
    pub alpha: C64,
    pub beta: C64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        let eta_a = 0.8;
        let eta_b = 0.08;
        Self {
            g: 0.1,
            eta_h: 1.0,
            eta_t: 0.9,
            t: 0.5,
            r: None,
            eta_a,
            eta_b,
            theta_a: 1,
            theta_b: 7,
            alpha: C64::new(1.0 / eta_a.sqrt(), 0.0),
            beta: C64::new((7.0 / eta_b).sqrt(), 0.0),
        }
    }
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(Error::param(format!("g = {} must be > 0", self.g)));
        }
        check_unit_interval("eta_h", self.eta_h)?;
        check_unit_interval("eta_t", self.eta_t)?;
        check_unit_interval("T", self.t)?;
        check_unit_interval("eta_a", self.eta_a)?;
        check_unit_interval("eta_b", self.eta_b)?;
        if let Some(r) = self.r {
            check_unit_interval("R", r)?;
            if r + self.t > 1.0 + 1e-12 {
                return Err(Error::param(format!("R + T = {} exceeds 1", r + self.t)));
            }
        }
        if self.theta_a == 0 || self.theta_b == 0 {
            return Err(Error::param("thresholds must be >= 1"));
        }
        if !(self.alpha.norm().is_finite() && self.beta.norm().is_finite()) {
            return Err(Error::param("displacement amplitudes must be finite"));
        }
        Ok(())
    }

    pub fn r(&self) -> f64 {
        self.r.unwrap_or(1.0 - self.t)
    }

    pub fn tg(&self) -> f64 {
        self.g.tanh()
    }

    pub fn r_h(&self) -> f64 {
        1.0 - self.eta_h
    }

    pub fn det_a(&self) -> Result<DetectorSpec> {
        DetectorSpec::new(self.theta_a, self.eta_a)
    }

    pub fn det_b(&self) -> Result<DetectorSpec> {
        DetectorSpec::new(self.theta_b, self.eta_b)
    }

    /// Amplitudes seen by unit-efficiency detectors once detector loss is
    /// moved onto the state.
    pub fn effective_amplitudes(&self) -> (C64, C64) {
        (self.alpha * self.eta_a.sqrt(), self.beta * self.eta_b.sqrt())
    }

    /// Sets the physical amplitudes from effective ones.
    pub fn with_effective_amplitudes(mut self, alpha_eff: C64, beta_eff: C64) -> Result<Self> {
        if self.eta_a == 0.0 || self.eta_b == 0.0 {
            return Err(Error::param("effective amplitudes need nonzero detector efficiencies"));
        }
        self.alpha = alpha_eff / self.eta_a.sqrt();
        self.beta = beta_eff / self.eta_b.sqrt();
        Ok(self)
    }

    /// Probability for one source photon to reach the detector of mode A
    /// (and of mode B), including `η_t`, the beamsplitter and detector loss.
    pub fn arm_efficiencies(&self) -> (f64, f64) {
        (self.eta_t * self.r() * self.eta_a, self.eta_t * self.t * self.eta_b)
    }
}

/// Photon-number distribution of the heralded arm on `dim` levels.
pub fn heralded_distribution(g: f64, eta_h: f64, dim: usize) -> Result<Vec<f64>> {
    heralded_distribution_with_tolerance(g, eta_h, dim, DEFAULT_TAIL_TOLERANCE)
}

pub fn heralded_distribution_with_tolerance(g: f64, eta_h: f64, dim: usize, tail_tol: f64) -> Result<Vec<f64>> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::param(format!("g = {g} must be > 0")));
    }
    check_unit_interval("eta_h", eta_h)?;
    if dim < 2 {
        return Err(Error::Dimension("heralded state needs dim >= 2".into()));
    }
    let tg2 = g.tanh().powi(2);
    let rh2 = (1.0 - eta_h).powi(2);
    // p_n = (1 − T²)(1 − R²T²) T^{2(n−1)} Σ_{j<n} R^{2j}, finite for every R_h
    let scale = (1.0 - tg2) * (1.0 - rh2 * tg2);
    let mut p = vec![0.0; dim];
    let (mut tpow, mut geom, mut rpow) = (1.0, 0.0, 1.0);
    for slot in p.iter_mut().skip(1) {
        geom += rpow;
        *slot = scale * tpow * geom;
        tpow *= tg2;
        rpow *= rh2;
    }
    let deficit = 1.0 - p.iter().rev().sum::<f64>();
    if deficit > tail_tol {
        return Err(Error::Truncation {
            what: format!("heralded state g={g}, eta_h={eta_h}"),
            deficit,
            tolerance: tail_tol,
            dim,
        });
    }
    Ok(p)
}

/// Heralded single-mode state; diagonal in the number basis.
pub fn heralded_state(g: f64, eta_h: f64, dim: usize) -> Result<FockOperator> {
    Ok(FockOperator::from_diagonal(&heralded_distribution(g, eta_h, dim)?))
}

/// Where detector inefficiency is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Picture {
    /// Detector loss applied to the state; measure with unit-efficiency
    /// detectors at the effective amplitudes.
    #[default]
    Effective,
    /// Lossy state up to the detectors; measure with the dressed POVMs at
    /// the physical amplitudes.
    Detector,
}

/// Two-mode state in front of the detectors (mode A reflected, mode B
/// transmitted).
pub fn experiment_state(params: &ExperimentParams, dim: usize, picture: Picture) -> Result<NumberBlockState> {
    params.validate()?;
    let probs = heralded_distribution(params.g, params.eta_h, dim)?;
    let (t, r) = (params.t, params.r());
    let through = t + r;
    if through == 0.0 {
        return Ok(NumberBlockState::split_distribution(&loss_distribution(&probs, 0.0)?, 0.0)?);
    }
    let probs = loss_distribution(&probs, (params.eta_t * through).min(1.0))?;
    let state = NumberBlockState::split_distribution(&probs, (t / through).min(1.0))?;
    match picture {
        Picture::Detector => Ok(state),
        Picture::Effective => state.apply_loss(Mode::A, params.eta_a)?.apply_loss(Mode::B, params.eta_b),
    }
}

/// `⟨σ_α ⊗ σ_β⟩` (phase averaged) on a thermal state of mean `nbar`
/// split at the beamsplitter, with the dressed detectors of `params`.
/// `η_t` is not applied here; `nbar` is the mean photon number entering the
/// beamsplitter. Mode A must carry a threshold-1 detector.
pub fn w_thermal_closed_form(nbar: f64, params: &ExperimentParams) -> Result<f64> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::param(format!("nbar = {nbar} must be >= 0")));
    }
    if params.theta_a != 1 {
        return Err(Error::param("closed form needs a threshold-1 detector on mode A"));
    }
    let (eta_a, eta_b) = (params.eta_a, params.eta_b);
    if eta_b == 0.0 {
        return Err(Error::param("closed form needs eta_b > 0"));
    }
    let (t, r) = (params.t, params.r());
    let order = (params.theta_b - 1) as usize;
    let x = Jet::variable(1.0 - eta_b, order);
    let eb = -&x + 1.0;
    let (a2, b2) = (params.alpha.norm_sqr(), params.beta.norm_sqr());
    let cross = (params.alpha.conj() * params.beta).re;
    let one = Jet::constant(1.0, order);

    // joint term
    let den_ab = (eb.scale(nbar * t) + nbar * eta_a * r + 1.0).recip();
    let mix = &(&eb * &eb).scale(b2 * t) + &eb.scale(2.0 * eta_a * (r * t).sqrt() * cross);
    let mix = mix + a2 * eta_a * eta_a * r;
    let expo = &(&(mix.scale(nbar)) * &den_ab) - &eb.scale(b2);
    let e_ab = &(expo + (-eta_a * a2)).exp() * &den_ab;

    let den_a = eta_a * nbar * r + 1.0;
    let e_a = (-eta_a * a2 / den_a).exp() / den_a;

    let den_b = (eb.scale(nbar * t) + 1.0).recip();
    let e_b = &(&eb.scale(-b2) * &den_b).exp() * &den_b;

    let bracket = &(&e_ab.scale(4.0) - &e_b.scale(2.0)) + (1.0 - 2.0 * e_a);
    let f = &bracket * &(&one - &x).recip();
    Ok(eta_b.powi(params.theta_b as i32) * f.coeff(order))
}

/// Closed-form `⟨W⟩` on the heralded experiment, as a difference of two
/// thermal evaluations.
pub fn expected_w_closed_form(params: &ExperimentParams) -> Result<f64> {
    params.validate()?;
    if params.eta_h == 0.0 {
        return Err(Error::param("closed form needs eta_h > 0"));
    }
    let tg2 = params.tg().powi(2);
    let rh2 = params.r_h().powi(2);
    let prefactor = (1.0 - rh2 * tg2) / (tg2 * (1.0 - rh2));
    let weight = (1.0 - tg2) / (1.0 - rh2 * tg2);
    let n1 = tg2 / (1.0 - tg2);
    let n2 = rh2 * tg2 / (1.0 - rh2 * tg2);
    let w1 = w_thermal_closed_form(params.eta_t * n1, params)?;
    let w2 = w_thermal_closed_form(params.eta_t * n2, params)?;
    Ok(prefactor * (w1 - weight * w2))
}
