//! Calibration amplitudes, photon-number bounds and the separable bound of
//! the witness.
//!
//! All quantities use unit-efficiency detectors: detector loss is absorbed
//! into the measured state and the displacement amplitudes are the effective
//! ones (`β_eff = β √η`).
//!
//! Mode A is read out without displacement by a threshold-1 detector, so its
//! "no click" outcome is the projector on `n_A = 0`. Mode B is displaced by
//! one of three calibration amplitudes:
//!
//! * `β₀`: `P(+1|β₀,|0⟩) = P(+1|β₀,|3⟩)` with `|1⟩` the most likely to stay
//!   silent; bounds `p₀₀` and `p₁₀`.
//! * `β₁`: `P(+1|β₁,|1⟩) = P(+1|β₁,|2⟩)` with `|0⟩` the most likely to stay
//!   silent; bounds `p₀₁` and `p₁₁`.
//! * `β₂`: `P(+1|β₂,|0⟩) = P(+1|β₂,|1⟩)` with `|3⟩` the most likely among
//!   `n ≥ 2`; bounds the multi-photon weight `p_B*` of mode B.
//!
//! Indices are `p_ij` with `i` photons in A and `j` photons in B.

use crate::detector::{displaced_no_click_probs, no_click_prob_fock, DetectorSpec};
use crate::error::{Error, Result};
use crate::fock::NumberBlockState;
use crate::optimize::{brent_root, sign_change_brackets};
use crate::witness::{witness_expectation, WitnessElements, WitnessMatrix};
use crate::C64;

/// Smallest admissible magnitude of a bound denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    /// Truncation used to evaluate displaced-Fock probabilities.
    pub dim: usize,
    /// Side conditions are verified for photon numbers up to this value.
    pub n_check: usize,
    pub bracket: (f64, f64),
    pub scan_steps: usize,
    pub tolerance: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            n_check: 10,
            bracket: (0.5, 6.0),
            scan_steps: 550,
            tolerance: 1e-10,
        }
    }
}

/// Calibration amplitudes with the displaced-Fock "no click" probabilities
/// `P(+1|β,|n⟩)` at each of them, for `n = 0..=n_check`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    pub det: DetectorSpec,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub probs_beta0: Vec<f64>,
    pub probs_beta1: Vec<f64>,
    pub probs_beta2: Vec<f64>,
    pub n_check: usize,
}

fn probs_at(det: &DetectorSpec, beta: f64, cfg: &CalibrationConfig) -> Vec<f64> {
    displaced_no_click_probs(det, C64::new(beta, 0.0), cfg.dim, cfg.n_check + 1)
}

#[derive(Clone, Copy)]
enum Crossing {
    Beta0,
    Beta1,
    Beta2,
}

impl Crossing {
    fn levels(self) -> (usize, usize) {
        match self {
            Crossing::Beta0 => (0, 3),
            Crossing::Beta1 => (1, 2),
            Crossing::Beta2 => (0, 1),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Crossing::Beta0 => "beta0",
            Crossing::Beta1 => "beta1",
            Crossing::Beta2 => "beta2",
        }
    }

    /// Orderings the corresponding bound relies on, checked on `p[0..=n_check]`.
    fn side_conditions_hold(self, p: &[f64]) -> bool {
        let tail = |from: usize| p.iter().skip(from);
        match self {
            // p00/p10 bounds: |1⟩ strictly the most silent
            Crossing::Beta0 => p[0] < p[1] && tail(2).all(|&q| q < p[1]),
            // p01/p11 bounds: |0⟩ the most silent; also P(n≥3) ≤ P(1)
            Crossing::Beta1 => p[1] < p[0] && tail(2).all(|&q| q <= p[0]) && tail(3).all(|&q| q <= p[1]),
            // p_B*: P(n≥2) < P(0) and |3⟩ the most silent among n ≥ 2
            Crossing::Beta2 => tail(2).all(|&q| q < p[0] && q <= p[3]),
        }
    }
}

fn find_crossing(det: &DetectorSpec, which: Crossing, cfg: &CalibrationConfig) -> Result<f64> {
    let (i, j) = which.levels();
    let f = |b: f64| {
        let p = displaced_no_click_probs(det, C64::new(b, 0.0), cfg.dim, j + 1);
        p[i] - p[j]
    };
    let brackets = sign_change_brackets(f, cfg.bracket.0, cfg.bracket.1, cfg.scan_steps, 1e-12);
    if brackets.is_empty() {
        return Err(Error::Calibration(format!(
            "{}: P(+1|β,|{i}⟩) - P(+1|β,|{j}⟩) has no sign change in [{}, {}]",
            which.name(),
            cfg.bracket.0,
            cfg.bracket.1
        )));
    }
    for (lo, hi) in brackets {
        let Some(root) = brent_root(f, lo, hi, cfg.tolerance) else {
            continue;
        };
        if which.side_conditions_hold(&probs_at(det, root, cfg)) {
            return Ok(root);
        }
    }
    Err(Error::Calibration(format!(
        "{}: no crossing in [{}, {}] satisfies the side conditions up to n = {}",
        which.name(),
        cfg.bracket.0,
        cfg.bracket.1,
        cfg.n_check
    )))
}

/// Finds `β₀`, `β₁`, `β₂` for a unit-efficiency threshold detector. Among
/// several crossings in the bracket the smallest one satisfying the side
/// conditions is returned.
pub fn find_calibration_amplitudes(det: &DetectorSpec, cfg: &CalibrationConfig) -> Result<CalibrationSet> {
    if det.eta() != 1.0 {
        return Err(Error::param("calibration uses unit-efficiency detectors; move loss onto the state"));
    }
    if det.theta() < 2 {
        return Err(Error::Calibration(format!(
            "threshold {} has no displaced-Fock crossings",
            det.theta()
        )));
    }
    if cfg.n_check < 3 || cfg.dim <= cfg.n_check {
        return Err(Error::param("calibration needs n_check >= 3 and dim > n_check"));
    }
    let beta0 = find_crossing(det, Crossing::Beta0, cfg)?;
    let beta1 = find_crossing(det, Crossing::Beta1, cfg)?;
    let beta2 = find_crossing(det, Crossing::Beta2, cfg)?;
    Ok(CalibrationSet {
        det: *det,
        beta0,
        beta1,
        beta2,
        probs_beta0: probs_at(det, beta0, cfg),
        probs_beta1: probs_at(det, beta1, cfg),
        probs_beta2: probs_at(det, beta2, cfg),
        n_check: cfg.n_check,
    })
}

/// Joint and marginal "no click" statistics at the calibration settings.
/// `pm_*` means mode A clicked (−1) while mode B stayed silent (+1).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasuredProbabilities {
    pub pp_beta0: f64,
    pub mp_beta0: f64,
    pub pp_beta1: f64,
    pub mp_beta1: f64,
    /// `P_A(+1|0)`
    pub a_plus: f64,
    /// `P_A(−1|0)`
    pub a_minus: f64,
    /// `P_B(+1|β₂)`
    pub b_plus_beta2: f64,
}

/// Standard errors for sampled [`MeasuredProbabilities`].
pub type MeasuredStdErrors = MeasuredProbabilities;

/// Evaluates the calibration statistics exactly on a model state.
pub fn measure_probabilities(
    rho: &NumberBlockState,
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    calib: &CalibrationSet,
) -> MeasuredProbabilities {
    let d = rho.dim();
    let eval_dim = 2 * d + 48;
    let pb = |beta: f64| displaced_no_click_probs(det_b, C64::new(beta, 0.0), eval_dim, d);
    let (pb0, pb1, pb2) = (pb(calib.beta0), pb(calib.beta1), pb(calib.beta2));
    let pa: Vec<f64> = (0..d).map(|n| no_click_prob_fock(det_a, n)).collect();
    let mut m = MeasuredProbabilities::default();
    for i in 0..d {
        for j in 0..d {
            let p = rho.joint_probability(i, j);
            if p == 0.0 {
                continue;
            }
            m.pp_beta0 += p * pa[i] * pb0[j];
            m.mp_beta0 += p * (1.0 - pa[i]) * pb0[j];
            m.pp_beta1 += p * pa[i] * pb1[j];
            m.mp_beta1 += p * (1.0 - pa[i]) * pb1[j];
            m.a_plus += p * pa[i];
            m.a_minus += p * (1.0 - pa[i]);
            m.b_plus_beta2 += p * pb2[j];
        }
    }
    m
}

/// Upper bounds on the qubit-sector photon-number probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PijBounds {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

fn checked_denominator(what: &str, den: f64) -> Result<f64> {
    if den.abs() < DENOMINATOR_FLOOR {
        return Err(Error::DegenerateBound {
            what: what.into(),
            denominator: den,
        });
    }
    Ok(den)
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        return 1.0;
    }
    x.clamp(0.0, 1.0)
}

/// Bounds `p₀₀, p₀₁, p₁₀, p₁₁` from the calibration statistics, clamped to
/// `[0, 1]`.
pub fn bound_pij(meas: &MeasuredProbabilities, calib: &CalibrationSet) -> Result<PijBounds> {
    let q0 = &calib.probs_beta0;
    let q1 = &calib.probs_beta1;
    let den0 = checked_denominator("P(+1|β₀,|0⟩) − P(+1|β₀,|1⟩)", q0[0] - q0[1])?;
    let den1 = checked_denominator("P(+1|β₁,|1⟩) − P(+1|β₁,|0⟩)", q1[1] - q1[0])?;
    Ok(PijBounds {
        p00: clamp_unit((meas.pp_beta0 - q0[1] * meas.a_plus) / den0),
        p10: clamp_unit((meas.mp_beta0 - q0[1] * meas.a_minus) / den0),
        p01: clamp_unit((meas.pp_beta1 - q1[0] * meas.a_plus) / den1),
        p11: clamp_unit((meas.mp_beta1 - q1[0] * meas.a_minus) / den1),
    })
}

/// Bound on the weight of `n_B ≥ 2` from the `β₂` statistic.
pub fn bound_p_star_b(meas: &MeasuredProbabilities, calib: &CalibrationSet) -> Result<f64> {
    let q2 = &calib.probs_beta2;
    let den = checked_denominator("P(+1|β₂,|3⟩) − P(+1|β₂,|0⟩)", q2[3] - q2[0])?;
    Ok(clamp_unit((meas.b_plus_beta2 - q2[0]) / den))
}

/// Exact weight of `n_A ≥ 2` in a model state.
pub fn exact_pa_star(rho: &NumberBlockState) -> f64 {
    let d = rho.dim();
    (2..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| rho.joint_probability(i, j)).sum()
}

/// Exact weight of `n_B ≥ 2` in a model state.
pub fn exact_pb_star(rho: &NumberBlockState) -> f64 {
    let d = rho.dim();
    (0..d).flat_map(|i| (2..d).map(move |j| (i, j))).map(|(i, j)| rho.joint_probability(i, j)).sum()
}

/// Where the multi-photon bound of mode A comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaStar {
    /// Read off the simulated state.
    Exact,
    /// Externally measured value (e.g. from an auto-correlation measurement).
    Given(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityBounds {
    pub pij: PijBounds,
    pub pa_star: f64,
    pub pb_star: f64,
}

impl ProbabilityBounds {
    pub fn p_star(&self) -> f64 {
        self.pa_star + self.pb_star
    }
}

/// Separable bound on the two-qubit sector:
/// `Σ ⟨ij|W|ij⟩ p_ij + 2|⟨01|W|10⟩| √(p₀₀ p₁₁)`.
pub fn w_ppt_qubit(el: &WitnessElements, p: &PijBounds) -> f64 {
    el.w00_00 * p.p00 + el.w01_01 * p.p01 + el.w10_10 * p.p10 + el.w11_11 * p.p11 + 2.0 * el.w01_10.norm() * (p.p00 * p.p11).sqrt()
}

/// Dimension-independent bound: adds the coherence leakage between `|11⟩`
/// and `|20⟩, |02⟩` and the multi-photon weight `p* = p_A* + p_B*`.
pub fn w_ppt_full(wq: f64, p11: f64, pa_star: f64, pb_star: f64, w11_20: C64, w11_02: C64) -> f64 {
    wq + 2.0 * p11.sqrt() * (w11_20.norm() * pa_star.sqrt() + w11_02.norm() * pb_star.sqrt()) + pa_star + pb_star
}

/// Everything that goes into `ΔW = ⟨W⟩ − W_PPT` for one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    pub expected_w: f64,
    pub measured: MeasuredProbabilities,
    pub bounds: ProbabilityBounds,
    pub w_ppt_qubit: f64,
    pub w_ppt: f64,
    pub delta_w: f64,
}

/// `ΔW` for a model state, with the calibration statistics simulated
/// exactly from the same state.
pub fn delta_w(
    rho: &NumberBlockState,
    w: &WitnessMatrix,
    det_a: &DetectorSpec,
    calib: &CalibrationSet,
    pa_star: PaStar,
) -> Result<WitnessReport> {
    let expected_w = witness_expectation(w, rho)?.value;
    let measured = measure_probabilities(rho, det_a, &calib.det, calib);
    report_from_measurements(expected_w, measured, w.elements(), calib, match pa_star {
        PaStar::Exact => exact_pa_star(rho),
        PaStar::Given(v) => v,
    })
}

/// Assembles the bound chain from (possibly sampled) statistics.
pub fn report_from_measurements(
    expected_w: f64,
    measured: MeasuredProbabilities,
    el: &WitnessElements,
    calib: &CalibrationSet,
    pa_star: f64,
) -> Result<WitnessReport> {
    let pij = bound_pij(&measured, calib)?;
    let pb_star = bound_p_star_b(&measured, calib)?;
    let pa_star = clamp_unit(pa_star);
    let wq = w_ppt_qubit(el, &pij);
    let w_ppt = w_ppt_full(wq, pij.p11, pa_star, pb_star, el.w11_20, el.w11_02);
    Ok(WitnessReport {
        expected_w,
        measured,
        bounds: ProbabilityBounds { pij, pa_star, pb_star },
        w_ppt_qubit: wq,
        w_ppt,
        delta_w: expected_w - w_ppt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero_elements() -> WitnessElements {
        WitnessElements {
            w00_00: 0.0,
            w01_01: 0.0,
            w10_10: 0.0,
            w11_11: 0.0,
            w01_10: C64::new(1.0, 0.0),
            w11_20: C64::new(0.3, 0.0),
            w11_02: C64::new(0.0, -0.2),
        }
    }

    #[test]
    fn qubit_bound_examples() {
        let el = zero_elements();
        let zero = PijBounds { p00: 0.0, p01: 0.0, p10: 0.0, p11: 0.0 };
        assert_eq!(w_ppt_qubit(&el, &zero), 0.0);
        let half = PijBounds { p00: 0.5, p01: 0.0, p10: 0.0, p11: 0.5 };
        assert_abs_diff_eq!(w_ppt_qubit(&el, &half), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn full_bound_examples() {
        let el = zero_elements();
        assert_eq!(w_ppt_full(0.4, 0.2, 0.0, 0.0, el.w11_20, el.w11_02), 0.4);
        assert_eq!(w_ppt_full(0.4, 0.0, 0.1, 0.05, el.w11_20, el.w11_02), 0.4 + 0.15000000000000002);
        let v = w_ppt_full(0.4, 0.25, 0.04, 0.09, el.w11_20, el.w11_02);
        assert_abs_diff_eq!(v, 0.4 + 2.0 * 0.5 * (0.3 * 0.2 + 0.2 * 0.3) + 0.13, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_denominator_rejected() {
        let det = DetectorSpec::new(7, 1.0).unwrap();
        let calib = CalibrationSet {
            det,
            beta0: 1.0,
            beta1: 1.0,
            beta2: 1.0,
            probs_beta0: vec![0.5, 0.5 + 1e-8, 0.1, 0.1],
            probs_beta1: vec![0.9, 0.5, 0.5, 0.4],
            probs_beta2: vec![0.5, 0.5, 0.4, 0.45],
            n_check: 3,
        };
        let err = bound_pij(&MeasuredProbabilities::default(), &calib).unwrap_err();
        assert_eq!(err.class_name(), "DegenerateBoundError");
    }

    #[test]
    fn calibration_rejects_single_photon_threshold() {
        let det = DetectorSpec::new(1, 1.0).unwrap();
        let err = find_calibration_amplitudes(&det, &CalibrationConfig::default()).unwrap_err();
        assert_eq!(err.class_name(), "CalibrationError");
        let lossy = DetectorSpec::eye();
        assert!(find_calibration_amplitudes(&lossy, &CalibrationConfig::default()).is_err());
    }

    #[test]
    fn calibration_amplitudes_for_threshold_seven() {
        let det = DetectorSpec::new(7, 1.0).unwrap();
        let c = find_calibration_amplitudes(&det, &CalibrationConfig::default()).unwrap();
        assert_abs_diff_eq!(c.beta0, 2.71294, epsilon = 1e-4);
        assert_abs_diff_eq!(c.beta1, 2.08668, epsilon = 1e-4);
        assert_abs_diff_eq!(c.beta2, 7f64.sqrt(), epsilon = 1e-8);
        assert_abs_diff_eq!(c.probs_beta0[0], c.probs_beta0[3], epsilon = 1e-9);
    }
}
