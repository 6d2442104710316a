//! `ΔW` as a function of the beamsplitter transmission, optimised over the
//! squeezing parameter.

use rayon::prelude::*;

use crate::bounds::{delta_w, CalibrationSet, PaStar, WitnessReport};
use crate::detector::DetectorSpec;
use crate::error::{Error, Result};
use crate::optimize::golden_section_max;
use crate::source::{experiment_state, ExperimentParams, Picture};
use crate::witness::{sigma_observable, witness_matrix, WitnessMatrix};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub t_values: Vec<f64>,
    pub g_bracket: (f64, f64),
    pub g_tol: f64,
    pub dim: usize,
    pub pa_star: PaStar,
    /// Golden-section refinement of the effective amplitudes at the optimal `g`.
    pub refine_amplitudes: bool,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            t_values: (1..=19).map(|i| i as f64 * 0.05).collect(),
            g_bracket: (1e-3, 1.0),
            g_tol: 1e-5,
            dim: 60,
            pa_star: PaStar::Exact,
            refine_amplitudes: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub g_opt: f64,
    pub alpha_eff: C64,
    pub beta_eff: C64,
    pub report: WitnessReport,
}

/// Witness built for unit-efficiency detectors at the effective amplitudes.
pub fn effective_witness(params: &ExperimentParams, dim: usize) -> Result<WitnessMatrix> {
    let (ae, be) = params.effective_amplitudes();
    let sa = sigma_observable(&DetectorSpec::new(params.theta_a, 1.0)?, ae, dim)?;
    let sb = sigma_observable(&DetectorSpec::new(params.theta_b, 1.0)?, be, dim)?;
    witness_matrix(&sa, &sb)
}

/// Full `ΔW` chain at one parameter point, using a prebuilt witness.
pub fn evaluate_point(
    params: &ExperimentParams,
    w: &WitnessMatrix,
    calib: &CalibrationSet,
    pa_star: PaStar,
) -> Result<WitnessReport> {
    let rho = experiment_state(params, w.dim(), Picture::Effective)?;
    let det_a = DetectorSpec::new(params.theta_a, 1.0)?;
    delta_w(&rho, w, &det_a, calib, pa_star)
}

/// Maximises `ΔW` over `g` by golden-section search; `ΔW` is assumed
/// unimodal in `g` on the bracket.
pub fn optimize_g(
    params: &ExperimentParams,
    w: &WitnessMatrix,
    calib: &CalibrationSet,
    settings: &SweepSettings,
) -> Result<(f64, WitnessReport)> {
    let mut failure: Option<Error> = None;
    let best = golden_section_max(
        |g| match evaluate_point(&ExperimentParams { g, ..*params }, w, calib, settings.pa_star) {
            Ok(r) => r.delta_w,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        settings.g_bracket.0,
        settings.g_bracket.1,
        settings.g_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let report = evaluate_point(&ExperimentParams { g: best.x, ..*params }, w, calib, settings.pa_star)?;
    Ok((best.x, report))
}

fn refine_amplitudes(
    params: &ExperimentParams,
    calib: &CalibrationSet,
    settings: &SweepSettings,
) -> Result<ExperimentParams> {
    let mut current = *params;
    let mut failure: Option<Error> = None;
    for which in [1usize, 0] {
        let (a0, b0) = current.effective_amplitudes();
        let base = if which == 0 { a0 } else { b0 };
        let at = |s: f64| {
            let (a, b) = if which == 0 { (base * s, b0) } else { (a0, base * s) };
            current.with_effective_amplitudes(a, b)
        };
        let mut objective = |s: f64| {
            let r = at(s).and_then(|p| {
                let w = effective_witness(&p, settings.dim)?;
                evaluate_point(&p, &w, calib, settings.pa_star)
            });
            match r {
                Ok(r) => r.delta_w,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            }
        };
        let best = golden_section_max(&mut objective, 0.7, 1.3, 1e-4);
        current = at(best.x)?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(current),
    }
}

fn sweep_row(base: &ExperimentParams, t: f64, calib: &CalibrationSet, settings: &SweepSettings, w: &WitnessMatrix) -> Result<SweepRow> {
    let params = ExperimentParams { t, ..*base };
    let (g_opt, report) = optimize_g(&params, w, calib, settings)?;
    let (params, report) = if settings.refine_amplitudes {
        let refined = refine_amplitudes(&ExperimentParams { g: g_opt, ..params }, calib, settings)?;
        let w2 = effective_witness(&refined, settings.dim)?;
        let r2 = evaluate_point(&refined, &w2, calib, settings.pa_star)?;
        if r2.delta_w > report.delta_w {
            (refined, r2)
        } else {
            (params, report)
        }
    } else {
        (params, report)
    };
    let (alpha_eff, beta_eff) = params.effective_amplitudes();
    Ok(SweepRow {
        t,
        g_opt,
        alpha_eff,
        beta_eff,
        report,
    })
}

/// One row per transmission value, in grid order.
pub fn sweep(base: &ExperimentParams, calib: &CalibrationSet, settings: &SweepSettings) -> Result<Vec<SweepRow>> {
    if settings.t_values.is_empty() {
        return Err(Error::param("empty T grid"));
    }
    let w = effective_witness(base, settings.dim)?;
    settings
        .t_values
        .par_iter()
        .map(|&t| sweep_row(base, t, calib, settings, &w))
        .collect()
}
