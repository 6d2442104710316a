//! Event-sampling Monte Carlo for the heralded experiment.
//!
//! Photon numbers are sampled event by event; detection is then integrated
//! analytically. Given `m` photons surviving to the detectors, the state is
//! a pure binomial split over `|m−k, k⟩`, so each event contributes an exact
//! conditional expectation. Every event draws from its own ChaCha stream
//! selected by the event index, and only integer counts are accumulated, so
//! results do not depend on how events are sharded.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use rayon::prelude::*;

use crate::bounds::{CalibrationSet, MeasuredProbabilities, MeasuredStdErrors};
use crate::detector::{no_click_probs, DetectorSpec};
use crate::error::{Error, Result};
use crate::fock::{binomial_weight, default_dim, displacement_columns};
use crate::source::ExperimentParams;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Raw (pre-heralding) events.
    pub n_samples: u64,
    pub seed: u64,
    pub params: ExperimentParams,
    /// Worker shards; `0` picks the rayon thread count.
    pub shards: usize,
}

impl McConfig {
    pub fn new(n_samples: u64, seed: u64, params: ExperimentParams) -> Self {
        Self {
            n_samples,
            seed,
            params,
            shards: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    /// Heralded events that entered the average.
    pub n_effective: u64,
}

struct Sampler {
    pairs: Geometric,
    herald_p: f64,
    eta_through: f64,
    split: f64,
    eta_a: f64,
    eta_b: f64,
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

impl Sampler {
    fn new(params: &ExperimentParams) -> Result<Self> {
        params.validate()?;
        let tg2 = params.tg().powi(2);
        let (t, r) = (params.t, params.r());
        let through = t + r;
        Ok(Self {
            pairs: Geometric::new(1.0 - tg2).map_err(|e| Error::param(format!("pair-number law: {e}")))?,
            herald_p: 1.0 - params.r_h().powi(2),
            eta_through: (params.eta_t * through).min(1.0),
            split: if through > 0.0 { (t / through).min(1.0) } else { 0.0 },
            eta_a: params.eta_a,
            eta_b: params.eta_b,
        })
    }

    /// `(n_A, n_B)` at the detectors for event `index`, or `None` when the
    /// herald stays silent.
    fn event(&self, seed: u64, index: u64) -> Option<(u32, u32)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let n = self.pairs.sample(&mut rng);
        if binomial(&mut rng, n, self.herald_p) == 0 {
            return None;
        }
        let m = binomial(&mut rng, n, self.eta_through);
        let to_b = binomial(&mut rng, m, self.split);
        let n_a = binomial(&mut rng, m - to_b, self.eta_a);
        let n_b = binomial(&mut rng, to_b, self.eta_b);
        Some((n_a as u32, n_b as u32))
    }
}

/// Heralded `(n_A, n_B)` pairs in event order.
pub fn sample_heralded_counts(cfg: &McConfig) -> Result<impl Iterator<Item = (u32, u32)>> {
    let sampler = Sampler::new(&cfg.params)?;
    let seed = cfg.seed;
    Ok((0..cfg.n_samples).filter_map(move |i| sampler.event(seed, i)))
}

/// Sufficient statistics: counts of heralded `(n_A, n_B)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountHistogram {
    pub counts: BTreeMap<(u32, u32), u64>,
    pub n_raw: u64,
    pub n_heralded: u64,
}

impl CountHistogram {
    pub fn merge(mut self, other: CountHistogram) -> CountHistogram {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.n_raw += other.n_raw;
        self.n_heralded += other.n_heralded;
        self
    }

    pub fn max_total(&self) -> usize {
        self.counts.keys().map(|&(a, b)| (a + b) as usize).max().unwrap_or(0)
    }

    /// Mean and standard error of a per-event quantity.
    pub fn mean<F: FnMut(u32, u32) -> f64>(&self, mut f: F) -> Result<McEstimate> {
        if self.n_heralded == 0 {
            return Err(Error::PostSelection { samples: self.n_raw });
        }
        let n = self.n_heralded as f64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for (&(a, b), &c) in &self.counts {
            let v = f(a, b);
            s1 += c as f64 * v;
            s2 += c as f64 * v * v;
        }
        let mean = s1 / n;
        let var = if self.n_heralded > 1 {
            ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Ok(McEstimate {
            value: mean,
            std_err: (var / n).sqrt(),
            n_effective: self.n_heralded,
        })
    }
}

fn shard_histogram(sampler: &Sampler, seed: u64, range: std::ops::Range<u64>) -> CountHistogram {
    let mut h = CountHistogram {
        n_raw: range.end - range.start,
        ..Default::default()
    };
    for i in range {
        if let Some(k) = sampler.event(seed, i) {
            *h.counts.entry(k).or_insert(0) += 1;
            h.n_heralded += 1;
        }
    }
    h
}

/// Samples all events, in parallel over disjoint index ranges.
pub fn sample_histogram(cfg: &McConfig) -> Result<CountHistogram> {
    if cfg.n_samples == 0 {
        return Err(Error::param("n_samples must be >= 1"));
    }
    let sampler = Sampler::new(&cfg.params)?;
    let shards = if cfg.shards == 0 { rayon::current_num_threads() } else { cfg.shards } as u64;
    let shards = shards.clamp(1, cfg.n_samples);
    let chunk = cfg.n_samples.div_ceil(shards);
    let hist = (0..shards)
        .into_par_iter()
        .map(|s| {
            let lo = s * chunk;
            let hi = ((s + 1) * chunk).min(cfg.n_samples);
            shard_histogram(&sampler, cfg.seed, lo..hi.max(lo))
        })
        .reduce(CountHistogram::default, CountHistogram::merge);
    Ok(hist)
}

/// `⟨m|σ|m'⟩` for `m, m' < count`, computed from displacement columns.
fn sigma_block(det: &DetectorSpec, alpha: C64, count: usize) -> DMatrix<C64> {
    let dim = default_dim(alpha.norm_sqr(), count as f64).max(count + 32);
    let d = displacement_columns(alpha, dim, count);
    let signs: Vec<f64> = no_click_probs(det, dim).iter().map(|p| 2.0 * p - 1.0).collect();
    DMatrix::from_fn(count, count, |m, n| (0..dim).map(|k| d[(k, m)].conj() * d[(k, n)] * signs[k]).sum())
}

/// Exact witness value on the pure split state with `m` photons at the
/// unit-efficiency detectors.
fn conditional_witness(m: usize, t_eff: f64, sa: &DMatrix<C64>, sb: &DMatrix<C64>) -> f64 {
    let c: Vec<f64> = (0..=m).map(|k| binomial_weight(m, k, t_eff).sqrt()).collect();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..=m {
        if c[k] == 0.0 {
            continue;
        }
        for kp in 0..=m {
            if c[kp] == 0.0 {
                continue;
            }
            acc += sa[(m - k, m - kp)] * sb[(k, kp)] * (c[k] * c[kp]);
        }
    }
    acc.re
}

/// Effective transmission into mode B among photons that reach a detector.
fn effective_split(params: &ExperimentParams) -> f64 {
    let (ea, eb) = (params.r() * params.eta_a, params.t * params.eta_b);
    if ea + eb == 0.0 {
        0.0
    } else {
        eb / (ea + eb)
    }
}

/// `⟨W⟩` with unit-efficiency detectors at the effective amplitudes. The
/// value lies in `[−1, 1]`.
pub fn estimate_witness(cfg: &McConfig, alpha_eff: C64, beta_eff: C64) -> Result<McEstimate> {
    let hist = sample_histogram(cfg)?;
    witness_from_histogram(&hist, &cfg.params, alpha_eff, beta_eff)
}

pub fn witness_from_histogram(hist: &CountHistogram, params: &ExperimentParams, alpha_eff: C64, beta_eff: C64) -> Result<McEstimate> {
    if hist.n_heralded == 0 {
        return Err(Error::PostSelection { samples: hist.n_raw });
    }
    let count = hist.max_total() + 1;
    let sa = sigma_block(&DetectorSpec::new(params.theta_a, 1.0)?, alpha_eff, count);
    let sb = sigma_block(&DetectorSpec::new(params.theta_b, 1.0)?, beta_eff, count);
    let t_eff = effective_split(params);
    let values: Vec<f64> = (0..count).map(|m| conditional_witness(m, t_eff, &sa, &sb)).collect();
    hist.mean(|a, b| values[(a + b) as usize])
}

/// Sampled calibration statistics with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledProbabilities {
    pub values: MeasuredProbabilities,
    pub std_errs: MeasuredStdErrors,
    pub n_effective: u64,
}

/// The statistics consumed by the photon-number bounds; mode A is read out
/// without displacement, mode B at the calibration amplitudes.
pub fn estimate_measured_probabilities(cfg: &McConfig, calib: &CalibrationSet) -> Result<SampledProbabilities> {
    let hist = sample_histogram(cfg)?;
    measured_from_histogram(&hist, &cfg.params, calib)
}

pub fn measured_from_histogram(hist: &CountHistogram, params: &ExperimentParams, calib: &CalibrationSet) -> Result<SampledProbabilities> {
    let count = hist.counts.keys().map(|&(a, b)| a.max(b) as usize).max().unwrap_or(0) + 1;
    let det_a = DetectorSpec::new(params.theta_a, 1.0)?;
    let pa = no_click_probs(&det_a, count);
    let pb = |beta: f64| {
        let dim = default_dim(beta * beta, count as f64).max(count + 32);
        crate::detector::displaced_no_click_probs(&calib.det, C64::new(beta, 0.0), dim, count)
    };
    let (pb0, pb1, pb2) = (pb(calib.beta0), pb(calib.beta1), pb(calib.beta2));
    let est = |f: &dyn Fn(usize, usize) -> f64| hist.mean(|a, b| f(a as usize, b as usize));
    let pp0 = est(&|a, b| pa[a] * pb0[b])?;
    let mp0 = est(&|a, b| (1.0 - pa[a]) * pb0[b])?;
    let pp1 = est(&|a, b| pa[a] * pb1[b])?;
    let mp1 = est(&|a, b| (1.0 - pa[a]) * pb1[b])?;
    let ap = est(&|a, _| pa[a])?;
    let am = est(&|a, _| 1.0 - pa[a])?;
    let b2 = est(&|_, b| pb2[b])?;
    let pick = |f: fn(&McEstimate) -> f64| MeasuredProbabilities {
        pp_beta0: f(&pp0),
        mp_beta0: f(&mp0),
        pp_beta1: f(&pp1),
        mp_beta1: f(&mp1),
        a_plus: f(&ap),
        a_minus: f(&am),
        b_plus_beta2: f(&b2),
    };
    Ok(SampledProbabilities {
        values: pick(|e| e.value),
        std_errs: pick(|e| e.std_err),
        n_effective: hist.n_heralded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64) -> McConfig {
        McConfig::new(n, 7, ExperimentParams { g: 0.3, ..Default::default() })
    }

    #[test]
    fn shard_count_does_not_change_histogram() {
        let mut c = cfg(20_000);
        c.shards = 1;
        let one = sample_histogram(&c).unwrap();
        c.shards = 7;
        assert_eq!(sample_histogram(&c).unwrap(), one);
    }

    #[test]
    fn no_transmission_gives_vacuum() {
        let c = McConfig::new(5_000, 1, ExperimentParams { g: 0.3, eta_t: 0.0, ..Default::default() });
        assert!(sample_heralded_counts(&c).unwrap().all(|k| k == (0, 0)));
    }

    #[test]
    fn full_transmission_leaves_mode_a_empty() {
        let p = ExperimentParams { g: 0.3, t: 1.0, eta_b: 1.0, ..Default::default() };
        let c = McConfig::new(5_000, 1, p);
        assert!(sample_heralded_counts(&c).unwrap().all(|(a, _)| a == 0));
    }

    #[test]
    fn empty_post_selection_is_an_error() {
        let p = ExperimentParams { g: 1e-6, eta_h: 0.01, ..Default::default() };
        let err = estimate_witness(&McConfig::new(100, 3, p), C64::new(1.0, 0.0), C64::new(2.6, 0.0)).unwrap_err();
        assert_eq!(err.class_name(), "PostSelectionError");
    }

    #[test]
    fn single_photon_witness_is_exact() {
        // one photon, lossless and balanced: every event is |ψ⁺⟩
        let p = ExperimentParams { g: 5e-3, eta_t: 1.0, eta_a: 1.0, eta_b: 1.0, ..Default::default() };
        let c = McConfig::new(1_000_000, 11, p);
        let hist = sample_histogram(&c).unwrap();
        assert!(hist.n_heralded > 0);
        assert!(hist.counts.keys().all(|&(a, b)| a + b == 1));
        let (ae, be) = (C64::new(1.0, 0.0), C64::new(7f64.sqrt(), 0.0));
        let est = witness_from_histogram(&hist, &p, ae, be).unwrap();
        assert_eq!(est.std_err, 0.0);
        let sa = sigma_block(&DetectorSpec::new(1, 1.0).unwrap(), ae, 2);
        let sb = sigma_block(&DetectorSpec::new(7, 1.0).unwrap(), be, 2);
        let exact = 0.5 * (sa[(1, 1)] * sb[(0, 0)] + sa[(0, 0)] * sb[(1, 1)] + sa[(1, 0)] * sb[(0, 1)] + sa[(0, 1)] * sb[(1, 0)]).re;
        assert!((est.value - exact).abs() < 1e-14);
    }
}
