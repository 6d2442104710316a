//! Command-line front end: reads a flat `key = value` configuration, runs one
//! of the numerical pipelines of `eyewitness-core` and writes CSV.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use eyewitness_core::bounds::{find_calibration_amplitudes, measure_probabilities, CalibrationConfig, PaStar};
use eyewitness_core::detector::{bloch_vector, displaced_no_click_probs, seen_prob_coherent, DetectorSpec};
use eyewitness_core::fock::default_dim;
use eyewitness_core::mc::{measured_from_histogram, sample_histogram, witness_from_histogram, McConfig};
use eyewitness_core::source::{expected_w_closed_form, experiment_state, ExperimentParams, Picture};
use eyewitness_core::sweep::{sweep, SweepSettings};
use eyewitness_core::C64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("IoError: {0}")]
    Io(String),
    #[error("{0}")]
    Numeric(#[from] eyewitness_core::Error),
}

impl CliError {
    pub fn class_name(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Io(_) => "IoError",
            CliError::Numeric(e) => e.class_name(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "eyewitness", version, about = "Entanglement witnesses with threshold detectors and the human eye")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability to see a coherent pulse versus its mean photon number.
    EyeCurve(CommonArgs),
    /// Calibration amplitudes and the displaced-Fock curves behind them.
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
        /// Where to write the (beta, n, p_no_click) curves.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// ΔW versus beamsplitter transmission, optimised over g.
    Sweep(CommonArgs),
    /// Monte Carlo estimates against their analytic values.
    Validate(CommonArgs),
    /// Qubit Bloch vector of the displaced detector observable.
    Bloch(CommonArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Key-value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a configuration key, e.g. `--set T=0.4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "theta", "eta", "nbar_start", "nbar_stop", "nbar_step", "amp_start", "amp_stop", "amp_step", "g", "eta_h",
    "eta_t", "T", "R", "eta_a", "eta_b", "theta_a", "theta_b", "alpha", "alpha_im", "beta", "beta_im", "t_start",
    "t_stop", "t_step", "g_min", "g_max", "g_tol", "refine_amplitudes", "pa_star", "n_check", "beta_start",
    "beta_stop", "beta_step", "curve_n_max", "n_samples", "shards", "dim", "seed",
];

/// Flat `key = value` configuration with `#` comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        if value.is_empty() {
            return Err(CliError::Config(format!("empty value for '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// File values, then `--set` overrides, then the dedicated flags.
    pub fn load(args: &CommonArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                Config::parse(&text)?
            }
            None => Config::default(),
        };
        for kv in &args.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(d) = args.dim {
            cfg.set("dim", &d.to_string())?;
        }
        if let Some(s) = args.seed {
            cfg.set("seed", &s.to_string())?;
        }
        Ok(cfg)
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("cannot parse '{v}' for '{key}'"))),
        }
    }

    pub fn f64(&self, key: &str, default: f64) -> CliResult<f64> {
        let v: f64 = self.get(key, default)?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("'{key}' must be finite")));
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str, default: usize) -> CliResult<usize> {
        self.get(key, default)
    }

    pub fn opt_usize(&self, key: &str) -> CliResult<Option<usize>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(_) => self.usize(key, 0).map(Some),
        }
    }

    pub fn opt_f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(_) => self.f64(key, 0.0).map(Some),
        }
    }

    pub fn u64(&self, key: &str, default: u64) -> CliResult<u64> {
        self.get(key, default)
    }

    pub fn u32(&self, key: &str, default: u32) -> CliResult<u32> {
        self.get(key, default)
    }

    pub fn bool(&self, key: &str, default: bool) -> CliResult<bool> {
        self.get(key, default)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Inclusive grid `start, start + step, …, stop`.
    pub fn grid(&self, prefix: &str, start: f64, stop: f64, step: f64) -> CliResult<Vec<f64>> {
        let start = self.f64(&format!("{prefix}_start"), start)?;
        let stop = self.f64(&format!("{prefix}_stop"), stop)?;
        let step = self.f64(&format!("{prefix}_step"), step)?;
        if step <= 0.0 {
            return Err(CliError::Config(format!("{prefix}_step must be > 0")));
        }
        if stop < start {
            return Err(CliError::Config(format!("{prefix}_stop must be >= {prefix}_start")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| start + i as f64 * step).collect())
    }

    pub fn experiment(&self, default_g: f64) -> CliResult<ExperimentParams> {
        let d = ExperimentParams::default();
        let eta_a = self.f64("eta_a", d.eta_a)?;
        let eta_b = self.f64("eta_b", d.eta_b)?;
        let theta_b = self.u32("theta_b", d.theta_b)?;
        let alpha_re = self.f64("alpha", 1.0 / eta_a.sqrt())?;
        let beta_re = self.f64("beta", (theta_b as f64 / eta_b).sqrt())?;
        let p = ExperimentParams {
            g: self.f64("g", default_g)?,
            eta_h: self.f64("eta_h", d.eta_h)?,
            eta_t: self.f64("eta_t", d.eta_t)?,
            t: self.f64("T", d.t)?,
            r: self.opt_f64("R")?,
            eta_a,
            eta_b,
            theta_a: self.u32("theta_a", d.theta_a)?,
            theta_b,
            alpha: C64::new(alpha_re, self.f64("alpha_im", 0.0)?),
            beta: C64::new(beta_re, self.f64("beta_im", 0.0)?),
        };
        p.validate()?;
        Ok(p)
    }

    fn detector(&self, theta: u32, eta: f64) -> CliResult<DetectorSpec> {
        Ok(DetectorSpec::new(self.u32("theta", theta)?, self.f64("eta", eta)?)?)
    }
}

/// CSV table held in memory so it can be written atomically and compared.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| *h == name)?;
        self.rows.iter().map(|r| r[idx].parse().ok()).collect()
    }
}

/// Shortest representation that round-trips to the same double.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() < 1e-5 || v.abs() >= 1e16 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn eye_curve(cfg: &Config) -> CliResult<Table> {
    let det = cfg.detector(7, 0.08)?;
    let mut t = Table::new(&["nbar", "p_seen"]);
    for nbar in cfg.grid("nbar", 0.0, 200.0, 1.0)? {
        t.push_numbers(&[nbar, seen_prob_coherent(&det, nbar)?]);
    }
    Ok(t)
}

pub struct Calibration {
    pub amplitudes: Table,
    pub curves: Table,
}

pub fn calibrate(cfg: &Config) -> CliResult<Calibration> {
    let det = DetectorSpec::new(cfg.u32("theta", 7)?, 1.0)?;
    let defaults = CalibrationConfig::default();
    let cal_cfg = CalibrationConfig {
        dim: cfg.usize("dim", defaults.dim)?,
        n_check: cfg.usize("n_check", defaults.n_check)?,
        ..defaults
    };
    let c = find_calibration_amplitudes(&det, &cal_cfg)?;
    let mut amplitudes = Table::new(&["name", "amplitude"]);
    for (name, v) in [("beta0", c.beta0), ("beta1", c.beta1), ("beta2", c.beta2)] {
        amplitudes.rows.push(vec![name.to_string(), fmt_f64(v)]);
    }
    let n_max = cfg.usize("curve_n_max", 4)?;
    let mut curves = Table::new(&["beta", "n", "p_no_click"]);
    for beta in cfg.grid("beta", 0.0, 4.0, 0.01)? {
        let p = displaced_no_click_probs(&det, C64::new(beta, 0.0), cal_cfg.dim, n_max + 1);
        for (n, v) in p.into_iter().enumerate() {
            curves.rows.push(vec![fmt_f64(beta), n.to_string(), fmt_f64(v)]);
        }
    }
    Ok(Calibration { amplitudes, curves })
}

fn pa_star(cfg: &Config) -> CliResult<PaStar> {
    match cfg.raw("pa_star") {
        None | Some("exact") => Ok(PaStar::Exact),
        Some(_) => Ok(PaStar::Given(cfg.f64("pa_star", 0.0)?)),
    }
}

pub fn sweep_table(cfg: &Config) -> CliResult<Table> {
    if cfg.values.contains_key("T") {
        return Err(CliError::Config("sweep takes T from t_start/t_stop/t_step, not T".into()));
    }
    let params = cfg.experiment(0.1)?;
    let det = DetectorSpec::new(params.theta_b, 1.0)?;
    let calib = find_calibration_amplitudes(&det, &CalibrationConfig::default())?;
    let settings = SweepSettings {
        t_values: cfg.grid("t", 0.05, 0.95, 0.05)?,
        g_bracket: (cfg.f64("g_min", 1e-3)?, cfg.f64("g_max", 1.0)?),
        g_tol: cfg.f64("g_tol", 1e-5)?,
        dim: cfg.usize("dim", 60)?,
        pa_star: pa_star(cfg)?,
        refine_amplitudes: cfg.bool("refine_amplitudes", false)?,
    };
    let rows = sweep(&params, &calib, &settings)?;
    let mut t = Table::new(&["T", "g_opt", "expected_w", "w_ppt", "delta_w"]);
    for r in rows {
        t.push_numbers(&[r.t, r.g_opt, r.report.expected_w, r.report.w_ppt, r.report.delta_w]);
    }
    Ok(t)
}

pub fn validate(cfg: &Config) -> CliResult<Table> {
    let params = cfg.experiment(0.2)?;
    let mc = McConfig {
        n_samples: cfg.u64("n_samples", 1_000_000)?,
        seed: cfg.u64("seed", 1)?,
        params,
        shards: cfg.usize("shards", 0)?,
    };
    let dim = match cfg.opt_usize("dim")? {
        Some(d) => d,
        None => default_dim(params.effective_amplitudes().1.norm_sqr(), params.tg().powi(2) / (1.0 - params.tg().powi(2))),
    };
    let det = DetectorSpec::new(params.theta_b, 1.0)?;
    let calib = find_calibration_amplitudes(&det, &CalibrationConfig::default())?;
    let hist = sample_histogram(&mc)?;
    let (ae, be) = params.effective_amplitudes();
    let w_mc = witness_from_histogram(&hist, &params, ae, be)?;
    let w_exact = expected_w_closed_form(&params)?;
    let sampled = measured_from_histogram(&hist, &params, &calib)?;
    let rho = experiment_state(&params, dim, Picture::Effective)?;
    let exact = measure_probabilities(&rho, &DetectorSpec::new(params.theta_a, 1.0)?, &calib.det, &calib);

    let mut t = Table::new(&["quantity", "analytic", "mc_estimate", "std_err", "z"]);
    let mut push = |name: &str, a: f64, m: f64, s: f64| {
        let z = if s > 0.0 { (m - a) / s } else if m == a { 0.0 } else { f64::INFINITY };
        t.rows.push(vec![name.to_string(), fmt_f64(a), fmt_f64(m), fmt_f64(s), fmt_f64(z)]);
    };
    push("expected_w", w_exact, w_mc.value, w_mc.std_err);
    let (v, s) = (sampled.values, sampled.std_errs);
    push("pp_beta0", exact.pp_beta0, v.pp_beta0, s.pp_beta0);
    push("mp_beta0", exact.mp_beta0, v.mp_beta0, s.mp_beta0);
    push("pp_beta1", exact.pp_beta1, v.pp_beta1, s.pp_beta1);
    push("mp_beta1", exact.mp_beta1, v.mp_beta1, s.mp_beta1);
    push("a_plus", exact.a_plus, v.a_plus, s.a_plus);
    push("a_minus", exact.a_minus, v.a_minus, s.a_minus);
    push("b_plus_beta2", exact.b_plus_beta2, v.b_plus_beta2, s.b_plus_beta2);
    Ok(t)
}

pub fn bloch(cfg: &Config) -> CliResult<Table> {
    let det = cfg.detector(7, 0.08)?;
    let fixed = cfg.opt_usize("dim")?;
    let mut t = Table::new(&["amplitude", "v_x", "v_y", "v_z", "offset"]);
    for a in cfg.grid("amp", 0.0, 12.0, 0.1)? {
        let dim = fixed.unwrap_or_else(|| default_dim(a * a, 0.0));
        let b = bloch_vector(&det, C64::new(a, 0.0), dim)?;
        t.push_numbers(&[a, b.v[0], b.v[1], b.v[2], b.offset]);
    }
    Ok(t)
}

fn write_output(path: Option<&Path>, table: &Table) -> CliResult<()> {
    let text = table.to_csv()?;
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn curves_path(out: Option<&Path>, explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    let out = out?;
    let stem = out.file_stem()?.to_string_lossy();
    Some(out.with_file_name(format!("{stem}_curves.csv")))
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::EyeCurve(a) => write_output(a.out.as_deref(), &eye_curve(&Config::load(&a)?)?),
        Command::Calibrate { common, curves } => {
            let c = calibrate(&Config::load(&common)?)?;
            write_output(common.out.as_deref(), &c.amplitudes)?;
            match curves_path(common.out.as_deref(), curves.as_deref()) {
                Some(p) => write_output(Some(&p), &c.curves),
                None => Ok(()),
            }
        }
        Command::Sweep(a) => write_output(a.out.as_deref(), &sweep_table(&Config::load(&a)?)?),
        Command::Validate(a) => write_output(a.out.as_deref(), &validate(&Config::load(&a)?)?),
        Command::Bloch(a) => write_output(a.out.as_deref(), &bloch(&Config::load(&a)?)?),
    }
}
