//! Seeded Monte Carlo sweeps and dataset export.
//!
//! Trial `i` of a sweep with base seed `s` uses the trial seed
//! `derive_seed(s, i)` for every swept value, so the same scenario is
//! realized at each point of the sweep.

mod dataset;
mod robustness;

pub use dataset::{export_dataset, read_manifest, DatasetManifest, PI_FILE, CLEAN_FILE, LOOKUP_FILE, MANIFEST_FILE};
pub use robustness::{evaluate_selection_robustness, robustness_csv, RobustnessRow, Selector};

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::beamformer::{jsc_combine, procrustes_update};
use crate::config::SystemConfig;
use crate::error::{IsacError, Result};
use crate::linalg::{eye, frob2, CMat, C64};
use crate::rng::{child_rng, derive_seed, stream};
use crate::scenario::{generate_channel, sensing_steering_matrix, Scenario};
use crate::selection::{
    evaluate_candidate, exhaustive_select, random_subarray, spectral_efficiency_per_subcarrier, Enumeration,
    SelectionProblem,
};

/// Beamforming strategies compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Fully digital joint precoder on the whole array.
    FdFull,
    /// Best subarray, hybrid design with squint compensation.
    OptBsc,
    /// Best subarray, hybrid design without squint compensation.
    OptNobsc,
    /// Random subarray with squint compensation.
    RandBsc,
    /// Random subarray without squint compensation.
    RandNobsc,
    /// Fully digital communications-only precoder on the whole array.
    FdCommOnly,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::FdFull, Method::OptBsc, Method::OptNobsc, Method::RandBsc, Method::RandNobsc, Method::FdCommOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::FdFull => "fd_full",
            Method::OptBsc => "opt_bsc",
            Method::OptNobsc => "opt_nobsc",
            Method::RandBsc => "rand_bsc",
            Method::RandNobsc => "rand_nobsc",
            Method::FdCommOnly => "fd_comm_only",
        }
    }
}

impl FromStr for Method {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| IsacError::Config(format!("unknown method {s:?}")))
    }
}

/// Quantity varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Snr,
    K,
    NRf,
    G,
    Epsilon,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::Snr => "snr",
            SweepVar::K => "K",
            SweepVar::NRf => "N_RF",
            SweepVar::G => "G",
            SweepVar::Epsilon => "epsilon",
        }
    }

    /// `base` with this variable set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(IsacError::Config(format!("{} takes integer values, got {v}", self.as_str())))
            }
        };
        match self {
            SweepVar::Snr => cfg.set_snr_db(value),
            SweepVar::K => cfg.k = count(value)?,
            SweepVar::NRf => cfg.n_rf = count(value)?,
            SweepVar::G => cfg.g = count(value)?,
            SweepVar::Epsilon => cfg.epsilon = value,
        }
        Ok(cfg)
    }
}

impl FromStr for SweepVar {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(SweepVar::Snr),
            "K" => Ok(SweepVar::K),
            "N_RF" => Ok(SweepVar::NRf),
            "G" => Ok(SweepVar::G),
            "epsilon" => Ok(SweepVar::Epsilon),
            _ => Err(IsacError::Config(format!("cannot sweep {s:?}; expected snr, K, N_RF, G or epsilon"))),
        }
    }
}

/// A sweep request.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base: SystemConfig,
    /// Candidate set searched by the `opt_*` methods.
    pub enumeration: Enumeration,
}

/// One `(value, method, trial)` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub value: f64,
    pub method: Method,
    pub trial: usize,
    pub se: f64,
}

/// Mean and standard error of one `(value, method)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub value: f64,
    pub method: Method,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub variable: SweepVar,
    /// Ordered by value, then method, then trial.
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    /// Values that were not run, with the reason.
    pub skipped: Vec<(f64, String)>,
}

impl SweepResult {
    pub fn row(&self, value: f64, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.value == value && r.method == method)
    }

    pub fn series(&self, method: Method) -> Vec<&SummaryRow> {
        self.summary.iter().filter(|r| r.method == method).collect()
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::from("sweep_var,value,method,trial,SE\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{},{:.12}", self.variable.as_str(), r.value, r.method.as_str(), r.trial, r.se);
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("sweep_var,value,method,mean_SE,stderr\n");
        for r in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{:.12},{:.12}",
                self.variable.as_str(),
                r.value,
                r.method.as_str(),
                r.mean,
                r.stderr
            );
        }
        out
    }
}

/// Seed of trial `trial` under base seed `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, trial as u64)
}

/// Scenario and full-array channel data of one realization seeded by
/// `cfg.seed`.
pub fn realize(cfg: &SystemConfig) -> Result<(Scenario, SelectionProblem)> {
    let mut rng = child_rng(cfg.seed, stream::SCENARIO);
    let scn = Scenario::generate(cfg, &mut rng);
    let channels = generate_channel(&scn, cfg)?;
    let fs = sensing_steering_matrix(&scn.target_directions, cfg.n);
    Ok((scn, SelectionProblem::new(channels, fs, cfg.n_ds)))
}

/// Fully digital joint precoders `eps F_C + (1 - eps) F_S D[m]` with
/// `D[m]` the Procrustes rotation of `F_S` toward `F_C[m]`, each scaled to
/// `||F[m]||_F^2 = N_ds`.
pub fn fd_joint_precoders(problem: &SelectionProblem, cfg: &SystemConfig) -> Vec<CMat> {
    let t = problem.fs_full.ncols();
    problem
        .fc_full
        .iter()
        .map(|fc| {
            let d = procrustes_update(&problem.fs_full, fc, fc, 0.0, &eye(t, cfg.n_ds));
            with_power(jsc_combine(fc, &problem.fs_full, &d, cfg.epsilon), cfg.n_ds)
        })
        .collect()
}

/// Fully digital communications-only precoders, scaled like
/// [`fd_joint_precoders`].
pub fn fd_comm_precoders(problem: &SelectionProblem, cfg: &SystemConfig) -> Vec<CMat> {
    problem.fc_full.iter().map(|fc| with_power(fc.clone(), cfg.n_ds)).collect()
}

fn with_power(mut f: CMat, n_ds: usize) -> CMat {
    let p = frob2(&f);
    if p > 0.0 {
        f *= C64::new((n_ds as f64 / p).sqrt(), 0.0);
    }
    f
}

/// Spectral efficiency of every requested method on one realization.
pub fn run_trial(cfg: &SystemConfig, methods: &[Method], enumeration: Enumeration) -> Result<Vec<(Method, f64)>> {
    let (_, problem) = realize(cfg)?;
    let full_se = |precoders: &[CMat]| -> Result<f64> {
        Ok(spectral_efficiency_per_subcarrier(&problem.channels.matrices, precoders, cfg.sigma2, cfg.n_ds)?
            .iter()
            .sum())
    };
    let random = {
        let mut rng = child_rng(cfg.seed, stream::RANDOM_SUBARRAY);
        random_subarray(&mut rng, cfg.n, cfg.k)
    };
    methods
        .iter()
        .map(|&method| {
            let se = match method {
                Method::FdFull => full_se(&fd_joint_precoders(&problem, cfg))?,
                Method::FdCommOnly => full_se(&fd_comm_precoders(&problem, cfg))?,
                Method::OptBsc => exhaustive_select(&problem, cfg, enumeration, true)?.best.se_total,
                Method::OptNobsc => exhaustive_select(&problem, cfg, enumeration, false)?.best.se_total,
                Method::RandBsc => evaluate_candidate(&problem, random.clone(), 0, cfg, true)?.se_total,
                Method::RandNobsc => evaluate_candidate(&problem, random.clone(), 0, cfg, false)?.se_total,
            };
            Ok((method, se))
        })
        .collect()
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every `(value, trial)` pair. Values whose configuration violates
/// an invariant are skipped and reported. Results are independent of
/// thread scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.values.is_empty() {
        return Err(IsacError::Config("sweep needs at least one value".into()));
    }
    if spec.trials == 0 {
        return Err(IsacError::Config("sweep needs at least one trial".into()));
    }
    let needs_groups =
        spec.enumeration == Enumeration::Gss && spec.methods.iter().any(|m| matches!(m, Method::OptBsc | Method::OptNobsc));
    let mut records = Vec::new();
    let mut summary = Vec::new();
    let mut skipped = Vec::new();
    for &value in &spec.values {
        let cfg = match spec.variable.apply(&spec.base, value).and_then(|c| c.validate(needs_groups).map(|_| c)) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("skipping {} = {value}: {e}", spec.variable.as_str());
                skipped.push((value, e.to_string()));
                continue;
            }
        };
        let per_trial: Vec<Vec<(Method, f64)>> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let mut c = cfg.clone();
                c.seed = trial_seed(spec.base.seed, trial);
                run_trial(&c, &spec.methods, spec.enumeration)
            })
            .collect::<Result<_>>()?;
        for &method in &spec.methods {
            let ses: Vec<f64> = per_trial
                .iter()
                .map(|row| row.iter().find(|(m, _)| *m == method).map(|(_, se)| *se).expect("method evaluated"))
                .collect();
            for (trial, &se) in ses.iter().enumerate() {
                records.push(TrialRecord { value, method, trial, se });
            }
            let (mean, stderr) = mean_stderr(&ses);
            summary.push(SummaryRow { value, method, mean, stderr, trials: ses.len() });
        }
    }
    Ok(SweepResult { variable: spec.variable, records, summary, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        let mut cfg = SystemConfig::default();
        cfg.n = 8;
        cfg.k = 4;
        cfg.n_rf = 4;
        cfg.n_ds = 2;
        cfg.t = 2;
        cfg.l = 2;
        cfg.m = 4;
        cfg.g = 2;
        cfg.n_prime = 4;
        cfg.max_outer = 5;
        cfg.max_inner = 30;
        cfg
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("best".parse::<Method>().is_err());
    }

    #[test]
    fn sweep_var_rejects_fractional_counts() {
        assert!(SweepVar::K.apply(&small(), 4.5).is_err());
        assert_eq!(SweepVar::K.apply(&small(), 6.0).unwrap().k, 6);
        assert!((SweepVar::Snr.apply(&small(), 10.0).unwrap().sigma2 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn epsilon_one_fd_equals_comm_only() {
        let mut cfg = small();
        cfg.epsilon = 1.0;
        let out = run_trial(&cfg, &[Method::FdFull, Method::FdCommOnly], Enumeration::Gss).unwrap();
        assert_eq!(out[0].1, out[1].1);
    }

    #[test]
    fn infeasible_values_are_skipped() {
        let spec = SweepSpec {
            variable: SweepVar::K,
            values: vec![2.0, 4.0],
            trials: 2,
            methods: vec![Method::RandNobsc],
            base: small(),
            enumeration: Enumeration::Gss,
        };
        let res = run_sweep(&spec).unwrap();
        assert_eq!(res.skipped.len(), 1);
        assert_eq!(res.skipped[0].0, 2.0);
        assert_eq!(res.summary.len(), 1);
    }

    #[test]
    fn sweep_is_deterministic_and_csv_shaped() {
        let spec = SweepSpec {
            variable: SweepVar::Snr,
            values: vec![-5.0, 5.0],
            trials: 3,
            methods: vec![Method::FdFull, Method::OptNobsc, Method::RandBsc],
            base: small(),
            enumeration: Enumeration::Gss,
        };
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a.trials_csv(), b.trials_csv());
        assert_eq!(a.summary_csv(), b.summary_csv());
        assert_eq!(a.records.len(), 2 * 3 * 3);
        assert_eq!(a.summary_csv().lines().count(), 1 + 2 * 3);
        assert!(a.trials_csv().starts_with("sweep_var,value,method,trial,SE\nsnr,-5,fd_full,0,"));
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
