//! System configuration and its flat `key = value` text form.
//!
//! Every key accepted by [`SystemConfig::set`] is listed in [`KEYS`]. Lines
//! starting with `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{IsacError, Result};

/// How the auxiliary sensing matrix is constrained during hybrid design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcrustesMode {
    /// One `T x N_ds` semi-unitary block per subcarrier (`D[m] D[m]^H = I_T`).
    PerSubcarrier,
    /// A single `T x M N_ds` semi-unitary matrix spanning all subcarriers.
    Stacked,
}

impl ProcrustesMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcrustesMode::PerSubcarrier => "per_subcarrier",
            ProcrustesMode::Stacked => "stacked",
        }
    }
}

impl FromStr for ProcrustesMode {
    type Err = IsacError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_subcarrier" => Ok(ProcrustesMode::PerSubcarrier),
            "stacked" => Ok(ProcrustesMode::Stacked),
            other => Err(IsacError::Config(format!(
                "procrustes must be per_subcarrier or stacked, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas in the full array.
    pub n: usize,
    /// User receive antennas.
    pub n_prime: usize,
    /// Selected antennas.
    pub k: usize,
    /// Subcarriers.
    pub m: usize,
    pub n_rf: usize,
    pub n_ds: usize,
    /// Sensing targets.
    pub t: usize,
    /// User multipath components.
    pub l: usize,
    /// Carrier frequency, Hz.
    pub fc: f64,
    /// Bandwidth, Hz.
    pub bandwidth: f64,
    /// Communications/sensing trade-off weight, 1 = communications only.
    pub epsilon: f64,
    /// Noise variance (linear). SNR = 1 / sigma2.
    pub sigma2: f64,
    /// Antennas per group for grouped selection.
    pub g: usize,
    /// Sensing snapshots.
    pub t_s: usize,
    pub seed: u64,

    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub distance_min: f64,
    pub distance_max: f64,
    /// Ray decay factor, seconds.
    pub ray_decay: f64,
    /// Molecular absorption coefficient applied on every subcarrier, 1/m.
    pub k_abs: f64,
    /// Treat the first user path as line-of-sight.
    pub los: bool,
    /// Apply the subcarrier-dependent spatial direction to the transmit-side
    /// steering vectors of the channel (off: physical-angle channel).
    pub channel_squint: bool,
    /// Rescale path gains so the mean path power at the carrier is one.
    pub normalize_gains: bool,

    pub bsc: bool,
    pub procrustes: ProcrustesMode,
    pub max_outer: usize,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub inner_tol: f64,
    /// Largest candidate count accepted by full enumeration.
    pub enumeration_budget: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n: 16,
            n_prime: 16,
            k: 8,
            m: 16,
            n_rf: 8,
            n_ds: 3,
            t: 3,
            l: 3,
            fc: 300e9,
            bandwidth: 30e9,
            epsilon: 0.5,
            sigma2: 1.0,
            g: 4,
            t_s: 256,
            seed: 1,
            angle_min_deg: 30.0,
            angle_max_deg: 150.0,
            distance_min: 5.0,
            distance_max: 20.0,
            ray_decay: 20e-9,
            k_abs: 0.0,
            los: false,
            channel_squint: false,
            normalize_gains: true,
            bsc: true,
            procrustes: ProcrustesMode::PerSubcarrier,
            max_outer: 30,
            outer_tol: 1e-4,
            max_inner: 200,
            inner_tol: 1e-8,
            enumeration_budget: 100_000,
        }
    }
}

/// Documented configuration keys, in the order they are written out.
pub const KEYS: &[(&str, &str)] = &[
    ("N", "transmit antennas in the full array"),
    ("N_prime", "user antennas"),
    ("K", "selected antennas"),
    ("M", "subcarriers"),
    ("N_RF", "RF chains"),
    ("N_ds", "data streams"),
    ("T", "sensing targets"),
    ("L", "user paths"),
    ("fc", "carrier frequency [Hz]"),
    ("bandwidth", "bandwidth [Hz]"),
    ("epsilon", "trade-off weight in [0,1]"),
    ("sigma2", "noise variance (linear)"),
    ("snr", "SNR in dB; sets sigma2 = 10^(-snr/10)"),
    ("G", "group size for grouped selection"),
    ("T_S", "sensing snapshots"),
    ("seed", "RNG seed"),
    ("angle_min_deg", "lower bound of drawn directions [deg]"),
    ("angle_max_deg", "upper bound of drawn directions [deg]"),
    ("distance_min", "lower bound of path distances [m]"),
    ("distance_max", "upper bound of path distances [m]"),
    ("ray_decay", "ray decay factor [s]"),
    ("k_abs", "molecular absorption coefficient [1/m]"),
    ("los", "first user path is line-of-sight"),
    ("channel_squint", "squinted transmit steering in the channel"),
    ("normalize_gains", "unit mean path power at the carrier"),
    ("bsc", "beam-squint compensation of the digital beamformers"),
    ("procrustes", "per_subcarrier | stacked"),
    ("max_outer", "alternating iterations"),
    ("outer_tol", "alternating convergence tolerance on the residual"),
    ("max_inner", "manifold conjugate-gradient iterations"),
    ("inner_tol", "manifold gradient-norm tolerance"),
    ("enumeration_budget", "largest candidate count for full enumeration"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| IsacError::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(IsacError::Config(format!("cannot parse {key} = {value:?} as a boolean"))),
    }
}

impl SystemConfig {
    pub fn snr_db(&self) -> f64 {
        -10.0 * self.sigma2.log10()
    }

    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.sigma2 = 10f64.powf(-snr_db / 10.0);
    }

    /// Sets one documented key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "N" => self.n = parse(key, v)?,
            "N_prime" => self.n_prime = parse(key, v)?,
            "K" => self.k = parse(key, v)?,
            "M" => self.m = parse(key, v)?,
            "N_RF" => self.n_rf = parse(key, v)?,
            "N_ds" => self.n_ds = parse(key, v)?,
            "T" => self.t = parse(key, v)?,
            "L" => self.l = parse(key, v)?,
            "fc" => self.fc = parse(key, v)?,
            "bandwidth" => self.bandwidth = parse(key, v)?,
            "epsilon" => self.epsilon = parse(key, v)?,
            "sigma2" => self.sigma2 = parse(key, v)?,
            "snr" => self.set_snr_db(parse(key, v)?),
            "G" => self.g = parse(key, v)?,
            "T_S" => self.t_s = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "angle_min_deg" => self.angle_min_deg = parse(key, v)?,
            "angle_max_deg" => self.angle_max_deg = parse(key, v)?,
            "distance_min" => self.distance_min = parse(key, v)?,
            "distance_max" => self.distance_max = parse(key, v)?,
            "ray_decay" => self.ray_decay = parse(key, v)?,
            "k_abs" => self.k_abs = parse(key, v)?,
            "los" => self.los = parse_bool(key, v)?,
            "channel_squint" => self.channel_squint = parse_bool(key, v)?,
            "normalize_gains" => self.normalize_gains = parse_bool(key, v)?,
            "bsc" => self.bsc = parse_bool(key, v)?,
            "procrustes" => self.procrustes = v.parse()?,
            "max_outer" => self.max_outer = parse(key, v)?,
            "outer_tol" => self.outer_tol = parse(key, v)?,
            "max_inner" => self.max_inner = parse(key, v)?,
            "inner_tol" => self.inner_tol = parse(key, v)?,
            "enumeration_budget" => self.enumeration_budget = parse(key, v)?,
            other => return Err(IsacError::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                IsacError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Writes every key, one `key = value` per line, with `prefix` in front.
    pub fn to_kv_string(&self, prefix: &str) -> String {
        let mut s = String::new();
        for (key, _) in KEYS.iter().filter(|(k, _)| *k != "snr") {
            let value = self.value_of(key);
            let _ = writeln!(s, "{prefix}{key} = {value}");
        }
        s
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "N" => self.n.to_string(),
            "N_prime" => self.n_prime.to_string(),
            "K" => self.k.to_string(),
            "M" => self.m.to_string(),
            "N_RF" => self.n_rf.to_string(),
            "N_ds" => self.n_ds.to_string(),
            "T" => self.t.to_string(),
            "L" => self.l.to_string(),
            "fc" => format!("{:e}", self.fc),
            "bandwidth" => format!("{:e}", self.bandwidth),
            "epsilon" => self.epsilon.to_string(),
            "sigma2" => format!("{:e}", self.sigma2),
            "snr" => format!("{}", self.snr_db()),
            "G" => self.g.to_string(),
            "T_S" => self.t_s.to_string(),
            "seed" => self.seed.to_string(),
            "angle_min_deg" => self.angle_min_deg.to_string(),
            "angle_max_deg" => self.angle_max_deg.to_string(),
            "distance_min" => self.distance_min.to_string(),
            "distance_max" => self.distance_max.to_string(),
            "ray_decay" => format!("{:e}", self.ray_decay),
            "k_abs" => self.k_abs.to_string(),
            "los" => self.los.to_string(),
            "channel_squint" => self.channel_squint.to_string(),
            "normalize_gains" => self.normalize_gains.to_string(),
            "bsc" => self.bsc.to_string(),
            "procrustes" => self.procrustes.as_str().to_string(),
            "max_outer" => self.max_outer.to_string(),
            "outer_tol" => format!("{:e}", self.outer_tol),
            "max_inner" => self.max_inner.to_string(),
            "inner_tol" => format!("{:e}", self.inner_tol),
            "enumeration_budget" => self.enumeration_budget.to_string(),
            _ => unreachable!("undocumented key {key}"),
        }
    }

    /// Checks the structural invariants. `grouped` additionally requires
    /// `K` to be a multiple of `G`.
    pub fn validate(&self, grouped: bool) -> Result<()> {
        let fail = |msg: String| Err(IsacError::Config(msg));
        let counts = [
            ("N", self.n),
            ("N_prime", self.n_prime),
            ("K", self.k),
            ("M", self.m),
            ("N_RF", self.n_rf),
            ("N_ds", self.n_ds),
            ("T", self.t),
            ("L", self.l),
            ("G", self.g),
            ("T_S", self.t_s),
            ("max_outer", self.max_outer),
        ];
        for (name, v) in counts {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        if self.t + self.l > self.n_rf {
            return fail(format!(
                "T + L <= N_RF violated (T + L = {}, N_RF = {}); the array must form T + L beams",
                self.t + self.l,
                self.n_rf
            ));
        }
        if self.n_rf > self.k {
            return fail(format!(
                "N_RF <= K violated (N_RF = {}, K = {}); constraint T + L <= N_RF <= K <= N",
                self.n_rf, self.k
            ));
        }
        if self.k > self.n {
            return fail(format!("K <= N violated (K = {}, N = {})", self.k, self.n));
        }
        if self.n_ds > self.n_rf {
            return fail(format!("N_ds <= N_RF violated (N_ds = {}, N_RF = {})", self.n_ds, self.n_rf));
        }
        if self.n_ds > self.n_prime.min(self.n) {
            return fail(format!(
                "N_ds <= min(N_prime, N) violated (N_ds = {})",
                self.n_ds
            ));
        }
        if self.n % self.g != 0 {
            return fail(format!("N must be divisible by G (N = {}, G = {})", self.n, self.g));
        }
        if grouped && self.k % self.g != 0 {
            return fail(format!(
                "K must be divisible by G for grouped selection (K = {}, G = {})",
                self.k, self.g
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return fail(format!("epsilon must lie in [0,1], got {}", self.epsilon));
        }
        if !(self.fc > 0.0) {
            return fail(format!("fc must be positive, got {}", self.fc));
        }
        if !(self.bandwidth >= 0.0) {
            return fail(format!("bandwidth must be non-negative, got {}", self.bandwidth));
        }
        if !(self.sigma2 > 0.0) {
            return fail(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if !(self.distance_min > 0.0 && self.distance_max >= self.distance_min) {
            return fail("distances must satisfy 0 < distance_min <= distance_max".into());
        }
        if !(self.ray_decay > 0.0) {
            return fail("ray_decay must be positive".into());
        }
        if self.k_abs < 0.0 {
            return fail("k_abs must be non-negative".into());
        }
        if self.angle_min_deg > self.angle_max_deg {
            return fail("angle_min_deg must not exceed angle_max_deg".into());
        }
        match self.procrustes {
            ProcrustesMode::PerSubcarrier if self.t > self.n_ds => fail(format!(
                "procrustes = per_subcarrier needs T <= N_ds (T = {}, N_ds = {})",
                self.t, self.n_ds
            )),
            ProcrustesMode::Stacked if self.t > self.m * self.n_ds => fail(format!(
                "procrustes = stacked needs T <= M N_ds (T = {}, M N_ds = {})",
                self.t,
                self.m * self.n_ds
            )),
            _ => Ok(()),
        }
    }
}
