//! Scenario realization, wideband THz channel, and sensing model.

use std::f64::consts::PI;

use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{IsacError, Result};
use crate::linalg::{complex_gaussian, complex_gaussian_matrix, CMat, CVec, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Frequency of subcarrier `m` (1-based), Hz.
pub fn subcarrier_frequency(m: usize, cfg: &SystemConfig) -> Result<f64> {
    if m == 0 || m > cfg.m {
        return Err(IsacError::Index(format!("subcarrier {m} outside 1..={}", cfg.m)));
    }
    let offset = (m as f64 - 1.0) - (cfg.m as f64 - 1.0) / 2.0;
    Ok(cfg.fc + cfg.bandwidth / cfg.m as f64 * offset)
}

/// Beam-squint ratio `f_m / f_c` of subcarrier `m` (1-based).
pub fn eta(m: usize, cfg: &SystemConfig) -> Result<f64> {
    Ok(subcarrier_frequency(m, cfg)? / cfg.fc)
}

/// All subcarrier frequencies, indexed from 0.
pub fn subcarrier_frequencies(cfg: &SystemConfig) -> Vec<f64> {
    (1..=cfg.m)
        .map(|m| subcarrier_frequency(m, cfg).expect("in range"))
        .collect()
}

/// All squint ratios, indexed from 0.
pub fn subcarrier_etas(cfg: &SystemConfig) -> Vec<f64> {
    subcarrier_frequencies(cfg).iter().map(|f| f / cfg.fc).collect()
}

/// Half-wavelength ULA steering vector at subcarrier ratio `eta_m`:
/// entry `n` is `exp(-j pi n eta_m sin(theta)) / sqrt(n_elem)`.
pub fn steering_vector(theta: f64, n_elem: usize, eta_m: f64) -> CVec {
    let amp = 1.0 / (n_elem as f64).sqrt();
    let phase_step = -PI * eta_m * theta.sin();
    CVec::from_fn(n_elem, |n, _| C64::from_polar(amp, phase_step * n as f64))
}

/// Line-of-sight path gain at frequency `freq` over `distance`.
pub fn los_gain(freq: f64, distance: f64, k_abs: f64) -> Result<C64> {
    if !(distance > 0.0) {
        return Err(IsacError::Domain(format!("path distance must be positive, got {distance}")));
    }
    if !(freq > 0.0) {
        return Err(IsacError::Domain(format!("frequency must be positive, got {freq}")));
    }
    let spread = SPEED_OF_LIGHT / (4.0 * PI * freq * distance);
    let absorb = (-0.5 * k_abs * distance).exp();
    Ok(C64::from_polar(spread * absorb, -2.0 * PI * freq * distance / SPEED_OF_LIGHT))
}

/// Expected NLoS path power `E|alpha|^2`.
pub fn nlos_variance(freq: f64, distance: f64, k_abs: f64, delay: f64, ray_decay: f64) -> Result<f64> {
    if !(ray_decay > 0.0) {
        return Err(IsacError::Domain(format!("ray decay must be positive, got {ray_decay}")));
    }
    let los = los_gain(freq, distance, k_abs)?;
    Ok(los.norm_sqr() * (-delay / ray_decay).exp())
}

/// One NLoS gain draw: zero-mean circular complex Gaussian with the
/// expected power of [`nlos_variance`].
pub fn nlos_gain<R: Rng + ?Sized>(
    freq: f64,
    distance: f64,
    k_abs: f64,
    delay: f64,
    ray_decay: f64,
    rng: &mut R,
) -> Result<C64> {
    let var = nlos_variance(freq, distance, k_abs, delay, ray_decay)?;
    Ok(complex_gaussian(rng, var))
}

/// Realized geometry and fading of one ISAC scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Target directions, radians.
    pub target_directions: Vec<f64>,
    /// User-side arrival angles, radians.
    pub path_doas: Vec<f64>,
    /// Transmit-side departure angles, radians.
    pub path_dods: Vec<f64>,
    /// Times of arrival, seconds.
    pub path_delays: Vec<f64>,
    /// Transmission distances, meters.
    pub path_distances: Vec<f64>,
    /// Unit-power small-scale fading per path; scaled by the NLoS power law
    /// on every subcarrier.
    pub path_fading: Vec<C64>,
    pub ray_decay: f64,
    pub k_abs_per_subcarrier: Vec<f64>,
    /// Target reflection coefficients.
    pub target_rcs: Vec<C64>,
}

impl Scenario {
    /// Draws directions uniformly in `[angle_min_deg, angle_max_deg]`,
    /// distances uniformly in `[distance_min, distance_max]`, delays as
    /// distance over the speed of light, and unit-power circular Gaussian
    /// fading and reflection coefficients.
    pub fn generate<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Scenario {
        let lo = cfg.angle_min_deg.to_radians();
        let hi = cfg.angle_max_deg.to_radians();
        let angle = |rng: &mut R| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let target_directions = (0..cfg.t).map(|_| angle(rng)).collect();
        let path_doas = (0..cfg.l).map(|_| angle(rng)).collect();
        let path_dods = (0..cfg.l).map(|_| angle(rng)).collect();
        let path_distances: Vec<f64> = (0..cfg.l)
            .map(|_| {
                if cfg.distance_max > cfg.distance_min {
                    rng.random_range(cfg.distance_min..=cfg.distance_max)
                } else {
                    cfg.distance_min
                }
            })
            .collect();
        let path_delays = path_distances.iter().map(|d| d / SPEED_OF_LIGHT).collect();
        let path_fading = (0..cfg.l).map(|_| complex_gaussian(rng, 1.0)).collect();
        let target_rcs = (0..cfg.t).map(|_| complex_gaussian(rng, 1.0)).collect();
        Scenario {
            target_directions,
            path_doas,
            path_dods,
            path_delays,
            path_distances,
            path_fading,
            ray_decay: cfg.ray_decay,
            k_abs_per_subcarrier: vec![cfg.k_abs; cfg.m],
            target_rcs,
        }
    }

    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        let l = cfg.l;
        let lens = [
            ("path_doas", self.path_doas.len(), l),
            ("path_dods", self.path_dods.len(), l),
            ("path_delays", self.path_delays.len(), l),
            ("path_distances", self.path_distances.len(), l),
            ("path_fading", self.path_fading.len(), l),
            ("target_directions", self.target_directions.len(), cfg.t),
            ("target_rcs", self.target_rcs.len(), cfg.t),
            ("k_abs_per_subcarrier", self.k_abs_per_subcarrier.len(), cfg.m),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(IsacError::Dimension(format!("{name} has {got} entries, expected {want}")));
            }
        }
        Ok(())
    }
}

/// Per-subcarrier channel matrices and the path gains that built them.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// `N' x N` matrix per subcarrier.
    pub matrices: Vec<CMat>,
    /// `L x M` path gains.
    pub path_gains: CMat,
}

impl ChannelSet {
    /// Columns `rows` of every subcarrier matrix, i.e. `H[m] Q`.
    pub fn select(&self, antennas: &[usize]) -> Vec<CMat> {
        self.matrices.iter().map(|h| h.select_columns(antennas)).collect()
    }
}

/// Path gain matrix `alpha[l, m]`, deterministic in `(scn, cfg)`.
pub fn path_gains(scn: &Scenario, cfg: &SystemConfig) -> Result<CMat> {
    scn.check(cfg)?;
    let freqs = subcarrier_frequencies(cfg);
    let gain = |l: usize, f: f64, k_abs: f64| -> Result<C64> {
        let d = scn.path_distances[l];
        if cfg.los && l == 0 {
            los_gain(f, d, k_abs)
        } else {
            let var = nlos_variance(f, d, k_abs, scn.path_delays[l], scn.ray_decay)?;
            let delay_phase = C64::from_polar(1.0, -2.0 * PI * f * scn.path_delays[l]);
            Ok(scn.path_fading[l] * var.sqrt() * delay_phase)
        }
    };
    let mut alpha = CMat::zeros(cfg.l, cfg.m);
    for l in 0..cfg.l {
        for (m, &f) in freqs.iter().enumerate() {
            alpha[(l, m)] = gain(l, f, scn.k_abs_per_subcarrier[m])?;
        }
    }
    if cfg.normalize_gains {
        let mut power = 0.0;
        for l in 0..cfg.l {
            power += if cfg.los && l == 0 {
                los_gain(cfg.fc, scn.path_distances[l], cfg.k_abs)?.norm_sqr()
            } else {
                nlos_variance(cfg.fc, scn.path_distances[l], cfg.k_abs, scn.path_delays[l], scn.ray_decay)?
            };
        }
        let scale = (cfg.l as f64 / power).sqrt();
        alpha *= C64::new(scale, 0.0);
    }
    Ok(alpha)
}

/// `H[m] = sqrt(N' N / L) sum_l alpha[l,m] a'(phi_l) a(theta_l)^H`.
///
/// The transmit steering uses the physical angle unless
/// `cfg.channel_squint` is set, in which case it uses the subcarrier's
/// spatial direction.
pub fn generate_channel(scn: &Scenario, cfg: &SystemConfig) -> Result<ChannelSet> {
    let alpha = path_gains(scn, cfg)?;
    let etas = subcarrier_etas(cfg);
    let scale = ((cfg.n_prime * cfg.n) as f64 / cfg.l as f64).sqrt();
    let rx: Vec<CVec> = scn.path_doas.iter().map(|&phi| steering_vector(phi, cfg.n_prime, 1.0)).collect();
    let matrices = (0..cfg.m)
        .map(|m| {
            let tx_eta = if cfg.channel_squint { etas[m] } else { 1.0 };
            let mut h = CMat::zeros(cfg.n_prime, cfg.n);
            for l in 0..cfg.l {
                let tx = steering_vector(scn.path_dods[l], cfg.n, tx_eta);
                h += (&rx[l] * tx.adjoint()) * (alpha[(l, m)] * scale);
            }
            h
        })
        .collect();
    Ok(ChannelSet { matrices, path_gains: alpha })
}

/// Sensing-only full-array beamformer `[a(Phi_1), ..., a(Phi_T)]`.
pub fn sensing_steering_matrix(directions: &[f64], n: usize) -> CMat {
    let mut out = CMat::zeros(n, directions.len());
    for (t, &phi) in directions.iter().enumerate() {
        out.set_column(t, &steering_vector(phi, n, 1.0));
    }
    out
}

/// Echo from the targets observed on the antennas `rows`:
/// the selected rows of `sum_t beta_t a(Phi_t) a(Phi_t)^T X` plus
/// `len(rows) x T_S` circular Gaussian noise of variance `sigma2`.
pub fn echo_signal<R: Rng + ?Sized>(
    probing: &CMat,
    scn: &Scenario,
    rows: &[usize],
    sigma2: f64,
    rng: &mut R,
) -> Result<CMat> {
    let n = probing.nrows();
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(IsacError::Dimension(format!("antenna {bad} outside an array of {n}")));
    }
    let mut response = CMat::zeros(n, n);
    for (phi, beta) in scn.target_directions.iter().zip(&scn.target_rcs) {
        let a = steering_vector(*phi, n, 1.0);
        response += (&a * a.transpose()) * *beta;
    }
    let clean = (response * probing).select_rows(rows);
    let noise = complex_gaussian_matrix(rng, rows.len(), probing.ncols(), sigma2);
    Ok(clean + noise)
}
