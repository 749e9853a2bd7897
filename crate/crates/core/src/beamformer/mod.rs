//! Hybrid analog/digital beamformer design for a fixed subarray.
//!
//! The design alternates between a manifold conjugate-gradient update of the
//! subcarrier-independent analog matrix ([`manifold`]), a least-squares
//! digital update optionally corrected for beam squint, and an orthogonal
//! Procrustes update of the auxiliary sensing matrix ([`procrustes`]). The
//! loop itself lives in [`design`].

pub mod design;
pub mod manifold;
pub mod procrustes;

pub use design::{design_hybrid, DesignOptions, HybridDesign};
pub use manifold::{
    euclidean_gradient, manifold_cg_step, optimize_analog, riemannian_gradient, AnalogProblem,
    CgParams, ManifoldState, StepOutcome,
};
pub use procrustes::procrustes_update;

use crate::linalg::{frob2, least_squares, pinv, svd, CMat, C64, RANK_TOL};

/// Analog matrix shared by all subcarriers plus one digital matrix per
/// subcarrier.
#[derive(Debug, Clone)]
pub struct HybridBeamformer {
    /// `K x N_RF`, entries of modulus `1/sqrt(K)`.
    pub analog: CMat,
    /// `N_RF x N_ds` per subcarrier.
    pub digital: Vec<CMat>,
}

impl HybridBeamformer {
    /// `F_RF F_BB[m]` for every subcarrier.
    pub fn precoders(&self) -> Vec<CMat> {
        self.digital.iter().map(|bb| &self.analog * bb).collect()
    }

    /// Rescales every digital matrix so that `||F_RF F_BB[m]||_F^2 = n_ds`.
    pub fn normalize_power(&mut self, n_ds: usize) {
        for bb in &mut self.digital {
            let p = frob2(&(&self.analog * &*bb));
            if p > 0.0 {
                *bb *= C64::new((n_ds as f64 / p).sqrt(), 0.0);
            }
        }
    }

    /// Largest deviation of an analog entry's modulus from `1/sqrt(K)`.
    pub fn modulus_error(&self) -> f64 {
        let target = 1.0 / (self.analog.nrows() as f64).sqrt();
        self.analog.iter().map(|z| (z.norm() - target).abs()).fold(0.0, f64::max)
    }
}

/// Joint sensing-communications targets and their auxiliary matrices.
#[derive(Debug, Clone)]
pub struct JscBeamformer {
    /// `K x N_ds` per subcarrier.
    pub per_subcarrier: Vec<CMat>,
    /// `T x N_ds` per subcarrier.
    pub aux: Vec<CMat>,
}

/// The `n_ds` dominant right singular vectors of `h`, as orthonormal
/// columns. Each column is rotated so its largest-magnitude entry is real
/// and positive. The flag reports rank below `n_ds`; missing directions are
/// completed with an orthonormal basis of the remaining space.
pub fn comms_beamformer_full(h: &CMat, n_ds: usize) -> (CMat, bool) {
    let n = h.ncols();
    let (_, sigma, v) = svd(h);
    let top = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma.iter().take(n_ds).filter(|&&s| top > 0.0 && s > RANK_TOL * top).count();
    let mut cols: Vec<nalgebra::DVector<C64>> = (0..rank).map(|i| v.column(i).into_owned()).collect();
    let deficient = rank < n_ds;
    let mut next = 0;
    while cols.len() < n_ds && next < n {
        let mut e = nalgebra::DVector::<C64>::zeros(n);
        e[next] = C64::new(1.0, 0.0);
        next += 1;
        for c in &cols {
            let proj = (c.adjoint() * &e)[(0, 0)];
            e -= c * proj;
        }
        let norm = e.norm();
        if norm > 1e-8 {
            cols.push(e / C64::new(norm, 0.0));
        }
    }
    let mut out = CMat::zeros(n, n_ds);
    for (j, mut c) in cols.into_iter().enumerate() {
        let pivot = c.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(C64::new(1.0, 0.0));
        if pivot.norm() > 0.0 {
            c *= pivot.conj() / pivot.norm();
        }
        out.set_column(j, &c);
    }
    if deficient {
        log::warn!("channel rank {rank} below N_ds = {n_ds}; completed with orthonormal directions");
    }
    (out, deficient)
}

/// `epsilon F_C + (1 - epsilon) F_S D`.
pub fn jsc_combine(fc: &CMat, fs: &CMat, d: &CMat, epsilon: f64) -> CMat {
    if epsilon == 1.0 {
        return fc.clone();
    }
    let sensing = fs * d;
    if epsilon == 0.0 {
        return sensing;
    }
    fc * C64::new(epsilon, 0.0) + sensing * C64::new(1.0 - epsilon, 0.0)
}

/// Least-squares digital matrix `pinv(F_RF) F_SC`. The flag reports a
/// rank-deficient analog matrix (minimum-norm solution returned).
pub fn baseband_ls(analog: &CMat, target: &CMat) -> (CMat, bool) {
    let (x, deficient) = least_squares(analog, target);
    if deficient {
        log::warn!("analog beamformer is rank deficient; using minimum-norm least squares");
    }
    (x, deficient)
}

/// Virtual subcarrier-dependent analog matrix: phases of `analog` scaled by
/// `eta_m`, modulus `1/sqrt(K)`. Phases are principal values in (-pi, pi].
pub fn sd_analog(analog: &CMat, eta_m: f64) -> CMat {
    let amp = 1.0 / (analog.nrows() as f64).sqrt();
    if eta_m == 1.0 {
        return analog.map(|z| C64::from_polar(amp, z.arg()));
    }
    analog.map(|z| C64::from_polar(amp, eta_m * principal_arg(z)))
}

/// Argument in (-pi, pi]; `atan2` returns -pi for negative reals with a
/// negative-zero imaginary part.
fn principal_arg(z: C64) -> f64 {
    let a = z.arg();
    if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// Beam-squint compensated digital matrix
/// `pinv(F_RF) F_RF_sd[m] F_BB_ls[m]`.
pub fn bsc_update_baseband(analog: &CMat, sd_analog: &CMat, ls_digital: &CMat) -> (CMat, bool) {
    let (p, deficient) = pinv(analog);
    (p * (sd_analog * ls_digital), deficient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian_matrix, eye};
    use crate::rng::rng_from;

    fn unit_modulus(rng: &mut crate::rng::SimRng, k: usize, n_rf: usize) -> CMat {
        use rand::Rng;
        let amp = 1.0 / (k as f64).sqrt();
        CMat::from_fn(k, n_rf, |_, _| C64::from_polar(amp, rng.random_range(-3.0..3.0)))
    }

    #[test]
    fn comms_beamformer_picks_dominant_axes() {
        let mut h = CMat::zeros(6, 5);
        for (i, s) in [5.0, 4.0, 3.0, 2.0, 1.0].iter().enumerate() {
            h[(i, i)] = C64::new(*s, 0.0);
        }
        let (f, deficient) = comms_beamformer_full(&h, 2);
        assert!(!deficient);
        assert!((f - eye(5, 2)).norm() < 1e-12);
    }

    #[test]
    fn comms_beamformer_is_orthonormal() {
        let mut rng = rng_from(31);
        let h = complex_gaussian_matrix(&mut rng, 4, 16, 1.0);
        let (f, _) = comms_beamformer_full(&h, 3);
        assert!((f.adjoint() * &f - eye(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn comms_beamformer_rank_one() {
        let mut rng = rng_from(32);
        let u = complex_gaussian_matrix(&mut rng, 5, 1, 1.0);
        let v = complex_gaussian_matrix(&mut rng, 7, 1, 1.0);
        let h = &u * v.adjoint();
        let (f, _) = comms_beamformer_full(&h, 1);
        let vn = &v / C64::new(v.norm(), 0.0);
        let overlap = (vn.adjoint() * &f)[(0, 0)].norm();
        assert!((overlap - 1.0).abs() < 1e-10);

        let (f2, deficient) = comms_beamformer_full(&h, 2);
        assert!(deficient);
        assert!((f2.adjoint() * &f2 - eye(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn jsc_combine_endpoints() {
        let mut rng = rng_from(33);
        let fc = complex_gaussian_matrix(&mut rng, 8, 3, 1.0);
        let fs = complex_gaussian_matrix(&mut rng, 8, 3, 1.0);
        let d = complex_gaussian_matrix(&mut rng, 3, 3, 1.0);
        assert_eq!(jsc_combine(&fc, &fs, &d, 1.0), fc);
        assert_eq!(jsc_combine(&fc, &fs, &d, 0.0), &fs * &d);
        let fixed = &fs * &d;
        assert!((jsc_combine(&fixed, &fs, &d, 0.5) - &fixed).norm() < 1e-12);
    }

    #[test]
    fn baseband_ls_examples() {
        let mut rng = rng_from(34);
        // Isometry: pseudoinverse is the adjoint.
        let q = {
            let g = complex_gaussian_matrix(&mut rng, 8, 4, 1.0);
            g.qr().q()
        };
        let target = complex_gaussian_matrix(&mut rng, 8, 3, 1.0);
        let (x, _) = baseband_ls(&q, &target);
        assert!((x - q.adjoint() * &target).norm() < 1e-10);

        let frf = unit_modulus(&mut rng, 8, 4);
        let x0 = complex_gaussian_matrix(&mut rng, 4, 3, 1.0);
        let (x, deficient) = baseband_ls(&frf, &(&frf * &x0));
        assert!(!deficient);
        assert!((x - x0).norm() < 1e-9);
    }

    #[test]
    fn baseband_ls_beats_random_candidates() {
        let mut rng = rng_from(35);
        let frf = unit_modulus(&mut rng, 8, 4);
        let target = complex_gaussian_matrix(&mut rng, 8, 3, 1.0);
        let (x, _) = baseband_ls(&frf, &target);
        let best = (&frf * &x - &target).norm();
        for _ in 0..1000 {
            let candidate = &x + complex_gaussian_matrix(&mut rng, 4, 3, 0.1);
            assert!(best <= (&frf * candidate - &target).norm() + 1e-12);
        }
    }

    #[test]
    fn sd_analog_examples() {
        let mut rng = rng_from(36);
        let frf = unit_modulus(&mut rng, 8, 4);
        assert!((sd_analog(&frf, 1.0) - &frf).norm() < 1e-14);
        let flat = sd_analog(&frf, 0.0);
        let amp = 1.0 / 8f64.sqrt();
        assert!(flat.iter().all(|z| (z - C64::new(amp, 0.0)).norm() < 1e-15));
        let sq = sd_analog(&frf, 1.04);
        assert!(sq.iter().all(|z| (z.norm() - amp).abs() < 1e-15));
        let neg_real = CMat::from_element(1, 1, C64::new(-1.0, -0.0));
        let scaled = sd_analog(&neg_real, 0.5);
        assert!((scaled[(0, 0)] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn bsc_update_examples() {
        let mut rng = rng_from(37);
        let frf = unit_modulus(&mut rng, 8, 4);
        let ls = complex_gaussian_matrix(&mut rng, 4, 3, 1.0);
        let (x, _) = bsc_update_baseband(&frf, &sd_analog(&frf, 1.0), &ls);
        assert!((x - &ls).norm() < 1e-10);

        let square = unit_modulus(&mut rng, 6, 6);
        let sd = sd_analog(&square, 1.03);
        let ls6 = complex_gaussian_matrix(&mut rng, 6, 2, 1.0);
        let (x, _) = bsc_update_baseband(&square, &sd, &ls6);
        assert!((&square * x - &sd * &ls6).norm() < 1e-9);

        let sd8 = sd_analog(&frf, 0.97);
        let (x, _) = bsc_update_baseband(&frf, &sd8, &ls);
        let goal = &sd8 * &ls;
        let best = (&frf * &x - &goal).norm();
        for _ in 0..1000 {
            let candidate = &x + complex_gaussian_matrix(&mut rng, 4, 3, 0.1);
            assert!(best <= (&frf * candidate - &goal).norm() + 1e-12);
        }
    }

    #[test]
    fn power_normalization_hits_target() {
        let mut rng = rng_from(38);
        let mut bf = HybridBeamformer {
            analog: unit_modulus(&mut rng, 8, 4),
            digital: (0..3).map(|_| complex_gaussian_matrix(&mut rng, 4, 2, 1.0)).collect(),
        };
        bf.normalize_power(2);
        for p in bf.precoders() {
            assert!((frob2(&p) - 2.0).abs() < 1e-12);
        }
    }
}
