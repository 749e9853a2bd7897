//! Array gain between a reference subarray and a squinted candidate.

use std::f64::consts::PI;

use super::SubarrayConfig;
use crate::linalg::C64;

/// `sin(N pi a) / (N sin(pi a))`, continuous at integer `a` where it equals
/// `(-1)^(a (N - 1))`.
pub fn dirichlet_sinc(a: f64, n: usize) -> f64 {
    let nf = n as f64;
    let den = nf * (PI * a).sin();
    let nearest = a.round();
    if (a - nearest).abs() < 1e-12 || den.abs() < 1e-300 {
        let parity = (nearest as i64).rem_euclid(2) * ((n as i64 - 1).rem_euclid(2));
        return if parity == 1 { -1.0 } else { 1.0 };
    }
    (nf * PI * a).sin() / den
}

/// `|u_ref(theta)^H u_p(vartheta)|^2 / N^2`, where `u_ref` carries the
/// spatial direction of subcarrier ratio `eta_m` on `p_star` and `u_p` the
/// physical direction `vartheta` on `p`. Entries are unit modulus.
pub fn array_gain(theta: f64, vartheta: f64, eta_m: f64, p: &SubarrayConfig, p_star: &SubarrayConfig) -> f64 {
    let n = p.n as f64;
    let phase = |idx: usize, dir: f64, eta: f64| -PI * eta * dir.sin() * idx as f64;
    let mut acc = C64::new(0.0, 0.0);
    // Only antennas present in both subarrays contribute to the inner product.
    for &i in &p_star.antenna_indices {
        if p.antenna_indices.binary_search(&i).is_ok() {
            let u_ref = C64::from_polar(1.0, phase(i, theta, eta_m));
            let u_p = C64::from_polar(1.0, phase(i, vartheta, 1.0));
            acc += u_ref.conj() * u_p;
        }
    }
    acc.norm_sqr() / (n * n)
}

/// Full-array closed form `|zeta(mu)|^2` with
/// `mu = (sin(vartheta) - eta_m sin(theta)) / 2`.
pub fn array_gain_closed_form(theta: f64, vartheta: f64, eta_m: f64, n: usize) -> f64 {
    let mu = (vartheta.sin() - eta_m * theta.sin()) / 2.0;
    dirichlet_sinc(mu, n).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_examples() {
        assert_eq!(dirichlet_sinc(0.0, 16), 1.0);
        assert!(dirichlet_sinc(0.5, 2).abs() < 1e-15);
        assert_eq!(dirichlet_sinc(1.0, 4), -1.0);
        assert_eq!(dirichlet_sinc(1.0, 5), 1.0);
        assert_eq!(dirichlet_sinc(-3.0, 4), -1.0);
        assert_eq!(dirichlet_sinc(2.0, 4), 1.0);
    }

    #[test]
    fn sinc_is_continuous_at_integers() {
        for n in [2, 3, 4, 7, 16] {
            for k in -3i32..=3 {
                let a = k as f64;
                let limit = dirichlet_sinc(a, n);
                assert!((dirichlet_sinc(a + 1e-7, n) - limit).abs() < 1e-5, "N={n} k={k}");
            }
        }
    }

    #[test]
    fn sinc_bounded() {
        for n in [1, 2, 5, 16, 64] {
            for i in -4000..=4000 {
                assert!(dirichlet_sinc(i as f64 * 1e-3 + 1e-4, n).abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn full_array_gain_matches_closed_form() {
        let full = SubarrayConfig::full(16);
        let theta = 40f64.to_radians();
        for eta in [0.95, 1.0, 1.049] {
            for i in 0..=1800 {
                let v = (i as f64 * 0.1).to_radians();
                let g = array_gain(theta, v, eta, &full, &full);
                assert!((g - array_gain_closed_form(theta, v, eta, 16)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn peak_is_one_at_squinted_direction() {
        let full = SubarrayConfig::full(8);
        let theta = 0.5f64;
        let eta = 1.02;
        let v = (eta * theta.sin()).asin();
        assert!((array_gain(theta, v, eta, &full, &full) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subarray_gain_bounded_by_overlap() {
        let a = SubarrayConfig::from_indices(vec![0, 1, 2, 3], 8).unwrap();
        let b = SubarrayConfig::from_indices(vec![2, 3, 4, 5], 8).unwrap();
        let g = array_gain(0.3, 0.3, 1.0, &a, &b);
        assert!((g - (2.0f64 / 8.0).powi(2)).abs() < 1e-12);
        assert!((array_gain(0.3, 0.3, 1.0, &a, &a) - 0.25).abs() < 1e-12);
    }
}
