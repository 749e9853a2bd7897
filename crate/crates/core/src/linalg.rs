//! Thin wrappers over `nalgebra` for the complex-matrix kernels used
//! throughout the crate.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative singular-value threshold below which a direction counts as null.
pub const RANK_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Thin SVD with singular values in non-increasing order. Returns
/// `(U, sigma, V)` so that `a = U diag(sigma) V^H`.
pub fn svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let mut dec = SVD::new(a.clone(), true, true);
    dec.sort_by_singular_values();
    let u = dec.u.expect("U requested");
    let v = dec.v_t.expect("V^H requested").adjoint();
    (u, dec.singular_values.iter().copied().collect(), v)
}

/// Numerical rank relative to the largest singular value.
pub fn numerical_rank(sigma: &[f64]) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// Moore-Penrose pseudoinverse through the SVD. The flag is set when `a` is
/// not of full column rank, in which case the result is the minimum-norm
/// least-squares operator.
pub fn pinv(a: &CMat) -> (CMat, bool) {
    let (u, sigma, v) = svd(a);
    let rank = numerical_rank(&sigma);
    let mut out = CMat::zeros(a.ncols(), a.nrows());
    for i in 0..rank {
        let scaled = v.column(i) * C64::new(1.0 / sigma[i], 0.0);
        out += scaled * u.column(i).adjoint();
    }
    (out, rank < a.ncols())
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares(a: &CMat, b: &CMat) -> (CMat, bool) {
    let (p, deficient) = pinv(a);
    (&p * b, deficient)
}

pub fn frob2(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `log2 det(a)` for a Hermitian positive-definite matrix. The input is
/// symmetrized first to remove rounding drift.
pub fn log2_det_hpd(a: &CMat) -> f64 {
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    match sym.clone().cholesky() {
        Some(ch) => {
            let l = ch.l();
            2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() / std::f64::consts::LN_2
        }
        None => {
            // Fallback for matrices that are PSD only up to rounding.
            let eig = nalgebra::SymmetricEigen::new(sym);
            eig.eigenvalues
                .iter()
                .map(|&l| l.max(f64::MIN_POSITIVE).log2())
                .sum()
        }
    }
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng, variance))
}

/// `I_{rows x cols}`: ones on the main diagonal, zeros elsewhere.
pub fn eye(rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| if i == j { ONE } else { ZERO })
}

/// Column-wise block concatenation `[A_1, ..., A_M]`.
pub fn hstack(blocks: &[CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        out.view_mut((0, offset), (rows, b.ncols())).copy_from(b);
        offset += b.ncols();
    }
    out
}

/// Inverse of [`hstack`] for equal-width blocks.
pub fn hsplit(a: &CMat, width: usize) -> Vec<CMat> {
    (0..a.ncols() / width)
        .map(|m| a.columns(m * width, width).into_owned())
        .collect()
}

/// Maximum entrywise deviation of `a a^H` from the identity.
pub fn semi_unitary_error(a: &CMat) -> f64 {
    let g = a * a.adjoint();
    let n = g.nrows();
    (&g - eye(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn svd_orders_and_reconstructs() {
        let mut rng = rng_from(3);
        let a = complex_gaussian_matrix(&mut rng, 5, 4, 1.0);
        let (u, s, v) = svd(&a);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let sig = CMat::from_diagonal(&CVec::from_iterator(
            s.len(),
            s.iter().map(|&x| C64::new(x, 0.0)),
        ));
        let back = &u * sig * v.adjoint();
        assert!((back - a).norm() < 1e-10);
    }

    #[test]
    fn pinv_flags_rank_deficiency() {
        let mut rng = rng_from(4);
        let col = complex_gaussian_matrix(&mut rng, 4, 1, 1.0);
        let a = hstack(&[col.clone(), col]);
        let (_, deficient) = pinv(&a);
        assert!(deficient);
        let b = complex_gaussian_matrix(&mut rng, 4, 2, 1.0);
        assert!(!pinv(&b).1);
    }

    #[test]
    fn logdet_of_diagonal() {
        let d = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(2.0, 0.0),
            C64::new(4.0, 0.0),
        ]));
        assert!((log2_det_hpd(&d) - 3.0).abs() < 1e-12);
    }
}
