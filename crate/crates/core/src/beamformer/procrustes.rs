//! Orthogonal Procrustes update of the auxiliary sensing matrix.

use crate::linalg::{svd, CMat, C64};

/// Minimizer of `||A - (1 - epsilon) F_S D||_F` over `D D^H = I_T`, where
/// `A = hybrid - epsilon * fc`.
///
/// With `F_S^H A = U S V^H` the solution is `U V^H`. For `epsilon = 1` the
/// sensing term vanishes and `previous` is returned unchanged.
pub fn procrustes_update(fs: &CMat, hybrid: &CMat, fc: &CMat, epsilon: f64, previous: &CMat) -> CMat {
    if epsilon >= 1.0 {
        return previous.clone();
    }
    let a = hybrid - fc * C64::new(epsilon, 0.0);
    let x = fs.adjoint() * a;
    let (u, _, v) = svd(&x);
    let t = fs.ncols();
    u.columns(0, t) * v.columns(0, t).adjoint()
}
