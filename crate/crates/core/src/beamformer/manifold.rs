//! Conjugate gradient on the product of complex circles of radius
//! `1/sqrt(K)`.
//!
//! The cost is `||F_RF F_BB - F_SC||_F^2` with the digital and target
//! matrices stacked horizontally across subcarriers. Its gradient with
//! respect to `vec(F_RF)` is `-2 B^H (f_SC - B f)` for
//! `B = F_BB^T kron I_K`; the Kronecker matrix is never formed because
//! `B^H r = vec(R F_BB^H)`.

use crate::linalg::{CMat, CVec, C64};

/// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;
/// Backtracking contraction.
const BACKTRACK: f64 = 0.5;
/// Cap on halvings inside one line search.
const MAX_BACKTRACKS: usize = 60;

/// Fixed data of the analog subproblem.
#[derive(Debug, Clone)]
pub struct AnalogProblem {
    /// `N_RF x (M N_ds)`.
    pub digital: CMat,
    /// `K x (M N_ds)`.
    pub target: CMat,
}

impl AnalogProblem {
    pub fn new(digital: CMat, target: CMat) -> Self {
        assert_eq!(digital.ncols(), target.ncols(), "digital/target width mismatch");
        Self { digital, target }
    }

    pub fn k(&self) -> usize {
        self.target.nrows()
    }

    pub fn objective(&self, analog: &CMat) -> f64 {
        (analog * &self.digital - &self.target).norm_squared()
    }

    /// Euclidean gradient as a `K x N_RF` matrix.
    pub fn gradient(&self, analog: &CMat) -> CMat {
        let residual = &self.target - analog * &self.digital;
        (residual * self.digital.adjoint()) * C64::new(-2.0, 0.0)
    }
}

/// Euclidean gradient `-2 B^H (f_SC - B f)` on vectorized (column-major)
/// arguments. `stacked_digital` is `N_RF x (M N_ds)` and `f_sc` has length
/// `K M N_ds`.
pub fn euclidean_gradient(f: &CVec, stacked_digital: &CMat, f_sc: &CVec, k: usize) -> CVec {
    let n_rf = stacked_digital.nrows();
    let width = stacked_digital.ncols();
    assert_eq!(f.len(), k * n_rf, "analog vector length");
    assert_eq!(f_sc.len(), k * width, "target vector length");
    let analog = CMat::from_column_slice(k, n_rf, f.as_slice());
    let target = CMat::from_column_slice(k, width, f_sc.as_slice());
    let g = AnalogProblem::new(stacked_digital.clone(), target).gradient(&analog);
    CVec::from_column_slice(g.as_slice())
}

/// Projection of `g` onto the tangent space at `x`:
/// `g - K Re(g . conj(x)) . x`, elementwise.
pub fn riemannian_gradient(g: &CVec, x: &CVec, k: usize) -> CVec {
    CVec::from_iterator(g.len(), g.iter().zip(x.iter()).map(|(gi, xi)| project_entry(*gi, *xi, k as f64)))
}

fn project_entry(g: C64, x: C64, k: f64) -> C64 {
    g - x * (k * (g * x.conj()).re)
}

fn project(v: &CMat, x: &CMat) -> CMat {
    let k = x.nrows() as f64;
    v.zip_map(x, |vi, xi| project_entry(vi, xi, k))
}

fn retract(x: &CMat) -> CMat {
    let amp = 1.0 / (x.nrows() as f64).sqrt();
    x.map(|z| {
        let r = z.norm();
        if r > 0.0 {
            z * (amp / r)
        } else {
            C64::new(amp, 0.0)
        }
    })
}

fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Stopping and line-search parameters.
#[derive(Debug, Clone, Copy)]
pub struct CgParams {
    pub max_iter: usize,
    /// Stop once the Riemannian gradient norm falls below this.
    pub grad_tol: f64,
    pub initial_step: f64,
}

impl Default for CgParams {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-8, initial_step: 1.0 }
    }
}

/// Iterate of the conjugate-gradient solver.
#[derive(Debug, Clone)]
pub struct ManifoldState {
    /// `K x N_RF`; `vec(point)` is the column-major storage.
    pub point: CMat,
    /// Riemannian gradient at `point`.
    pub gradient: CMat,
    pub direction: CMat,
    /// Last accepted step length.
    pub step: f64,
    pub iteration: usize,
    pub objective: f64,
    pub converged: bool,
}

impl ManifoldState {
    /// State at `point` (retracted onto the manifold first) with steepest
    /// descent as the first direction.
    pub fn new(point: &CMat, problem: &AnalogProblem) -> Self {
        let point = retract(point);
        let gradient = project(&problem.gradient(&point), &point);
        let direction = -&gradient;
        let objective = problem.objective(&point);
        Self { point, gradient, direction, step: 0.0, iteration: 0, objective, converged: false }
    }

    pub fn vectorized(&self) -> CVec {
        CVec::from_column_slice(self.point.as_slice())
    }

    pub fn gradient_norm(&self) -> f64 {
        self.gradient.norm()
    }
}

/// Result classification of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    /// Gradient already below tolerance.
    Stationary,
    /// Line search ran out of backtracks; state left unchanged.
    LineSearchFailed,
}

/// One Polak-Ribiere+ step with an Armijo backtracking line search.
///
/// Vector transport is the tangent-space projection at the new point. The
/// direction restarts at steepest descent whenever the conjugate direction
/// fails to be a descent direction.
pub fn manifold_cg_step(
    state: &ManifoldState,
    problem: &AnalogProblem,
    params: &CgParams,
) -> (ManifoldState, StepOutcome) {
    if state.converged {
        return (state.clone(), StepOutcome::Stationary);
    }
    let g_norm2 = state.gradient.norm_squared();
    if g_norm2.sqrt() <= params.grad_tol {
        let mut s = state.clone();
        s.converged = true;
        return (s, StepOutcome::Stationary);
    }

    let mut direction = state.direction.clone();
    let mut slope = inner(&state.gradient, &direction);
    if slope >= 0.0 {
        direction = -&state.gradient;
        slope = -g_norm2;
    }

    let mut step = params.initial_step;
    let mut accepted = None;
    for _ in 0..MAX_BACKTRACKS {
        let candidate = retract(&(&state.point + &direction * C64::new(step, 0.0)));
        let value = problem.objective(&candidate);
        if value <= state.objective + ARMIJO_C * step * slope && value <= state.objective {
            accepted = Some((candidate, value));
            break;
        }
        step *= BACKTRACK;
    }
    let Some((point, objective)) = accepted else {
        let mut s = state.clone();
        s.converged = true;
        return (s, StepOutcome::LineSearchFailed);
    };

    let gradient = project(&problem.gradient(&point), &point);
    let old_gradient = project(&state.gradient, &point);
    let old_direction = project(&direction, &point);
    let beta = (inner(&gradient, &(&gradient - &old_gradient)) / g_norm2).max(0.0);
    let mut next = -&gradient + old_direction * C64::new(beta, 0.0);
    if inner(&gradient, &next) >= 0.0 {
        next = -&gradient;
    }
    let converged = gradient.norm() <= params.grad_tol;
    (
        ManifoldState {
            point,
            gradient,
            direction: next,
            step,
            iteration: state.iteration + 1,
            objective,
            converged,
        },
        StepOutcome::Accepted,
    )
}

/// Runs conjugate gradient from `init` for at most `params.max_iter`
/// steps. Returns the final point and the objective after every accepted
/// step (starting with the initial value).
pub fn optimize_analog(problem: &AnalogProblem, init: &CMat, params: &CgParams) -> (CMat, Vec<f64>) {
    let mut state = ManifoldState::new(init, problem);
    let mut trace = vec![state.objective];
    for _ in 0..params.max_iter {
        let (next, outcome) = manifold_cg_step(&state, problem, params);
        state = next;
        match outcome {
            StepOutcome::Accepted => trace.push(state.objective),
            _ => break,
        }
        if state.converged {
            break;
        }
    }
    (state.point, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian_matrix;
    use crate::rng::rng_from;
    use rand::Rng;

    fn random_point(rng: &mut crate::rng::SimRng, k: usize, n_rf: usize) -> CMat {
        let amp = 1.0 / (k as f64).sqrt();
        CMat::from_fn(k, n_rf, |_, _| C64::from_polar(amp, rng.random_range(-3.2..3.2)))
    }

    /// `B = F_BB^T kron I_K`, built entry by entry.
    fn kron_operator(digital: &CMat, k: usize) -> CMat {
        let (n_rf, w) = digital.shape();
        CMat::from_fn(k * w, k * n_rf, |r, c| {
            let (i, col) = (r % k, r / k);
            let (i2, row) = (c % k, c / k);
            if i == i2 {
                digital[(row, col)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn gradient_matches_kronecker_form() {
        let mut rng = rng_from(41);
        let (k, n_rf, w) = (8, 4, 12);
        let digital = complex_gaussian_matrix(&mut rng, n_rf, w, 1.0);
        let f = CVec::from_column_slice(random_point(&mut rng, k, n_rf).as_slice());
        let f_sc = CVec::from_column_slice(complex_gaussian_matrix(&mut rng, k * w, 1, 1.0).as_slice());
        let b = kron_operator(&digital, k);
        let dense = (b.adjoint() * (&f_sc - &b * &f)) * C64::new(-2.0, 0.0);
        let fast = euclidean_gradient(&f, &digital, &f_sc, k);
        assert!((dense - fast).norm() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from(42);
        let (k, n_rf, w) = (6, 3, 6);
        let problem = AnalogProblem::new(
            complex_gaussian_matrix(&mut rng, n_rf, w, 1.0),
            complex_gaussian_matrix(&mut rng, k, w, 1.0),
        );
        let x = random_point(&mut rng, k, n_rf);
        let g = problem.gradient(&x);
        let h = 1e-6;
        for idx in 0..k * n_rf {
            for unit in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus[idx] += unit * h;
                minus[idx] -= unit * h;
                let fd = (problem.objective(&plus) - problem.objective(&minus)) / (2.0 * h);
                // Directional derivative along `unit` at entry idx is Re(conj(g) unit).
                let analytic = (g[idx].conj() * unit).re;
                assert!((fd - analytic).abs() < 1e-5 * (1.0 + analytic.abs()), "{fd} vs {analytic}");
            }
        }
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let mut rng = rng_from(43);
        let x = random_point(&mut rng, 8, 4);
        let digital = complex_gaussian_matrix(&mut rng, 4, 6, 1.0);
        let problem = AnalogProblem::new(digital.clone(), &x * &digital);
        assert!(problem.gradient(&x).norm() < 1e-12);
    }

    #[test]
    fn projection_is_tangent_and_idempotent() {
        let mut rng = rng_from(44);
        let k = 8;
        let x = CVec::from_column_slice(random_point(&mut rng, k, 4).as_slice());
        let g = CVec::from_column_slice(complex_gaussian_matrix(&mut rng, k * 4, 1, 1.0).as_slice());
        let r = riemannian_gradient(&g, &x, k);
        for (ri, xi) in r.iter().zip(x.iter()) {
            assert!((ri * xi.conj()).re.abs() < 1e-12);
        }
        let rr = riemannian_gradient(&r, &x, k);
        assert!((rr - &r).norm() < 1e-12);
        let radial = CVec::from_iterator(x.len(), x.iter().map(|xi| xi * 3.7));
        assert!(riemannian_gradient(&radial, &x, k).norm() < 1e-12);
    }

    #[test]
    fn cg_keeps_modulus_and_descends() {
        let mut rng = rng_from(45);
        let (k, n_rf, w) = (8, 4, 12);
        let problem = AnalogProblem::new(
            complex_gaussian_matrix(&mut rng, n_rf, w, 1.0),
            complex_gaussian_matrix(&mut rng, k, w, 0.2),
        );
        let mut state = ManifoldState::new(&random_point(&mut rng, k, n_rf), &problem);
        let amp = 1.0 / (k as f64).sqrt();
        for _ in 0..100 {
            let (next, outcome) = manifold_cg_step(&state, &problem, &CgParams::default());
            if outcome == StepOutcome::Accepted {
                assert!(next.objective <= state.objective);
            }
            assert!(next.point.iter().all(|z| (z.norm() - amp).abs() < 1e-12));
            state = next;
            if state.converged {
                break;
            }
        }
    }

    #[test]
    fn cg_recovers_reachable_target() {
        let mut rng = rng_from(46);
        let (k, n_rf, w) = (8, 4, 12);
        let truth = random_point(&mut rng, k, n_rf);
        let digital = complex_gaussian_matrix(&mut rng, n_rf, w, 1.0);
        let problem = AnalogProblem::new(digital.clone(), &truth * &digital);
        let start = truth.map(|z| z * C64::from_polar(1.0, 0.3));
        let (x, trace) = optimize_analog(&problem, &start, &CgParams { max_iter: 500, ..CgParams::default() });
        assert!(trace.windows(2).all(|p| p[1] <= p[0]));
        assert!(problem.objective(&x) < 1e-10 * problem.target.norm_squared());
    }

    #[test]
    fn line_search_failure_leaves_state() {
        let mut rng = rng_from(47);
        let x = random_point(&mut rng, 4, 2);
        let digital = complex_gaussian_matrix(&mut rng, 2, 3, 1.0);
        let problem = AnalogProblem::new(digital.clone(), &x * &digital);
        let mut state = ManifoldState::new(&x, &problem);
        // An ascent direction with a fake large gradient forces every trial to fail.
        state.gradient = complex_gaussian_matrix(&mut rng, 4, 2, 1.0);
        state.gradient = project(&state.gradient, &state.point);
        state.direction = -&state.gradient;
        let (next, outcome) = manifold_cg_step(&state, &problem, &CgParams::default());
        assert_eq!(outcome, StepOutcome::LineSearchFailed);
        assert_eq!(next.point, state.point);
        assert!(next.converged);
    }
}
