//! Alternating hybrid design for one subarray.

use rand::Rng;

use super::manifold::{optimize_analog, AnalogProblem, CgParams};
use super::procrustes::procrustes_update;
use super::{jsc_combine, sd_analog, HybridBeamformer, JscBeamformer};
use crate::config::{ProcrustesMode, SystemConfig};
use crate::error::{IsacError, Result};
use crate::linalg::{eye, hsplit, hstack, pinv, CMat, C64};
use crate::rng::{child_rng, stream};
use crate::scenario::subcarrier_etas;
use crate::selection::SubarrayConfig;

/// Per-call switches that are not part of the system configuration.
#[derive(Debug, Clone, Copy)]
pub struct DesignOptions {
    pub bsc: bool,
    /// Seeds the random analog initialization.
    pub seed: u64,
    /// Keep the inner objective trace of every outer iteration.
    pub trace: bool,
}

impl DesignOptions {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self { bsc: cfg.bsc, seed: cfg.seed, trace: false }
    }
}

/// Output of [`design_hybrid`].
#[derive(Debug, Clone)]
pub struct HybridDesign {
    pub beamformer: HybridBeamformer,
    pub jsc: JscBeamformer,
    /// Outer residual `||F_RF F_BB - F_SC||_F` after each iteration.
    pub residuals: Vec<f64>,
    /// Inner objective after each accepted step, one vector per outer
    /// iteration (empty unless tracing).
    pub inner_traces: Vec<Vec<f64>>,
    pub converged: bool,
    pub rank_deficient: bool,
}

impl HybridDesign {
    /// CSV lines `outer,inner,objective` for the recorded inner traces.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("outer,inner,objective\n");
        for (j, trace) in self.inner_traces.iter().enumerate() {
            for (i, v) in trace.iter().enumerate() {
                out.push_str(&format!("{},{},{:.12e}\n", j + 1, i, v));
            }
        }
        out
    }
}

fn check_inputs(sub: &SubarrayConfig, fc_full: &[CMat], fs_full: &CMat, cfg: &SystemConfig) -> Result<()> {
    if sub.len() != cfg.k {
        return Err(IsacError::Dimension(format!("subarray has {} antennas, K = {}", sub.len(), cfg.k)));
    }
    if fc_full.len() != cfg.m {
        return Err(IsacError::Dimension(format!("{} communication beamformers for M = {}", fc_full.len(), cfg.m)));
    }
    for (m, fc) in fc_full.iter().enumerate() {
        if fc.shape() != (cfg.n, cfg.n_ds) {
            return Err(IsacError::Dimension(format!(
                "communication beamformer {} is {:?}, expected ({}, {})",
                m + 1,
                fc.shape(),
                cfg.n,
                cfg.n_ds
            )));
        }
    }
    if fs_full.shape() != (cfg.n, cfg.t) {
        return Err(IsacError::Dimension(format!(
            "sensing matrix is {:?}, expected ({}, {})",
            fs_full.shape(),
            cfg.n,
            cfg.t
        )));
    }
    Ok(())
}

struct Iterate {
    analog: CMat,
    digital: Vec<CMat>,
    aux: Vec<CMat>,
    targets: Vec<CMat>,
    residual: f64,
}

/// Designs `F_RF` and `F_BB[m]` on subarray `sub` so that the hybrid
/// precoders approximate the joint sensing-communications targets built
/// from `fc_full` (`N x N_ds` per subcarrier) and `fs_full` (`N x T`).
///
/// Iterates analog manifold optimization, least-squares digital update
/// (followed by beam-squint compensation when `opts.bsc`), and the
/// auxiliary-matrix Procrustes update until the residual changes by at most
/// `cfg.outer_tol`. Without convergence after `cfg.max_outer` iterations the
/// best iterate is returned with `converged = false`. Each precoder is
/// finally scaled to `||F_RF F_BB[m]||_F^2 = N_ds`.
pub fn design_hybrid(
    sub: &SubarrayConfig,
    fc_full: &[CMat],
    fs_full: &CMat,
    cfg: &SystemConfig,
    opts: &DesignOptions,
) -> Result<HybridDesign> {
    check_inputs(sub, fc_full, fs_full, cfg)?;
    let (k, n_rf, n_ds, t, m_count) = (cfg.k, cfg.n_rf, cfg.n_ds, cfg.t, cfg.m);
    let eps = cfg.epsilon;
    let etas = subcarrier_etas(cfg);
    let fc: Vec<CMat> = fc_full.iter().map(|f| sub.rows(f)).collect();
    let fs = sub.rows(fs_full);

    let mut rng = child_rng(opts.seed, stream::ANALOG_INIT);
    let amp = 1.0 / (k as f64).sqrt();
    let mut analog =
        CMat::from_fn(k, n_rf, |_, _| C64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU)));

    let mut aux: Vec<CMat> = match cfg.procrustes {
        ProcrustesMode::PerSubcarrier => vec![eye(t, n_ds); m_count],
        ProcrustesMode::Stacked => hsplit(&eye(t, m_count * n_ds), n_ds),
    };
    let mut targets: Vec<CMat> = (0..m_count).map(|m| jsc_combine(&fc[m], &fs, &aux[m], eps)).collect();
    let (p0, mut rank_deficient) = pinv(&analog);
    let mut digital: Vec<CMat> = targets.iter().map(|f| &p0 * f).collect();

    let params = CgParams { max_iter: cfg.max_inner, grad_tol: cfg.inner_tol, initial_step: 1.0 };
    let mut residuals = Vec::new();
    let mut inner_traces = Vec::new();
    let mut best: Option<Iterate> = None;
    let mut converged = false;

    for _ in 0..cfg.max_outer {
        let problem = AnalogProblem::new(hstack(&digital), hstack(&targets));
        let (next, trace) = optimize_analog(&problem, &analog, &params);
        analog = next;
        if opts.trace {
            inner_traces.push(trace);
        }

        let (p, deficient) = pinv(&analog);
        rank_deficient |= deficient;
        for m in 0..m_count {
            let ls = &p * &targets[m];
            digital[m] = if opts.bsc && etas[m] != 1.0 { &p * (sd_analog(&analog, etas[m]) * &ls) } else { ls };
        }

        if eps < 1.0 {
            match cfg.procrustes {
                ProcrustesMode::PerSubcarrier => {
                    for m in 0..m_count {
                        aux[m] = procrustes_update(&fs, &(&analog * &digital[m]), &fc[m], eps, &aux[m]);
                    }
                }
                ProcrustesMode::Stacked => {
                    let hybrid = &analog * hstack(&digital);
                    let d = procrustes_update(&fs, &hybrid, &hstack(&fc), eps, &hstack(&aux));
                    aux = hsplit(&d, n_ds);
                }
            }
        }
        targets = (0..m_count).map(|m| jsc_combine(&fc[m], &fs, &aux[m], eps)).collect();

        let residual = (0..m_count)
            .map(|m| (&analog * &digital[m] - &targets[m]).norm_squared())
            .sum::<f64>()
            .sqrt();
        let previous = residuals.last().copied();
        residuals.push(residual);
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(Iterate {
                analog: analog.clone(),
                digital: digital.clone(),
                aux: aux.clone(),
                targets: targets.clone(),
                residual,
            });
        }
        if let Some(prev) = previous {
            if (residual - prev).abs() <= cfg.outer_tol {
                converged = true;
                break;
            }
        }
    }

    let chosen = if converged {
        Iterate { analog, digital, aux, targets, residual: 0.0 }
    } else {
        log::warn!("hybrid design did not converge in {} outer iterations; returning best iterate", cfg.max_outer);
        best.expect("at least one outer iteration")
    };
    let mut beamformer = HybridBeamformer { analog: chosen.analog, digital: chosen.digital };
    beamformer.normalize_power(n_ds);
    Ok(HybridDesign {
        beamformer,
        jsc: JscBeamformer { per_subcarrier: chosen.targets, aux: chosen.aux },
        residuals,
        inner_traces,
        converged,
        rank_deficient,
    })
}
