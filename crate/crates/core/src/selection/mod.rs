//! Subarray enumeration, spectral-efficiency scoring and search.
//!
//! Antenna indices are zero-based in memory and one-based in every CSV.

mod combinadic;
mod gain;

pub use combinadic::{binomial, count_configs, rank_combination, unrank_combination};
pub use gain::{array_gain, array_gain_closed_form, dirichlet_sinc};

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::beamformer::{comms_beamformer_full, design_hybrid, DesignOptions, HybridBeamformer, HybridDesign};
use crate::config::SystemConfig;
use crate::error::{IsacError, Result};
use crate::linalg::{log2_det_hpd, CMat, C64};
use crate::rng::derive_seed;
use crate::scenario::ChannelSet;

/// A `K`-subset of the `N` transmit antennas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubarrayConfig {
    /// Strictly increasing, zero-based.
    pub antenna_indices: Vec<usize>,
    /// Lexicographic rank among all `C(N, K)` subsets, one-based.
    pub rank_p: u128,
    pub n: usize,
}

impl SubarrayConfig {
    pub fn from_rank(p: u128, n: usize, k: usize) -> Result<Self> {
        Ok(Self { antenna_indices: unrank_combination(p, n, k)?, rank_p: p, n })
    }

    pub fn from_indices(indices: Vec<usize>, n: usize) -> Result<Self> {
        let rank_p = rank_combination(&indices, n, indices.len())?;
        Ok(Self { antenna_indices: indices, rank_p, n })
    }

    /// The whole array.
    pub fn full(n: usize) -> Self {
        Self { antenna_indices: (0..n).collect(), rank_p: 1, n }
    }

    pub fn len(&self) -> usize {
        self.antenna_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antenna_indices.is_empty()
    }

    /// Binary `N x K` matrix `Q_p` whose column `k` is `e_{indices[k]}`.
    pub fn selection_matrix(&self) -> CMat {
        let mut q = CMat::zeros(self.n, self.len());
        for (k, &i) in self.antenna_indices.iter().enumerate() {
            q[(i, k)] = C64::new(1.0, 0.0);
        }
        q
    }

    /// `Q_p^T X`: the selected rows of `x`.
    pub fn rows(&self, x: &CMat) -> CMat {
        x.select_rows(&self.antenna_indices)
    }

    /// Number of shared antennas, `||Q_a^T Q_b||_F^2`.
    pub fn overlap(&self, other: &SubarrayConfig) -> usize {
        self.antenna_indices.iter().filter(|i| other.antenna_indices.binary_search(i).is_ok()).count()
    }

    /// Space-separated one-based indices.
    pub fn indices_label(&self) -> String {
        self.antenna_indices.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// Partition of the array into `N / G` consecutive groups of `G` antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupConfig {
    pub g: usize,
    pub n_groups: usize,
    pub k_groups: usize,
}

impl GroupConfig {
    pub fn new(n: usize, k: usize, g: usize) -> Result<Self> {
        if g == 0 || n % g != 0 || k % g != 0 {
            return Err(IsacError::Config(format!("N = {n} and K = {k} must both be multiples of G = {g}")));
        }
        if k > n {
            return Err(IsacError::Config(format!("K <= N violated (K = {k}, N = {n})")));
        }
        Ok(Self { g, n_groups: n / g, k_groups: k / g })
    }

    pub fn n(&self) -> usize {
        self.g * self.n_groups
    }

    pub fn k(&self) -> usize {
        self.g * self.k_groups
    }

    pub fn count(&self) -> u128 {
        binomial(self.n_groups, self.k_groups).expect("group count fits in 128 bits")
    }

    /// Antenna-level configuration of the `q`-th (one-based) group subset.
    pub fn config(&self, q: u128) -> Result<SubarrayConfig> {
        let groups = unrank_combination(q, self.n_groups, self.k_groups)?;
        let indices = groups.iter().flat_map(|&grp| grp * self.g..(grp + 1) * self.g).collect();
        SubarrayConfig::from_indices(indices, self.n())
    }
}

/// Every group configuration in group-rank order.
pub fn gss_subarrays(gc: GroupConfig) -> impl Iterator<Item = SubarrayConfig> {
    (1..=gc.count()).map(move |q| gc.config(q).expect("rank within range"))
}

/// Which candidate set a search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enumeration {
    Full,
    Gss,
}

/// Lazily indexed candidate list; candidate `i` (zero-based) is the
/// `(i+1)`-th subset in lexicographic (antenna or group) order.
#[derive(Debug, Clone, Copy)]
pub struct CandidateSpace {
    kind: Enumeration,
    n: usize,
    k: usize,
    groups: Option<GroupConfig>,
    count: u128,
}

impl CandidateSpace {
    pub fn new(cfg: &SystemConfig, kind: Enumeration) -> Result<Self> {
        match kind {
            Enumeration::Full => {
                let count = binomial(cfg.n, cfg.k)
                    .ok_or_else(|| IsacError::Domain(format!("C({}, {}) does not fit in 128 bits", cfg.n, cfg.k)))?;
                Ok(Self { kind, n: cfg.n, k: cfg.k, groups: None, count })
            }
            Enumeration::Gss => {
                let gc = GroupConfig::new(cfg.n, cfg.k, cfg.g)?;
                Ok(Self { kind, n: cfg.n, k: cfg.k, groups: Some(gc), count: gc.count() })
            }
        }
    }

    pub fn kind(&self) -> Enumeration {
        self.kind
    }

    pub fn count(&self) -> u128 {
        self.count
    }

    pub fn get(&self, i: u128) -> Result<SubarrayConfig> {
        match self.groups {
            Some(gc) => gc.config(i + 1),
            None => SubarrayConfig::from_rank(i + 1, self.n, self.k),
        }
    }

    fn check_budget(&self, budget: u64) -> Result<()> {
        if self.count > budget as u128 {
            return Err(IsacError::Budget { count: self.count.to_string(), budget });
        }
        Ok(())
    }
}

/// Per-subcarrier `log2 det(I + H F F^H H^H / (N_ds sigma2))`.
///
/// Evaluated on the `N_ds x N_ds` Gram form `I + A^H A`, `A = H F`, which
/// has the same determinant.
pub fn spectral_efficiency_per_subcarrier(
    channels: &[CMat],
    precoders: &[CMat],
    sigma2: f64,
    n_ds: usize,
) -> Result<Vec<f64>> {
    if channels.len() != precoders.len() {
        return Err(IsacError::Dimension(format!(
            "{} channels but {} precoders",
            channels.len(),
            precoders.len()
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(IsacError::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    let scale = 1.0 / (n_ds as f64 * sigma2);
    channels
        .iter()
        .zip(precoders)
        .map(|(h, f)| {
            if h.ncols() != f.nrows() {
                return Err(IsacError::Dimension(format!("channel {:?} vs precoder {:?}", h.shape(), f.shape())));
            }
            let a = h * f;
            let mut gram = a.adjoint() * a * C64::new(scale, 0.0);
            for i in 0..gram.nrows() {
                gram[(i, i)] += C64::new(1.0, 0.0);
            }
            Ok(log2_det_hpd(&gram).max(0.0))
        })
        .collect()
}

/// Total spectral efficiency of a hybrid beamformer on the subarray
/// channels `h_sub` (`N' x K` per subcarrier).
pub fn spectral_efficiency(h_sub: &[CMat], bf: &HybridBeamformer, sigma2: f64, n_ds: usize) -> Result<f64> {
    Ok(spectral_efficiency_per_subcarrier(h_sub, &bf.precoders(), sigma2, n_ds)?.iter().sum())
}

/// Full-array channel data shared by every candidate of one realization.
#[derive(Debug, Clone)]
pub struct SelectionProblem {
    pub channels: ChannelSet,
    /// `N x N_ds` per subcarrier.
    pub fc_full: Vec<CMat>,
    /// `N x T`.
    pub fs_full: CMat,
}

impl SelectionProblem {
    /// Builds the fully digital communications beamformers from `channels`.
    pub fn new(channels: ChannelSet, fs_full: CMat, n_ds: usize) -> Self {
        let fc_full = channels.matrices.iter().map(|h| comms_beamformer_full(h, n_ds).0).collect();
        Self { channels, fc_full, fs_full }
    }
}

/// One scored candidate.
#[derive(Debug, Clone)]
pub struct CandidateResult {
    pub config: SubarrayConfig,
    /// Zero-based position in the candidate space (the class label).
    pub class_index: u128,
    pub design: HybridDesign,
    pub se_total: f64,
    pub se_per_subcarrier: Vec<f64>,
}

/// SE-only record kept for every evaluated candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub config: SubarrayConfig,
    pub class_index: u128,
    pub se_total: f64,
    pub se_per_subcarrier: Vec<f64>,
}

impl From<&CandidateResult> for CandidateScore {
    fn from(r: &CandidateResult) -> Self {
        Self {
            config: r.config.clone(),
            class_index: r.class_index,
            se_total: r.se_total,
            se_per_subcarrier: r.se_per_subcarrier.clone(),
        }
    }
}

/// Outcome of a subarray search.
#[derive(Debug, Clone)]
pub struct Selection {
    pub best: CandidateResult,
    /// Every candidate in rank order.
    pub scores: Vec<CandidateScore>,
    /// Largest number of full candidate records (with beamformers) held at
    /// once.
    pub peak_retained: usize,
}

/// Seed of the design for candidate rank `p` in a trial seeded `seed`.
pub fn candidate_seed(seed: u64, p: u128) -> u64 {
    derive_seed(derive_seed(seed, p as u64), (p >> 64) as u64)
}

/// Designs and scores one subarray.
pub fn evaluate_candidate(
    problem: &SelectionProblem,
    config: SubarrayConfig,
    class_index: u128,
    cfg: &SystemConfig,
    bsc: bool,
) -> Result<CandidateResult> {
    let opts = DesignOptions { bsc, seed: candidate_seed(cfg.seed, config.rank_p), trace: false };
    let design = design_hybrid(&config, &problem.fc_full, &problem.fs_full, cfg, &opts)?;
    let h_sub = problem.channels.select(&config.antenna_indices);
    let se_per_subcarrier =
        spectral_efficiency_per_subcarrier(&h_sub, &design.beamformer.precoders(), cfg.sigma2, cfg.n_ds)?;
    let se_total = se_per_subcarrier.iter().sum();
    Ok(CandidateResult { config, class_index, design, se_total, se_per_subcarrier })
}

/// `a` beats `b`: larger SE, ties to the smaller rank. NaN never wins.
fn better(a: &CandidateResult, b: &CandidateResult) -> bool {
    if a.se_total.is_nan() {
        return false;
    }
    if b.se_total.is_nan() || a.se_total > b.se_total {
        return true;
    }
    a.se_total == b.se_total && a.config.rank_p < b.config.rank_p
}

fn evaluate_range(
    problem: &SelectionProblem,
    space: &CandidateSpace,
    range: std::ops::Range<u128>,
    cfg: &SystemConfig,
    bsc: bool,
) -> Result<Vec<CandidateResult>> {
    let idx: Vec<u128> = range.collect();
    idx.par_iter()
        .map(|&i| evaluate_candidate(problem, space.get(i)?, i, cfg, bsc))
        .collect()
}

fn reduce_best(results: Vec<CandidateResult>, carry: Option<CandidateResult>) -> Option<CandidateResult> {
    let mut best = carry;
    for r in results {
        if best.as_ref().is_none_or(|b| better(&r, b)) {
            best = Some(r);
        }
    }
    best
}

/// Designs every candidate and returns the one with the highest total SE.
/// Refuses candidate spaces larger than `cfg.enumeration_budget`.
pub fn exhaustive_select(
    problem: &SelectionProblem,
    cfg: &SystemConfig,
    enumeration: Enumeration,
    bsc: bool,
) -> Result<Selection> {
    let space = CandidateSpace::new(cfg, enumeration)?;
    space.check_budget(cfg.enumeration_budget)?;
    let results = evaluate_range(problem, &space, 0..space.count(), cfg, bsc)?;
    let peak_retained = results.len();
    let scores = results.iter().map(CandidateScore::from).collect();
    let best = reduce_best(results, None).expect("non-empty candidate space");
    Ok(Selection { best, scores, peak_retained })
}

/// Block-wise search: candidates are split into `n_blocks` contiguous rank
/// ranges (the last may be shorter), each block is reduced to its best
/// candidate, and the running best is carried forward. Only one block of
/// full records plus the carry is held at a time.
pub fn sequential_select(
    problem: &SelectionProblem,
    cfg: &SystemConfig,
    enumeration: Enumeration,
    n_blocks: usize,
    bsc: bool,
) -> Result<Selection> {
    if n_blocks == 0 {
        return Err(IsacError::Config("n_blocks must be at least 1".into()));
    }
    let space = CandidateSpace::new(cfg, enumeration)?;
    space.check_budget(cfg.enumeration_budget)?;
    let total = space.count();
    let block = total.div_ceil(n_blocks as u128).max(1);
    let mut carry: Option<CandidateResult> = None;
    let mut scores = Vec::new();
    let mut peak_retained = 0;
    let mut start = 0;
    while start < total {
        let end = (start + block).min(total);
        let results = evaluate_range(problem, &space, start..end, cfg, bsc)?;
        peak_retained = peak_retained.max(results.len() + usize::from(carry.is_some()));
        scores.extend(results.iter().map(CandidateScore::from));
        carry = reduce_best(results, carry);
        start = end;
    }
    let best = carry.expect("non-empty candidate space");
    Ok(Selection { best, scores, peak_retained })
}

/// Uniformly random `K`-subset.
pub fn random_subarray<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> SubarrayConfig {
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    SubarrayConfig::from_indices(idx, n).expect("sampled indices form a valid subset")
}

/// CSV with header `p,antenna_indices,SE_total,SE_1,..,SE_M`.
pub fn selection_csv(scores: &[CandidateScore]) -> String {
    let m = scores.first().map_or(0, |s| s.se_per_subcarrier.len());
    let mut out = String::from("p,antenna_indices,SE_total");
    for i in 1..=m {
        let _ = write!(out, ",SE_{i}");
    }
    out.push('\n');
    for s in scores {
        let _ = write!(out, "{},{},{:.12}", s.config.rank_p, s.config.indices_label(), s.se_total);
        for v in &s.se_per_subcarrier {
            let _ = write!(out, ",{v:.12}");
        }
        out.push('\n');
    }
    out
}
