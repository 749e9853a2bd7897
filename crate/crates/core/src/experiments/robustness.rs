//! Selection accuracy under corrupted inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::dataset::{corrupt, input_matrix, read_manifest, split_input, DatasetManifest};
use super::realize;
use crate::error::{IsacError, Result};
use crate::linalg::CMat;
use crate::rng::{child_rng, derive_seed, stream};
use crate::scenario::ChannelSet;
use crate::selection::{sequential_select, Enumeration, SelectionProblem};

/// Source of the selected subarray.
#[derive(Debug, Clone)]
pub enum Selector {
    /// Rerun the block search on corrupted inputs, `draws` noise draws per
    /// realization and SNR.
    ModelBased { draws: usize },
    /// External predictions `(snr_test, sample, class)`, e.g. from a
    /// trained classifier.
    LearnedLabels(Vec<(f64, usize, usize)>),
}

/// One line of the robustness table.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub snr_test: f64,
    /// Fraction of exact class matches with the clean label.
    pub accuracy: f64,
    /// Mean clean-channel SE of the selected classes.
    pub mean_se: f64,
    /// Mean clean-channel SE of the labeled classes.
    pub mean_label_se: f64,
    pub evaluations: usize,
}

/// `snr_test,accuracy,mean_SE,mean_label_SE,evaluations`.
pub fn robustness_csv(rows: &[RobustnessRow]) -> String {
    let mut out = String::from("snr_test,accuracy,mean_SE,mean_label_SE,evaluations\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.12},{:.12},{}",
            r.snr_test, r.accuracy, r.mean_se, r.mean_label_se, r.evaluations
        );
    }
    out
}

/// Parses `se_lookup.csv` into per-realization class SE lists.
fn read_lookup(dir: &Path, manifest: &DatasetManifest) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(dir.join(&manifest.se_lookup))?;
    let mut table = vec![vec![f64::NAN; manifest.num_classes]; manifest.realizations];
    for (line_no, line) in text.lines().enumerate().skip(1) {
        let bad = || IsacError::Format(format!("{} line {}: {line:?}", manifest.se_lookup, line_no + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad());
        }
        let r: usize = fields[0].parse().map_err(|_| bad())?;
        let c: usize = fields[1].parse().map_err(|_| bad())?;
        let se: f64 = fields[2].parse().map_err(|_| bad())?;
        *table.get_mut(r).and_then(|row| row.get_mut(c)).ok_or_else(bad)? = se;
    }
    Ok(table)
}

fn lookup(table: &[Vec<f64>], realization: usize, class: usize, sample: &str) -> Result<f64> {
    table
        .get(realization)
        .and_then(|row| row.get(class))
        .copied()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| IsacError::Format(format!("no SE lookup entry for {sample}, class {class}")))
}

/// Reports selection accuracy and clean-channel SE at each `snr_test`.
///
/// The model-based selector corrupts the inputs of all subcarriers of a
/// realization at once (noise relative to each input's mean entry power),
/// reruns the block search and counts a hit when it returns the clean
/// label. SE values come from the dataset's lookup table, i.e. from
/// designs on the clean channel.
pub fn evaluate_selection_robustness(dir: &Path, selector: &Selector, snr_test: &[f64]) -> Result<Vec<RobustnessRow>> {
    let manifest = read_manifest(dir)?;
    let table = read_lookup(dir, &manifest)?;
    match selector {
        Selector::ModelBased { draws } => model_based(&manifest, &table, snr_test, *draws),
        Selector::LearnedLabels(preds) => learned(&manifest, &table, preds),
    }
}

fn model_based(manifest: &DatasetManifest, table: &[Vec<f64>], snr_test: &[f64], draws: usize) -> Result<Vec<RobustnessRow>> {
    let cfg = manifest.system_config()?;
    let problems: Vec<(usize, u64, SelectionProblem)> = manifest
        .realization_seeds
        .iter()
        .enumerate()
        .map(|(r, &seed)| {
            let mut c = cfg.clone();
            c.seed = seed;
            Ok((r, seed, realize(&c)?.1))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &snr in snr_test {
        let jobs: Vec<(usize, usize)> = (0..problems.len()).flat_map(|r| (0..draws).map(move |d| (r, d))).collect();
        let outcomes: Vec<(bool, f64, f64)> = jobs
            .par_iter()
            .map(|&(r, d)| {
                let (_, seed, clean) = &problems[r];
                let mut rng = child_rng(derive_seed(derive_seed(*seed, snr.to_bits()), d as u64), stream::ROBUSTNESS_NOISE);
                let noisy: Vec<CMat> = clean
                    .channels
                    .matrices
                    .iter()
                    .map(|h| corrupt(&input_matrix(h, &clean.fs_full), snr, &mut rng))
                    .collect();
                let (matrices, sensing): (Vec<CMat>, Vec<CMat>) =
                    noisy.iter().map(|pi| split_input(pi, cfg.n_prime)).unzip();
                let channels = ChannelSet { matrices, path_gains: CMat::zeros(0, 0) };
                let problem = SelectionProblem::new(channels, sensing[0].clone(), cfg.n_ds);
                let mut c = cfg.clone();
                c.seed = *seed;
                let picked = sequential_select(&problem, &c, Enumeration::Gss, manifest.blocks, c.bsc)?.best.class_index as usize;
                let label = manifest.realization_labels[r];
                let name = format!("realization {r}");
                Ok((picked == label, lookup(table, r, picked, &name)?, lookup(table, r, label, &name)?))
            })
            .collect::<Result<_>>()?;
        rows.push(summarize(snr, &outcomes));
    }
    Ok(rows)
}

fn learned(manifest: &DatasetManifest, table: &[Vec<f64>], preds: &[(f64, usize, usize)]) -> Result<Vec<RobustnessRow>> {
    let mut by_snr: BTreeMap<u64, (f64, Vec<(bool, f64, f64)>)> = BTreeMap::new();
    for &(snr, sample, class) in preds {
        let name = format!("sample {sample}");
        let label = *manifest
            .labels
            .get(sample)
            .ok_or_else(|| IsacError::Format(format!("{name} outside a dataset of {}", manifest.count)))?;
        let r = manifest.trial_id[sample];
        let outcome = (class == label, lookup(table, r, class, &name)?, lookup(table, r, label, &name)?);
        // Order keys by SNR value; total_cmp order matches this for the finite and infinite values used.
        let key = snr.to_bits() ^ if snr.is_sign_negative() { u64::MAX } else { 1 << 63 };
        by_snr.entry(key).or_insert((snr, Vec::new())).1.push(outcome);
    }
    Ok(by_snr.values().map(|(snr, o)| summarize(*snr, o)).collect())
}

fn summarize(snr: f64, outcomes: &[(bool, f64, f64)]) -> RobustnessRow {
    let n = outcomes.len().max(1) as f64;
    RobustnessRow {
        snr_test: snr,
        accuracy: outcomes.iter().filter(|o| o.0).count() as f64 / n,
        mean_se: outcomes.iter().map(|o| o.1).sum::<f64>() / n,
        mean_label_se: outcomes.iter().map(|o| o.2).sum::<f64>() / n,
        evaluations: outcomes.len(),
    }
}
