//! Labeled dataset export.
//!
//! A dataset directory holds:
//!
//! * `manifest.json`: sample count, shape, dtype tag `f32le`, zero-based
//!   labels, per-sample byte offsets and bookkeeping (see
//!   [`DatasetManifest`]).
//! * `samples.f32`: corrupted inputs, `N x (N' + T) x 2` little-endian
//!   `f32` per sample in row-major order, real/imaginary on the last axis.
//!   Row `n` of a sample is `[H[m]^T(n, :), F_S(n, :)]`.
//! * `clean.f32`: the same layout without noise, one tensor per
//!   `(realization, subcarrier)`, realization-major.
//! * `se_lookup.csv`: `realization,class,SE` for every candidate class of
//!   every realization, computed on the clean channel.
//!
//! While writing, `manifest.partial.json` marks an incomplete directory; it
//! is replaced by `manifest.json` on success and left in place (with
//! `complete = false`) if export fails.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{realize, trial_seed};
use crate::config::SystemConfig;
use crate::error::{IsacError, Result};
use crate::linalg::{complex_gaussian, CMat};
use crate::rng::{child_rng, stream, SimRng};
use crate::selection::{sequential_select, Enumeration, SelectionProblem};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARTIAL_FILE: &str = "manifest.partial.json";
pub const PI_FILE: &str = "samples.f32";
pub const CLEAN_FILE: &str = "clean.f32";
pub const LOOKUP_FILE: &str = "se_lookup.csv";

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub count: usize,
    /// `[N, N' + T, 2]`.
    pub shape: [usize; 3],
    pub dtype: String,
    pub blob: String,
    pub clean_blob: String,
    pub se_lookup: String,
    pub num_classes: usize,
    /// Zero-based class index of the best grouped subarray, per sample.
    pub labels: Vec<usize>,
    /// Byte offset of each sample in `blob`.
    pub offsets: Vec<u64>,
    pub snr_train: Vec<f64>,
    /// One-based subcarrier index per sample.
    pub subcarrier: Vec<usize>,
    /// Realization index per sample.
    pub trial_id: Vec<usize>,
    pub noise_draw: Vec<usize>,
    /// Seed of every realization, indexed by `trial_id`.
    pub realization_seeds: Vec<u64>,
    /// Zero-based class label of every realization.
    pub realization_labels: Vec<usize>,
    pub snr_list: Vec<f64>,
    pub realizations: usize,
    pub noise_draws: usize,
    pub blocks: usize,
    /// Resolved configuration as `key = value` lines.
    pub config: String,
    pub complete: bool,
}

impl DatasetManifest {
    pub fn sample_bytes(&self) -> u64 {
        (self.shape.iter().product::<usize>() * 4) as u64
    }

    pub fn system_config(&self) -> Result<SystemConfig> {
        SystemConfig::from_kv_str(&self.config)
    }
}

/// `Pi[m] = [H[m]^T, F_S]`, an `N x (N' + T)` matrix.
pub fn input_matrix(h: &CMat, fs: &CMat) -> CMat {
    let n = h.ncols();
    let (np, t) = (h.nrows(), fs.ncols());
    CMat::from_fn(n, np + t, |r, c| if c < np { h[(c, r)] } else { fs[(r, c - np)] })
}

/// Splits an input matrix back into `(H[m], F_S)`.
pub fn split_input(pi: &CMat, n_prime: usize) -> (CMat, CMat) {
    let h = pi.columns(0, n_prime).transpose();
    let fs = pi.columns(n_prime, pi.ncols() - n_prime).into_owned();
    (h, fs)
}

/// Adds circular Gaussian noise at `snr_db` relative to the mean entry
/// power of `pi`. Infinite SNR leaves `pi` untouched.
pub fn corrupt(pi: &CMat, snr_db: f64, rng: &mut SimRng) -> CMat {
    if snr_db == f64::INFINITY {
        return pi.clone();
    }
    let power = pi.iter().map(|z| z.norm_sqr()).sum::<f64>() / pi.len() as f64;
    let var = power / 10f64.powf(snr_db / 10.0);
    pi.map(|z| z + complex_gaussian(rng, var))
}

fn tensor_bytes(pi: &CMat) -> Vec<u8> {
    let mut out = Vec::with_capacity(pi.len() * 8);
    for r in 0..pi.nrows() {
        for c in 0..pi.ncols() {
            let z = pi[(r, c)];
            out.extend_from_slice(&(z.re as f32).to_le_bytes());
            out.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
    }
    out
}

/// Reads and checks `manifest.json` in `dir`.
pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        let hint = if dir.join(PARTIAL_FILE).exists() { " (export was interrupted)" } else { "" };
        return Err(IsacError::Format(format!("{} is missing{hint}", path.display())));
    }
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
    let n = manifest.count;
    for (field, len) in [
        ("labels", manifest.labels.len()),
        ("offsets", manifest.offsets.len()),
        ("snr_train", manifest.snr_train.len()),
        ("subcarrier", manifest.subcarrier.len()),
        ("trial_id", manifest.trial_id.len()),
    ] {
        if len != n {
            return Err(IsacError::Format(format!("{field} has {len} entries for {n} samples")));
        }
    }
    let blob = fs::metadata(dir.join(&manifest.blob))?.len();
    if blob != n as u64 * manifest.sample_bytes() {
        return Err(IsacError::Format(format!("{} is {blob} bytes, expected {}", manifest.blob, n as u64 * manifest.sample_bytes())));
    }
    Ok(manifest)
}

fn write_json_atomic(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(manifest)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Per-realization labeling output.
struct Labeled {
    seed: u64,
    problem: SelectionProblem,
    label: usize,
    class_se: Vec<f64>,
}

fn label_realization(cfg: &SystemConfig, seed: u64, blocks: usize) -> Result<Labeled> {
    let mut c = cfg.clone();
    c.seed = seed;
    let (_, problem) = realize(&c)?;
    let sel = sequential_select(&problem, &c, Enumeration::Gss, blocks, c.bsc)?;
    let class_se = sel.scores.iter().map(|s| s.se_total).collect();
    Ok(Labeled { seed, problem, label: sel.best.class_index as usize, class_se })
}

/// Writes `realizations * noise_draws * M * snr_train.len()` samples to
/// `dir`. Sample order is realization, noise draw, SNR, subcarrier.
pub fn export_dataset(
    cfg: &SystemConfig,
    realizations: usize,
    noise_draws: usize,
    snr_train: &[f64],
    blocks: usize,
    dir: &Path,
) -> Result<DatasetManifest> {
    cfg.validate(true)?;
    fs::create_dir_all(dir)?;
    let num_classes = crate::selection::GroupConfig::new(cfg.n, cfg.k, cfg.g)?.count() as usize;
    let mut manifest = DatasetManifest {
        count: 0,
        shape: [cfg.n, cfg.n_prime + cfg.t, 2],
        dtype: "f32le".into(),
        blob: PI_FILE.into(),
        clean_blob: CLEAN_FILE.into(),
        se_lookup: LOOKUP_FILE.into(),
        num_classes,
        labels: Vec::new(),
        offsets: Vec::new(),
        snr_train: Vec::new(),
        subcarrier: Vec::new(),
        trial_id: Vec::new(),
        noise_draw: Vec::new(),
        realization_seeds: Vec::new(),
        realization_labels: Vec::new(),
        snr_list: snr_train.to_vec(),
        realizations,
        noise_draws,
        blocks,
        config: cfg.to_kv_string(""),
        complete: false,
    };
    let _ = fs::remove_file(dir.join(MANIFEST_FILE));
    write_json_atomic(&dir.join(PARTIAL_FILE), &manifest)?;
    match write_samples(cfg, &mut manifest, dir) {
        Ok(()) => {
            manifest.complete = true;
            write_json_atomic(&dir.join(MANIFEST_FILE), &manifest)?;
            fs::remove_file(dir.join(PARTIAL_FILE))?;
            Ok(manifest)
        }
        Err(e) => {
            let _ = write_json_atomic(&dir.join(PARTIAL_FILE), &manifest);
            Err(e)
        }
    }
}

fn write_samples(cfg: &SystemConfig, manifest: &mut DatasetManifest, dir: &Path) -> Result<()> {
    let mut blob = BufWriter::new(fs::File::create(dir.join(PI_FILE))?);
    let mut clean = BufWriter::new(fs::File::create(dir.join(CLEAN_FILE))?);
    let mut lookup = BufWriter::new(fs::File::create(dir.join(LOOKUP_FILE))?);
    writeln!(lookup, "realization,class,SE")?;
    let sample_bytes = manifest.sample_bytes();
    for r in 0..manifest.realizations {
        let seed = trial_seed(cfg.seed, r);
        let labeled = label_realization(cfg, seed, manifest.blocks)?;
        manifest.realization_seeds.push(labeled.seed);
        manifest.realization_labels.push(labeled.label);
        for (class, se) in labeled.class_se.iter().enumerate() {
            writeln!(lookup, "{r},{class},{se:.12}")?;
        }
        let inputs: Vec<CMat> = labeled
            .problem
            .channels
            .matrices
            .iter()
            .map(|h| input_matrix(h, &labeled.problem.fs_full))
            .collect();
        for pi in &inputs {
            clean.write_all(&tensor_bytes(pi))?;
        }
        let mut rng = child_rng(seed, stream::DATASET_NOISE);
        for draw in 0..manifest.noise_draws {
            for &snr in &manifest.snr_list.clone() {
                for (m, pi) in inputs.iter().enumerate() {
                    blob.write_all(&tensor_bytes(&corrupt(pi, snr, &mut rng)))?;
                    manifest.offsets.push(manifest.count as u64 * sample_bytes);
                    manifest.labels.push(labeled.label);
                    manifest.snr_train.push(snr);
                    manifest.subcarrier.push(m + 1);
                    manifest.trial_id.push(r);
                    manifest.noise_draw.push(draw);
                    manifest.count += 1;
                }
            }
        }
    }
    blob.flush()?;
    clean.flush()?;
    lookup.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian_matrix;
    use crate::rng::rng_from;

    #[test]
    fn input_matrix_round_trip() {
        let mut rng = rng_from(71);
        let h = complex_gaussian_matrix(&mut rng, 4, 6, 1.0);
        let fs = complex_gaussian_matrix(&mut rng, 6, 2, 1.0);
        let pi = input_matrix(&h, &fs);
        assert_eq!(pi.shape(), (6, 6));
        let (h2, fs2) = split_input(&pi, 4);
        assert_eq!(h2, h);
        assert_eq!(fs2, fs);
    }

    #[test]
    fn corruption_hits_target_snr() {
        let mut rng = rng_from(72);
        let pi = complex_gaussian_matrix(&mut rng, 64, 64, 2.0);
        let power = pi.iter().map(|z| z.norm_sqr()).sum::<f64>() / pi.len() as f64;
        let noisy = corrupt(&pi, 10.0, &mut rng);
        let noise = (&noisy - &pi).iter().map(|z| z.norm_sqr()).sum::<f64>() / pi.len() as f64;
        assert!((noise / (power / 10.0) - 1.0).abs() < 0.03);
        assert_eq!(corrupt(&pi, f64::INFINITY, &mut rng), pi);
    }

    #[test]
    fn tensor_layout_is_row_major_re_im() {
        let mut pi = CMat::zeros(2, 3);
        pi[(0, 1)] = crate::linalg::C64::new(1.5, -2.0);
        pi[(1, 0)] = crate::linalg::C64::new(3.0, 0.25);
        let bytes = tensor_bytes(&pi);
        let floats: Vec<f32> = bytes.chunks(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        assert_eq!(floats, vec![0.0, 0.0, 1.5, -2.0, 0.0, 0.0, 3.0, 0.25, 0.0, 0.0, 0.0, 0.0]);
    }
}
