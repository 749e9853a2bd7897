use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use isac_core::experiments::{
    evaluate_selection_robustness, export_dataset, realize, robustness_csv, run_sweep, Method, Selector, SweepSpec,
    SweepVar,
};
use isac_core::scenario::subcarrier_etas;
use isac_core::selection::{
    array_gain, exhaustive_select, selection_csv, sequential_select, spectral_efficiency_per_subcarrier,
    SubarrayConfig,
};
use isac_core::{design_hybrid, DesignOptions, Enumeration, SystemConfig};

use crate::args::{Command, Common, DesignArgs, ExportArgs, GainArgs, Mode, RobustnessArgs, SelectArgs, SweepArgs};

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Design(a) => design(a),
        Command::Select(a) => select(a),
        Command::Sweep(a) => sweep(a),
        Command::ExportDataset(a) => export(a),
        Command::GainProfile(a) => gain_profile(a),
        Command::EvalRobustness(a) => robustness(a),
    }
}

/// Defaults, then the config file, then `--set`, then named flags.
fn resolve(common: &Common) -> Result<SystemConfig> {
    let mut cfg = SystemConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_kv_str(&text).with_context(|| format!("in {}", path.display()))?;
    }
    for kv in &common.set {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got {kv:?}");
        };
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    macro_rules! flag {
        ($field:ident, $target:ident) => {
            if let Some(v) = common.$field {
                cfg.$target = v;
            }
        };
    }
    flag!(n, n);
    flag!(k, k);
    flag!(g, g);
    flag!(m, m);
    flag!(n_rf, n_rf);
    flag!(n_ds, n_ds);
    flag!(fc, fc);
    flag!(bandwidth, bandwidth);
    flag!(epsilon, epsilon);
    if let Some(snr) = common.snr {
        cfg.set_snr_db(snr);
    }
    if common.no_bsc {
        cfg.bsc = false;
    }
    Ok(cfg)
}

fn header(command: &str, cfg: &SystemConfig) -> String {
    format!("# isac {command}\n{}", cfg.to_kv_string("# "))
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().with_context(|| format!("{} is not a file path", path.display()))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn design(a: DesignArgs) -> Result<()> {
    let cfg = resolve(&a.common)?;
    cfg.validate(false)?;
    let sub = match &a.subarray {
        Some(one_based) => {
            if one_based.contains(&0) {
                bail!("--subarray indices are one-based");
            }
            let mut idx: Vec<usize> = one_based.iter().map(|i| i - 1).collect();
            idx.sort_unstable();
            SubarrayConfig::from_indices(idx, cfg.n)?
        }
        None => SubarrayConfig::from_rank(1, cfg.n, cfg.k)?,
    };
    let (_, problem) = realize(&cfg)?;
    let opts = DesignOptions { trace: a.trace, ..DesignOptions::from_config(&cfg) };
    let d = design_hybrid(&sub, &problem.fc_full, &problem.fs_full, &cfg, &opts)?;
    let h = problem.channels.select(&sub.antenna_indices);
    let se = spectral_efficiency_per_subcarrier(&h, &d.beamformer.precoders(), cfg.sigma2, cfg.n_ds)?;
    let mut out = header("design", &cfg);
    let _ = writeln!(out, "# subarray = {}", sub.indices_label());
    let _ = writeln!(out, "# rank_p = {}", sub.rank_p);
    let _ = writeln!(out, "# converged = {}", d.converged);
    let _ = writeln!(out, "# outer_iterations = {}", d.residuals.len());
    let _ = writeln!(out, "# final_residual = {:.12e}", d.residuals.last().copied().unwrap_or(f64::NAN));
    let _ = writeln!(out, "# SE_total = {:.12}", se.iter().sum::<f64>());
    out.push_str("m,SE\n");
    for (m, v) in se.iter().enumerate() {
        let _ = writeln!(out, "{},{v:.12}", m + 1);
    }
    write_atomic(&a.common.out, &out)?;
    if a.trace {
        write_atomic(&with_suffix(&a.common.out, ".trace.csv"), &d.trace_csv())?;
    }
    Ok(())
}

fn select(a: SelectArgs) -> Result<()> {
    let cfg = resolve(&a.common)?;
    cfg.validate(a.mode == Mode::Gss)?;
    let (_, problem) = realize(&cfg)?;
    let sel = match a.mode {
        Mode::Full => exhaustive_select(&problem, &cfg, Enumeration::Full, cfg.bsc)?,
        Mode::Gss => exhaustive_select(&problem, &cfg, Enumeration::Gss, cfg.bsc)?,
        Mode::Sequential => sequential_select(&problem, &cfg, Enumeration::Full, a.blocks, cfg.bsc)?,
    };
    let mut out = header("select", &cfg);
    let _ = writeln!(out, "# mode = {:?}", a.mode);
    let _ = writeln!(out, "# best_p = {}", sel.best.config.rank_p);
    let _ = writeln!(out, "# best_antennas = {}", sel.best.config.indices_label());
    let _ = writeln!(out, "# best_SE = {:.12}", sel.best.se_total);
    let _ = writeln!(out, "# peak_retained = {}", sel.peak_retained);
    out.push_str(&selection_csv(&sel.scores));
    write_atomic(&a.common.out, &out)
}

/// `start:step:stop` (inclusive, with tolerance) or a comma list.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in --values"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        1 => spec.split(',').map(parse).collect(),
        3 => {
            let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
            if !(step > 0.0) || stop < start {
                bail!("--values range needs step > 0 and stop >= start");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + step * i as f64).collect())
        }
        _ => bail!("--values expects start:step:stop or a comma list"),
    }
}

fn sweep(a: SweepArgs) -> Result<()> {
    let base = resolve(&a.common)?;
    let variable: SweepVar = a.var.parse()?;
    let methods = match &a.methods {
        Some(list) => list.iter().map(|m| m.parse()).collect::<Result<Vec<Method>, _>>()?,
        None => Method::ALL.to_vec(),
    };
    let enumeration = if a.mode == Mode::Gss { Enumeration::Gss } else { Enumeration::Full };
    // Base configuration must be structurally valid apart from the swept key.
    let spec = SweepSpec { variable, values: parse_values(&a.values)?, trials: a.trials, methods, base, enumeration };
    let res = run_sweep(&spec)?;
    let mut head = header("sweep", &spec.base);
    let _ = writeln!(head, "# trials = {}", spec.trials);
    for (v, why) in &res.skipped {
        let _ = writeln!(head, "# skipped {} = {v}: {why}", variable.as_str());
    }
    write_atomic(&a.common.out, &format!("{head}{}", res.trials_csv()))?;
    write_atomic(&with_suffix(&a.common.out, ".summary.csv"), &format!("{head}{}", res.summary_csv()))
}

fn export(a: ExportArgs) -> Result<()> {
    let cfg = resolve(&a.common)?;
    let manifest = export_dataset(&cfg, a.realizations, a.draws, &a.snr_train, a.blocks, &a.common.out)?;
    log::info!("wrote {} samples to {}", manifest.count, a.common.out.display());
    Ok(())
}

fn gain_profile(a: GainArgs) -> Result<()> {
    let cfg = resolve(&a.common)?;
    cfg.validate(false)?;
    if !(a.step > 0.0) {
        bail!("--step must be positive");
    }
    let full = SubarrayConfig::full(cfg.n);
    let theta = a.theta.to_radians();
    let mut out = header("gain-profile", &cfg);
    let _ = writeln!(out, "# theta_deg = {}", a.theta);
    out.push_str("m,vartheta_deg,gain\n");
    let points = (180.0 / a.step).floor() as usize;
    for (m, eta) in subcarrier_etas(&cfg).into_iter().enumerate() {
        for i in 0..=points {
            let v = i as f64 * a.step;
            let g = array_gain(theta, v.to_radians(), eta, &full, &full);
            let _ = writeln!(out, "{},{v},{g:.12e}", m + 1);
        }
    }
    write_atomic(&a.common.out, &out)
}

fn read_predictions(path: &Path) -> Result<Vec<(f64, usize, usize)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            bail!("{} line {}: expected snr_test,sample,class", path.display(), i + 1);
        }
        let bad = || format!("{} line {}: {line:?}", path.display(), i + 1);
        out.push((f[0].parse().with_context(bad)?, f[1].parse().with_context(bad)?, f[2].parse().with_context(bad)?));
    }
    Ok(out)
}

fn robustness(a: RobustnessArgs) -> Result<()> {
    let selector = match &a.predictions {
        Some(p) => Selector::LearnedLabels(read_predictions(p)?),
        None => Selector::ModelBased { draws: a.draws },
    };
    let rows = evaluate_selection_robustness(&a.dataset, &selector, &a.snr_test)?;
    let cfg = isac_core::experiments::read_manifest(&a.dataset)?.system_config()?;
    write_atomic(&a.common.out, &format!("{}{}", header("eval-robustness", &cfg), robustness_csv(&rows)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_ranges() {
        assert_eq!(parse_values("-10:5:20").unwrap(), vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(parse_values("6,8,10").unwrap(), vec![6.0, 8.0, 10.0]);
        assert_eq!(parse_values("0:0.1:0.3").unwrap().len(), 4);
        assert!(parse_values("1:0:3").is_err());
        assert!(parse_values("1:2").is_err());
        assert!(parse_values("a,b").is_err());
    }
}
