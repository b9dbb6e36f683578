//! Architecture-scaling studies: train `Psi o phi` for a ladder of architectures
//! and record the test error of each.

use std::time::Instant;

use super::arch::{architecture_ladder, ArchSpec};
use super::config::Manifest;
use super::svg::{Chart, Guide, Series};
use crate::error::Result;
use crate::problems::{fhn_dataset, BenchmarkOperator, Dataset, FHNConfig, Split};
use crate::spectral::DyadicGrid;
use crate::train::{test_error, train_ensemble, FrozenDecoder, MLPShape, TrainConfig};

/// Result of training one architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    /// Series label (grid level or initial guess).
    pub series: String,
    pub level: usize,
    pub m: usize,
    pub w: usize,
    pub depth: usize,
    pub active_weights: usize,
    pub error: f64,
    /// Seed of the winning restart.
    pub seed: u64,
    pub train_loss: f64,
    pub diverged_restarts: usize,
    pub wall_s: f64,
}

/// Train the winner of `train.restarts` restarts for `arch` and evaluate it.
pub fn train_architecture(
    series: &str,
    level: usize,
    arch: &ArchSpec,
    train_set: &Dataset,
    test_set: &Dataset,
    train: &TrainConfig,
) -> Result<ScalingRow> {
    let start = Instant::now();
    let decoder = FrozenDecoder::new(arch.k, arch.m)?;
    let shape = MLPShape { slope: arch.slope, ..MLPShape::for_modes(arch.p, arch.w, arch.depth, arch.m) };
    let ensemble = train_ensemble(shape, &decoder, train_set, train)?;
    let best = ensemble.best_member();
    let error = test_error(&best.params, &decoder, test_set)?;
    Ok(ScalingRow {
        series: series.to_string(),
        level,
        m: arch.m,
        w: arch.w,
        depth: arch.depth,
        active_weights: decoder.active_weights() + best.params.active_weights(),
        error,
        seed: best.seed,
        train_loss: best.final_loss(),
        diverged_restarts: ensemble.members.iter().filter(|m| m.diverged).count(),
        wall_s: start.elapsed().as_secs_f64(),
    })
}

/// Benchmark study (`s = 3`, `r = 2`, `p = 3`) on every grid level in `k_list`.
#[allow(clippy::too_many_arguments)]
pub fn run_scaling_benchmark(
    initial: (usize, usize, usize),
    levels: usize,
    l: usize,
    k_list: &[u32],
    n_train: usize,
    n_test: usize,
    data_seed: u64,
    train: &TrainConfig,
) -> Result<Vec<ScalingRow>> {
    let op = BenchmarkOperator::new();
    let mut rows = Vec::new();
    for &k in k_list {
        let grid = DyadicGrid::new(k)?;
        let train_set = op.dataset(n_train, grid, data_seed, Split::Train)?;
        let test_set = op.dataset(n_test, grid, data_seed + 1, Split::Test)?;
        let start = ArchSpec { m: initial.0, w: initial.1, depth: initial.2, p: BenchmarkOperator::P, k, slope: 0.01, seed: train.seed };
        let ladder = architecture_ladder(&start, BenchmarkOperator::S, Some(BenchmarkOperator::R), l, levels)?;
        for (j, arch) in ladder.iter().enumerate() {
            rows.push(train_architecture(&format!("k={k}"), j + 1, arch, &train_set, &test_set, train)?);
        }
    }
    Ok(rows)
}

/// FitzHugh–Nagumo study (`s = 1`, `r = infinity`, `p = 2`) for every initial guess.
pub fn run_scaling_fhn(
    initial: &[(usize, usize, usize)],
    levels: usize,
    l: usize,
    fhn: &FHNConfig,
    n_mu_train: usize,
    n_t: usize,
    train: &TrainConfig,
) -> Result<Vec<ScalingRow>> {
    let (train_set, test_set) = fhn_dataset(fhn, n_mu_train, n_t)?;
    let mut rows = Vec::new();
    for &(m, w, depth) in initial {
        let start = ArchSpec { m, w, depth, p: 2, k: fhn.level, slope: 0.01, seed: train.seed };
        let ladder = architecture_ladder(&start, 1, None, l, levels)?;
        for (j, arch) in ladder.iter().enumerate() {
            rows.push(train_architecture(&format!("guess={m},{w},{depth}"), j + 1, arch, &train_set, &test_set, train)?);
        }
    }
    Ok(rows)
}

/// `E(j+1) / E(j)` within each series, in row order.
pub fn error_ratios(rows: &[ScalingRow]) -> Vec<(String, usize, f64)> {
    rows.windows(2)
        .filter(|p| p[0].series == p[1].series && p[1].level == p[0].level + 1)
        .map(|p| (p[1].series.clone(), p[1].level, p[1].error / p[0].error))
        .collect()
}

/// `level,m,w,L,active_weights,E,seed,wall_s` for `rows`.
pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("level,m,w,L,active_weights,E,seed,wall_s\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6e},{},{:.3}\n",
            r.level, r.m, r.w, r.depth, r.active_weights, r.error, r.seed, r.wall_s
        ));
    }
    out
}

/// One CSV per series, named `{prefix}_{series}.csv` with the series label made file-safe.
pub fn scaling_files(prefix: &str, rows: &[ScalingRow]) -> Vec<(String, String)> {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.series.as_str()) {
            labels.push(&r.series);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let safe: String = label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
            let series: Vec<ScalingRow> = rows.iter().filter(|r| r.series == label).cloned().collect();
            (format!("{prefix}_{safe}.csv"), scaling_csv(&series))
        })
        .collect()
}

pub fn scaling_manifest(rows: &[ScalingRow], manifest: &mut Manifest) {
    for r in rows {
        let key = format!("{}.level{}", r.series, r.level);
        manifest
            .push(format!("{key}.arch"), format!("{},{},{}", r.m, r.w, r.depth))
            .push(format!("{key}.active_weights"), r.active_weights)
            .push(format!("{key}.E"), format!("{:e}", r.error))
            .push(format!("{key}.train_loss"), format!("{:e}", r.train_loss))
            .push(format!("{key}.winner_seed"), r.seed)
            .push(format!("{key}.diverged_restarts"), r.diverged_restarts)
            .push(format!("{key}.wall_s"), format!("{:.3}", r.wall_s));
    }
}

/// `E` against `2^j`, so that the predicted `2^{-j}` decay is a slope `-1` guide.
pub fn scaling_chart(title: &str, rows: &[ScalingRow]) -> Chart {
    let mut labels: Vec<String> = Vec::new();
    for r in rows {
        if !labels.contains(&r.series) {
            labels.push(r.series.clone());
        }
    }
    let series = labels
        .iter()
        .map(|label| Series {
            label: label.clone(),
            points: rows.iter().filter(|r| &r.series == label).map(|r| ((r.level as f64).exp2(), r.error)).collect(),
        })
        .collect();
    let guides = rows
        .first()
        .map(|r| Guide { label: "2^-j".into(), slope: -1.0, anchor: ((r.level as f64).exp2(), r.error) })
        .into_iter()
        .collect();
    Chart { title: title.into(), x_label: "2^j".into(), y_label: "E".into(), series, guides }
}
