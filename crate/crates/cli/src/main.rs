use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use spectral_cnn::experiments::{
    emit_svg, fig1_chart, fig1_csv, folded_norm, loglog_slope, run_fig1, run_scaling_benchmark, run_scaling_fhn,
    scaling_chart, scaling_files, scaling_manifest, theorem_bound, ExperimentConfig, Fig1Signal, Manifest,
};
use spectral_cnn::problems::fhn::front_steepness;
use spectral_cnn::problems::{fhn_dataset, fhn_solve, FHNConfig};
use spectral_cnn::validate::{run_validate, ValidateConfig};

/// Exact-weight Fourier-synthesis CNNs: property suite and scaling experiments.
#[derive(Parser)]
#[command(name = "spectral-cnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full property suite; exits nonzero if any check fails.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Skip the scaling studies (the only checks that train).
        #[arg(long)]
        no_train: bool,
        /// Largest grid level of the exactness and architecture checks.
        #[arg(long, default_value_t = 10)]
        max_level: u32,
        /// Largest mode bound of the exactness and architecture checks.
        #[arg(long, default_value_t = 32)]
        max_modes: usize,
    },
    /// Decoder error against the mode bound for the two reference signals.
    Fig1 {
        #[command(flatten)]
        common: Common,
    },
    /// Architecture-scaling study on the analytic benchmark operator.
    BenchScale {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the FitzHugh-Nagumo system for one diffusion parameter.
    FhnSolve {
        #[arg(long)]
        mu: f64,
        /// Grid level of the spatial mesh.
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        /// Also write the training and test datasets.
        #[arg(long)]
        dataset: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Architecture-scaling study on FitzHugh-Nagumo data.
    FhnScale {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key=value file overriding the defaults; flags override the file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<u32>>,
    /// Mode bounds, comma separated.
    #[arg(long = "m-list", value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    /// Architectures per scaling ladder.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also emit SVG plots.
    #[arg(long)]
    plot: bool,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(k) = &self.k {
            c.k_list = k.clone();
        }
        if let Some(m) = &self.m_list {
            c.m_list = m.clone();
        }
        if let Some(levels) = self.levels {
            c.levels = levels;
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(restarts) = self.restarts {
            c.restarts = restarts;
        }
        c.validate()?;
        Ok(c)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn validate(common: &Common, no_train: bool, max_level: u32, max_modes: usize) -> Result<bool> {
    let cfg = ValidateConfig {
        experiment: common.experiment()?,
        max_level,
        max_modes,
        training: !no_train,
        ..ValidateConfig::default()
    };
    let reports = run_validate(&cfg, Some(common.out_dir()?))?;
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed; outputs in {}", reports.len() - failed, reports.len(), common.out.display());
    Ok(failed == 0)
}

fn fig1(common: &Common) -> Result<()> {
    let cfg = common.experiment()?;
    let dir = common.out_dir()?;
    let mut manifest = Manifest::new();
    manifest.push("version", env!("CARGO_PKG_VERSION"));
    cfg.record(&mut manifest);
    for signal in Fig1Signal::ALL {
        let rows = run_fig1(signal, &cfg.m_list, &cfg.k_list)?;
        let (norm, converged) = folded_norm(signal)?;
        let s = signal.smoothness();
        manifest.push(format!("{signal}.s"), s).push(format!("{signal}.norm"), format!("{norm:e}"));
        manifest.push(format!("{signal}.norm_converged"), converged);
        for &k in &cfg.k_list {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.k == k).map(|r| (r.m as f64, r.error)).collect();
            if pts.len() > 1 {
                manifest.push(format!("{signal}.k{k}.slope"), format!("{:.4}", loglog_slope(&pts)));
            }
        }
        let worst = rows.iter().map(|r| r.error / theorem_bound(s, r.m, norm)).fold(0.0, f64::max);
        manifest.push(format!("{signal}.max_error_over_bound"), format!("{worst:.4e}"));
        write(dir, &format!("fig1_{signal}.csv"), &fig1_csv(&rows))?;
        if common.plot {
            let path = dir.join(format!("fig1_{signal}.svg"));
            emit_svg(&fig1_chart(&rows), &path)?;
            println!("wrote {}", path.display());
        }
    }
    write(dir, "fig1_manifest.txt", &manifest.render())
}

fn bench_scale(common: &Common) -> Result<()> {
    let cfg = common.experiment()?;
    let dir = common.out_dir()?;
    let rows = run_scaling_benchmark(
        cfg.bench_arch,
        cfg.levels,
        cfg.bench_l,
        &cfg.k_list,
        cfg.bench_train,
        cfg.bench_test,
        cfg.seed,
        &cfg.train_config(),
    )?;
    let mut manifest = Manifest::new();
    manifest.push("version", env!("CARGO_PKG_VERSION"));
    cfg.record(&mut manifest);
    scaling_manifest(&rows, &mut manifest);
    for (name, content) in scaling_files("bench_scale", &rows) {
        write(dir, &name, &content)?;
    }
    if common.plot {
        let path = dir.join("bench_scale.svg");
        emit_svg(&scaling_chart("benchmark operator", &rows), &path)?;
        println!("wrote {}", path.display());
    }
    write(dir, "bench_scale_manifest.txt", &manifest.render())
}

fn fhn_scale(common: &Common) -> Result<()> {
    let cfg = common.experiment()?;
    let dir = common.out_dir()?;
    let fhn = FHNConfig { level: cfg.fhn_level, ..FHNConfig::default() };
    let rows =
        run_scaling_fhn(&cfg.fhn_arch, cfg.levels, cfg.fhn_l, &fhn, cfg.fhn_mu_train, cfg.fhn_snapshots, &cfg.train_config())?;
    let mut manifest = Manifest::new();
    manifest.push("version", env!("CARGO_PKG_VERSION"));
    cfg.record(&mut manifest);
    manifest.push("assumption", "r = infinity with the approximation constant bounded in r");
    scaling_manifest(&rows, &mut manifest);
    for (name, content) in scaling_files("fhn_scale", &rows) {
        write(dir, &name, &content)?;
    }
    if common.plot {
        let path = dir.join("fhn_scale.svg");
        emit_svg(&scaling_chart("FitzHugh-Nagumo", &rows), &path)?;
        println!("wrote {}", path.display());
    }
    write(dir, "fhn_scale_manifest.txt", &manifest.render())
}

fn fhn_single(mu: f64, level: Option<u32>, dt: Option<f64>, t_final: Option<f64>, dataset: bool, common: &Common) -> Result<()> {
    let cfg = common.experiment()?;
    let defaults = FHNConfig::default();
    let fhn = FHNConfig {
        level: level.unwrap_or(cfg.fhn_level),
        dt: dt.unwrap_or(defaults.dt),
        t_final: t_final.unwrap_or(defaults.t_final),
        ..defaults
    };
    let dir = common.out_dir()?;
    let traj = fhn_solve(mu, &fhn)?;
    let (u, w) = (dir.join("fhn_u.csv"), dir.join("fhn_w.csv"));
    traj.dump_csv(&u, &w)?;
    println!("wrote {} and {}", u.display(), w.display());
    println!("front steepness {:.6}", front_steepness(&traj));
    if dataset {
        let (train, test) = fhn_dataset(&fhn, cfg.fhn_mu_train, cfg.fhn_snapshots)?;
        for (set, name) in [(&train, "fhn_train.csv"), (&test, "fhn_test.csv")] {
            set.save(&dir.join(name))?;
            println!("wrote {} ({} samples)", dir.join(name).display(), set.len());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Validate { common, no_train, max_level, max_modes } => validate(common, *no_train, *max_level, *max_modes),
        Command::Fig1 { common } => fig1(common).map(|_| true),
        Command::BenchScale { common } => bench_scale(common).map(|_| true),
        Command::FhnSolve { mu, level, dt, t_final, dataset, common } => {
            fhn_single(*mu, *level, *dt, *t_final, *dataset, common).map(|_| true)
        }
        Command::FhnScale { common } => fhn_scale(common).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
