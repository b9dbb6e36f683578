//! The decay and scaling studies, architecture-scaling rules and their output formats.

mod arch;
mod config;
mod fig1;
mod scaling;
mod svg;

pub use arch::{architecture_ladder, choose_m, scale_architecture, scaling_factors, ArchSpec};
pub use config::{parse_key_values, ExperimentConfig, Manifest};
pub use fig1::{fig1_chart, fig1_csv, folded_norm, loglog_slope, run_fig1, theorem_bound, Fig1Row, Fig1Signal};
pub use scaling::{
    error_ratios, run_scaling_benchmark, run_scaling_fhn, scaling_chart, scaling_csv, scaling_files, scaling_manifest,
    train_architecture, ScalingRow,
};
pub use svg::{emit_svg, render_svg, Chart, Guide, Series};
