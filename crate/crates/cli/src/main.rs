use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use a3gcn::config::{ExperimentConfig, Variant};
use a3gcn::data::{generate_sbm, inject_noisy_edges, load_bundle, write_bundle, SbmSpec};
use a3gcn::experiment::{export_trial_embeddings, read_summary, run_experiment, run_sweep};
use a3gcn::figures::{emit_figure_data, Figure};

#[derive(Parser)]
#[command(
    name = "a3gcn",
    version,
    about = "Agreement-adaptive GCN ensembles for node classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials of a config and write per-trial CSVs and summary.json.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run every grid point of a config's sweep.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Generate a planted-partition dataset bundle. SPEC is a JSON file or `fixture`.
    GenSbm {
        spec: String,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replace a bundle's inter-class edges with q·|E_clean| random ones.
    InjectNoise {
        bundle: PathBuf,
        q: f64,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train trial 0 up to EPOCH and write the consensus model's hidden embeddings.
    ExportEmbeddings {
        config: PathBuf,
        epoch: usize,
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Load and validate a bundle, printing its shape.
    Validate { bundle: PathBuf },
    /// Emit tidy CSV data for a figure (fig4..fig8, label-rate) from result directories.
    Figure {
        figure: String,
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags that override config fields.
#[derive(Args, Default)]
struct Overrides {
    /// Master seed; per-trial seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials run concurrently.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    p_drop: Option<f64>,
    #[arg(long)]
    theta_init: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    noise_q: Option<f64>,
    #[arg(long)]
    row_normalize: Option<bool>,
    /// Report the consensus model at its best validation epoch.
    #[arg(long)]
    select_best_val: bool,
    /// Require equal labels for a node to count in the high-confidence intersection.
    #[arg(long)]
    label_aware_agreement: bool,
}

impl Overrides {
    fn apply(&self, c: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$target = v; })*
            };
        }
        set!(seed => master_seed, jobs => jobs, trials => trials, variant => variant, k => k, alpha => alpha,
             beta => beta, p_drop => p_drop, theta_init => theta_init, max_epochs => max_epochs,
             hidden_dim => hidden_dim, dropout => dropout, lr => lr, weight_decay => weight_decay);
        if self.per_class.is_some() {
            c.per_class = self.per_class;
        }
        if self.noise_q.is_some() {
            c.noise_q = self.noise_q;
        }
        if let Some(v) = self.row_normalize {
            c.row_normalize = v;
        }
        c.select_best_val |= self.select_best_val;
        c.label_aware_agreement |= self.label_aware_agreement;
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_file(path)?;
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn fmt_std(std: Option<f64>) -> String {
    std.map_or_else(|| "n/a".into(), |s| format!("{:.2}", 100.0 * s))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, overrides, out } => {
            let config = load_config(&config, &overrides)?;
            let s = run_experiment(&config, &out)?;
            println!(
                "{}: test accuracy {:.2} ± {} over {} trials -> {}",
                config.variant,
                100.0 * s.mean,
                fmt_std(s.std),
                s.trials.len(),
                out.display()
            );
        }
        Command::Sweep { config, overrides, out } => {
            let config = load_config(&config, &overrides)?;
            let s = run_sweep(&config, &out)?;
            for row in &s.points {
                println!(
                    "{} -> {:.2} ± {}",
                    serde_json::to_string(&row.point)?,
                    100.0 * row.mean,
                    fmt_std(row.std)
                );
            }
            println!("{} grid points -> {}", s.points.len(), out.display());
        }
        Command::GenSbm { spec, out_dir, seed } => {
            let spec = if spec == "fixture" {
                SbmSpec::fixture()
            } else {
                let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {spec}"))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {spec}"))?
            };
            let d = generate_sbm(&spec, seed)?;
            write_bundle(&d, &out_dir)?;
            println!("{}", d.shape_line());
        }
        Command::InjectNoise {
            bundle,
            q,
            out_dir,
            seed,
        } => {
            let d = inject_noisy_edges(&load_bundle(&bundle)?, q, seed)?;
            write_bundle(&d, &out_dir)?;
            println!("{} inter-class={}", d.shape_line(), d.inter_class_edges());
        }
        Command::ExportEmbeddings {
            config,
            epoch,
            out,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            export_trial_embeddings(&config, epoch, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Validate { bundle } => {
            let d = load_bundle(&bundle)?;
            println!("{}", d.shape_line());
        }
        Command::Figure { figure, results, out } => {
            let figure: Figure = figure.parse()?;
            let summaries = results.iter().map(|p| read_summary(p)).collect::<Result<Vec<_>, _>>()?;
            let csv = emit_figure_data(figure, &summaries)?;
            match out {
                Some(path) => std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}
