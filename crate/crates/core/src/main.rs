//! Experiment runner CLI.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use plasmodium::config;
use plasmodium::experiments::{execute, ExperimentKind, ExperimentParams, RunError};
use plasmodium::lattice::GridDims;
use plasmodium::stimulus::{build_chevreul, build_sbc};

#[derive(Parser)]
#[command(name = "plasmodium", version, about = "Virtual plasmodium lattice simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Li,
    La,
    Chevreul,
    Sbc,
    Custom,
}

impl From<ExperimentArg> for ExperimentKind {
    fn from(a: ExperimentArg) -> Self {
        match a {
            ExperimentArg::Li => ExperimentKind::Li,
            ExperimentArg::La => ExperimentKind::La,
            ExperimentArg::Chevreul => ExperimentKind::Chevreul,
            ExperimentArg::Sbc => ExperimentKind::Sbc,
            ExperimentArg::Custom => ExperimentKind::Custom,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        #[arg(long)]
        experiment: ExperimentArg,
        #[arg(long)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Optional flat `key = value` config file (a recorded manifest works).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Repeatable `key=value` overrides, applied after the config file.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Generate a stimulus image without running a simulation.
    Image {
        #[command(subcommand)]
        which: ImageCommand,
    },
    /// Run one experiment across a range of seeds, one subdirectory each.
    Sweep {
        #[arg(long)]
        experiment: ExperimentArg,
        /// Seed range `a..b` (half-open, Rust style).
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Args)]
struct ImageOut {
    /// Output PGM path.
    #[arg(long)]
    out: PathBuf,
    /// Write ASCII P2 instead of binary P5.
    #[arg(long)]
    ascii: bool,
}

#[derive(Subcommand)]
enum ImageCommand {
    /// Staircase of uniform bars between zero-brightness borders.
    Chevreul {
        #[arg(long, default_value_t = 692)]
        width: u32,
        #[arg(long, default_value_t = 288)]
        height: u32,
        #[arg(long, default_value_t = 8)]
        n_bars: u32,
        #[arg(long, default_value_t = 50)]
        border_width: u32,
        #[arg(long, default_value_t = 25)]
        min_brightness: u8,
        #[arg(long, default_value_t = 200)]
        max_brightness: u8,
        #[command(flatten)]
        out: ImageOut,
    },
    /// Two squares with pixel-identical central grey bands.
    Sbc {
        #[arg(long, default_value_t = 600)]
        width: u32,
        #[arg(long, default_value_t = 300)]
        height: u32,
        #[arg(long, default_value_t = 64)]
        left_brightness: u8,
        #[arg(long, default_value_t = 192)]
        right_brightness: u8,
        #[arg(long, default_value_t = 128)]
        band_brightness: u8,
        #[arg(long, default_value_t = 60)]
        band_width: u32,
        #[command(flatten)]
        out: ImageOut,
    },
}

fn build_params(
    kind: ExperimentKind,
    seed: u64,
    config_path: Option<&PathBuf>,
    overrides: &[String],
) -> Result<ExperimentParams, RunError> {
    let mut params = ExperimentParams::defaults(kind, seed);
    if let Some(path) = config_path {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        let pairs = config::parse_flat(&text)?;
        config::apply_pairs(&mut params, &pairs)?;
    }
    let pairs: Vec<(String, String)> = overrides
        .iter()
        .map(|o| config::parse_override(o))
        .collect::<Result<_, _>>()?;
    config::apply_pairs(&mut params, &pairs)?;
    Ok(params)
}

fn parse_seed_range(text: &str) -> Result<std::ops::Range<u64>, RunError> {
    let err = || RunError::BadParams(format!("--seeds expects a..b, got {text}"));
    let (a, b) = text.split_once("..").ok_or_else(err)?;
    let start: u64 = a.trim().parse().map_err(|_| err())?;
    let end: u64 = b.trim().parse().map_err(|_| err())?;
    if end <= start {
        return Err(RunError::BadParams(format!(
            "--seeds range {text} is empty"
        )));
    }
    Ok(start..end)
}

fn cmd_run(
    kind: ExperimentKind,
    seed: u64,
    out: &Path,
    config_path: Option<&PathBuf>,
    overrides: &[String],
) -> Result<(), RunError> {
    let spec = build_params(kind, seed, config_path, overrides)?.resolve()?;
    let manifest = execute(&spec, out)?;
    println!(
        "wrote {} artifacts to {} (experiment {}, seed {})",
        manifest
            .entries
            .iter()
            .filter(|(k, _)| k.starts_with("artifact."))
            .count()
            + 1,
        out.display(),
        spec.params.kind.name(),
        spec.params.seed,
    );
    Ok(())
}

fn cmd_sweep(
    kind: ExperimentKind,
    seeds: std::ops::Range<u64>,
    out: &Path,
    config_path: Option<&PathBuf>,
    overrides: &[String],
) -> Result<(), RunError> {
    for seed in seeds {
        let dir = out.join(format!("seed-{seed}"));
        cmd_run(kind, seed, &dir, config_path, overrides)?;
    }
    Ok(())
}

fn cmd_image(which: ImageCommand) -> Result<(), RunError> {
    let (image, out) = match which {
        ImageCommand::Chevreul {
            width,
            height,
            n_bars,
            border_width,
            min_brightness,
            max_brightness,
            out,
        } => {
            let dims = GridDims::new(width, height)
                .map_err(|e| RunError::BadParams(e.to_string()))?;
            let img = build_chevreul(dims, n_bars, border_width, min_brightness, max_brightness)
                .map_err(|e| RunError::BadParams(e.to_string()))?;
            (img, out)
        }
        ImageCommand::Sbc {
            width,
            height,
            left_brightness,
            right_brightness,
            band_brightness,
            band_width,
            out,
        } => {
            let dims = GridDims::new(width, height)
                .map_err(|e| RunError::BadParams(e.to_string()))?;
            let img = build_sbc(
                dims,
                left_brightness,
                right_brightness,
                band_brightness,
                band_width,
            )
            .map_err(|e| RunError::BadParams(e.to_string()))?;
            (img, out)
        }
    };
    let mut buf = Vec::new();
    image
        .write_pgm(&mut buf, out.ascii)
        .expect("in-memory write");
    fs::write(&out.out, buf).map_err(|source| RunError::Io {
        path: out.out.clone(),
        source,
    })?;
    println!("wrote {}", out.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            experiment,
            seed,
            out,
            config,
            overrides,
        } => cmd_run(experiment.into(), seed, &out, config.as_ref(), &overrides),
        Command::Image { which } => cmd_image(which),
        Command::Sweep {
            experiment,
            seeds,
            out,
            config,
            overrides,
        } => parse_seed_range(&seeds).and_then(|range| {
            cmd_sweep(experiment.into(), range, &out, config.as_ref(), &overrides)
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
