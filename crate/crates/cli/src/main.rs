use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cortexkit_cli::config::parse_config_text;
use cortexkit_cli::phantom::write_phantom;
use cortexkit_cli::{run, PipelineConfig, Stage};

#[derive(Parser, Debug)]
#[command(name = "cortexkit", version, about = "Cortical surface reconstruction from whole-brain label volumes")]
struct Cli {
    /// key = value settings file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    subject_dir: Option<PathBuf>,
    /// Tab-separated label table (defaults to the built-in DKT table)
    #[arg(long, global = true)]
    label_table: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// left, right or both
    #[arg(long, global = true)]
    hemi: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Coronal, axial and sagittal weights, e.g. 1,1,0.5
    #[arg(long, global = true)]
    view_weights: Option<String>,
    /// Comma-separated stages run by `all`
    #[arg(long, global = true)]
    stages: Option<String>,
    /// Thickness smoothing kernel in mm (0 disables)
    #[arg(long, global = true)]
    fwhm: Option<f64>,
    /// Volume axis receiving each of the three eigenfunctions, e.g. 0,1,2
    #[arg(long, global = true)]
    axes: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    Conform,
    Mask,
    Surf,
    Sphere,
    Map,
    Thickness,
    Metrics,
    Stats,
    /// Every stage in order (or the `stages` list of the config file)
    All,
    /// Write a synthetic subject directory
    Phantom {
        #[arg(long)]
        out: PathBuf,
    },
}

fn build_config(cli: &Cli) -> Result<PipelineConfig, String> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.apply(&parse_config_text(&text)?)?;
    }
    // flags use the config keys and win over the file
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let flags = [
        ("subject_dir", path(&cli.subject_dir)),
        ("label_table", path(&cli.label_table)),
        ("threads", cli.threads.map(|n| n.to_string())),
        ("hemi", cli.hemi.clone()),
        ("seed", cli.seed.map(|n| n.to_string())),
        ("view_weights", cli.view_weights.clone()),
        ("stages", cli.stages.clone()),
        ("fwhm", cli.fwhm.map(|x| x.to_string())),
        ("axes", cli.axes.clone()),
    ];
    let overrides: BTreeMap<String, String> =
        flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect();
    cfg.apply(&overrides)?;
    let single = match cli.command {
        Command::Conform => Some(Stage::Conform),
        Command::Mask => Some(Stage::Mask),
        Command::Surf => Some(Stage::Surf),
        Command::Sphere => Some(Stage::Sphere),
        Command::Map => Some(Stage::Map),
        Command::Thickness => Some(Stage::Thickness),
        Command::Metrics => Some(Stage::Metrics),
        Command::Stats => Some(Stage::Stats),
        Command::All | Command::Phantom { .. } => None,
    };
    if let Some(s) = single {
        cfg.stages = vec![s];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORTEXKIT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: configuration: {e}");
            return ExitCode::from(1);
        }
    };
    if let Command::Phantom { out } = &cli.command {
        return match write_phantom(out, cfg.seed) {
            Ok(m) => {
                println!("phantom written to {} ({} flipped boundary voxels)", out.display(), m.flipped_voxels);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        };
    }
    let report = run(&cfg);
    match &report.error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
