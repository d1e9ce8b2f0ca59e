use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lodll_cli::config::{parse_config, ConfigSources, Experiment};
use lodll_cli::{presets, run_experiment, CacheOutcome, CliError};

#[derive(Parser)]
#[command(name = "lodll", version, about = "LOD multiscale Landau-Lifshitz experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Elliptic LOD errors against the fine Galerkin solution.
    EllipticConvergence(Common),
    /// Localized vs global basis for a list of oversampling depths.
    LocalizationDecay(Common),
    /// Final-time LL errors over the coarse mesh list.
    LlConvergence(Common),
    /// Per-step energy and modulus deviation of one LL run.
    LlRun(Common),
    /// Fine FEM and LOD solutions along y=0.5 and x=0.5.
    CrossSection(Common),
    /// List the available presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter set, applied before the file.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Oversampling layers: a count, `global` or `auto`.
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    fine_n: Option<usize>,
    /// cimrak, gao or an.
    #[arg(long)]
    scheme: Option<String>,
    /// Any config key, e.g. `--set alpha=0.01`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn sources(self) -> ConfigSources {
        let mut overrides = self.set;
        if let Some(v) = self.out {
            overrides.push(format!("output_dir={}", v.display()));
        }
        if let Some(v) = self.layers {
            overrides.push(format!("lod.layers={v}"));
        }
        if let Some(v) = self.fine_n {
            overrides.push(format!("mesh.fine_n={v}"));
        }
        if let Some(v) = self.scheme {
            overrides.push(format!("scheme={v}"));
        }
        ConfigSources {
            preset: self.preset,
            file: self.config,
            overrides,
        }
    }
}

fn run(experiment: Experiment, common: Common) -> Result<(), CliError> {
    let cfg = parse_config(Some(experiment), &common.sources())?;
    let start = std::time::Instant::now();
    let report = run_experiment(&cfg)?;
    match report.reference {
        Some(CacheOutcome::Hit) => eprintln!("reference: cache hit"),
        Some(CacheOutcome::Computed) => eprintln!("reference: computed and cached"),
        None => {}
    }
    for p in &report.written {
        println!("{}", p.display());
    }
    eprintln!("{experiment} finished in {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::EllipticConvergence(c) => (Experiment::EllipticConvergence, c),
        Command::LocalizationDecay(c) => (Experiment::LocalizationDecay, c),
        Command::LlConvergence(c) => (Experiment::LlConvergence, c),
        Command::LlRun(c) => (Experiment::LlRun, c),
        Command::CrossSection(c) => (Experiment::CrossSection, c),
        Command::Presets => {
            for name in presets::preset_names() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
    };
    match run(experiment, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
