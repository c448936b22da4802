use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use atlas_pipeline::config::{self, Scale};
use atlas_pipeline::stages::{MissingPrerequisite, Runner, Stage};

/// Box coverings of embedded attractors and their diffusion-map coordinates.
#[derive(Parser)]
#[command(name = "invariant-atlas", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Experiment configuration (TOML; may be a `recipe = "ks"|"mg"` shorthand)
    #[arg(long)]
    config: PathBuf,
    /// Override the RNG seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Recipe scale (desk|paper); applies to recipe-based configs
    #[arg(long)]
    scale: Option<Scale>,
    /// Dotted-path config overrides, e.g. --override dmaps.alpha=0.5
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print the effective configuration and exit
    #[arg(long)]
    config_dump: bool,
}

#[derive(Args)]
struct RecipeArgs {
    /// Recipe scale (desk|paper)
    #[arg(long, default_value = "desk")]
    scale: Scale,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system and record the trajectory
    Simulate(StageArgs),
    /// Build the POD basis from recorded snapshots
    Pod(StageArgs),
    /// Run the covering algorithm (subdivision, classic or sweep)
    Cover(StageArgs),
    /// Tune the kernel bandwidth and estimate the intrinsic dimension
    Dimscan(StageArgs),
    /// Build the diffusion model and embed the anchors
    Dmap(StageArgs),
    /// Extend the embedding to additional midpoints
    Extend(StageArgs),
    /// Embed a trajectory into diffusion coordinates
    Export(StageArgs),
    /// Run the whole pipeline in dependency order
    All(StageArgs),
    /// Print a Kuramoto-Sivashinsky experiment config
    RecipeKs {
        #[arg(long, default_value_t = 15.0)]
        mu: f64,
        #[command(flatten)]
        args: RecipeArgs,
    },
    /// Print a Mackey-Glass experiment config
    RecipeMg {
        #[command(flatten)]
        args: RecipeArgs,
    },
}

fn run_stages(args: &StageArgs, stages: &[Stage], all: bool) -> anyhow::Result<()> {
    let cfg = config::load_config(&args.config, args.scale, args.seed, &args.overrides)?;
    if args.config_dump {
        print!("{}", config::dump(&cfg));
        return Ok(());
    }
    let mut runner = Runner::new(cfg)?;
    if all {
        runner.run_all()
    } else {
        for stage in stages {
            runner.run(*stage)?;
        }
        Ok(())
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(a) => run_stages(&a, &[Stage::Simulate], false),
        Command::Pod(a) => run_stages(&a, &[Stage::Pod], false),
        Command::Cover(a) => run_stages(&a, &[Stage::Cover], false),
        Command::Dimscan(a) => run_stages(&a, &[Stage::Dimscan], false),
        Command::Dmap(a) => run_stages(&a, &[Stage::Dmap], false),
        Command::Extend(a) => run_stages(&a, &[Stage::Extend], false),
        Command::Export(a) => run_stages(&a, &[Stage::Export], false),
        Command::All(a) => run_stages(&a, &[], true),
        Command::RecipeKs { mu, args } => {
            print!("{}", config::dump(&config::recipe_ks(mu, args.scale)));
            Ok(())
        }
        Command::RecipeMg { args } => {
            print!("{}", config::dump(&config::recipe_mg(args.scale)));
            Ok(())
        }
    }
}

/// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
/// 4 missing prerequisite artifact.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<MissingPrerequisite>().is_some() {
            return 4;
        }
        if let Some(core) = cause.downcast_ref::<atlas_core::Error>() {
            return match core {
                atlas_core::Error::InvalidConfig(_)
                | atlas_core::Error::Parse(_)
                | atlas_core::Error::Io(_) => 2,
                _ => 3,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}
