use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hwstyle::eval::{render_report, ReportFormat};
use hwstyle::pipeline::{self, RunConfig};
use hwstyle::styles::BiasKind;
use hwstyle::{Error, Result};

#[derive(Parser)]
#[command(name = "hwstyle", version, about = "Handwriting style generation benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Run configuration (TOML). Defaults apply to anything left out.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Restricts the command to one bias kind.
    #[arg(long, global = true, value_parser = parse_bias)]
    bias: Option<BiasKind>,
    /// Sampling temperature for generation.
    #[arg(long, global = true, value_name = "FLOAT")]
    temperature: Option<f64>,
    /// Generator training epochs.
    #[arg(long, global = true, value_name = "INT")]
    epochs: Option<usize>,
    /// Generated tracings per reference.
    #[arg(long, global = true, value_name = "INT")]
    count: Option<usize>,
    /// Report format printed to stdout.
    #[arg(long, global = true, default_value = "text", value_parser = parse_format)]
    format: ReportFormat,
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the resolved configuration.
    Config,
    /// Synthesize the corpus, or ingest `corpus.input`.
    Synth,
    /// Clean, split, fit the speed quantizer and encode.
    Preprocess,
    /// Build bias tables, training the image models where needed.
    TrainStyles,
    /// Train generators.
    TrainGenerator,
    /// Sample tracings for every evaluation reference.
    Generate,
    /// Score generated tracings and write the reports.
    Evaluate,
    /// Draw generated tracings as SVG.
    Plot {
        /// Tracing file to draw instead of the generated one.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Every stage in order.
    Run,
}

fn parse_bias(s: &str) -> std::result::Result<BiasKind, String> {
    match s {
        "classifier" => Ok(BiasKind::ClassifierEmbedding),
        "autoencoder" => Ok(BiasKind::AutoencoderLatent),
        other => other.parse().map_err(|e: Error| e.to_string()),
    }
}

fn parse_format(s: &str) -> std::result::Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn config(opts: &Opts) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.out_dir = out.clone();
    }
    if let Some(t) = opts.temperature {
        cfg.eval.temperature = t;
    }
    if let Some(e) = opts.epochs {
        cfg.model.epochs = e;
    }
    if let Some(c) = opts.count {
        cfg.eval.count = c;
    }
    if let Some(kind) = opts.bias {
        cfg.styles.kinds = vec![kind];
    }
    cfg.resolved()
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = config(&cli.opts)?;
    let kinds = cfg.styles.kinds.clone();
    match &cli.command {
        Command::Config => print!("{}", cfg.to_toml()),
        Command::Synth => {
            let n = pipeline::synth(&cfg)?;
            println!("{n} samples in {}", cfg.out_dir.join("corpus").display());
        }
        Command::Preprocess => {
            let s = pipeline::preprocess(&cfg)?;
            println!(
                "kept {} of {} (too many steps {}, too long {}); splits {:?}",
                s.clean.kept, s.loaded, s.clean.too_many_steps, s.clean.too_long, s.splits
            );
        }
        Command::TrainStyles => {
            for kind in kinds {
                let s = pipeline::train_styles(&cfg, kind)?;
                println!("{kind}: {} entries of dim {} {:?}", s.entries, s.dim, s.metrics);
            }
        }
        Command::TrainGenerator => {
            for kind in kinds {
                let r = pipeline::train_generator(&cfg, kind)?;
                println!(
                    "{kind}: loss {:.3} -> {:.3} per step",
                    r.initial_loss_per_step,
                    r.epochs.last().map_or(r.initial_loss_per_step, |e| e.train_loss_per_step)
                );
            }
        }
        Command::Generate => {
            for kind in kinds {
                let n = pipeline::generate(&cfg, kind)?.len();
                println!("{kind}: {n} tracings");
            }
        }
        Command::Evaluate => print!("{}", render_report(&pipeline::evaluate(&cfg)?, cli.opts.format)),
        Command::Plot { input } => {
            for kind in kinds {
                for f in pipeline::plot(&cfg, kind, input.as_deref())? {
                    println!("{}", f.display());
                }
            }
        }
        Command::Run => print!("{}", render_report(&pipeline::run(&cfg)?, cli.opts.format)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.opts.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .format_timestamp(None)
        .init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
