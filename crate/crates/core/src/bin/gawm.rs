use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use gawm::config::ExperimentConfig;
use gawm::harness::{
    cmd_ablate, cmd_gar, cmd_gen_data, cmd_probe, cmd_report, cmd_train, AblationAxis,
};
use gawm::Error;

#[derive(Parser)]
#[command(
    name = "gawm",
    version,
    about = "Group-action consistency experiments for planar world models"
)]
struct Cli {
    /// Experiment config (TOML, or JSON by extension). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Re-derive every seed in the config from this one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for probe and sweep parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/eval trajectories.
    GenData,
    /// Train one latent world model.
    Train {
        /// Run label; defaults to `baseline` when lambda_ga = 0, else `ga`.
        #[arg(long)]
        label: Option<String>,
    },
    /// Run the GAC probe grid on a model.
    Probe {
        /// `exact`, a violation spec such as `drift:0.1,0,0`, or `checkpoint:<path>`.
        model: String,
    },
    /// Evaluate GAR dispersion of a model.
    Gar { model: String },
    /// Train and evaluate one sweep axis: lambda, span, mode or constraints.
    Ablate { axis: String },
    /// Collect existing reports into report.md.
    Report,
}

fn run(cli: Cli) -> Result<serde_json::Value, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    Ok(match cli.command {
        Command::GenData => serde_json::to_value(cmd_gen_data(&cfg)?).expect("summary serializes"),
        Command::Train { label } => {
            let s = cmd_train(&cfg, label.as_deref())?;
            json!({
                "label": s.label,
                "checkpoint": s.checkpoint_path,
                "checkpoint_hash": s.manifest.checkpoint_hash,
                "eval_prediction_loss": s.eval_prediction_loss,
            })
        }
        Command::Probe { model } => {
            let r = cmd_probe(&cfg, &model)?;
            json!({
                "model": r.model,
                "delta_id": r.delta_id.mean,
                "delta_inv": r.delta_inv.mean,
                "delta_comp": r.delta_comp.mean,
                "e_gac": r.e_gac,
            })
        }
        Command::Gar { model } => serde_json::to_value(
            cmd_gar(&cfg, &model)?
                .reports
                .iter()
                .map(|r| json!({"horizon": r.horizon, "aligned": r.aligned_error, "nonaligned": r.nonaligned_error}))
                .collect::<Vec<_>>(),
        )
        .expect("gar serializes"),
        Command::Ablate { axis } => {
            let t = cmd_ablate(&cfg, AblationAxis::parse(&axis)?)?;
            serde_json::to_value(&t.rows).expect("rows serialize")
        }
        Command::Report => json!({ "report": cmd_report(&cfg)? }),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
