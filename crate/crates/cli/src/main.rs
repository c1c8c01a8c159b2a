//! `alertgate`: simulate behavior-probability streams, convert them into
//! event-level alerts, evaluate alert quality, run the ablation grid, and
//! profile runtime logs.
//!
//! Exit codes: 0 success, 2 usage error (bad flags/values), 1 data error
//! (unreadable or malformed inputs, empty logs).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use alertgate_cli::commands;
use alertgate_cli::{MapMode, MapSide, Variant};

fn parse_unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

#[derive(Parser)]
#[command(
    name = "alertgate",
    version,
    about = "Streaming behavior-alert gating engine and evaluation harness"
)]
struct Cli {
    /// Seed for stream generation (simulate, ablate).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Stream frame rate used for time-based metrics.
    #[arg(long, global = true, value_parser = parse_positive)]
    fps: Option<f64>,

    /// JSON run-config file mirroring the RunConfig fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled probability stream.
    Simulate {
        /// Named scenario from the seeded suite.
        #[arg(long, value_parser = ["clean", "spiky", "occluded", "confusable", "mixed"],
              conflicts_with = "spec")]
        scenario: Option<String>,
        /// Stream spec JSON file (alternative to --scenario).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output directory for frames.jsonl, labels.jsonl, spec.json.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Convert a frames file into an events file with one alert variant.
    Run {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        /// Trigger confidence threshold tau.
        #[arg(long, value_parser = parse_unit_interval)]
        tau: Option<f64>,
        /// Persistence window length in frames.
        #[arg(long)]
        k: Option<usize>,
        /// Hysteresis release threshold tau_off.
        #[arg(long, value_parser = parse_unit_interval)]
        tau_off: Option<f64>,
        /// Release persistence (consecutive sub-tau_off frames).
        #[arg(long)]
        m: Option<usize>,
        /// Same-class re-trigger suppression, frames.
        #[arg(long)]
        cooldown: Option<usize>,
        /// Majority-vote window length.
        #[arg(long)]
        w: Option<usize>,
        /// EMA smoothing factor lambda.
        #[arg(long, value_parser = parse_unit_interval)]
        lambda: Option<f64>,
        /// EMA alert threshold.
        #[arg(long, value_parser = parse_unit_interval)]
        ema_tau: Option<f64>,
        /// Class map: file path or preset name (no-confounders, deployment-groups).
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_enum)]
        map_mode: Option<MapMode>,
        /// Force the output format (default: by file extension).
        #[arg(long, value_parser = ["jsonl", "csv"])]
        format: Option<String>,
    },
    /// Evaluate an events file against a labels file.
    Eval {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// tIoU matching threshold.
        #[arg(long, value_parser = parse_unit_interval)]
        eta: Option<f64>,
        /// Class map applied before matching.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Which side the map applies to.
        #[arg(long, value_enum, default_value = "both")]
        map_side: MapSide,
        /// Metrics CSV output (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-match detail JSONL output.
        #[arg(long)]
        detail: Option<PathBuf>,
        /// Variant name recorded in the CSV row.
        #[arg(long, default_value = "gate")]
        name: String,
    },
    /// Run the 2x2 confounder/temporal ablation grid on a scenario.
    Ablate {
        #[arg(long, value_parser = ["clean", "spiky", "occluded", "confusable", "mixed"],
              default_value = "mixed")]
        scenario: String,
        #[arg(long, value_parser = parse_unit_interval)]
        eta: Option<f64>,
        /// Ablation CSV output (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate a stage-timing log into the runtime breakdown.
    Profile {
        #[arg(long)]
        log: PathBuf,
        /// Report CSV output (the table always prints to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the focal-loss reference math.
    #[command(name = "loss-check")]
    LossCheck {
        /// Probability of the true class.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = alertgate::loss::DEFAULT_GAMMA)]
        gamma: f64,
        /// Comma-separated 17 per-class frame counts.
        #[arg(long)]
        counts: Option<String>,
        #[arg(long, default_value_t = alertgate::loss::DEFAULT_WEIGHT_CAP)]
        cap: f64,
        /// Run the built-in numeric verification suite.
        #[arg(long)]
        verify: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            spec,
            out_dir,
        } => commands::cmd_simulate(scenario.as_deref(), spec.as_deref(), cli.seed, &out_dir),
        Command::Run {
            frames,
            out,
            variant,
            tau,
            k,
            tau_off,
            m,
            cooldown,
            w,
            lambda,
            ema_tau,
            map,
            map_mode,
            format,
        } => {
            let cfg = commands::effective_run_config(
                cli.config.as_deref(),
                variant,
                tau,
                k,
                tau_off,
                m,
                cooldown,
                w,
                lambda,
                ema_tau,
                map,
                map_mode,
                None,
                cli.fps,
            )?;
            let format_csv = format.as_deref().map(|f| f == "csv");
            commands::cmd_run(&frames, &out, &cfg, format_csv)
        }
        Command::Eval {
            events,
            labels,
            eta,
            map,
            map_side,
            out,
            detail,
            name,
        } => {
            let cfg = commands::effective_run_config(
                cli.config.as_deref(),
                None,
                None,
                None,
                None,
                None,
                None,
                None,
                None,
                None,
                None,
                None,
                eta,
                cli.fps,
            )?;
            commands::cmd_eval(
                &events,
                &labels,
                cfg.eta,
                cfg.fps,
                map.as_deref(),
                map_side,
                out.as_deref(),
                detail.as_deref(),
                &name,
            )
        }
        Command::Ablate { scenario, eta, out } => {
            commands::cmd_ablate(cli.seed, &scenario, eta.unwrap_or(0.3), out.as_deref())
        }
        Command::Profile { log, out } => commands::cmd_profile(&log, out.as_deref()),
        Command::LossCheck {
            p,
            alpha,
            gamma,
            counts,
            cap,
            verify,
        } => commands::cmd_loss_check(p, alpha, gamma, counts.as_deref(), cap, verify),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
