//! Implementations behind the CLI subcommands. Each function is pure with
//! respect to its inputs (files + parsed flags) so the pipeline stays
//! reproducible; only `profile`'s live stopwatch path touches the clock,
//! and that lives in the core crate.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use alertgate::baselines::{ema_alerts, frame_only_alerts, majority_vote_alerts};
use alertgate::events::{
    event_metrics, false_alerts_per_min, greedy_match, gt_events_from_labels, time_to_detect,
};
use alertgate::gate::run_gate;
use alertgate::io as agio;
use alertgate::loss::{class_weights, focal_loss, focal_loss_dp};
use alertgate::mapping::{
    apply_map_events, apply_map_frames, apply_map_labels, no_confounders_map, ClassMap,
    DEPLOYMENT_GROUPS_PRESET, NO_CONFOUNDERS_PRESET,
};
use alertgate::profile::{aggregate, TimingReport};
use alertgate::simulate::{scenario_suite, simulate_stream, Scenario, StreamSpec};
use alertgate::types::{AlertEvent, FrameRate, LabeledFrame, ProbabilityFrame, CLASS_COUNT};

use crate::config::{MapMode, MapSide, RunConfig, Variant};
use crate::frame_metrics::frame_metrics;

/// Resolve `--map` values: a bundled preset name or a file path.
pub fn load_map(spec: &Path) -> anyhow::Result<ClassMap> {
    let text = match spec.to_str() {
        Some("no-confounders") | Some("no_confounders") => NO_CONFOUNDERS_PRESET.to_string(),
        Some("deployment-groups") | Some("deployment_groups") => {
            DEPLOYMENT_GROUPS_PRESET.to_string()
        }
        _ => fs::read_to_string(spec)
            .with_context(|| format!("reading map file {}", spec.display()))?,
    };
    Ok(ClassMap::from_json(&text)?)
}

fn scenario_by_name(seed: u64, name: &str) -> anyhow::Result<Scenario> {
    scenario_suite(seed)
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| anyhow::anyhow!("unknown scenario {name:?}"))
}

/// `simulate`: generate a labeled stream from a named scenario or a spec
/// file and write `frames.jsonl`, `labels.jsonl`, and `spec.json` (the
/// effective spec, echoed for reproducibility).
pub fn cmd_simulate(
    scenario: Option<&str>,
    spec_file: Option<&Path>,
    seed: Option<u64>,
    out_dir: &Path,
) -> anyhow::Result<()> {
    let spec: StreamSpec = match (scenario, spec_file) {
        (Some(name), None) => scenario_by_name(seed.unwrap_or(7), name)?.spec,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading spec {}", path.display()))?;
            let mut spec: StreamSpec = serde_json::from_str(&text)
                .with_context(|| format!("parsing spec {}", path.display()))?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            spec
        }
        _ => bail!("exactly one of --scenario or --spec is required"),
    };

    let (labels, frames) = simulate_stream(&spec)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let frames_path = out_dir.join("frames.jsonl");
    agio::write_frames_jsonl(BufWriter::new(File::create(&frames_path)?), &frames)?;
    let labels_path = out_dir.join("labels.jsonl");
    agio::write_labels_jsonl(BufWriter::new(File::create(&labels_path)?), &labels)?;
    let spec_path = out_dir.join("spec.json");
    fs::write(&spec_path, serde_json::to_string_pretty(&spec)?)?;

    println!(
        "wrote {} frames to {}, labels to {}, spec echo to {}",
        frames.len(),
        frames_path.display(),
        labels_path.display(),
        spec_path.display()
    );
    Ok(())
}

/// Library-level run pipeline: optional frame-side map, then the variant,
/// then optional event-side map.
pub fn run_pipeline(
    frames: &[ProbabilityFrame],
    cfg: &RunConfig,
    map: Option<&ClassMap>,
) -> anyhow::Result<Vec<AlertEvent>> {
    let mapped_frames;
    let input = match (map, cfg.map_mode) {
        (Some(map), MapMode::Frames | MapMode::Both) => {
            mapped_frames = apply_map_frames(frames, map);
            &mapped_frames[..]
        }
        _ => frames,
    };
    let events = match cfg.variant {
        Variant::Gate => run_gate(input, &cfg.gate)?,
        Variant::FrameOnly => frame_only_alerts(input)?,
        Variant::Majority => majority_vote_alerts(input, &cfg.majority)?,
        Variant::Ema => ema_alerts(input, &cfg.ema)?,
    };
    match (map, cfg.map_mode) {
        (Some(map), MapMode::Events | MapMode::Both) => Ok(apply_map_events(&events, map)?),
        _ => Ok(events),
    }
}

/// `run`: frames file -> events file through the configured variant.
/// An empty frames file produces an empty events file and exit 0.
pub fn cmd_run(
    frames_path: &Path,
    out_path: &Path,
    cfg: &RunConfig,
    format_csv: Option<bool>,
) -> anyhow::Result<()> {
    cfg.validate()?;
    let frames = agio::read_frames_jsonl(BufReader::new(
        File::open(frames_path).with_context(|| format!("opening {}", frames_path.display()))?,
    ))
    .with_context(|| format!("parsing {}", frames_path.display()))?;

    let map = cfg.map_file.as_deref().map(load_map).transpose()?;
    let events = run_pipeline(&frames, cfg, map.as_ref())?;

    let csv = format_csv.unwrap_or_else(|| {
        out_path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    });
    let writer = BufWriter::new(
        File::create(out_path).with_context(|| format!("creating {}", out_path.display()))?,
    );
    if csv {
        agio::write_events_csv(writer, &events)?;
    } else {
        agio::write_events_jsonl(writer, &events)?;
    }
    println!(
        "{} events ({} variant) -> {}",
        events.len(),
        cfg.variant.name(),
        out_path.display()
    );
    Ok(())
}

pub const METRICS_CSV_HEADER: &str =
    "variant,false_alerts_per_min,mean_ttd_frames,mean_ttd_seconds,fragmentation,matched,unmatched_pred,unmatched_gt";

fn read_events_any(path: &Path) -> anyhow::Result<Vec<AlertEvent>> {
    let reader =
        BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let events = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        agio::read_events_csv(reader)?
    } else {
        agio::read_events_jsonl(reader)?
    };
    Ok(events)
}

/// One metrics row, formatted per the events-module CSV contract. Empty
/// cells stand for undefined values (no matches / no GT events).
#[allow(clippy::too_many_arguments)]
pub fn metrics_csv_row(
    variant: &str,
    fa_per_min: f64,
    mean_ttd_frames: Option<f64>,
    fps: f64,
    fragmentation: Option<f64>,
    matched: usize,
    unmatched_pred: usize,
    unmatched_gt: usize,
) -> String {
    let ttd_frames = mean_ttd_frames.map_or(String::new(), |v| v.to_string());
    let ttd_seconds = mean_ttd_frames.map_or(String::new(), |v| (v / fps).to_string());
    let frag = fragmentation.map_or(String::new(), |v| v.to_string());
    format!(
        "{},{},{},{},{},{},{},{}",
        agio::csv_field(variant),
        fa_per_min,
        ttd_frames,
        ttd_seconds,
        frag,
        matched,
        unmatched_pred,
        unmatched_gt
    )
}

/// `eval`: match predicted events against GT events built from labels and
/// emit the metrics CSV row plus an optional per-match detail file.
#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    events_path: &Path,
    labels_path: &Path,
    eta: f64,
    fps: f64,
    map_spec: Option<&Path>,
    map_side: MapSide,
    out_path: Option<&Path>,
    detail_path: Option<&Path>,
    variant_name: &str,
) -> anyhow::Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        bail!("eta must be in (0, 1], got {eta}");
    }
    let rate = FrameRate::new(fps)?;
    let mut pred = read_events_any(events_path)?;
    let mut labels: Vec<LabeledFrame> = agio::read_labels_jsonl(BufReader::new(
        File::open(labels_path).with_context(|| format!("opening {}", labels_path.display()))?,
    ))
    .with_context(|| format!("parsing {}", labels_path.display()))?;
    if labels.is_empty() {
        bail!("labels file {} is empty", labels_path.display());
    }

    if let Some(spec) = map_spec {
        let map = load_map(spec)?;
        if matches!(map_side, MapSide::Both | MapSide::Pred) {
            pred = apply_map_events(&pred, &map)?;
        }
        if matches!(map_side, MapSide::Both | MapSide::Gt) {
            labels = apply_map_labels(&labels, &map)?;
        }
    }

    let gt = gt_events_from_labels(&labels)?;
    let duration = labels.len() as u64;
    let (result, metrics) = event_metrics(&pred, &gt, eta, duration, rate)?;

    let row = metrics_csv_row(
        variant_name,
        metrics.false_alerts_per_min,
        metrics.mean_time_to_detect,
        fps,
        metrics.fragmentation,
        result.matches.len(),
        result.unmatched_pred.len(),
        result.unmatched_gt.len(),
    );
    match out_path {
        Some(path) => {
            let mut w = BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            writeln!(w, "{METRICS_CSV_HEADER}")?;
            writeln!(w, "{row}")?;
        }
        None => {
            println!("{METRICS_CSV_HEADER}");
            println!("{row}");
        }
    }

    if let Some(path) = detail_path {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        let (delays, _) = time_to_detect(&result, &pred, &gt);
        for (pair, delay) in result.matches.iter().zip(&delays) {
            writeln!(
                w,
                "{}",
                serde_json::json!({
                    "kind": "match",
                    "pred": pair.pred,
                    "gt": pair.gt,
                    "tiou": pair.tiou,
                    "ttd_frames": delay,
                })
            )?;
        }
        for &i in &result.unmatched_pred {
            writeln!(
                w,
                "{}",
                serde_json::json!({
                    "kind": "unmatched_pred",
                    "pred": i,
                    "event": pred[i],
                })
            )?;
        }
        for &i in &result.unmatched_gt {
            writeln!(
                w,
                "{}",
                serde_json::json!({
                    "kind": "unmatched_gt",
                    "gt": i,
                    "event": gt[i],
                })
            )?;
        }
    }
    Ok(())
}

pub const ABLATION_CSV_HEADER: &str = "variant,macro_f1,false_alerts_per_min";

/// One ablation grid row.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: &'static str,
    pub macro_f1: f64,
    pub false_alerts_per_min: f64,
}

/// Run the 2x2 ablation grid (confounder absorption on/off x temporal head
/// on/off) over one scenario stream. The absorption map is applied to the
/// prediction stream only: ground truth keeps the full taxonomy, which is
/// what makes missing confounder classes show up as false alerts.
pub fn ablation_grid(scenario: &Scenario, eta: f64) -> anyhow::Result<Vec<AblationRow>> {
    let (labels, frames) = simulate_stream(&scenario.spec)?;
    let gt = gt_events_from_labels(&labels)?;
    let true_labels: Vec<u8> = labels.iter().map(|l| l.label).collect();
    let duration = labels.len() as u64;
    let rate = scenario.spec.fps;
    let absorb_map = no_confounders_map();
    let gate_cfg = alertgate::types::GateConfig::default();

    // (variant name, absorb confounders, temporal head)
    let grid: [(&'static str, bool, bool); 4] = [
        ("no_confounders_no_temporal", true, false),
        ("confounders_only", false, false),
        ("temporal_only", true, true),
        ("full", false, true),
    ];

    let mut rows = Vec::with_capacity(grid.len());
    for (variant, absorb, temporal) in grid {
        let stream = if absorb {
            apply_map_frames(&frames, &absorb_map)
        } else {
            frames.clone()
        };
        let pred_labels: Vec<u8> = stream.iter().map(|f| f.argmax_class()).collect();
        let macro_f1 = frame_metrics(&pred_labels, &true_labels)?.macro_f1;
        let events = if temporal {
            run_gate(&stream, &gate_cfg)?
        } else {
            frame_only_alerts(&stream)?
        };
        let result = greedy_match(&events, &gt, eta);
        let fa = false_alerts_per_min(&result, &events, duration, rate)?;
        rows.push(AblationRow {
            variant,
            macro_f1,
            false_alerts_per_min: fa,
        });
    }
    Ok(rows)
}

/// `ablate`: emit the ablation grid CSV for one scenario of the seeded
/// suite (default: mixed).
pub fn cmd_ablate(
    seed: Option<u64>,
    scenario_name: &str,
    eta: f64,
    out_path: Option<&Path>,
) -> anyhow::Result<()> {
    let scenario = scenario_by_name(seed.unwrap_or(7), scenario_name)?;
    let rows = ablation_grid(&scenario, eta)?;
    let mut text = String::from(ABLATION_CSV_HEADER);
    for row in &rows {
        text.push_str(&format!(
            "\n{},{},{}",
            row.variant, row.macro_f1, row.false_alerts_per_min
        ));
    }
    text.push('\n');
    match out_path {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub const PROFILE_CSV_HEADER: &str = "frames,cap_mean_ms,cap_median_ms,cap_p95_ms,pre_mean_ms,pre_median_ms,pre_p95_ms,inf_mean_ms,inf_median_ms,inf_p95_ms,post_mean_ms,post_median_ms,post_p95_ms,io_mean_ms,io_median_ms,io_p95_ms,e2e_mean_ms,e2e_median_ms,e2e_p95_ms,fps,jitter_ms";

pub fn profile_csv_row(report: &TimingReport) -> String {
    let stage =
        |s: &alertgate::profile::StageStats| format!("{},{},{}", s.mean_ms, s.median_ms, s.p95_ms);
    format!(
        "{},{},{},{},{},{},{},{},{}",
        report.frames,
        stage(&report.capture),
        stage(&report.preprocess),
        stage(&report.inference),
        stage(&report.postprocess),
        stage(&report.io),
        stage(&report.e2e),
        report.fps,
        report.jitter_ms
    )
}

/// Human-readable runtime breakdown table (stage rows, total, throughput).
pub fn profile_table(report: &TimingReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18}{:>10}{:>12}{:>10}\n",
        "stage", "mean_ms", "median_ms", "p95_ms"
    ));
    let rows = [
        ("capture+decode", &report.capture),
        ("preprocess", &report.preprocess),
        ("inference", &report.inference),
        ("postprocess", &report.postprocess),
        ("overlay/io", &report.io),
        ("total", &report.e2e),
    ];
    for (name, stats) in rows {
        out.push_str(&format!(
            "{:<18}{:>10.2}{:>12.2}{:>10.2}\n",
            name, stats.mean_ms, stats.median_ms, stats.p95_ms
        ));
    }
    out.push_str(&format!(
        "throughput: {:.2} fps over {} frames, jitter (p95 - median): {:.2} ms\n",
        report.fps, report.frames, report.jitter_ms
    ));
    out
}

/// `profile`: aggregate a timing log into the runtime breakdown.
pub fn cmd_profile(log_path: &Path, out_path: Option<&Path>) -> anyhow::Result<()> {
    let records = agio::read_timing_jsonl(BufReader::new(
        File::open(log_path).with_context(|| format!("opening {}", log_path.display()))?,
    ))
    .with_context(|| format!("parsing {}", log_path.display()))?;
    let report = aggregate(&records)?;
    print!("{}", profile_table(&report));
    if let Some(path) = out_path {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        writeln!(w, "{PROFILE_CSV_HEADER}")?;
        writeln!(w, "{}", profile_csv_row(&report))?;
    }
    Ok(())
}

/// `loss-check`: evaluate the focal loss / class weights at given points,
/// or run the built-in numeric verification suite.
pub fn cmd_loss_check(
    p: Option<f64>,
    alpha: f64,
    gamma: f64,
    counts: Option<&str>,
    cap: f64,
    verify: bool,
) -> anyhow::Result<()> {
    let mut did_something = false;
    if let Some(p) = p {
        let loss = focal_loss(p, alpha, gamma)?;
        let grad = focal_loss_dp(p, alpha, gamma)?;
        println!("focal_loss(p={p}, alpha={alpha}, gamma={gamma}) = {loss}");
        println!("d/dp focal_loss = {grad}");
        did_something = true;
    }
    if let Some(counts) = counts {
        let parsed: Vec<u64> = counts
            .split(',')
            .map(|s| s.trim().parse().context("counts must be integers"))
            .collect::<anyhow::Result<_>>()?;
        let weights = class_weights(&parsed, cap)?;
        println!("class_id,count,alpha");
        for (i, (count, alpha)) in parsed.iter().zip(&weights.alpha).enumerate() {
            println!("{},{},{}", i + 1, count, alpha);
        }
        did_something = true;
    }
    if verify {
        let failures = loss_verification_failures();
        for line in &failures {
            println!("FAIL {line}");
        }
        if failures.is_empty() {
            println!("PASS gamma=0 collapse to cross-entropy (1e-12)");
            println!("PASS analytic derivative vs central differences (1e-6 relative)");
            println!("PASS monotone decreasing in p on a 1000-point grid");
            println!("PASS balanced class counts give unit weights");
        } else {
            bail!("{} loss verification check(s) failed", failures.len());
        }
        did_something = true;
    }
    if !did_something {
        bail!("nothing to do: pass --p, --counts, and/or --verify");
    }
    Ok(())
}

/// The numeric checks behind `loss-check --verify`. Returns descriptions
/// of any failures.
fn loss_verification_failures() -> Vec<String> {
    let mut failures = Vec::new();
    for i in 1..100 {
        let p = i as f64 / 100.0;
        let ce = -p.ln();
        let fl = focal_loss(p, 1.0, 0.0).expect("valid p");
        if (fl - ce).abs() > 1e-12 {
            failures.push(format!("gamma=0 collapse at p={p}: {fl} vs {ce}"));
        }
    }
    let h = 1e-6;
    for gamma in [0.0, 1.0, 1.5, 2.5] {
        for i in 5..=95 {
            let p = i as f64 / 100.0;
            let analytic = focal_loss_dp(p, 1.0, gamma).expect("valid p");
            let fd = (focal_loss(p + h, 1.0, gamma).unwrap()
                - focal_loss(p - h, 1.0, gamma).unwrap())
                / (2.0 * h);
            if ((analytic - fd) / analytic.abs().max(1e-12)).abs() > 1e-6 {
                failures.push(format!(
                    "derivative mismatch at p={p}, gamma={gamma}: {analytic} vs {fd}"
                ));
            }
        }
    }
    for gamma in [0.0, 1.5] {
        let mut prev = f64::INFINITY;
        for i in 1..=1000 {
            let p = i as f64 / 1000.0;
            let loss = focal_loss(p, 1.0, gamma).unwrap();
            if loss >= prev && !(loss == 0.0 && prev == 0.0) {
                failures.push(format!("not monotone at p={p}, gamma={gamma}"));
            }
            prev = loss;
        }
    }
    match class_weights(&[100; CLASS_COUNT], 10.0) {
        Ok(w) => {
            if w.alpha.iter().any(|a| (a - 1.0).abs() > 1e-12) {
                failures.push("balanced counts did not give unit weights".into());
            }
        }
        Err(e) => failures.push(format!("class_weights failed: {e}")),
    }
    failures
}

/// Shared helper for tests and `main`: builds the effective run config
/// from an optional config file plus CLI overrides.
#[allow(clippy::too_many_arguments)]
pub fn effective_run_config(
    config_path: Option<&Path>,
    variant: Option<Variant>,
    tau: Option<f64>,
    k: Option<usize>,
    tau_off: Option<f64>,
    m: Option<usize>,
    cooldown: Option<usize>,
    w: Option<usize>,
    lambda: Option<f64>,
    ema_tau: Option<f64>,
    map: Option<PathBuf>,
    map_mode: Option<MapMode>,
    eta: Option<f64>,
    fps: Option<f64>,
) -> anyhow::Result<RunConfig> {
    let mut cfg = match config_path {
        Some(path) => RunConfig::from_json(
            &fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?,
        )?,
        None => RunConfig::default(),
    };
    if let Some(v) = variant {
        cfg.variant = v;
    }
    if let Some(v) = tau {
        cfg.gate.tau = v;
    }
    if let Some(v) = k {
        cfg.gate.k = v;
    }
    if let Some(v) = tau_off {
        cfg.gate.tau_off = v;
    }
    if let Some(v) = m {
        cfg.gate.m = v;
    }
    if let Some(v) = cooldown {
        cfg.gate.cooldown = v;
    }
    if let Some(v) = w {
        cfg.majority.w = v;
    }
    if let Some(v) = lambda {
        cfg.ema.lambda = v;
    }
    if let Some(v) = ema_tau {
        cfg.ema.tau = v;
    }
    if map.is_some() {
        cfg.map_file = map;
    }
    if let Some(v) = map_mode {
        cfg.map_mode = v;
    }
    if let Some(v) = eta {
        cfg.eta = v;
    }
    if let Some(v) = fps {
        cfg.fps = v;
    }
    Ok(cfg)
}
