//! Acceptance suite: one test per acceptance criterion, each printing a
//! single pass line (run with `--nocapture` to see them). Reference
//! implementations here are written independently of the library code
//! paths they check.

use std::collections::BTreeSet;
use std::fs;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use alertgate::baselines::frame_only_alerts;
use alertgate::events::{greedy_match, gt_events_from_labels, tiou, MatchedPair};
use alertgate::gate::{run_gate, trigger_set};
use alertgate::loss::{focal_loss, focal_loss_dp};
use alertgate::profile::{aggregate, StageTiming};
use alertgate::simulate::{
    scenario_suite, simulate_stream, DisturbanceSpec, EmissionSpec, SegmentSpec, StreamSpec,
};
use alertgate::types::{
    persistence_window_seconds, AlertEvent, FrameRate, GateConfig, LabeledFrame, ProbabilityFrame,
    CLASS_COUNT,
};
use alertgate_cli::commands::ablation_grid;

// ---------------------------------------------------------------------
// shared random-stream machinery
// ---------------------------------------------------------------------

fn random_stream(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<ProbabilityFrame> {
    let len = rng.gen_range(1..=max_len);
    let mut frames = Vec::with_capacity(len);
    let mut t = 0u64;
    while frames.len() < len {
        let seg_len = rng.gen_range(1..=12).min(len - frames.len());
        let class = rng.gen_range(1..=CLASS_COUNT) as u8;
        let base: f64 = rng.gen_range(0.25..0.97);
        for _ in 0..seg_len {
            let p = (base + rng.gen_range(-0.15..0.15)).clamp(0.02, 0.98);
            let mut probs = vec![(1.0 - p) / (CLASS_COUNT - 1) as f64; CLASS_COUNT];
            probs[class as usize - 1] = p;
            if rng.gen_bool(0.04) {
                let other = rng.gen_range(1..=CLASS_COUNT) as u8;
                if other != class {
                    let tied = p.min(0.49);
                    probs = vec![(1.0 - 2.0 * tied) / (CLASS_COUNT - 2) as f64; CLASS_COUNT];
                    probs[class as usize - 1] = tied;
                    probs[other as usize - 1] = tied;
                }
            }
            frames.push(ProbabilityFrame::new(t, probs));
            t += 1;
        }
    }
    frames
}

fn random_config(rng: &mut ChaCha8Rng) -> GateConfig {
    if rng.gen_bool(0.1) {
        let tau = if rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0.2..0.9)
        };
        return GateConfig {
            tau,
            k: 1,
            tau_off: tau,
            m: 1,
            cooldown: rng.gen_range(0..=6),
        };
    }
    let tau = rng.gen_range(0.3..0.9);
    GateConfig {
        tau,
        k: rng.gen_range(1..=10),
        tau_off: rng.gen_range(0.05..tau),
        m: rng.gen_range(1..=4),
        cooldown: rng.gen_range(0..=6),
    }
}

/// Reference gate: exhaustive re-evaluation of the raw trigger window at
/// every position, release by backward violation scan, position-indexed
/// cooldown bookkeeping.
fn reference_gate(frames: &[ProbabilityFrame], cfg: &GateConfig) -> Vec<AlertEvent> {
    let n = frames.len();
    let frame_mode = cfg.k == 1 && cfg.m == 1 && cfg.tau_off == cfg.tau;

    let confident_argmax = |i: usize| -> Option<u8> {
        let probs = &frames[i].probs;
        let mut best = 0usize;
        for (j, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = j;
            }
        }
        let class = best as u8 + 1;
        (class != 1 && probs[best] >= cfg.tau).then_some(class)
    };
    let violates = |i: usize, class: u8| -> bool {
        if frame_mode {
            confident_argmax(i) != Some(class)
        } else {
            frames[i].probs[class as usize - 1] < cfg.tau_off
        }
    };

    let mut events = Vec::new();
    let mut active: Option<(u8, u64, usize)> = None;
    let mut cooldown: Option<(u8, usize)> = None;
    let mut last_end: Option<u64> = None;
    for i in 0..n {
        if let Some((class, t_start, opened)) = active {
            let mut run = 0;
            while run < i - opened && violates(i - run, class) {
                run += 1;
            }
            if run >= cfg.m {
                let event = AlertEvent::new(class, t_start, frames[i - run].t);
                last_end = Some(event.t_end);
                events.push(event);
                cooldown = Some((class, i + cfg.cooldown));
                active = None;
            }
        }
        if active.is_none() {
            if let Some(class) = confident_argmax(i) {
                if i + 1 >= cfg.k {
                    let first = i + 1 - cfg.k;
                    let sustained = (first..=i).all(|j| confident_argmax(j) == Some(class));
                    let clear = last_end.is_none_or(|end| frames[first].t > end);
                    let hot = cooldown.is_some_and(|(c, until)| c == class && i <= until);
                    if sustained && clear && !hot {
                        active = Some((class, frames[first].t, i));
                        cooldown = None;
                    }
                }
            }
        }
    }
    if let Some((class, t_start, _)) = active {
        events.push(AlertEvent::new(class, t_start, frames[n - 1].t));
    }
    events
}

// ---------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------

#[test]
fn criterion_1_gate_matches_oracle_on_1000_random_streams() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut events_seen = 0usize;
    for case in 0..1000 {
        let stream = random_stream(&mut rng, 200);
        let cfg = random_config(&mut rng);
        let got = run_gate(&stream, &cfg).expect("valid stream");
        let want = reference_gate(&stream, &cfg);
        assert_eq!(got, want, "case {case} cfg {cfg:?}");
        events_seen += got.len();
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "took {elapsed:?}, budget is 10 s"
    );
    assert!(
        events_seen > 500,
        "only {events_seen} events across all cases"
    );
    println!(
        "[PASS] criterion 1: gate == brute-force oracle on 1000 random streams \
         ({events_seen} events, {elapsed:?})"
    );
}

#[test]
fn criterion_2_trigger_sets_nest_under_k_and_tau() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    for case in 0..200 {
        let stream = random_stream(&mut rng, 200);
        let tau = rng.gen_range(0.2..0.7);
        let k = rng.gen_range(1..=6);
        let base: BTreeSet<u64> = trigger_set(&stream, k, tau).unwrap().into_iter().collect();
        for dk in 1..=4usize {
            let deeper: BTreeSet<u64> = trigger_set(&stream, k + dk, tau)
                .unwrap()
                .into_iter()
                .collect();
            assert!(deeper.is_subset(&base), "case {case}: k+{dk} not nested");
        }
        for dtau in [0.05, 0.1, 0.2, 0.3] {
            let stricter: BTreeSet<u64> = trigger_set(&stream, k, tau + dtau)
                .unwrap()
                .into_iter()
                .collect();
            assert!(
                stricter.is_subset(&base),
                "case {case}: tau+{dtau} not nested"
            );
        }
    }
    println!("[PASS] criterion 2: trigger sets nest under increasing K and tau (200 streams)");
}

#[test]
fn criterion_3_metric_primitives_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);

    let brute_tiou = |a: &AlertEvent, b: &AlertEvent| -> f64 {
        let sa: BTreeSet<u64> = (a.t_start..=a.t_end).collect();
        let sb: BTreeSet<u64> = (b.t_start..=b.t_end).collect();
        sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
    };

    let random_events = |rng: &mut ChaCha8Rng, max: usize| -> Vec<AlertEvent> {
        let n = rng.gen_range(0..=max);
        (0..n)
            .map(|_| {
                let class = [2u8, 4, 7][rng.gen_range(0..3)];
                let start = rng.gen_range(0..100u64);
                let len = rng.gen_range(1..=30u64);
                AlertEvent::new(class, start, start + len - 1)
            })
            .collect()
    };

    for case in 0..1000 {
        let pred = random_events(&mut rng, 6);
        let gt = random_events(&mut rng, 6);
        let eta = [0.1, 0.3, 0.5][rng.gen_range(0..3)];

        // tiou against frame-set counting
        for p in &pred {
            for g in &gt {
                assert!((tiou(p, g) - brute_tiou(p, g)).abs() < 1e-12, "case {case}");
            }
        }

        // greedy matching against an explicit cross-product greedy
        let mut pairs: Vec<MatchedPair> = Vec::new();
        for (pi, p) in pred.iter().enumerate() {
            for (gi, g) in gt.iter().enumerate() {
                if p.class_id == g.class_id {
                    let v = brute_tiou(p, g);
                    if v >= eta {
                        pairs.push(MatchedPair {
                            pred: pi,
                            gt: gi,
                            tiou: v,
                        });
                    }
                }
            }
        }
        pairs.sort_by(|a, b| {
            b.tiou
                .partial_cmp(&a.tiou)
                .unwrap()
                .then(gt[a.gt].t_start.cmp(&gt[b.gt].t_start))
                .then(pred[a.pred].t_start.cmp(&pred[b.pred].t_start))
                .then(a.gt.cmp(&b.gt))
                .then(a.pred.cmp(&b.pred))
        });
        let mut used_p = BTreeSet::new();
        let mut used_g = BTreeSet::new();
        let mut expected = Vec::new();
        for pair in pairs {
            if used_p.contains(&pair.pred) || used_g.contains(&pair.gt) {
                continue;
            }
            used_p.insert(pair.pred);
            used_g.insert(pair.gt);
            expected.push((pair.pred, pair.gt));
        }
        let got = greedy_match(&pred, &gt, eta);
        let got_pairs: Vec<(usize, usize)> = got.matches.iter().map(|m| (m.pred, m.gt)).collect();
        assert_eq!(got_pairs, expected, "case {case}");

        // gt construction against per-frame scanning
        let len = rng.gen_range(0..=60);
        let labels: Vec<LabeledFrame> = (0..len)
            .map(|t| LabeledFrame {
                t,
                label: [1u8, 1, 4, 7][rng.gen_range(0..4)],
            })
            .collect();
        let fast = gt_events_from_labels(&labels).unwrap();
        let mut slow = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            if l.label != 1 && (i == 0 || labels[i - 1].label != l.label) {
                let mut j = i;
                while j + 1 < labels.len() && labels[j + 1].label == l.label {
                    j += 1;
                }
                slow.push(AlertEvent::new(l.label, l.t, labels[j].t));
            }
        }
        assert_eq!(fast, slow, "case {case}");
    }
    println!(
        "[PASS] criterion 3: tiou, greedy_match, gt_events match brute force (1000 instances)"
    );
}

#[test]
fn criterion_4_runtime_table_arithmetic() {
    let record = |cap: f64, pre: f64, inf: f64, post: f64, io: f64| StageTiming {
        t: 0,
        cap_ms: cap,
        pre_ms: pre,
        inf_ms: inf,
        post_ms: post,
        io_ms: io,
    };
    assert_eq!(record(6.0, 4.0, 38.0, 5.0, 4.0).e2e_ms(), 57.0);
    assert_eq!(record(6.0, 4.0, 22.0, 5.0, 3.0).e2e_ms(), 40.0);

    let log40: Vec<StageTiming> = (0..100)
        .map(|t| StageTiming {
            t,
            ..record(6.0, 4.0, 22.0, 5.0, 3.0)
        })
        .collect();
    assert_eq!(aggregate(&log40).unwrap().fps, 25.0);

    let log62: Vec<StageTiming> = (0..100)
        .map(|t| StageTiming {
            t,
            ..record(6.0, 4.0, 43.5, 5.0, 4.0)
        })
        .collect();
    assert_eq!(aggregate(&log62).unwrap().fps, 16.0);

    println!("[PASS] criterion 4: stage sums 57/40 ms and 25/16 FPS reproduce exactly");
}

#[test]
fn criterion_5_persistence_window_conversion() {
    assert_eq!(
        persistence_window_seconds(25, FrameRate::new(16.0).unwrap()),
        1.5625
    );
    assert_eq!(
        persistence_window_seconds(25, FrameRate::new(25.0).unwrap()),
        1.0
    );
    println!("[PASS] criterion 5: K=25 -> 1.5625 s at 16 FPS, 1.0 s at 25 FPS, exact");
}

#[test]
fn criterion_6_directional_ablation_on_mixed_scenario() {
    let started = Instant::now();
    let suite = scenario_suite(7);
    let mixed = suite
        .iter()
        .find(|s| s.name == "mixed")
        .expect("mixed scenario exists");
    assert_eq!(mixed.spec.duration_frames, 7500, "5 minutes at 25 fps");
    assert_eq!(mixed.spec.fps.fps(), 25.0);

    let rows = ablation_grid(mixed, 0.3).unwrap();
    assert_eq!(rows.len(), 4, "Table-5-shaped grid has four variants");
    let get = |name: &str| rows.iter().find(|r| r.variant == name).unwrap();
    let full = get("full");
    let conf_only = get("confounders_only");
    let temporal_only = get("temporal_only");
    let neither = get("no_confounders_no_temporal");

    assert!(
        full.false_alerts_per_min < conf_only.false_alerts_per_min,
        "FA full {} !< confounders-only {}",
        full.false_alerts_per_min,
        conf_only.false_alerts_per_min
    );
    assert!(
        temporal_only.false_alerts_per_min < neither.false_alerts_per_min,
        "FA temporal-only {} !< neither {}",
        temporal_only.false_alerts_per_min,
        neither.false_alerts_per_min
    );
    assert!(
        full.macro_f1 >= neither.macro_f1,
        "macro-F1 full {} < neither {}",
        full.macro_f1,
        neither.macro_f1
    );
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "took {elapsed:?}, budget 30 s"
    );
    println!(
        "[PASS] criterion 6: ablation directions hold (FA {:.2} < {:.2}, {:.2} < {:.2}; \
         macro-F1 {:.3} >= {:.3}) in {elapsed:?}",
        full.false_alerts_per_min,
        conf_only.false_alerts_per_min,
        temporal_only.false_alerts_per_min,
        neither.false_alerts_per_min,
        full.macro_f1,
        neither.macro_f1
    );
}

#[test]
fn criterion_7_focal_loss_numerics() {
    // gamma = 0 collapse to cross-entropy within 1e-12
    for i in 1..=100 {
        let p = i as f64 / 100.0;
        let ce = -p.ln();
        assert!(
            (focal_loss(p, 1.0, 0.0).unwrap() - ce).abs() < 1e-12,
            "collapse failed at p={p}"
        );
    }

    // analytic vs central finite differences, 1e-6 relative, p in [0.05, 0.95]
    let h = 1e-6;
    for gamma in [0.5, 1.5, 2.0] {
        for i in 5..=95 {
            let p = i as f64 / 100.0;
            let analytic = focal_loss_dp(p, 1.0, gamma).unwrap();
            let fd = (focal_loss(p + h, 1.0, gamma).unwrap()
                - focal_loss(p - h, 1.0, gamma).unwrap())
                / (2.0 * h);
            let rel = ((analytic - fd) / analytic.abs().max(1e-12)).abs();
            assert!(rel < 1e-6, "p={p} gamma={gamma}: rel err {rel}");
        }
    }

    // frozen arbitrary-precision oracle for 0.5^1.5 * ln 2
    // (0.24506453586713679792847543...)
    let oracle = 0.245_064_535_867_136_8_f64;
    let got = focal_loss(0.5, 1.0, 1.5).unwrap();
    assert!((got - oracle).abs() < 1e-9, "got {got}, oracle {oracle}");

    println!("[PASS] criterion 7: focal loss collapse, derivative, and oracle value agree");
}

#[test]
fn criterion_8_simulator_determinism_and_sanity() {
    // bit-identical repeats
    let suite = scenario_suite(7);
    for scenario in &suite {
        let (l1, f1) = simulate_stream(&scenario.spec).unwrap();
        let (l2, f2) = simulate_stream(&scenario.spec).unwrap();
        assert_eq!(l1, l2, "{} labels differ", scenario.name);
        assert_eq!(f1, f2, "{} frames differ", scenario.name);
    }

    // sigma = 0, no disturbances: frame-only alerting reconstructs gt
    let perfect = StreamSpec {
        seed: 99,
        fps: FrameRate::new(25.0).unwrap(),
        duration_frames: 5000,
        segments: vec![
            SegmentSpec {
                class_id: 1,
                min_frames: 10,
                max_frames: 60,
                weight: 0.0,
            },
            SegmentSpec {
                class_id: 4,
                min_frames: 15,
                max_frames: 80,
                weight: 1.0,
            },
            SegmentSpec {
                class_id: 16,
                min_frames: 15,
                max_frames: 80,
                weight: 1.0,
            },
        ],
        emission: EmissionSpec {
            mu_true: 4.0,
            mu_other: 0.0,
            sigma: 0.0,
        },
        disturbances: DisturbanceSpec::default(),
    };
    let (labels, frames) = simulate_stream(&perfect).unwrap();
    let gt = gt_events_from_labels(&labels).unwrap();
    let pred = frame_only_alerts(&frames).unwrap();
    assert_eq!(pred, gt, "perfect classifier must reconstruct gt exactly");
    assert!(!gt.is_empty());

    // spike frequency within 3 standard errors over 1e5 frames
    let rate = 0.02;
    let n = 100_000u64;
    let spiky = StreamSpec {
        seed: 2024,
        fps: FrameRate::new(25.0).unwrap(),
        duration_frames: n,
        segments: vec![SegmentSpec {
            class_id: 1,
            min_frames: 1,
            max_frames: 1,
            weight: 0.0,
        }],
        emission: EmissionSpec {
            mu_true: 6.0,
            mu_other: 0.0,
            sigma: 0.0,
        },
        disturbances: DisturbanceSpec {
            spike_rate: rate,
            spike_min_frames: 1,
            spike_max_frames: 1,
            spike_confusions: vec![(1, 4)],
            ..DisturbanceSpec::default()
        },
    };
    let (_, frames) = simulate_stream(&spiky).unwrap();
    let observed = frames.iter().filter(|f| f.argmax_class() == 4).count() as f64 / n as f64;
    let se = (rate * (1.0 - rate) / n as f64).sqrt();
    assert!(
        (observed - rate).abs() <= 3.0 * se,
        "spike frequency {observed} outside {rate} +- {}",
        3.0 * se
    );

    println!(
        "[PASS] criterion 8: simulator deterministic, perfect-classifier sanity holds, \
         spike rate {observed:.4} within 3 SE of {rate}"
    );
}

#[test]
fn criterion_9_end_to_end_cli_on_clean_scenario() {
    let defaults = GateConfig::default();
    assert_eq!(
        (defaults.tau, defaults.k, defaults.tau_off, defaults.m),
        (0.75, 25, 0.60, 3),
        "documented default operating point"
    );

    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_alertgate"))
            .args(args)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "alertgate {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    };

    run(&[
        "simulate",
        "--scenario",
        "clean",
        "--seed",
        "7",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    let frames = dir.path().join("frames.jsonl");
    let labels = dir.path().join("labels.jsonl");
    let events = dir.path().join("events.jsonl");
    run(&[
        "run",
        "--frames",
        frames.to_str().unwrap(),
        "--out",
        events.to_str().unwrap(),
        "--variant",
        "gate",
    ]);
    let metrics = dir.path().join("metrics.csv");
    run(&[
        "eval",
        "--events",
        events.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--eta",
        "0.3",
        "--fps",
        "25",
        "--out",
        metrics.to_str().unwrap(),
    ]);

    let text = fs::read_to_string(&metrics).unwrap();
    let row = text.lines().nth(1).expect("metrics row");
    let fields: Vec<&str> = row.split(',').collect();
    let fa: f64 = fields[1].parse().unwrap();
    let fragmentation: f64 = fields[4].parse().unwrap();
    assert_eq!(fa, 0.0, "false alerts per minute on the clean scenario");
    assert_eq!(fragmentation, 1.0, "fragmentation on the clean scenario");

    println!(
        "[PASS] criterion 9: end-to-end CLI on clean scenario gives FA/min = {fa}, \
         fragmentation = {fragmentation}"
    );
}
