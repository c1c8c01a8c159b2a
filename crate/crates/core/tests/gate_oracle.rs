//! Differential tests: the streaming gate against a brute-force oracle
//! that re-evaluates the raw trigger window at every frame and applies the
//! release/cooldown rules by exhaustive scan.

use alertgate::gate::{run_gate, trigger_set};
use alertgate::types::{AlertEvent, GateConfig, ProbabilityFrame, CLASS_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Exhaustive-scan reference implementation. Deliberately stateless per
/// frame: dominance, windows, violation runs, and end positions are all
/// recomputed from the raw arrays instead of carried incrementally.
fn oracle_gate(frames: &[ProbabilityFrame], cfg: &GateConfig) -> Vec<AlertEvent> {
    // own argmax (ties -> lowest id) to stay independent of the library's
    fn top_class(probs: &[f64]) -> usize {
        let mut best = 0usize;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        best
    }

    let dominant: Vec<Option<u8>> = frames
        .iter()
        .map(|f| {
            let best = top_class(&f.probs);
            let c = best as u8 + 1;
            (c != 1 && f.probs[best] >= cfg.tau).then_some(c)
        })
        .collect();

    let frame_mode = cfg.k == 1 && cfg.m == 1 && cfg.tau_off == cfg.tau;
    let violates = |i: usize, c: u8| -> bool {
        if frame_mode {
            dominant[i] != Some(c)
        } else {
            frames[i].probs[c as usize - 1] < cfg.tau_off
        }
    };

    let mut events = Vec::new();
    let mut active: Option<(u8, u64, usize)> = None; // (class, t_start, trigger position)
    let mut cooldown: Option<(u8, usize)> = None; // (class, last blocked position)
    let mut last_end: Option<u64> = None;

    for i in 0..frames.len() {
        if let Some((c, t_start, act)) = active {
            // maximal run of consecutive violations ending at i
            let mut run = 0usize;
            let mut j = i;
            while j > act && violates(j, c) {
                run += 1;
                j -= 1;
            }
            if run >= cfg.m {
                let end_pos = i - run;
                let event = AlertEvent::new(c, t_start, frames[end_pos].t);
                last_end = Some(event.t_end);
                events.push(event);
                cooldown = Some((c, i + cfg.cooldown));
                active = None;
            }
        }
        if active.is_none() {
            if let Some(c) = dominant[i] {
                if i + 1 >= cfg.k {
                    let start = i + 1 - cfg.k;
                    if (start..=i).all(|j| dominant[j] == Some(c))
                        && last_end.is_none_or(|end| frames[start].t > end)
                        && cooldown.is_none_or(|(cc, until)| cc != c || i > until)
                    {
                        active = Some((c, frames[start].t, i));
                        cooldown = None;
                    }
                }
            }
        }
    }
    if let Some((c, t_start, _)) = active {
        events.push(AlertEvent::new(c, t_start, frames.last().unwrap().t));
    }
    events
}

/// Segment-structured random stream: random dominant classes and
/// confidence levels, occasional exact top-ties to exercise tie-breaking.
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
        // frame-only mode corner: k = m = 1, tau_off = tau (sometimes 0)
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

#[test]
fn gate_matches_brute_force_oracle_on_random_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1E7);
    let mut total_events = 0usize;
    for case in 0..600 {
        let stream = random_stream(&mut rng, 200);
        let cfg = random_config(&mut rng);
        let got = run_gate(&stream, &cfg).expect("valid stream");
        let want = oracle_gate(&stream, &cfg);
        assert_eq!(got, want, "case {case}, cfg {cfg:?}");
        total_events += got.len();
    }
    assert!(
        total_events > 300,
        "stream generator too tame to exercise the gate ({total_events} events)"
    );
}

#[test]
fn gate_output_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stream = random_stream(&mut rng, 200);
    let cfg = GateConfig::default();
    let a = run_gate(&stream, &cfg).unwrap();
    let b = run_gate(&stream, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn emitted_events_honor_structural_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    for _ in 0..200 {
        let stream = random_stream(&mut rng, 200);
        let cfg = random_config(&mut rng);
        let events = run_gate(&stream, &cfg).unwrap();
        for ev in &events {
            ev.validate().expect("well-formed event");
        }
        for pair in events.windows(2) {
            assert!(
                pair[0].t_end < pair[1].t_start,
                "events must be sorted and non-overlapping: {events:?}"
            );
        }
    }
}

#[test]
fn trigger_sets_nest_under_k_and_tau() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7719);
    for _ in 0..200 {
        let stream = random_stream(&mut rng, 150);
        let tau = rng.gen_range(0.2..0.7);
        let k = rng.gen_range(1..=6);
        let base: BTreeSet<u64> = trigger_set(&stream, k, tau).unwrap().into_iter().collect();
        for dk in 1..=3usize {
            let deeper: BTreeSet<u64> = trigger_set(&stream, k + dk, tau)
                .unwrap()
                .into_iter()
                .collect();
            assert!(deeper.is_subset(&base), "k nesting failed");
        }
        for dtau in [0.05, 0.15, 0.3] {
            let stricter: BTreeSet<u64> = trigger_set(&stream, k, tau + dtau)
                .unwrap()
                .into_iter()
                .collect();
            assert!(stricter.is_subset(&base), "tau nesting failed");
        }
    }
}
