//! Acceptance gate: each test checks one release criterion and prints a
//! single `criterion N: PASS/FAIL — detail` line before asserting.
//!
//! The sweep-backed criteria share one full default evaluation run, computed
//! once; the determinism criterion executes its own second sweep and
//! byte-compares the tables.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use naa::acom::{decide_direction, evaporate, Ant};
use naa::detector::{local_detect, Detector, DetectorConfig, FrequencyConfig, PatternState};
use naa::fsmodel::{
    compute_entropy, gen_trace, EventKind, FileTable, FsEvent, WorkloadClass, WorkloadSpec,
};
use naa::harness::{emit_csv, run_sweep, CellMetrics, SweepConfig, SweepResult};
use naa::netsim::Mechanism;

// ---------------------------------------------------------------------------
// Shared sweep
// ---------------------------------------------------------------------------

struct SharedSweep {
    sweep: SweepResult,
    csv: String,
    nodes: usize,
}

static SWEEP: OnceLock<SharedSweep> = OnceLock::new();

fn shared() -> &'static SharedSweep {
    SWEEP.get_or_init(|| {
        let config = SweepConfig::default();
        let nodes = config.template.nodes;
        let sweep = run_sweep(&config);
        let csv = emit_csv(&sweep.cells);
        SharedSweep { sweep, csv, nodes }
    })
}

fn cell(mechanism: Mechanism, level: usize) -> &'static CellMetrics {
    shared()
        .sweep
        .cells
        .iter()
        .find(|c| c.mechanism == mechanism && c.infected == level)
        .expect("sweep covers every (mechanism, level) cell")
}

fn verdict(criterion: u32, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {status} — {detail}");
    assert!(ok, "criterion {criterion} failed — {detail}");
}

// ---------------------------------------------------------------------------
// 1. Entropy against an independent reference
// ---------------------------------------------------------------------------

/// Brute-force Shannon entropy, deliberately coded as a different
/// rearrangement of the formula: H = log2(n) - (1/n) * sum c_i * log2(c_i).
fn reference_entropy(histogram: &[u64; 256]) -> f64 {
    let total: u64 = histogram.iter().sum();
    let n = total as f64;
    let mut weighted = 0.0;
    for &c in histogram {
        if c > 1 {
            weighted += c as f64 * (c as f64).log2();
        }
    }
    n.log2() - weighted / n
}

#[test]
fn criterion_01_entropy_matches_brute_force_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acce5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut histogram = [0u64; 256];
        for slot in histogram.iter_mut() {
            if rng.gen_bool(0.7) {
                *slot = rng.gen_range(0..1000);
            }
        }
        if histogram.iter().all(|&c| c == 0) {
            histogram[0] = 1;
        }
        let got = compute_entropy(&histogram).unwrap();
        worst = worst.max((got - reference_entropy(&histogram)).abs());
    }

    let uniform_exact = compute_entropy(&[17u64; 256]).unwrap() == 8.0;
    let mut single = [0u64; 256];
    single[42] = 4242;
    let single_exact = compute_entropy(&single).unwrap() == 0.0;

    let ok = worst <= 1e-9 && uniform_exact && single_exact;
    verdict(
        1,
        ok,
        &format!(
            "worst |Δ| over 1000 seeded histograms = {worst:.3e} (tol 1e-9); \
             uniform == 8.0: {uniform_exact}; single-symbol == 0.0: {single_exact}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Read/write-pattern golden suite
// ---------------------------------------------------------------------------

fn pattern_matches(class: WorkloadClass, files: usize, seed: u64) -> usize {
    let spec = WorkloadSpec {
        class,
        ops_per_second: 742.0,
        file_count: files,
        file_size_bytes: 1024,
        start_time: 0.0,
    };
    let trace = gen_trace(&spec, seed);
    let mut state = PatternState::new();
    trace
        .events
        .iter()
        .filter(|e| state.observe_event(e).is_some())
        .count()
}

#[test]
fn criterion_02_task_traces_match_the_golden_pattern_column() {
    let mut failures = Vec::new();
    for seed in 0..5u64 {
        for &files in &[1usize, 3, 40] {
            // Encrypt-and-replace fires once per file; every other task
            // shape never produces the {read, write} signature.
            let expectations = [
                (WorkloadClass::Ransomware, files),
                (WorkloadClass::BenignEncrypt, files),
                (WorkloadClass::Modify, 0),
                (WorkloadClass::Compress, 0),
                (WorkloadClass::Decompress, 0),
                (WorkloadClass::Browse, 0),
                (WorkloadClass::Idle, 0),
            ];
            for (class, want) in expectations {
                let got = pattern_matches(class, files, seed);
                if got != want {
                    failures.push(format!(
                        "{} (files {files}, seed {seed}): {got} matches, want {want}",
                        class.label()
                    ));
                }
            }
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        "7 classes x 3 sizes x 5 seeds classified exactly (zero tolerance)".to_string()
    } else {
        failures.join("; ")
    };
    verdict(2, ok, &detail);
}

// ---------------------------------------------------------------------------
// 3. Frequency-threshold fidelity
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_calibrated_rates_fall_on_the_right_side_of_the_threshold() {
    let config = DetectorConfig::default();

    let hostile = WorkloadSpec {
        class: WorkloadClass::Ransomware,
        ops_per_second: 742.0,
        file_count: 150,
        file_size_bytes: 1024,
        start_time: 0.0,
    };
    let trace = gen_trace(&hostile, 11);
    let hostile_verdict = local_detect(&trace.events, &trace.files, &config);
    let hostile_ok =
        hostile_verdict.is_anomalous() && hostile_verdict.frequency_hit == Some(true);

    let browse = WorkloadSpec {
        class: WorkloadClass::Browse,
        ops_per_second: 342.0,
        file_count: 40,
        file_size_bytes: 1024,
        start_time: 0.0,
    };
    let trace = gen_trace(&browse, 11);
    let browse_verdict = local_detect(&trace.events, &trace.files, &config);
    let browse_ok = !browse_verdict.is_anomalous();

    // Exactly 500 op/sec: 125 read/writes spanning [1.0, 1.25], both ends
    // exact in binary, so the computed rate is exactly 500.0 and the
    // inclusive threshold must fire.
    let boundary_config = DetectorConfig {
        frequency: FrequencyConfig {
            threshold_ops_per_sec: 500.0,
            min_ops: 125,
            max_wait_seconds: 10.0,
        },
        ..DetectorConfig::default()
    };
    let mut detector = Detector::new(boundary_config);
    let files = FileTable::new();
    let at = |i: u64| 1.0 + 0.25 * i as f64 / 124.0;
    let mut boundary_verdict = None;
    let feed = |d: &mut Detector, t: f64, kind: EventKind| {
        d.on_event(&FsEvent { time: t, kind, path: "doc.qcry".into() }, files.get("doc.qcry"))
    };
    feed(&mut detector, 0.5, EventKind::Open);
    feed(&mut detector, at(0), EventKind::Read);
    if let Some(v) = feed(&mut detector, at(1), EventKind::Write) {
        boundary_verdict = Some(v);
    }
    for i in 2..125 {
        if let Some(v) = feed(&mut detector, at(i), EventKind::Read) {
            boundary_verdict = Some(v);
        }
    }
    let boundary_verdict = boundary_verdict.expect("window resolves at its operation quota");
    let boundary_ok = boundary_verdict.frequency_value == Some(500.0)
        && boundary_verdict.frequency_hit == Some(true)
        && boundary_verdict.is_anomalous();

    let ok = hostile_ok && browse_ok && boundary_ok;
    verdict(
        3,
        ok,
        &format!(
            "742 op/s encrypting trace anomalous at {:.1} op/s: {hostile_ok}; \
             342 op/s browse safe: {browse_ok}; \
             exact-500.0 boundary inclusive: {boundary_ok}",
            hostile_verdict.frequency_value.unwrap_or(f64::NAN)
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Pheromone evaporation against exact integer arithmetic
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_evaporation_matches_exact_rational_floor() {
    let mut failures = Vec::new();
    let mut checked = 0u32;
    for count in 1..=20u32 {
        for age in 0..=60u32 {
            let got = evaporate(count, age as f64, 10.0, 0.9);
            // floor(count * 9^k / 10^k) computed without floating point.
            let want = if age < 10 {
                BigUint::from(count)
            } else {
                let k = age - 10;
                BigUint::from(count) * BigUint::from(9u32).pow(k) / BigUint::from(10u32).pow(k)
            };
            if BigUint::from(got) != want {
                failures.push(format!("p={count} t={age}: {got} != {want}"));
            }
            checked += 1;
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!("{checked} (count, age) pairs match exact integer floors")
    } else {
        failures.join("; ")
    };
    verdict(4, ok, &detail);
}

// ---------------------------------------------------------------------------
// 5. Direction roulette distribution
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_direction_weights_shape_the_draw() {
    // Peers: home (weight 0), one known-anomalous (2), two fresh (1 each),
    // one already visited (0) -> draw probabilities (0.5, 0.25, 0.25).
    let home = 0usize;
    let peers = vec![0usize, 1, 2, 3, 4];
    let known: BTreeSet<usize> = [1].into();
    let ant = Ant {
        home,
        goal: 2,
        hop_limit: 20,
        visited: vec![4],
        collected: BTreeSet::new(),
        created_at: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ce);
    let mut counts = [0u32; 5];
    for _ in 0..10_000 {
        let next = decide_direction(&ant, &peers, &known, &mut rng)
            .expect("drawable peers remain");
        counts[next] += 1;
    }
    // 3σ bands for Binomial(10_000, p): p=0.5 -> 150, p=0.25 -> 130.
    let known_ok = (counts[1] as i64 - 5000).abs() <= 150;
    let fresh_ok =
        (counts[2] as i64 - 2500).abs() <= 130 && (counts[3] as i64 - 2500).abs() <= 130;
    let barred_ok = counts[0] == 0 && counts[4] == 0;
    let ok = known_ok && fresh_ok && barred_ok;
    verdict(
        5,
        ok,
        &format!(
            "10000 draws: known {} (want 5000±150), fresh {}/{} (want 2500±130), \
             home {} and visited {} (must be 0)",
            counts[1], counts[2], counts[3], counts[0], counts[4]
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Hop and message bounds across the sweep
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_walks_and_broadcasts_respect_their_message_budgets() {
    let shared = shared();
    let lan_peers = shared.nodes - 1;
    let mut failures = Vec::new();
    let mut max_hops = 0u32;
    for run in &shared.sweep.runs {
        let tag = format!("{} level {} rep {}", run.mechanism.label(), run.level, run.rep);
        max_hops = max_hops.max(run.audit.max_inquired);
        if run.audit.max_inquired > 20 {
            failures.push(format!("{tag}: walk visited {}", run.audit.max_inquired));
        }
        match run.mechanism {
            Mechanism::Dr => {
                if run.metrics.overhead != 0.0 {
                    failures.push(format!("{tag}: {} messages", run.metrics.overhead));
                }
            }
            Mechanism::Acom | Mechanism::All => {
                let budget = run.audit.escalated * 21;
                if run.audit.ant_messages > budget || run.audit.bm_messages != 0 {
                    failures.push(format!(
                        "{tag}: {} ant messages (budget {budget}), {} broadcasts",
                        run.audit.ant_messages, run.audit.bm_messages
                    ));
                }
            }
            Mechanism::Bm => {
                let expected = run.audit.escalated * lan_peers;
                if run.audit.bm_messages != expected || run.audit.ant_messages != 0 {
                    failures.push(format!(
                        "{tag}: {} broadcasts (want exactly {expected}), {} ant messages",
                        run.audit.bm_messages, run.audit.ant_messages
                    ));
                }
            }
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!(
            "{} runs: max walk length {max_hops} ≤ 20; ant messages within escalated×21; \
             broadcasts exactly escalated×{lan_peers}; local-only runs silent",
            shared.sweep.runs.len()
        )
    } else {
        failures.join("; ")
    };
    verdict(6, ok, &detail);
}

// ---------------------------------------------------------------------------
// 7. Accuracy ordering
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_network_verdicts_beat_local_verdicts_where_locals_err() {
    let shared = shared();
    let acc = |mech: Mechanism, level: usize| cell(mech, level).accuracy.unwrap();

    let at10 = (acc(Mechanism::Acom, 10), acc(Mechanism::Dr, 10));
    let at20 = (acc(Mechanism::Acom, 20), acc(Mechanism::Dr, 20));
    let ordering_ok = at10.0 >= at10.1 && at20.0 >= at20.1;

    let mut floor_ok = true;
    let mut min_acom = f64::INFINITY;
    for c in shared.sweep.cells.iter().filter(|c| c.mechanism == Mechanism::Acom) {
        if c.infected >= 10 {
            let a = c.accuracy.unwrap();
            min_acom = min_acom.min(a);
            floor_ok &= a >= 0.95;
        }
    }

    let runtime_ok = shared.sweep.wall_seconds < 300.0;
    let ok = ordering_ok && floor_ok && runtime_ok;
    verdict(
        7,
        ok,
        &format!(
            "level 10: colony {:.3} ≥ local {:.3}; level 20: colony {:.3} ≥ local {:.3}; \
             colony floor {min_acom:.3} ≥ 0.95; sweep took {:.1}s (< 300s)",
            at10.0, at10.1, at20.0, at20.1, shared.sweep.wall_seconds
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Latency and overhead orderings
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_latency_and_overhead_follow_the_expected_orderings() {
    let shared = shared();
    let mean = |mech: Mechanism, f: fn(&CellMetrics) -> f64| {
        let values: Vec<f64> = shared
            .sweep
            .cells
            .iter()
            .filter(|c| c.mechanism == mech)
            .map(f)
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };

    let dr_latency_zero = shared
        .sweep
        .runs
        .iter()
        .filter(|r| r.mechanism == Mechanism::Dr)
        .all(|r| r.metrics.latency == 0.0 && r.metrics.overhead == 0.0);

    let bm_latency = mean(Mechanism::Bm, |c| c.latency);
    let acom_latency = mean(Mechanism::Acom, |c| c.latency);
    let latency_ok = bm_latency > 0.0 && bm_latency <= acom_latency;

    let mut overhead_ok = true;
    for c in shared.sweep.cells.iter().filter(|c| c.mechanism == Mechanism::Bm) {
        if c.infected >= 10 {
            overhead_ok &= c.overhead > cell(Mechanism::Acom, c.infected).overhead;
        }
    }

    let ok = dr_latency_zero && latency_ok && overhead_ok;
    verdict(
        8,
        ok,
        &format!(
            "local runs report instantly with zero messages: {dr_latency_zero}; \
             mean latency 0 < broadcast {bm_latency:.3}s ≤ colony {acom_latency:.3}s: {latency_ok}; \
             broadcast overhead > colony overhead at every level ≥ 10: {overhead_ok}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. File-loss bound under suspension
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_suspension_caps_every_compromised_machine_below_fifty_files() {
    let shared = shared();
    let mut failures = Vec::new();
    let mut worst = 0u64;
    let mut machines = 0usize;
    for run in &shared.sweep.runs {
        let tag = format!("{} level {} rep {}", run.mechanism.label(), run.level, run.rep);
        if !run.audit.suspension_frozen {
            failures.push(format!("{tag}: files were lost after a freeze"));
        }
        for &loss in &run.audit.infected_losses {
            machines += 1;
            worst = worst.max(loss);
            if loss == 0 || loss >= 50 {
                failures.push(format!("{tag}: loss {loss} outside (0, 50)"));
            }
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!(
            "{machines} compromised machines across the sweep, worst loss {worst} < 50, \
             freezes final in every run"
        )
    } else {
        failures.join("; ")
    };
    verdict(9, ok, &detail);
}

// ---------------------------------------------------------------------------
// 10. Whole-sweep determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_identical_seeds_reproduce_identical_tables() {
    let first = &shared().csv;
    let second_sweep = run_sweep(&SweepConfig::default());
    let second = emit_csv(&second_sweep.cells);
    let ok = *first == second;
    verdict(
        10,
        ok,
        &format!(
            "two full sweeps, same base seed: {} bytes vs {} bytes, byte-identical: {ok}",
            first.len(),
            second.len()
        ),
    );
}
