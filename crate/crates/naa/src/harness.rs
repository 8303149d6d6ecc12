//! Fleet-scale evaluation: run a grid of scenarios over infection levels and
//! mechanisms, reduce each run to four metrics, and emit result tables.
//!
//! Metrics per run: classification accuracy against ground truth (skipped
//! for the broadcast mechanism, whose report is a LAN statistic rather than
//! a per-machine call), total network messages, mean seconds from escalation
//! to the user-facing report, and mean files lost per compromised machine.

use std::time::Instant;

use crate::acom::AcomVerdict;
use crate::netsim::{run_scenario, Mechanism, RunResult, ScenarioConfig};

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Per-run seed: stable for a `(base, mechanism, level, repetition)` cell
/// and distinct across cells, so any run of a sweep can be replayed alone.
pub fn cell_seed(base_seed: u64, mechanism: Mechanism, level: usize, rep: usize) -> u64 {
    let tag = format!("{}|{}|{}", mechanism.label(), level, rep);
    base_seed.wrapping_add(fnv1a(tag.as_bytes()))
}

// ---------------------------------------------------------------------------
// Per-run reduction
// ---------------------------------------------------------------------------

/// The four headline numbers of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Fraction of machines classified correctly; `None` when the mechanism
    /// makes no per-machine call.
    pub accuracy: Option<f64>,
    /// Total network messages sent.
    pub overhead: f64,
    /// Mean seconds from escalation to the report reaching the user; zero
    /// when nothing escalated. Runs whose report never arrived count the
    /// full remaining horizon.
    pub latency: f64,
    /// Mean files lost per compromised machine.
    pub loss: f64,
}

/// Reduce a run to its metrics under the given mechanism's reading.
pub fn compute_metrics(result: &RunResult, mechanism: Mechanism) -> RunMetrics {
    let n = result.outcomes.len();

    let accuracy = match mechanism {
        Mechanism::Bm => None,
        Mechanism::Dr => {
            let correct = result
                .outcomes
                .iter()
                .filter(|o| o.ever_anomalous == o.infected)
                .count();
            Some(correct as f64 / n as f64)
        }
        Mechanism::Acom | Mechanism::All => {
            let correct = result
                .outcomes
                .iter()
                .filter(|o| {
                    let alerted = matches!(
                        &o.acom_report,
                        Some((report, _)) if report.verdict == AcomVerdict::Alert
                    );
                    alerted == o.infected
                })
                .count();
            Some(correct as f64 / n as f64)
        }
    };

    let mut latency_sum = 0.0;
    let mut escalated = 0usize;
    for o in &result.outcomes {
        let Some(at) = o.escalated_at else { continue };
        escalated += 1;
        let reported = match mechanism {
            // The local verdict is itself the report: instantaneous.
            Mechanism::Dr => at,
            Mechanism::Acom | Mechanism::All => {
                o.acom_report.as_ref().map(|(_, t)| *t).unwrap_or(result.horizon_seconds)
            }
            Mechanism::Bm => {
                o.bm_report.as_ref().map(|(_, t)| *t).unwrap_or(result.horizon_seconds)
            }
        };
        latency_sum += reported - at;
    }
    let latency = if escalated > 0 { latency_sum / escalated as f64 } else { 0.0 };

    let infected: Vec<_> = result.outcomes.iter().filter(|o| o.infected).collect();
    let loss = if infected.is_empty() {
        0.0
    } else {
        infected.iter().map(|o| o.files_lost as f64).sum::<f64>() / infected.len() as f64
    };

    RunMetrics { accuracy, overhead: result.messages.len() as f64, latency, loss }
}

/// Cross-checks the acceptance gate reads off each run.
#[derive(Debug, Clone)]
pub struct RunAudit {
    pub escalated: usize,
    pub ant_messages: usize,
    pub bm_messages: usize,
    /// Largest number of nodes any completed walk visited.
    pub max_inquired: u32,
    /// Files lost, one entry per compromised machine.
    pub infected_losses: Vec<u64>,
    /// True iff every machine that froze lost nothing after freezing.
    pub suspension_frozen: bool,
}

pub fn audit_run(result: &RunResult) -> RunAudit {
    let escalated = result.outcomes.iter().filter(|o| o.escalated_at.is_some()).count();
    let ant_messages = result.messages.iter().filter(|m| m.kind.starts_with("ant_")).count();
    let bm_messages = result.messages.iter().filter(|m| m.kind == "bm_announce").count();
    let max_inquired = result
        .outcomes
        .iter()
        .filter_map(|o| o.acom_report.as_ref().map(|(r, _)| r.inquired))
        .max()
        .unwrap_or(0);
    let infected_losses = result
        .outcomes
        .iter()
        .filter(|o| o.infected)
        .map(|o| o.files_lost)
        .collect();
    let suspension_frozen = result.outcomes.iter().all(|o| {
        o.files_lost_at_suspension
            .map(|frozen| frozen == o.files_lost)
            .unwrap_or(true)
    });
    RunAudit {
        escalated,
        ant_messages,
        bm_messages,
        max_inquired,
        infected_losses,
        suspension_frozen,
    }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// The evaluation grid: which mechanisms, which infection levels, how many
/// seeded repetitions of each cell.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub levels: Vec<usize>,
    pub repetitions: usize,
    pub mechanisms: Vec<Mechanism>,
    pub base_seed: u64,
    /// Everything about the fleet except mechanism, infection level, and
    /// seed, which the sweep itself fills per cell.
    pub template: ScenarioConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            levels: (0..=100).step_by(10).collect(),
            repetitions: 10,
            mechanisms: vec![Mechanism::Dr, Mechanism::Acom, Mechanism::Bm],
            base_seed: 1,
            template: ScenarioConfig::default(),
        }
    }
}

/// One cell of the grid: metrics averaged over its repetitions.
#[derive(Debug, Clone)]
pub struct CellMetrics {
    pub mechanism: Mechanism,
    pub infected: usize,
    pub accuracy: Option<f64>,
    pub overhead: f64,
    pub latency: f64,
    pub loss: f64,
}

/// One run's identity and reductions, kept for auditing.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub mechanism: Mechanism,
    pub level: usize,
    pub rep: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub audit: RunAudit,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<CellMetrics>,
    pub runs: Vec<SweepRun>,
    pub wall_seconds: f64,
}

/// Run the full grid. Deterministic: a given config always produces the
/// same cells, runs, and tables.
pub fn run_sweep(config: &SweepConfig) -> SweepResult {
    let started = Instant::now();
    let mut cells = Vec::new();
    let mut runs = Vec::new();
    for &mechanism in &config.mechanisms {
        for &level in &config.levels {
            let mut acc_sum = 0.0;
            let mut acc_count = 0usize;
            let mut overhead_sum = 0.0;
            let mut latency_sum = 0.0;
            let mut loss_sum = 0.0;
            for rep in 0..config.repetitions {
                let seed = cell_seed(config.base_seed, mechanism, level, rep);
                let scenario = ScenarioConfig {
                    mechanism,
                    infected: level,
                    seed,
                    ..config.template.clone()
                };
                let result = run_scenario(&scenario);
                let metrics = compute_metrics(&result, mechanism);
                let audit = audit_run(&result);
                if let Some(a) = metrics.accuracy {
                    acc_sum += a;
                    acc_count += 1;
                }
                overhead_sum += metrics.overhead;
                latency_sum += metrics.latency;
                loss_sum += metrics.loss;
                runs.push(SweepRun { mechanism, level, rep, seed, metrics, audit });
            }
            let reps = config.repetitions as f64;
            cells.push(CellMetrics {
                mechanism,
                infected: level,
                accuracy: (acc_count > 0).then(|| acc_sum / acc_count as f64),
                overhead: overhead_sum / reps,
                latency: latency_sum / reps,
                loss: loss_sum / reps,
            });
        }
    }
    SweepResult { cells, runs, wall_seconds: started.elapsed().as_secs_f64() }
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

/// Render cells as CSV: one row per (mechanism, level), six-decimal floats,
/// accuracy left empty where undefined.
pub fn emit_csv(cells: &[CellMetrics]) -> String {
    let mut out = String::from("mechanism,infected,accuracy,overhead,latency,loss\n");
    for cell in cells {
        let accuracy = cell
            .accuracy
            .map(|a| format!("{a:.6}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6}\n",
            cell.mechanism.label(),
            cell.infected,
            accuracy,
            cell.overhead,
            cell.latency,
            cell.loss
        ));
    }
    out
}

/// Per-figure two-column series (`level<TAB>value`), one file per metric and
/// mechanism, named `{metric}_{mechanism}.dat`.
pub fn emit_plot_series(cells: &[CellMetrics]) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mechanisms: Vec<Mechanism> = {
        let mut seen = Vec::new();
        for c in cells {
            if !seen.contains(&c.mechanism) {
                seen.push(c.mechanism);
            }
        }
        seen
    };
    let metrics: [(&str, fn(&CellMetrics) -> Option<f64>); 4] = [
        ("accuracy", |c| c.accuracy),
        ("overhead", |c| Some(c.overhead)),
        ("latency", |c| Some(c.latency)),
        ("loss", |c| Some(c.loss)),
    ];
    for (name, extract) in metrics {
        for &mechanism in &mechanisms {
            let mut body = String::new();
            for cell in cells.iter().filter(|c| c.mechanism == mechanism) {
                if let Some(value) = extract(cell) {
                    body.push_str(&format!("{}\t{:.6}\n", cell.infected, value));
                }
            }
            if !body.is_empty() {
                files.push((format!("{name}_{}.dat", mechanism.label()), body));
            }
        }
    }
    files
}
