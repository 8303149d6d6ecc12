//! Command-line front end: run one evaluation level or the whole sweep,
//! write result tables and plot series, and optionally export per-run
//! traces, message logs, and verdicts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Parser;

use naa::harness::{emit_csv, emit_plot_series, run_sweep, SweepConfig};
use naa::netsim::{
    parse_scenario, run_scenario_with_events, Mechanism, RunResult, ScenarioConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "naa",
    version,
    about = "Simulated fleet evaluation of cooperative ransomware detection"
)]
struct Cli {
    /// Scenario file (one `key = value` per line); flags below override it.
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,

    /// Fleet size.
    #[arg(long, value_name = "N")]
    nodes: Option<usize>,

    /// Compromised machines, for a single-level evaluation.
    #[arg(long, value_name = "K", conflicts_with = "sweep")]
    infected: Option<usize>,

    /// Evaluate every infection level from 0 to the fleet size in steps of 10.
    #[arg(long)]
    sweep: bool,

    /// Mechanism to evaluate: dr, acom, bm, or all three side by side.
    #[arg(long, value_name = "MECH")]
    mechanism: Option<Mechanism>,

    /// Seeded repetitions per cell.
    #[arg(long, value_name = "R", default_value_t = 10)]
    runs: usize,

    /// Base seed; every cell derives its own from it.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,

    /// Corroborating anomalous machines needed for a fleet alert.
    #[arg(long = "threshold-t", value_name = "T")]
    threshold_t: Option<u32>,

    /// Hop budget of one WAN walk.
    #[arg(long = "limit-n", value_name = "N")]
    limit_n: Option<u32>,

    /// Output directory for tables, plot series, and exports.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Export each machine's executed operation stream (single-level only).
    #[arg(long)]
    export_traces: bool,

    /// Export the network message log (single-level only).
    #[arg(long)]
    export_messages: bool,

    /// Export per-machine verdicts (single-level only).
    #[arg(long)]
    export_verdicts: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();

    let mut template = match &cli.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading scenario file {}", path.display()))?;
            parse_scenario(&text).context("parsing scenario file")?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(nodes) = cli.nodes {
        template.nodes = nodes;
    }
    if let Some(seed) = cli.seed {
        template.seed = seed;
    }
    if let Some(t) = cli.threshold_t {
        template.acom.threshold_t = t;
    }
    if let Some(n) = cli.limit_n {
        template.acom.limit_n = n;
    }
    if let Some(infected) = cli.infected {
        template.infected = infected;
    }
    // Flag beats scenario file; with neither, evaluate all three side by side.
    let mechanism = cli.mechanism.unwrap_or(if cli.scenario.is_some() {
        template.mechanism
    } else {
        Mechanism::All
    });
    let mechanisms = match mechanism {
        Mechanism::All => vec![Mechanism::Dr, Mechanism::Acom, Mechanism::Bm],
        single => vec![single],
    };

    let levels: Vec<usize> = if cli.sweep {
        (0..=template.nodes).step_by(10).collect()
    } else {
        vec![template.infected]
    };

    let sweep_config = SweepConfig {
        levels,
        repetitions: cli.runs,
        mechanisms: mechanisms.clone(),
        base_seed: template.seed,
        template: template.clone(),
    };

    let sweep = run_sweep(&sweep_config);

    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    let csv = emit_csv(&sweep.cells);
    let csv_path = cli.out.join("results.csv");
    fs::write(&csv_path, &csv).with_context(|| format!("writing {}", csv_path.display()))?;

    let plot_dir = cli.out.join("plotdata");
    fs::create_dir_all(&plot_dir)?;
    for (name, body) in emit_plot_series(&sweep.cells) {
        fs::write(plot_dir.join(name), body)?;
    }

    print!("{csv}");
    eprintln!(
        "{} runs in {:.2}s; tables under {}",
        sweep.runs.len(),
        sweep.wall_seconds,
        cli.out.display()
    );

    if cli.export_traces || cli.export_messages || cli.export_verdicts {
        if cli.sweep {
            eprintln!("exports are per single-level run; skipping under --sweep");
        } else {
            for &mech in &mechanisms {
                let scenario = ScenarioConfig {
                    mechanism: mech,
                    seed: naa::harness::cell_seed(template.seed, mech, template.infected, 0),
                    ..template.clone()
                };
                let (result, emitted) = run_scenario_with_events(&scenario);
                let dir = cli.out.join(format!("run_{}_{}", mech.label(), template.infected));
                fs::create_dir_all(&dir)?;
                if cli.export_traces {
                    export_traces(&dir, &emitted)?;
                }
                if cli.export_messages {
                    export_messages(&dir, &result)?;
                }
                if cli.export_verdicts {
                    export_verdicts(&dir, &result)?;
                }
                eprintln!("exports for {} under {}", mech.label(), dir.display());
            }
        }
    }

    Ok(())
}

fn export_traces(dir: &Path, emitted: &[(usize, Vec<naa::fsmodel::FsEvent>)]) -> Result<()> {
    for (id, events) in emitted {
        let mut body = String::new();
        for e in events {
            body.push_str(&format!("{:.6}\t{}\t{}\n", e.time, e.kind.label(), e.path));
        }
        fs::write(dir.join(format!("trace_node{id:03}.tsv")), body)?;
    }
    Ok(())
}

fn export_messages(dir: &Path, result: &RunResult) -> Result<()> {
    let mut body = String::new();
    for m in &result.messages {
        body.push_str(&format!(
            "{:.6}\t{:.6}\t{}\t{}\t{}\n",
            m.send_time, m.deliver_time, m.kind, m.src, m.dst
        ));
    }
    fs::write(dir.join("messages.tsv"), body)?;
    Ok(())
}

fn export_verdicts(dir: &Path, result: &RunResult) -> Result<()> {
    let mut body = String::new();
    for o in &result.outcomes {
        let Some(v) = &o.final_verdict else { continue };
        let fmt_opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        body.push_str(&format!(
            "{}\t{:.6}\t{}\t{}\t{}\t{}\n",
            o.id,
            v.decided_at,
            if v.is_anomalous() { "anomalous" } else { "safe" },
            v.pattern_hit,
            fmt_opt(v.entropy_value),
            fmt_opt(v.frequency_value),
        ));
    }
    fs::write(dir.join("verdicts.tsv"), body)?;
    Ok(())
}
