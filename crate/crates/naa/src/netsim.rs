//! Deterministic discrete-event fleet simulator.
//!
//! Wires the pieces together: every machine runs its workload trace through
//! its own detection pipeline; anomalous verdicts suspend the workload and
//! prompt the (simulated) user; an escalation launches the configured
//! network mechanisms. Events are totally ordered by `(time, insertion
//! sequence)` and all protocol state lives in ordered collections, so a
//! scenario is a pure function of its configuration — byte-for-byte
//! reproducible.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::acom::{
    acom_step, create_ant, decide_direction, exchange_information, low_risk_text, AcomConfig,
    AcomNodeState, AcomReport, AcomVerdict, Ant, CreateAntOutcome, StepOutcome,
};
use crate::bm::{bm_broadcast, bm_report, receive_announcement, BmConfig, BmReport, BmState};
use crate::detector::{DetectionVerdict, Detector, DetectorConfig, VerdictState};
use crate::fsmodel::{gen_trace, EventKind, FileTable, FsEvent, Trace, WorkloadClass, WorkloadSpec};
use crate::NodeId;

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

/// Who can talk to whom. Peer lists are sorted, symmetric, and never include
/// the node itself.
#[derive(Debug, Clone)]
pub struct Topology {
    pub peers: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Every machine reaches every other machine.
    pub fn complete(n: usize) -> Self {
        let peers = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Self { peers }
    }

    /// A connected sparse graph: a ring for connectivity plus random chords
    /// until the average degree reaches `k`.
    pub fn sparse(n: usize, k: usize, seed: u64) -> Self {
        let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        if n > 1 {
            for i in 0..n {
                let j = (i + 1) % n;
                edges.insert((i.min(j), i.max(j)));
            }
        }
        let target = n * k / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut attempts = 0;
        while edges.len() < target && attempts < 50 * target {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
            attempts += 1;
        }
        let mut peers = vec![Vec::new(); n];
        for (a, b) in edges {
            peers[a].push(b);
            peers[b].push(a);
        }
        for list in &mut peers {
            list.sort_unstable();
        }
        Self { peers }
    }

    pub fn len(&self) -> usize {
        self.peers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peers.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    /// Local detection only: no network traffic.
    Dr,
    /// Ant-colony WAN inquiry.
    Acom,
    /// LAN broadcast.
    Bm,
    /// Both network mechanisms in the same run.
    All,
}

impl Mechanism {
    pub fn label(self) -> &'static str {
        match self {
            Mechanism::Dr => "dr",
            Mechanism::Acom => "acom",
            Mechanism::Bm => "bm",
            Mechanism::All => "all",
        }
    }
}

impl FromStr for Mechanism {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dr" => Ok(Mechanism::Dr),
            "acom" => Ok(Mechanism::Acom),
            "bm" => Ok(Mechanism::Bm),
            "all" => Ok(Mechanism::All),
            other => Err(format!("unknown mechanism '{other}' (expected dr|acom|bm|all)")),
        }
    }
}

/// How the simulated user answers the "is this activity yours?" prompt that
/// follows an anomalous verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserPolicy {
    /// Nobody ever owns up: every anomaly escalates.
    AlwaysEscalate,
    /// Users recognize their own encryption tooling and wave it through;
    /// everything else escalates.
    LegitimateAck,
    /// Oracle user: escalates exactly on true infections (upper bound).
    GroundTruth,
}

impl UserPolicy {
    pub fn label(self) -> &'static str {
        match self {
            UserPolicy::AlwaysEscalate => "always_escalate",
            UserPolicy::LegitimateAck => "legitimate_ack",
            UserPolicy::GroundTruth => "ground_truth",
        }
    }
}

impl FromStr for UserPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "always_escalate" => Ok(UserPolicy::AlwaysEscalate),
            "legitimate_ack" => Ok(UserPolicy::LegitimateAck),
            "ground_truth" => Ok(UserPolicy::GroundTruth),
            other => Err(format!(
                "unknown user policy '{other}' (expected always_escalate|legitimate_ack|ground_truth)"
            )),
        }
    }
}

/// Answer the post-verdict prompt: `true` means escalate.
pub fn user_prompt(policy: UserPolicy, infected: bool, class: WorkloadClass) -> bool {
    match policy {
        UserPolicy::AlwaysEscalate => true,
        UserPolicy::LegitimateAck => class != WorkloadClass::BenignEncrypt,
        UserPolicy::GroundTruth => infected,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Complete,
    Sparse,
}

/// Workload shape parameters shared by every run of a scenario.
#[derive(Debug, Clone)]
pub struct WorkloadParams {
    pub ransomware_ops_per_second: f64,
    pub ransomware_file_count: usize,
    pub benign_ops_per_second: f64,
    pub benign_file_count: usize,
    pub file_size_bytes: u64,
    /// Workload start times are drawn uniformly from `[0, start_jitter)`.
    pub start_jitter_seconds: f64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            ransomware_ops_per_second: 742.0,
            ransomware_file_count: 150,
            benign_ops_per_second: 700.0,
            benign_file_count: 40,
            file_size_bytes: 1024,
            start_jitter_seconds: 0.5,
        }
    }
}

/// Complete description of one simulated run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub nodes: usize,
    pub infected: usize,
    pub mechanism: Mechanism,
    pub topology: TopologyKind,
    pub topology_degree: usize,
    pub seed: u64,
    pub horizon_seconds: f64,
    pub user_policy: UserPolicy,
    /// Benign-encryptor machines seeded per 100 clean machines.
    pub fp_per_100_safe: f64,
    pub per_hop_delay_seconds: f64,
    pub detector: DetectorConfig,
    pub acom: AcomConfig,
    pub bm: BmConfig,
    pub workload: WorkloadParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            nodes: 100,
            infected: 10,
            mechanism: Mechanism::Acom,
            topology: TopologyKind::Complete,
            topology_degree: 8,
            seed: 1,
            horizon_seconds: 60.0,
            user_policy: UserPolicy::LegitimateAck,
            fp_per_100_safe: 3.0,
            per_hop_delay_seconds: 0.010,
            detector: DetectorConfig::default(),
            acom: AcomConfig::default(),
            bm: BmConfig::default(),
            workload: WorkloadParams::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for '{key}': {message}")]
    BadValue { line: usize, key: String, message: String },
}

/// Parse a scenario description: one `key = value` per line, `#` comments,
/// unknown keys rejected. Missing keys keep their defaults.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut config = ScenarioConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ScenarioError::Malformed { line: line_no, text: raw.to_string() });
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |message: String| ScenarioError::BadValue {
            line: line_no,
            key: key.to_string(),
            message,
        };
        macro_rules! parse {
            ($ty:ty) => {
                value.parse::<$ty>().map_err(|e| bad(e.to_string()))?
            };
        }
        match key {
            "nodes" => config.nodes = parse!(usize),
            "infected" => config.infected = parse!(usize),
            "mechanism" => config.mechanism = value.parse().map_err(bad)?,
            "topology" => {
                config.topology = match value {
                    "complete" => TopologyKind::Complete,
                    "sparse" => TopologyKind::Sparse,
                    other => return Err(bad(format!("unknown topology '{other}'"))),
                }
            }
            "topology_degree" => config.topology_degree = parse!(usize),
            "seed" => config.seed = parse!(u64),
            "horizon_seconds" => config.horizon_seconds = parse!(f64),
            "user_policy" => config.user_policy = value.parse().map_err(bad)?,
            "fp.per_100_safe" => config.fp_per_100_safe = parse!(f64),
            "net.per_hop_delay_seconds" => config.per_hop_delay_seconds = parse!(f64),
            "detector.text_threshold" => config.detector.thresholds.text_threshold = parse!(f64),
            "detector.nontext_threshold" => {
                config.detector.thresholds.nontext_threshold = parse!(f64)
            }
            "detector.frequency_threshold" => {
                config.detector.frequency.threshold_ops_per_sec = parse!(f64)
            }
            "detector.min_ops" => config.detector.frequency.min_ops = parse!(usize),
            "detector.max_wait_seconds" => {
                config.detector.frequency.max_wait_seconds = parse!(f64)
            }
            "acom.threshold_T" => config.acom.threshold_t = parse!(u32),
            "acom.limit_N" => config.acom.limit_n = parse!(u32),
            "acom.evaporation_hold_seconds" => {
                config.acom.evaporation_hold_seconds = parse!(f64)
            }
            "acom.evaporation_rate" => config.acom.evaporation_rate = parse!(f64),
            "acom.verdict_staleness_seconds" => {
                config.acom.verdict_staleness_seconds = parse!(f64)
            }
            "acom.detection_pass_seconds" => config.acom.detection_pass_seconds = parse!(f64),
            "bm.window_seconds" => config.bm.window_seconds = parse!(f64),
            "workload.ransomware_ops_per_second" => {
                config.workload.ransomware_ops_per_second = parse!(f64)
            }
            "workload.ransomware_file_count" => {
                config.workload.ransomware_file_count = parse!(usize)
            }
            "workload.benign_ops_per_second" => {
                config.workload.benign_ops_per_second = parse!(f64)
            }
            "workload.benign_file_count" => config.workload.benign_file_count = parse!(usize),
            "workload.file_size_bytes" => config.workload.file_size_bytes = parse!(u64),
            "workload.start_jitter_seconds" => {
                config.workload.start_jitter_seconds = parse!(f64)
            }
            other => {
                return Err(ScenarioError::UnknownKey { line: line_no, key: other.to_string() })
            }
        }
    }
    Ok(config)
}

// ---------------------------------------------------------------------------
// Messages and events
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Payload {
    AntTransfer(Ant),
    AntReturn { report: AcomReport, collected: BTreeSet<NodeId> },
    BmAnnounce,
}

impl Payload {
    fn kind_label(&self) -> &'static str {
        match self {
            Payload::AntTransfer(_) => "ant_transfer",
            Payload::AntReturn { .. } => "ant_return",
            Payload::BmAnnounce => "bm_announce",
        }
    }
}

/// One network message, as recorded in the run's message log.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub send_time: f64,
    pub deliver_time: f64,
    pub kind: &'static str,
    pub src: NodeId,
    pub dst: NodeId,
}

#[derive(Debug)]
enum EventPayload {
    /// The node's next workload operation is due.
    Workload { node: NodeId },
    /// A frequency-measurement window hits its decision deadline.
    WindowDeadline { node: NodeId, window: u64 },
    /// A network message reaches its destination.
    Deliver { src: NodeId, dst: NodeId, payload: Payload },
    /// A detection pass requested by a waiting ant completes.
    PassEnd { node: NodeId, ant: Ant },
    /// An announcing machine's listening window closes.
    BmWindowEnd { node: NodeId },
}

struct QueuedEvent {
    time: f64,
    seq: u64,
    payload: EventPayload,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.time.total_cmp(&other.time) == Ordering::Equal && self.seq == other.seq
    }
}
impl Eq for QueuedEvent {}
impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueuedEvent {
    // Reversed: the std heap is a max-heap and we want earliest-first, ties
    // broken by insertion order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

// ---------------------------------------------------------------------------
// Per-node runtime state
// ---------------------------------------------------------------------------

struct Node {
    id: NodeId,
    infected: bool,
    class: WorkloadClass,
    events: Vec<FsEvent>,
    files: FileTable,
    cursor: usize,
    detector: Detector,
    scheduled_window: Option<u64>,
    current_verdict: Option<(VerdictState, f64)>,
    last_verdict_detail: Option<DetectionVerdict>,
    ever_anomalous: bool,
    first_anomalous_at: Option<f64>,
    suspended: bool,
    escalated_at: Option<f64>,
    acknowledged: bool,
    files_lost: u64,
    files_lost_at_suspension: Option<u64>,
    acom: AcomNodeState,
    acom_report: Option<(AcomReport, f64)>,
    bm: BmState,
    bm_report: Option<(BmReport, f64)>,
    emitted: Vec<FsEvent>,
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Everything observable about one machine at the end of a run.
#[derive(Debug, Clone)]
pub struct NodeOutcome {
    pub id: NodeId,
    pub infected: bool,
    pub workload: WorkloadClass,
    /// Whether the local verdict ever turned anomalous.
    pub ever_anomalous: bool,
    pub first_anomalous_at: Option<f64>,
    pub escalated_at: Option<f64>,
    /// User saw the prompt and claimed the activity as their own.
    pub acknowledged: bool,
    pub files_lost: u64,
    /// Files lost at the moment the machine escalated and froze.
    pub files_lost_at_suspension: Option<u64>,
    pub acom_report: Option<(AcomReport, f64)>,
    pub bm_report: Option<(BmReport, f64)>,
    pub final_verdict: Option<DetectionVerdict>,
}

/// Result of one simulated run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcomes: Vec<NodeOutcome>,
    pub messages: Vec<MessageRecord>,
    pub horizon_seconds: f64,
}

// ---------------------------------------------------------------------------
// The simulator
// ---------------------------------------------------------------------------

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Sim {
    config: ScenarioConfig,
    topology: Topology,
    nodes: Vec<Node>,
    queue: BinaryHeap<QueuedEvent>,
    seq: u64,
    now: f64,
    protocol_rng: ChaCha8Rng,
    messages: Vec<MessageRecord>,
    keep_emitted: bool,
}

impl Sim {
    fn new(config: &ScenarioConfig, keep_emitted: bool) -> Self {
        let config = config.clone();
        let topology = match config.topology {
            TopologyKind::Complete => Topology::complete(config.nodes),
            TopologyKind::Sparse => {
                Topology::sparse(config.nodes, config.topology_degree, mix(config.seed, 0, 1))
            }
        };

        // Ground truth: the first `infected` ids are compromised; benign
        // encryptors are drawn from the rest at the configured density.
        let infected_count = config.infected.min(config.nodes);
        let safe_count = config.nodes - infected_count;
        let fp_count = ((config.fp_per_100_safe * safe_count as f64) / 100.0).round() as usize;
        let mut safe_ids: Vec<NodeId> = (infected_count..config.nodes).collect();
        let mut fp_rng = ChaCha8Rng::seed_from_u64(mix(config.seed, 1, 2));
        // Partial Fisher-Yates: the first fp_count entries become encryptors.
        for i in 0..fp_count.min(safe_ids.len()) {
            let j = fp_rng.gen_range(i..safe_ids.len());
            safe_ids.swap(i, j);
        }
        let fp_ids: BTreeSet<NodeId> = safe_ids.iter().take(fp_count).copied().collect();

        let mut nodes = Vec::with_capacity(config.nodes);
        for id in 0..config.nodes {
            let infected = id < infected_count;
            let class = if infected {
                WorkloadClass::Ransomware
            } else if fp_ids.contains(&id) {
                WorkloadClass::BenignEncrypt
            } else {
                WorkloadClass::Idle
            };
            let trace = make_trace(&config, class, id);
            nodes.push(Node {
                id,
                infected,
                class,
                events: trace.events,
                files: trace.files,
                cursor: 0,
                detector: Detector::new(config.detector.clone()),
                scheduled_window: None,
                current_verdict: None,
                last_verdict_detail: None,
                ever_anomalous: false,
                first_anomalous_at: None,
                suspended: false,
                escalated_at: None,
                acknowledged: false,
                files_lost: 0,
                files_lost_at_suspension: None,
                acom: AcomNodeState::new(),
                acom_report: None,
                bm: BmState {
                    lan_peers: topology.peers[id].iter().copied().collect(),
                    ..BmState::default()
                },
                bm_report: None,
                emitted: Vec::new(),
            });
        }

        let mut sim = Sim {
            protocol_rng: ChaCha8Rng::seed_from_u64(mix(config.seed, 2, 3)),
            config,
            topology,
            nodes,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            messages: Vec::new(),
            keep_emitted,
        };
        for id in 0..sim.nodes.len() {
            if let Some(first) = sim.nodes[id].events.first() {
                let at = first.time;
                sim.schedule(at, EventPayload::Workload { node: id });
            }
        }
        sim
    }

    fn schedule(&mut self, time: f64, payload: EventPayload) {
        self.queue.push(QueuedEvent { time, seq: self.seq, payload });
        self.seq += 1;
    }

    fn send(&mut self, src: NodeId, dst: NodeId, payload: Payload, now: f64) {
        let deliver_time = now + self.config.per_hop_delay_seconds;
        self.messages.push(MessageRecord {
            send_time: now,
            deliver_time,
            kind: payload.kind_label(),
            src,
            dst,
        });
        self.schedule(deliver_time, EventPayload::Deliver { src, dst, payload });
    }

    fn run(&mut self) {
        while let Some(event) = self.queue.pop() {
            if event.time > self.config.horizon_seconds {
                break;
            }
            self.now = event.time;
            match event.payload {
                EventPayload::Workload { node } => self.workload_event(node),
                EventPayload::WindowDeadline { node, window } => {
                    self.window_deadline(node, window)
                }
                EventPayload::Deliver { src, dst, payload } => self.deliver(src, dst, payload),
                EventPayload::PassEnd { node, ant } => self.pass_end(node, ant),
                EventPayload::BmWindowEnd { node } => self.bm_window_end(node),
            }
        }
    }

    // -- workload ----------------------------------------------------------

    fn workload_event(&mut self, id: NodeId) {
        let node = &mut self.nodes[id];
        if node.suspended {
            return;
        }
        let idx = node.cursor;
        node.cursor += 1;
        let verdict = {
            let event = &node.events[idx];
            if event.kind == EventKind::Delete {
                node.files_lost += 1;
                node.files.remove(&event.path);
            }
            if self.keep_emitted {
                node.emitted.push(event.clone());
            }
            let file = node.files.get(&event.path);
            node.detector.on_event(event, file)
        };

        // A freshly opened measurement window needs its deadline on the
        // queue exactly once.
        if let Some((window_id, deadline)) = self.nodes[id].detector.open_window() {
            if self.nodes[id].scheduled_window != Some(window_id) {
                self.nodes[id].scheduled_window = Some(window_id);
                self.schedule(deadline, EventPayload::WindowDeadline { node: id, window: window_id });
            }
        }

        if let Some(v) = verdict {
            self.conclude(id, v);
        }

        let node = &self.nodes[id];
        if !node.suspended && node.cursor < node.events.len() {
            let at = node.events[node.cursor].time;
            self.schedule(at, EventPayload::Workload { node: id });
        }
    }

    fn window_deadline(&mut self, id: NodeId, window: u64) {
        let now = self.now;
        if let Some(v) = self.nodes[id].detector.resolve_window(window, now) {
            self.conclude(id, v);
        }
    }

    // -- verdicts and escalation --------------------------------------------

    fn conclude(&mut self, id: NodeId, verdict: DetectionVerdict) {
        let now = self.now;
        let node = &mut self.nodes[id];
        node.current_verdict = Some((verdict.state, verdict.decided_at));
        let anomalous = verdict.is_anomalous();
        node.last_verdict_detail = Some(verdict);
        if !anomalous {
            return;
        }
        node.ever_anomalous = true;
        if node.first_anomalous_at.is_none() {
            node.first_anomalous_at = Some(now);
        }
        // Halt the workload while the user decides; the prompt itself is
        // instantaneous in simulated time.
        node.suspended = true;
        if !user_prompt(self.config.user_policy, node.infected, node.class) {
            node.suspended = false;
            node.acknowledged = true;
            return;
        }
        if node.escalated_at.is_some() {
            return;
        }
        node.escalated_at = Some(now);
        node.files_lost_at_suspension = Some(node.files_lost);
        match self.config.mechanism {
            Mechanism::Dr => {}
            Mechanism::Acom => self.launch_ant(id),
            Mechanism::Bm => self.launch_broadcast(id),
            Mechanism::All => {
                self.launch_ant(id);
                self.launch_broadcast(id);
            }
        }
    }

    fn launch_ant(&mut self, id: NodeId) {
        let now = self.now;
        let outcome = create_ant(id, true, &self.nodes[id].acom, now, &self.config.acom)
            .expect("escalated machines hold an anomalous verdict");
        match outcome {
            CreateAntOutcome::ImmediateAlert(report) => {
                self.nodes[id].acom_report = Some((report, now));
            }
            CreateAntOutcome::Dispatch(ant) => {
                let first = decide_direction(
                    &ant,
                    &self.topology.peers[id],
                    &self.nodes[id].acom.known_anomalous,
                    &mut self.protocol_rng,
                );
                match first {
                    Some(next) => self.send(id, next, Payload::AntTransfer(ant), now),
                    None => {
                        // Nowhere to walk at all (degenerate topology).
                        let found = ant.collected.len() as u32;
                        let report = AcomReport {
                            verdict: AcomVerdict::LowRisk,
                            anomalous_found: found,
                            inquired: 0,
                            message_text: low_risk_text(0, found),
                        };
                        self.nodes[id].acom_report = Some((report, now));
                    }
                }
            }
        }
    }

    fn launch_broadcast(&mut self, id: NodeId) {
        let now = self.now;
        match bm_broadcast(true, &mut self.nodes[id].bm, now) {
            Ok(targets) => {
                for dst in targets {
                    self.send(id, dst, Payload::BmAnnounce, now);
                }
                let at = now + self.config.bm.window_seconds;
                self.schedule(at, EventPayload::BmWindowEnd { node: id });
            }
            Err(_) => {
                // A one-machine LAN has nobody to ask; the local verdict
                // stands on its own.
            }
        }
    }

    // -- message handling ----------------------------------------------------

    fn deliver(&mut self, src: NodeId, dst: NodeId, payload: Payload) {
        match payload {
            Payload::BmAnnounce => {
                receive_announcement(&mut self.nodes[dst].bm, src);
            }
            Payload::AntTransfer(ant) => self.ant_arrives(dst, ant),
            Payload::AntReturn { report, collected } => {
                let node = &mut self.nodes[dst];
                node.acom.known_anomalous.extend(collected);
                if node.acom_report.is_none() {
                    node.acom_report = Some((report, self.now));
                }
            }
        }
    }

    /// An ant lands on a node and needs the node's anomalous-or-not answer.
    /// A suspended or escalated machine answers anomalous on the spot, and a
    /// recent enough verdict is reused; otherwise the ant waits out a fresh
    /// detection pass.
    fn ant_arrives(&mut self, dst: NodeId, ant: Ant) {
        let now = self.now;
        let node = &self.nodes[dst];
        let answer = if node.suspended || node.escalated_at.is_some() {
            Some(true)
        } else {
            match node.current_verdict {
                Some((state, at))
                    if now - at <= self.config.acom.verdict_staleness_seconds =>
                {
                    Some(state == VerdictState::Anomalous)
                }
                _ => None,
            }
        };
        match answer {
            Some(anomalous) => self.finish_exchange(dst, ant, anomalous),
            None => {
                let at = now + self.config.acom.detection_pass_seconds;
                self.schedule(at, EventPayload::PassEnd { node: dst, ant });
            }
        }
    }

    fn pass_end(&mut self, id: NodeId, ant: Ant) {
        let now = self.now;
        let node = &mut self.nodes[id];
        let anomalous = if node.suspended || node.escalated_at.is_some() {
            true
        } else {
            match node.current_verdict {
                Some((VerdictState::Anomalous, at))
                    if now - at <= self.config.acom.verdict_staleness_seconds =>
                {
                    true
                }
                _ => {
                    // The pass found nothing new; cache the clean answer for
                    // the next visitor.
                    node.current_verdict = Some((VerdictState::Safe, now));
                    false
                }
            }
        };
        self.finish_exchange(id, ant, anomalous);
    }

    fn finish_exchange(&mut self, at_node: NodeId, mut ant: Ant, anomalous: bool) {
        let now = self.now;
        exchange_information(
            &mut ant,
            at_node,
            &mut self.nodes[at_node].acom,
            anomalous,
            now,
            &self.config.acom,
        );
        let step = acom_step(
            &ant,
            &self.topology.peers[at_node],
            &self.nodes[at_node].acom.known_anomalous,
            &mut self.protocol_rng,
            &self.config.acom,
        );
        match step {
            StepOutcome::Continue(next) => self.send(at_node, next, Payload::AntTransfer(ant), now),
            StepOutcome::ReturnHome(report) => {
                let home = ant.home;
                let collected = ant.collected;
                self.send(at_node, home, Payload::AntReturn { report, collected }, now);
            }
        }
    }

    fn bm_window_end(&mut self, id: NodeId) {
        let now = self.now;
        let node = &mut self.nodes[id];
        if let Ok(report) = bm_report(&node.bm) {
            node.bm_report = Some((report, now));
        }
    }

    fn into_result(self) -> (RunResult, Vec<(NodeId, Vec<FsEvent>)>) {
        let horizon_seconds = self.config.horizon_seconds;
        let mut outcomes = Vec::with_capacity(self.nodes.len());
        let mut emitted = Vec::new();
        for node in self.nodes {
            if !node.emitted.is_empty() {
                emitted.push((node.id, node.emitted));
            }
            outcomes.push(NodeOutcome {
                id: node.id,
                infected: node.infected,
                workload: node.class,
                ever_anomalous: node.ever_anomalous,
                first_anomalous_at: node.first_anomalous_at,
                escalated_at: node.escalated_at,
                acknowledged: node.acknowledged,
                files_lost: node.files_lost,
                files_lost_at_suspension: node.files_lost_at_suspension,
                acom_report: node.acom_report,
                bm_report: node.bm_report,
                final_verdict: node.last_verdict_detail,
            });
        }
        (RunResult { outcomes, messages: self.messages, horizon_seconds }, emitted)
    }
}

fn make_trace(config: &ScenarioConfig, class: WorkloadClass, id: NodeId) -> Trace {
    if class == WorkloadClass::Idle {
        return Trace { events: Vec::new(), files: FileTable::new() };
    }
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(mix(config.seed, id as u64, 5));
    let jitter = config.workload.start_jitter_seconds;
    let start_time = if jitter > 0.0 { jitter_rng.gen_range(0.0..jitter) } else { 0.0 };
    let (ops, files) = match class {
        WorkloadClass::Ransomware => (
            config.workload.ransomware_ops_per_second,
            config.workload.ransomware_file_count,
        ),
        WorkloadClass::BenignEncrypt => {
            (config.workload.benign_ops_per_second, config.workload.benign_file_count)
        }
        other => unreachable!("no trace parameters for {other:?}"),
    };
    let spec = WorkloadSpec {
        class,
        ops_per_second: ops,
        file_count: files,
        file_size_bytes: config.workload.file_size_bytes,
        start_time,
    };
    gen_trace(&spec, mix(config.seed, id as u64, 4))
}

/// Simulate one scenario to completion.
pub fn run_scenario(config: &ScenarioConfig) -> RunResult {
    let mut sim = Sim::new(config, false);
    sim.run();
    sim.into_result().0
}

/// Like [`run_scenario`], but also returns each machine's emitted operation
/// stream (what actually executed before any suspension), for export.
pub fn run_scenario_with_events(config: &ScenarioConfig) -> (RunResult, Vec<(NodeId, Vec<FsEvent>)>) {
    let mut sim = Sim::new(config, true);
    sim.run();
    sim.into_result()
}
