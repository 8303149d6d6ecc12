//! Ant-colony WAN corroboration.
//!
//! A machine whose local verdict turns anomalous releases an ant that walks
//! the WAN looking for other machines in the same condition. Nodes hold a
//! decaying pheromone — a count of anomalous machines some ant once knew of,
//! stamped with its deposit time — so later ants can start from earlier
//! ants' findings instead of from zero. The walk ends in an alert once
//! enough distinct anomalous machines are collected, or in a low-risk report
//! when the hop budget runs out.

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::NodeId;

#[derive(Debug, Clone)]
pub struct AcomConfig {
    /// Distinct anomalous machines (the inquiring one included) that make
    /// the fleet-level judgement "high risk".
    pub threshold_t: u32,
    /// Maximum nodes one ant may visit before giving up.
    pub limit_n: u32,
    /// Age below which a pheromone keeps full strength.
    pub evaporation_hold_seconds: f64,
    /// Per-second decay factor applied beyond the hold period.
    pub evaporation_rate: f64,
    /// Maximum age of a cached verdict an ant will accept as an answer.
    pub verdict_staleness_seconds: f64,
    /// Time a visited node needs to produce a fresh verdict for a waiting
    /// ant when its cached one is too old.
    pub detection_pass_seconds: f64,
}

impl Default for AcomConfig {
    fn default() -> Self {
        Self {
            threshold_t: 3,
            limit_n: 20,
            evaporation_hold_seconds: 10.0,
            evaporation_rate: 0.9,
            verdict_staleness_seconds: 30.0,
            detection_pass_seconds: 1.0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AcomError {
    #[error("only a machine with an anomalous local verdict may release an ant")]
    NotAnomalous,
}

/// Pheromone-decay schedule: full strength through the hold period, then a
/// geometric fade, rounded down to whole machines.
pub fn evaporate(count: u32, age_seconds: f64, hold_seconds: f64, rate: f64) -> u32 {
    if age_seconds < hold_seconds {
        count
    } else {
        (rate.powf(age_seconds - hold_seconds) * count as f64).floor() as u32
    }
}

/// Per-node colony state: the pheromone and the ids of machines this node
/// has learned are anomalous.
#[derive(Debug, Clone, Default)]
pub struct AcomNodeState {
    pub pheromone_count: u32,
    pub pheromone_deposited_at: f64,
    pub known_anomalous: BTreeSet<NodeId>,
}

impl AcomNodeState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pheromone strength as of `now`, after decay.
    pub fn effective_pheromone(&self, now: f64, config: &AcomConfig) -> u32 {
        evaporate(
            self.pheromone_count,
            now - self.pheromone_deposited_at,
            config.evaporation_hold_seconds,
            config.evaporation_rate,
        )
    }
}

/// A walking inquiry agent.
#[derive(Debug, Clone)]
pub struct Ant {
    pub home: NodeId,
    /// Additional distinct anomalous machines still needed for an alert.
    pub goal: u32,
    pub hop_limit: u32,
    /// Nodes visited so far, in hop order.
    pub visited: Vec<NodeId>,
    /// Ids of anomalous machines gathered so far (never includes `home`).
    pub collected: BTreeSet<NodeId>,
    pub created_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcomVerdict {
    Alert,
    LowRisk,
}

/// What the ant tells its home machine when the walk ends.
#[derive(Debug, Clone, PartialEq)]
pub struct AcomReport {
    pub verdict: AcomVerdict,
    /// Distinct anomalous machines backing the verdict.
    pub anomalous_found: u32,
    /// Nodes the ant actually visited.
    pub inquired: u32,
    pub message_text: String,
}

/// User-facing text of a fleet-level alert.
pub fn alert_text(threshold_t: u32) -> String {
    format!("At least {threshold_t} users in WAN think you are in high risk")
}

/// User-facing text of a low-risk outcome.
pub fn low_risk_text(inquired: u32, found: u32) -> String {
    format!("We inquired {inquired} users in WAN, only {found} user(s) think(s) your are in risk")
}

/// Result of asking a machine to release an ant.
#[derive(Debug, Clone)]
pub enum CreateAntOutcome {
    /// Standing evidence already meets the threshold: alert without walking.
    ImmediateAlert(AcomReport),
    /// Walk needed; send this ant to a first neighbor.
    Dispatch(Ant),
}

/// Release an ant from `home`, whose local verdict must be anomalous.
///
/// The ant's goal is the alert threshold minus the machines already
/// accounted for: the decayed pheromone, floored at one because the host
/// itself is anomalous and needs no inquiry to know it. A goal of zero means
/// the evidence at hand already suffices. The ant starts out carrying every
/// anomalous machine its home already knows of.
pub fn create_ant(
    home: NodeId,
    verdict_anomalous: bool,
    state: &AcomNodeState,
    now: f64,
    config: &AcomConfig,
) -> Result<CreateAntOutcome, AcomError> {
    if !verdict_anomalous {
        return Err(AcomError::NotAnomalous);
    }
    let effective = state.effective_pheromone(now, config).max(1);
    let goal = config.threshold_t.saturating_sub(effective);
    if goal == 0 {
        return Ok(CreateAntOutcome::ImmediateAlert(AcomReport {
            verdict: AcomVerdict::Alert,
            anomalous_found: effective,
            inquired: 0,
            message_text: alert_text(config.threshold_t),
        }));
    }
    let mut collected = state.known_anomalous.clone();
    collected.remove(&home);
    Ok(CreateAntOutcome::Dispatch(Ant {
        home,
        goal,
        hop_limit: config.limit_n,
        visited: Vec::new(),
        collected,
        created_at: now,
    }))
}

/// Ant-at-node exchange, run on arrival once the node's answer is known.
///
/// The ant deposits its evidence as pheromone — but only when what it
/// carries (counted before this node's answer) beats the node's current
/// decayed pheromone; a replacement refreshes the timestamp, anything less
/// leaves count and timestamp alone. The ids themselves always merge into
/// the node's knowledge. Then the node's own answer joins the ant's
/// collection, and the node is marked visited.
pub fn exchange_information(
    ant: &mut Ant,
    node_id: NodeId,
    state: &mut AcomNodeState,
    node_anomalous: bool,
    now: f64,
    config: &AcomConfig,
) {
    let carried = ant.collected.len() as u32;
    if carried > state.effective_pheromone(now, config) {
        state.pheromone_count = carried;
        state.pheromone_deposited_at = now;
    }
    state.known_anomalous.extend(ant.collected.iter().copied());
    if node_anomalous {
        ant.collected.insert(node_id);
    }
    ant.visited.push(node_id);
}

/// Pick the ant's next hop from the current node's neighbors.
///
/// Already-visited nodes and the ant's home draw nothing; neighbors the
/// current node knows to be anomalous (or that the ant itself has collected)
/// draw double the weight of unknowns. Returns `None` when every neighbor
/// has zero weight.
pub fn decide_direction(
    ant: &Ant,
    peers: &[NodeId],
    known_anomalous: &BTreeSet<NodeId>,
    rng: &mut impl Rng,
) -> Option<NodeId> {
    let weights: Vec<u64> = peers
        .iter()
        .map(|p| {
            if ant.visited.contains(p) || *p == ant.home {
                0
            } else if known_anomalous.contains(p) || ant.collected.contains(p) {
                2
            } else {
                1
            }
        })
        .collect();
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return None;
    }
    let mut pick = rng.gen_range(0..total);
    for (peer, w) in peers.iter().zip(&weights) {
        if pick < *w {
            return Some(*peer);
        }
        pick -= w;
    }
    unreachable!("roulette pick exceeded total weight")
}

/// What an ant does after the exchange at a node.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    /// Keep walking: transfer the ant to this neighbor.
    Continue(NodeId),
    /// Walk over: carry this report back to the home machine.
    ReturnHome(AcomReport),
}

/// Decide the ant's next move: alert home once the goal is met, give up
/// low-risk when the hop budget is spent or no neighbor is eligible,
/// otherwise continue to a sampled neighbor.
pub fn acom_step(
    ant: &Ant,
    peers: &[NodeId],
    known_anomalous: &BTreeSet<NodeId>,
    rng: &mut impl Rng,
    config: &AcomConfig,
) -> StepOutcome {
    let found = ant.collected.len() as u32;
    let inquired = ant.visited.len() as u32;
    if found >= ant.goal {
        return StepOutcome::ReturnHome(AcomReport {
            verdict: AcomVerdict::Alert,
            anomalous_found: found,
            inquired,
            message_text: alert_text(config.threshold_t),
        });
    }
    if inquired >= ant.hop_limit {
        return StepOutcome::ReturnHome(AcomReport {
            verdict: AcomVerdict::LowRisk,
            anomalous_found: found,
            inquired,
            message_text: low_risk_text(inquired, found),
        });
    }
    match decide_direction(ant, peers, known_anomalous, rng) {
        Some(next) => StepOutcome::Continue(next),
        None => StepOutcome::ReturnHome(AcomReport {
            verdict: AcomVerdict::LowRisk,
            anomalous_found: found,
            inquired,
            message_text: low_risk_text(inquired, found),
        }),
    }
}
