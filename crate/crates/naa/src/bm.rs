//! LAN broadcast corroboration.
//!
//! A machine whose local verdict turns anomalous announces itself to every
//! other machine on its LAN, then listens for a fixed window. At the window
//! end it reports what share of the LAN is in the same condition. Unlike the
//! WAN walk, this blankets the whole segment — cheap on a LAN, and every
//! machine ends up knowing the local infection picture.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::NodeId;

#[derive(Debug, Clone)]
pub struct BmConfig {
    /// How long an announcing machine listens before reporting.
    pub window_seconds: f64,
}

impl Default for BmConfig {
    fn default() -> Self {
        Self { window_seconds: 2.0 }
    }
}

/// Per-node broadcast state.
#[derive(Debug, Clone, Default)]
pub struct BmState {
    /// The other machines on this machine's LAN (never includes itself).
    pub lan_peers: BTreeSet<NodeId>,
    /// Machines whose anomaly announcements this one has heard.
    pub received_anomalous: BTreeSet<NodeId>,
    /// When this machine's own listening window opened, if it announced.
    pub window_started_at: Option<f64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BmError {
    #[error("only a machine with an anomalous local verdict may announce")]
    NotAnomalous,
    #[error("a single-machine LAN has nobody to corroborate with")]
    EmptyLan,
}

/// Announce this machine's anomaly to the LAN: returns the peers to message
/// (one each — `lan_size - 1` messages) and opens the listening window.
pub fn bm_broadcast(
    verdict_anomalous: bool,
    state: &mut BmState,
    now: f64,
) -> Result<Vec<NodeId>, BmError> {
    if !verdict_anomalous {
        return Err(BmError::NotAnomalous);
    }
    if state.lan_peers.is_empty() {
        return Err(BmError::EmptyLan);
    }
    state.window_started_at = Some(now);
    Ok(state.lan_peers.iter().copied().collect())
}

/// Record a peer's announcement. Duplicates are idempotent.
pub fn receive_announcement(state: &mut BmState, from: NodeId) {
    state.received_anomalous.insert(from);
}

/// What the listener tells its user at the window end.
#[derive(Debug, Clone, PartialEq)]
pub struct BmReport {
    /// Anomalous machines on the LAN (the reporter included) over LAN size.
    pub anomalous_fraction: f64,
    pub anomalous_machines: usize,
    pub lan_size: usize,
    pub message_text: String,
}

/// Close the window and summarize: the reporter plus every announcement it
/// heard, as a share of the whole LAN.
pub fn bm_report(state: &BmState) -> Result<BmReport, BmError> {
    if state.lan_peers.is_empty() {
        return Err(BmError::EmptyLan);
    }
    let lan_size = state.lan_peers.len() + 1;
    let anomalous = state.received_anomalous.len() + 1;
    let fraction = anomalous as f64 / lan_size as f64;
    let percent = (fraction * 100.0).round() as u32;
    Ok(BmReport {
        anomalous_fraction: fraction,
        anomalous_machines: anomalous,
        lan_size,
        message_text: format!(
            "{percent}% machines in LAN also experience anomalies, so your computer is in high risk of cryptoworm attack."
        ),
    })
}
