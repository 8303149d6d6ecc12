//! Per-machine detection pipeline: read/write pattern gate, entropy check,
//! and operation-frequency check, evaluated in that order with short-circuit
//! semantics — a later stage only ever runs when the one before it fired.

use std::collections::HashSet;

use thiserror::Error;

use crate::fsmodel::{self, compute_entropy, EventKind, FileCategory, FileModel, FsEvent};

// ---------------------------------------------------------------------------
// Stage 1: read/write pattern
// ---------------------------------------------------------------------------

/// Rolling view of recent operations used to spot the encrypt-and-replace
/// signature: a write that directly follows a read which itself followed a
/// metadata operation (open/create/close/delete).
///
/// `event_list` holds operation kinds since the last write; `time_list`
/// accumulates read/write timestamps for the whole stream and is never
/// truncated, so the frequency stage can window into it.
#[derive(Debug, Default)]
pub struct PatternState {
    event_list: Vec<EventKind>,
    time_list: Vec<f64>,
}

impl PatternState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Timestamps of every read and write observed so far.
    pub fn time_list(&self) -> &[f64] {
        &self.time_list
    }

    /// Feed one operation. Returns the written path when the operation is a
    /// write completing the suspicious shape.
    ///
    /// Reads append their kind and timestamp; other non-write operations
    /// append their kind only. A write appends its timestamp, tests the
    /// shape — at least two prior kinds, the last a read, the one before it
    /// neither read nor write — and then empties `event_list` regardless of
    /// the outcome, so overlapping shapes never double-fire.
    pub fn observe_event(&mut self, event: &FsEvent) -> Option<String> {
        match event.kind {
            EventKind::Read => {
                self.event_list.push(EventKind::Read);
                self.time_list.push(event.time);
                None
            }
            EventKind::Write => {
                self.time_list.push(event.time);
                let n = self.event_list.len();
                let matched = n >= 2
                    && self.event_list[n - 1] == EventKind::Read
                    && !matches!(self.event_list[n - 2], EventKind::Read | EventKind::Write);
                self.event_list.clear();
                if matched {
                    Some(event.path.clone())
                } else {
                    None
                }
            }
            other => {
                self.event_list.push(other);
                None
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Stage 2: entropy
// ---------------------------------------------------------------------------

/// Entropy limits per content class, plus the set of extensions the checker
/// recognizes at all.
#[derive(Debug, Clone)]
pub struct EntropyThresholds {
    pub text_threshold: f64,
    pub nontext_threshold: f64,
    pub known_extensions: HashSet<String>,
}

impl Default for EntropyThresholds {
    fn default() -> Self {
        Self {
            text_threshold: 6.00,
            nontext_threshold: 7.99,
            known_extensions: fsmodel::KNOWN_EXTENSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Outcome of the entropy stage. `value` is absent when no entropy was
/// computed (missing file, unrecognized extension, or empty histogram).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyCheck {
    pub hit: bool,
    pub value: Option<f64>,
}

/// Judge the file a suspicious write landed in.
///
/// A missing file or an extension outside the known set is suspicious on its
/// own — no entropy is computed. Otherwise the file's entropy is compared
/// against the threshold for its class; an empty file never fires.
pub fn check_entropy(file: Option<&FileModel>, thresholds: &EntropyThresholds) -> EntropyCheck {
    let Some(file) = file else {
        return EntropyCheck { hit: true, value: None };
    };
    if !thresholds.known_extensions.contains(&file.extension) {
        return EntropyCheck { hit: true, value: None };
    }
    let threshold = match fsmodel::category_of(&file.extension) {
        Some(FileCategory::Text) => thresholds.text_threshold,
        _ => thresholds.nontext_threshold,
    };
    match compute_entropy(&file.histogram) {
        Ok(value) => EntropyCheck { hit: value >= threshold, value: Some(value) },
        Err(_) => EntropyCheck { hit: false, value: None },
    }
}

// ---------------------------------------------------------------------------
// Stage 3: operation frequency
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FrequencyConfig {
    /// Read+write operations per second at or above which the stream is
    /// judged anomalous.
    pub threshold_ops_per_sec: f64,
    /// Number of windowed read/write timestamps that triggers an immediate
    /// decision.
    pub min_ops: usize,
    /// How long after the triggering write to wait for `min_ops` before
    /// deciding with whatever has arrived.
    pub max_wait_seconds: f64,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        Self { threshold_ops_per_sec: 500.0, min_ops: 100, max_wait_seconds: 1.0 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrequencyError {
    #[error("need at least two timestamps spanning a positive duration")]
    InsufficientData,
}

/// Operations per second across a window of read/write timestamps: the
/// count divided by the span from first to last.
pub fn compute_frequency(time_list: &[f64]) -> Result<f64, FrequencyError> {
    if time_list.len() < 2 {
        return Err(FrequencyError::InsufficientData);
    }
    let span = time_list[time_list.len() - 1] - time_list[0];
    if span <= 0.0 {
        return Err(FrequencyError::InsufficientData);
    }
    Ok(time_list.len() as f64 / span)
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct DetectorConfig {
    pub thresholds: EntropyThresholds,
    pub frequency: FrequencyConfig,
}

/// Final state of a detection decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictState {
    Safe,
    Anomalous,
}

/// One concluded detection decision, with the evidence each stage produced.
/// Stage fields are `None` when the pipeline never reached that stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionVerdict {
    pub state: VerdictState,
    pub pattern_hit: bool,
    pub entropy_value: Option<f64>,
    pub entropy_hit: Option<bool>,
    pub frequency_value: Option<f64>,
    pub frequency_hit: Option<bool>,
    /// Path of the write that opened the diagnosis, when one did.
    pub trigger_path: Option<String>,
    pub decided_at: f64,
}

impl DetectionVerdict {
    pub fn is_anomalous(&self) -> bool {
        self.state == VerdictState::Anomalous
    }
}

/// An open frequency-measurement window, anchored at the read of the
/// pattern match that opened it.
#[derive(Debug, Clone)]
struct DiagWindow {
    id: u64,
    trigger_path: String,
    /// Index into the pattern's `time_list` of the matched read.
    anchor: usize,
    entropy_value: Option<f64>,
    deadline: f64,
}

/// Incremental detection pipeline for one machine.
///
/// Feed operations with [`Detector::on_event`]; when a measurement window is
/// open, [`Detector::open_window`] exposes its deadline so a driver can call
/// [`Detector::resolve_window`] at exactly that time. Each call returns a
/// verdict as soon as one is concluded.
#[derive(Debug)]
pub struct Detector {
    config: DetectorConfig,
    pattern: PatternState,
    window: Option<DiagWindow>,
    windows_opened: u64,
    any_pattern_hit: bool,
    last_entropy: Option<EntropyCheck>,
    last_frequency: Option<(Option<f64>, bool)>,
    last_event_time: f64,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Self {
        Self {
            config,
            pattern: PatternState::new(),
            window: None,
            windows_opened: 0,
            any_pattern_hit: false,
            last_entropy: None,
            last_frequency: None,
            last_event_time: 0.0,
        }
    }

    /// The open window's id and decision deadline, if one is open.
    pub fn open_window(&self) -> Option<(u64, f64)> {
        self.window.as_ref().map(|w| (w.id, w.deadline))
    }

    /// Feed one operation; `file` is the current state of the path the
    /// operation touches. Returns a verdict when this operation concludes
    /// one (the window's operation quota was reached).
    pub fn on_event(&mut self, event: &FsEvent, file: Option<&FileModel>) -> Option<DetectionVerdict> {
        self.last_event_time = event.time;
        let matched = self.pattern.observe_event(event);

        if let Some(path) = matched {
            self.any_pattern_hit = true;
            if self.window.is_none() {
                let check = check_entropy(file, &self.config.thresholds);
                self.last_entropy = Some(check);
                if check.hit {
                    self.windows_opened += 1;
                    // The matched read and this write are already in the
                    // time list; the window starts at the read.
                    self.window = Some(DiagWindow {
                        id: self.windows_opened,
                        trigger_path: path,
                        anchor: self.pattern.time_list().len() - 2,
                        entropy_value: check.value,
                        deadline: event.time + self.config.frequency.max_wait_seconds,
                    });
                }
            }
            // A match while a window is open is subsumed by that window.
        }

        if event.kind.is_rw() {
            if let Some(w) = &self.window {
                if self.pattern.time_list().len() - w.anchor >= self.config.frequency.min_ops {
                    return Some(self.resolve(event.time));
                }
            }
        }
        None
    }

    /// Resolve the window `id` at its deadline. No-op if that window has
    /// already been resolved.
    pub fn resolve_window(&mut self, id: u64, at: f64) -> Option<DetectionVerdict> {
        match &self.window {
            Some(w) if w.id == id => Some(self.resolve(at)),
            _ => None,
        }
    }

    /// Drive an open window past `now`, resolving it at its deadline if the
    /// deadline has passed. Batch drivers call this before each event.
    pub fn poll_deadline(&mut self, now: f64) -> Option<DetectionVerdict> {
        match &self.window {
            Some(w) if now >= w.deadline => {
                let at = w.deadline;
                Some(self.resolve(at))
            }
            _ => None,
        }
    }

    /// Conclude a stream: resolve any open window at its deadline.
    pub fn finish(&mut self) -> Option<DetectionVerdict> {
        let deadline = self.window.as_ref()?.deadline;
        Some(self.resolve(deadline))
    }

    /// Summary verdict for a stream that never turned anomalous.
    pub fn safe_verdict(&self) -> DetectionVerdict {
        DetectionVerdict {
            state: VerdictState::Safe,
            pattern_hit: self.any_pattern_hit,
            entropy_value: self.last_entropy.and_then(|c| c.value),
            entropy_hit: self.last_entropy.map(|c| c.hit),
            frequency_value: self.last_frequency.and_then(|f| f.0),
            frequency_hit: self.last_frequency.map(|f| f.1),
            trigger_path: None,
            decided_at: self.last_event_time,
        }
    }

    fn resolve(&mut self, at: f64) -> DetectionVerdict {
        let w = self.window.take().expect("resolve requires an open window");
        let window_times = &self.pattern.time_list()[w.anchor..];
        let (value, hit) = match compute_frequency(window_times) {
            Ok(f) => (Some(f), f >= self.config.frequency.threshold_ops_per_sec),
            Err(_) => (None, false),
        };
        self.last_frequency = Some((value, hit));
        DetectionVerdict {
            state: if hit { VerdictState::Anomalous } else { VerdictState::Safe },
            pattern_hit: true,
            entropy_value: w.entropy_value,
            entropy_hit: Some(true),
            frequency_value: value,
            frequency_hit: Some(hit),
            trigger_path: Some(w.trigger_path),
            decided_at: at,
        }
    }
}

/// Run the whole pipeline over a complete trace and return the first
/// anomalous verdict, or a safe summary if none is reached.
pub fn local_detect(
    events: &[FsEvent],
    files: &fsmodel::FileTable,
    config: &DetectorConfig,
) -> DetectionVerdict {
    let mut detector = Detector::new(config.clone());
    for event in events {
        if let Some(v) = detector.poll_deadline(event.time) {
            if v.is_anomalous() {
                return v;
            }
        }
        if let Some(v) = detector.on_event(event, files.get(&event.path)) {
            if v.is_anomalous() {
                return v;
            }
        }
    }
    if let Some(v) = detector.finish() {
        if v.is_anomalous() {
            return v;
        }
    }
    detector.safe_verdict()
}
