//! Synthetic file-system activity: file states and operation traces.
//!
//! Files are modeled as byte histograms rather than real contents — Shannon
//! entropy over a 256-bucket histogram is all the detection pipeline ever
//! looks at. Traces are per-machine streams of open/create/read/write/close/
//! delete operations, generated so that the realized read+write rate matches
//! a configured operations-per-second target exactly.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

/// Kind of a file operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Open,
    Create,
    Read,
    Write,
    Close,
    Delete,
}

impl EventKind {
    /// Stable lowercase label, used in exports.
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Open => "open",
            EventKind::Create => "create",
            EventKind::Read => "read",
            EventKind::Write => "write",
            EventKind::Close => "close",
            EventKind::Delete => "delete",
        }
    }

    /// Reads and writes are the rate-bearing operations: trace pacing and
    /// the frequency check both count only these.
    pub fn is_rw(self) -> bool {
        matches!(self, EventKind::Read | EventKind::Write)
    }
}

/// One timestamped file operation.
#[derive(Debug, Clone, PartialEq)]
pub struct FsEvent {
    pub time: f64,
    pub kind: EventKind,
    pub path: String,
}

// ---------------------------------------------------------------------------
// File states
// ---------------------------------------------------------------------------

/// Extensions the detector knows how to model. Anything else is treated as
/// suspicious on sight.
pub const KNOWN_EXTENSIONS: [&str; 14] = [
    "txt", "log", "conf", "png", "jpeg", "pptx", "mp3", "zip", "gz", "tar", "pdf", "html", "css",
    "php",
];

const TEXT_EXTENSIONS: [&str; 6] = ["txt", "log", "conf", "html", "css", "php"];

/// Extensions used for encrypted output files; deliberately absent from
/// [`KNOWN_EXTENSIONS`].
const FOREIGN_EXTENSIONS: [&str; 4] = ["xkr1", "lck9", "qcry", "zzfu"];

/// Broad content class a file's extension implies, which selects the
/// entropy threshold applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileCategory {
    Text,
    NonText,
}

/// Category implied by an extension, or `None` if the extension is unknown.
pub fn category_of(extension: &str) -> Option<FileCategory> {
    if TEXT_EXTENSIONS.contains(&extension) {
        Some(FileCategory::Text)
    } else if KNOWN_EXTENSIONS.contains(&extension) {
        Some(FileCategory::NonText)
    } else {
        None
    }
}

/// State of one file: its name, class, and byte histogram.
#[derive(Debug, Clone)]
pub struct FileModel {
    pub path: String,
    pub extension: String,
    pub histogram: [u64; 256],
    pub size_bytes: u64,
}

/// Final file states of a trace, keyed by path. Deleted files are absent.
pub type FileTable = HashMap<String, FileModel>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntropyError {
    #[error("empty file: histogram contains no bytes")]
    EmptyFile,
}

/// Shannon entropy in bits per byte of the distribution described by a byte
/// histogram. Ranges over [0, 8]; exactly 8 for a uniform histogram and
/// exactly 0 when a single bucket holds everything.
pub fn compute_entropy(histogram: &[u64; 256]) -> Result<f64, EntropyError> {
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return Err(EntropyError::EmptyFile);
    }
    let total = total as f64;
    let mut entropy = 0.0;
    for &count in histogram {
        if count > 0 {
            let p = count as f64 / total;
            entropy -= p * p.log2();
        }
    }
    Ok(entropy)
}

// ---------------------------------------------------------------------------
// Histogram synthesis
// ---------------------------------------------------------------------------

/// Spread `size` bytes over buckets proportionally to `weights`, assigning
/// leftover bytes by largest fractional share (ties broken by bucket index).
fn allocate_from_weights(weights: &[f64; 256], size: u64) -> [u64; 256] {
    let total_weight: f64 = weights.iter().sum();
    let mut histogram = [0u64; 256];
    let mut fractions: Vec<(usize, f64)> = Vec::with_capacity(256);
    let mut assigned = 0u64;
    for (i, &w) in weights.iter().enumerate() {
        let exact = w / total_weight * size as f64;
        let floor = exact.floor();
        histogram[i] = floor as u64;
        assigned += histogram[i];
        fractions.push((i, exact - floor));
    }
    fractions.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut leftover = size - assigned;
    for (i, _) in fractions {
        if leftover == 0 {
            break;
        }
        histogram[i] += 1;
        leftover -= 1;
    }
    histogram
}

/// Histogram of ciphertext-like content: every bucket gets `size / 256`
/// bytes, and the remainder is spread one byte each over randomly chosen
/// buckets. The balanced split keeps entropy pinned at the top of the scale
/// even for small files, the way a stream cipher's output looks in practice.
fn encrypted_histogram(size: u64, rng: &mut ChaCha8Rng) -> [u64; 256] {
    let base = size / 256;
    let remainder = (size % 256) as usize;
    let mut histogram = [base; 256];
    let mut buckets: Vec<usize> = (0..256).collect();
    buckets.shuffle(rng);
    for &b in buckets.iter().take(remainder) {
        histogram[b] += 1;
    }
    histogram
}

/// English-like byte weights for plain-text files.
fn text_weights() -> [f64; 256] {
    let mut w = [0.0f64; 256];
    let letters: [(u8, f64); 26] = [
        (b'e', 10.0),
        (b't', 7.5),
        (b'a', 6.5),
        (b'o', 6.0),
        (b'i', 5.5),
        (b'n', 5.5),
        (b's', 5.0),
        (b'h', 4.5),
        (b'r', 4.5),
        (b'd', 3.5),
        (b'l', 3.0),
        (b'u', 2.5),
        (b'c', 2.3),
        (b'm', 2.0),
        (b'w', 1.8),
        (b'f', 1.7),
        (b'g', 1.6),
        (b'y', 1.5),
        (b'p', 1.4),
        (b'b', 1.3),
        (b'v', 0.8),
        (b'k', 0.6),
        (b'j', 0.12),
        (b'x', 0.12),
        (b'q', 0.08),
        (b'z', 0.06),
    ];
    for (byte, weight) in letters {
        w[byte as usize] = weight;
        w[byte.to_ascii_uppercase() as usize] = 0.15;
    }
    w[b' ' as usize] = 18.0;
    w[b'\n' as usize] = 1.5;
    for d in b'0'..=b'9' {
        w[d as usize] = 0.3;
    }
    for p in [b'.', b',', b';', b':', b'\'', b'"', b'!', b'?', b'(', b')', b'-'] {
        w[p as usize] = 0.4;
    }
    w
}

/// Histogram for a text file: English-like letter frequencies.
fn text_histogram(size: u64) -> [u64; 256] {
    allocate_from_weights(&text_weights(), size)
}

/// Histogram for an unencrypted binary file (image, archive member, media):
/// busy across all 256 values but with enough per-bucket skew to stay below
/// the ciphertext band. Which buckets are heavy varies by seed.
fn binary_histogram(size: u64, rng: &mut ChaCha8Rng) -> [u64; 256] {
    const SKEW: f64 = 0.29;
    let mut buckets: Vec<usize> = (0..256).collect();
    buckets.shuffle(rng);
    let mut weights = [0.0f64; 256];
    for (rank, &b) in buckets.iter().enumerate() {
        weights[b] = if rank < 128 { 1.0 + SKEW } else { 1.0 - SKEW };
    }
    allocate_from_weights(&weights, size)
}

fn file_model(path: &str, extension: &str, size: u64, rng: &mut ChaCha8Rng) -> FileModel {
    let histogram = match category_of(extension) {
        Some(FileCategory::Text) => text_histogram(size),
        Some(FileCategory::NonText) => binary_histogram(size, rng),
        None => encrypted_histogram(size, rng),
    };
    FileModel {
        path: path.to_string(),
        extension: extension.to_string(),
        histogram,
        size_bytes: size,
    }
}

// ---------------------------------------------------------------------------
// Workloads
// ---------------------------------------------------------------------------

/// The behaviors a machine can exhibit, mirroring the operation shapes of
/// the tools they stand for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadClass {
    /// Encrypt-and-replace over many files: the hostile behavior.
    Ransomware,
    /// In-place document edits.
    Modify,
    /// Pack files into archives.
    Compress,
    /// Unpack archives.
    Decompress,
    /// Web-browser style cache churn.
    Browse,
    /// A legitimate bulk encryption tool; operationally identical to the
    /// hostile class, distinguishable only by the user.
    BenignEncrypt,
    /// No file activity at all.
    Idle,
}

impl WorkloadClass {
    pub fn label(self) -> &'static str {
        match self {
            WorkloadClass::Ransomware => "ransomware",
            WorkloadClass::Modify => "modify",
            WorkloadClass::Compress => "compress",
            WorkloadClass::Decompress => "decompress",
            WorkloadClass::Browse => "browse",
            WorkloadClass::BenignEncrypt => "benign_encrypt",
            WorkloadClass::Idle => "idle",
        }
    }
}

/// Parameters of one machine's workload.
///
/// `ops_per_second` paces the read+write operations and must be positive for
/// every class except [`WorkloadClass::Idle`]; `file_count` is the number of
/// files (for [`WorkloadClass::Browse`], activity bursts) the workload
/// touches.
#[derive(Debug, Clone)]
pub struct WorkloadSpec {
    pub class: WorkloadClass,
    pub ops_per_second: f64,
    pub file_count: usize,
    pub file_size_bytes: u64,
    pub start_time: f64,
}

/// A generated operation stream plus the final state of every surviving
/// file it touched.
#[derive(Debug, Clone)]
pub struct Trace {
    pub events: Vec<FsEvent>,
    pub files: FileTable,
}

/// Lay the trace onto the time axis: the j-th read/write lands exactly at
/// `start + (j + 1) / rate`, and the metadata operations between two
/// consecutive read/writes subdivide that gap evenly. The realized
/// read+write rate over the trace is therefore exactly `rate`.
fn assign_times(sequence: Vec<(EventKind, String)>, start: f64, rate: f64) -> Vec<FsEvent> {
    let delta = 1.0 / rate;
    let mut events = Vec::with_capacity(sequence.len());
    let mut pending: Vec<(EventKind, String)> = Vec::new();
    let mut rw_index = 0u64;
    let mut gap_start = start;
    for (kind, path) in sequence {
        if kind.is_rw() {
            let at = start + (rw_index + 1) as f64 * delta;
            let n = pending.len();
            for (i, (k, p)) in pending.drain(..).enumerate() {
                let t = gap_start + (i + 1) as f64 * (at - gap_start) / (n + 1) as f64;
                events.push(FsEvent { time: t, kind: k, path: p });
            }
            events.push(FsEvent { time: at, kind, path });
            rw_index += 1;
            gap_start = at;
        } else {
            pending.push((kind, path));
        }
    }
    let n = pending.len();
    for (i, (k, p)) in pending.drain(..).enumerate() {
        let t = gap_start + (i + 1) as f64 * delta / (n + 1) as f64;
        events.push(FsEvent { time: t, kind: k, path: p });
    }
    events
}

/// Generate the operation stream and resulting file table for one machine.
///
/// The same `(spec, seed)` pair always yields the same trace.
pub fn gen_trace(spec: &WorkloadSpec, seed: u64) -> Trace {
    if spec.class == WorkloadClass::Idle {
        return Trace { events: Vec::new(), files: FileTable::new() };
    }
    assert!(
        spec.ops_per_second > 0.0,
        "non-idle workloads need a positive operation rate"
    );
    assert!(spec.file_count > 0, "non-idle workloads need at least one file");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sequence: Vec<(EventKind, String)> = Vec::new();
    let mut files = FileTable::new();
    let size = spec.file_size_bytes;

    use EventKind::*;
    match spec.class {
        WorkloadClass::Ransomware | WorkloadClass::BenignEncrypt => {
            // Per victim file: read the original, write an encrypted copy
            // under a foreign extension, then delete the original.
            let foreign = FOREIGN_EXTENSIONS[rng.gen_range(0..FOREIGN_EXTENSIONS.len())];
            for i in 0..spec.file_count {
                let ext = KNOWN_EXTENSIONS[i % KNOWN_EXTENSIONS.len()];
                let orig = format!("f{i:04}.{ext}");
                let out = format!("{orig}.{foreign}");
                sequence.push((Open, orig.clone()));
                sequence.push((Create, out.clone()));
                sequence.push((Open, out.clone()));
                sequence.push((Read, orig.clone()));
                sequence.push((Write, out.clone()));
                sequence.push((Close, orig.clone()));
                sequence.push((Close, out.clone()));
                sequence.push((Delete, orig));
                files.insert(out.clone(), file_model(&out, foreign, size, &mut rng));
            }
        }
        WorkloadClass::Modify => {
            // Edit in place: read the document, then rewrite it through a
            // fresh handle.
            for i in 0..spec.file_count {
                let ext = TEXT_EXTENSIONS[i % TEXT_EXTENSIONS.len()];
                let path = format!("f{i:04}.{ext}");
                sequence.push((Open, path.clone()));
                sequence.push((Read, path.clone()));
                sequence.push((Close, path.clone()));
                sequence.push((Open, path.clone()));
                sequence.push((Create, path.clone()));
                sequence.push((Open, path.clone()));
                sequence.push((Close, path.clone()));
                sequence.push((Write, path.clone()));
                sequence.push((Close, path.clone()));
                files.insert(path.clone(), file_model(&path, ext, size, &mut rng));
            }
        }
        WorkloadClass::Compress => {
            // Pack each source file into a named archive.
            const ARCHIVE_EXT: [&str; 3] = ["zip", "gz", "tar"];
            for i in 0..spec.file_count {
                let ext = KNOWN_EXTENSIONS[i % KNOWN_EXTENSIONS.len()];
                let orig = format!("f{i:04}.{ext}");
                let arch_ext = ARCHIVE_EXT[i % ARCHIVE_EXT.len()];
                let arch = format!("f{i:04}.{ext}.{arch_ext}");
                sequence.push((Open, orig.clone()));
                sequence.push((Create, arch.clone()));
                sequence.push((Open, arch.clone()));
                sequence.push((Read, orig.clone()));
                sequence.push((Close, orig.clone()));
                sequence.push((Write, arch.clone()));
                sequence.push((Close, arch.clone()));
                files.insert(orig.clone(), file_model(&orig, ext, size, &mut rng));
                files.insert(arch.clone(), file_model(&arch, arch_ext, size, &mut rng));
            }
        }
        WorkloadClass::Decompress => {
            // Stream archives out; extraction writes are handled by the
            // unpacker below the layer we watch, so the stream is read-only.
            const ARCHIVE_EXT: [&str; 3] = ["zip", "gz", "tar"];
            for i in 0..spec.file_count {
                let ext = ARCHIVE_EXT[i % ARCHIVE_EXT.len()];
                let path = format!("a{i:04}.{ext}");
                sequence.push((Open, path.clone()));
                sequence.push((Read, path.clone()));
                sequence.push((Close, path.clone()));
                files.insert(path.clone(), file_model(&path, ext, size, &mut rng));
            }
        }
        WorkloadClass::Browse => {
            // Two burst shapes, interleaved at random: populate a cache
            // entry then re-read page assets, or ping-pong read/update over
            // already-cached entries.
            const CACHE_EXT: [&str; 3] = ["html", "css", "png"];
            const PAGE_EXT: [&str; 3] = ["html", "png", "jpeg"];
            for i in 0..spec.file_count {
                let cache_ext = CACHE_EXT[i % CACHE_EXT.len()];
                let cache = format!("c{i:04}.{cache_ext}");
                files.insert(cache.clone(), file_model(&cache, cache_ext, size, &mut rng));
                if rng.gen_bool(0.5) {
                    sequence.push((Create, cache.clone()));
                    sequence.push((Open, cache.clone()));
                    sequence.push((Write, cache.clone()));
                    sequence.push((Close, cache.clone()));
                    let reads = rng.gen_range(2..=4);
                    for j in 0..reads {
                        let ext = PAGE_EXT[(i + j) % PAGE_EXT.len()];
                        let page = format!("p{i:04}_{j}.{ext}");
                        files.insert(page.clone(), file_model(&page, ext, size, &mut rng));
                        sequence.push((Read, page));
                    }
                    sequence.push((Write, cache));
                } else {
                    let pairs = rng.gen_range(2..=4);
                    for j in 0..pairs {
                        let ext = PAGE_EXT[(i + j) % PAGE_EXT.len()];
                        let page = format!("p{i:04}_{j}.{ext}");
                        files.insert(page.clone(), file_model(&page, ext, size, &mut rng));
                        sequence.push((Read, page));
                        sequence.push((Write, cache.clone()));
                    }
                }
            }
        }
        WorkloadClass::Idle => unreachable!(),
    }

    let events = assign_times(sequence, spec.start_time, spec.ops_per_second);
    Trace { events, files }
}

/// Realized read+write rate of a trace: operations per second measured from
/// first to last rate-bearing event. `None` if fewer than two such events.
pub fn realized_rw_rate(events: &[FsEvent]) -> Option<f64> {
    let times: Vec<f64> = events.iter().filter(|e| e.kind.is_rw()).map(|e| e.time).collect();
    if times.len() < 2 {
        return None;
    }
    let span = times[times.len() - 1] - times[0];
    if span <= 0.0 {
        return None;
    }
    Some((times.len() - 1) as f64 / span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(class: WorkloadClass, rate: f64, files: usize) -> WorkloadSpec {
        WorkloadSpec {
            class,
            ops_per_second: rate,
            file_count: files,
            file_size_bytes: 1024,
            start_time: 0.0,
        }
    }

    #[test]
    fn entropy_of_two_bucket_histogram() {
        // 3 bytes of one value and 1 of another: H(3/4, 1/4).
        let mut h = [0u64; 256];
        h[0x00] = 3;
        h[0x01] = 1;
        let e = compute_entropy(&h).unwrap();
        assert!((e - 0.8112781244591328).abs() < 1e-15, "got {e}");
    }

    #[test]
    fn entropy_extremes_are_exact() {
        let uniform = [4u64; 256];
        assert_eq!(compute_entropy(&uniform).unwrap(), 8.0);

        let mut single = [0u64; 256];
        single[0x41] = 123_456;
        assert_eq!(compute_entropy(&single).unwrap(), 0.0);

        // 64 equally loaded buckets sit exactly on the text threshold.
        let mut h = [0u64; 256];
        for b in h.iter_mut().take(64) {
            *b = 7;
        }
        assert_eq!(compute_entropy(&h).unwrap(), 6.0);
    }

    #[test]
    fn entropy_rejects_empty_histogram() {
        let h = [0u64; 256];
        assert_eq!(compute_entropy(&h), Err(EntropyError::EmptyFile));
    }

    #[test]
    fn encrypted_histograms_sit_in_the_ciphertext_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for size in [1024u64, 4096, 10_240, 1_000_000] {
            let h = encrypted_histogram(size, &mut rng);
            assert_eq!(h.iter().sum::<u64>(), size);
            let e = compute_entropy(&h).unwrap();
            assert!(e >= 7.99, "size {size} gave {e}");
        }
        // A multiple of 256 is perfectly balanced.
        let h = encrypted_histogram(1024, &mut rng);
        assert_eq!(compute_entropy(&h).unwrap(), 8.0);
    }

    #[test]
    fn plain_histograms_stay_below_their_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for size in [1024u64, 10_240, 1_000_000] {
            let t = compute_entropy(&text_histogram(size)).unwrap();
            assert!(t < 6.0 && t > 3.0, "text at {size} bytes gave {t}");
            let b = compute_entropy(&binary_histogram(size, &mut rng)).unwrap();
            assert!(b < 7.99 && b > 7.5, "binary at {size} bytes gave {b}");
        }
    }

    #[test]
    fn extension_classes() {
        assert_eq!(category_of("txt"), Some(FileCategory::Text));
        assert_eq!(category_of("php"), Some(FileCategory::Text));
        assert_eq!(category_of("png"), Some(FileCategory::NonText));
        assert_eq!(category_of("tar"), Some(FileCategory::NonText));
        assert_eq!(category_of("xkr1"), None);
        assert_eq!(category_of(""), None);
    }

    #[test]
    fn encrypt_trace_shape_per_file() {
        let trace = gen_trace(&spec(WorkloadClass::Ransomware, 742.0, 1), 3);
        let kinds: Vec<EventKind> = trace.events.iter().map(|e| e.kind).collect();
        use EventKind::*;
        assert_eq!(kinds, vec![Open, Create, Open, Read, Write, Close, Close, Delete]);
        // The original is gone; the encrypted copy survives with a foreign
        // extension and top-band entropy.
        assert_eq!(trace.files.len(), 1);
        let out = trace.files.values().next().unwrap();
        assert_eq!(category_of(&out.extension), None);
        assert!(compute_entropy(&out.histogram).unwrap() >= 7.99);
    }

    #[test]
    fn encrypt_trace_rw_budget() {
        let trace = gen_trace(&spec(WorkloadClass::Ransomware, 742.0, 100), 3);
        let rw = trace.events.iter().filter(|e| e.kind.is_rw()).count();
        assert_eq!(rw, 200); // one read + one write per file
        assert_eq!(trace.events.len(), 800);
    }

    #[test]
    fn decompress_trace_never_writes() {
        let trace = gen_trace(&spec(WorkloadClass::Decompress, 100.0, 2), 5);
        assert_eq!(trace.events.len(), 6);
        assert!(trace.events.iter().all(|e| e.kind != EventKind::Write));
    }

    #[test]
    fn idle_trace_is_empty() {
        let trace = gen_trace(&spec(WorkloadClass::Idle, 0.0, 0), 1);
        assert!(trace.events.is_empty());
        assert!(trace.files.is_empty());
    }

    #[test]
    fn realized_rate_matches_target() {
        for (class, rate) in [
            (WorkloadClass::Ransomware, 742.0),
            (WorkloadClass::Modify, 56.0),
            (WorkloadClass::Compress, 213.0),
            (WorkloadClass::Browse, 342.0),
            (WorkloadClass::BenignEncrypt, 700.0),
        ] {
            let trace = gen_trace(&spec(class, rate, 40), 9);
            let realized = realized_rw_rate(&trace.events).unwrap();
            assert!(
                (realized - rate).abs() / rate < 0.01,
                "{class:?}: wanted {rate}, realized {realized}"
            );
        }
    }

    #[test]
    fn events_are_time_ordered_and_after_start() {
        let mut s = spec(WorkloadClass::Browse, 342.0, 30);
        s.start_time = 0.25;
        let trace = gen_trace(&s, 21);
        let mut prev = s.start_time;
        for e in &trace.events {
            assert!(e.time > prev - 1e-12, "event at {} after {prev}", e.time);
            prev = e.time;
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let a = gen_trace(&spec(WorkloadClass::Browse, 342.0, 25), 77);
        let b = gen_trace(&spec(WorkloadClass::Browse, 342.0, 25), 77);
        assert_eq!(a.events, b.events);
        let c = gen_trace(&spec(WorkloadClass::Browse, 342.0, 25), 78);
        assert_ne!(a.events, c.events);
    }
}
