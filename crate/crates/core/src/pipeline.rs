//! Raw event logs to per-host class series, plus windowing and splitting.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{csv_error, HostGraph};
use crate::numerics::Matrix;

/// Hosts with fewer source occurrences than this are dropped by default.
pub const DEFAULT_MIN_OCCURRENCES: usize = 10;
/// Raw steps merged into one frame by default.
pub const DEFAULT_K_MERGE: usize = 3;
/// Class index of the "no event" class.
pub const NO_EVENT: usize = 0;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventRecord {
    pub time: u64,
    pub src: String,
    /// `None` for a self-event, which contributes no edge.
    pub dst: Option<String>,
    pub event_id: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawEventLog {
    pub records: Vec<EventRecord>,
}

impl RawEventLog {
    /// Every host named as a source or destination, sorted.
    pub fn hosts(&self) -> Vec<String> {
        let mut set = BTreeSet::new();
        for r in &self.records {
            set.insert(r.src.as_str());
            if let Some(d) = &r.dst {
                set.insert(d.as_str());
            }
        }
        set.into_iter().map(str::to_string).collect()
    }

    /// Undirected host pairs from records with a distinct destination,
    /// deduplicated, each pair ordered `(min, max)`.
    pub fn interaction_edges(&self) -> Vec<(String, String)> {
        let mut set = BTreeSet::new();
        for r in &self.records {
            if let Some(d) = &r.dst {
                if *d != r.src {
                    let pair = if r.src < *d { (&r.src, d) } else { (d, &r.src) };
                    set.insert((pair.0.clone(), pair.1.clone()));
                }
            }
        }
        set.into_iter().collect()
    }
}

/// Reads an events CSV with header `time,src,dst,event_id`.
pub fn ingest(path: &Path) -> Result<RawEventLog> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_events(text.as_bytes(), path)
}

/// Parses events CSV bytes; `path` only labels diagnostics.
pub fn parse_events(bytes: &[u8], path: &Path) -> Result<RawEventLog> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time", "src", "dst", "event_id"] {
        return Err(parse_err(
            1,
            format!(
                "expected header `time,src,dst,event_id`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let time = row[0]
            .parse::<u64>()
            .map_err(|_| parse_err(line, format!("time `{}` is not a non-negative integer", &row[0])))?;
        if row[1].is_empty() {
            return Err(parse_err(line, "empty src".into()));
        }
        let event_id = row[3]
            .parse::<u64>()
            .map_err(|_| parse_err(line, format!("event_id `{}` is not a non-negative integer", &row[3])))?;
        if event_id == 0 {
            return Err(parse_err(line, "event_id 0 is reserved for the no-event class".into()));
        }
        let record = EventRecord {
            time,
            src: row[1].to_string(),
            dst: (!row[2].is_empty() && row[2] != row[1]).then(|| row[2].to_string()),
            event_id,
        };
        if seen.insert(record.clone()) {
            records.push(record);
        }
    }
    Ok(RawEventLog { records })
}

/// Drops hosts with fewer than `min_occurrences` source records, together
/// with those records. A kept record whose destination was dropped stays
/// as a self-event.
pub fn filter_hosts(log: &RawEventLog, min_occurrences: usize) -> Result<RawEventLog> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &log.records {
        *counts.entry(r.src.as_str()).or_default() += 1;
        if let Some(d) = &r.dst {
            counts.entry(d.as_str()).or_default();
        }
    }
    let keep: HashSet<&str> = counts
        .iter()
        .filter(|(_, &c)| c >= min_occurrences)
        .map(|(h, _)| *h)
        .collect();
    if keep.is_empty() {
        return Err(Error::NoHosts);
    }
    let records = log
        .records
        .iter()
        .filter(|r| keep.contains(r.src.as_str()))
        .map(|r| EventRecord {
            dst: r.dst.clone().filter(|d| keep.contains(d.as_str())),
            ..r.clone()
        })
        .collect();
    Ok(RawEventLog { records })
}

/// The modal event of one block, ties going to the most recent candidate.
/// `events` must be in chronological order; an empty block yields 0.
pub fn merge_block(events: &[u64]) -> u64 {
    let mut stats: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for (pos, &e) in events.iter().enumerate() {
        let s = stats.entry(e).or_default();
        s.0 += 1;
        s.1 = pos;
    }
    stats
        .into_iter()
        .max_by_key(|&(_, (count, last))| (count, last))
        .map_or(0, |(e, _)| e)
}

/// Per-host merged event IDs (0 = no event), `series[host][block]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedSeries {
    pub hosts: Vec<String>,
    pub series: Vec<Vec<u64>>,
}

impl MergedSeries {
    pub fn steps(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }
}

/// Bins raw times to steps of `bin_width`, then merges every `k` steps.
/// The time axis starts at the earliest record.
pub fn integrate_k_steps(log: &RawEventLog, hosts: &[String], k: usize, bin_width: u64) -> Result<MergedSeries> {
    if k == 0 || bin_width == 0 {
        return Err(Error::invalid("k_merge and bin width must be at least 1"));
    }
    let index: BTreeMap<&str, usize> = hosts.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let t_min = log.records.iter().map(|r| r.time).min().unwrap_or(0);
    let block_of = |t: u64| ((t - t_min) / bin_width / k as u64) as usize;
    let blocks = log.records.iter().map(|r| block_of(r.time) + 1).max().unwrap_or(0);

    let mut order: Vec<&EventRecord> = log.records.iter().collect();
    order.sort_by_key(|r| r.time);
    let mut buckets: Vec<Vec<Vec<u64>>> = vec![vec![Vec::new(); blocks]; hosts.len()];
    for r in order {
        let host = *index
            .get(r.src.as_str())
            .ok_or_else(|| Error::UnknownHost(r.src.clone()))?;
        buckets[host][block_of(r.time)].push(r.event_id);
    }
    let series = buckets
        .into_iter()
        .map(|host| host.iter().map(|b| merge_block(b)).collect())
        .collect();
    Ok(MergedSeries {
        hosts: hosts.to_vec(),
        series,
    })
}

/// Where the host graph's edges come from.
#[derive(Clone, Debug)]
pub enum EdgeSource {
    /// Distinct `(src, dst)` pairs of the log.
    Interactions,
    /// An explicit list; edges touching hosts outside the node set are skipped.
    Explicit(Vec<(String, String)>),
}

/// A processed dataset: host graph, vocabulary and per-step class frames.
#[derive(Clone, Debug)]
pub struct EventDataset {
    pub graph: HostGraph,
    /// Raw event ID of each class, ascending; entry 0 is the no-event class.
    pub vocabulary: Vec<u64>,
    /// `frames[t][host]` is a class index.
    pub frames: Vec<Vec<usize>>,
    pub k_merge: usize,
    pub bayes_rate: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetMeta {
    n: usize,
    d: usize,
    #[serde(rename = "T")]
    steps: usize,
    k_merge: usize,
    vocabulary: Vec<u64>,
    node_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bayes_rate: Option<f64>,
}

pub const META_FILE: &str = "meta.json";
pub const FRAMES_FILE: &str = "frames.csv";
pub const ADJACENCY_FILE: &str = "adjacency.csv";

impl EventDataset {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn d(&self) -> usize {
        self.vocabulary.len()
    }

    /// Number of frames `T`.
    pub fn steps(&self) -> usize {
        self.frames.len()
    }

    /// One-hot `n × d` matrix of frame `t`.
    pub fn frame_matrix(&self, t: usize) -> Matrix {
        let mut m = Matrix::zeros(self.n(), self.d());
        for (host, &class) in self.frames[t].iter().enumerate() {
            m.set(host, class, 1.0);
        }
        m
    }

    /// Checks frame shapes, class ranges and vocabulary ordering.
    pub fn validate(&self) -> Result<()> {
        if self.vocabulary.first() != Some(&0) {
            return Err(Error::invalid("vocabulary must start with the no-event class 0"));
        }
        if self.vocabulary.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("vocabulary must be strictly ascending"));
        }
        for (t, frame) in self.frames.iter().enumerate() {
            if frame.len() != self.n() {
                return Err(Error::invalid(format!("frame {t} has {} hosts, expected {}", frame.len(), self.n())));
            }
            if let Some(&c) = frame.iter().find(|&&c| c >= self.d()) {
                return Err(Error::invalid(format!("frame {t} has class {c} outside 0..{}", self.d())));
            }
        }
        Ok(())
    }

    /// Writes `meta.json`, `frames.csv` and `adjacency.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = DatasetMeta {
            n: self.n(),
            d: self.d(),
            steps: self.steps(),
            k_merge: self.k_merge,
            vocabulary: self.vocabulary.clone(),
            node_ids: self.graph.node_ids().to_vec(),
            bayes_rate: self.bayes_rate,
        };
        let mut json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        json.push('\n');
        write_file(&dir.join(META_FILE), json.as_bytes())?;

        let mut frames = String::from("t,host_index,class_index\n");
        for (t, frame) in self.frames.iter().enumerate() {
            for (host, class) in frame.iter().enumerate() {
                writeln!(frames, "{t},{host},{class}").unwrap();
            }
        }
        write_file(&dir.join(FRAMES_FILE), frames.as_bytes())?;

        let mut adjacency = String::from("src,dst\n");
        for (i, j) in self.graph.edges() {
            writeln!(adjacency, "{i},{j}").unwrap();
        }
        write_file(&dir.join(ADJACENCY_FILE), adjacency.as_bytes())
    }

    /// Loads a dataset directory, building the graph basis at `order`.
    pub fn read_dir(dir: &Path, order: usize) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: meta_path.clone(),
            source,
        })?;
        if meta.node_ids.len() != meta.n || meta.vocabulary.len() != meta.d {
            return Err(Error::invalid(format!(
                "{}: n/d disagree with node_ids/vocabulary lengths",
                meta_path.display()
            )));
        }

        let frames_path = dir.join(FRAMES_FILE);
        let rows = read_index_csv(&frames_path, &["t", "host_index", "class_index"])?;
        let mut frames = vec![vec![usize::MAX; meta.n]; meta.steps];
        for (line, row) in rows {
            let (t, host, class) = (row[0], row[1], row[2]);
            if t >= meta.steps || host >= meta.n || class >= meta.d {
                return Err(Error::Parse {
                    path: frames_path.clone(),
                    line,
                    message: format!("entry ({t},{host},{class}) out of range"),
                });
            }
            frames[t][host] = class;
        }
        if frames.iter().flatten().any(|&c| c == usize::MAX) {
            return Err(Error::invalid(format!("{}: missing (t, host) entries", frames_path.display())));
        }

        let adjacency_path = dir.join(ADJACENCY_FILE);
        let mut edges = Vec::new();
        for (line, row) in read_index_csv(&adjacency_path, &["src", "dst"])? {
            if row[0] >= meta.n || row[1] >= meta.n {
                return Err(Error::Parse {
                    path: adjacency_path.clone(),
                    line,
                    message: format!("edge ({},{}) out of range", row[0], row[1]),
                });
            }
            edges.push((row[0], row[1]));
        }
        let graph = HostGraph::from_index_edges(meta.node_ids, &edges, order)?;
        let dataset = EventDataset {
            graph,
            vocabulary: meta.vocabulary,
            frames,
            k_merge: meta.k_merge,
            bayes_rate: meta.bayes_rate,
        };
        dataset.validate()?;
        Ok(dataset)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_index_csv(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<usize>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let values = row
            .iter()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
        out.push((line, values));
    }
    Ok(out)
}

/// Merges a filtered log into frames and builds its host graph.
pub fn build_dataset(
    log: &RawEventLog,
    k: usize,
    bin_width: u64,
    edges: &EdgeSource,
    order: usize,
) -> Result<EventDataset> {
    let hosts = log.hosts();
    if hosts.is_empty() {
        return Err(Error::NoHosts);
    }
    let merged = integrate_k_steps(log, &hosts, k, bin_width)?;
    let mut vocabulary: Vec<u64> = merged.series.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if vocabulary.first() != Some(&0) {
        vocabulary.insert(0, 0);
    }
    if vocabulary.len() < 2 {
        return Err(Error::invalid("no events remain after merging"));
    }
    let class_of: BTreeMap<u64, usize> = vocabulary.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let frames = (0..merged.steps())
        .map(|t| merged.series.iter().map(|s| class_of[&s[t]]).collect())
        .collect();

    let pairs = match edges {
        EdgeSource::Interactions => log.interaction_edges(),
        EdgeSource::Explicit(list) => {
            let known: HashSet<&str> = hosts.iter().map(String::as_str).collect();
            list.iter()
                .filter(|(a, b)| known.contains(a.as_str()) && known.contains(b.as_str()))
                .cloned()
                .collect()
        }
    };
    let graph = HostGraph::build(&pairs, &hosts, order)?;
    Ok(EventDataset {
        graph,
        vocabulary,
        frames,
        k_merge: k,
        bayes_rate: None,
    })
}

/// Sliding windows over a frame sequence: window `i` reads frames
/// `i .. i+s-1` and targets frame `i+s-1`.
#[derive(Clone, Debug)]
pub struct WindowBatch<'a> {
    frames: &'a [Vec<usize>],
    s: usize,
    starts: Vec<usize>,
}

impl<'a> WindowBatch<'a> {
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    /// The `s − 1` input frames of window `i`.
    pub fn input(&self, i: usize) -> &'a [Vec<usize>] {
        let start = self.starts[i];
        &self.frames[start..start + self.s - 1]
    }

    /// Target class per host of window `i`.
    pub fn target(&self, i: usize) -> &'a [usize] {
        &self.frames[self.starts[i] + self.s - 1]
    }

    /// Windows `range` as a new batch.
    pub fn slice(&self, range: std::ops::Range<usize>) -> WindowBatch<'a> {
        WindowBatch {
            frames: self.frames,
            s: self.s,
            starts: self.starts[range].to_vec(),
        }
    }

    /// Windows in the given order.
    pub fn select(&self, order: &[usize]) -> WindowBatch<'a> {
        WindowBatch {
            frames: self.frames,
            s: self.s,
            starts: order.iter().map(|&i| self.starts[i]).collect(),
        }
    }
}

pub fn sliding_windows(dataset: &EventDataset, s: usize) -> Result<WindowBatch<'_>> {
    windows_over(&dataset.frames, s)
}

pub fn windows_over(frames: &[Vec<usize>], s: usize) -> Result<WindowBatch<'_>> {
    if s < 2 || s > frames.len() {
        return Err(Error::invalid(format!(
            "window length s = {s} must satisfy 2 <= s <= T = {}",
            frames.len()
        )));
    }
    Ok(WindowBatch {
        frames,
        s,
        starts: (0..=frames.len() - s).collect(),
    })
}

/// Chronological split: the first `⌊fraction · W⌋` windows train.
pub fn split<'a>(batch: &WindowBatch<'a>, train_fraction: f64) -> Result<(WindowBatch<'a>, WindowBatch<'a>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train_fraction {train_fraction} must lie in (0, 1)")));
    }
    let cut = (train_fraction * batch.len() as f64).floor() as usize;
    if cut == 0 || cut == batch.len() {
        return Err(Error::invalid(format!(
            "splitting {} windows at {train_fraction} leaves one side empty",
            batch.len()
        )));
    }
    Ok((batch.slice(0..cut), batch.slice(cut..batch.len())))
}
