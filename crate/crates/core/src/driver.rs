//! Bound search over `(d, s)`: instance fan-out across prefixes, optimality
//! claims, a JSON-lines result catalog and SVG rendering.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoder::{build_instance, EncodeError, EncodeOptions};
use crate::netcore::{is_sorting_network, remove_redundant, ComparatorNetwork, Layer};
use crate::prefixes::{generate_prefixes, net_of, Sentence, Variant};
use crate::solver::{decode_verified, solve, SolveStatus, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("catalog i/o: {0}")]
    Catalog(#[from] io::Error),
    #[error("invalid search request: {0}")]
    Request(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTask {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub prefix: Option<Sentence>,
    pub options: EncodeOptions,
    pub config: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub prefix: Option<Sentence>,
    pub options_hash: String,
    pub status: SolveStatus,
    /// Decoded network with redundant comparators and trailing empty layers
    /// removed; present iff `status` is SAT.
    pub network: Option<ComparatorNetwork>,
    pub wall_time: f64,
    pub solver: String,
}

impl SearchResult {
    /// SAT records must carry a sorting network within their bounds.
    pub fn is_consistent(&self) -> bool {
        match (&self.status, &self.network) {
            (SolveStatus::Sat, Some(net)) => {
                net.channels() == self.n
                    && net.depth() <= self.d
                    && net.size() <= self.s
                    && is_sorting_network(net)
                    && self.prefix.as_ref().is_none_or(|p| prefix_matches(net, p))
            }
            (SolveStatus::Sat, None) => false,
            (_, net) => net.is_none(),
        }
    }
}

/// First layer fixed exactly; witness simplification may only drop
/// second-layer comparators.
fn prefix_matches(net: &ComparatorNetwork, prefix: &Sentence) -> bool {
    let Ok(p) = net_of(prefix) else { return false };
    let layer = |k: usize| net.layers().get(k).map(|l| l.comparators().to_vec()).unwrap_or_default();
    net.channels() == p.channels()
        && layer(0) == p.layers()[0].comparators()
        && layer(1).iter().all(|c| p.layers()[1].contains(*c))
}

/// Stable key of the encoder options, prefix excluded.
pub fn options_hash(options: &EncodeOptions) -> String {
    let mut o = options.clone();
    o.prefix = None;
    let json = serde_json::to_string(&o).expect("options serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

type CatalogKey = (usize, usize, usize, String, String);

fn key_of(n: usize, d: usize, s: usize, prefix: Option<&Sentence>, hash: &str) -> CatalogKey {
    (n, d, s, prefix.map(ToString::to_string).unwrap_or_default(), hash.to_string())
}

/// Append-only JSON-lines store of search results.
pub struct Catalog {
    path: PathBuf,
    entries: Mutex<HashMap<CatalogKey, SearchResult>>,
    writer: Mutex<File>,
}

impl Catalog {
    /// Opens (or creates) the store, skipping unreadable or unverifiable
    /// lines with a warning.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DriverError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<SearchResult>(&line) {
                    Ok(rec) if rec.is_consistent() => {
                        let key = key_of(rec.n, rec.d, rec.s, rec.prefix.as_ref(), &rec.options_hash);
                        entries.insert(key, rec);
                    }
                    Ok(_) => log::warn!("{}:{}: record fails verification, ignored", path.display(), idx + 1),
                    Err(e) => log::warn!("{}:{}: corrupt catalog line ignored: {e}", path.display(), idx + 1),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, entries: Mutex::new(entries), writer: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("catalog lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn put(&self, record: &SearchResult) -> Result<(), DriverError> {
        if !record.is_consistent() {
            return Err(DriverError::Request("refusing to store an unverified record".into()));
        }
        let line = serde_json::to_string(record).expect("record serializes");
        {
            let mut w = self.writer.lock().expect("catalog writer lock");
            writeln!(w, "{line}")?;
            w.flush()?;
        }
        let key = key_of(record.n, record.d, record.s, record.prefix.as_ref(), &record.options_hash);
        self.entries.lock().expect("catalog lock").insert(key, record.clone());
        Ok(())
    }

    /// A prior definite answer; UNKNOWN records are never returned.
    pub fn get(&self, n: usize, d: usize, s: usize, prefix: Option<&Sentence>, options_hash: &str) -> Option<SearchResult> {
        let entries = self.entries.lock().expect("catalog lock");
        entries
            .get(&key_of(n, d, s, prefix, options_hash))
            .filter(|r| r.status != SolveStatus::Unknown)
            .cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    MinSizeGivenDepth(usize),
    MinDepthGivenSize(usize),
    /// Frontier for depths from the optimum up to `max_depth` (default: one
    /// above the optimum).
    Pareto { max_depth: Option<usize> },
}

/// Which prefixes an instance is split over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PrefixPolicy {
    /// The reduced complete set for `n >= 11`, prefix-free below.
    #[default]
    Auto,
    Never,
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub prefix: Option<Sentence>,
    pub d: usize,
    pub s: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub prefix: Option<Sentence>,
    pub network: ComparatorNetwork,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub d: usize,
    pub s: usize,
    pub proven: bool,
    /// Some shallower depth already reaches this size.
    pub dominated: bool,
    pub witness: ComparatorNetwork,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityClaim {
    pub n: usize,
    pub mode: Mode,
    /// Best bound found: the size or depth of the best witness. `None` if no
    /// network exists (or none was found) within the mode's limits.
    pub value: Option<usize>,
    /// True only if every instance below `value` was answered UNSAT.
    pub proven: bool,
    pub witnesses: Vec<Witness>,
    pub unsat_evidence: Vec<EvidenceRow>,
    pub frontier: Vec<ParetoPoint>,
}

/// Answers of one `(d, s)` level across all prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub d: usize,
    pub s: usize,
    pub results: Vec<SearchResult>,
}

impl Level {
    pub fn witnesses(&self) -> impl Iterator<Item = &SearchResult> {
        self.results.iter().filter(|r| r.status == SolveStatus::Sat)
    }

    pub fn is_sat(&self) -> bool {
        self.witnesses().next().is_some()
    }

    /// Every instance UNSAT.
    pub fn is_unsat(&self) -> bool {
        self.results.iter().all(|r| r.status == SolveStatus::Unsat)
    }

    fn smallest_witness(&self) -> Option<&SearchResult> {
        self.witnesses().min_by_key(|r| r.network.as_ref().map_or(usize::MAX, ComparatorNetwork::size))
    }

    fn evidence(&self) -> impl Iterator<Item = EvidenceRow> + '_ {
        self.results.iter().map(|r| EvidenceRow { prefix: r.prefix.clone(), d: r.d, s: r.s, status: r.status })
    }
}

pub struct Searcher {
    pub config: SolverConfig,
    /// Prefix field is ignored; prefixes come from `policy`.
    pub options: EncodeOptions,
    pub policy: PrefixPolicy,
    catalog: Option<Catalog>,
    solver_calls: AtomicUsize,
    prefix_cache: Mutex<HashMap<usize, Vec<Sentence>>>,
}

impl Searcher {
    pub fn new(config: SolverConfig) -> Self {
        Self {
            config,
            options: EncodeOptions::default(),
            policy: PrefixPolicy::Auto,
            catalog: None,
            solver_calls: AtomicUsize::new(0),
            prefix_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_catalog(mut self, catalog: Catalog) -> Self {
        self.catalog = Some(catalog);
        self
    }

    pub fn with_policy(mut self, policy: PrefixPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_options(mut self, options: EncodeOptions) -> Self {
        self.options = options;
        self
    }

    pub fn catalog(&self) -> Option<&Catalog> {
        self.catalog.as_ref()
    }

    /// Instances handed to a solver so far.
    pub fn solver_calls(&self) -> usize {
        self.solver_calls.load(Ordering::Relaxed)
    }

    /// Prefixes an `(n, d)` level is split over; `[None]` means prefix-free.
    pub fn prefixes_for(&self, n: usize, d: usize) -> Vec<Option<Sentence>> {
        let wanted = match self.policy {
            PrefixPolicy::Never => false,
            PrefixPolicy::Always => true,
            PrefixPolicy::Auto => n >= 11,
        };
        if !wanted || n < 3 || d < 3 {
            return vec![None];
        }
        let mut cache = self.prefix_cache.lock().expect("prefix cache lock");
        cache
            .entry(n)
            .or_insert_with(|| generate_prefixes(n, Variant::TPrime).sentences)
            .iter()
            .cloned()
            .map(Some)
            .collect()
    }

    pub fn task(&self, n: usize, d: usize, s: usize, prefix: Option<Sentence>) -> SearchTask {
        SearchTask { n, d, s, prefix: prefix.clone(), options: self.options.clone().with_prefix(prefix), config: self.config.clone() }
    }

    /// Solves one task, consulting and feeding the catalog.
    pub fn run_task(&self, task: &SearchTask) -> Result<SearchResult, DriverError> {
        let hash = options_hash(&task.options);
        if let Some(hit) = self.catalog.as_ref().and_then(|c| c.get(task.n, task.d, task.s, task.prefix.as_ref(), &hash)) {
            log::debug!("catalog hit n={} d={} s={} prefix={:?}", task.n, task.d, task.s, task.prefix.as_ref().map(ToString::to_string));
            return Ok(hit);
        }
        let started = Instant::now();
        let (cnf, vm) = build_instance(task.n, task.d as i64, task.s as i64, &task.options)?;
        self.solver_calls.fetch_add(1, Ordering::Relaxed);
        let outcome = solve(&cnf, &task.config)?;
        let network = match &outcome.model {
            Some(model) => {
                let decoded = decode_verified(model, &vm, task.s)?;
                Some(remove_redundant(&decoded).trim_trailing_empty())
            }
            None => None,
        };
        let result = SearchResult {
            n: task.n,
            d: task.d,
            s: task.s,
            prefix: task.prefix.clone(),
            options_hash: hash,
            status: outcome.status,
            network,
            wall_time: started.elapsed().as_secs_f64(),
            solver: outcome.stats.solver,
        };
        log::info!(
            "n={} d={} s={} prefix={} -> {} ({:.2}s)",
            result.n,
            result.d,
            result.s,
            result.prefix.as_ref().map_or("-".to_string(), ToString::to_string),
            result.status,
            result.wall_time
        );
        if let Some(c) = &self.catalog {
            c.put(&result)?;
        }
        Ok(result)
    }

    /// Runs `(n, d, s)` for every prefix of the level.
    pub fn run_level(&self, n: usize, d: usize, s: usize) -> Result<Level, DriverError> {
        let tasks: Vec<SearchTask> = self.prefixes_for(n, d).into_iter().map(|p| self.task(n, d, s, p)).collect();
        #[cfg(feature = "parallel")]
        let results: Result<Vec<SearchResult>, DriverError> = {
            use rayon::prelude::*;
            tasks.par_iter().map(|t| self.run_task(t)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Result<Vec<SearchResult>, DriverError> = tasks.iter().map(|t| self.run_task(t)).collect();
        Ok(Level { d, s, results: results? })
    }

    /// Smallest size at depth `d`, descending from `upper` (inclusive).
    /// Each SAT level jumps to its smallest witness size, so the optimum's
    /// level is always run in full and its witness set is complete.
    pub fn min_size_given_depth(&self, n: usize, d: usize, upper: Option<usize>) -> Result<OptimalityClaim, DriverError> {
        check_n(n)?;
        if d == 0 {
            return Err(DriverError::Request("depth must be positive".into()));
        }
        let mode = Mode::MinSizeGivenDepth(d);
        let mut s = upper.unwrap_or(d * (n / 2)).max(1);
        let mut best: Option<Level> = None;
        let mut evidence = Vec::new();
        loop {
            let level = self.run_level(n, d, s)?;
            if let Some(w) = level.smallest_witness() {
                let size = w.network.as_ref().expect("SAT carries a network").size();
                let next = if size < s { size } else { s - 1 };
                best = Some(level);
                if next == 0 {
                    break;
                }
                s = next;
                continue;
            }
            evidence.extend(level.evidence());
            let proven = level.is_unsat();
            return Ok(claim_from(n, mode, best, proven, evidence, |l| l.s));
        }
        // An empty network sorts: only n < 2 reaches here.
        Ok(claim_from(n, mode, best, true, evidence, |l| l.s))
    }

    /// Smallest depth for at most `s` comparators, ascending from depth 1 up
    /// to `max_depth` (default `s`).
    pub fn min_depth_given_size(&self, n: usize, s: usize, max_depth: Option<usize>) -> Result<OptimalityClaim, DriverError> {
        check_n(n)?;
        if s == 0 {
            return Err(DriverError::Request("size must be positive".into()));
        }
        let mode = Mode::MinDepthGivenSize(s);
        let mut evidence = Vec::new();
        let mut all_unsat = true;
        for d in 1..=max_depth.unwrap_or(s) {
            let level = self.run_level(n, d, s)?;
            if level.is_sat() {
                return Ok(claim_from(n, mode, Some(level), all_unsat, evidence, |l| l.d));
            }
            all_unsat &= level.is_unsat();
            evidence.extend(level.evidence());
        }
        Ok(claim_from(n, mode, None, all_unsat && max_depth.is_none(), evidence, |l| l.d))
    }

    /// Size-optimal networks for each depth from the optimal depth up to
    /// `max_depth`.
    pub fn pareto(&self, n: usize, max_depth: Option<usize>) -> Result<OptimalityClaim, DriverError> {
        check_n(n)?;
        let mode = Mode::Pareto { max_depth };
        let depth_claim = self.min_depth_given_size(n, n * (n - 1) / 2, None)?;
        let d_min = depth_claim.value.ok_or_else(|| DriverError::Request("no network found at any depth".into()))?;
        let mut evidence = depth_claim.unsat_evidence;
        let mut frontier: Vec<ParetoPoint> = Vec::new();
        let mut witnesses = Vec::new();
        let mut proven = depth_claim.proven;
        let top = max_depth.unwrap_or(d_min + 1).max(d_min);
        for d in d_min..=top {
            let upper = frontier.last().map(|p| p.s);
            let claim = self.min_size_given_depth(n, d, upper.map(|s| s.saturating_sub(1).max(1)))?;
            evidence.extend(claim.unsat_evidence);
            let (s, witness, point_proven) = match (claim.value, frontier.last()) {
                (Some(s), _) => (s, claim.witnesses[0].network.clone(), claim.proven),
                // Nothing below the previous depth's size: carry it over.
                (None, Some(prev)) => (prev.s, prev.witness.clone(), claim.proven && prev.proven),
                (None, None) => return Err(DriverError::Request(format!("no witness at depth {d}"))),
            };
            if claim.value.is_some() {
                witnesses.extend(claim.witnesses);
            }
            proven &= point_proven;
            let dominated = frontier.last().is_some_and(|p| p.s <= s);
            frontier.push(ParetoPoint { d, s, proven: point_proven, dominated, witness });
        }
        let value = frontier.first().map(|p| p.s);
        Ok(OptimalityClaim { n, mode, value, proven, witnesses, unsat_evidence: evidence, frontier })
    }

    pub fn optimize(&self, n: usize, mode: Mode) -> Result<OptimalityClaim, DriverError> {
        match mode {
            Mode::MinSizeGivenDepth(d) => self.min_size_given_depth(n, d, None),
            Mode::MinDepthGivenSize(s) => self.min_depth_given_size(n, s, None),
            Mode::Pareto { max_depth } => self.pareto(n, max_depth),
        }
    }
}

fn check_n(n: usize) -> Result<(), DriverError> {
    if n < 2 {
        return Err(DriverError::Request(format!("need at least 2 channels, got {n}")));
    }
    Ok(())
}

fn claim_from(
    n: usize,
    mode: Mode,
    best: Option<Level>,
    proven: bool,
    unsat_evidence: Vec<EvidenceRow>,
    value_of: impl Fn(&Level) -> usize,
) -> OptimalityClaim {
    let value = best.as_ref().map(|l| match mode {
        Mode::MinSizeGivenDepth(_) => l.smallest_witness().and_then(|w| w.network.as_ref()).map_or(l.s, ComparatorNetwork::size),
        _ => value_of(l),
    });
    let witnesses = best
        .as_ref()
        .map(|l| {
            l.witnesses()
                .filter_map(|r| r.network.clone().map(|network| Witness { prefix: r.prefix.clone(), network }))
                .collect()
        })
        .unwrap_or_default();
    OptimalityClaim { n, mode, value, proven, witnesses, unsat_evidence, frontier: Vec::new() }
}

const MARGIN: f64 = 20.0;
const CHANNEL_GAP: f64 = 24.0;
const COLUMN_GAP: f64 = 14.0;
const LAYER_GAP: f64 = 26.0;

/// Channel `i` lies at this height; channel 1 on top.
pub fn channel_y(i: usize) -> f64 {
    MARGIN + (i - 1) as f64 * CHANNEL_GAP
}

/// Greedy columns within a layer so that overlapping comparators do not
/// share a vertical.
fn layer_columns(layer: &Layer) -> Vec<usize> {
    let mut columns: Vec<Vec<(usize, usize)>> = Vec::new();
    layer
        .comparators()
        .iter()
        .map(|c| {
            let free = columns.iter().position(|col| col.iter().all(|&(i, j)| c.j < i || c.i > j));
            let idx = free.unwrap_or_else(|| {
                columns.push(Vec::new());
                columns.len() - 1
            });
            columns[idx].push((c.i, c.j));
            idx
        })
        .collect()
}

/// Channels as horizontal lines, comparators as vertical links grouped by
/// layer.
pub fn render_svg(net: &ComparatorNetwork) -> String {
    let n = net.channels();
    let placements: Vec<Vec<usize>> = net.layers().iter().map(layer_columns).collect();
    let widths: Vec<usize> = placements.iter().map(|p| p.iter().max().map_or(1, |m| m + 1)).collect();
    let body_width: f64 = widths.iter().map(|&w| w as f64 * COLUMN_GAP + LAYER_GAP).sum();
    let width = 2.0 * MARGIN + body_width.max(LAYER_GAP);
    let height = 2.0 * MARGIN + n.saturating_sub(1) as f64 * CHANNEL_GAP;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<g class="channels" stroke="black" stroke-width="1">"#);
    for i in 1..=n {
        let y = channel_y(i);
        let _ = writeln!(svg, r#"<line class="channel" x1="{MARGIN}" y1="{y}" x2="{}" y2="{y}"/>"#, width - MARGIN);
    }
    svg.push_str("</g>\n");
    let mut x0 = MARGIN + LAYER_GAP / 2.0;
    for (k, (layer, cols)) in net.layers().iter().zip(&placements).enumerate() {
        let _ = writeln!(svg, r#"<g class="layer" data-layer="{}" stroke="black" stroke-width="2">"#, k + 1);
        for (c, &col) in layer.comparators().iter().zip(cols) {
            let x = x0 + col as f64 * COLUMN_GAP;
            let (y1, y2) = (channel_y(c.i), channel_y(c.j));
            let _ = writeln!(svg, r#"<line class="comparator" x1="{x}" y1="{y1}" x2="{x}" y2="{y2}"/>"#);
            let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y1}" r="3"/><circle cx="{x}" cy="{y2}" r="3"/>"#);
        }
        svg.push_str("</g>\n");
        x0 += widths[k] as f64 * COLUMN_GAP + LAYER_GAP;
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_hash_ignores_prefix() {
        let a = EncodeOptions::default();
        let b = EncodeOptions::default().with_prefix(Some("(0120)".parse().unwrap()));
        assert_eq!(options_hash(&a), options_hash(&b));
        assert_ne!(options_hash(&a), options_hash(&EncodeOptions::basic()));
        assert_eq!(options_hash(&a).len(), 16);
    }

    #[test]
    fn columns_separate_overlaps() {
        let layer: Layer = [(1, 4), (2, 3), (5, 6)].into_iter().collect();
        assert_eq!(layer_columns(&layer), vec![0, 1, 0]);
    }

    #[test]
    fn empty_network_svg() {
        let svg = render_svg(&ComparatorNetwork::empty(3));
        assert_eq!(svg.matches(r#"class="channel""#).count(), 3);
        assert_eq!(svg.matches(r#"class="comparator""#).count(), 0);
    }

    #[test]
    fn prefix_selection() {
        let s = Searcher::new(SolverConfig::default());
        assert_eq!(s.prefixes_for(10, 7), vec![None]);
        assert_eq!(s.prefixes_for(11, 8).len(), 403);
        assert_eq!(s.prefixes_for(11, 2), vec![None]);
        let always = Searcher::new(SolverConfig::default()).with_policy(PrefixPolicy::Always);
        assert_eq!(always.prefixes_for(5, 5).len(), 9);
    }
}
