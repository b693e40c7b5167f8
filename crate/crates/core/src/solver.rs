//! Running CNF instances: DIMACS text, a small built-in DPLL, an external
//! solver subprocess speaking the competition output format, and (with the
//! `cadical` feature) an in-process CDCL solver.

use std::fmt::Write as _;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cardinality::Lit;
use crate::encoder::{CnfFormula, VarMap};
use crate::netcore::{is_sorting_network, ComparatorNetwork, Layer, NetError};

/// Environment variable holding the default external solver command.
pub const SOLVER_ENV: &str = "SORTNET_SOLVER";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error("malformed DIMACS at line {line}: {msg}")]
    Dimacs { line: usize, msg: String },
    #[error("model is inconsistent with the instance: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Sat => "SAT",
            SolveStatus::Unsat => "UNSAT",
            SolveStatus::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub wall_time: f64,
    pub solver: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Indexed by variable id; entry 0 is unused.
    pub model: Option<Vec<bool>>,
    pub stats: SolveStats,
}

impl SolveOutcome {
    pub fn value(&self, lit: Lit) -> Option<bool> {
        let m = self.model.as_ref()?;
        m.get(lit.unsigned_abs() as usize).map(|&v| v == (lit > 0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Builtin,
    #[cfg(feature = "cadical")]
    Cadical,
    /// Shell command; `{}` is replaced by the CNF path, otherwise the path is
    /// appended.
    External(String),
}

impl Backend {
    pub fn name(&self) -> String {
        match self {
            Backend::Builtin => "builtin".into(),
            #[cfg(feature = "cadical")]
            Backend::Cadical => "cadical".into(),
            Backend::External(cmd) => format!("external:{cmd}"),
        }
    }

    /// External command from the environment, else the strongest built-in.
    pub fn from_env() -> Self {
        match std::env::var(SOLVER_ENV) {
            Ok(cmd) if !cmd.trim().is_empty() => Backend::External(cmd),
            _ => Self::default(),
        }
    }
}

impl Default for Backend {
    fn default() -> Self {
        #[cfg(feature = "cadical")]
        return Backend::Cadical;
        #[cfg(not(feature = "cadical"))]
        return Backend::Builtin;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Seconds.
    pub timeout: f64,
    pub workdir: PathBuf,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { backend: Backend::from_env(), timeout: 3600.0, workdir: std::env::temp_dir() }
    }
}

impl SolverConfig {
    pub fn new(backend: Backend, timeout: f64) -> Self {
        Self { backend, timeout, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(SolverError::Config(format!("timeout must be positive, got {}", self.timeout)));
        }
        Ok(())
    }
}

pub fn write_dimacs(cnf: &CnfFormula, out: &mut impl Write) -> io::Result<()> {
    let mut w = io::BufWriter::new(out);
    writeln!(w, "p cnf {} {}", cnf.num_vars(), cnf.num_clauses())?;
    let mut line = String::new();
    for clause in cnf.clauses() {
        line.clear();
        for l in clause {
            write!(line, "{l} ").expect("string write");
        }
        line.push('0');
        writeln!(w, "{line}")?;
    }
    w.flush()
}

pub fn emit_dimacs(cnf: &CnfFormula) -> String {
    let mut buf = Vec::new();
    write_dimacs(cnf, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("ascii")
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, SolverError> {
    let mut header: Option<(usize, usize)> = None;
    let mut cnf = CnfFormula::default();
    let mut pending: Vec<Lit> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |msg: &str| SolverError::Dimacs { line: idx + 1, msg: msg.to_string() };
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "cnf" {
                return Err(err("expected `p cnf <vars> <clauses>`"));
            }
            let vars = parts[1].parse().map_err(|_| err("bad variable count"))?;
            let clauses = parts[2].parse().map_err(|_| err("bad clause count"))?;
            header = Some((vars, clauses));
            cnf = CnfFormula::new(vars);
            continue;
        }
        let Some((vars, _)) = header else {
            return Err(err("clause before header"));
        };
        for tok in line.split_whitespace() {
            let l: Lit = tok.parse().map_err(|_| err("bad literal"))?;
            if l == 0 {
                if pending.is_empty() {
                    return Err(err("empty clause"));
                }
                cnf.add_clause(&pending);
                pending.clear();
            } else if l.unsigned_abs() as usize > vars {
                return Err(err("literal exceeds declared variables"));
            } else {
                pending.push(l);
            }
        }
    }
    if !pending.is_empty() {
        cnf.add_clause(&pending);
    }
    match header {
        Some((_, clauses)) if clauses != cnf.num_clauses() => Err(SolverError::Dimacs {
            line: 0,
            msg: format!("header announces {clauses} clauses, found {}", cnf.num_clauses()),
        }),
        Some(_) => Ok(cnf),
        None => Err(SolverError::Dimacs { line: 0, msg: "missing header".into() }),
    }
}

/// Result of unit propagation alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Propagation {
    Conflict,
    /// Indexed by variable id; entry 0 is unused.
    Assigned(Vec<Option<bool>>),
}

const UNASSIGNED: i8 = 0;

/// Watched-literal propagation engine shared by the DPLL search and
/// [`unit_propagate`].
struct Engine {
    num_vars: usize,
    lits: Vec<Lit>,
    starts: Vec<usize>,
    watches: Vec<Vec<u32>>,
    value: Vec<i8>,
    trail: Vec<Lit>,
    head: usize,
    /// Initial units and the empty-clause flag.
    units: Vec<Lit>,
    trivially_unsat: bool,
}

fn lit_index(l: Lit) -> usize {
    2 * l.unsigned_abs() as usize + usize::from(l < 0)
}

impl Engine {
    fn new(cnf: &CnfFormula) -> Self {
        let num_vars = cnf.num_vars();
        let mut e = Engine {
            num_vars,
            lits: Vec::new(),
            starts: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars + 2],
            value: vec![UNASSIGNED; num_vars + 1],
            trail: Vec::with_capacity(num_vars),
            head: 0,
            units: Vec::new(),
            trivially_unsat: false,
        };
        for clause in cnf.clauses() {
            let mut c: Vec<Lit> = clause.to_vec();
            c.sort_unstable();
            c.dedup();
            if c.iter().any(|l| c.contains(&-l)) {
                continue;
            }
            match c.len() {
                0 => e.trivially_unsat = true,
                1 => e.units.push(c[0]),
                _ => {
                    let idx = e.starts.len() as u32;
                    e.starts.push(e.lits.len());
                    e.watches[lit_index(-c[0])].push(idx);
                    e.watches[lit_index(-c[1])].push(idx);
                    e.lits.extend_from_slice(&c);
                }
            }
        }
        e.starts.push(e.lits.len());
        e
    }

    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.value[l.unsigned_abs() as usize];
        if l < 0 {
            -v
        } else {
            v
        }
    }

    /// False when `l` is already false.
    fn assign(&mut self, l: Lit) -> bool {
        match self.lit_value(l) {
            1 => true,
            -1 => false,
            _ => {
                self.value[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
                self.trail.push(l);
                true
            }
        }
    }

    /// Propagates the trail; false on conflict.
    fn propagate(&mut self) -> bool {
        while self.head < self.trail.len() {
            let falsified = -self.trail[self.head];
            self.head += 1;
            let widx = lit_index(-falsified);
            let mut watchers = std::mem::take(&mut self.watches[widx]);
            let mut keep = 0;
            let mut ok = true;
            let mut w = 0;
            while w < watchers.len() {
                let cidx = watchers[w] as usize;
                w += 1;
                let (s, e) = (self.starts[cidx], self.starts[cidx + 1]);
                if self.lits[s] == falsified {
                    self.lits.swap(s, s + 1);
                }
                let other = self.lits[s];
                if self.lit_value(other) == 1 {
                    watchers[keep] = cidx as u32;
                    keep += 1;
                    continue;
                }
                let mut moved = false;
                for p in s + 2..e {
                    if self.lit_value(self.lits[p]) != -1 {
                        self.lits.swap(s + 1, p);
                        let nl = self.lits[s + 1];
                        self.watches[lit_index(-nl)].push(cidx as u32);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                watchers[keep] = cidx as u32;
                keep += 1;
                if !self.assign(other) {
                    ok = false;
                    break;
                }
            }
            while w < watchers.len() {
                watchers[keep] = watchers[w];
                keep += 1;
                w += 1;
            }
            watchers.truncate(keep);
            self.watches[widx] = watchers;
            if !ok {
                return false;
            }
        }
        true
    }

    /// Smallest variable unassigned by the undo.
    fn undo_to(&mut self, len: usize) -> usize {
        let mut lowest = usize::MAX;
        for l in self.trail.drain(len..) {
            let v = l.unsigned_abs() as usize;
            self.value[v] = UNASSIGNED;
            lowest = lowest.min(v);
        }
        self.head = len;
        lowest
    }

    fn load_units(&mut self, extra: &[Lit]) -> bool {
        if self.trivially_unsat {
            return false;
        }
        let units = std::mem::take(&mut self.units);
        let ok = units.iter().chain(extra).all(|&l| self.assign(l));
        self.units = units;
        ok && self.propagate()
    }

    /// Chronological DPLL; `None` on timeout.
    fn search(&mut self, deadline: Instant) -> Option<bool> {
        if !self.load_units(&[]) {
            return Some(false);
        }
        // (trail length before the decision, decision literal, flipped)
        let mut decisions: Vec<(usize, Lit, bool)> = Vec::new();
        let mut next_var = 1;
        let mut steps = 0u32;
        loop {
            steps = steps.wrapping_add(1);
            if steps.is_multiple_of(1024) && Instant::now() >= deadline {
                return None;
            }
            while next_var <= self.num_vars && self.value[next_var] != UNASSIGNED {
                next_var += 1;
            }
            if next_var > self.num_vars {
                return Some(true);
            }
            let l = -(next_var as Lit);
            decisions.push((self.trail.len(), l, false));
            self.assign(l);
            let mut ok = self.propagate();
            while !ok {
                // Flip the deepest unflipped decision.
                loop {
                    let Some((len, lit, flipped)) = decisions.pop() else {
                        return Some(false);
                    };
                    next_var = next_var.min(self.undo_to(len));
                    if !flipped {
                        decisions.push((len, -lit, true));
                        self.assign(-lit);
                        break;
                    }
                }
                ok = self.propagate();
            }
        }
    }
}

/// Fixpoint of unit propagation under `assumptions`.
pub fn unit_propagate(cnf: &CnfFormula, assumptions: &[Lit]) -> Propagation {
    let mut e = Engine::new(cnf);
    if !e.load_units(assumptions) {
        return Propagation::Conflict;
    }
    Propagation::Assigned(
        e.value.iter().map(|&v| match v {
            1 => Some(true),
            -1 => Some(false),
            _ => None,
        }).collect(),
    )
}

fn solve_builtin(cnf: &CnfFormula, timeout: f64) -> (SolveStatus, Option<Vec<bool>>) {
    let deadline = Instant::now() + Duration::from_secs_f64(timeout.min(1e9));
    let mut e = Engine::new(cnf);
    match e.search(deadline) {
        Some(true) => (SolveStatus::Sat, Some(e.value.iter().map(|&v| v == 1).collect())),
        Some(false) => (SolveStatus::Unsat, None),
        None => (SolveStatus::Unknown, None),
    }
}

#[cfg(feature = "cadical")]
fn solve_cadical(cnf: &CnfFormula, timeout: f64) -> (SolveStatus, Option<Vec<bool>>) {
    let mut s: cadical::Solver<cadical::Timeout> = cadical::Solver::new();
    s.set_callbacks(Some(cadical::Timeout::new(timeout as f32)));
    s.reserve(cnf.num_vars() as i32);
    for clause in cnf.clauses() {
        s.add_clause(clause.iter().copied());
    }
    match s.solve() {
        Some(true) => {
            let mut model = vec![false; cnf.num_vars() + 1];
            for (v, slot) in model.iter_mut().enumerate().skip(1) {
                *slot = s.value(v as i32).unwrap_or(false);
            }
            (SolveStatus::Sat, Some(model))
        }
        Some(false) => (SolveStatus::Unsat, None),
        None => (SolveStatus::Unknown, None),
    }
}

/// Kills the solver and anything it spawned.
fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    // SAFETY: plain syscall on the process group created for this child.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
    let _ = child.kill();
}

fn shell_quote(path: &str) -> String {
    format!("'{}'", path.replace('\'', "'\\''"))
}

/// Reads competition-format output: an `s` status line and `v` model lines.
pub fn parse_solver_output(text: &str, num_vars: usize) -> Result<(SolveStatus, Option<Vec<bool>>), SolverError> {
    let mut status = None;
    let mut model = vec![false; num_vars + 1];
    let mut saw_values = false;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(match rest.trim() {
                "SATISFIABLE" => SolveStatus::Sat,
                "UNSATISFIABLE" => SolveStatus::Unsat,
                "UNKNOWN" | "INDETERMINATE" => SolveStatus::Unknown,
                other => return Err(SolverError::Backend(format!("unrecognized status line `s {other}`"))),
            });
        } else if let Some(rest) = line.strip_prefix("v ").or(if line == "v" { Some("") } else { None }) {
            for tok in rest.split_whitespace() {
                let l: Lit = tok.parse().map_err(|_| SolverError::Backend(format!("bad model literal {tok:?}")))?;
                if l != 0 {
                    let v = l.unsigned_abs() as usize;
                    if v > num_vars {
                        return Err(SolverError::Backend(format!("model literal {l} exceeds {num_vars} variables")));
                    }
                    model[v] = l > 0;
                    saw_values = true;
                }
            }
        }
    }
    match status {
        None => Err(SolverError::Backend("no `s` status line in solver output".into())),
        Some(SolveStatus::Sat) if !saw_values && num_vars > 0 => {
            Err(SolverError::Backend("SATISFIABLE without model lines".into()))
        }
        Some(SolveStatus::Sat) => Ok((SolveStatus::Sat, Some(model))),
        Some(s) => Ok((s, None)),
    }
}

fn solve_external(cnf: &CnfFormula, cfg: &SolverConfig, command: &str) -> Result<(SolveStatus, Option<Vec<bool>>), SolverError> {
    let mut file = tempfile::Builder::new().prefix("sortnet-").suffix(".cnf").tempfile_in(&cfg.workdir)?;
    write_dimacs(cnf, file.as_file_mut())?;
    file.as_file_mut().flush()?;
    let path = shell_quote(&file.path().to_string_lossy());
    let cmdline = if command.contains("{}") { command.replace("{}", &path) } else { format!("{command} {path}") };
    log::debug!("running external solver: {cmdline}");
    let mut command = Command::new("sh");
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(&mut command, 0);
    let mut child = command
        .arg("-c")
        .arg(&cmdline)
        .current_dir(&cfg.workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let stdout = child.stdout.take().expect("piped stdout");
    let stderr = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut text = String::new();
        for line in BufReader::new(stdout).lines().map_while(Result::ok) {
            // Keep only status and model lines; solver chatter can be large.
            if line.starts_with('s') || line.starts_with('v') {
                text.push_str(&line);
                text.push('\n');
            }
        }
        text
    });
    let err_reader = std::thread::spawn(move || {
        let mut text = String::new();
        let _ = BufReader::new(stderr).take(1 << 16).read_to_string(&mut text);
        text
    });
    let deadline = Instant::now() + Duration::from_secs_f64(cfg.timeout.min(1e9));
    let exit = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if Instant::now() >= deadline {
            kill_tree(&mut child);
            let _ = child.wait();
            break None;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let text = out_reader.join().unwrap_or_default();
    let err_text = err_reader.join().unwrap_or_default();
    let Some(exit) = exit else {
        return Ok((SolveStatus::Unknown, None));
    };
    parse_solver_output(&text, cnf.num_vars()).map_err(|e| {
        SolverError::Backend(format!("{e} (exit status {exit}; stderr: {})", err_text.trim()))
    })
}

pub fn solve(cnf: &CnfFormula, cfg: &SolverConfig) -> Result<SolveOutcome, SolverError> {
    cfg.validate()?;
    let started = Instant::now();
    let (status, model) = match &cfg.backend {
        Backend::Builtin => solve_builtin(cnf, cfg.timeout),
        #[cfg(feature = "cadical")]
        Backend::Cadical => solve_cadical(cnf, cfg.timeout),
        Backend::External(command) => solve_external(cnf, cfg, command)?,
    };
    if let Some(m) = &model {
        if let Some(bad) = cnf.clauses().find(|c| !c.iter().any(|&l| m[l.unsigned_abs() as usize] == (l > 0))) {
            return Err(SolverError::Backend(format!("model falsifies clause {bad:?}")));
        }
    }
    Ok(SolveOutcome {
        status,
        model,
        stats: SolveStats { wall_time: started.elapsed().as_secs_f64(), solver: cfg.backend.name() },
    })
}

/// Network of a model: comparator `(i,j)` in layer `k` iff `g(k,i,j)`.
/// All `d` layers are kept, empty or not.
pub fn decode_network(model: &[bool], vm: &VarMap) -> Result<ComparatorNetwork, SolverError> {
    if model.len() <= vm.num_vars() {
        return Err(SolverError::Inconsistent(format!(
            "model covers {} variables, instance has {}",
            model.len().saturating_sub(1),
            vm.num_vars()
        )));
    }
    let n = vm.channels();
    let layers: Vec<Layer> = (1..=vm.depth())
        .map(|k| {
            (1..=n)
                .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
                .filter(|&(i, j)| model[vm.g(k, i, j) as usize])
                .collect()
        })
        .collect();
    ComparatorNetwork::new(n, layers).map_err(|e: NetError| SolverError::Inconsistent(e.to_string()))
}

/// Decodes and checks a model against the instance bounds.
pub fn decode_verified(model: &[bool], vm: &VarMap, max_size: usize) -> Result<ComparatorNetwork, SolverError> {
    let net = decode_network(model, vm)?;
    if net.size() > max_size {
        return Err(SolverError::Inconsistent(format!("{} comparators exceed the bound {max_size}", net.size())));
    }
    if !is_sorting_network(&net) {
        return Err(SolverError::Inconsistent("decoded network does not sort".into()));
    }
    Ok(net)
}
