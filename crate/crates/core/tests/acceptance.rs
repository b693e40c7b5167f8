//! Acceptance runner: one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Criterion 7 is long-running and only executes with `--include-ignored`,
//! `--ignored`, `--long` or `SORTNET_ACCEPTANCE_LONG=1`; otherwise it is
//! reported as `[SKIP]`. `SORTNET_ACCEPTANCE_TIMEOUT` sets its per-instance
//! solver timeout in seconds (default 86400).

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng as _, SeedableRng};
use sortnet::cardinality::{build_atmost, Lit};
use sortnet::driver::{PrefixPolicy, Searcher};
use sortnet::encoder::{build_instance, CnfFormula, EncodeOptions};
use sortnet::netcore::{apply_network, is_sorting_network, permute_untangle, reflect, BitVector, ComparatorNetwork, Layer};
use sortnet::prefixes::{
    count_prefixes, enumerate_words, generate_prefixes, net_of, sentence_of, Sentence, Variant, WordKind,
};
use sortnet::solver::{decode_verified, solve, unit_propagate, Backend, Propagation, SolveStatus, SolverConfig};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const VARIANTS: [Variant; 4] = [Variant::H, Variant::T, Variant::TPrime, Variant::G];

fn prefix_counts() -> Outcome {
    for n in 3..=16 {
        for v in VARIANTS {
            let got = count_prefixes(n, v);
            let want = common::expected_count(v, n);
            ensure!(got == want, "n={n} {v}: got {got}, expected {want}");
        }
    }
    Ok(format!("|R(H_16)|={}, |R(T'_11)|={}", count_prefixes(16, Variant::H), count_prefixes(11, Variant::TPrime)))
}

fn completeness_oracle() -> Outcome {
    let mut summary = Vec::new();
    for n in 3..=7 {
        let classes = common::permutation_classes(n);
        let want = count_prefixes(n, Variant::H);
        ensure!(classes.len() as u64 == want, "n={n}: {} classes, expected {want}", classes.len());
        let mut seen = BTreeSet::new();
        for class in &classes {
            let names: BTreeSet<Sentence> = class.iter().map(|m| sentence_of(m).unwrap()).collect();
            ensure!(names.len() == 1, "n={n}: one class has sentences {names:?}");
            let name = names.into_iter().next().unwrap();
            ensure!(seen.insert(name.clone()), "n={n}: sentence {name} names two classes");
        }
        let generated: BTreeSet<Sentence> = generate_prefixes(n, Variant::H).sentences.into_iter().collect();
        ensure!(seen == generated, "n={n}: class sentences differ from the generated set");
        summary.push(format!("{n}:{}", classes.len()));
    }
    Ok(format!("classes {}", summary.join(" ")))
}

fn word_counts() -> Outcome {
    let count = |n: usize, k: WordKind| enumerate_words(n, k).len() as u64;
    for n in 1..=16 {
        ensure!(count(n, WordKind::Head) == if n % 2 == 1 { 1 << ((n - 1) / 2) } else { 0 }, "Head({n})");
        if n >= 3 {
            ensure!(count(n, WordKind::Tail) == count(n - 2, WordKind::Stick), "Tail({n}) != Stick({})", n - 2);
        }
    }
    let sticks: Vec<u64> = (2..=16).step_by(2).map(|n| count(n, WordKind::Stick)).collect();
    ensure!(sticks == [1, 3, 4, 10, 16, 36, 64, 136], "Stick counts {sticks:?}");
    let cycles: Vec<u64> = (2..=16).step_by(2).map(|n| count(n, WordKind::Cycle)).collect();
    ensure!(cycles == [1, 2, 2, 4, 4, 9, 10, 22], "Cycle counts {cycles:?}");
    Ok(format!("Stick {sticks:?}, Cycle {cycles:?}"))
}

fn optimal_fixtures() -> Outcome {
    let want = [
        (6, 5, 12, 1),
        (7, 6, 16, 1),
        (8, 6, 19, 1),
        (9, 7, 25, 1),
        (10, 7, 31, 1),
        (10, 8, 29, 1),
        (11, 8, 35, 5),
        (12, 8, 40, 1),
        (12, 9, 39, 1),
    ];
    let fixtures = common::fixtures();
    let mut checked = 0;
    for (n, d, s, copies) in want {
        let nets: Vec<_> = fixtures
            .iter()
            .filter(|f| f.group == "optimal" && f.n == n && f.depth == Some(d) && f.size == Some(s))
            .collect();
        ensure!(nets.len() == copies, "({n},{d},{s}): {} fixtures, expected {copies}", nets.len());
        for f in nets {
            let net = f.network();
            ensure!(net.depth() == d && net.size() == s, "{}: has ({},{})", f.name, net.depth(), net.size());
            ensure!(is_sorting_network(&net), "{} does not sort", f.name);
            if let Some(p) = &f.prefix {
                let p: Sentence = p.parse().map_err(|e| format!("{}: {e}", f.name))?;
                ensure!(net.prefix(2) == net_of(&p).unwrap(), "{}: first layers differ from {p}", f.name);
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} networks sort"))
}

fn solve_instance(n: usize, d: usize, s: usize, backend: Backend) -> Result<(SolveStatus, f64), String> {
    let (cnf, vm) = build_instance(n, d as i64, s as i64, &EncodeOptions::default()).map_err(|e| e.to_string())?;
    let out = solve(&cnf, &SolverConfig::new(backend, 600.0)).map_err(|e| e.to_string())?;
    if let Some(model) = &out.model {
        decode_verified(model, &vm, s).map_err(|e| format!("({n},{d},{s}): {e}"))?;
    }
    Ok((out.status, out.stats.wall_time))
}

fn sat_side() -> Outcome {
    let strong = Backend::from_env();
    let mut notes = Vec::new();
    for (n, d, s) in [(4, 3, 5), (5, 5, 9), (6, 5, 12), (7, 6, 16), (8, 6, 19)] {
        let (status, t) = solve_instance(n, d, s, strong.clone())?;
        ensure!(status == SolveStatus::Sat, "({n},{d},{s}) on {}: {status}", strong.name());
        notes.push(format!("({n},{d},{s}) {t:.2}s"));
    }
    for (n, d, s) in [(4, 3, 5), (5, 5, 9)] {
        let (status, _) = solve_instance(n, d, s, Backend::Builtin)?;
        ensure!(status == SolveStatus::Sat, "({n},{d},{s}) on builtin: {status}");
    }
    Ok(format!("{}: {}; builtin: (4,3,5) (5,5,9)", strong.name(), notes.join(" ")))
}

fn unsat_side() -> Outcome {
    let strong = Backend::from_env();
    let mut notes = Vec::new();
    for (n, d, s) in [(4, 3, 4), (4, 2, 5), (5, 5, 8), (6, 5, 11)] {
        let (status, t) = solve_instance(n, d, s, strong.clone())?;
        ensure!(status == SolveStatus::Unsat, "({n},{d},{s}) on {}: {status}", strong.name());
        notes.push(format!("({n},{d},{s}) {t:.2}s"));
    }
    Ok(format!("{}: {}", strong.name(), notes.join(" ")))
}

fn long_timeout() -> f64 {
    std::env::var("SORTNET_ACCEPTANCE_TIMEOUT").ok().and_then(|v| v.parse().ok()).unwrap_or(86_400.0)
}

fn level_statuses(searcher: &Searcher, n: usize, d: usize, s: usize) -> Result<(Vec<Sentence>, usize, usize), String> {
    let level = searcher.run_level(n, d, s).map_err(|e| e.to_string())?;
    let unknown = level.results.iter().filter(|r| r.status == SolveStatus::Unknown).count();
    let witnesses = level.witnesses().filter_map(|r| r.prefix.clone()).collect();
    Ok((witnesses, level.results.len(), unknown))
}

fn extended_claims() -> Outcome {
    let cfg = SolverConfig::new(Backend::from_env(), long_timeout());
    let free = Searcher::new(cfg.clone()).with_policy(PrefixPolicy::Never);
    let split = Searcher::new(cfg).with_policy(PrefixPolicy::Always);
    let mut notes = Vec::new();
    let started = Instant::now();

    for (n, d, s, want) in [(10, 7, 31, SolveStatus::Sat), (10, 7, 30, SolveStatus::Unsat), (10, 8, 29, SolveStatus::Sat)] {
        let level = free.run_level(n, d, s).map_err(|e| e.to_string())?;
        let status = level.results[0].status;
        ensure!(status == want, "({n},{d},{s}): {status}, expected {want}");
        notes.push(format!("({n},{d},{s}) {status}"));
    }

    let fixture_prefixes: BTreeSet<Sentence> = common::fixtures()
        .iter()
        .filter(|f| f.n == 11 && f.group == "optimal")
        .filter_map(|f| f.prefix.as_ref().map(|p| p.parse().unwrap()))
        .collect();
    let (witnesses, total, unknown) = level_statuses(&split, 11, 8, 35)?;
    ensure!(unknown == 0, "(11,8,35): {unknown} of {total} prefixes UNKNOWN");
    ensure!(witnesses.len() == 5, "(11,8,35): {} witness prefixes of {total}", witnesses.len());
    let found: BTreeSet<Sentence> = witnesses.into_iter().collect();
    ensure!(found == fixture_prefixes, "(11,8,35): witness prefixes {found:?}");
    notes.push(format!("(11,8,35) 5/{total} SAT"));

    let (witnesses, total, unknown) = level_statuses(&split, 11, 9, 34)?;
    ensure!(witnesses.is_empty() && unknown == 0, "(11,9,34): {} SAT, {unknown} UNKNOWN", witnesses.len());
    notes.push(format!("(11,9,34) 0/{total} SAT"));

    let (witnesses, total, unknown) = level_statuses(&split, 12, 8, 40)?;
    ensure!(unknown == 0, "(12,8,40): {unknown} of {total} prefixes UNKNOWN");
    ensure!(witnesses.len() == 4, "(12,8,40): {} witness prefixes of {total}", witnesses.len());
    notes.push(format!("(12,8,40) 4/{total} SAT"));

    let (witnesses, total, unknown) = level_statuses(&split, 12, 8, 39)?;
    ensure!(witnesses.is_empty() && unknown == 0, "(12,8,39): {} SAT, {unknown} UNKNOWN", witnesses.len());
    notes.push(format!("(12,8,39) 0/{total} SAT"));

    let (witnesses, _, _) = level_statuses(&split, 12, 9, 39)?;
    ensure!(!witnesses.is_empty(), "(12,9,39): no witness");
    notes.push("(12,9,39) SAT".into());

    Ok(format!("{} in {:.0}s", notes.join(", "), started.elapsed().as_secs_f64()))
}

fn atmost(m: usize, s: usize) -> (CnfFormula, Vec<Lit>) {
    let mut cnf = CnfFormula::new(m);
    let inputs: Vec<Lit> = (1..=m as Lit).collect();
    let r = build_atmost(&inputs, s as i64, &mut cnf).unwrap();
    cnf.extend(&r.clauses);
    if let Some(c) = r.c_target {
        cnf.add_clause(&[-c]);
    }
    (cnf, r.output_lits)
}

fn cardinality() -> Outcome {
    let mut checks = 0u64;
    for m in 1..=10 {
        for s in 0..=m {
            let (cnf, outputs) = atmost(m, s);
            for bits in 0u32..(1 << m) {
                let ones = bits.count_ones() as usize;
                let fixed: Vec<Lit> =
                    (0..m).map(|i| if bits >> i & 1 == 1 { i as Lit + 1 } else { -(i as Lit + 1) }).collect();
                match unit_propagate(&cnf, &fixed) {
                    Propagation::Conflict => ensure!(ones > s, "m={m} s={s} {bits:b}: rejected"),
                    Propagation::Assigned(vals) => {
                        ensure!(ones <= s, "m={m} s={s} {bits:b}: accepted");
                        for (t, &y) in outputs.iter().enumerate() {
                            ensure!(vals[y as usize] == Some(ones > t), "m={m} s={s} {bits:b}: output {t}");
                        }
                    }
                }
                // With exactly s inputs set, propagation forces the rest off.
                if ones == s && s < m {
                    let set: Vec<Lit> = fixed.iter().copied().filter(|&l| l > 0).collect();
                    let Propagation::Assigned(vals) = unit_propagate(&cnf, &set) else {
                        return Err(format!("m={m} s={s} {bits:b}: conflict on a feasible set"));
                    };
                    for i in (0..m).filter(|&i| bits >> i & 1 == 0) {
                        ensure!(vals[i + 1] == Some(false), "m={m} s={s} {bits:b}: input {} not forced", i + 1);
                    }
                }
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} assignments"))
}

struct Rng(StdRng);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0.gen()
    }

    fn below(&mut self, k: usize) -> usize {
        self.0.gen_range(0..k)
    }

    fn perm(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (1..=n).collect();
        for i in (1..n).rev() {
            p.swap(i, self.below(i + 1));
        }
        p
    }

    fn layer(&mut self, n: usize) -> Layer {
        let p = self.perm(n);
        let k = self.below(n / 2 + 1);
        p.chunks(2).take(k).filter(|c| c.len() == 2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect()
    }

    fn network(&mut self, n: usize, d: usize) -> ComparatorNetwork {
        ComparatorNetwork::new(n, (0..d).map(|_| self.layer(n)).collect()).unwrap()
    }
}

fn properties() -> Outcome {
    let mut rng = Rng(StdRng::seed_from_u64(0x5eed));
    for _ in 0..2_000 {
        let n = 1 + rng.below(16);
        let d = rng.below(8);
        let net = rng.network(n, d);
        let x = BitVector::new(n, rng.next() & ((1u64 << n) - 1));
        let y = apply_network(&net, x).unwrap();
        ensure!(x.count_ones() == y.count_ones(), "bit count changed by {net}");
        ensure!(reflect(&reflect(&net)) == net, "reflection is not an involution on {net}");
    }
    let mut sorters = 0;
    for _ in 0..2_000 {
        let n = 2 + rng.below(5);
        let d = 1 + rng.below(8);
        let net = rng.network(n, d);
        let perm = rng.perm(n);
        let moved = permute_untangle(&net, &perm).unwrap();
        let sorts = is_sorting_network(&net);
        sorters += usize::from(sorts);
        ensure!(is_sorting_network(&moved) == sorts, "untangling {net} by {perm:?} changed sorting");
        ensure!(is_sorting_network(&reflect(&net)) == sorts, "reflection of {net} changed sorting");
    }
    let mut roundtrips = 0;
    for n in 1..=12 {
        for s in generate_prefixes(n, Variant::H).sentences {
            ensure!(sentence_of(&net_of(&s).unwrap()).unwrap() == s, "roundtrip fails for {s}");
            roundtrips += 1;
        }
    }
    const TRIALS: usize = 10_000;
    for _ in 0..TRIALS {
        let n = 1 + rng.below(16);
        let net = rng.network(n, 2);
        let perm = rng.perm(n);
        let moved = permute_untangle(&net, &perm).unwrap();
        ensure!(sentence_of(&moved).unwrap() == sentence_of(&net).unwrap(), "sentence of {net} changes under {perm:?}");
    }
    Ok(format!("{roundtrips} roundtrips, {TRIALS} permutation trials, {sorters} random sorters"))
}

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Option<Duration>,
    long: bool,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let long = args.iter().any(|a| a == "--include-ignored" || a == "--ignored" || a == "--long")
        || std::env::var("SORTNET_ACCEPTANCE_LONG").is_ok_and(|v| v == "1");
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria = [
        Criterion { id: 1, title: "prefix counts n=3..16", budget: minutes(1), long: false, run: prefix_counts },
        Criterion { id: 2, title: "brute-force completeness n=3..7", budget: minutes(5), long: false, run: completeness_oracle },
        Criterion { id: 3, title: "word-count identities", budget: None, long: false, run: word_counts },
        Criterion { id: 4, title: "optimal network fixtures", budget: Some(Duration::from_secs(1)), long: false, run: optimal_fixtures },
        Criterion { id: 5, title: "small instances SAT", budget: minutes(10), long: false, run: sat_side },
        Criterion { id: 6, title: "small instances UNSAT", budget: minutes(10), long: false, run: unsat_side },
        Criterion { id: 7, title: "10 to 12 channel optima", budget: None, long: true, run: extended_claims },
        Criterion { id: 8, title: "cardinality truth tables m<=10", budget: minutes(1), long: false, run: cardinality },
        Criterion { id: 9, title: "property suites", budget: None, long: false, run: properties },
    ];
    let mut failed = 0;
    for c in criteria {
        if c.long && !long {
            println!("[SKIP] {}. {} (long-running; pass --include-ignored or set SORTNET_ACCEPTANCE_LONG=1)", c.id, c.title);
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = started.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {:.1}s, budget {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64())),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("[PASS] {}. {} ({:.2}s): {detail}", c.id, c.title, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}. {} ({:.2}s): {why}", c.id, c.title, elapsed.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
