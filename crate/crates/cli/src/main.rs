use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use sortnet::driver::{render_svg, Catalog, Mode, PrefixPolicy, Searcher};
use sortnet::encoder::{build_instance, EncodeOptions};
use sortnet::netcore::{is_sorting_network, ComparatorNetwork};
use sortnet::prefixes::{count_prefixes, generate_prefixes, sentence_of, Sentence, Variant};
use sortnet::solver::{
    decode_verified, parse_dimacs, solve, write_dimacs, Backend, SolveStatus, SolverConfig, SOLVER_ENV,
};

#[derive(Parser)]
#[command(name = "sortnet", version, about = "Search for size- and depth-optimal sorting networks with SAT")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the two-layer prefixes of n channels up to permutation.
    Prefixes {
        n: usize,
        #[arg(long, default_value = "Tprime", value_parser = parse_variant)]
        variant: Variant,
        /// Print only the count.
        #[arg(long)]
        count: bool,
    },
    /// Write the DIMACS instance for (n, d, s).
    Encode {
        #[command(flatten)]
        instance: Instance,
        /// Output file (stdout by default).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the variable map here.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Solve an instance, or a DIMACS file with --cnf.
    Solve {
        /// Channels.
        #[arg(required_unless_present = "cnf")]
        n: Option<usize>,
        /// Layers.
        #[arg(required_unless_present = "cnf")]
        d: Option<i64>,
        /// Maximum number of comparators.
        #[arg(required_unless_present = "cnf")]
        s: Option<i64>,
        #[arg(long)]
        prefix: Option<String>,
        #[command(flatten)]
        families: Families,
        /// Solve this DIMACS file and print the result in competition format.
        #[arg(long, conflicts_with_all = ["n", "prefix"])]
        cnf: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Find optimal sizes, depths or the Pareto frontier.
    Optimize {
        n: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Pareto)]
        mode: ModeArg,
        /// Depth for --mode size.
        #[arg(long, required_if_eq("mode", "size"))]
        depth: Option<usize>,
        /// Size bound for --mode depth.
        #[arg(long, required_if_eq("mode", "depth"))]
        size: Option<usize>,
        /// Deepest layer count on the frontier for --mode pareto.
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long, value_enum, default_value_t = PolicyArg::Auto)]
        prefixes: PolicyArg,
        /// JSON-lines store of earlier results.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[command(flatten)]
        families: Families,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check that a network JSON file sorts.
    Verify { network: PathBuf },
    /// Draw a network JSON file as SVG.
    Render {
        network: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Instance {
    /// Channels.
    n: usize,
    /// Layers.
    d: i64,
    /// Maximum number of comparators.
    s: i64,
    /// Fix the first two layers, e.g. "(012,0120,1221c)".
    #[arg(long)]
    prefix: Option<String>,
    #[command(flatten)]
    families: Families,
}

#[derive(Args, Clone)]
struct Families {
    /// Drop the symmetry constraints on redundant comparators.
    #[arg(long)]
    no_sigma: bool,
    /// Drop the last-layer constraints.
    #[arg(long)]
    no_last_layer: bool,
    /// Drop the per-input window constraints.
    #[arg(long)]
    no_redundant_sorts: bool,
    /// Encode every input, sorted ones included.
    #[arg(long)]
    keep_sorted_inputs: bool,
}

impl Families {
    fn options(&self) -> EncodeOptions {
        EncodeOptions {
            redundant_sorts: !self.no_redundant_sorts,
            last_layer: !self.no_last_layer,
            sigma1: !self.no_sigma,
            sigma2: !self.no_sigma,
            sigma3: !self.no_sigma,
            only_unsorted: !self.keep_sorted_inputs,
            prefix: None,
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// "builtin", "cadical", or a shell command where {} is the CNF path.
    #[arg(long, env = SOLVER_ENV)]
    solver: Option<String>,
    /// Seconds per solver call.
    #[arg(long, default_value_t = 3600.0)]
    timeout: f64,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let backend = match self.solver.as_deref().map(str::trim) {
            None | Some("") => Backend::default(),
            Some("builtin") => Backend::Builtin,
            #[cfg(feature = "cadical")]
            Some("cadical") => Backend::Cadical,
            #[cfg(not(feature = "cadical"))]
            Some("cadical") => bail!("built without the cadical feature"),
            Some(cmd) => Backend::External(cmd.to_string()),
        };
        let cfg = SolverConfig::new(backend, self.timeout);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Size,
    Depth,
    Pareto,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Auto,
    Never,
    Always,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn parse_prefix(text: Option<&str>) -> Result<Option<Sentence>> {
    text.map(|t| t.parse::<Sentence>().with_context(|| format!("bad prefix {t:?}"))).transpose()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_network(path: &Path) -> Result<ComparatorNetwork> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ComparatorNetwork::from_json(&text).with_context(|| format!("parsing network in {}", path.display()))
}

fn build(instance: &Instance) -> Result<(sortnet::encoder::CnfFormula, sortnet::encoder::VarMap)> {
    let opts = instance.families.options().with_prefix(parse_prefix(instance.prefix.as_deref())?);
    Ok(build_instance(instance.n, instance.d, instance.s, &opts)?)
}

fn competition_output(status: SolveStatus, model: Option<&[bool]>, out: &mut impl Write) -> io::Result<()> {
    match status {
        SolveStatus::Sat => writeln!(out, "s SATISFIABLE")?,
        SolveStatus::Unsat => writeln!(out, "s UNSATISFIABLE")?,
        SolveStatus::Unknown => writeln!(out, "s UNKNOWN")?,
    }
    if let Some(model) = model {
        let lits: Vec<String> =
            (1..model.len()).map(|v| if model[v] { v.to_string() } else { format!("-{v}") }).collect();
        for chunk in lits.chunks(16) {
            writeln!(out, "v {}", chunk.join(" "))?;
        }
        writeln!(out, "v 0")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Prefixes { n, variant, count } => {
            let mut out = output(None)?;
            if count {
                writeln!(out, "{}", count_prefixes(n, variant))?;
            } else {
                let set = generate_prefixes(n, variant);
                for s in &set.sentences {
                    writeln!(out, "{s}")?;
                }
                writeln!(out, "# count={}", set.len())?;
            }
        }
        Command::Encode { instance, output: path, map } => {
            let (cnf, vm) = build(&instance)?;
            info!("{} variables, {} clauses", cnf.num_vars(), cnf.num_clauses());
            let mut out = output(path.as_deref())?;
            write_dimacs(&cnf, &mut out)?;
            out.flush()?;
            if let Some(map) = map {
                let mut m = output(Some(&map))?;
                vm.write_map(&mut m)?;
                m.flush()?;
            }
        }
        Command::Solve { n, d, s, prefix, families, cnf, solver } => {
            let cfg = solver.config()?;
            let mut out = output(None)?;
            if let Some(path) = cnf {
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let formula = parse_dimacs(&text)?;
                let res = solve(&formula, &cfg)?;
                competition_output(res.status, res.model.as_deref(), &mut out)?;
                out.flush()?;
                return Ok(match res.status {
                    SolveStatus::Sat => ExitCode::from(10),
                    SolveStatus::Unsat => ExitCode::from(20),
                    SolveStatus::Unknown => ExitCode::SUCCESS,
                });
            }
            let (Some(n), Some(d), Some(s)) = (n, d, s) else {
                bail!("give <N> <D> <S> or --cnf FILE");
            };
            let instance = Instance { n, d, s, prefix, families };
            let (formula, vm) = build(&instance)?;
            let res = solve(&formula, &cfg)?;
            writeln!(out, "{} ({:.2}s, {})", res.status, res.stats.wall_time, res.stats.solver)?;
            if let Some(model) = &res.model {
                let net = decode_verified(model, &vm, instance.s as usize)?;
                writeln!(out, "{}", net.trim_trailing_empty().to_json())?;
            }
        }
        Command::Optimize { n, mode, depth, size, max_depth, prefixes, catalog, families, solver } => {
            let mode = match mode {
                ModeArg::Size => Mode::MinSizeGivenDepth(depth.context("--mode size needs --depth")?),
                ModeArg::Depth => Mode::MinDepthGivenSize(size.context("--mode depth needs --size")?),
                ModeArg::Pareto => Mode::Pareto { max_depth },
            };
            let policy = match prefixes {
                PolicyArg::Auto => PrefixPolicy::Auto,
                PolicyArg::Never => PrefixPolicy::Never,
                PolicyArg::Always => PrefixPolicy::Always,
            };
            let mut searcher = Searcher::new(solver.config()?).with_policy(policy).with_options(families.options());
            if let Some(path) = catalog {
                searcher = searcher.with_catalog(Catalog::open(&path)?);
            }
            let claim = searcher.optimize(n, mode)?;
            info!("{} solver calls", searcher.solver_calls());
            let mut out = output(None)?;
            serde_json::to_writer_pretty(&mut out, &claim)?;
            writeln!(out)?;
        }
        Command::Verify { network } => {
            let net = read_network(&network)?;
            let sorts = is_sorting_network(&net);
            println!("channels={} depth={} size={} sorting={sorts}", net.channels(), net.depth(), net.size());
            if net.depth() >= 2 {
                if let Ok(s) = sentence_of(&net.prefix(2)) {
                    println!("prefix={s}");
                }
            }
            if !sorts {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Render { network, output: path } => {
            let net = read_network(&network)?;
            let mut out = output(path.as_deref())?;
            out.write_all(render_svg(&net).as_bytes())?;
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    run(cli)
}
