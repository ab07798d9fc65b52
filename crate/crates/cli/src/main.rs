use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sprinkle_core::directed::verify_directed_hamilton_cycle;
use sprinkle_core::generators::{dense_small_alpha, Instance, InstanceFamily};
use sprinkle_core::harness::{
    self, fmt6, isolated_set_stat, run_trials_on, summarize, threshold_constants, write_jsonl, write_sweep_csv,
    write_trials_csv, Pipeline, Rate, TrialConfig,
};
use sprinkle_core::io::{read_edge_list, write_edge_list};
use sprinkle_core::merge::{decompose_and_merge, CycleMode};
use sprinkle_core::oracles::{brute_hamiltonian, brute_hamiltonian_digraph, exact_independence};

#[derive(Parser)]
#[command(
    name = "sprinkle",
    version,
    about = "Hamilton cycles in dense graphs plus random edges"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Thm1a,
    Thm2,
    Thm3,
    Lowerbound1b,
    Lowerbound3b,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Thm1a => Pipeline::Thm1a,
            PipelineArg::Thm2 => Pipeline::Thm2,
            PipelineArg::Thm3 => Pipeline::Thm3,
            PipelineArg::Lowerbound1b => Pipeline::Lowerbound1b,
            PipelineArg::Lowerbound3b => Pipeline::Lowerbound3b,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    CompleteBipartite,
    BidirectedCompleteBipartite,
    RandomMinDegree,
    RandomMinDegreeDigraph,
    DenseSmallAlpha,
}

impl From<FamilyArg> for InstanceFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::CompleteBipartite => InstanceFamily::CompleteBipartite,
            FamilyArg::BidirectedCompleteBipartite => InstanceFamily::BidirectedCompleteBipartite,
            FamilyArg::RandomMinDegree => InstanceFamily::RandomMinDegree,
            FamilyArg::RandomMinDegreeDigraph => InstanceFamily::RandomMinDegreeDigraph,
            FamilyArg::DenseSmallAlpha => InstanceFamily::DenseSmallAlpha,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Host graph as an edge list.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = PipelineArg::Thm1a)]
    pipeline: PipelineArg,
    /// Defaults to the pipeline's natural host.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2: Option<f64>,
    /// Lower-bound pipelines: also attempt a Hamilton cycle.
    #[arg(long)]
    full_attempt: bool,
    /// Read the whole configuration from a JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Independent trials of one pipeline.
    Trial(TrialArgs),
    /// Success rate against the number of random edges.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = PipelineArg::Thm1a)]
        pipeline: PipelineArg,
        /// Ascending, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u64>,
    },
    /// Untouched vertices of B in K_{A,B} plus Bernoulli random edges.
    Lowerbound {
        #[command(flatten)]
        common: Common,
        /// Defaults to theta n / 3.
        #[arg(long, conflicts_with = "p")]
        m: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        directed: bool,
    },
    /// Digraph pipeline trials.
    Digraph(TrialArgs),
    /// Cycle partition and merge.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// Edge probability of the generated instance.
        #[arg(long, default_value_t = 0.75)]
        q: f64,
        #[arg(long, required = true)]
        m: u64,
        #[arg(long)]
        heuristic: bool,
    },
    /// Exact references for a small instance.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Threshold constants for a density.
    Constants {
        #[command(flatten)]
        common: Common,
    },
    /// Write a generated instance as an edge list.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: FamilyArg,
    },
}

fn output(common: &Common) -> Result<Box<dyn Write>> {
    Ok(match &common.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &PathBuf) -> Result<Instance> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_edge_list(BufReader::new(f)).with_context(|| format!("in {}", path.display()))
}

fn instance_n(i: &Instance) -> usize {
    match i {
        Instance::Undirected(g) => g.n(),
        Instance::Directed(d) => d.n(),
    }
}

fn need<T>(x: Option<T>, flag: &str) -> Result<T> {
    x.with_context(|| format!("--{flag} is required"))
}

fn write_one<T: Serialize>(
    common: &Common,
    item: &T,
    csv: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    let mut w = output(common)?;
    match common.format {
        Format::Jsonl => write_jsonl(std::slice::from_ref(item), &mut w)?,
        Format::Csv => csv(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn trial(args: TrialArgs, digraph: bool) -> Result<()> {
    let c = &args.common;
    let host = c.instance.as_ref().map(load).transpose()?;
    let config = match &args.config {
        Some(p) => serde_json::from_reader(BufReader::new(File::open(p)?))
            .with_context(|| format!("bad config {}", p.display()))?,
        None => {
            let pipeline: Pipeline = if digraph { Pipeline::Thm3 } else { args.pipeline.into() };
            let family = args.family.map(InstanceFamily::from).unwrap_or(match pipeline {
                Pipeline::Thm1a | Pipeline::Lowerbound1b => InstanceFamily::CompleteBipartite,
                Pipeline::Thm2 => InstanceFamily::DenseSmallAlpha,
                Pipeline::Thm3 => InstanceFamily::RandomMinDegreeDigraph,
                Pipeline::Lowerbound3b => InstanceFamily::BidirectedCompleteBipartite,
            });
            let n = match (&host, c.n) {
                (Some(h), _) => instance_n(h),
                (None, n) => need(n, "n")?,
            };
            let mut config = TrialConfig::new(pipeline, family, n, need(c.d, "d")?);
            config.m = args.m;
            config.budget = args.budget;
            config.rho1 = args.rho1;
            config.rho2 = args.rho2;
            config.trials = c.trials;
            config.master_seed = c.seed;
            config.full_attempt = args.full_attempt;
            config
        }
    };
    let results = run_trials_on(&config, c.workers, host.as_ref())?;
    let s = summarize(&results);
    eprintln!(
        "{} trials, {} successes ({}), failures {:?}",
        s.trials,
        s.successes,
        fmt6(s.success_rate),
        s.failures
    );
    let mut w = output(c)?;
    match c.format {
        Format::Csv => write_trials_csv(&results, &mut w)?,
        Format::Jsonl => write_jsonl(&results, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Trial(args) => trial(args, false),
        Command::Digraph(args) => trial(args, true),
        Command::Sweep { common, pipeline, m } => {
            let pipeline: Pipeline = pipeline.into();
            let family = if pipeline.directed() {
                InstanceFamily::BidirectedCompleteBipartite
            } else {
                InstanceFamily::CompleteBipartite
            };
            let mut config = TrialConfig::new(pipeline, family, need(common.n, "n")?, need(common.d, "d")?);
            config.trials = common.trials;
            config.master_seed = common.seed;
            let rows = harness::sweep(&config, &m, common.workers)?;
            let mut w = output(&common)?;
            match common.format {
                Format::Csv => write_sweep_csv(&rows, &mut w)?,
                Format::Jsonl => write_jsonl(&rows, &mut w)?,
            }
            w.flush()?;
            Ok(())
        }
        Command::Lowerbound { common, m, p, directed } => {
            let n = need(common.n, "n")?;
            let d = need(common.d, "d")?;
            let rate = match (m, p) {
                (_, Some(p)) => Rate::P(p),
                (Some(m), None) => Rate::M(m),
                (None, None) => Rate::M(threshold_constants(d)?.m_lower_1b * n as f64),
            };
            let s = isolated_set_stat(n, d, rate, common.trials, common.seed, directed)?;
            write_one(&common, &s, |w| {
                writeln!(w, "n,d,p,trials,mean_isolated,formula,std_err,z,witness_fraction")?;
                writeln!(
                    w,
                    "{n},{},{},{},{},{},{},{},{}",
                    fmt6(d),
                    fmt6(s.p),
                    s.trials,
                    fmt6(s.mean),
                    fmt6(s.formula),
                    fmt6(s.std_err),
                    fmt6(s.z),
                    fmt6(s.witness_fraction)
                )
            })
        }
        Command::Decompose {
            common,
            q,
            m,
            heuristic,
        } => {
            let (g, d) = match &common.instance {
                Some(p) => match load(p)? {
                    Instance::Undirected(g) => {
                        let d = g.min_degree() as f64 / g.n() as f64;
                        (g, d)
                    }
                    Instance::Directed(_) => bail!("decompose needs an undirected instance"),
                },
                None => {
                    let inst = dense_small_alpha(need(common.n, "n")?, q, common.seed)?;
                    let d = inst.d;
                    (inst.graph, d)
                }
            };
            let mode = if heuristic {
                CycleMode::Heuristic
            } else {
                CycleMode::Exact
            };
            let out = decompose_and_merge(&g, d, m, mode, common.seed)?;
            write_one(&common, &out, |w| {
                writeln!(
                    w,
                    "n,d,cycles,k0,complete,hamiltonian,rounds_used,edges_consumed,failure"
                )?;
                let merge = out.merge.as_ref();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    g.n(),
                    fmt6(d),
                    out.partition.cycles.len(),
                    out.partition.k0,
                    out.partition.is_complete(),
                    out.hamiltonian(),
                    merge.map_or(0, |m| m.rounds_used),
                    merge.map_or(0, |m| m.consumed.len()),
                    merge
                        .and_then(|m| m.failure)
                        .map(|f| format!("{f:?}").to_lowercase())
                        .unwrap_or_else(|| if out.partition.is_complete() {
                            String::new()
                        } else {
                            "partition".into()
                        })
                )
            })
        }
        Command::Oracle { common } => {
            let inst = load(&need(common.instance.clone(), "instance")?)?;
            #[derive(Serialize)]
            struct Report {
                n: usize,
                hamiltonian: bool,
                cycle: Option<Vec<usize>>,
                alpha: Option<usize>,
            }
            let report = match &inst {
                Instance::Undirected(g) => {
                    let cycle = brute_hamiltonian(g)?;
                    Report {
                        n: g.n(),
                        hamiltonian: cycle.is_some(),
                        cycle,
                        alpha: Some(exact_independence(g)?),
                    }
                }
                Instance::Directed(d) => {
                    let cycle = brute_hamiltonian_digraph(d)?;
                    if let Some(c) = &cycle {
                        debug_assert!(verify_directed_hamilton_cycle(d, c));
                    }
                    Report {
                        n: d.n(),
                        hamiltonian: cycle.is_some(),
                        cycle,
                        alpha: None,
                    }
                }
            };
            write_one(&common, &report, |w| {
                writeln!(w, "n,hamiltonian,alpha")?;
                writeln!(
                    w,
                    "{},{},{}",
                    report.n,
                    report.hamiltonian,
                    report.alpha.map(|a| a.to_string()).unwrap_or_default()
                )
            })
        }
        Command::Constants { common } => {
            let k = threshold_constants(need(common.d, "d")?)?;
            write_one(&common, &k, |w| {
                writeln!(w, "d,theta,m_upper_1a,m_lower_1b,c_star,rho1,rho2")?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    fmt6(k.d),
                    fmt6(k.theta),
                    fmt6(k.m_upper_1a),
                    fmt6(k.m_lower_1b),
                    fmt6(k.c_star),
                    fmt6(k.rho1),
                    fmt6(k.rho2)
                )
            })
        }
        Command::Generate { common, family } => {
            let spec = sprinkle_core::generators::InstanceSpec {
                family: family.into(),
                n: need(common.n, "n")?,
                density: need(common.d, "d")?,
                seed: common.seed,
            };
            let inst = spec.build()?;
            let mut w = output(&common)?;
            write_edge_list(&inst, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
