//! Monte Carlo trials, m-sweeps, the isolated-set statistic and the
//! threshold constants.
//!
//! Seeds: trial `i` of a run with master seed `s` uses
//! `derive_seed(s, i, "trial")` for its random edges and
//! `derive_seed(s, i, "instance")` for a random host. Both are persisted in
//! every [`TrialResult`], so any certificate can be regenerated from them.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directed::{self, verify_directed_hamilton_cycle};
use crate::error::{Error, Result};
use crate::generators::{complete_bipartite, dense_small_alpha, small_side, Instance, InstanceFamily, InstanceSpec};
use crate::graph::{Digraph, Edge, UndirectedGraph, Vertex};
use crate::merge::{cycle_partition, merge_run, CycleMode, EXACT_CYCLE_MAX_N};
use crate::rotation::{sprinkle, verify_hamilton_cycle};
use crate::sample::{derive_seed, EdgeStream, Ground, SampleMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Thm1a,
    Thm2,
    Thm3,
    Lowerbound1b,
    Lowerbound3b,
}

impl Pipeline {
    pub fn directed(self) -> bool {
        matches!(self, Pipeline::Thm3 | Pipeline::Lowerbound3b)
    }
}

/// One experiment. Unset numeric fields take the defaults of
/// [`threshold_constants`] at `d = instance.density`:
///
/// * `thm1a`: `m` is `|R1|` (default `ceil(30 theta n)`), `budget` caps the
///   sprinkled edges (default `13 n`).
/// * `thm2`: `m` is the merge budget (required).
/// * `thm3`: `rho1`, `rho2` default to `(15 + 6 theta) / d` and `5 / d^2`.
/// * `lowerbound1b` / `lowerbound3b`: `m` sets the Bernoulli rate (default
///   `theta n / 3`); `full_attempt` also runs a graph-only Hamilton search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub pipeline: Pipeline,
    pub instance: InstanceSpec,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub rho1: Option<f64>,
    #[serde(default)]
    pub rho2: Option<f64>,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub full_attempt: bool,
    /// Keep Hamilton cycles in the results.
    #[serde(default)]
    pub keep_certificates: bool,
}

impl TrialConfig {
    pub fn new(pipeline: Pipeline, family: InstanceFamily, n: usize, d: f64) -> Self {
        Self {
            pipeline,
            instance: InstanceSpec {
                family,
                n,
                density: d,
                seed: 0,
            },
            m: None,
            rho1: None,
            rho2: None,
            trials: 1,
            master_seed: 0,
            budget: None,
            full_attempt: false,
            keep_certificates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |field, msg: &str| Err(Error::Config { field, msg: msg.into() });
        let inst = &self.instance;
        if self.pipeline.directed() != inst.is_directed() {
            return cfg("instance.family", "family does not match the pipeline's graph type");
        }
        let d = inst.density;
        if !(d > 0.0 && d < 1.0) {
            return cfg("instance.density", "must lie in (0, 1)");
        }
        if inst.n < 3 {
            return cfg("instance.n", "must be at least 3");
        }
        match self.pipeline {
            Pipeline::Thm1a if d > 0.5 => cfg("instance.density", "thm1a needs d <= 1/2"),
            Pipeline::Thm2 if self.m.is_none() => cfg("m", "thm2 needs a merge budget"),
            Pipeline::Lowerbound1b | Pipeline::Lowerbound3b => {
                let want = if self.pipeline.directed() {
                    InstanceFamily::BidirectedCompleteBipartite
                } else {
                    InstanceFamily::CompleteBipartite
                };
                if inst.family != want {
                    return cfg(
                        "instance.family",
                        "lower-bound pipelines use the complete bipartite host",
                    );
                }
                if d > 0.1 {
                    return cfg("instance.density", "lower-bound pipelines need d <= 1/10");
                }
                Ok(())
            }
            Pipeline::Thm3 if self.rho1.is_some_and(|r| r < 0.0) => cfg("rho1", "must be non-negative"),
            Pipeline::Thm3 if self.rho2.is_some_and(|r| r < 0.0) => cfg("rho2", "must be non-negative"),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: u64,
    pub trial_seed: u64,
    pub instance_seed: u64,
    /// A Hamilton cycle was found and verified.
    pub success: bool,
    /// Random edges consumed after the first batch: sprinkled edges
    /// (`thm1a`), merge-round edges (`thm2`), closure arcs (`thm3`).
    pub edges_consumed: u64,
    /// Size of the first random batch (`R1`, or the Bernoulli sample of the
    /// lower-bound pipelines).
    pub r1_edges: u64,
    pub phase_costs: Vec<u64>,
    pub failure_stage: Option<String>,
    /// Cycles in the initial partition or cover.
    pub cycles: Option<usize>,
    /// `|I|` of the lower-bound pipelines.
    pub isolated: Option<u64>,
    /// `|I| > |A|`.
    pub witness: Option<bool>,
    /// Whether a dense small-α instance met `alpha < d^2 n / 2`.
    pub accepted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<Vertex>>,
    #[serde(skip)]
    pub wall_time: f64,
}

impl TrialResult {
    fn new(index: u64, master: u64) -> Self {
        Self {
            index,
            trial_seed: derive_seed(master, index, "trial"),
            instance_seed: derive_seed(master, index, "instance"),
            success: false,
            edges_consumed: 0,
            r1_edges: 0,
            phase_costs: Vec::new(),
            failure_stage: None,
            cycles: None,
            isolated: None,
            witness: None,
            accepted: None,
            certificate: None,
            wall_time: 0.0,
        }
    }

    /// Records a certificate only if it verifies against `check`.
    fn certify(&mut self, cycle: Option<Vec<Vertex>>, check: impl FnOnce(&[Vertex]) -> bool, keep: bool) {
        match cycle {
            Some(c) if check(&c) => {
                self.success = true;
                if keep {
                    self.certificate = Some(c);
                }
            }
            Some(_) => self.failure_stage = Some("certificate_rejected".into()),
            None => {}
        }
    }
}

fn with_edges(g: &UndirectedGraph, edges: &[Edge]) -> UndirectedGraph {
    let mut out = g.clone();
    for &(u, v) in edges {
        out.add_edge(u, v);
    }
    out
}

fn with_arcs(d: &Digraph, arcs: &[Edge]) -> Digraph {
    let mut out = d.clone();
    for &(u, v) in arcs {
        out.add_arc(u, v);
    }
    out
}

fn build(config: &TrialConfig, instance_seed: u64, host: Option<&Instance>) -> Result<Instance> {
    if let Some(h) = host {
        return Ok(h.clone());
    }
    InstanceSpec {
        seed: instance_seed,
        ..config.instance.clone()
    }
    .build()
}

pub struct Thm1aRun {
    /// `H ∪ R1`.
    pub g1: UndirectedGraph,
    pub r1: Vec<Edge>,
    pub outcome: crate::rotation::SprinkleOutcome,
}

/// `R1`: `r1_size` distinct non-edges of `H`; then the sprinkling process on
/// `H ∪ R1` reading non-edges of `H` with replacement, at most `budget`.
pub fn thm1a_process(h: &UndirectedGraph, r1_size: u64, budget: u64, seed: u64) -> Result<Thm1aRun> {
    let r1 = EdgeStream::new(
        Ground::Edges(h),
        SampleMode::ExactM(r1_size),
        derive_seed(seed, 0, "r1"),
    )?
    .collect_all();
    let g1 = with_edges(h, &r1);
    let mut stream = EdgeStream::replacement(Ground::Edges(h), derive_seed(seed, 0, "stream"));
    let outcome = sprinkle(&g1, &mut stream, budget);
    Ok(Thm1aRun { g1, r1, outcome })
}

/// Runs one trial; deterministic in `(config, index)`.
pub fn run_trial(config: &TrialConfig, index: u64) -> Result<TrialResult> {
    run_trial_on(config, index, None)
}

/// [`run_trial`] on a fixed host instead of one built from
/// `config.instance`. Lower-bound pipelines always use `K_{A,B}`.
pub fn run_trial_on(config: &TrialConfig, index: u64, host: Option<&Instance>) -> Result<TrialResult> {
    let start = Instant::now();
    let mut r = TrialResult::new(index, config.master_seed);
    let n = config.instance.n;
    let d = config.instance.density;
    let k = threshold_constants(d.min(0.5))?;
    let keep = config.keep_certificates;
    let seed = r.trial_seed;
    match config.pipeline {
        Pipeline::Thm1a => {
            let Instance::Undirected(h) = build(config, r.instance_seed, host)? else {
                unreachable!()
            };
            let r1_size = config
                .m
                .unwrap_or((30.0 * k.theta * n as f64).ceil() as u64)
                .min(h.complement_size());
            let budget = config.budget.unwrap_or(13 * n as u64);
            let Thm1aRun { g1, outcome: out, .. } = thm1a_process(&h, r1_size, budget, seed)?;
            r.r1_edges = r1_size;
            r.edges_consumed = out.edges_consumed;
            r.phase_costs = out.phase_costs;
            if !out.hamiltonian {
                r.failure_stage = Some("budget".into());
            }
            let full = with_edges(&g1, &out.consumed);
            r.certify(out.cycle, |c| verify_hamilton_cycle(&full, c), keep);
        }
        Pipeline::Thm2 => {
            let spec = InstanceSpec {
                seed: r.instance_seed,
                ..config.instance.clone()
            };
            let (h, d) = if let Some(Instance::Undirected(h)) = host {
                (h.clone(), h.min_degree() as f64 / n as f64)
            } else if spec.family == InstanceFamily::DenseSmallAlpha {
                let inst = dense_small_alpha(n, spec.density, spec.seed)?;
                r.accepted = inst.alpha_exact.then(|| inst.hypothesis_holds());
                let d = inst.d;
                (inst.graph, d)
            } else {
                let Instance::Undirected(h) = spec.build()? else {
                    unreachable!()
                };
                (h, d)
            };
            let mode = if n <= EXACT_CYCLE_MAX_N {
                CycleMode::Exact
            } else {
                CycleMode::Heuristic
            };
            let partition = if d > 0.0 {
                Some(cycle_partition(&h, d, mode)?)
            } else {
                None
            };
            match partition.filter(|p| p.is_complete()) {
                None => r.failure_stage = Some("partition".into()),
                Some(p) => {
                    r.cycles = Some(p.cycles.len());
                    let out = merge_run(&h, &p, config.m.unwrap(), seed)?;
                    r.edges_consumed = out.consumed.len() as u64;
                    r.phase_costs = vec![out.case1, out.case2, out.case3];
                    if let Some(case) = out.failure {
                        r.failure_stage = Some(serde_json::to_value(case)?.as_str().unwrap().to_string());
                    }
                    let full = with_edges(&h, &out.consumed);
                    r.certify(out.cycle, |c| verify_hamilton_cycle(&full, c), keep);
                }
            }
        }
        Pipeline::Thm3 => {
            let Instance::Directed(h) = build(config, r.instance_seed, host)? else {
                unreachable!()
            };
            let rho1 = config.rho1.unwrap_or(k.rho1);
            let rho2 = config.rho2.unwrap_or(k.rho2);
            let out = directed::hamilton(&h, d, seed, rho1, rho2);
            r.r1_edges = out.r1.len() as u64;
            r.edges_consumed = out.r2_consumed();
            r.phase_costs = out.phases.iter().map(|p| p.stream_cost).collect();
            r.cycles = (out.initial_cycles > 0).then_some(out.initial_cycles);
            if let Some(stage) = out.failure {
                r.failure_stage = Some(serde_json::to_value(stage)?.as_str().unwrap().to_string());
            }
            let full = with_arcs(&with_arcs(&h, &out.r1), &out.consumed);
            r.certify(out.cycle, |c| verify_directed_hamilton_cycle(&full, c), keep);
        }
        Pipeline::Lowerbound1b | Pipeline::Lowerbound3b => {
            let directed = config.pipeline.directed();
            let m = config.m.map_or(k.m_lower_1b * n as f64, |m| m as f64);
            let p = bernoulli_rate(n, d, m, directed)?;
            let a = small_side(n, d);
            let host = complete_bipartite(n, d)?;
            let dhost = Digraph::bidirected(&host);
            let ground = if directed {
                Ground::Arcs(&dhost)
            } else {
                Ground::Edges(&host)
            };
            let sample =
                EdgeStream::new(ground, SampleMode::Bernoulli(p), derive_seed(seed, 0, "bernoulli"))?.collect_all();
            let isolated = isolated_in_b(n, a, &sample);
            r.r1_edges = sample.len() as u64;
            r.isolated = Some(isolated);
            r.witness = Some(isolated > a as u64);
            if config.full_attempt {
                if directed {
                    let g = with_arcs(&dhost, &sample);
                    let out = directed::hamilton(&g, d, seed, 0.0, 0.0);
                    r.cycles = (out.initial_cycles > 0).then_some(out.initial_cycles);
                    if let Some(stage) = out.failure {
                        r.failure_stage = Some(serde_json::to_value(stage)?.as_str().unwrap().to_string());
                    }
                    r.certify(out.cycle, |c| verify_directed_hamilton_cycle(&g, c), keep);
                } else {
                    let g = with_edges(&host, &sample);
                    let mut stream = EdgeStream::replacement(Ground::Edges(&g), derive_seed(seed, 0, "stream"));
                    let out = sprinkle(&g, &mut stream, 0);
                    if !out.hamiltonian {
                        r.failure_stage = Some("budget".into());
                    }
                    r.certify(out.cycle, |c| verify_hamilton_cycle(&g, c), keep);
                }
            }
        }
    }
    r.wall_time = start.elapsed().as_secs_f64();
    Ok(r)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config {
            field: "workers",
            msg: e.to_string(),
        })
}

/// Runs every trial on `workers` threads; results come back in trial order.
pub fn run_trials(config: &TrialConfig, workers: usize) -> Result<Vec<TrialResult>> {
    run_trials_on(config, workers, None)
}

pub fn run_trials_on(config: &TrialConfig, workers: usize, host: Option<&Instance>) -> Result<Vec<TrialResult>> {
    config.validate()?;
    if let Some(h) = host {
        let (n, directed) = match h {
            Instance::Undirected(g) => (g.n(), false),
            Instance::Directed(d) => (d.n(), true),
        };
        if n != config.instance.n || directed != config.pipeline.directed() {
            return Err(Error::Config {
                field: "instance",
                msg: "host does not match the pipeline or n".into(),
            });
        }
    }
    pool(workers)?.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial_on(config, i, host))
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Mean `edges_consumed` over successful trials.
    pub mean_consumed: f64,
    pub failures: BTreeMap<String, u64>,
}

pub fn summarize(results: &[TrialResult]) -> TrialSummary {
    let ok: Vec<&TrialResult> = results.iter().filter(|r| r.success).collect();
    let mut failures = BTreeMap::new();
    for r in results {
        if let Some(s) = &r.failure_stage {
            *failures.entry(s.clone()).or_insert(0) += 1;
        }
    }
    TrialSummary {
        trials: results.len() as u64,
        successes: ok.len() as u64,
        success_rate: if results.is_empty() {
            0.0
        } else {
            ok.len() as f64 / results.len() as f64
        },
        mean_consumed: ok.iter().map(|r| r.edges_consumed as f64).sum::<f64>() / ok.len() as f64,
        failures,
    }
}

/// `|I|`: vertices of `B = a..n` incident to no sampled pair.
fn isolated_in_b(n: usize, a: usize, sample: &[Edge]) -> u64 {
    let mut touched = vec![false; n];
    for &(u, v) in sample {
        touched[u] = true;
        touched[v] = true;
    }
    touched[a..].iter().filter(|&&t| !t).count() as u64
}

/// `p = 2m / ((d^2 + (1-d)^2) n^2)`, or `m / (..)` for digraphs.
pub fn bernoulli_rate(n: usize, d: f64, m: f64, directed: bool) -> Result<f64> {
    let scale = if directed { 1.0 } else { 2.0 };
    let p = scale * m / ((d * d + (1.0 - d) * (1.0 - d)) * (n * n) as f64);
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("rate {p} is not a probability")));
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Rate {
    M(f64),
    P(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolatedStat {
    pub p: f64,
    pub trials: u64,
    pub mean: f64,
    /// `(1-d) n (1-p)^{(1-d) n - 1}`, or exponent `2 (1-d) n - 2` for
    /// digraphs.
    pub formula: f64,
    pub std_err: f64,
    /// `(mean - formula) / std_err`; zero when both agree exactly.
    pub z: f64,
    /// Fraction of trials with `|I| > |A|`.
    pub witness_fraction: f64,
}

/// Samples the Bernoulli complement of `K_{A,B}` (bidirected when
/// `directed`) and counts the untouched vertices of `B`.
pub fn isolated_set_stat(n: usize, d: f64, rate: Rate, trials: u64, seed: u64, directed: bool) -> Result<IsolatedStat> {
    let p = match rate {
        Rate::M(m) => bernoulli_rate(n, d, m, directed)?,
        Rate::P(p) if (0.0..=1.0).contains(&p) => p,
        Rate::P(p) => return Err(Error::Domain(format!("p = {p} not in [0, 1]"))),
    };
    let a = small_side(n, d);
    let host = complete_bipartite(n, d)?;
    let dhost = Digraph::bidirected(&host);
    let counts: Vec<u64> = (0..trials)
        .map(|i| {
            let ground = if directed {
                Ground::Arcs(&dhost)
            } else {
                Ground::Edges(&host)
            };
            let s = EdgeStream::new(ground, SampleMode::Bernoulli(p), derive_seed(seed, i, "isolated"))
                .expect("p checked")
                .collect_all();
            isolated_in_b(n, a, &s)
        })
        .collect();
    let t = trials as f64;
    let mean = counts.iter().sum::<u64>() as f64 / t;
    let var = if trials > 1 {
        counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (t - 1.0)
    } else {
        0.0
    };
    let b = (1.0 - d) * n as f64;
    let exponent = if directed { 2.0 * b - 2.0 } else { b - 1.0 };
    let formula = b * (1.0 - p).powf(exponent);
    let std_err = (var / t).sqrt();
    let diff = mean - formula;
    let z = if diff.abs() < 1e-9 {
        0.0
    } else if std_err > 0.0 {
        diff / std_err
    } else {
        f64::INFINITY.copysign(diff)
    };
    Ok(IsolatedStat {
        p,
        trials,
        mean,
        formula,
        std_err,
        z,
        witness_fraction: counts.iter().filter(|&&c| c > a as u64).count() as f64 / t,
    })
}

/// Multiples of `n` are stored as coefficients: `m_upper_1a = (30 theta +
/// 13)`, `m_lower_1b = theta / 3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConstants {
    pub d: f64,
    pub theta: f64,
    pub m_upper_1a: f64,
    pub m_lower_1b: f64,
    pub c_star: f64,
    pub rho1: f64,
    pub rho2: f64,
}

pub fn threshold_constants(d: f64) -> Result<ThresholdConstants> {
    if !(d > 0.0 && d <= 0.5) {
        return Err(Error::Domain(format!("need 0 < d <= 1/2, got d = {d}")));
    }
    let theta = (1.0 / d).ln();
    Ok(ThresholdConstants {
        d,
        theta,
        m_upper_1a: 30.0 * theta + 13.0,
        m_lower_1b: theta / 3.0,
        c_star: (d * d + (1.0 - d) * (1.0 - d)) * (1.0 / d - 1.0).ln() / (2.0 * (1.0 - d)),
        rho1: (15.0 + 6.0 * theta) / d,
        rho2: 5.0 / (d * d),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: u64,
    pub trials: u64,
    pub success_rate: f64,
    /// Mean process length over trials that succeeded by `m`.
    pub mean_z: f64,
    pub mean_isolated: Option<f64>,
}

struct SeedPath {
    /// Stream edges the sprinkling process used before certifying, if it
    /// did within the largest `m`.
    z: Option<u64>,
    /// Index of the first prefix edge touching each `B` vertex.
    first_touch: Vec<u64>,
}

/// For each seed, one uniformly random ordering of the complement of the
/// host: the edges at `m` are its first `m` entries, so samples nest. Success
/// at `m` means the sprinkling process on `H` reading that ordering
/// certified a Hamilton cycle within its first `m` edges, which is monotone
/// in `m` for each seed. Supports `thm1a` and `lowerbound1b`; the latter
/// also reports `mean_isolated`.
pub fn sweep(config: &TrialConfig, m_values: &[u64], workers: usize) -> Result<Vec<SweepRow>> {
    if !matches!(config.pipeline, Pipeline::Thm1a | Pipeline::Lowerbound1b) {
        return Err(Error::Config {
            field: "pipeline",
            msg: "sweeps support thm1a and lowerbound1b".into(),
        });
    }
    if m_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config {
            field: "m",
            msg: "m values must be ascending".into(),
        });
    }
    config.validate()?;
    let Some(&m_max) = m_values.last() else {
        return Ok(Vec::new());
    };
    let n = config.instance.n;
    let a = small_side(n, config.instance.density);
    let isolated = config.pipeline == Pipeline::Lowerbound1b;
    let per_seed = |i: u64| -> Result<SeedPath> {
        let seed = derive_seed(config.master_seed, i, "trial");
        let Instance::Undirected(h) = build(config, derive_seed(config.master_seed, i, "instance"), None)? else {
            unreachable!()
        };
        let cap = m_max.min(h.complement_size());
        let order_seed = derive_seed(seed, 0, "order");
        let mut stream = EdgeStream::new(Ground::Edges(&h), SampleMode::ExactM(cap), order_seed)?;
        let out = sprinkle(&h, &mut stream, cap);
        let mut z = None;
        if let Some(c) = &out.cycle {
            let full = with_edges(&h, &out.consumed);
            if verify_hamilton_cycle(&full, c) {
                z = Some(out.edges_consumed);
            }
        }
        let mut first_touch = Vec::new();
        if isolated {
            first_touch = vec![u64::MAX; n];
            let prefix = EdgeStream::new(Ground::Edges(&h), SampleMode::ExactM(cap), order_seed)?;
            for (t, (u, v)) in prefix.enumerate() {
                for w in [u, v] {
                    first_touch[w] = first_touch[w].min(t as u64);
                }
            }
        }
        Ok(SeedPath { z, first_touch })
    };
    let paths: Vec<SeedPath> =
        pool(workers)?.install(|| (0..config.trials).into_par_iter().map(per_seed).collect::<Result<_>>())?;
    let t = config.trials as f64;
    Ok(m_values
        .iter()
        .map(|&m| {
            let zs: Vec<u64> = paths.iter().filter_map(|p| p.z.filter(|&z| z <= m)).collect();
            let mean_isolated = isolated.then(|| {
                paths
                    .iter()
                    .map(|p| p.first_touch[a..].iter().filter(|&&f| f >= m).count() as f64)
                    .sum::<f64>()
                    / t
            });
            SweepRow {
                m,
                trials: config.trials,
                success_rate: if config.trials == 0 { 0.0 } else { zs.len() as f64 / t },
                mean_z: zs.iter().sum::<u64>() as f64 / zs.len() as f64,
                mean_isolated,
            }
        })
        .collect())
}

/// `%g`-style formatting with six significant digits; `nan` for NaN.
pub fn fmt6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    // Rounding can carry into the next decade; reformat from the result.
    let sci = format!("{x:.5e}");
    let (mant, e) = sci.split_once('e').unwrap();
    let e: i32 = e.parse().unwrap();
    if (-4..6).contains(&e) {
        trim(format!("{:.*}", (5 - e).max(0) as usize, x))
    } else {
        format!(
            "{}e{}{:02}",
            trim(mant.to_string()),
            if e < 0 { '-' } else { '+' },
            e.abs()
        )
    }
}

pub const SWEEP_HEADER: &str = "m,trials,success_rate,mean_Z,mean_isolated";

pub fn write_sweep_csv(rows: &[SweepRow], mut w: impl Write) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.m,
            r.trials,
            fmt6(r.success_rate),
            fmt6(r.mean_z),
            r.mean_isolated.map(fmt6).unwrap_or_default()
        )?;
    }
    Ok(())
}

pub const TRIAL_HEADER: &str =
    "index,trial_seed,instance_seed,success,edges_consumed,r1_edges,cycles,isolated,witness,accepted,failure_stage,phase_costs";

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn write_trials_csv(results: &[TrialResult], mut w: impl Write) -> Result<()> {
    writeln!(w, "{TRIAL_HEADER}")?;
    for r in results {
        let costs: Vec<String> = r.phase_costs.iter().map(u64::to_string).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.trial_seed,
            r.instance_seed,
            r.success,
            r.edges_consumed,
            r.r1_edges,
            opt(&r.cycles),
            opt(&r.isolated),
            opt(&r.witness),
            opt(&r.accepted),
            opt(&r.failure_stage),
            costs.join(";")
        )?;
    }
    Ok(())
}

pub fn write_jsonl<T: Serialize>(items: &[T], mut w: impl Write) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn constants() {
        let k = threshold_constants(0.5).unwrap();
        assert!((k.theta - 0.693147).abs() < 1e-6);
        let k = threshold_constants(0.1).unwrap();
        assert!((k.theta - 2.302585).abs() < 1e-6);
        assert!((k.m_upper_1a - 82.0776).abs() < 1e-4);
        assert!((k.m_lower_1b - 0.767528).abs() < 1e-6);
        assert!((k.c_star - 0.82 / 1.8 * 9f64.ln()).abs() < 1e-12);
        assert!(threshold_constants(0.6).is_err());
        assert!(threshold_constants(0.0).is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt6(0.5), "0.5");
        assert_eq!(fmt6(1.0), "1");
        assert_eq!(fmt6(2.0 / 3.0), "0.666667");
        assert_eq!(fmt6(123456.7), "123457");
        assert_eq!(fmt6(999999.7), "1e+06");
        assert_eq!(fmt6(1234567.0), "1.23457e+06");
        assert_eq!(fmt6(0.0000123), "1.23e-05");
        assert_eq!(fmt6(f64::NAN), "nan");
        assert_eq!(fmt6(0.0), "0");
    }

    #[test]
    fn isolated_extremes() {
        let s = isolated_set_stat(100, 0.2, Rate::M(0.0), 20, 1, false).unwrap();
        assert_eq!((s.mean, s.formula, s.z), (80.0, 80.0, 0.0));
        let s = isolated_set_stat(100, 0.2, Rate::P(1.0), 5, 1, false).unwrap();
        assert_eq!((s.mean, s.formula), (0.0, 0.0));
        let s = isolated_set_stat(100, 0.2, Rate::P(1.0), 5, 1, true).unwrap();
        assert_eq!(s.mean, 0.0);
        let s = isolated_set_stat(100, 0.2, Rate::M(50.0), 1, 1, false).unwrap();
        assert!((s.p - 100.0 / 6800.0).abs() < 1e-15);
        assert!((s.formula - 80.0 * (1.0 - s.p).powi(79)).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip_and_validation() {
        let mut c = TrialConfig::new(Pipeline::Thm3, InstanceFamily::RandomMinDegreeDigraph, 40, 0.3);
        c.rho1 = Some(1.5);
        let back: TrialConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        c.instance.family = InstanceFamily::CompleteBipartite;
        assert!(matches!(
            c.validate(),
            Err(Error::Config {
                field: "instance.family",
                ..
            })
        ));
        let c = TrialConfig::new(Pipeline::Lowerbound1b, InstanceFamily::CompleteBipartite, 100, 0.2);
        assert!(matches!(
            c.validate(),
            Err(Error::Config {
                field: "instance.density",
                ..
            })
        ));
        let c = TrialConfig::new(Pipeline::Thm2, InstanceFamily::DenseSmallAlpha, 20, 0.7);
        assert!(matches!(c.validate(), Err(Error::Config { field: "m", .. })));
    }

    #[test]
    fn zero_trials_is_empty() {
        let mut c = TrialConfig::new(Pipeline::Thm1a, InstanceFamily::CompleteBipartite, 10, 0.3);
        c.trials = 0;
        assert!(run_trials(&c, 2).unwrap().is_empty());
        let rows = sweep(&c, &[5, 10], 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].success_rate, 0.0);
        let mut buf = Vec::new();
        write_sweep_csv(&sweep(&c, &[], 1).unwrap(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{SWEEP_HEADER}\n"));
    }

    #[test]
    fn toy_thm1a_certificates_check_out() {
        let mut c = TrialConfig::new(Pipeline::Thm1a, InstanceFamily::CompleteBipartite, 10, 0.3);
        c.trials = 20;
        c.m = Some(1000);
        c.keep_certificates = true;
        let results = run_trials(&c, 2).unwrap();
        assert_eq!(results.len(), 20);
        for r in &results {
            assert!(r.success, "{r:?}");
            let g = crate::generators::complete_bipartite(10, 0.3).unwrap();
            // m exceeds the complement, so H ∪ R1 is complete.
            assert_eq!(r.r1_edges, g.complement_size());
            let full = UndirectedGraph::from_edge_list(
                10,
                &(0..10)
                    .flat_map(|u| (u + 1..10).map(move |v| (u, v)))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            assert!(verify_hamilton_cycle(&full, r.certificate.as_ref().unwrap()));
        }
    }
}
