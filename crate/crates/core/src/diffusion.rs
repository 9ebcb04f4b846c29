//! Independent Cascade simulation with order-independent Monte Carlo
//! aggregation, plus a node-centric discrete SIR (recovery after exactly one
//! step) used to cross-check the cascade engine.
//!
//! Conventions: the seed is activated at iteration 0 and counts toward both
//! `range` and the per-iteration activation counts, so a seed that reaches
//! nobody has `range = peak = 1` and `peak_time = 0`. Several activation
//! attempts on the same target within one iteration are independent
//! Bernoulli trials; any success activates it.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{self, ProjectRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeOutcome {
    pub range: usize,
    pub peak: usize,
    pub peak_time: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub node: NodeId,
    pub threshold: f64,
    pub runs: usize,
    pub mean_range: f64,
    pub mean_peak: f64,
    pub mean_peak_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkFamily {
    Citation,
    Social,
    Custom,
}

impl std::str::FromStr for NetworkFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "citation" => Ok(NetworkFamily::Citation),
            "social" => Ok(NetworkFamily::Social),
            "custom" => Ok(NetworkFamily::Custom),
            other => Err(Error::InvalidParameter(format!("unknown network family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub values: Vec<f64>,
    pub family: NetworkFamily,
}

impl ThresholdSet {
    pub fn citation() -> Self {
        ThresholdSet {
            values: vec![0.2, 0.3, 0.4],
            family: NetworkFamily::Citation,
        }
    }

    pub fn social() -> Self {
        ThresholdSet {
            values: vec![0.1, 0.15, 0.2],
            family: NetworkFamily::Social,
        }
    }

    /// Family defaults; `Custom` has none and must be given explicitly.
    pub fn for_family(family: NetworkFamily) -> Option<Self> {
        match family {
            NetworkFamily::Citation => Some(Self::citation()),
            NetworkFamily::Social => Some(Self::social()),
            NetworkFamily::Custom => None,
        }
    }

    pub fn custom(values: Vec<f64>) -> Result<Self> {
        let set = ThresholdSet {
            values,
            family: NetworkFamily::Custom,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter("threshold set is empty".into()));
        }
        for &p in &self.values {
            check_probability(p)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The three prediction targets derived from a simulation record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    InfluenceRange,
    InfluencePeak,
    PeakTime,
}

impl TaskId {
    pub const ALL: [TaskId; 3] = [TaskId::InfluenceRange, TaskId::InfluencePeak, TaskId::PeakTime];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::InfluenceRange => "influence_range",
            TaskId::InfluencePeak => "influence_peak",
            TaskId::PeakTime => "peak_time",
        }
    }

    pub fn value(self, record: &SimulationRecord) -> f64 {
        match self {
            TaskId::InfluenceRange => record.mean_range,
            TaskId::InfluencePeak => record.mean_peak,
            TaskId::PeakTime => record.mean_peak_time,
        }
    }
}

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .or(match s {
                "range" => Some(TaskId::InfluenceRange),
                "peak" => Some(TaskId::InfluencePeak),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidParameter(format!("unknown task {s:?}")))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")))
    }
}

/// Reusable per-worker scratch: activation stamps reset in O(1) per run.
#[derive(Debug, Default)]
pub struct CascadeWorkspace {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<NodeId>,
    next: Vec<NodeId>,
}

impl CascadeWorkspace {
    pub fn new(n: usize) -> Self {
        CascadeWorkspace {
            stamp: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    fn begin(&mut self, n: usize) {
        if self.stamp.len() != n {
            self.stamp = vec![0; n];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.frontier.clear();
        self.next.clear();
    }

    #[inline]
    fn is_marked(&self, v: NodeId) -> bool {
        self.stamp[v] == self.epoch
    }

    #[inline]
    fn mark(&mut self, v: NodeId) {
        self.stamp[v] = self.epoch;
    }
}

/// Tracks range/peak/peak-time as iterations complete.
struct Tally {
    range: usize,
    peak: usize,
    peak_time: usize,
    iteration: usize,
}

impl Tally {
    fn start() -> Self {
        Tally {
            range: 1,
            peak: 1,
            peak_time: 0,
            iteration: 0,
        }
    }

    fn step(&mut self, newly_active: usize) {
        self.iteration += 1;
        self.range += newly_active;
        if newly_active > self.peak {
            self.peak = newly_active;
            self.peak_time = self.iteration;
        }
    }

    fn finish(self) -> CascadeOutcome {
        CascadeOutcome {
            range: self.range,
            peak: self.peak,
            peak_time: self.peak_time,
        }
    }
}

pub fn run_cascade(g: &Graph, seed_node: NodeId, p: f64, rng_seed: u64) -> Result<CascadeOutcome> {
    g.check_node(seed_node)?;
    check_probability(p)?;
    let mut ws = CascadeWorkspace::new(g.n());
    let mut rng = rng::rng_for(rng_seed, &[]);
    Ok(cascade_with(g, seed_node, p, &mut rng, &mut ws))
}

/// One synchronous IC cascade. Caller validates `seed_node` and `p`.
pub fn cascade_with(
    g: &Graph,
    seed_node: NodeId,
    p: f64,
    rng: &mut ProjectRng,
    ws: &mut CascadeWorkspace,
) -> CascadeOutcome {
    ws.begin(g.n());
    ws.mark(seed_node);
    ws.frontier.push(seed_node);
    let mut tally = Tally::start();
    loop {
        let mut next = std::mem::take(&mut ws.next);
        next.clear();
        for i in 0..ws.frontier.len() {
            let u = ws.frontier[i];
            for &v in g.out_neighbors(u) {
                if !ws.is_marked(v) && rng.random::<f64>() < p {
                    ws.mark(v);
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            ws.next = next;
            break;
        }
        tally.step(next.len());
        ws.next = std::mem::replace(&mut ws.frontier, next);
    }
    tally.finish()
}

/// Discrete-time SIR with recovery after one step. Each susceptible node
/// exposed to `k` infected in-neighbours is infected with probability
/// `1 - (1 - beta)^k`, drawn once per node.
pub fn run_sir_gamma1(g: &Graph, seed_node: NodeId, beta: f64, rng_seed: u64) -> Result<CascadeOutcome> {
    g.check_node(seed_node)?;
    check_probability(beta)?;
    let mut rng = rng::rng_for(rng_seed, &[]);
    let mut scratch = SirScratch::new(g.n());
    Ok(sir_with(g, seed_node, beta, &mut rng, &mut scratch))
}

#[derive(Debug)]
pub struct SirScratch {
    state: Vec<SirState>,
    pressure: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SirState {
    Susceptible,
    Infected,
    Recovered,
}

impl SirScratch {
    pub fn new(n: usize) -> Self {
        SirScratch {
            state: vec![SirState::Susceptible; n],
            pressure: vec![0; n],
        }
    }
}

pub fn sir_with(
    g: &Graph,
    seed_node: NodeId,
    beta: f64,
    rng: &mut ProjectRng,
    scratch: &mut SirScratch,
) -> CascadeOutcome {
    scratch.state.fill(SirState::Susceptible);
    scratch.state[seed_node] = SirState::Infected;
    let mut infected = vec![seed_node];
    let mut exposed = Vec::new();
    let mut tally = Tally::start();
    while !infected.is_empty() {
        exposed.clear();
        for &u in &infected {
            for &v in g.out_neighbors(u) {
                if scratch.state[v] == SirState::Susceptible {
                    if scratch.pressure[v] == 0 {
                        exposed.push(v);
                    }
                    scratch.pressure[v] += 1;
                }
            }
        }
        for &u in &infected {
            scratch.state[u] = SirState::Recovered;
        }
        let mut newly = Vec::new();
        for &v in &exposed {
            let k = scratch.pressure[v];
            scratch.pressure[v] = 0;
            let escape = (1.0 - beta).powi(k as i32);
            if rng.random::<f64>() >= escape {
                scratch.state[v] = SirState::Infected;
                newly.push(v);
            }
        }
        if !newly.is_empty() {
            tally.step(newly.len());
        }
        infected = newly;
    }
    tally.finish()
}

/// Seed for run `run_index` of `(node, threshold_index)`.
pub fn run_seed(master_seed: u64, node: NodeId, threshold_index: usize, run_index: usize) -> u64 {
    rng::stable_hash(master_seed, &[node as u64, threshold_index as u64, run_index as u64])
}

pub fn simulate_node(
    g: &Graph,
    node: NodeId,
    p: f64,
    threshold_index: usize,
    runs: usize,
    master_seed: u64,
) -> Result<SimulationRecord> {
    g.check_node(node)?;
    check_probability(p)?;
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let mut ws = CascadeWorkspace::new(g.n());
    Ok(simulate_node_with(g, node, p, threshold_index, runs, master_seed, &mut ws))
}

fn simulate_node_with(
    g: &Graph,
    node: NodeId,
    p: f64,
    threshold_index: usize,
    runs: usize,
    master_seed: u64,
    ws: &mut CascadeWorkspace,
) -> SimulationRecord {
    // integer sums are exact, so the means do not depend on summation order
    let (mut range, mut peak, mut peak_time) = (0u64, 0u64, 0u64);
    for run in 0..runs {
        let mut rng = rng::rng_for(run_seed(master_seed, node, threshold_index, run), &[]);
        let out = cascade_with(g, node, p, &mut rng, ws);
        range += out.range as u64;
        peak += out.peak as u64;
        peak_time += out.peak_time as u64;
    }
    let r = runs as f64;
    SimulationRecord {
        node,
        threshold: p,
        runs,
        mean_range: range as f64 / r,
        mean_peak: peak as f64 / r,
        mean_peak_time: peak_time as f64 / r,
    }
}

/// Callback receiving `(completed, total)` work items.
pub type ProgressFn<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// One record per `(node, threshold)`, ordered node-major. Output is
/// identical for any worker count.
pub fn simulate_all(
    g: &Graph,
    thresholds: &ThresholdSet,
    runs: usize,
    master_seed: u64,
    progress: Option<ProgressFn<'_>>,
) -> Result<Vec<SimulationRecord>> {
    thresholds.validate()?;
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let t = thresholds.len();
    let total = g.n() * t;
    let done = AtomicUsize::new(0);
    let report_every = (total / 100).max(1);
    let records = crate::par::map_range_init(
        total,
        || CascadeWorkspace::new(g.n()),
        |ws, item| {
            let (node, ti) = (item / t, item % t);
            let rec = simulate_node_with(g, node, thresholds.values[ti], ti, runs, master_seed, ws);
            let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
            if let Some(cb) = progress {
                if finished % report_every == 0 || finished == total {
                    cb(finished, total);
                }
            }
            rec
        },
    );
    Ok(records)
}

/// Run metadata written next to the records CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub master_seed: u64,
    pub rng: String,
    pub thresholds: Vec<f64>,
    pub network_family: NetworkFamily,
    pub runs: usize,
    pub graph_checksum: String,
    pub directed: bool,
    pub range_includes_seed: bool,
    pub seed_iteration: usize,
}

impl SimulationMeta {
    pub fn new(g: &Graph, thresholds: &ThresholdSet, runs: usize, master_seed: u64) -> Self {
        SimulationMeta {
            master_seed,
            rng: rng::RNG_NAME.to_owned(),
            thresholds: thresholds.values.clone(),
            network_family: thresholds.family,
            runs,
            graph_checksum: g.checksum(),
            directed: g.is_directed(),
            range_includes_seed: true,
            seed_iteration: 0,
        }
    }
}

pub fn write_records_csv<W: Write>(records: &[SimulationRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| Error::io("<records csv>", e))?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<SimulationRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}
