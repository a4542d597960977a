//! Batches of machine/human exchanges over generated scenarios, and the
//! five preset experiments.
//!
//! Every run index gets its own scenario seed, and every cell of an
//! experiment is run on the same scenario for a given index, so cells are
//! compared on identical frameworks. Runs are independent; with the
//! `parallel` feature they are spread over a rayon pool and collected back
//! in index order, so the output does not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{metrics, ExpectedBiases, MetricsRow, RunSummary};
use crate::behaviours::{Behaviour, BiasPolicy, ContributionPolicy, OffsetScope};
use crate::exchange::AgentId;
use crate::rng;
use crate::runner::{run, RunError, Transcript};
use crate::scenario::{sample_scenario, GenerateError, GeneratorConfig, Scenario};
use crate::stats::{chi_squared_2x2, welch_t, StatsError, TestResult};

/// One column of a results table: what the machine and the human do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub mu: Behaviour,
    pub eta: Behaviour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub runs: usize,
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub cap: u32,
    #[serde(default)]
    pub generator: GeneratorConfig,
    pub cells: Vec<Cell>,
}

fn default_cap() -> u32 {
    crate::exchange::DEFAULT_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    H1,
    H2,
    H3,
    H4,
    H5,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 5] = [
        Hypothesis::H1,
        Hypothesis::H2,
        Hypothesis::H3,
        Hypothesis::H4,
        Hypothesis::H5,
    ];
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Hypothesis::H1 => "h1",
            Hypothesis::H2 => "h2",
            Hypothesis::H3 => "h3",
            Hypothesis::H4 => "h4",
            Hypothesis::H5 => "h5",
        };
        f.write_str(s)
    }
}

impl FromStr for Hypothesis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Hypothesis::ALL
            .into_iter()
            .find(|h| h.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown hypothesis `{s}`"))
    }
}

/// The knobs the preset experiments are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Knobs {
    /// Shallow `max` values swept in the first experiment.
    pub shallow_max: [usize; 5],
    /// Shallow `max` used from the second experiment on.
    pub shallow_baseline: usize,
    pub human_offsets: [f64; 5],
    /// Offset used from the third experiment on.
    pub human_offset: f64,
    pub greedy_budgets: [Option<usize>; 3],
    pub machine_biases: [f64; 3],
    /// Machine bias in the last experiment.
    pub machine_bias: f64,
    pub offset_scope: OffsetScope,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            shallow_max: [1, 2, 3, 4, 5],
            shallow_baseline: 4,
            human_offsets: [0.0, -0.1, -0.2, -0.3, -0.4],
            human_offset: -0.2,
            greedy_budgets: [Some(3), Some(4), None],
            machine_biases: [0.0, 0.5, 1.0],
            machine_bias: 0.5,
            offset_scope: OffsetScope::CounterAligned,
        }
    }
}

fn shallow(max: usize) -> ContributionPolicy {
    ContributionPolicy::Shallow { max, repeat: false }
}

fn constant(c: f64) -> BiasPolicy {
    BiasPolicy::Constant { c }
}

impl Knobs {
    fn human(&self, contribution: ContributionPolicy, offset: f64) -> Behaviour {
        Behaviour {
            contribution,
            bias: BiasPolicy::Random {
                offset,
                scope: self.offset_scope,
            },
        }
    }

    fn cell(&self, label: String, mu: Behaviour, eta: Behaviour) -> Cell {
        Cell { label, mu, eta }
    }

    pub fn cells(&self, h: Hypothesis) -> Vec<Cell> {
        let unresponsive = ContributionPolicy::Unresponsive;
        let counterfactual = ContributionPolicy::Counterfactual { budget: None };
        // A machine facing an unresponsive human never learns anything, so
        // its bias policy is irrelevant there.
        let machine = |contribution, c| Behaviour {
            contribution,
            bias: constant(c),
        };
        match h {
            Hypothesis::H1 => self
                .shallow_max
                .iter()
                .map(|&m| {
                    self.cell(
                        format!("S({m})"),
                        machine(shallow(m), 0.0),
                        self.human(unresponsive, 0.0),
                    )
                })
                .collect(),
            Hypothesis::H2 => self
                .human_offsets
                .iter()
                .map(|&o| {
                    self.cell(
                        format!("S({}) offset {o}", self.shallow_baseline),
                        machine(shallow(self.shallow_baseline), 0.0),
                        self.human(unresponsive, o),
                    )
                })
                .collect(),
            Hypothesis::H3 => {
                let mut cells = vec![
                    self.cell(
                        format!("S({}) offset 0", self.shallow_baseline),
                        machine(shallow(self.shallow_baseline), 0.0),
                        self.human(unresponsive, 0.0),
                    ),
                    self.cell(
                        format!("S({}) offset {}", self.shallow_baseline, self.human_offset),
                        machine(shallow(self.shallow_baseline), 0.0),
                        self.human(unresponsive, self.human_offset),
                    ),
                ];
                for b in self.greedy_budgets {
                    let label = match b {
                        Some(k) => format!("G(<={k})"),
                        None => "G".to_owned(),
                    };
                    cells.push(self.cell(
                        label,
                        machine(ContributionPolicy::Greedy { budget: b }, 0.0),
                        self.human(counterfactual, self.human_offset),
                    ));
                }
                cells
            }
            Hypothesis::H4 => self
                .machine_biases
                .iter()
                .map(|&c| {
                    self.cell(
                        format!("G c={c}"),
                        machine(ContributionPolicy::Greedy { budget: None }, c),
                        self.human(counterfactual, self.human_offset),
                    )
                })
                .collect(),
            Hypothesis::H5 => vec![
                self.cell(
                    format!("G c={}", self.machine_bias),
                    machine(ContributionPolicy::Greedy { budget: None }, self.machine_bias),
                    self.human(counterfactual, self.human_offset),
                ),
                self.cell(
                    format!("C c={}", self.machine_bias),
                    machine(counterfactual, self.machine_bias),
                    self.human(counterfactual, self.human_offset),
                ),
            ],
        }
    }
}

impl ExperimentConfig {
    pub fn preset(h: Hypothesis, runs: usize, seed: u64) -> Self {
        Self::from_knobs(h, &Knobs::default(), runs, seed)
    }

    pub fn from_knobs(h: Hypothesis, knobs: &Knobs, runs: usize, seed: u64) -> Self {
        Self {
            name: h.to_string(),
            runs,
            seed,
            cap: default_cap(),
            generator: GeneratorConfig::default(),
            cells: knobs.cells(h),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("run {index} (scenario seed {seed}): {source}")]
    Generate {
        index: usize,
        seed: u64,
        source: GenerateError,
    },
    #[error("run {index} (scenario seed {seed}), cell `{cell}`: {source}")]
    Run {
        index: usize,
        seed: u64,
        cell: String,
        source: RunError,
    },
    #[error("an experiment needs at least one run and one cell")]
    Empty,
}

/// Scenario seed of run `index`; shared by every cell.
pub fn run_seed(base: u64, index: usize) -> u64 {
    rng::derive(base, &[rng::tag("run"), index as u64])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Serial,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Mode {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Mode::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Mode::Serial
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub rejections: u32,
    pub summaries: Vec<RunSummary>,
    pub transcripts: Option<Vec<Transcript>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub metrics: MetricsRow,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
    pub rejections: Vec<u32>,
    /// Per run index, per cell, when requested.
    pub transcripts: Option<Vec<Vec<Transcript>>>,
}

pub fn scenario_for(config: &ExperimentConfig, index: usize) -> Result<(u64, Scenario, u32), SimulationError> {
    let seed = run_seed(config.seed, index);
    let g = sample_scenario(seed, &config.generator).map_err(|source| SimulationError::Generate {
        index,
        seed,
        source,
    })?;
    let mut scenario = g.scenario;
    scenario.cap = Some(config.cap);
    Ok((seed, scenario, g.rejections))
}

/// Every cell of the experiment on run `index`'s scenario.
pub fn run_index(config: &ExperimentConfig, index: usize, keep: bool) -> Result<RunRecord, SimulationError> {
    let (seed, scenario, rejections) = scenario_for(config, index)?;
    let mut summaries = Vec::with_capacity(config.cells.len());
    let mut transcripts = keep.then(Vec::new);
    for cell in &config.cells {
        let behaviours = BTreeMap::from([(AgentId::machine(), cell.mu), (AgentId::human(), cell.eta)]);
        let setup = scenario.setup(&behaviours, seed);
        let state = run(&setup).map_err(|source| SimulationError::Run {
            index,
            seed,
            cell: cell.label.clone(),
            source,
        })?;
        let model = ExpectedBiases(behaviours.iter().map(|(a, b)| (a.clone(), b.bias)).collect());
        summaries.push(RunSummary::from_history(state.history(), &model));
        if let Some(ts) = transcripts.as_mut() {
            ts.push(Transcript::from_state(setup, &state));
        }
    }
    Ok(RunRecord {
        index,
        seed,
        rejections,
        summaries,
        transcripts,
    })
}

pub fn run_experiment(config: &ExperimentConfig, mode: Mode, keep_transcripts: bool) -> Result<ExperimentResult, SimulationError> {
    if config.runs == 0 || config.cells.is_empty() {
        return Err(SimulationError::Empty);
    }
    let one = |i| run_index(config, i, keep_transcripts);
    let records: Result<Vec<RunRecord>, SimulationError> = match mode {
        Mode::Serial => (0..config.runs).map(one).collect(),
        #[cfg(feature = "parallel")]
        Mode::Parallel => {
            use rayon::prelude::*;
            (0..config.runs).into_par_iter().map(one).collect()
        }
    };
    let records = records?;
    let cells = config
        .cells
        .iter()
        .enumerate()
        .map(|(k, cell)| {
            let runs: Vec<RunSummary> = records.iter().map(|r| r.summaries[k].clone()).collect();
            CellResult {
                cell: cell.clone(),
                metrics: metrics(&runs),
                runs,
            }
        })
        .collect();
    let rejections = records.iter().map(|r| r.rejections).collect();
    let transcripts = keep_transcripts.then(|| {
        records
            .into_iter()
            .map(|r| r.transcripts.unwrap_or_default())
            .collect()
    });
    Ok(ExperimentResult {
        config: config.clone(),
        cells,
        rejections,
        transcripts,
    })
}

/// A results-table row: behaviours, learning constants, then the metrics
/// with rates as percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub cell: String,
    pub behaviour_mu: String,
    pub behaviour_eta: String,
    pub learning_mu: String,
    pub learning_eta: String,
    pub rr: f64,
    pub cr: f64,
    pub pr_mu: f64,
    pub ca_mu: f64,
    pub pr_eta: f64,
    pub ca_eta: f64,
    pub runs: usize,
    pub resolved: usize,
}

fn behaviour_code(b: Option<&Behaviour>) -> String {
    let Some(b) = b else {
        return "manual".into();
    };
    match b.contribution {
        ContributionPolicy::Unresponsive => "-".into(),
        ContributionPolicy::Shallow { max, .. } => format!("S ({max})"),
        ContributionPolicy::Greedy { budget: None } => "G".into(),
        ContributionPolicy::Greedy { budget: Some(k) } => format!("G (<={k})"),
        ContributionPolicy::Counterfactual { budget: None } => "C".into(),
        ContributionPolicy::Counterfactual { budget: Some(k) } => format!("C (<={k})"),
    }
}

fn learning_code(b: Option<&Behaviour>, learns: bool) -> String {
    match b {
        Some(b) if learns => match b.bias {
            BiasPolicy::Constant { c } => format!("{c}"),
            BiasPolicy::Random { offset, .. } => format!("{offset}"),
        },
        _ => "-".into(),
    }
}

impl CsvRow {
    /// `None` behaviours are agents played by hand.
    pub fn new(
        experiment: &str,
        cell: &str,
        mu: Option<&Behaviour>,
        eta: Option<&Behaviour>,
        m: &MetricsRow,
    ) -> Self {
        let pct = |x: f64| 100.0 * x;
        let rate = |map: &BTreeMap<AgentId, f64>, a: &AgentId| pct(map.get(a).copied().unwrap_or(0.0));
        let (mu_id, eta_id) = (AgentId::machine(), AgentId::human());
        // The machine only ever learns from a human who talks.
        let mu_learns = eta.is_none_or(|b| b.contribution != ContributionPolicy::Unresponsive);
        CsvRow {
            experiment: experiment.to_owned(),
            cell: cell.to_owned(),
            behaviour_mu: behaviour_code(mu),
            behaviour_eta: behaviour_code(eta),
            learning_mu: learning_code(mu, mu_learns),
            learning_eta: learning_code(eta, true),
            rr: pct(m.rr),
            cr: m.cr,
            pr_mu: rate(&m.pr, &mu_id),
            ca_mu: rate(&m.ca, &mu_id),
            pr_eta: rate(&m.pr, &eta_id),
            ca_eta: rate(&m.ca, &eta_id),
            runs: m.n_runs,
            resolved: m.n_resolved,
        }
    }
}

pub fn write_csv_rows(rows: &[CsvRow], out: impl std::io::Write, header: bool) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

impl ExperimentResult {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.cells
            .iter()
            .map(|c| CsvRow::new(&self.config.name, &c.cell.label, Some(&c.cell.mu), Some(&c.cell.eta), &c.metrics))
            .collect()
    }

    pub fn write_csv(&self, out: impl std::io::Write, header: bool) -> Result<(), csv::Error> {
        write_csv_rows(&self.rows(), out, header)
    }

    pub fn cell(&self, label: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.cell.label == label)
    }
}

/// Resolution counts of two cells, chi-squared.
pub fn compare_resolution(a: &CellResult, b: &CellResult) -> Result<TestResult, StatsError> {
    let (ra, na) = (a.metrics.n_resolved as u64, a.metrics.n_runs as u64);
    let (rb, nb) = (b.metrics.n_resolved as u64, b.metrics.n_runs as u64);
    chi_squared_2x2(ra, na - ra, rb, nb - rb)
}

/// Persuasion by `agent` among resolved runs of two cells, chi-squared.
pub fn compare_persuasion(a: &CellResult, b: &CellResult, agent: &AgentId) -> Result<TestResult, StatsError> {
    let count = |c: &CellResult| {
        let resolved: Vec<_> = c.runs.iter().filter(|r| r.resolved).collect();
        let p = resolved.iter().filter(|r| r.persuaded_by(agent)).count() as u64;
        (p, resolved.len() as u64 - p)
    };
    let (pa, qa) = count(a);
    let (pb, qb) = count(b);
    chi_squared_2x2(pa, qa, pb, qb)
}

/// Per-run contribution accuracy of `agent` (0 when it said nothing),
/// Welch.
pub fn compare_accuracy(a: &CellResult, b: &CellResult, agent: &AgentId) -> Result<TestResult, StatsError> {
    let sample = |c: &CellResult| -> Vec<f64> {
        c.runs
            .iter()
            .map(|r| r.accuracy.get(agent).copied().flatten().unwrap_or(0.0))
            .collect()
    };
    welch_t(&sample(a), &sample(b))
}

/// Exchange sizes over resolved runs, Welch.
pub fn compare_contribution(a: &CellResult, b: &CellResult) -> Result<TestResult, StatsError> {
    let sample = |c: &CellResult| -> Vec<f64> {
        c.runs.iter().filter(|r| r.resolved).map(|r| r.edges as f64).collect()
    };
    welch_t(&sample(a), &sample(b))
}
