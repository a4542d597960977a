//! Property checkers over exchange histories and the batch metrics used to
//! compare experiment cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::behaviours::{BiasPolicy, OffsetScope, ScriptedBiases};
use crate::exchange::{
    agent_state_among, AgentId, AgentState, Contribution, ExchangeError, ExchangeOptions,
    ExchangeState, Snapshot, Status, TurnPolicy,
};
use crate::graph::{ArgumentId, Baf, Edge, Violation};
use crate::rng;
use crate::semantics::{evaluate, EvaluationRange, SemanticsKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Connectedness,
    Acyclicity,
    ContributorIrrelevance,
    ResolutionRepresentation,
    ConflictRepresentation,
    /// Strength rises only with new pro arguments, falls only with new con
    /// arguments (DF-QuAD agents).
    ProConGrowth,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::Connectedness,
        Property::Acyclicity,
        Property::ContributorIrrelevance,
        Property::ResolutionRepresentation,
        Property::ConflictRepresentation,
        Property::ProConGrowth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Connectedness => "connectedness",
            Property::Acyclicity => "acyclicity",
            Property::ContributorIrrelevance => "contributor-irrelevance",
            Property::ResolutionRepresentation => "resolution-representation",
            Property::ConflictRepresentation => "conflict-representation",
            Property::ProConGrowth => "pro-con-growth",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown property `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub t: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Holds,
    Violated { witness: Witness },
    /// The property only speaks about, say, resolved exchanges.
    NotApplicable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    #[serde(flatten)]
    pub outcome: Outcome,
}

impl PropertyReport {
    fn new(property: Property, outcome: Outcome) -> Self {
        Self { property, outcome }
    }

    fn violated(property: Property, t: u32, detail: impl Into<String>) -> Self {
        Self::new(
            property,
            Outcome::Violated {
                witness: Witness {
                    t,
                    detail: detail.into(),
                },
            },
        )
    }

    fn not_applicable(property: Property, reason: &str) -> Self {
        Self::new(
            property,
            Outcome::NotApplicable {
                reason: reason.to_owned(),
            },
        )
    }

    pub fn holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }

    pub fn is_violated(&self) -> bool {
        matches!(self.outcome, Outcome::Violated { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.outcome {
            Outcome::Violated { witness } => Some(witness),
            _ => None,
        }
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Outcome::Holds => write!(f, "{}: holds", self.property),
            Outcome::Violated { witness } => {
                write!(f, "{}: violated at t={} ({})", self.property, witness.t, witness.detail)
            }
            Outcome::NotApplicable { reason } => {
                write!(f, "{}: not applicable ({reason})", self.property)
            }
        }
    }
}

fn final_snapshot(history: &[Snapshot]) -> &Snapshot {
    history.last().expect("histories start at timestep 0")
}

/// No exchange argument is left without an edge once there is more than
/// one.
pub fn check_connectedness(history: &[Snapshot]) -> PropertyReport {
    for snap in history {
        let x = &snap.exchange;
        if x.arguments().len() <= 1 {
            continue;
        }
        let touched: BTreeSet<&ArgumentId> = x
            .attacks()
            .iter()
            .chain(x.supports())
            .flat_map(|e| [&e.from, &e.to])
            .collect();
        if let Some(a) = x.arguments().iter().find(|a| !touched.contains(a)) {
            return PropertyReport::violated(
                Property::Connectedness,
                snap.t(),
                format!("argument `{a}` has no edge"),
            );
        }
    }
    PropertyReport::new(Property::Connectedness, Outcome::Holds)
}

pub fn check_acyclicity(history: &[Snapshot]) -> PropertyReport {
    for snap in history {
        let report = snap.exchange.validate();
        let cyclic = report.violations.iter().find_map(|v| match v {
            Violation::OnCycle { argument } => Some(argument),
            _ => None,
        });
        if let Some(a) = cyclic {
            return PropertyReport::violated(
                Property::Acyclicity,
                snap.t(),
                format!("argument `{a}` lies on a cycle"),
            );
        }
    }
    PropertyReport::new(Property::Acyclicity, Outcome::Holds)
}

fn learnt_biases(history: &[Snapshot]) -> ScriptedBiases {
    let mut s = ScriptedBiases::default();
    for snap in history {
        for (agent, learnt) in &snap.record.learnt {
            for l in learnt {
                s.biases.insert((agent.clone(), l.arg.clone()), l.bias);
            }
        }
    }
    s
}

/// One replay for the contributor-irrelevance check: the final exchange
/// rebuilt one edge per timestep in a random order that keeps it a valid
/// framework, each edge credited to a random agent that held it from the
/// start. Learnt arguments get the biases they got in the original run.
pub fn reorder_replay(history: &[Snapshot], seed: u64) -> Result<ExchangeState, ExchangeError> {
    let start = &history[0];
    let target = &final_snapshot(history).exchange;
    let mut rng = rng::stream(seed, &[rng::tag("reorder")]);

    let mut present: BTreeSet<ArgumentId> = BTreeSet::from([target.explanandum().clone()]);
    let mut remaining: Vec<(Edge, _)> = target.edges().into_iter().map(|(e, p)| (e.clone(), p)).collect();
    let mut steps = Vec::new();
    while !remaining.is_empty() {
        let ready: Vec<usize> = (0..remaining.len())
            .filter(|&i| present.contains(&remaining[i].0.to))
            .collect();
        let i = *ready.choose(&mut rng).expect("every edge leads towards the explanandum");
        let (edge, polarity) = remaining.swap_remove(i);
        let holders: Vec<&AgentId> = start
            .agents
            .iter()
            .filter(|(_, t)| t.qbaf.polarity(&edge) == Some(polarity))
            .map(|(id, _)| id)
            .collect();
        let Some(agent) = holders.choose(&mut rng) else {
            return Err(ExchangeError::Untruthful {
                agent: AgentId::new("?"),
                edge,
                polarity,
            });
        };
        present.insert(edge.from.clone());
        steps.push(((*agent).clone(), edge, polarity));
    }

    let explanandum = target.explanandum().clone();
    let policy = TurnPolicy::Schedule {
        steps: if steps.is_empty() {
            vec![start.agents.keys().cloned().collect()]
        } else {
            steps.iter().map(|(a, _, _)| BTreeSet::from([a.clone()])).collect()
        },
    };
    let options = ExchangeOptions {
        cap: steps.len().max(1) as u32,
        freeze_on_resolve: false,
    };
    let mut state = ExchangeState::new(explanandum, start.agents.clone(), policy, options)?;
    let mut biases = learnt_biases(history);
    if steps.is_empty() {
        for a in state.scheduled() {
            state.submit(Contribution::pass(a))?;
        }
        state.close_timestep(&mut biases)?;
    }
    for (agent, edge, polarity) in steps {
        state.submit(Contribution {
            agent,
            edges: vec![(edge, polarity)],
        })?;
        state.close_timestep(&mut biases)?;
    }
    Ok(state)
}

/// Replays `k` random orderings of the final exchange and compares every
/// agent's final stance with the original run's.
pub fn check_contributor_irrelevance(history: &[Snapshot], k: usize, seed: u64) -> PropertyReport {
    let last = final_snapshot(history);
    for i in 0..k {
        let replay_seed = rng::derive(seed, &[i as u64]);
        let state = match reorder_replay(history, replay_seed) {
            Ok(s) => s,
            Err(e) => {
                return PropertyReport::violated(
                    Property::ContributorIrrelevance,
                    last.t(),
                    format!("replay {i} could not be built: {e}"),
                )
            }
        };
        if state.exchange() != &last.exchange {
            return PropertyReport::violated(
                Property::ContributorIrrelevance,
                last.t(),
                format!("replay {i} produced a different exchange"),
            );
        }
        let stances = &state.current().record.stances;
        if let Some((agent, s)) = last.record.stances.iter().find(|(a, s)| stances.get(*a) != Some(*s)) {
            return PropertyReport::violated(
                Property::ContributorIrrelevance,
                last.t(),
                format!(
                    "replay {i}: agent `{agent}` ends {} instead of {s}",
                    stances.get(agent).map_or("?".into(), |x| x.to_string())
                ),
            );
        }
    }
    PropertyReport::new(Property::ContributorIrrelevance, Outcome::Holds)
}

pub fn check_resolution_representation(history: &[Snapshot]) -> PropertyReport {
    let last = final_snapshot(history);
    if !last.record.status.is_resolved() {
        return PropertyReport::not_applicable(Property::ResolutionRepresentation, "not resolved");
    }
    let pc = match last.exchange.pro_con() {
        Ok(pc) => pc,
        Err(e) => {
            return PropertyReport::violated(Property::ResolutionRepresentation, last.t(), e.to_string())
        }
    };
    for (agent, end) in &last.record.stances {
        let Some(start) = history[0].stance(agent) else { continue };
        if *end > start && pc.pro.is_empty() {
            return PropertyReport::violated(
                Property::ResolutionRepresentation,
                last.t(),
                format!("`{agent}` moved up with no pro argument"),
            );
        }
        if *end < start && pc.con.is_empty() {
            return PropertyReport::violated(
                Property::ResolutionRepresentation,
                last.t(),
                format!("`{agent}` moved down with no con argument"),
            );
        }
    }
    PropertyReport::new(Property::ResolutionRepresentation, Outcome::Holds)
}

pub fn check_conflict_representation(history: &[Snapshot]) -> PropertyReport {
    let last = final_snapshot(history);
    if !matches!(last.record.status, Status::Unresolved { .. }) {
        return PropertyReport::not_applicable(Property::ConflictRepresentation, "not unresolved");
    }
    let pc = match last.exchange.pro_con() {
        Ok(pc) => pc,
        Err(e) => return PropertyReport::violated(Property::ConflictRepresentation, last.t(), e.to_string()),
    };
    let missing = match (pc.pro.is_empty(), pc.con.is_empty()) {
        (false, false) => return PropertyReport::new(Property::ConflictRepresentation, Outcome::Holds),
        (true, true) => "no pro and no con argument",
        (true, false) => "no pro argument",
        (false, true) => "no con argument",
    };
    PropertyReport::violated(Property::ConflictRepresentation, last.t(), missing)
}

/// For DF-QuAD agents: whenever the explanandum's strength rises (falls)
/// over a timestep, the exchange gained a pro (con) argument.
pub fn check_pro_con_growth(history: &[Snapshot]) -> PropertyReport {
    for w in history.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let (Ok(pc0), Ok(pc1)) = (prev.exchange.pro_con(), next.exchange.pro_con()) else {
            return PropertyReport::violated(Property::ProConGrowth, next.t(), "exchange is not a framework for e");
        };
        let grew_pro = pc0.pro.is_subset(&pc1.pro) && pc1.pro.len() > pc0.pro.len();
        let grew_con = pc0.con.is_subset(&pc1.con) && pc1.con.len() > pc0.con.len();
        let e = next.exchange.explanandum();
        for (agent, triple) in &next.agents {
            if triple.semantics != SemanticsKind::DfQuad {
                continue;
            }
            let (Some(before), Some(after)) = (prev.strength(agent, e), next.strength(agent, e)) else {
                continue;
            };
            if after > before && !grew_pro {
                return PropertyReport::violated(
                    Property::ProConGrowth,
                    next.t(),
                    format!("`{agent}` rose {before} -> {after} without a new pro argument"),
                );
            }
            if after < before && !grew_con {
                return PropertyReport::violated(
                    Property::ProConGrowth,
                    next.t(),
                    format!("`{agent}` fell {before} -> {after} without a new con argument"),
                );
            }
        }
    }
    PropertyReport::new(Property::ProConGrowth, Outcome::Holds)
}

/// Every property that needs nothing but the history.
pub fn check_all(history: &[Snapshot], irrelevance_replays: usize, seed: u64) -> Vec<PropertyReport> {
    vec![
        check_connectedness(history),
        check_acyclicity(history),
        check_contributor_irrelevance(history, irrelevance_replays, seed),
        check_resolution_representation(history),
        check_conflict_representation(history),
        check_pro_con_growth(history),
    ]
}

/// Whether each listed agent put at least one edge into the exchange.
pub fn all_contributed<'a>(history: &[Snapshot], agents: impl IntoIterator<Item = &'a AgentId>) -> bool {
    let contributors: BTreeSet<&AgentId> = history
        .iter()
        .flat_map(|s| s.record.contributions.iter().map(|c| &c.agent))
        .collect();
    agents.into_iter().all(|a| contributors.contains(a))
}

/// What an agent would give an argument it learns, for scoring
/// contributions against the other agent's framework.
pub trait LearningModel {
    fn bias(&self, agent: &AgentId, prev: &Snapshot, arg: &ArgumentId, next_exchange: &Baf) -> f64;
}

/// Constant policies as they are; random ones by the mean of their draw,
/// offset where the policy would offset it.
pub struct ExpectedBiases(pub BTreeMap<AgentId, BiasPolicy>);

impl LearningModel for ExpectedBiases {
    fn bias(&self, agent: &AgentId, prev: &Snapshot, arg: &ArgumentId, next_exchange: &Baf) -> f64 {
        let range = prev.agents.get(agent).map(|t| t.range).unwrap_or_default();
        match self.0.get(agent) {
            Some(BiasPolicy::Constant { c }) => *c,
            Some(BiasPolicy::Random { offset, scope }) => {
                let shifted = match scope {
                    OffsetScope::All => true,
                    OffsetScope::CounterAligned => counter_aligned_at(prev, agent, arg, next_exchange),
                };
                mean_clamped_uniform(if shifted { *offset } else { 0.0 }, range)
            }
            None => (range.neutral_low + range.neutral_high) / 2.0,
        }
    }
}

fn counter_aligned_at(prev: &Snapshot, agent: &AgentId, arg: &ArgumentId, next_exchange: &Baf) -> bool {
    let Some(state) = agent_state_among(&prev.record.stances, agent) else {
        return false;
    };
    let Ok(pc) = next_exchange.pro_con() else {
        return false;
    };
    match state {
        AgentState::ArguingFor => pc.con.contains(arg),
        AgentState::ArguingAgainst => pc.pro.contains(arg),
    }
}

/// Mean of `clamp(u + offset)` to the range for `u` uniform on `[0, 1]`.
pub fn mean_clamped_uniform(offset: f64, range: EvaluationRange) -> f64 {
    let (lo, hi) = (range.min, range.max);
    let (a, b) = (offset, 1.0 + offset);
    let below = lo * (b.min(lo) - a).max(0.0);
    let (m0, m1) = (a.max(lo), b.min(hi));
    let inside = if m1 > m0 { (m1 * m1 - m0 * m0) / 2.0 } else { 0.0 };
    let above = hi * (b - a.max(hi)).max(0.0);
    below + inside + above
}

/// Edges `agent` could have contributed after `prev` that would have moved
/// `other`'s evaluation of the explanandum furthest its way.
pub fn best_contributions(
    prev: &Snapshot,
    agent: &AgentId,
    other: &AgentId,
    model: &dyn LearningModel,
) -> Option<BTreeSet<Edge>> {
    let state = agent_state_among(&prev.record.stances, agent)?;
    let mine = prev.agents.get(agent)?;
    let theirs = prev.agents.get(other)?;
    let e = prev.exchange.explanandum();
    let mut scored = Vec::new();
    for (edge, polarity) in mine.qbaf.edges() {
        if prev.exchange.has_edge(edge) {
            continue;
        }
        let mut next_exchange = prev.exchange.clone();
        next_exchange.add_argument(edge.from.clone());
        next_exchange.add_argument(edge.to.clone());
        let _ = next_exchange.add_edge(edge.clone(), polarity);
        let mut q = theirs.qbaf.clone();
        if !q.contains(&edge.from) {
            let bias = model.bias(other, prev, &edge.from, &next_exchange);
            q.add_argument(edge.from.clone(), bias);
        }
        if q.contains(&edge.to) && !q.has_edge(edge) {
            q.add_edge(edge.clone(), polarity).ok()?;
        }
        let v = evaluate(&q, theirs.semantics).ok()?[e];
        scored.push((edge.clone(), v));
    }
    let sign = match state {
        AgentState::ArguingFor => 1.0,
        AgentState::ArguingAgainst => -1.0,
    };
    let best = scored.iter().map(|(_, v)| sign * v).fold(f64::NEG_INFINITY, f64::max);
    Some(
        scored
            .into_iter()
            .filter(|(_, v)| sign * v >= best - ACCURACY_TIE)
            .map(|(edge, _)| edge)
            .collect(),
    )
}

/// Strengths this close count as the same maximum.
pub const ACCURACY_TIE: f64 = 1e-12;

/// Share of `agent`'s contributions that were among its best available
/// moves at the time; `None` when it contributed nothing.
pub fn accuracy(history: &[Snapshot], agent: &AgentId, model: &dyn LearningModel) -> Option<f64> {
    let other = {
        let others: Vec<&AgentId> = history[0].agents.keys().filter(|a| *a != agent).collect();
        if others.len() != 1 {
            return None;
        }
        others[0].clone()
    };
    let mut made = 0usize;
    let mut good = 0usize;
    for w in history.windows(2) {
        let mine: Vec<Edge> = w[1]
            .record
            .contributions
            .iter()
            .filter(|c| &c.agent == agent)
            .map(|c| c.edge())
            .collect();
        if mine.is_empty() {
            continue;
        }
        let best = best_contributions(&w[0], agent, &other, model).unwrap_or_default();
        made += mine.len();
        good += mine.iter().filter(|e| best.contains(*e)).count();
    }
    (made > 0).then(|| good as f64 / made as f64)
}

/// Everything the batch metrics need from one exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub resolved: bool,
    pub edges: usize,
    pub timesteps: u32,
    pub initial: BTreeMap<AgentId, crate::semantics::Stance>,
    pub last: BTreeMap<AgentId, crate::semantics::Stance>,
    /// Contribution accuracy per agent, `None` for agents that contributed
    /// nothing.
    pub accuracy: BTreeMap<AgentId, Option<f64>>,
}

impl RunSummary {
    pub fn from_history(history: &[Snapshot], model: &dyn LearningModel) -> Self {
        let last = final_snapshot(history);
        let accuracy = history[0]
            .agents
            .keys()
            .map(|a| (a.clone(), accuracy(history, a, model)))
            .collect();
        Self {
            resolved: last.record.status.is_resolved(),
            edges: last.exchange.edge_count(),
            timesteps: last.t(),
            initial: history[0].record.stances.clone(),
            last: last.record.stances.clone(),
            accuracy,
        }
    }

    /// Every agent ended where `agent` started.
    pub fn persuaded_by(&self, agent: &AgentId) -> bool {
        match self.initial.get(agent) {
            Some(s) => self.last.values().all(|x| x == s),
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub n_runs: usize,
    pub n_resolved: usize,
    pub rr: f64,
    pub cr: f64,
    pub pr: BTreeMap<AgentId, f64>,
    pub ca: BTreeMap<AgentId, f64>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Resolution rate, contribution rate over resolved runs, and per-agent
/// persuasion rate and contribution accuracy. Zero denominators give 0.
pub fn metrics(runs: &[RunSummary]) -> MetricsRow {
    let resolved: Vec<&RunSummary> = runs.iter().filter(|r| r.resolved).collect();
    let agents: BTreeSet<&AgentId> = runs.iter().flat_map(|r| r.initial.keys()).collect();
    let edges: usize = resolved.iter().map(|r| r.edges).sum();
    let pr = agents
        .iter()
        .map(|a| {
            let n = resolved.iter().filter(|r| r.persuaded_by(a)).count();
            ((*a).clone(), ratio(n as f64, resolved.len() as f64))
        })
        .collect();
    let ca = agents
        .iter()
        .map(|a| {
            let total: f64 = runs
                .iter()
                .map(|r| r.accuracy.get(*a).copied().flatten().unwrap_or(0.0))
                .sum();
            ((*a).clone(), ratio(total, runs.len() as f64))
        })
        .collect();
    MetricsRow {
        n_runs: runs.len(),
        n_resolved: resolved.len(),
        rr: ratio(resolved.len() as f64, runs.len() as f64),
        cr: ratio(edges as f64, resolved.len() as f64),
        pr,
        ca,
    }
}
