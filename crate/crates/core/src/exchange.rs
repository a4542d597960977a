//! The exchange protocol: a shared, growing framework that agents extend in
//! turns, learning each other's attacks and supports as they go.
//!
//! Timestep `t` opens once timestep `t - 1` has closed. Scheduled agents
//! [`submit`](ExchangeState::submit) contributions validated against the
//! state at `t - 1`; [`close_timestep`](ExchangeState::close_timestep) then
//! applies them, lets every agent learn what it lacked, re-evaluates, and
//! decides whether the conflict is over.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ArgumentId, Baf, Edge, GraphError, Polarity, Qbaf, ValidationReport};
use crate::semantics::{evaluate, EvaluationRange, SemanticsError, SemanticsKind, Stance, StrengthMap};

pub const DEFAULT_CAP: u32 = 50;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    /// `mu`, the machine in the two-agent explanation setting.
    pub fn machine() -> Self {
        Self::new("mu")
    }

    /// `eta`, the human in the two-agent explanation setting.
    pub fn human() -> Self {
        Self::new("eta")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExchangeError {
    #[error("an exchange needs at least two agents")]
    TooFewAgents,
    #[error("all agents already share a stance on the explanandum")]
    NoConflict,
    #[error("agent `{agent}`: {source}")]
    InvalidTriple { agent: AgentId, source: GraphError },
    #[error("agent `{agent}` has explanandum `{found}`, expected `{expected}`")]
    WrongExplanandum {
        agent: AgentId,
        expected: ArgumentId,
        found: ArgumentId,
    },
    #[error("agent `{agent}`: base score {score} of `{arg}` is outside its evaluation range")]
    ScoreOutOfRange {
        agent: AgentId,
        arg: ArgumentId,
        score: f64,
    },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("exchange is over ({0})")]
    Finished(Status),
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
    #[error("agent `{agent}` is not scheduled at timestep {t}")]
    NotScheduled { agent: AgentId, t: u32 },
    #[error("agent `{agent}` already acted at timestep {t}")]
    AlreadyActed { agent: AgentId, t: u32 },
    #[error("agent `{agent}` does not hold {edge} as a {polarity}")]
    Untruthful {
        agent: AgentId,
        edge: Edge,
        polarity: Polarity,
    },
    #[error("edge {0} has already been contributed")]
    DuplicateEdge(Edge),
    #[error("contribution would break the exchange: {0}")]
    InvalidExchange(ValidationReport),
    #[error("timestep {t} cannot close before {missing:?} act")]
    NotAllActed { t: u32, missing: Vec<AgentId> },
    #[error("agent `{agent}`: bias {bias} for learnt `{arg}` is outside its evaluation range")]
    BiasOutOfRange {
        agent: AgentId,
        arg: ArgumentId,
        bias: f64,
    },
    #[error("agent `{0}` has no state while every stance agrees with it")]
    StateUndefined(AgentId),
    #[error("extra argument `{arg}` is unknown to agent `{agent}`")]
    UnknownExtraArgument { agent: AgentId, arg: ArgumentId },
    #[error("no perceived effect for {edge}: {reason}")]
    EffectShape { edge: Edge, reason: &'static str },
}

/// An agent's evaluation range, private framework and evaluation method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateTriple {
    #[serde(default)]
    pub range: EvaluationRange,
    pub semantics: SemanticsKind,
    pub qbaf: Qbaf,
}

impl PrivateTriple {
    pub fn new(range: EvaluationRange, qbaf: Qbaf, semantics: SemanticsKind) -> Self {
        Self {
            range,
            semantics,
            qbaf,
        }
    }

    /// Default range, DF-QuAD.
    pub fn dfquad(qbaf: Qbaf) -> Self {
        Self::new(EvaluationRange::default(), qbaf, SemanticsKind::DfQuad)
    }

    pub fn check(&self, agent: &AgentId, explanandum: &ArgumentId) -> Result<(), ExchangeError> {
        self.range.check()?;
        if self.qbaf.explanandum() != explanandum {
            return Err(ExchangeError::WrongExplanandum {
                agent: agent.clone(),
                expected: explanandum.clone(),
                found: self.qbaf.explanandum().clone(),
            });
        }
        self.qbaf
            .ensure_valid()
            .map_err(|source| ExchangeError::InvalidTriple {
                agent: agent.clone(),
                source,
            })?;
        for (arg, score) in self.qbaf.base_scores() {
            if !self.range.contains(*score) {
                return Err(ExchangeError::ScoreOutOfRange {
                    agent: agent.clone(),
                    arg: arg.clone(),
                    score: *score,
                });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self) -> Result<StrengthMap, SemanticsError> {
        evaluate(&self.qbaf, self.semantics)
    }

    pub fn strength(&self, arg: &ArgumentId) -> Result<f64, SemanticsError> {
        Ok(self.evaluate()?.get(arg).copied().unwrap_or(f64::NAN))
    }

    pub fn stance_on_explanandum(&self) -> Result<Stance, SemanticsError> {
        let v = self.strength(self.qbaf.explanandum())?;
        self.range.stance_of(v)
    }
}

/// Which agents may contribute at each timestep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TurnPolicy {
    /// One agent per timestep, cycling through `order` from timestep 1.
    RoundRobin { order: Vec<AgentId> },
    /// `steps[i]` is scheduled at timestep `i + 1`; the list repeats.
    Schedule { steps: Vec<BTreeSet<AgentId>> },
}

impl TurnPolicy {
    /// Machine on odd timesteps, human on even ones.
    pub fn machine_first() -> Self {
        TurnPolicy::RoundRobin {
            order: vec![AgentId::machine(), AgentId::human()],
        }
    }

    pub fn scheduled(&self, t: u32) -> BTreeSet<AgentId> {
        if t == 0 {
            return BTreeSet::new();
        }
        let i = (t - 1) as usize;
        match self {
            TurnPolicy::RoundRobin { order } if !order.is_empty() => {
                BTreeSet::from([order[i % order.len()].clone()])
            }
            TurnPolicy::Schedule { steps } if !steps.is_empty() => steps[i % steps.len()].clone(),
            _ => BTreeSet::new(),
        }
    }

    fn agents(&self) -> BTreeSet<&AgentId> {
        match self {
            TurnPolicy::RoundRobin { order } => order.iter().collect(),
            TurnPolicy::Schedule { steps } => steps.iter().flatten().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeOptions {
    /// Last timestep; a conflict still open after it is unresolved.
    pub cap: u32,
    /// Refuse contributions once resolved. Replays that must reach a fixed
    /// final exchange turn this off.
    pub freeze_on_resolve: bool,
}

impl Default for ExchangeOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            freeze_on_resolve: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Status {
    Running,
    Resolved { at: u32 },
    Unresolved { at: u32 },
}

impl Status {
    pub fn is_running(self) -> bool {
        self == Status::Running
    }

    pub fn is_resolved(self) -> bool {
        matches!(self, Status::Resolved { .. })
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Running => f.write_str("running"),
            Status::Resolved { at } => write!(f, "resolved at {at}"),
            Status::Unresolved { at } => write!(f, "unresolved at {at}"),
        }
    }
}

/// One edge as it entered the exchange.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContributedEdge {
    pub agent: AgentId,
    pub from: ArgumentId,
    pub to: ArgumentId,
    pub polarity: Polarity,
}

impl ContributedEdge {
    pub fn edge(&self) -> Edge {
        Edge::new(self.from.clone(), self.to.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Learnt {
    pub arg: ArgumentId,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contribution {
    pub agent: AgentId,
    pub edges: Vec<(Edge, Polarity)>,
}

impl Contribution {
    pub fn pass(agent: AgentId) -> Self {
        Self {
            agent,
            edges: Vec::new(),
        }
    }
}

/// What happened in one timestep, as written to transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestepRecord {
    pub t: u32,
    pub contributions: Vec<ContributedEdge>,
    pub learnt: BTreeMap<AgentId, Vec<Learnt>>,
    pub strengths: BTreeMap<AgentId, StrengthMap>,
    pub stances: BTreeMap<AgentId, Stance>,
    pub status: Status,
}

/// A closed timestep together with the frameworks it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub record: TimestepRecord,
    pub exchange: Baf,
    pub agents: BTreeMap<AgentId, PrivateTriple>,
}

impl Snapshot {
    pub fn t(&self) -> u32 {
        self.record.t
    }

    pub fn stance(&self, agent: &AgentId) -> Option<Stance> {
        self.record.stances.get(agent).copied()
    }

    pub fn strength(&self, agent: &AgentId, arg: &ArgumentId) -> Option<f64> {
        self.record.strengths.get(agent)?.get(arg).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentState {
    ArguingFor,
    ArguingAgainst,
}

/// Everything a bias source may look at when an agent learns an argument.
pub struct LearningContext<'a> {
    pub agent: &'a AgentId,
    pub argument: &'a ArgumentId,
    /// The state before the closing timestep's contributions apply.
    pub state: &'a ExchangeState,
    /// The exchange framework the closing timestep produces.
    pub next_exchange: &'a Baf,
}

/// Chooses the base score an agent gives an argument it has just learnt.
pub trait BiasSource {
    fn bias(&mut self, ctx: &LearningContext<'_>) -> f64;
}

impl<F: FnMut(&LearningContext<'_>) -> f64> BiasSource for F {
    fn bias(&mut self, ctx: &LearningContext<'_>) -> f64 {
        self(ctx)
    }
}

#[derive(Debug, Clone)]
pub struct ExchangeState {
    explanandum: ArgumentId,
    exchange: Baf,
    contributors: BTreeMap<Edge, (AgentId, u32)>,
    agents: BTreeMap<AgentId, PrivateTriple>,
    policy: TurnPolicy,
    options: ExchangeOptions,
    pending: Vec<ContributedEdge>,
    acted: BTreeSet<AgentId>,
    last_turn_passed: BTreeMap<AgentId, bool>,
    history: Vec<Snapshot>,
    status: Status,
    first_agreement: Option<u32>,
}

impl ExchangeState {
    pub fn new(
        explanandum: ArgumentId,
        agents: BTreeMap<AgentId, PrivateTriple>,
        policy: TurnPolicy,
        options: ExchangeOptions,
    ) -> Result<Self, ExchangeError> {
        if agents.len() < 2 {
            return Err(ExchangeError::TooFewAgents);
        }
        if let Some(a) = policy.agents().into_iter().find(|a| !agents.contains_key(*a)) {
            return Err(ExchangeError::UnknownAgent(a.clone()));
        }
        let mut strengths = BTreeMap::new();
        let mut stances = BTreeMap::new();
        for (id, triple) in &agents {
            triple.check(id, &explanandum)?;
            let s = triple.evaluate()?;
            stances.insert(id.clone(), triple.range.stance_of(s[&explanandum])?);
            strengths.insert(id.clone(), s);
        }
        if all_equal(stances.values()) {
            return Err(ExchangeError::NoConflict);
        }
        let exchange = Baf::singleton(explanandum.clone());
        let record = TimestepRecord {
            t: 0,
            contributions: Vec::new(),
            learnt: BTreeMap::new(),
            strengths,
            stances,
            status: Status::Running,
        };
        Ok(Self {
            history: vec![Snapshot {
                record,
                exchange: exchange.clone(),
                agents: agents.clone(),
            }],
            explanandum,
            exchange,
            contributors: BTreeMap::new(),
            agents,
            policy,
            options,
            pending: Vec::new(),
            acted: BTreeSet::new(),
            last_turn_passed: BTreeMap::new(),
            status: Status::Running,
            first_agreement: None,
        })
    }

    pub fn explanandum(&self) -> &ArgumentId {
        &self.explanandum
    }

    /// The last closed timestep.
    pub fn t(&self) -> u32 {
        self.history.len() as u32 - 1
    }

    /// The timestep contributions are currently being collected for.
    pub fn open_timestep(&self) -> u32 {
        self.t() + 1
    }

    pub fn exchange(&self) -> &Baf {
        &self.exchange
    }

    pub fn contributors(&self) -> &BTreeMap<Edge, (AgentId, u32)> {
        &self.contributors
    }

    pub fn agents(&self) -> &BTreeMap<AgentId, PrivateTriple> {
        &self.agents
    }

    pub fn agent(&self, id: &AgentId) -> Result<&PrivateTriple, ExchangeError> {
        self.agents
            .get(id)
            .ok_or_else(|| ExchangeError::UnknownAgent(id.clone()))
    }

    pub fn policy(&self) -> &TurnPolicy {
        &self.policy
    }

    pub fn options(&self) -> ExchangeOptions {
        self.options
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn history(&self) -> &[Snapshot] {
        &self.history
    }

    pub fn current(&self) -> &Snapshot {
        self.history.last().expect("history starts at timestep 0")
    }

    pub fn pending(&self) -> &[ContributedEdge] {
        &self.pending
    }

    /// First timestep at which every stance agreed, even if the exchange was
    /// allowed to carry on past it.
    pub fn first_agreement(&self) -> Option<u32> {
        self.first_agreement
    }

    pub fn scheduled(&self) -> BTreeSet<AgentId> {
        self.policy.scheduled(self.open_timestep())
    }

    /// Scheduled agents that have not yet acted in the open timestep.
    pub fn waiting_on(&self) -> Vec<AgentId> {
        self.scheduled()
            .into_iter()
            .filter(|a| !self.acted.contains(a))
            .collect()
    }

    /// Whether `agent` had a scheduled turn at some closed timestep.
    pub fn has_had_turn(&self, agent: &AgentId) -> bool {
        (1..=self.t()).any(|t| self.policy.scheduled(t).contains(agent))
    }

    /// Edges `agent` has contributed so far, including the open timestep.
    pub fn contributed_by(&self, agent: &AgentId) -> usize {
        self.contributors.values().filter(|(a, _)| a == agent).count()
            + self.pending.iter().filter(|c| &c.agent == agent).count()
    }

    pub fn stance(&self, agent: &AgentId) -> Result<Stance, ExchangeError> {
        self.current()
            .stance(agent)
            .ok_or_else(|| ExchangeError::UnknownAgent(agent.clone()))
    }

    pub fn agent_state(&self, agent: &AgentId) -> Result<AgentState, ExchangeError> {
        self.stance(agent)?;
        agent_state_among(&self.current().record.stances, agent)
            .ok_or_else(|| ExchangeError::StateUndefined(agent.clone()))
    }

    /// Private edges of `agent` that are not in the exchange yet, in edge order.
    pub fn unexchanged_edges(&self, agent: &AgentId) -> Result<Vec<(Edge, Polarity)>, ExchangeError> {
        let triple = self.agent(agent)?;
        Ok(triple
            .qbaf
            .edges()
            .into_iter()
            .filter(|(e, _)| !self.exchange.has_edge(e) && !self.is_pending(e))
            .map(|(e, p)| (e.clone(), p))
            .collect())
    }

    fn is_pending(&self, edge: &Edge) -> bool {
        self.pending.iter().any(|c| c.from == edge.from && c.to == edge.to)
    }

    fn ensure_running(&self) -> Result<(), ExchangeError> {
        if self.status.is_running() {
            Ok(())
        } else {
            Err(ExchangeError::Finished(self.status))
        }
    }

    /// Validates a contribution against the last closed timestep and holds
    /// it until the open timestep closes. An empty contribution is a pass.
    pub fn submit(&mut self, contribution: Contribution) -> Result<(), ExchangeError> {
        self.ensure_running()?;
        let t = self.open_timestep();
        let agent = contribution.agent;
        let triple = self.agent(&agent)?;
        if !self.policy.scheduled(t).contains(&agent) {
            return Err(ExchangeError::NotScheduled { agent, t });
        }
        if self.acted.contains(&agent) {
            return Err(ExchangeError::AlreadyActed { agent, t });
        }

        let mut trial = self.exchange.clone();
        for c in &self.pending {
            add_with_endpoints(&mut trial, c.edge(), c.polarity)?;
        }
        for (edge, polarity) in &contribution.edges {
            if triple.qbaf.polarity(edge) != Some(*polarity) {
                return Err(ExchangeError::Untruthful {
                    agent,
                    edge: edge.clone(),
                    polarity: *polarity,
                });
            }
            if trial.has_edge(edge) {
                return Err(ExchangeError::DuplicateEdge(edge.clone()));
            }
            add_with_endpoints(&mut trial, edge.clone(), *polarity)?;
        }
        let report = trial.validate();
        if !report.is_ok() {
            return Err(ExchangeError::InvalidExchange(report));
        }

        self.pending
            .extend(contribution.edges.into_iter().map(|(edge, polarity)| ContributedEdge {
                agent: agent.clone(),
                from: edge.from,
                to: edge.to,
                polarity,
            }));
        self.acted.insert(agent);
        Ok(())
    }

    /// Arguments each agent would learn if the open timestep closed now,
    /// sorted by id.
    pub fn to_learn(&self) -> BTreeMap<AgentId, Vec<ArgumentId>> {
        self.agents
            .iter()
            .map(|(id, triple)| {
                let args: BTreeSet<ArgumentId> = self
                    .pending
                    .iter()
                    .flat_map(|c| [c.from.clone(), c.to.clone()])
                    .filter(|a| !triple.qbaf.contains(a))
                    .collect();
                (id.clone(), args.into_iter().collect())
            })
            .filter(|(_, v): &(AgentId, Vec<ArgumentId>)| !v.is_empty())
            .collect()
    }

    /// Applies the open timestep's contributions, runs learning, and
    /// re-evaluates every agent.
    pub fn close_timestep(&mut self, biases: &mut dyn BiasSource) -> Result<&Snapshot, ExchangeError> {
        self.ensure_running()?;
        let missing = self.waiting_on();
        let t = self.open_timestep();
        if !missing.is_empty() {
            return Err(ExchangeError::NotAllActed { t, missing });
        }

        let mut next_exchange = self.exchange.clone();
        for c in &self.pending {
            add_with_endpoints(&mut next_exchange, c.edge(), c.polarity)?;
        }

        let mut next_agents = self.agents.clone();
        let mut learnt: BTreeMap<AgentId, Vec<Learnt>> = BTreeMap::new();
        for (id, new_args) in self.to_learn() {
            for arg in new_args {
                let ctx = LearningContext {
                    agent: &id,
                    argument: &arg,
                    state: self,
                    next_exchange: &next_exchange,
                };
                let bias = biases.bias(&ctx);
                let triple = next_agents.get_mut(&id).expect("agent exists");
                if !bias.is_finite() || !triple.range.contains(bias) {
                    return Err(ExchangeError::BiasOutOfRange { agent: id, arg, bias });
                }
                triple.qbaf.add_argument(arg.clone(), bias);
                learnt.entry(id.clone()).or_default().push(Learnt { arg, bias });
            }
        }
        for triple in next_agents.values_mut() {
            for c in &self.pending {
                let edge = c.edge();
                if !triple.qbaf.has_edge(&edge) {
                    triple.qbaf.add_edge(edge, c.polarity)?;
                }
            }
        }

        let mut strengths = BTreeMap::new();
        let mut stances = BTreeMap::new();
        for (id, triple) in &next_agents {
            let s = triple.evaluate()?;
            stances.insert(id.clone(), triple.range.stance_of(s[&self.explanandum])?);
            strengths.insert(id.clone(), s);
        }

        for agent in self.policy.scheduled(t) {
            let passed = !self.pending.iter().any(|c| c.agent == agent);
            self.last_turn_passed.insert(agent, passed);
        }
        let agree = all_equal(stances.values());
        if agree && self.first_agreement.is_none() {
            self.first_agreement = Some(t);
        }
        let everyone_passed = self
            .agents
            .keys()
            .all(|a| self.last_turn_passed.get(a) == Some(&true));
        let status = if agree && self.options.freeze_on_resolve {
            Status::Resolved { at: t }
        } else if everyone_passed || t >= self.options.cap {
            Status::Unresolved { at: t }
        } else {
            Status::Running
        };

        let mut contributions = std::mem::take(&mut self.pending);
        contributions.sort();
        for c in &contributions {
            self.contributors.insert(c.edge(), (c.agent.clone(), t));
        }
        self.acted.clear();
        self.exchange = next_exchange;
        self.agents = next_agents;
        self.status = status;
        self.history.push(Snapshot {
            record: TimestepRecord {
                t,
                contributions,
                learnt,
                strengths,
                stances,
                status,
            },
            exchange: self.exchange.clone(),
            agents: self.agents.clone(),
        });
        Ok(self.current())
    }

    /// Ends a running exchange as unresolved at the last closed timestep.
    pub fn abandon(&mut self) {
        if self.status.is_running() {
            self.status = Status::Unresolved { at: self.t() };
            self.pending.clear();
            self.acted.clear();
        }
    }

    /// The exchange seen through `agent`'s eyes: exchange arguments plus
    /// `extra`, every private edge among them, and the agent's own biases.
    pub fn private_view(
        &self,
        agent: &AgentId,
        extra: &BTreeSet<ArgumentId>,
    ) -> Result<Qbaf, ExchangeError> {
        let triple = self.agent(agent)?;
        if let Some(arg) = extra.iter().find(|a| !triple.qbaf.contains(a)) {
            return Err(ExchangeError::UnknownExtraArgument {
                agent: agent.clone(),
                arg: arg.clone(),
            });
        }
        let keep: BTreeSet<ArgumentId> = self.exchange.arguments().union(extra).cloned().collect();
        Ok(triple.qbaf.restrict(&keep))
    }

    /// Change in the explanandum's strength, in `agent`'s view, from
    /// bringing the edge's source into the exchange.
    pub fn perceived_effect(&self, agent: &AgentId, edge: &Edge) -> Result<f64, ExchangeError> {
        self.check_effect_shape(agent, edge)?;
        let triple = self.agent(agent)?;
        let base = self.view_strength(agent, triple, &BTreeSet::new())?;
        let with = self.view_strength(agent, triple, &BTreeSet::from([edge.from.clone()]))?;
        Ok(with - base)
    }

    /// Every edge with a defined perceived effect, with that effect, in edge
    /// order.
    pub fn perceived_effects(&self, agent: &AgentId) -> Result<Vec<(Edge, Polarity, f64)>, ExchangeError> {
        let triple = self.agent(agent)?;
        let base = self.view_strength(agent, triple, &BTreeSet::new())?;
        let mut by_source: BTreeMap<ArgumentId, f64> = BTreeMap::new();
        let mut out = Vec::new();
        for (edge, polarity) in self.unexchanged_edges(agent)? {
            if self.check_effect_shape(agent, &edge).is_err() {
                continue;
            }
            let effect = match by_source.get(&edge.from) {
                Some(v) => *v,
                None => {
                    let v = self.view_strength(agent, triple, &BTreeSet::from([edge.from.clone()]))? - base;
                    by_source.insert(edge.from.clone(), v);
                    v
                }
            };
            out.push((edge, polarity, effect));
        }
        Ok(out)
    }

    fn check_effect_shape(&self, agent: &AgentId, edge: &Edge) -> Result<(), ExchangeError> {
        let triple = self.agent(agent)?;
        let reason = if !triple.qbaf.has_edge(edge) {
            Some("not a private edge")
        } else if self.exchange.has_edge(edge) {
            Some("already exchanged")
        } else if self.exchange.contains(&edge.from) {
            Some("source already in the exchange")
        } else if !self.exchange.contains(&edge.to) {
            Some("target not in the exchange")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(ExchangeError::EffectShape {
                edge: edge.clone(),
                reason,
            }),
            None => Ok(()),
        }
    }

    fn view_strength(
        &self,
        agent: &AgentId,
        triple: &PrivateTriple,
        extra: &BTreeSet<ArgumentId>,
    ) -> Result<f64, ExchangeError> {
        let view = self.private_view(agent, extra)?;
        Ok(evaluate(&view, triple.semantics)?[&self.explanandum])
    }
}

fn add_with_endpoints(baf: &mut Baf, edge: Edge, polarity: Polarity) -> Result<(), GraphError> {
    baf.add_argument(edge.from.clone());
    baf.add_argument(edge.to.clone());
    baf.add_edge(edge, polarity)
}

/// Arguing for when no other agent is more positive and some are less;
/// arguing against in the mirrored case.
pub fn agent_state_among(stances: &BTreeMap<AgentId, Stance>, agent: &AgentId) -> Option<AgentState> {
    let mine = *stances.get(agent)?;
    let others: Vec<Stance> = stances
        .iter()
        .filter(|(a, _)| *a != agent)
        .map(|(_, s)| *s)
        .collect();
    if others.iter().all(|s| mine >= *s) && others.iter().any(|s| mine > *s) {
        Some(AgentState::ArguingFor)
    } else if others.iter().all(|s| mine <= *s) && others.iter().any(|s| mine < *s) {
        Some(AgentState::ArguingAgainst)
    } else {
        None
    }
}

fn all_equal<'a>(mut stances: impl Iterator<Item = &'a Stance>) -> bool {
    match stances.next() {
        None => true,
        Some(first) => stances.all(|s| s == first),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn mu() -> AgentId {
        AgentId::machine()
    }

    fn eta() -> AgentId {
        AgentId::human()
    }

    fn id(s: &str) -> ArgumentId {
        ArgumentId::from(s)
    }

    fn contribute(agent: AgentId, edges: &[(&str, &str, Polarity)]) -> Contribution {
        Contribution {
            agent,
            edges: edges
                .iter()
                .map(|(a, b, p)| (Edge::new(*a, *b), *p))
                .collect(),
        }
    }

    fn constant(v: f64) -> impl FnMut(&LearningContext<'_>) -> f64 {
        move |_| v
    }

    #[test]
    fn initial_state() {
        let s = fixtures::running_example_state();
        assert_eq!(s.t(), 0);
        assert_eq!(s.exchange(), &Baf::singleton(id("e")));
        assert_eq!(s.stance(&mu()).unwrap(), Stance::Negative);
        assert_eq!(s.stance(&eta()).unwrap(), Stance::Positive);
        assert_eq!(s.agent_state(&mu()).unwrap(), AgentState::ArguingAgainst);
        assert_eq!(s.agent_state(&eta()).unwrap(), AgentState::ArguingFor);
    }

    #[test]
    fn no_conflict_is_rejected() {
        let (e, mut agents) = fixtures::running_example_agents();
        let eta_triple = agents[&eta()].clone();
        agents.insert(mu(), eta_triple);
        let err = ExchangeState::new(e, agents, TurnPolicy::machine_first(), Default::default())
            .unwrap_err();
        assert_eq!(err, ExchangeError::NoConflict);
    }

    #[test]
    fn three_agents_with_one_dissenter() {
        let (e, mut agents) = fixtures::running_example_agents();
        agents.insert(AgentId::new("zeta"), agents[&eta()].clone());
        let s = ExchangeState::new(
            e,
            agents,
            TurnPolicy::RoundRobin {
                order: vec![mu(), eta(), AgentId::new("zeta")],
            },
            Default::default(),
        )
        .unwrap();
        assert_eq!(s.agent_state(&mu()).unwrap(), AgentState::ArguingAgainst);
        assert_eq!(s.agent_state(&eta()).unwrap(), AgentState::ArguingFor);
    }

    #[test]
    fn single_agent_is_rejected() {
        let (e, mut agents) = fixtures::running_example_agents();
        agents.remove(&eta());
        let err = ExchangeState::new(e, agents, TurnPolicy::machine_first(), Default::default())
            .unwrap_err();
        assert_eq!(err, ExchangeError::TooFewAgents);
    }

    #[test]
    fn nothing_learnt_from_known_edges() {
        let mut s = fixtures::running_example_state();
        s.submit(contribute(mu(), &[("a", "e", Polarity::Attack)])).unwrap();
        s.submit(contribute(eta(), &[("b", "e", Polarity::Support)])).unwrap();
        let snap = s.close_timestep(&mut constant(0.5)).unwrap();
        assert!(snap.record.learnt.is_empty());
        assert_eq!(snap.exchange.edge_count(), 2);
        assert_eq!(snap.record.status, Status::Running);
    }

    #[test]
    fn learning_a_new_argument() {
        let mut s = fixtures::running_example_state();
        s.submit(contribute(mu(), &[("a", "e", Polarity::Attack)])).unwrap();
        s.submit(contribute(eta(), &[("b", "e", Polarity::Support)])).unwrap();
        s.close_timestep(&mut constant(0.5)).unwrap();
        s.submit(contribute(mu(), &[("c", "a", Polarity::Support)])).unwrap();
        let snap = s.close_timestep(&mut constant(0.2)).unwrap();
        assert_eq!(
            snap.record.learnt[&eta()],
            vec![Learnt {
                arg: id("c"),
                bias: 0.2
            }]
        );
        let q = &snap.agents[&eta()].qbaf;
        assert_eq!(q.polarity(&Edge::new("c", "a")), Some(Polarity::Support));
        assert!((snap.strength(&eta(), &id("e")).unwrap() - 0.648).abs() < 1e-9);
    }

    #[test]
    fn duplicate_edge_is_rejected() {
        let mut s = fixtures::running_example_state();
        s.submit(contribute(mu(), &[("a", "e", Polarity::Attack)])).unwrap();
        s.submit(Contribution::pass(eta())).unwrap();
        s.close_timestep(&mut constant(0.5)).unwrap();
        s.submit(contribute(mu(), &[("c", "a", Polarity::Support)])).unwrap();
        s.close_timestep(&mut constant(0.5)).unwrap();
        let err = s
            .submit(contribute(eta(), &[("a", "e", Polarity::Attack)]))
            .unwrap_err();
        assert_eq!(err, ExchangeError::DuplicateEdge(Edge::new("a", "e")));
    }

    #[test]
    fn untruthful_and_unknown_edges_are_rejected() {
        let mut s = fixtures::running_example_state();
        let err = s
            .submit(contribute(mu(), &[("a", "e", Polarity::Support)]))
            .unwrap_err();
        assert!(matches!(err, ExchangeError::Untruthful { .. }));
        let err = s
            .submit(contribute(mu(), &[("f", "b", Polarity::Support)]))
            .unwrap_err();
        assert!(matches!(err, ExchangeError::Untruthful { .. }));
    }

    #[test]
    fn edge_must_reach_the_explanandum() {
        let mut s = fixtures::running_example_state();
        let err = s
            .submit(contribute(mu(), &[("c", "a", Polarity::Support)]))
            .unwrap_err();
        assert!(matches!(err, ExchangeError::InvalidExchange(r) if r.violates(2)));
    }

    #[test]
    fn out_of_turn_and_double_action() {
        let (e, agents) = fixtures::running_example_agents();
        let mut s =
            ExchangeState::new(e, agents, TurnPolicy::machine_first(), Default::default()).unwrap();
        let err = s.submit(Contribution::pass(eta())).unwrap_err();
        assert_eq!(err, ExchangeError::NotScheduled { agent: eta(), t: 1 });
        s.submit(Contribution::pass(mu())).unwrap();
        let err = s.submit(Contribution::pass(mu())).unwrap_err();
        assert_eq!(err, ExchangeError::AlreadyActed { agent: mu(), t: 1 });
    }

    #[test]
    fn cannot_close_early() {
        let mut s = fixtures::running_example_state();
        s.submit(Contribution::pass(mu())).unwrap();
        let err = s.close_timestep(&mut constant(0.5)).unwrap_err();
        assert_eq!(
            err,
            ExchangeError::NotAllActed {
                t: 1,
                missing: vec![eta()]
            }
        );
    }

    #[test]
    fn full_pass_round_ends_unresolved() {
        let (e, agents) = fixtures::running_example_agents();
        let mut s =
            ExchangeState::new(e, agents, TurnPolicy::machine_first(), Default::default()).unwrap();
        s.submit(Contribution::pass(mu())).unwrap();
        assert_eq!(s.close_timestep(&mut constant(0.5)).unwrap().record.status, Status::Running);
        s.submit(Contribution::pass(eta())).unwrap();
        let snap = s.close_timestep(&mut constant(0.5)).unwrap();
        assert_eq!(snap.record.status, Status::Unresolved { at: 2 });
        assert!(s.submit(Contribution::pass(mu())).is_err());
    }

    #[test]
    fn cap_ends_unresolved() {
        let (e, agents) = fixtures::running_example_agents();
        let options = ExchangeOptions {
            cap: 1,
            freeze_on_resolve: true,
        };
        let mut s = ExchangeState::new(e, agents, TurnPolicy::machine_first(), options).unwrap();
        s.submit(contribute(mu(), &[("a", "e", Polarity::Attack)])).unwrap();
        let snap = s.close_timestep(&mut constant(0.5)).unwrap();
        assert_eq!(snap.record.status, Status::Unresolved { at: 1 });
    }

    #[test]
    fn learning_with_full_bias_resolves() {
        let mut s = fixtures::running_example_state();
        s.submit(contribute(mu(), &[("a", "e", Polarity::Attack)])).unwrap();
        s.submit(contribute(eta(), &[("b", "e", Polarity::Support)])).unwrap();
        s.close_timestep(&mut constant(0.5)).unwrap();
        s.submit(contribute(mu(), &[("c", "a", Polarity::Support)])).unwrap();
        let snap = s.close_timestep(&mut constant(1.0)).unwrap();
        assert_eq!(snap.record.status, Status::Resolved { at: 2 });
        assert_eq!(snap.stance(&eta()), Some(Stance::Negative));
        assert!(s.submit(Contribution::pass(eta())).is_err());
    }

    #[test]
    fn bias_outside_range_is_rejected() {
        let mut s = fixtures::running_example_state();
        s.submit(contribute(mu(), &[("a", "e", Polarity::Attack)])).unwrap();
        s.submit(contribute(eta(), &[("b", "e", Polarity::Support)])).unwrap();
        s.close_timestep(&mut constant(0.5)).unwrap();
        s.submit(contribute(mu(), &[("c", "a", Polarity::Support)])).unwrap();
        let err = s.close_timestep(&mut constant(1.5)).unwrap_err();
        assert!(matches!(err, ExchangeError::BiasOutOfRange { .. }));
    }

    #[test]
    fn private_view_and_effects() {
        let s = fixtures::after_second_timestep(0.2);
        let view = s.private_view(&eta(), &BTreeSet::new()).unwrap();
        assert!(s.exchange().is_subgraph_of(view.baf()));
        assert!(view.is_subgraph_of(&s.agents()[&eta()].qbaf));
        let e = evaluate(&view, SemanticsKind::DfQuad).unwrap()[&id("e")];
        assert!((e - 0.216).abs() < 1e-9);

        let fb = s.perceived_effect(&eta(), &Edge::new("f", "b")).unwrap();
        let da = s.perceived_effect(&eta(), &Edge::new("d", "a")).unwrap();
        assert!((fb - 0.24).abs() < 1e-9);
        assert!((da - 0.216).abs() < 1e-9);
        let all = s.perceived_effects(&eta()).unwrap();
        assert_eq!(all.len(), 2);

        let err = s.perceived_effect(&eta(), &Edge::new("a", "e")).unwrap_err();
        assert!(matches!(err, ExchangeError::EffectShape { .. }));
    }

    #[test]
    fn view_at_start_is_the_explanandum_alone() {
        let s = fixtures::running_example_state();
        let view = s.private_view(&eta(), &BTreeSet::new()).unwrap();
        assert_eq!(view.arguments().len(), 1);
        assert_eq!(view.base_score(&id("e")), Some(0.6));
        let err = s
            .private_view(&mu(), &BTreeSet::from([id("f")]))
            .unwrap_err();
        assert!(matches!(err, ExchangeError::UnknownExtraArgument { .. }));
    }

    #[test]
    fn zero_bias_leaf_has_no_effect() {
        let (e, mut agents) = fixtures::running_example_agents();
        let triple = agents.get_mut(&eta()).unwrap();
        let (baf, mut scores) = triple.qbaf.clone().into_parts();
        scores.insert(id("f"), 0.0);
        triple.qbaf = Qbaf::new(baf, scores).unwrap();
        let mut s = ExchangeState::new(e, agents, fixtures::example_schedule(), Default::default())
            .unwrap();
        s.submit(contribute(mu(), &[("a", "e", Polarity::Attack)])).unwrap();
        s.submit(contribute(eta(), &[("b", "e", Polarity::Support)])).unwrap();
        s.close_timestep(&mut constant(0.5)).unwrap();
        assert_eq!(s.perceived_effect(&eta(), &Edge::new("f", "b")).unwrap(), 0.0);
    }
}
