//! One live exchange between a configured machine and a human client.
//!
//! The machine acts as soon as it is scheduled. When its move teaches the
//! human new arguments, the timestep stays open until the human has said
//! how much they trust each of them; nothing is defaulted on their behalf.

use std::collections::{BTreeMap, BTreeSet};

use argx_core::behaviours::{Behaviour, BiasPolicy, ContributionPolicy, MixedBiases, PolicyBiases, ScriptedBiases};
use argx_core::exchange::{AgentId, Contribution, ContributedEdge, ExchangeError, ExchangeState, Status};
use argx_core::graph::{ArgumentId, Edge, Polarity, Qbaf};
use argx_core::runner::{Setup, Transcript};
use argx_core::scenario::{sample_scenario, GeneratorConfig, Scenario};
use argx_core::semantics::{Stance, StrengthMap};
use argx_core::fixtures;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

fn yes() -> bool {
    true
}

/// Body of `POST /sessions`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// A scenario to play. Omitted together with `generate`, the built-in
    /// demo is used.
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Draw a random scenario from this seed instead.
    #[serde(default)]
    pub generate: Option<u64>,
    #[serde(default = "default_machine")]
    pub machine: Behaviour,
    /// Seeds the machine's bias stream, if it draws at random.
    #[serde(default)]
    pub seed: u64,
    /// Classify exchanged arguments as pro or con in views.
    #[serde(default = "yes")]
    pub hints: bool,
}

impl Default for CreateSession {
    fn default() -> Self {
        Self {
            scenario: None,
            generate: None,
            machine: default_machine(),
            seed: 0,
            hints: true,
        }
    }
}

pub fn default_machine() -> Behaviour {
    Behaviour {
        contribution: ContributionPolicy::Greedy { budget: None },
        bias: BiasPolicy::Constant { c: 0.5 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: ArgumentId,
    pub to: ArgumentId,
    /// Taken from the human's own framework when left out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
}

/// Body of `POST /sessions/{id}/actions`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    Contribute { edges: Vec<EdgeDoc> },
    AssignBias { biases: BTreeMap<ArgumentId, f64> },
    Pass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    Human,
    /// The human owes biases for arguments they have just learnt.
    AssignBias,
    Machine,
    Over,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangedEdge {
    pub from: ArgumentId,
    pub to: ArgumentId,
    pub polarity: Polarity,
    pub agent: AgentId,
    pub t: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeView {
    pub arguments: BTreeSet<ArgumentId>,
    /// Every exchanged edge, including the open timestep's moves.
    pub edges: Vec<ExchangedEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivateView {
    pub qbaf: Qbaf,
    pub strengths: StrengthMap,
    /// Edges the human could still contribute right now.
    pub available: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hints {
    pub pro: BTreeSet<ArgumentId>,
    pub con: BTreeSet<ArgumentId>,
}

/// What the human client gets to see. The machine's framework, scores and
/// unexchanged edges never appear here.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub id: String,
    pub explanandum: ArgumentId,
    pub human: AgentId,
    pub machine: AgentId,
    /// Last closed timestep.
    pub t: u32,
    pub status: Status,
    pub turn: Turn,
    pub awaiting_bias: Vec<ArgumentId>,
    pub stances: BTreeMap<AgentId, Stance>,
    pub exchange: ExchangeView,
    pub private: PrivateView,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hints: Option<Hints>,
}

pub struct Session {
    id: String,
    setup: Setup,
    state: ExchangeState,
    policies: PolicyBiases,
    machine: AgentId,
    human: AgentId,
    hints: bool,
}

fn engine(e: ExchangeError) -> ApiError {
    ApiError::from_engine(e)
}

impl Session {
    pub fn create(id: String, req: CreateSession) -> Result<Self, ApiError> {
        let scenario = match (req.scenario, req.generate) {
            (Some(_), Some(_)) => {
                return Err(ApiError::invalid_config("give either `scenario` or `generate`, not both"));
            }
            (Some(s), None) => s,
            (None, Some(seed)) => sample_scenario(seed, &GeneratorConfig::default())
                .map_err(|e| ApiError::invalid_config(e.to_string()))?
                .scenario,
            (None, None) => fixtures::running_example_scenario(),
        };
        let machine = AgentId::machine();
        if !scenario.agents.contains_key(&machine) {
            return Err(ApiError::invalid_config(format!("scenario has no `{machine}` agent")));
        }
        let others: Vec<&AgentId> = scenario.agents.keys().filter(|a| **a != machine).collect();
        let [human] = others.as_slice() else {
            return Err(ApiError::invalid_config("scenario needs exactly one agent besides the machine"));
        };
        let human = (*human).clone();
        let setup = scenario.setup(&BTreeMap::from([(machine.clone(), req.machine)]), req.seed);
        let state = setup
            .start()
            .map_err(|e| ApiError::invalid_config(e.to_string()))?;
        let mut session = Self {
            id,
            policies: setup.policy_biases(),
            setup,
            state,
            machine,
            human,
            hints: req.hints,
        };
        session.advance()?;
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> &ExchangeState {
        &self.state
    }

    fn running(&self) -> bool {
        self.state.status().is_running()
    }

    /// Arguments the human must score before the open timestep can close.
    pub fn awaiting_bias(&self) -> Vec<ArgumentId> {
        if !self.running() || !self.state.waiting_on().is_empty() {
            return Vec::new();
        }
        self.state.to_learn().remove(&self.human).unwrap_or_default()
    }

    pub fn turn(&self) -> Turn {
        if !self.running() {
            Turn::Over
        } else if !self.awaiting_bias().is_empty() {
            Turn::AssignBias
        } else if self.state.waiting_on().contains(&self.human) {
            Turn::Human
        } else {
            Turn::Machine
        }
    }

    fn close(&mut self, scripted: &mut ScriptedBiases) -> Result<(), ApiError> {
        let mut biases = MixedBiases {
            policies: &mut self.policies,
            scripted,
        };
        self.state.close_timestep(&mut biases).map_err(engine)?;
        Ok(())
    }

    /// Plays the machine until the human is needed or the exchange ends.
    fn advance(&mut self) -> Result<(), ApiError> {
        while self.running() {
            if self.state.waiting_on().is_empty() {
                if !self.awaiting_bias().is_empty() {
                    return Ok(());
                }
                self.close(&mut ScriptedBiases::default())?;
                continue;
            }
            if self.state.waiting_on().contains(&self.human) {
                return Ok(());
            }
            for agent in self.state.waiting_on() {
                let behaviour = self
                    .setup
                    .behaviour(&agent)
                    .copied()
                    .ok_or_else(|| ApiError::internal(format!("no behaviour for `{agent}`")))?;
                let edges = behaviour.contribution.select(&agent, &self.state).map_err(engine)?;
                self.state.submit(Contribution { agent, edges }).map_err(engine)?;
            }
        }
        Ok(())
    }

    pub fn act(&mut self, action: Action) -> Result<(), ApiError> {
        if !self.running() {
            return Err(ApiError::finished(self.state.status()));
        }
        match action {
            Action::Contribute { edges } => {
                let edges = edges
                    .into_iter()
                    .map(|e| self.resolve_edge(e))
                    .collect::<Result<Vec<_>, _>>()?;
                if edges.is_empty() {
                    return Err(ApiError::unprocessable("empty_contribution", "contribute at least one edge, or pass"));
                }
                self.human_move(edges)?;
            }
            Action::Pass => self.human_move(Vec::new())?,
            Action::AssignBias { biases } => self.assign(biases)?,
        }
        self.advance()
    }

    fn resolve_edge(&self, doc: EdgeDoc) -> Result<(Edge, Polarity), ApiError> {
        let edge = Edge::new(doc.from, doc.to);
        let own = self
            .state
            .current()
            .agents
            .get(&self.human)
            .and_then(|t| t.qbaf.polarity(&edge));
        match (doc.polarity, own) {
            (Some(p), _) => Ok((edge, p)),
            (None, Some(p)) => Ok((edge, p)),
            (None, None) => Err(ApiError::unprocessable_with(
                "untruthful_edge",
                format!("{edge} is not in your framework"),
                serde_json::json!({ "from": edge.from, "to": edge.to }),
            )),
        }
    }

    fn human_move(&mut self, edges: Vec<(Edge, Polarity)>) -> Result<(), ApiError> {
        match self.turn() {
            Turn::Human => {}
            Turn::AssignBias => {
                return Err(ApiError::conflict(
                    "bias_pending",
                    "assign biases to the newly learnt arguments first",
                    Some(serde_json::json!({ "awaiting_bias": self.awaiting_bias() })),
                ))
            }
            _ => return Err(ApiError::conflict("out_of_turn", "it is not the human's turn", None)),
        }
        self.state
            .submit(Contribution {
                agent: self.human.clone(),
                edges,
            })
            .map_err(engine)
    }

    fn assign(&mut self, biases: BTreeMap<ArgumentId, f64>) -> Result<(), ApiError> {
        let wanted = self.awaiting_bias();
        if wanted.is_empty() {
            return Err(ApiError::conflict("no_bias_pending", "there is nothing to assign a bias to", None));
        }
        let given: Vec<ArgumentId> = biases.keys().cloned().collect();
        if given != wanted {
            return Err(ApiError::unprocessable_with(
                "bias_mismatch",
                "give a bias for exactly the newly learnt arguments",
                serde_json::json!({ "awaiting_bias": wanted, "given": given }),
            ));
        }
        let range = self.state.agent(&self.human).map_err(engine)?.range;
        if let Some((arg, &bias)) = biases.iter().find(|(_, b)| !(range.min..=range.max).contains(*b)) {
            return Err(ApiError::from_engine(ExchangeError::BiasOutOfRange {
                agent: self.human.clone(),
                arg: arg.clone(),
                bias,
            }));
        }
        let mut scripted = ScriptedBiases {
            biases: biases
                .into_iter()
                .map(|(arg, b)| ((self.human.clone(), arg), b))
                .collect(),
        };
        self.close(&mut scripted)
    }

    pub fn view(&self) -> SessionView {
        let current = self.state.current();
        let mut edges: Vec<ExchangedEdge> = self
            .state
            .contributors()
            .iter()
            .map(|(edge, (agent, t))| ExchangedEdge {
                from: edge.from.clone(),
                to: edge.to.clone(),
                polarity: self.state.exchange().polarity(edge).unwrap_or(Polarity::Support),
                agent: agent.clone(),
                t: *t,
            })
            .collect();
        let open = self.state.open_timestep();
        edges.extend(self.state.pending().iter().map(|c: &ContributedEdge| ExchangedEdge {
            from: c.from.clone(),
            to: c.to.clone(),
            polarity: c.polarity,
            agent: c.agent.clone(),
            t: open,
        }));
        edges.sort_by(|a, b| (a.t, &a.from, &a.to).cmp(&(b.t, &b.from, &b.to)));
        let mut arguments = self.state.exchange().arguments().clone();
        for e in &edges {
            arguments.insert(e.from.clone());
            arguments.insert(e.to.clone());
        }
        let own = &current.agents[&self.human];
        let available = if self.turn() == Turn::Human {
            self.state
                .unexchanged_edges(&self.human)
                .unwrap_or_default()
                .into_iter()
                .filter(|(e, _)| self.state.exchange().contains(&e.to))
                .map(|(e, p)| EdgeDoc {
                    from: e.from,
                    to: e.to,
                    polarity: Some(p),
                })
                .collect()
        } else {
            Vec::new()
        };
        let hints = if self.hints {
            self.state.exchange().pro_con().ok().map(|pc| Hints {
                pro: pc.pro.into_iter().collect(),
                con: pc.con.into_iter().collect(),
            })
        } else {
            None
        };
        SessionView {
            id: self.id.clone(),
            explanandum: self.state.explanandum().clone(),
            human: self.human.clone(),
            machine: self.machine.clone(),
            t: self.state.t(),
            status: self.state.status(),
            turn: self.turn(),
            awaiting_bias: self.awaiting_bias(),
            stances: current.record.stances.clone(),
            exchange: ExchangeView { arguments, edges },
            private: PrivateView {
                qbaf: own.qbaf.clone(),
                strengths: current.record.strengths.get(&self.human).cloned().unwrap_or_default(),
                available,
            },
            hints,
        }
    }

    /// The full record, machine setup included, so it can be verified
    /// elsewhere. Only handed out once the exchange is over.
    pub fn transcript(&self) -> Result<Transcript, ApiError> {
        if self.running() {
            return Err(ApiError::conflict(
                "session_running",
                "the transcript reveals the machine's framework and is only available once the exchange has ended",
                None,
            ));
        }
        Ok(Transcript::from_state(self.setup.clone(), &self.state))
    }
}
