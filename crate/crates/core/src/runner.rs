//! Driving exchanges end to end and recording them as JSON Lines.
//!
//! A transcript's first line carries the [`Setup`] next to the timestep 0
//! record, so a transcript alone is enough to re-run the exchange. Agents
//! with a [`Behaviour`] are re-executed on replay; agents without one (a
//! person playing through the session service, say) are replayed from the
//! recorded contributions and biases.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behaviours::{Behaviour, MixedBiases, PolicyBiases, ScriptedBiases};
use crate::exchange::{
    AgentId, Contribution, ExchangeError, ExchangeOptions, ExchangeState, PrivateTriple,
    TimestepRecord, TurnPolicy,
};
use crate::graph::ArgumentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSetup {
    #[serde(flatten)]
    pub triple: PrivateTriple,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behaviour: Option<Behaviour>,
}

/// Everything needed to start (and re-run) an exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub explanandum: ArgumentId,
    pub agents: BTreeMap<AgentId, AgentSetup>,
    pub turn_policy: TurnPolicy,
    #[serde(default)]
    pub options: ExchangeOptions,
    #[serde(default)]
    pub seed: u64,
}

impl Setup {
    pub fn start(&self) -> Result<ExchangeState, ExchangeError> {
        let triples = self
            .agents
            .iter()
            .map(|(id, a)| (id.clone(), a.triple.clone()))
            .collect();
        ExchangeState::new(
            self.explanandum.clone(),
            triples,
            self.turn_policy.clone(),
            self.options,
        )
    }

    pub fn behaviour(&self, agent: &AgentId) -> Option<&Behaviour> {
        self.agents.get(agent)?.behaviour.as_ref()
    }

    /// Bias sources for every agent with a behaviour, seeded from the setup.
    pub fn policy_biases(&self) -> PolicyBiases {
        PolicyBiases::new(
            self.seed,
            self.agents
                .iter()
                .filter_map(|(id, a)| Some((id.clone(), a.behaviour?.bias))),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub setup: Setup,
    pub records: Vec<TimestepRecord>,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript is empty")]
    Empty,
    #[error("first line carries no setup")]
    MissingSetup,
    #[error("line {line} has timestep {found}, expected {expected}")]
    OutOfOrder {
        line: usize,
        expected: u32,
        found: u32,
    },
    #[error("replay failed at timestep {t}: {source}")]
    Replay { t: u32, source: ExchangeError },
}

#[derive(Serialize, Deserialize)]
struct Line {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    setup: Option<Setup>,
    #[serde(flatten)]
    record: TimestepRecord,
}

impl Transcript {
    pub fn from_state(setup: Setup, state: &ExchangeState) -> Self {
        Self {
            setup,
            records: state.history().iter().map(|s| s.record.clone()).collect(),
        }
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for line in self.lines() {
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for line in self.lines() {
            s.push_str(&line);
            s.push('\n');
        }
        s
    }

    /// One JSON line per timestep, the setup riding on the first.
    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.records.iter().enumerate().map(|(i, r)| {
            let line = Line {
                setup: (i == 0).then(|| self.setup.clone()),
                record: r.clone(),
            };
            serde_json::to_string(&line).expect("transcript lines serialize")
        })
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self, TranscriptError> {
        let mut setup = None;
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|source| TranscriptError::Json {
                line: i + 1,
                source,
            })?;
            if records.is_empty() {
                setup = Some(parsed.setup.ok_or(TranscriptError::MissingSetup)?);
            }
            let expected = records.len() as u32;
            if parsed.record.t != expected {
                return Err(TranscriptError::OutOfOrder {
                    line: i + 1,
                    expected,
                    found: parsed.record.t,
                });
            }
            records.push(parsed.record);
        }
        Ok(Self {
            setup: setup.ok_or(TranscriptError::Empty)?,
            records,
        })
    }

    pub fn parse(s: &str) -> Result<Self, TranscriptError> {
        Self::read_jsonl(s.as_bytes())
    }

    /// Rebuilds the exchange from the recorded moves alone, checking that
    /// every move is still legal.
    pub fn rebuild(&self) -> Result<ExchangeState, TranscriptError> {
        drive(&self.setup, &self.records, false)
    }

    /// Re-runs every agent that has a behaviour, feeds the others their
    /// recorded moves, and compares the result line by line.
    pub fn verify(&self) -> Result<Verification, TranscriptError> {
        let rerun = self.rerun()?;
        let ours: Vec<String> = self.lines().collect();
        let theirs: Vec<String> = rerun.lines().collect();
        let first_difference = (0..ours.len().max(theirs.len()))
            .find(|&i| ours.get(i) != theirs.get(i))
            .map(|i| i as u32);
        Ok(Verification {
            first_difference,
            recorded: ours.len(),
            replayed: theirs.len(),
        })
    }

    /// The transcript a fresh run produces: behaviours re-decide, everyone
    /// else repeats their recorded moves and biases.
    pub fn rerun(&self) -> Result<Transcript, TranscriptError> {
        let state = drive(&self.setup, &self.records, true)?;
        Ok(Transcript::from_state(self.setup.clone(), &state))
    }

    pub fn final_record(&self) -> &TimestepRecord {
        self.records.last().expect("transcripts start at timestep 0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verification {
    pub first_difference: Option<u32>,
    pub recorded: usize,
    pub replayed: usize,
}

impl Verification {
    pub fn matches(&self) -> bool {
        self.first_difference.is_none()
    }
}

/// A run that stopped on an engine error, with everything up to it.
#[derive(Debug, Error)]
#[error("run failed at timestep {t}: {source}")]
pub struct RunError {
    pub t: u32,
    pub source: ExchangeError,
    pub partial: Option<Box<ExchangeState>>,
}

/// Runs the exchange with every agent following its behaviour.
pub fn run(setup: &Setup) -> Result<ExchangeState, RunError> {
    let mut state = setup.start().map_err(|source| RunError {
        t: 0,
        source,
        partial: None,
    })?;
    let mut biases = setup.policy_biases();
    while state.status().is_running() {
        let t = state.open_timestep();
        let fail = |state: &ExchangeState, source| RunError {
            t,
            source,
            partial: Some(Box::new(state.clone())),
        };
        for agent in state.scheduled() {
            let Some(b) = setup.behaviour(&agent) else {
                return Err(fail(&state, ExchangeError::UnknownAgent(agent)));
            };
            let edges = b.contribution.select(&agent, &state).map_err(|e| fail(&state, e))?;
            state
                .submit(Contribution { agent, edges })
                .map_err(|e| fail(&state, e))?;
        }
        if let Err(e) = state.close_timestep(&mut biases) {
            return Err(fail(&state, e));
        }
    }
    Ok(state)
}

pub fn run_transcript(setup: &Setup) -> Result<Transcript, RunError> {
    run(setup).map(|s| Transcript::from_state(setup.clone(), &s))
}

fn drive(
    setup: &Setup,
    script: &[TimestepRecord],
    use_policies: bool,
) -> Result<ExchangeState, TranscriptError> {
    let mut state = setup
        .start()
        .map_err(|source| TranscriptError::Replay { t: 0, source })?;
    let mut policies = if use_policies {
        setup.policy_biases()
    } else {
        PolicyBiases::new(setup.seed, [])
    };
    while state.status().is_running() {
        let t = state.open_timestep();
        let Some(record) = script.get(t as usize) else {
            // A recording that stops while the exchange is live is an
            // abandoned session; a re-run that would carry on shows up as a
            // status difference on the last recorded line.
            state.abandon();
            break;
        };
        step(setup, &mut state, record, &mut policies, use_policies)?;
    }
    Ok(state)
}

fn step(
    setup: &Setup,
    state: &mut ExchangeState,
    record: &TimestepRecord,
    policies: &mut PolicyBiases,
    use_policies: bool,
) -> Result<(), TranscriptError> {
    let t = state.open_timestep();
    let replay = |source| TranscriptError::Replay { t, source };
    for agent in state.scheduled() {
        let edges = match (use_policies, setup.behaviour(&agent)) {
            (true, Some(b)) => b.contribution.select(&agent, state).map_err(replay)?,
            _ => record
                .contributions
                .iter()
                .filter(|c| c.agent == agent)
                .map(|c| (c.edge(), c.polarity))
                .collect(),
        };
        state.submit(Contribution { agent, edges }).map_err(replay)?;
    }
    let mut scripted = ScriptedBiases::default();
    for (agent, learnt) in &record.learnt {
        for l in learnt {
            scripted.biases.insert((agent.clone(), l.arg.clone()), l.bias);
        }
    }
    let mut biases = MixedBiases {
        policies,
        scripted: &mut scripted,
    };
    state.close_timestep(&mut biases).map_err(replay)?;
    Ok(())
}
