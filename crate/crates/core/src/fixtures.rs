//! The small machine/human disagreement used throughout the docs, tests and
//! the session demo.
//!
//! The machine holds `e, a, b, c` with `a` attacking `e`, `b` supporting
//! `e` and `c` supporting `a`; the human holds `e, a, b, d, f` with `a`
//! attacking `e`, `d` attacking `a`, `b` supporting `e` and `f` supporting
//! `b`. Under DF-QuAD the machine is negative on `e` and the human positive.

use std::collections::{BTreeMap, BTreeSet};

use crate::exchange::{
    AgentId, Contribution, ExchangeOptions, ExchangeState, LearningContext, PrivateTriple,
    TurnPolicy,
};
use crate::graph::{ArgumentId, Baf, Edge, Polarity, Qbaf};
use crate::scenario::Scenario;

fn qbaf(scores: &[(&str, f64)], attacks: &[(&str, &str)], supports: &[(&str, &str)]) -> Qbaf {
    let baf = Baf::new(
        ArgumentId::from("e"),
        scores.iter().map(|(a, _)| ArgumentId::from(*a)),
        attacks.iter().map(|(a, b)| Edge::new(*a, *b)),
        supports.iter().map(|(a, b)| Edge::new(*a, *b)),
    )
    .expect("fixture is well formed");
    Qbaf::new(baf, scores.iter().map(|(a, s)| (ArgumentId::from(*a), *s)).collect())
        .expect("fixture has every score")
}

pub fn machine_qbaf() -> Qbaf {
    qbaf(
        &[("e", 0.7), ("a", 0.8), ("b", 0.4), ("c", 0.6)],
        &[("a", "e")],
        &[("b", "e"), ("c", "a")],
    )
}

pub fn human_qbaf() -> Qbaf {
    qbaf(
        &[("e", 0.6), ("a", 0.8), ("b", 0.2), ("d", 0.6), ("f", 0.5)],
        &[("a", "e"), ("d", "a")],
        &[("b", "e"), ("f", "b")],
    )
}

pub fn running_example_agents() -> (ArgumentId, BTreeMap<AgentId, PrivateTriple>) {
    (
        ArgumentId::from("e"),
        BTreeMap::from([
            (AgentId::machine(), PrivateTriple::dfquad(machine_qbaf())),
            (AgentId::human(), PrivateTriple::dfquad(human_qbaf())),
        ]),
    )
}

/// Both agents at timestep 1, the machine at 2, the human at 3.
pub fn example_schedule() -> TurnPolicy {
    TurnPolicy::Schedule {
        steps: vec![
            BTreeSet::from([AgentId::machine(), AgentId::human()]),
            BTreeSet::from([AgentId::machine()]),
            BTreeSet::from([AgentId::human()]),
        ],
    }
}

/// Timestep 0 under [`example_schedule`], capped at timestep 3.
pub fn running_example_state() -> ExchangeState {
    let (e, agents) = running_example_agents();
    let options = ExchangeOptions {
        cap: 3,
        ..ExchangeOptions::default()
    };
    ExchangeState::new(e, agents, example_schedule(), options).expect("fixture has a conflict")
}

/// After the machine's attack and the human's support at timestep 1 and
/// the machine's support of `a` by `c` at timestep 2, with the human
/// learning `c` at `human_bias_for_c`.
pub fn after_second_timestep(human_bias_for_c: f64) -> ExchangeState {
    let mut s = running_example_state();
    let step = |s: &mut ExchangeState, agent: AgentId, from: &str, to: &str, p: Polarity| {
        s.submit(Contribution {
            agent,
            edges: vec![(Edge::new(from, to), p)],
        })
        .expect("fixture contribution is legal");
    };
    step(&mut s, AgentId::machine(), "a", "e", Polarity::Attack);
    step(&mut s, AgentId::human(), "b", "e", Polarity::Support);
    s.close_timestep(&mut |_: &LearningContext<'_>| 0.5)
        .expect("nothing to learn");
    step(&mut s, AgentId::machine(), "c", "a", Polarity::Support);
    s.close_timestep(&mut |_: &LearningContext<'_>| human_bias_for_c)
        .expect("bias in range");
    s
}

/// The same two agents as a scenario file: round robin, machine first.
pub fn running_example_scenario() -> Scenario {
    let (explanandum, agents) = running_example_agents();
    Scenario {
        explanandum,
        universal: None,
        agents,
        turn_policy: None,
        cap: None,
    }
}
