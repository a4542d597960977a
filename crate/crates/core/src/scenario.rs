//! Scenarios: the agents' starting triples, either read from a file or
//! drawn at random from a shared "universal" framework.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::Open01;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behaviours::Behaviour;
use crate::exchange::{AgentId, ExchangeOptions, PrivateTriple, TurnPolicy};
use crate::graph::{ArgumentId, Baf, Edge, Qbaf};
use crate::rng;
use crate::runner::{AgentSetup, Setup};
use crate::semantics::{EvaluationRange, SemanticsKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub explanandum: ArgumentId,
    /// The framework every private one was cut from, when generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universal: Option<Baf>,
    pub agents: BTreeMap<AgentId, PrivateTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_policy: Option<TurnPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u32>,
}

impl Scenario {
    /// The configured policy, or agents in id order with the machine first
    /// when there is one.
    pub fn turn_policy(&self) -> TurnPolicy {
        if let Some(p) = &self.turn_policy {
            return p.clone();
        }
        let mut order: Vec<AgentId> = self.agents.keys().cloned().collect();
        if let Some(i) = order.iter().position(|a| *a == AgentId::machine()) {
            let m = order.remove(i);
            order.insert(0, m);
        }
        TurnPolicy::RoundRobin { order }
    }

    pub fn options(&self) -> ExchangeOptions {
        let mut o = ExchangeOptions::default();
        if let Some(cap) = self.cap {
            o.cap = cap;
        }
        o
    }

    /// A run setup; agents missing from `behaviours` are left to be played
    /// by hand.
    pub fn setup(&self, behaviours: &BTreeMap<AgentId, Behaviour>, seed: u64) -> Setup {
        Setup {
            explanandum: self.explanandum.clone(),
            agents: self
                .agents
                .iter()
                .map(|(id, triple)| {
                    let a = AgentSetup {
                        triple: triple.clone(),
                        behaviour: behaviours.get(id).copied(),
                    };
                    (id.clone(), a)
                })
                .collect(),
            turn_policy: self.turn_policy(),
            options: self.options(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticsChoice {
    /// Uniform over all kinds, independently per agent.
    Random,
    Fixed(SemanticsKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub universal_size: usize,
    pub branching: usize,
    pub extra_edge_probability: f64,
    pub private_size: usize,
    pub semantics: SemanticsChoice,
    pub max_rejections: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            universal_size: 30,
            branching: 6,
            extra_edge_probability: 0.5,
            private_size: 15,
            semantics: SemanticsChoice::Random,
            max_rejections: 10_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("no conflicting pair of agents after {0} draws")]
    TooManyRejections(u32),
    #[error("private size {private} exceeds universal size {universal}")]
    PrivateTooLarge { private: usize, universal: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub scenario: Scenario,
    /// Draws thrown away because the agents agreed.
    pub rejections: u32,
}

fn argument_name(i: usize, total: usize) -> ArgumentId {
    if i == 0 {
        return ArgumentId::from("e");
    }
    let width = (total.max(2) - 1).to_string().len();
    ArgumentId::new(format!("a{i:0width$}"))
}

/// A random tree of bounded branching rooted at `e`, plus optional extra
/// edges from each argument to an earlier one, half of all edges (rounding
/// up) attacks.
pub fn gen_universal_baf(rng: &mut impl Rng, cfg: &GeneratorConfig) -> Baf {
    let n = cfg.universal_size.max(1);
    let names: Vec<ArgumentId> = (0..n).map(|i| argument_name(i, n)).collect();
    let mut children = vec![0usize; n];
    let mut parent = vec![0usize; n];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 1..n {
        let open: Vec<usize> = (0..i).filter(|&j| children[j] < cfg.branching).collect();
        let p = *open.choose(rng).expect("a tree with room always has an open slot");
        children[p] += 1;
        parent[i] = p;
        pairs.push((i, p));
    }
    for i in 1..n {
        if rng.gen_bool(cfg.extra_edge_probability) {
            let j = rng.gen_range(0..i);
            if j != parent[i] {
                pairs.push((i, j));
            }
        }
    }
    let attacks: BTreeSet<usize> = index::sample(rng, pairs.len(), pairs.len().div_ceil(2))
        .into_iter()
        .collect();
    let edge = |(i, j): (usize, usize)| Edge::new(names[i].clone(), names[j].clone());
    let (att, sup): (Vec<_>, Vec<_>) = pairs
        .iter()
        .enumerate()
        .partition(|(k, _)| attacks.contains(k));
    Baf::new(
        names[0].clone(),
        names.iter().cloned(),
        att.into_iter().map(|(_, p)| edge(*p)),
        sup.into_iter().map(|(_, p)| edge(*p)),
    )
    .expect("generated edges join generated arguments")
}

/// Grows a set from the explanandum by repeatedly picking an included
/// argument with unincluded attackers or supporters and adding one of them,
/// then keeps every universal edge inside the set. Biases are uniform on the
/// open unit interval.
pub fn sample_private_qbaf(universal: &Baf, size: usize, rng: &mut impl Rng) -> Qbaf {
    let mut preds: BTreeMap<&ArgumentId, Vec<&ArgumentId>> = BTreeMap::new();
    for (edge, _) in universal.edges() {
        preds.entry(&edge.to).or_default().push(&edge.from);
    }
    let mut included: BTreeSet<ArgumentId> = BTreeSet::from([universal.explanandum().clone()]);
    while included.len() < size {
        let frontier: Vec<(&ArgumentId, Vec<&ArgumentId>)> = included
            .iter()
            .filter_map(|a| {
                let fresh: Vec<&ArgumentId> = preds
                    .get(a)?
                    .iter()
                    .copied()
                    .filter(|p| !included.contains(*p))
                    .collect();
                (!fresh.is_empty()).then_some((a, fresh))
            })
            .collect();
        let Some((_, fresh)) = frontier.choose(rng) else {
            break;
        };
        let pick = (*fresh.choose(rng).expect("frontier entries are nonempty")).clone();
        included.insert(pick);
    }
    let baf = universal.restrict(&included);
    let scores = baf
        .arguments()
        .iter()
        .map(|a| (a.clone(), rng.sample::<f64, _>(Open01)))
        .collect();
    Qbaf::new(baf, scores).expect("every kept argument is scored")
}

fn pick_semantics(choice: SemanticsChoice, rng: &mut impl Rng) -> SemanticsKind {
    match choice {
        SemanticsChoice::Fixed(k) => k,
        SemanticsChoice::Random => *SemanticsKind::ALL.choose(rng).expect("kinds exist"),
    }
}

/// A machine and a human cut from one universal framework, redrawn until
/// their stances on the explanandum differ.
pub fn sample_scenario(seed: u64, cfg: &GeneratorConfig) -> Result<Generated, GenerateError> {
    if cfg.private_size > cfg.universal_size {
        return Err(GenerateError::PrivateTooLarge {
            private: cfg.private_size,
            universal: cfg.universal_size,
        });
    }
    let mut rng = rng::stream(seed, &[rng::tag("scenario")]);
    for rejections in 0..=cfg.max_rejections {
        let universal = gen_universal_baf(&mut rng, cfg);
        let mut agents = BTreeMap::new();
        for id in [AgentId::machine(), AgentId::human()] {
            let qbaf = sample_private_qbaf(&universal, cfg.private_size, &mut rng);
            let kind = pick_semantics(cfg.semantics, &mut rng);
            agents.insert(id, PrivateTriple::new(EvaluationRange::default(), qbaf, kind));
        }
        let stances: Vec<_> = agents
            .values()
            .map(|t| t.stance_on_explanandum().expect("generated frameworks are acyclic"))
            .collect();
        if stances[0] != stances[1] {
            return Ok(Generated {
                scenario: Scenario {
                    explanandum: universal.explanandum().clone(),
                    universal: Some(universal),
                    agents,
                    turn_policy: None,
                    cap: None,
                },
                rejections,
            });
        }
    }
    Err(GenerateError::TooManyRejections(cfg.max_rejections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cfg() -> GeneratorConfig {
        GeneratorConfig::default()
    }

    #[test]
    fn universal_shape() {
        for seed in 0..200 {
            let mut r = rng::stream(seed, &[]);
            let u = gen_universal_baf(&mut r, &cfg());
            assert_eq!(u.arguments().len(), 30);
            let m = u.edge_count();
            assert!((29..=58).contains(&m), "{m} edges");
            assert_eq!(u.attacks().len(), m.div_ceil(2));
            assert!(u.is_valid(), "{}", u.validate());
            // Tree edges plus at most one extra edge per non-root argument.
            for a in u.arguments() {
                let out = u.attacks().iter().chain(u.supports()).filter(|e| &e.from == a).count();
                assert!(out <= 2);
            }
        }
    }

    #[test]
    fn universal_is_deterministic() {
        let a = gen_universal_baf(&mut rng::stream(42, &[]), &cfg());
        let b = gen_universal_baf(&mut rng::stream(42, &[]), &cfg());
        assert_eq!(a, b);
    }

    #[test]
    fn private_samples_are_valid_restrictions() {
        let mut r = rng::stream(9, &[]);
        for _ in 0..1000 {
            let u = gen_universal_baf(&mut r, &cfg());
            let q = sample_private_qbaf(&u, 15, &mut r);
            assert_eq!(q.arguments().len(), 15);
            assert!(q.contains(u.explanandum()));
            assert!(q.is_valid(), "{}", q.validate());
            assert!(q.baf().is_subgraph_of(&u));
            assert_eq!(q.baf(), &u.restrict(q.arguments()));
            assert!(q.base_scores().values().all(|s| *s > 0.0 && *s < 1.0));
        }
    }

    #[test]
    fn scenarios_conflict_and_replay() {
        let mut total_rejections = 0;
        for seed in 0..200 {
            let g = sample_scenario(seed, &cfg()).unwrap();
            let s: Vec<_> = g
                .scenario
                .agents
                .values()
                .map(|t| t.stance_on_explanandum().unwrap())
                .collect();
            assert_ne!(s[0], s[1]);
            assert_eq!(sample_scenario(seed, &cfg()).unwrap(), g);
            total_rejections += g.rejections;
        }
        assert!(total_rejections < 200 * 100);
    }

    #[test]
    fn fixed_semantics_is_respected() {
        let c = GeneratorConfig {
            semantics: SemanticsChoice::Fixed(SemanticsKind::DfQuad),
            ..cfg()
        };
        let g = sample_scenario(3, &c).unwrap();
        assert!(g.scenario.agents.values().all(|t| t.semantics == SemanticsKind::DfQuad));
    }

    #[test]
    fn scenario_file_round_trip() {
        let (e, agents) = fixtures::running_example_agents();
        let s = Scenario {
            explanandum: e,
            universal: None,
            agents,
            turn_policy: None,
            cap: Some(3),
        };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Scenario>(&json).unwrap(), s);
        assert_eq!(s.turn_policy(), TurnPolicy::machine_first());
        assert_eq!(s.options().cap, 3);
    }

    #[test]
    fn tiny_universal_still_valid() {
        let c = GeneratorConfig {
            universal_size: 2,
            private_size: 2,
            ..cfg()
        };
        let u = gen_universal_baf(&mut rng::stream(1, &[]), &c);
        assert_eq!(u.edge_count(), 1);
        assert_eq!(u.attacks().len(), 1);
    }
}
