//! How agents pick biases for learnt arguments and what they contribute.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exchange::{AgentId, AgentState, BiasSource, ExchangeError, ExchangeState, LearningContext};
use crate::graph::{ArgumentId, Edge, Polarity};
use crate::rng;

/// Which learnt arguments a random bias policy's offset applies to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetScope {
    /// Pro arguments when arguing against, con arguments when arguing for.
    #[default]
    CounterAligned,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasPolicy {
    Constant {
        c: f64,
    },
    /// A uniform draw, shifted by `offset` (normally negative) and clamped
    /// to the agent's range.
    Random {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        scope: OffsetScope,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContributionPolicy {
    Unresponsive,
    /// Up to `max` direct supports (attacks) of the explanandum when arguing
    /// for (against) it, on the agent's first turn only unless `repeat`.
    Shallow {
        max: usize,
        #[serde(default)]
        repeat: bool,
    },
    /// One strongest in-line edge per turn. `budget` caps edges over the
    /// whole exchange.
    Greedy {
        #[serde(default)]
        budget: Option<usize>,
    },
    /// One edge per turn with the largest perceived effect in the agent's
    /// favour.
    Counterfactual {
        #[serde(default)]
        budget: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Behaviour {
    pub contribution: ContributionPolicy,
    pub bias: BiasPolicy,
}

impl ContributionPolicy {
    /// The edges `agent` contributes at the open timestep; empty is a pass.
    pub fn select(
        &self,
        agent: &AgentId,
        state: &ExchangeState,
    ) -> Result<Vec<(Edge, Polarity)>, ExchangeError> {
        let stance = match state.agent_state(agent) {
            Ok(s) => s,
            Err(ExchangeError::StateUndefined(_)) => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let budget_left = |budget: Option<usize>| {
            budget.map_or(usize::MAX, |b| b.saturating_sub(state.contributed_by(agent)))
        };
        match *self {
            ContributionPolicy::Unresponsive => Ok(Vec::new()),
            ContributionPolicy::Shallow { max, repeat } => {
                if !repeat && state.has_had_turn(agent) {
                    return Ok(Vec::new());
                }
                select_shallow(agent, state, stance, max)
            }
            ContributionPolicy::Greedy { budget } => {
                if budget_left(budget) == 0 {
                    return Ok(Vec::new());
                }
                Ok(select_greedy(agent, state, stance)?.into_iter().collect())
            }
            ContributionPolicy::Counterfactual { budget } => {
                if budget_left(budget) == 0 {
                    return Ok(Vec::new());
                }
                Ok(select_counterfactual(agent, state, stance)?.into_iter().collect())
            }
        }
    }
}

fn private_strengths<'a>(
    agent: &AgentId,
    state: &'a ExchangeState,
) -> Result<&'a BTreeMap<ArgumentId, f64>, ExchangeError> {
    state
        .current()
        .record
        .strengths
        .get(agent)
        .ok_or_else(|| ExchangeError::UnknownAgent(agent.clone()))
}

/// Strongest unexchanged direct edges onto the explanandum of the polarity
/// matching `stance`, ties broken by lower source id.
pub fn select_shallow(
    agent: &AgentId,
    state: &ExchangeState,
    stance: AgentState,
    max: usize,
) -> Result<Vec<(Edge, Polarity)>, ExchangeError> {
    let wanted = match stance {
        AgentState::ArguingFor => Polarity::Support,
        AgentState::ArguingAgainst => Polarity::Attack,
    };
    let strengths = private_strengths(agent, state)?;
    let mut candidates: Vec<(Edge, Polarity)> = state
        .unexchanged_edges(agent)?
        .into_iter()
        .filter(|(e, p)| *p == wanted && &e.to == state.explanandum())
        .collect();
    candidates.sort_by(|(x, _), (y, _)| {
        strengths[&y.from]
            .total_cmp(&strengths[&x.from])
            .then_with(|| x.from.cmp(&y.from))
    });
    candidates.truncate(max);
    Ok(candidates)
}

/// Unexchanged edges an agent in `stance` may contribute greedily: supports
/// onto pro arguments (or the explanandum) and attacks onto con arguments
/// when arguing for, the reverse when arguing against.
pub fn greedy_candidates(
    agent: &AgentId,
    state: &ExchangeState,
    stance: AgentState,
) -> Result<Vec<(Edge, Polarity)>, ExchangeError> {
    let pc = state.exchange().pro_con()?;
    let e = state.explanandum();
    let in_line = |edge: &Edge, p: Polarity| {
        let pro_or_e = edge.to == *e || pc.pro.contains(&edge.to);
        let con = pc.con.contains(&edge.to);
        match (stance, p) {
            (AgentState::ArguingFor, Polarity::Support) => pro_or_e,
            (AgentState::ArguingFor, Polarity::Attack) => con,
            (AgentState::ArguingAgainst, Polarity::Support) => con,
            (AgentState::ArguingAgainst, Polarity::Attack) => pro_or_e,
        }
    };
    Ok(state
        .unexchanged_edges(agent)?
        .into_iter()
        .filter(|(edge, p)| in_line(edge, *p))
        .collect())
}

/// Length of the shortest path from the edge's source to the explanandum
/// once the edge is in the exchange.
pub fn distance_with_edge(state: &ExchangeState, edge: &Edge) -> usize {
    let ex = state.exchange();
    let through = ex
        .distance_to_explanandum(&edge.to)
        .map_or(usize::MAX, |d| d + 1);
    let existing = ex.distance_to_explanandum(&edge.from).unwrap_or(usize::MAX);
    through.min(existing)
}

/// The greedy choice: strongest source, then closest to the explanandum,
/// then lowest `(source, target)`.
pub fn select_greedy(
    agent: &AgentId,
    state: &ExchangeState,
    stance: AgentState,
) -> Result<Option<(Edge, Polarity)>, ExchangeError> {
    let strengths = private_strengths(agent, state)?;
    let candidates = greedy_candidates(agent, state, stance)?;
    Ok(candidates
        .into_iter()
        .map(|(edge, p)| {
            let d = distance_with_edge(state, &edge);
            (edge, p, d)
        })
        .min_by(|(x, _, dx), (y, _, dy)| {
            strengths[&y.from]
                .total_cmp(&strengths[&x.from])
                .then(dx.cmp(dy))
                .then_with(|| x.cmp(y))
        })
        .map(|(edge, p, _)| (edge, p)))
}

/// The counterfactual choice: the largest positive (arguing for) or most
/// negative (arguing against) perceived effect, ties by lowest edge.
pub fn select_counterfactual(
    agent: &AgentId,
    state: &ExchangeState,
    stance: AgentState,
) -> Result<Option<(Edge, Polarity)>, ExchangeError> {
    let sign = match stance {
        AgentState::ArguingFor => 1.0,
        AgentState::ArguingAgainst => -1.0,
    };
    let mut best: Option<(Edge, Polarity, f64)> = None;
    for (edge, p, effect) in state.perceived_effects(agent)? {
        let score = sign * effect;
        if score <= 0.0 {
            continue;
        }
        // Effects come in edge order, so keeping the first maximum breaks
        // ties by lowest edge.
        if best.as_ref().is_none_or(|(_, _, s)| score > *s) {
            best = Some((edge, p, score));
        }
    }
    Ok(best.map(|(e, p, _)| (e, p)))
}

/// Bias policies for a set of agents, each with its own random stream.
pub struct PolicyBiases {
    agents: BTreeMap<AgentId, (BiasPolicy, ChaCha8Rng)>,
}

impl PolicyBiases {
    pub fn new(seed: u64, policies: impl IntoIterator<Item = (AgentId, BiasPolicy)>) -> Self {
        let agents = policies
            .into_iter()
            .map(|(id, p)| {
                let stream = rng::stream(seed, &[rng::tag("bias"), rng::tag(id.as_str())]);
                (id, (p, stream))
            })
            .collect();
        Self { agents }
    }

    pub fn covers(&self, agent: &AgentId) -> bool {
        self.agents.contains_key(agent)
    }

    pub fn policy(&self, agent: &AgentId) -> Option<BiasPolicy> {
        self.agents.get(agent).map(|(p, _)| *p)
    }
}

/// Whether learning `arg` cuts against the position `agent` held at the
/// previous timestep.
pub fn counter_aligned(ctx: &LearningContext<'_>) -> bool {
    let Ok(stance) = ctx.state.agent_state(ctx.agent) else {
        return false;
    };
    let Ok(pc) = ctx.next_exchange.pro_con() else {
        return false;
    };
    match stance {
        AgentState::ArguingFor => pc.con.contains(ctx.argument),
        AgentState::ArguingAgainst => pc.pro.contains(ctx.argument),
    }
}

impl BiasSource for PolicyBiases {
    fn bias(&mut self, ctx: &LearningContext<'_>) -> f64 {
        let Some((policy, stream)) = self.agents.get_mut(ctx.agent) else {
            return f64::NAN;
        };
        let range = ctx.state.agents()[ctx.agent].range;
        match *policy {
            BiasPolicy::Constant { c } => c,
            BiasPolicy::Random { offset, scope } => {
                let u: f64 = stream.gen_range(0.0..=1.0);
                let shifted = match scope {
                    OffsetScope::All => true,
                    OffsetScope::CounterAligned => counter_aligned(ctx),
                };
                let v = if shifted { u + offset } else { u };
                v.clamp(range.min, range.max)
            }
        }
    }
}

/// Biases fixed in advance per agent and argument, e.g. from a transcript.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBiases {
    pub biases: BTreeMap<(AgentId, ArgumentId), f64>,
}

impl BiasSource for ScriptedBiases {
    fn bias(&mut self, ctx: &LearningContext<'_>) -> f64 {
        self.biases
            .get(&(ctx.agent.clone(), ctx.argument.clone()))
            .copied()
            .unwrap_or(f64::NAN)
    }
}

/// Routes each agent to whichever source covers it.
pub struct MixedBiases<'a> {
    pub policies: &'a mut PolicyBiases,
    pub scripted: &'a mut ScriptedBiases,
}

impl BiasSource for MixedBiases<'_> {
    fn bias(&mut self, ctx: &LearningContext<'_>) -> f64 {
        if self.policies.covers(ctx.agent) {
            self.policies.bias(ctx)
        } else {
            self.scripted.bias(ctx)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::{Contribution, ExchangeOptions, PrivateTriple, TurnPolicy};
    use crate::fixtures;
    use crate::graph::{Baf, Qbaf};
    use std::collections::BTreeSet;

    fn mu() -> AgentId {
        AgentId::machine()
    }

    fn eta() -> AgentId {
        AgentId::human()
    }

    #[test]
    fn shallow_opens_with_the_attack() {
        let s = fixtures::running_example_state();
        let picked = ContributionPolicy::Shallow { max: 1, repeat: false }
            .select(&mu(), &s)
            .unwrap();
        assert_eq!(picked, vec![(Edge::new("a", "e"), Polarity::Attack)]);
    }

    #[test]
    fn shallow_fires_once_unless_repeating() {
        let (e, agents) = fixtures::running_example_agents();
        let options = ExchangeOptions::default();
        let mut s = ExchangeState::new(e, agents, TurnPolicy::machine_first(), options).unwrap();
        s.submit(Contribution::pass(mu())).unwrap();
        s.close_timestep(&mut |_: &LearningContext<'_>| 0.5).unwrap();
        s.submit(Contribution {
            agent: eta(),
            edges: vec![(Edge::new("b", "e"), Polarity::Support)],
        })
        .unwrap();
        s.close_timestep(&mut |_: &LearningContext<'_>| 0.5).unwrap();
        let once = ContributionPolicy::Shallow { max: 1, repeat: false };
        let again = ContributionPolicy::Shallow { max: 1, repeat: true };
        assert!(once.select(&mu(), &s).unwrap().is_empty());
        assert_eq!(
            again.select(&mu(), &s).unwrap(),
            vec![(Edge::new("a", "e"), Polarity::Attack)]
        );
    }

    fn flat_state(scores: &[(&str, f64)], supports: &[&str], attacks: &[&str]) -> ExchangeState {
        // The first agent holds the given direct edges onto `e`; the second
        // holds only `e` with a score that disagrees.
        let mk = |scores: &[(&str, f64)], sup: &[&str], att: &[&str]| {
            let baf = Baf::new(
                "e".into(),
                scores.iter().map(|(a, _)| ArgumentId::from(*a)),
                att.iter().map(|a| Edge::new(*a, "e")),
                sup.iter().map(|a| Edge::new(*a, "e")),
            )
            .unwrap();
            let q = Qbaf::new(baf, scores.iter().map(|(a, s)| ((*a).into(), *s)).collect()).unwrap();
            PrivateTriple::dfquad(q)
        };
        let agents = BTreeMap::from([
            (mu(), mk(scores, supports, attacks)),
            (eta(), mk(&[("e", 0.1)], &[], &[])),
        ]);
        ExchangeState::new("e".into(), agents, TurnPolicy::machine_first(), Default::default())
            .unwrap()
    }

    #[test]
    fn shallow_ties_go_to_the_lower_id() {
        let s = flat_state(&[("e", 0.5), ("x", 0.7), ("y", 0.7), ("z", 0.3)], &["y", "x", "z"], &[]);
        assert_eq!(s.agent_state(&mu()).unwrap(), AgentState::ArguingFor);
        let picked = select_shallow(&mu(), &s, AgentState::ArguingFor, 2).unwrap();
        let sources: Vec<_> = picked.iter().map(|(e, _)| e.from.as_str()).collect();
        assert_eq!(sources, ["x", "y"]);
    }

    #[test]
    fn shallow_passes_when_exhausted() {
        let s = flat_state(&[("e", 0.5), ("x", 0.7)], &["x"], &[]);
        // Arguing against, but only supports are held.
        assert!(select_shallow(&mu(), &s, AgentState::ArguingAgainst, 3).unwrap().is_empty());
    }

    #[test]
    fn greedy_picks_the_attack_on_a() {
        let mut s = fixtures::after_second_timestep(0.2);
        assert_eq!(s.scheduled(), BTreeSet::from([eta()]));
        let picked = ContributionPolicy::Greedy { budget: None }.select(&eta(), &s).unwrap();
        assert_eq!(picked, vec![(Edge::new("d", "a"), Polarity::Attack)]);
        s.submit(Contribution {
            agent: eta(),
            edges: picked,
        })
        .unwrap();
        let mut biases = PolicyBiases::new(0, [(mu(), BiasPolicy::Constant { c: 0.6 })]);
        let snap = s.close_timestep(&mut biases).unwrap();
        assert!((snap.strength(&mu(), &"e".into()).unwrap() - 0.42).abs() < 1e-9);
        assert_eq!(snap.record.status, crate::exchange::Status::Unresolved { at: 3 });
    }

    #[test]
    fn counterfactual_picks_the_support_of_b() {
        let mut s = fixtures::after_second_timestep(0.2);
        let picked = ContributionPolicy::Counterfactual { budget: None }
            .select(&eta(), &s)
            .unwrap();
        assert_eq!(picked, vec![(Edge::new("f", "b"), Polarity::Support)]);
        s.submit(Contribution {
            agent: eta(),
            edges: picked,
        })
        .unwrap();
        let mut biases = PolicyBiases::new(0, [(mu(), BiasPolicy::Constant { c: 0.5 })]);
        let snap = s.close_timestep(&mut biases).unwrap();
        assert_eq!(snap.record.status, crate::exchange::Status::Resolved { at: 3 });
    }

    #[test]
    fn budget_stops_contributions() {
        let s = fixtures::after_second_timestep(0.2);
        let none_left = ContributionPolicy::Greedy { budget: Some(1) };
        // The human contributed (b, e) at timestep 1.
        assert!(none_left.select(&eta(), &s).unwrap().is_empty());
        let one_left = ContributionPolicy::Greedy { budget: Some(2) };
        assert_eq!(one_left.select(&eta(), &s).unwrap().len(), 1);
    }

    #[test]
    fn greedy_prefers_the_shallower_of_equal_sources() {
        // x (0.7) supports e directly; w (0.7) supports b which supports e.
        let baf = Baf::new(
            "e".into(),
            ["e", "b", "w", "x"].map(ArgumentId::from),
            [],
            [Edge::new("b", "e"), Edge::new("w", "b"), Edge::new("x", "e")],
        )
        .unwrap();
        let scores = [("e", 0.5), ("b", 0.6), ("w", 0.7), ("x", 0.7)];
        let q = Qbaf::new(baf, scores.iter().map(|(a, s)| ((*a).into(), *s)).collect()).unwrap();
        let other = {
            let baf = Baf::new("e".into(), ["e", "b"].map(ArgumentId::from), [], [Edge::new("b", "e")]).unwrap();
            Qbaf::new(baf, [("e", 0.1), ("b", 0.1)].iter().map(|(a, s)| ((*a).into(), *s)).collect()).unwrap()
        };
        let agents = BTreeMap::from([
            (mu(), PrivateTriple::dfquad(q)),
            (eta(), PrivateTriple::dfquad(other)),
        ]);
        let mut s = ExchangeState::new(
            "e".into(),
            agents,
            TurnPolicy::RoundRobin { order: vec![eta(), mu()] },
            Default::default(),
        )
        .unwrap();
        s.submit(Contribution {
            agent: eta(),
            edges: vec![(Edge::new("b", "e"), Polarity::Support)],
        })
        .unwrap();
        s.close_timestep(&mut |_: &LearningContext<'_>| 0.5).unwrap();
        assert!(s.status().is_running());
        // w and x both have strength 0.7; x sits one step from e, w two.
        let picked = select_greedy(&mu(), &s, AgentState::ArguingFor).unwrap();
        assert_eq!(picked, Some((Edge::new("x", "e"), Polarity::Support)));
    }

    #[test]
    fn constant_and_random_biases() {
        let s = fixtures::after_second_timestep(0.2);
        let next = s.exchange().clone();
        let ctx = LearningContext {
            agent: &eta(),
            argument: &"c".into(),
            state: &s,
            next_exchange: &next,
        };
        let mut constant = PolicyBiases::new(1, [(eta(), BiasPolicy::Constant { c: 1.0 })]);
        assert_eq!(constant.bias(&ctx), 1.0);

        let plain = BiasPolicy::Random { offset: 0.0, scope: OffsetScope::CounterAligned };
        let shifted = BiasPolicy::Random { offset: -0.2, scope: OffsetScope::CounterAligned };
        let mut a = PolicyBiases::new(9, [(eta(), plain)]);
        let mut b = PolicyBiases::new(9, [(eta(), shifted)]);
        // c is con, the human argues for e: counter-aligned.
        assert!(counter_aligned(&ctx));
        for _ in 0..50 {
            let (x, y) = (a.bias(&ctx), b.bias(&ctx));
            assert!((0.0..=1.0).contains(&x));
            assert_eq!(y, (x - 0.2).max(0.0));
        }
    }

    #[test]
    fn offset_skips_aligned_arguments() {
        let s = fixtures::after_second_timestep(0.2);
        let next = s.exchange().clone();
        let ctx = LearningContext {
            agent: &eta(),
            argument: &"b".into(),
            state: &s,
            next_exchange: &next,
        };
        assert!(!counter_aligned(&ctx));
        let shifted = BiasPolicy::Random { offset: -0.2, scope: OffsetScope::CounterAligned };
        let everything = BiasPolicy::Random { offset: -0.2, scope: OffsetScope::All };
        let plain = BiasPolicy::Random { offset: 0.0, scope: OffsetScope::All };
        let (mut x, mut y, mut z) = (
            PolicyBiases::new(3, [(eta(), shifted)]),
            PolicyBiases::new(3, [(eta(), everything)]),
            PolicyBiases::new(3, [(eta(), plain)]),
        );
        for _ in 0..20 {
            let raw = z.bias(&ctx);
            assert_eq!(x.bias(&ctx), raw);
            assert_eq!(y.bias(&ctx), (raw - 0.2).max(0.0));
        }
    }

    #[test]
    fn config_grammar() {
        let b: ContributionPolicy = serde_json::from_str(r#"{"kind":"shallow","max":3}"#).unwrap();
        assert_eq!(b, ContributionPolicy::Shallow { max: 3, repeat: false });
        let b: ContributionPolicy = serde_json::from_str(r#"{"kind":"greedy","budget":3}"#).unwrap();
        assert_eq!(b, ContributionPolicy::Greedy { budget: Some(3) });
        let b: ContributionPolicy = serde_json::from_str(r#"{"kind":"counterfactual"}"#).unwrap();
        assert_eq!(b, ContributionPolicy::Counterfactual { budget: None });
        let p: BiasPolicy = serde_json::from_str(r#"{"kind":"constant","c":0.5}"#).unwrap();
        assert_eq!(p, BiasPolicy::Constant { c: 0.5 });
        let p: BiasPolicy = serde_json::from_str(r#"{"kind":"random","offset":-0.2}"#).unwrap();
        assert_eq!(p, BiasPolicy::Random { offset: -0.2, scope: OffsetScope::CounterAligned });
    }
}
