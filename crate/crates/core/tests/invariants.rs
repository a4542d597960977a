use std::collections::BTreeMap;

use argx_core::behaviours::{Behaviour, BiasPolicy, ContributionPolicy, OffsetScope};
use argx_core::exchange::{AgentId, ExchangeState, Status};
use argx_core::runner::{run, Setup, Transcript};
use argx_core::scenario::{sample_scenario, GeneratorConfig, SemanticsChoice};
use argx_core::semantics::SemanticsKind;
use proptest::prelude::*;

fn policy(i: u8) -> ContributionPolicy {
    match i % 5 {
        0 => ContributionPolicy::Unresponsive,
        1 => ContributionPolicy::Shallow { max: 2, repeat: false },
        2 => ContributionPolicy::Greedy { budget: None },
        3 => ContributionPolicy::Greedy { budget: Some(3) },
        _ => ContributionPolicy::Counterfactual { budget: None },
    }
}

fn setup(seed: u64, m: u8, h: u8, c: f64, offset: f64, semantics: SemanticsChoice) -> Setup {
    let cfg = GeneratorConfig {
        semantics,
        ..GeneratorConfig::default()
    };
    let scenario = sample_scenario(seed, &cfg).expect("default generator accepts").scenario;
    let behaviours = BTreeMap::from([
        (
            AgentId::machine(),
            Behaviour {
                contribution: policy(m),
                bias: BiasPolicy::Constant { c },
            },
        ),
        (
            AgentId::human(),
            Behaviour {
                contribution: policy(h),
                bias: BiasPolicy::Random {
                    offset,
                    scope: OffsetScope::CounterAligned,
                },
            },
        ),
    ]);
    scenario.setup(&behaviours, seed)
}

fn finished(s: &Setup) -> ExchangeState {
    run(s).expect("generated runs finish")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn contributions_are_truthful_and_learnt(
        seed in any::<u64>(), m in 0u8..5, h in 0u8..5, c in 0.0f64..=1.0, offset in -0.4f64..=0.0,
    ) {
        let s = finished(&setup(seed, m, h, c, offset, SemanticsChoice::Random));
        let history = s.history();
        for w in history.windows(2) {
            for ce in &w[1].record.contributions {
                let own = &w[0].agents[&ce.agent].qbaf;
                prop_assert_eq!(own.polarity(&ce.edge()), Some(ce.polarity));
            }
        }
        let last = history.last().unwrap();
        for (agent, triple) in &last.agents {
            prop_assert!(last.exchange.is_subgraph_of(triple.qbaf.baf()), "{agent} missed an exchanged edge");
        }
    }

    #[test]
    fn base_scores_are_kept_and_learnt_ones_in_range(
        seed in any::<u64>(), m in 0u8..5, h in 0u8..5, c in 0.0f64..=1.0, offset in -0.4f64..=0.0,
    ) {
        let s = finished(&setup(seed, m, h, c, offset, SemanticsChoice::Random));
        let first = &s.history()[0];
        let last = s.current();
        for (agent, triple) in &last.agents {
            let start = &first.agents[agent].qbaf;
            for (arg, score) in triple.qbaf.base_scores() {
                match start.base_score(arg) {
                    Some(original) => prop_assert_eq!(original, *score),
                    None => prop_assert!(triple.range.contains(*score)),
                }
            }
        }
    }

    #[test]
    fn status_settles_once(
        seed in any::<u64>(), m in 0u8..5, h in 0u8..5, c in 0.0f64..=1.0,
    ) {
        let s = finished(&setup(seed, m, h, c, 0.0, SemanticsChoice::Random));
        let history = s.history();
        let (last, earlier) = history.split_last().unwrap();
        prop_assert!(earlier.iter().all(|x| x.record.status == Status::Running));
        prop_assert!(last.t() <= s.options().cap);
        match last.record.status {
            Status::Resolved { at } | Status::Unresolved { at } => prop_assert_eq!(at, last.t()),
            Status::Running => prop_assert!(false, "run ended while running"),
        }
        if last.record.status.is_resolved() {
            let stances: Vec<_> = last.record.stances.values().collect();
            prop_assert!(stances.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn zero_bias_leaves_change_nothing(
        seed in any::<u64>(), h in 0u8..5, offset in -0.4f64..=0.0,
    ) {
        // A DF-QuAD machine learning at 0 keeps its strengths through any
        // timestep whose edges all start at arguments new to it. An older
        // zero-bias argument that gains a supporter the machine already
        // held does move things, so other timesteps are not constrained.
        let s = finished(&setup(seed, 2, h, 0.0, offset, SemanticsChoice::Fixed(SemanticsKind::DfQuad)));
        let mu = AgentId::machine();
        for w in s.history().windows(2) {
            let held = &w[0].agents[&mu].qbaf;
            if w[1].record.contributions.iter().all(|c| !held.contains(&c.from)) {
                for (arg, v) in &w[0].record.strengths[&mu] {
                    prop_assert_eq!(w[1].strength(&mu, arg), Some(*v));
                }
            }
        }
    }

    #[test]
    fn transcripts_round_trip_and_replay(
        seed in any::<u64>(), m in 0u8..5, h in 0u8..5, c in 0.0f64..=1.0, offset in -0.4f64..=0.0,
    ) {
        let setup = setup(seed, m, h, c, offset, SemanticsChoice::Random);
        let state = finished(&setup);
        let t = Transcript::from_state(setup, &state);
        let text = t.to_jsonl();
        let back = Transcript::parse(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert!(back.verify().unwrap().matches());
        prop_assert_eq!(back.rerun().unwrap().to_jsonl(), text);
    }
}

