//! Gradual semantics over acyclic quantitative bipolar frameworks.
//!
//! DF-QuAD is the reference method. QuAD, REB and QEM are provided so
//! simulated agents can disagree about how to weigh the same graph.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{ArgumentId, Qbaf};

pub type StrengthMap = BTreeMap<ArgumentId, f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticsError {
    #[error("value {0} is outside [0, 1]")]
    OutOfUnitInterval(f64),
    #[error("base score {score} of `{id}` is outside [0, 1]")]
    BaseScoreOutOfRange { id: ArgumentId, score: f64 },
    #[error("framework has a cycle through {0:?}")]
    Cyclic(Vec<ArgumentId>),
    #[error("strength {value} is outside the evaluation range [{min}, {max}]")]
    OutsideRange { value: f64, min: f64, max: f64 },
    #[error("evaluation range bounds must satisfy min <= neutral_low <= neutral_high <= max")]
    BadRange,
    #[error("unknown semantics `{0}` (expected df-quad, quad, reb or qem)")]
    UnknownKind(String),
}

fn check_unit(v: f64) -> Result<f64, SemanticsError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(SemanticsError::OutOfUnitInterval(v))
    }
}

// A full-strength attacker or supporter settles the result exactly; the
// arithmetic alone can land a rounding error short of 0 or 1.
fn aggregate(values: &[f64]) -> f64 {
    if values.contains(&1.0) {
        return 1.0;
    }
    values.iter().fold(0.0, |acc, v| acc + v - acc * v)
}

fn combine(v0: f64, att: f64, sup: f64) -> f64 {
    let gap = (sup - att).abs();
    match (att >= sup, gap == 1.0) {
        (true, true) => 0.0,
        (false, true) => 1.0,
        (true, false) => v0 - v0 * gap,
        (false, false) => v0 + (1.0 - v0) * gap,
    }
}

/// DF-QuAD strength aggregation: a left fold of `v1 + v2 - v1*v2`, with
/// the empty sequence mapping to 0.
pub fn dfquad_aggregate(values: &[f64]) -> Result<f64, SemanticsError> {
    for v in values {
        check_unit(*v)?;
    }
    Ok(aggregate(values))
}

/// DF-QuAD combination of a base score with aggregated attack and support.
pub fn dfquad_combine(v0: f64, att: f64, sup: f64) -> Result<f64, SemanticsError> {
    Ok(combine(check_unit(v0)?, check_unit(att)?, check_unit(sup)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemanticsKind {
    DfQuad,
    Quad,
    Reb,
    Qem,
}

impl SemanticsKind {
    pub const ALL: [SemanticsKind; 4] = [
        SemanticsKind::DfQuad,
        SemanticsKind::Quad,
        SemanticsKind::Reb,
        SemanticsKind::Qem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemanticsKind::DfQuad => "df-quad",
            SemanticsKind::Quad => "quad",
            SemanticsKind::Reb => "reb",
            SemanticsKind::Qem => "qem",
        }
    }

    /// Strength of one argument given its base score and the strengths of
    /// its attackers and supporters.
    pub fn update(self, base: f64, attackers: &[f64], supporters: &[f64]) -> f64 {
        match self {
            SemanticsKind::DfQuad => combine(base, aggregate(attackers), aggregate(supporters)),
            SemanticsKind::Quad => {
                let va = base * attackers.iter().map(|v| 1.0 - v).product::<f64>();
                let vs = 1.0 - (1.0 - base) * supporters.iter().map(|v| 1.0 - v).product::<f64>();
                match (attackers.is_empty(), supporters.is_empty()) {
                    (true, true) => base,
                    (false, true) => va,
                    (true, false) => vs,
                    (false, false) => (va + vs) / 2.0,
                }
            }
            SemanticsKind::Reb => {
                let energy = supporters.iter().sum::<f64>() - attackers.iter().sum::<f64>();
                1.0 - (1.0 - base * base) / (1.0 + base * energy.exp())
            }
            SemanticsKind::Qem => {
                let energy = supporters.iter().sum::<f64>() - attackers.iter().sum::<f64>();
                let h = |x: f64| x * x / (1.0 + x * x);
                if energy >= 0.0 {
                    base + (1.0 - base) * h(energy)
                } else {
                    base - base * h(-energy)
                }
            }
        }
    }
}

impl fmt::Display for SemanticsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemanticsKind {
    type Err = SemanticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        SemanticsKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| SemanticsError::UnknownKind(s.to_owned()))
    }
}

impl Serialize for SemanticsKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for SemanticsKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Evaluates every argument exactly once, parents before children.
///
/// Only cycles are fatal; arguments that fail to reach the explanandum are
/// still evaluated.
pub fn evaluate(q: &Qbaf, kind: SemanticsKind) -> Result<StrengthMap, SemanticsError> {
    let ids: Vec<&ArgumentId> = q.arguments().iter().collect();
    let index = |a: &ArgumentId| ids.binary_search(&a).expect("edge endpoint is an argument");
    let n = ids.len();

    let mut base = Vec::with_capacity(n);
    for id in &ids {
        let score = q.base_score(id).expect("qbaf has a score per argument");
        if !(0.0..=1.0).contains(&score) {
            return Err(SemanticsError::BaseScoreOutOfRange {
                id: (*id).clone(),
                score,
            });
        }
        base.push(score);
    }

    // Edges are ordered by source, so each parent list comes out sorted.
    let mut attackers = vec![Vec::new(); n];
    let mut supporters = vec![Vec::new(); n];
    let mut children = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for edge in q.attacks() {
        let (f, t) = (index(&edge.from), index(&edge.to));
        attackers[t].push(f);
        children[f].push(t);
        indegree[t] += 1;
    }
    for edge in q.supports() {
        let (f, t) = (index(&edge.from), index(&edge.to));
        supporters[t].push(f);
        children[f].push(t);
        indegree[t] += 1;
    }

    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut strength = vec![f64::NAN; n];
    let mut done = 0;
    let (mut att_buf, mut sup_buf) = (Vec::new(), Vec::new());
    while let Some(i) = ready.pop() {
        att_buf.clear();
        att_buf.extend(attackers[i].iter().map(|&p| strength[p]));
        sup_buf.clear();
        sup_buf.extend(supporters[i].iter().map(|&p| strength[p]));
        strength[i] = kind.update(base[i], &att_buf, &sup_buf);
        done += 1;
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if done < n {
        let stuck = (0..n)
            .filter(|&i| indegree[i] > 0)
            .map(|i| ids[i].clone())
            .collect();
        return Err(SemanticsError::Cyclic(stuck));
    }

    Ok(ids.into_iter().cloned().zip(strength).collect())
}

/// Strength of a single argument.
pub fn strength_of(
    q: &Qbaf,
    kind: SemanticsKind,
    arg: &ArgumentId,
) -> Result<Option<f64>, SemanticsError> {
    Ok(evaluate(q, kind)?.get(arg).copied())
}

/// Ordered stance: negative, neutral or positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stance {
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Neutral,
    #[serde(rename = "+")]
    Positive,
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stance::Negative => "-",
            Stance::Neutral => "0",
            Stance::Positive => "+",
        })
    }
}

/// A range `[min, max]` split into negative `[min, neutral_low)`, neutral
/// `[neutral_low, neutral_high]` and positive `(neutral_high, max]` bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRange {
    pub min: f64,
    pub max: f64,
    pub neutral_low: f64,
    pub neutral_high: f64,
}

impl Default for EvaluationRange {
    /// `[0, 0.5)`, `{0.5}`, `(0.5, 1]`.
    fn default() -> Self {
        Self {
            min: 0.0,
            max: 1.0,
            neutral_low: 0.5,
            neutral_high: 0.5,
        }
    }
}

impl EvaluationRange {
    pub fn new(min: f64, neutral_low: f64, neutral_high: f64, max: f64) -> Result<Self, SemanticsError> {
        let r = Self {
            min,
            max,
            neutral_low,
            neutral_high,
        };
        r.check()?;
        Ok(r)
    }

    pub fn check(&self) -> Result<(), SemanticsError> {
        let ordered = [self.min, self.neutral_low, self.neutral_high, self.max];
        if ordered.iter().all(|v| v.is_finite()) && ordered.windows(2).all(|w| w[0] <= w[1]) {
            Ok(())
        } else {
            Err(SemanticsError::BadRange)
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.min..=self.max).contains(&v)
    }

    pub fn stance_of(&self, v: f64) -> Result<Stance, SemanticsError> {
        if !self.contains(v) {
            return Err(SemanticsError::OutsideRange {
                value: v,
                min: self.min,
                max: self.max,
            });
        }
        Ok(if v < self.neutral_low {
            Stance::Negative
        } else if v <= self.neutral_high {
            Stance::Neutral
        } else {
            Stance::Positive
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Baf, Edge};
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn qbaf(scores: &[(&str, f64)], att: &[(&str, &str)], sup: &[(&str, &str)]) -> Qbaf {
        let baf = Baf::new(
            "e".into(),
            scores.iter().map(|(a, _)| ArgumentId::from(*a)),
            att.iter().map(|(a, b)| Edge::new(*a, *b)),
            sup.iter().map(|(a, b)| Edge::new(*a, *b)),
        )
        .unwrap();
        Qbaf::new(baf, scores.iter().map(|(a, s)| ((*a).into(), *s)).collect()).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < TOL, "{a} != {b}");
    }

    #[test]
    fn aggregate_basics() {
        assert_eq!(dfquad_aggregate(&[]).unwrap(), 0.0);
        close(dfquad_aggregate(&[0.5, 0.5]).unwrap(), 0.75);
        assert!(dfquad_aggregate(&[1.2]).is_err());
    }

    #[test]
    fn combine_basics() {
        close(dfquad_combine(0.7, 0.92, 0.4).unwrap(), 0.336);
        close(dfquad_combine(0.8, 0.0, 0.6).unwrap(), 0.92);
        assert!(dfquad_combine(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn machine_example_strengths() {
        let q = qbaf(
            &[("e", 0.7), ("a", 0.8), ("b", 0.4), ("c", 0.6)],
            &[("a", "e")],
            &[("b", "e"), ("c", "a")],
        );
        let s = evaluate(&q, SemanticsKind::DfQuad).unwrap();
        close(s[&"e".into()], 0.336);
        close(s[&"a".into()], 0.92);
        close(s[&"b".into()], 0.4);
        close(s[&"c".into()], 0.6);
    }

    #[test]
    fn cycle_is_an_error() {
        let baf = Baf::new(
            "e".into(),
            ["e".into(), "a".into(), "b".into()],
            [Edge::new("a", "b")],
            [Edge::new("b", "a"), Edge::new("a", "e")],
        )
        .unwrap();
        let q = Qbaf::new(
            baf,
            [("e", 0.5), ("a", 0.5), ("b", 0.5)]
                .into_iter()
                .map(|(a, s)| (a.into(), s))
                .collect(),
        )
        .unwrap();
        assert!(matches!(
            evaluate(&q, SemanticsKind::DfQuad),
            Err(SemanticsError::Cyclic(_))
        ));
    }

    #[test]
    fn base_score_outside_unit_interval() {
        let q = qbaf(&[("e", 1.5)], &[], &[]);
        assert!(evaluate(&q, SemanticsKind::DfQuad).is_err());
    }

    #[test]
    fn neutrality_for_every_kind() {
        let q = qbaf(&[("e", 0.37)], &[], &[]);
        for kind in SemanticsKind::ALL {
            close(evaluate(&q, kind).unwrap()[&"e".into()], 0.37);
        }
    }

    #[test]
    fn stances() {
        let r = EvaluationRange::default();
        assert_eq!(r.stance_of(0.336).unwrap(), Stance::Negative);
        assert_eq!(r.stance_of(0.5).unwrap(), Stance::Neutral);
        assert_eq!(r.stance_of(0.712).unwrap(), Stance::Positive);
        assert!(r.stance_of(1.01).is_err());
        assert!(Stance::Negative < Stance::Neutral && Stance::Neutral < Stance::Positive);
        assert_eq!(serde_json::to_string(&Stance::Negative).unwrap(), "\"-\"");
    }

    #[test]
    fn bad_range_rejected() {
        assert!(EvaluationRange::new(0.0, 0.6, 0.4, 1.0).is_err());
        assert!(EvaluationRange::new(0.0, 0.4, 0.6, 1.0).is_ok());
    }

    #[test]
    fn kind_names_are_case_insensitive() {
        assert_eq!("DF-QuAD".parse::<SemanticsKind>().unwrap(), SemanticsKind::DfQuad);
        assert_eq!("REB".parse::<SemanticsKind>().unwrap(), SemanticsKind::Reb);
        assert!("dfquad".parse::<SemanticsKind>().is_err());
        let k: SemanticsKind = serde_json::from_str("\"QEM\"").unwrap();
        assert_eq!(k, SemanticsKind::Qem);
        assert_eq!(serde_json::to_string(&SemanticsKind::Quad).unwrap(), "\"quad\"");
    }

    proptest! {
        #[test]
        fn aggregate_matches_product_form(vs in prop::collection::vec(0.0f64..=1.0, 0..12)) {
            let closed = 1.0 - vs.iter().map(|v| 1.0 - v).product::<f64>();
            prop_assert!((dfquad_aggregate(&vs).unwrap() - closed).abs() < 1e-12);
        }

        #[test]
        fn aggregate_is_permutation_invariant(mut vs in prop::collection::vec(0.0f64..=1.0, 0..10)) {
            let a = dfquad_aggregate(&vs).unwrap();
            vs.reverse();
            let mid = vs.len() / 2;
            vs.rotate_left(mid);
            prop_assert!((a - dfquad_aggregate(&vs).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn combination_matches_product_form(v in 0.0f64..=1.0, att in 0.0f64..=1.0, sup in 0.0f64..=1.0) {
            let gap = (sup - att).abs();
            let product = if att >= sup { v * (1.0 - gap) } else { 1.0 - (1.0 - v) * (1.0 - gap) };
            prop_assert!((dfquad_combine(v, att, sup).unwrap() - product).abs() < 1e-12);
        }

        #[test]
        fn full_strength_is_decisive(v in 0.0f64..=1.0, others in prop::collection::vec(0.0f64..1.0, 0..6)) {
            let mut with_one = others.clone();
            with_one.push(1.0);
            prop_assert_eq!(dfquad_aggregate(&with_one).unwrap(), 1.0);
            prop_assert_eq!(dfquad_combine(v, 1.0, 0.0).unwrap(), 0.0);
            prop_assert_eq!(dfquad_combine(v, 0.0, 1.0).unwrap(), 1.0);
        }

        #[test]
        fn equal_aggregates_cancel(v in 0.0f64..=1.0, x in 0.0f64..=1.0) {
            prop_assert_eq!(dfquad_combine(v, x, x).unwrap(), v);
        }

        #[test]
        fn every_kind_stays_in_unit_interval(
            base in 0.0f64..=1.0,
            att in prop::collection::vec(0.0f64..=1.0, 0..6),
            sup in prop::collection::vec(0.0f64..=1.0, 0..6),
        ) {
            for kind in SemanticsKind::ALL {
                let v = kind.update(base, &att, &sup);
                prop_assert!((0.0..=1.0).contains(&v), "{kind}: {v}");
            }
        }
    }
}
