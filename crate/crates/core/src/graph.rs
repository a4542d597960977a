//! Bipolar argumentation frameworks and their quantitative extension.
//!
//! Frameworks here are always rooted at an explanandum: the argument every
//! other argument is ultimately about. [`Baf::validate`] checks the three
//! structural rules that make a framework usable for that purpose (no edge
//! leaves the explanandum, everything reaches it, nothing is cyclic).
//!
//! All containers are ordered so iteration order, serialization and every
//! tie-break downstream depend only on argument identifiers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of an argument, shared by every agent in a scenario.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArgumentId(String);

impl ArgumentId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ArgumentId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ArgumentId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl fmt::Display for ArgumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Attack,
    Support,
}

impl Polarity {
    /// Attack-count parity after extending a path of parity `odd` by this edge.
    pub fn flip_parity(self, odd: bool) -> bool {
        match self {
            Polarity::Attack => !odd,
            Polarity::Support => odd,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Attack => f.write_str("attack"),
            Polarity::Support => f.write_str("support"),
        }
    }
}

/// A directed pair `(from, to)`; serialized as a two-element array.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(ArgumentId, ArgumentId)", into = "(ArgumentId, ArgumentId)")]
pub struct Edge {
    pub from: ArgumentId,
    pub to: ArgumentId,
}

impl Edge {
    pub fn new(from: impl Into<ArgumentId>, to: impl Into<ArgumentId>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
        }
    }
}

impl From<(ArgumentId, ArgumentId)> for Edge {
    fn from((from, to): (ArgumentId, ArgumentId)) -> Self {
        Self { from, to }
    }
}

impl From<Edge> for (ArgumentId, ArgumentId) {
    fn from(e: Edge) -> Self {
        (e.from, e.to)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.from, self.to)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown argument `{0}`")]
    UnknownArgument(ArgumentId),
    #[error("edge {0} is both an attack and a support")]
    ConflictingPolarity(Edge),
    #[error("explanandum `{0}` is not among the arguments")]
    MissingExplanandum(ArgumentId),
    #[error("no base score for argument `{0}`")]
    MissingBaseScore(ArgumentId),
    #[error("base score {score} for argument `{id}` is not a finite number")]
    NonFiniteBaseScore { id: ArgumentId, score: f64 },
    #[error("framework is not valid for explanandum: {0}")]
    Invalid(ValidationReport),
}

/// One way a framework can fail to be a framework for its explanandum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Condition (i): the explanandum has an outgoing edge.
    OutgoingFromExplanandum { edge: Edge },
    /// Condition (ii): no path from the argument to the explanandum.
    Unreachable { argument: ArgumentId },
    /// Condition (iii): the argument lies on a directed cycle.
    OnCycle { argument: ArgumentId },
}

impl Violation {
    /// The Roman numeral of the violated condition, `1..=3`.
    pub fn condition(&self) -> u8 {
        match self {
            Violation::OutgoingFromExplanandum { .. } => 1,
            Violation::Unreachable { .. } => 2,
            Violation::OnCycle { .. } => 3,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutgoingFromExplanandum { edge } => {
                write!(f, "explanandum has outgoing edge {edge}")
            }
            Violation::Unreachable { argument } => {
                write!(f, "`{argument}` has no path to the explanandum")
            }
            Violation::OnCycle { argument } => write!(f, "`{argument}` lies on a cycle"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, condition: u8) -> bool {
        self.violations.iter().any(|v| v.condition() == condition)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A chain of edges `(c0, c1), (c1, c2), ...`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub edges: Vec<(Edge, Polarity)>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn attack_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|(_, p)| *p == Polarity::Attack)
            .count()
    }
}

/// Pro and con arguments of a framework; the two sets may overlap.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProCon {
    pub pro: BTreeSet<ArgumentId>,
    pub con: BTreeSet<ArgumentId>,
}

/// Componentwise set difference of two frameworks. Not necessarily a
/// framework itself: it may hold edges whose endpoints it lacks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawDiff {
    pub arguments: BTreeSet<ArgumentId>,
    pub attacks: BTreeSet<Edge>,
    pub supports: BTreeSet<Edge>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub base_scores: BTreeMap<ArgumentId, f64>,
}

impl RawDiff {
    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty() && self.attacks.is_empty() && self.supports.is_empty()
    }

    /// Componentwise inclusion of arguments, attacks and supports.
    pub fn is_subset_of(&self, other: &RawDiff) -> bool {
        self.arguments.is_subset(&other.arguments)
            && self.attacks.is_subset(&other.attacks)
            && self.supports.is_subset(&other.supports)
    }
}

/// Bipolar argumentation framework with a designated explanandum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc", into = "GraphDoc")]
pub struct Baf {
    explanandum: ArgumentId,
    arguments: BTreeSet<ArgumentId>,
    attacks: BTreeSet<Edge>,
    supports: BTreeSet<Edge>,
}

impl Baf {
    /// `⟨{e}, ∅, ∅⟩`
    pub fn singleton(explanandum: ArgumentId) -> Self {
        Self {
            arguments: BTreeSet::from([explanandum.clone()]),
            explanandum,
            attacks: BTreeSet::new(),
            supports: BTreeSet::new(),
        }
    }

    /// Builds a structurally well-formed framework. Validity for the
    /// explanandum is not required; see [`Baf::validate`].
    pub fn new(
        explanandum: ArgumentId,
        arguments: impl IntoIterator<Item = ArgumentId>,
        attacks: impl IntoIterator<Item = Edge>,
        supports: impl IntoIterator<Item = Edge>,
    ) -> Result<Self, GraphError> {
        let arguments: BTreeSet<_> = arguments.into_iter().collect();
        if !arguments.contains(&explanandum) {
            return Err(GraphError::MissingExplanandum(explanandum));
        }
        let attacks: BTreeSet<_> = attacks.into_iter().collect();
        let supports: BTreeSet<_> = supports.into_iter().collect();
        for edge in attacks.iter().chain(&supports) {
            for end in [&edge.from, &edge.to] {
                if !arguments.contains(end) {
                    return Err(GraphError::UnknownArgument(end.clone()));
                }
            }
        }
        if let Some(edge) = attacks.intersection(&supports).next() {
            return Err(GraphError::ConflictingPolarity(edge.clone()));
        }
        Ok(Self {
            explanandum,
            arguments,
            attacks,
            supports,
        })
    }

    pub fn explanandum(&self) -> &ArgumentId {
        &self.explanandum
    }

    pub fn arguments(&self) -> &BTreeSet<ArgumentId> {
        &self.arguments
    }

    pub fn attacks(&self) -> &BTreeSet<Edge> {
        &self.attacks
    }

    pub fn supports(&self) -> &BTreeSet<Edge> {
        &self.supports
    }

    pub fn contains(&self, arg: &ArgumentId) -> bool {
        self.arguments.contains(arg)
    }

    pub fn polarity(&self, edge: &Edge) -> Option<Polarity> {
        if self.attacks.contains(edge) {
            Some(Polarity::Attack)
        } else if self.supports.contains(edge) {
            Some(Polarity::Support)
        } else {
            None
        }
    }

    pub fn has_edge(&self, edge: &Edge) -> bool {
        self.polarity(edge).is_some()
    }

    pub fn edge_count(&self) -> usize {
        self.attacks.len() + self.supports.len()
    }

    /// All edges in `(from, to)` order, attacks and supports interleaved.
    pub fn edges(&self) -> Vec<(&Edge, Polarity)> {
        let mut out: Vec<_> = self
            .attacks
            .iter()
            .map(|e| (e, Polarity::Attack))
            .chain(self.supports.iter().map(|e| (e, Polarity::Support)))
            .collect();
        out.sort();
        out
    }

    pub fn attackers<'a>(&'a self, arg: &'a ArgumentId) -> impl Iterator<Item = &'a ArgumentId> {
        self.attacks.iter().filter(move |e| &e.to == arg).map(|e| &e.from)
    }

    pub fn supporters<'a>(&'a self, arg: &'a ArgumentId) -> impl Iterator<Item = &'a ArgumentId> {
        self.supports.iter().filter(move |e| &e.to == arg).map(|e| &e.from)
    }

    /// Adds an argument with no edges. Returns whether it was new.
    pub fn add_argument(&mut self, arg: ArgumentId) -> bool {
        self.arguments.insert(arg)
    }

    /// Adds an edge between two known arguments.
    pub fn add_edge(&mut self, edge: Edge, polarity: Polarity) -> Result<(), GraphError> {
        for end in [&edge.from, &edge.to] {
            if !self.arguments.contains(end) {
                return Err(GraphError::UnknownArgument(end.clone()));
            }
        }
        let (same, other) = match polarity {
            Polarity::Attack => (&mut self.attacks, &self.supports),
            Polarity::Support => (&mut self.supports, &self.attacks),
        };
        if other.contains(&edge) {
            return Err(GraphError::ConflictingPolarity(edge));
        }
        same.insert(edge);
        Ok(())
    }

    fn successors(&self) -> BTreeMap<&ArgumentId, Vec<(&ArgumentId, &Edge, Polarity)>> {
        let mut out: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for (edge, pol) in self.edges() {
            out.entry(&edge.from).or_default().push((&edge.to, edge, pol));
        }
        out
    }

    fn predecessors(&self) -> BTreeMap<&ArgumentId, Vec<(&ArgumentId, Polarity)>> {
        let mut out: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for (edge, pol) in self.edges() {
            out.entry(&edge.to).or_default().push((&edge.from, pol));
        }
        out
    }

    /// Checks the three conditions for being a framework for the
    /// explanandum. Never fails; collects every violation instead.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let e = &self.explanandum;

        for (edge, _) in self.edges() {
            if &edge.from == e {
                violations.push(Violation::OutgoingFromExplanandum { edge: edge.clone() });
            }
        }

        let preds = self.predecessors();
        let mut reached = BTreeSet::from([e]);
        let mut queue = VecDeque::from([e]);
        while let Some(node) = queue.pop_front() {
            for (p, _) in preds.get(node).into_iter().flatten() {
                if reached.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        for arg in &self.arguments {
            if arg != e && !reached.contains(arg) {
                violations.push(Violation::Unreachable {
                    argument: arg.clone(),
                });
            }
        }

        let succ = self.successors();
        for arg in &self.arguments {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&ArgumentId> = succ
                .get(arg)
                .into_iter()
                .flatten()
                .map(|(to, _, _)| *to)
                .collect();
            let mut cyclic = false;
            while let Some(node) = stack.pop() {
                if node == arg {
                    cyclic = true;
                    break;
                }
                if seen.insert(node) {
                    stack.extend(succ.get(node).into_iter().flatten().map(|(to, _, _)| *to));
                }
            }
            if cyclic {
                violations.push(Violation::OnCycle {
                    argument: arg.clone(),
                });
            }
        }

        ValidationReport { violations }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn ensure_valid(&self) -> Result<(), GraphError> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(GraphError::Invalid(report))
        }
    }

    /// All simple paths from `a` to `b`. No argument repeats, except that a
    /// path may end where it started (so `paths(a, a)` lists cycles).
    pub fn paths(&self, a: &ArgumentId, b: &ArgumentId) -> Result<Vec<Path>, GraphError> {
        for arg in [a, b] {
            if !self.contains(arg) {
                return Err(GraphError::UnknownArgument(arg.clone()));
            }
        }
        let succ = self.successors();
        let mut out = Vec::new();
        let mut visited = BTreeSet::from([a]);
        let mut current = Vec::new();
        collect_paths(&succ, a, b, &mut visited, &mut current, &mut out);
        Ok(out)
    }

    /// Length of the shortest path from `arg` to the explanandum; `Some(0)`
    /// for the explanandum itself.
    pub fn distance_to_explanandum(&self, arg: &ArgumentId) -> Option<usize> {
        if !self.contains(arg) {
            return None;
        }
        let preds = self.predecessors();
        let mut dist = BTreeMap::from([(&self.explanandum, 0usize)]);
        let mut queue = VecDeque::from([&self.explanandum]);
        while let Some(node) = queue.pop_front() {
            let d = dist[node];
            if node == arg {
                return Some(d);
            }
            for (p, _) in preds.get(node).into_iter().flatten() {
                if !dist.contains_key(p) {
                    dist.insert(p, d + 1);
                    queue.push_back(p);
                }
            }
        }
        None
    }

    /// Pro arguments have some path to the explanandum with an even number
    /// of attacks, con arguments one with an odd number.
    pub fn pro_con(&self) -> Result<ProCon, GraphError> {
        self.ensure_valid()?;
        // Acyclic, so every walk is a path; search (argument, parity) states
        // backwards from the explanandum.
        let preds = self.predecessors();
        let mut seen: BTreeSet<(&ArgumentId, bool)> = BTreeSet::new();
        let mut queue = VecDeque::from([(&self.explanandum, false)]);
        let mut out = ProCon::default();
        while let Some((node, odd)) = queue.pop_front() {
            for (p, pol) in preds.get(node).into_iter().flatten() {
                let parity = pol.flip_parity(odd);
                if seen.insert((p, parity)) {
                    if parity {
                        out.con.insert((*p).clone());
                    } else {
                        out.pro.insert((*p).clone());
                    }
                    queue.push_back((p, parity));
                }
            }
        }
        Ok(out)
    }

    /// `self ⊑ other`, componentwise.
    pub fn is_subgraph_of(&self, other: &Baf) -> bool {
        self.arguments.is_subset(&other.arguments)
            && self.attacks.is_subset(&other.attacks)
            && self.supports.is_subset(&other.supports)
    }

    /// `self \ base`
    pub fn difference(&self, base: &Baf) -> RawDiff {
        RawDiff {
            arguments: self.arguments.difference(&base.arguments).cloned().collect(),
            attacks: self.attacks.difference(&base.attacks).cloned().collect(),
            supports: self.supports.difference(&base.supports).cloned().collect(),
            base_scores: BTreeMap::new(),
        }
    }

    /// The sub-framework induced by `keep` (the explanandum is always kept).
    pub fn restrict(&self, keep: &BTreeSet<ArgumentId>) -> Baf {
        let inside = |e: &&Edge| keep.contains(&e.from) && keep.contains(&e.to);
        let mut arguments: BTreeSet<_> = self.arguments.intersection(keep).cloned().collect();
        arguments.insert(self.explanandum.clone());
        Baf {
            explanandum: self.explanandum.clone(),
            arguments,
            attacks: self.attacks.iter().filter(inside).cloned().collect(),
            supports: self.supports.iter().filter(inside).cloned().collect(),
        }
    }
}

fn collect_paths<'a>(
    succ: &BTreeMap<&'a ArgumentId, Vec<(&'a ArgumentId, &'a Edge, Polarity)>>,
    node: &'a ArgumentId,
    target: &'a ArgumentId,
    visited: &mut BTreeSet<&'a ArgumentId>,
    current: &mut Vec<(Edge, Polarity)>,
    out: &mut Vec<Path>,
) {
    for (next, edge, pol) in succ.get(node).into_iter().flatten() {
        current.push(((*edge).clone(), *pol));
        if *next == target {
            out.push(Path {
                edges: current.clone(),
            });
        } else if visited.insert(next) {
            collect_paths(succ, next, target, visited, current, out);
            visited.remove(next);
        }
        current.pop();
    }
}

/// A [`Baf`] with a base score (bias) for every argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc", into = "GraphDoc")]
pub struct Qbaf {
    baf: Baf,
    base_scores: BTreeMap<ArgumentId, f64>,
}

impl Deref for Qbaf {
    type Target = Baf;

    fn deref(&self) -> &Baf {
        &self.baf
    }
}

impl Qbaf {
    pub fn new(baf: Baf, base_scores: BTreeMap<ArgumentId, f64>) -> Result<Self, GraphError> {
        for arg in baf.arguments() {
            match base_scores.get(arg) {
                None => return Err(GraphError::MissingBaseScore(arg.clone())),
                Some(s) if !s.is_finite() => {
                    return Err(GraphError::NonFiniteBaseScore {
                        id: arg.clone(),
                        score: *s,
                    })
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = base_scores.keys().find(|k| !baf.contains(k)) {
            return Err(GraphError::UnknownArgument(extra.clone()));
        }
        Ok(Self { baf, base_scores })
    }

    pub fn baf(&self) -> &Baf {
        &self.baf
    }

    pub fn base_score(&self, arg: &ArgumentId) -> Option<f64> {
        self.base_scores.get(arg).copied()
    }

    pub fn base_scores(&self) -> &BTreeMap<ArgumentId, f64> {
        &self.base_scores
    }

    /// Adds a new argument with its base score. Returns `false` (and leaves
    /// the existing score untouched) if the argument was already present.
    pub fn add_argument(&mut self, arg: ArgumentId, score: f64) -> bool {
        if self.baf.contains(&arg) {
            return false;
        }
        self.base_scores.insert(arg.clone(), score);
        self.baf.add_argument(arg)
    }

    pub fn add_edge(&mut self, edge: Edge, polarity: Polarity) -> Result<(), GraphError> {
        self.baf.add_edge(edge, polarity)
    }

    /// `self ⊑ other`: componentwise inclusion plus equal base scores on
    /// every shared argument.
    pub fn is_subgraph_of(&self, other: &Qbaf) -> bool {
        self.baf.is_subgraph_of(&other.baf)
            && self
                .base_scores
                .iter()
                .all(|(a, s)| other.base_scores.get(a) == Some(s))
    }

    /// `self \ base`, with base scores restricted to the new arguments.
    pub fn difference(&self, base: &Qbaf) -> RawDiff {
        let mut diff = self.baf.difference(&base.baf);
        diff.base_scores = diff
            .arguments
            .iter()
            .map(|a| (a.clone(), self.base_scores[a]))
            .collect();
        diff
    }

    pub fn restrict(&self, keep: &BTreeSet<ArgumentId>) -> Qbaf {
        let baf = self.baf.restrict(keep);
        let base_scores = baf
            .arguments()
            .iter()
            .map(|a| (a.clone(), self.base_scores[a]))
            .collect();
        Qbaf { baf, base_scores }
    }

    pub fn into_parts(self) -> (Baf, BTreeMap<ArgumentId, f64>) {
        (self.baf, self.base_scores)
    }
}

/// Anything that can be compared with `⊑`.
pub trait Framework {
    fn as_baf(&self) -> &Baf;
    fn scores(&self) -> Option<&BTreeMap<ArgumentId, f64>>;
}

impl Framework for Baf {
    fn as_baf(&self) -> &Baf {
        self
    }

    fn scores(&self) -> Option<&BTreeMap<ArgumentId, f64>> {
        None
    }
}

impl Framework for Qbaf {
    fn as_baf(&self) -> &Baf {
        &self.baf
    }

    fn scores(&self) -> Option<&BTreeMap<ArgumentId, f64>> {
        Some(&self.base_scores)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubDiff {
    pub is_sub: bool,
    pub diff: RawDiff,
}

/// Whether `small ⊑ large`, and `large \ small`. Base scores take part only
/// when both sides are quantitative.
pub fn sub_and_diff<A: Framework + ?Sized, B: Framework + ?Sized>(small: &A, large: &B) -> SubDiff {
    let (s, l) = (small.as_baf(), large.as_baf());
    let mut is_sub = s.is_subgraph_of(l);
    let mut diff = l.difference(s);
    if let (Some(ss), Some(ls)) = (small.scores(), large.scores()) {
        is_sub &= ss.iter().all(|(a, v)| ls.get(a) == Some(v));
        diff.base_scores = diff
            .arguments
            .iter()
            .filter_map(|a| ls.get(a).map(|v| (a.clone(), *v)))
            .collect();
    }
    SubDiff { is_sub, diff }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentDoc {
    pub id: ArgumentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_score: Option<f64>,
}

/// On-disk graph layout shared by frameworks, scenarios and transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub explanandum: ArgumentId,
    pub arguments: Vec<ArgumentDoc>,
    #[serde(default)]
    pub attacks: Vec<Edge>,
    #[serde(default)]
    pub supports: Vec<Edge>,
}

impl From<Baf> for GraphDoc {
    fn from(b: Baf) -> Self {
        GraphDoc {
            explanandum: b.explanandum,
            arguments: b
                .arguments
                .into_iter()
                .map(|id| ArgumentDoc { id, base_score: None })
                .collect(),
            attacks: b.attacks.into_iter().collect(),
            supports: b.supports.into_iter().collect(),
        }
    }
}

impl TryFrom<GraphDoc> for Baf {
    type Error = GraphError;

    fn try_from(doc: GraphDoc) -> Result<Self, GraphError> {
        Baf::new(
            doc.explanandum,
            doc.arguments.into_iter().map(|a| a.id),
            doc.attacks,
            doc.supports,
        )
    }
}

impl From<Qbaf> for GraphDoc {
    fn from(q: Qbaf) -> Self {
        let mut doc = GraphDoc::from(q.baf);
        for arg in &mut doc.arguments {
            arg.base_score = q.base_scores.get(&arg.id).copied();
        }
        doc
    }
}

impl TryFrom<GraphDoc> for Qbaf {
    type Error = GraphError;

    fn try_from(doc: GraphDoc) -> Result<Self, GraphError> {
        let mut scores = BTreeMap::new();
        for arg in &doc.arguments {
            match arg.base_score {
                Some(s) => {
                    scores.insert(arg.id.clone(), s);
                }
                None => return Err(GraphError::MissingBaseScore(arg.id.clone())),
            }
        }
        Qbaf::new(Baf::try_from(doc)?, scores)
    }
}
