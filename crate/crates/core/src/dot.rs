//! Graphviz rendering of an exchange as it stood at some timestep.
//!
//! The explanandum sits at the top (edges point up towards it). Attacks are
//! red, dashed and end in a bar; supports are green, solid and end in an
//! arrow. Each edge is labelled with who contributed it and when, and each
//! argument with the strength every agent gave it at that timestep.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::graph::{ArgumentId, Polarity};
use crate::exchange::TimestepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DotOptions {
    pub strengths: bool,
    pub contributors: bool,
}

impl Default for DotOptions {
    fn default() -> Self {
        Self {
            strengths: true,
            contributors: true,
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// The exchange after timestep `t` (or the last one, if `t` is past it).
pub fn exchange_dot(explanandum: &ArgumentId, records: &[TimestepRecord], t: u32, opts: DotOptions) -> String {
    let upto: Vec<&TimestepRecord> = records.iter().filter(|r| r.t <= t).collect();
    let mut args: BTreeSet<&ArgumentId> = BTreeSet::from([explanandum]);
    for r in &upto {
        for c in &r.contributions {
            args.insert(&c.from);
            args.insert(&c.to);
        }
    }
    let last = upto.last();
    let mut out = String::new();
    let _ = writeln!(out, "digraph exchange {{");
    let _ = writeln!(out, "  rankdir=BT;");
    let _ = writeln!(out, "  node [shape=ellipse, fontname=\"Helvetica\"];");
    let _ = writeln!(out, "  edge [fontname=\"Helvetica\", fontsize=10];");
    for a in &args {
        let mut label = a.as_str().to_owned();
        if opts.strengths {
            if let Some(r) = last {
                for (agent, strengths) in &r.strengths {
                    if let Some(v) = strengths.get(*a) {
                        let _ = write!(label, "\n{agent}: {v:.3}");
                    }
                }
            }
        }
        let shape = if *a == explanandum { ", shape=doublecircle" } else { "" };
        let _ = writeln!(out, "  {} [label={}{shape}];", quote(a.as_str()), quote(&label));
    }
    for r in &upto {
        for c in &r.contributions {
            let style = match c.polarity {
                Polarity::Attack => "color=red, fontcolor=red, style=dashed, arrowhead=tee",
                Polarity::Support => "color=darkgreen, fontcolor=darkgreen, style=solid, arrowhead=normal",
            };
            let label = if opts.contributors {
                format!(", label={}", quote(&format!("{} @{}", c.agent, r.t)))
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "  {} -> {} [class={}, {style}{label}];",
                quote(c.from.as_str()),
                quote(c.to.as_str()),
                match c.polarity {
                    Polarity::Attack => "attack",
                    Polarity::Support => "support",
                }
            );
        }
    }
    if let Some(r) = last {
        let stances: Vec<String> = r.stances.iter().map(|(a, s)| format!("{a} {s}")).collect();
        let _ = writeln!(out, "  labelloc=t;");
        let _ = writeln!(out, "  label={};", quote(&format!("t = {}: {}", r.t, stances.join(", "))));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn render(t: u32) -> String {
        let s = fixtures::after_second_timestep(1.0);
        let records: Vec<TimestepRecord> = s.history().iter().map(|h| h.record.clone()).collect();
        exchange_dot(s.explanandum(), &records, t, DotOptions::default())
    }

    #[test]
    fn styles_attacks_and_supports_apart() {
        let dot = render(2);
        let attack = dot.lines().find(|l| l.contains("\"a\" -> \"e\"")).unwrap();
        let support = dot.lines().find(|l| l.contains("\"b\" -> \"e\"")).unwrap();
        assert!(attack.contains("class=attack") && attack.contains("style=dashed"));
        assert!(support.contains("class=support") && support.contains("style=solid"));
        assert!(dot.contains("\"c\" -> \"a\""));
    }

    #[test]
    fn earlier_timesteps_hide_later_edges() {
        let dot = render(1);
        assert!(dot.contains("\"a\" -> \"e\""));
        assert!(!dot.contains("\"c\" -> \"a\""));
        let empty = render(0);
        assert_eq!(empty.matches("->").count(), 0);
        assert!(empty.contains("doublecircle"));
    }

    #[test]
    fn quotes_awkward_ids() {
        assert_eq!(quote("a\"b\\c"), "\"a\\\"b\\\\c\"");
    }
}
