//! Short command-line spellings of behaviours and bias policies.
//!
//! Contributions: `unresponsive`, `shallow:MAX`, `greedy`, `greedy:BUDGET`,
//! `counterfactual`, `counterfactual:BUDGET`. Biases: `constant:C`,
//! `random`, `random:OFFSET`, `random-all:OFFSET` (offset on every learnt
//! argument rather than only the counter-aligned ones).

use argx_core::behaviours::{BiasPolicy, ContributionPolicy, OffsetScope};

fn split(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s, None),
    }
}

fn number<T: std::str::FromStr>(v: &str, what: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("`{v}` is not a valid {what}"))
}

pub fn contribution(s: &str) -> Result<ContributionPolicy, String> {
    let (kind, arg) = split(s.trim());
    let budget = |arg: Option<&str>| arg.map(|v| number::<usize>(v, "budget")).transpose();
    match kind {
        "unresponsive" | "none" if arg.is_none() => Ok(ContributionPolicy::Unresponsive),
        "shallow" => {
            let max = number(arg.unwrap_or("1"), "max")?;
            if max == 0 {
                return Err("shallow needs max >= 1".into());
            }
            Ok(ContributionPolicy::Shallow { max, repeat: false })
        }
        "greedy" => Ok(ContributionPolicy::Greedy { budget: budget(arg)? }),
        "counterfactual" => Ok(ContributionPolicy::Counterfactual { budget: budget(arg)? }),
        _ => Err(format!(
            "unknown behaviour `{s}` (expected unresponsive, shallow:MAX, greedy[:BUDGET] or counterfactual[:BUDGET])"
        )),
    }
}

pub fn bias(s: &str) -> Result<BiasPolicy, String> {
    let (kind, arg) = split(s.trim());
    match kind {
        "constant" => {
            let c: f64 = number(arg.ok_or("constant needs a value, e.g. constant:0.5")?, "bias")?;
            if !(0.0..=1.0).contains(&c) {
                return Err(format!("constant bias {c} is outside [0, 1]"));
            }
            Ok(BiasPolicy::Constant { c })
        }
        "random" | "random-all" => Ok(BiasPolicy::Random {
            offset: arg.map(|v| number(v, "offset")).transpose()?.unwrap_or(0.0),
            scope: if kind == "random" {
                OffsetScope::CounterAligned
            } else {
                OffsetScope::All
            },
        }),
        _ => Err(format!("unknown bias `{s}` (expected constant:C, random[:OFFSET] or random-all:OFFSET)")),
    }
}
