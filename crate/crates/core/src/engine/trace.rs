use serde_json::json;

use super::constraint::{domain_string, key_name, ConflictRecord, Constraint, Posted};
use crate::typelang::{Domain, TypeVarId};

/// A single state change. Applying a trace's effects in order to the store it
/// started from reproduces the final store.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    /// Stored domain of a class root; `None` removes the entry.
    SetDomain {
        key: TypeVarId,
        domain: Option<Domain>,
    },
    Union {
        child: TypeVarId,
        root: TypeVarId,
    },
    Activate {
        id: u32,
        posted: Posted,
    },
    Retire {
        id: u32,
    },
    Conflict(ConflictRecord),
    FreshVar {
        var: TypeVarId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub step: usize,
    pub rule: String,
    pub consumed: Vec<Constraint>,
    pub produced: Vec<Constraint>,
    pub effects: Vec<Effect>,
}

fn list(cs: &[Constraint], node_count: u32) -> String {
    if cs.is_empty() {
        return "-".into();
    }
    cs.iter().map(|c| c.display(node_count).to_string()).collect::<Vec<_>>().join("; ")
}

impl TraceEvent {
    /// `step N: FIRED rule CONSUMED ... PRODUCED ...`
    pub fn render(&self, node_count: u32) -> String {
        format!(
            "step {}: FIRED {} CONSUMED {} PRODUCED {}",
            self.step,
            self.rule,
            list(&self.consumed, node_count),
            list(&self.produced, node_count)
        )
    }

    pub fn to_json(&self, node_count: u32) -> serde_json::Value {
        let strs =
            |cs: &[Constraint]| -> Vec<String> { cs.iter().map(|c| c.display(node_count).to_string()).collect() };
        let effects: Vec<String> = self
            .effects
            .iter()
            .map(|e| match e {
                Effect::SetDomain { key, domain: Some(d) } => {
                    format!("set {} {}", key_name(*key, node_count), domain_string(d, node_count))
                }
                Effect::SetDomain { key, domain: None } => {
                    format!("clear {}", key_name(*key, node_count))
                }
                Effect::Union { child, root } => {
                    format!("union {} {}", key_name(*child, node_count), key_name(*root, node_count))
                }
                Effect::Activate { id, posted } => {
                    format!("activate #{id} {}", posted.constraint.display(node_count))
                }
                Effect::Retire { id } => format!("retire #{id}"),
                Effect::Conflict(c) => format!("conflict {}", key_name(c.key, node_count)),
                Effect::FreshVar { var } => format!("fresh {}", key_name(*var, node_count)),
            })
            .collect();
        json!({
            "step": self.step,
            "rule": self.rule,
            "consumed": strs(&self.consumed),
            "produced": strs(&self.produced),
            "effects": effects,
        })
    }
}
