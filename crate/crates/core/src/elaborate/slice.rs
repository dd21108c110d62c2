//! Cone-of-influence reduction.

use std::collections::{BTreeSet, HashMap};

use super::inline::{FlatNode, VarKind};

/// Keeps exactly the equations whose left-hand side is reachable by data
/// dependence (current or previous step) from a property or an assertion.
/// Returns the sliced node and the inputs that nothing in the slice reads.
pub fn slice(node: &FlatNode) -> (FlatNode, BTreeSet<String>) {
    let deps: HashMap<&str, Vec<String>> = node
        .equations
        .iter()
        .map(|eq| {
            let mut vs = Vec::new();
            eq.rhs.for_each_var(&mut |v| vs.push(v.to_string()));
            (eq.lhs.as_str(), vs)
        })
        .collect();

    let mut live: BTreeSet<String> = BTreeSet::new();
    let mut work: Vec<String> = node.properties.iter().map(|(p, _)| p.clone()).collect();
    for (a, _) in &node.assertions {
        a.for_each_var(&mut |v| work.push(v.to_string()));
    }
    while let Some(v) = work.pop() {
        if !live.insert(v.clone()) {
            continue;
        }
        if let Some(ds) = deps.get(v.as_str()) {
            work.extend(ds.iter().filter(|d| !live.contains(*d)).cloned());
        }
    }

    let unused = node
        .vars
        .iter()
        .filter(|v| v.kind == VarKind::Input && !live.contains(&v.name))
        .map(|v| v.name.clone())
        .collect();
    let sliced = FlatNode {
        name: node.name.clone(),
        vars: node
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::Input || live.contains(&v.name))
            .cloned()
            .collect(),
        equations: node
            .equations
            .iter()
            .filter(|eq| live.contains(&eq.lhs))
            .cloned()
            .collect(),
        assertions: node.assertions.clone(),
        properties: node.properties.clone(),
    };
    (sliced, unused)
}
