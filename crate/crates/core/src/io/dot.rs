//! Graphviz and JSON renderings.

use std::fmt::Write as _;

use serde::Serialize;

use crate::decomposition::DecompTree;
use crate::fsm::Fsm;
use crate::hfsm::Hfsm;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// The tree with sinks labelled by state. Internal nodes are blank unless
/// `annotate` is set, in which case they show their members.
pub fn tree_dot(z: &Fsm, tree: &DecompTree, annotate: bool) -> String {
    let mut out = String::from("digraph tree {\n  rankdir=BT;\n");
    for t in tree.nodes() {
        let label = match tree.state_of(t) {
            Some(q) => z.state(q).to_string(),
            None if annotate => {
                let names: Vec<String> = z
                    .names_of(&tree.down_set(t))
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                format!("{{{}}}", names.join(","))
            }
            None => String::new(),
        };
        let shape = if tree.state_of(t).is_some() {
            "box"
        } else {
            "ellipse"
        };
        writeln!(out, "  {t} [label={}, shape={shape}];", quote(&label)).unwrap();
    }
    for t in tree.nodes() {
        for c in tree.children(t) {
            writeln!(out, "  {t} -> {c};").unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct TreeDoc {
    nodes: Vec<TreeNodeDoc>,
    arcs: Vec<(String, String)>,
}

#[derive(Serialize)]
struct TreeNodeDoc {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<String>,
    members: Vec<String>,
}

/// The tree as JSON: nodes with id, state label for sinks and member list,
/// and parent-to-child arcs.
pub fn tree_json(z: &Fsm, tree: &DecompTree) -> String {
    let nodes = tree
        .nodes()
        .map(|t| TreeNodeDoc {
            id: t.to_string(),
            state: tree.state_of(t).map(|q| z.state(q).to_string()),
            members: z
                .names_of(&tree.down_set(t))
                .iter()
                .map(|s| s.to_string())
                .collect(),
        })
        .collect();
    let arcs = tree
        .nodes()
        .flat_map(|t| {
            tree.children(t)
                .map(move |c| (t.to_string(), c.to_string()))
        })
        .collect();
    let mut text =
        serde_json::to_string_pretty(&TreeDoc { nodes, arcs }).expect("documents serialise");
    text.push('\n');
    text
}

/// A machine as a state diagram. With `hierarchy`, each nested machine's
/// flattened states are drawn as a cluster.
pub fn fsm_dot(name: &str, z: &Fsm, hierarchy: Option<&Hfsm>) -> String {
    let mut out = format!("digraph {} {{\n  __start [shape=point];\n", quote(name));
    match hierarchy {
        Some(h) => cluster(&mut out, h, h.root(), z, 1),
        None => {
            for q in z.states() {
                writeln!(out, "  {};", quote(q.as_str())).unwrap();
            }
        }
    }
    writeln!(out, "  __start -> {};", quote(z.start_id().as_str())).unwrap();
    for (u, x, w) in z.arcs() {
        writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(z.state(u).as_str()),
            quote(z.state(w).as_str()),
            quote(z.symbol(x).as_str())
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

fn cluster(out: &mut String, h: &Hfsm, machine: &str, z: &Fsm, depth: usize) {
    let pad = "  ".repeat(depth);
    let m = h.machine(machine).expect("machine of this hierarchy");
    for q in m.states() {
        if let Some(child) = h.hosted_at(q.as_str()) {
            writeln!(
                out,
                "{pad}subgraph {} {{",
                quote(&format!("cluster_{child}"))
            )
            .unwrap();
            writeln!(
                out,
                "{pad}  label={}; style=rounded; color=grey;",
                quote(child)
            )
            .unwrap();
            cluster(out, h, child, z, depth + 1);
            writeln!(out, "{pad}}}").unwrap();
        } else if z.index_of(q.as_str()).is_some() {
            writeln!(out, "{pad}{};", quote(q.as_str())).unwrap();
        }
    }
}
