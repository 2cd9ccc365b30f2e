use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::fsm::StateSet;
use crate::modules::family_overlapping;

/// A node of a [`DecompTree`]. Sinks come first, one per state, so the
/// sink of state `q` is `NodeId(q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Node {
    children: Vec<usize>,
    parents: Vec<usize>,
    size: usize,
}

/// Inclusion dag of the indecomposable thin modules of a machine,
/// transitively reduced. Arcs point from a module to the modules it
/// covers; sinks are the singletons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompTree {
    states: usize,
    nodes: Vec<Node>,
}

impl DecompTree {
    /// A tree with only the sinks of `states` states.
    pub fn with_sinks(states: usize) -> DecompTree {
        DecompTree {
            states,
            nodes: (0..states)
                .map(|_| Node {
                    children: Vec::new(),
                    parents: Vec::new(),
                    size: 1,
                })
                .collect(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn sink(&self, q: usize) -> NodeId {
        assert!(q < self.states);
        NodeId(q)
    }

    /// The state labelling `t`, if `t` is a sink.
    pub fn state_of(&self, t: NodeId) -> Option<usize> {
        (t.0 < self.states).then_some(t.0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Internal nodes in insertion order.
    pub fn internal_nodes(&self) -> impl Iterator<Item = NodeId> {
        (self.states..self.nodes.len()).map(NodeId)
    }

    pub fn children(&self, t: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[t.0].children.iter().map(|&c| NodeId(c))
    }

    pub fn parents(&self, t: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[t.0].parents.iter().map(|&c| NodeId(c))
    }

    /// Nodes with no parent.
    pub fn roots(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|&t| self.nodes[t.0].parents.is_empty())
            .collect()
    }

    /// Number of states below `t`.
    pub fn size(&self, t: NodeId) -> usize {
        self.nodes[t.0].size
    }

    pub fn arc_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    /// Number of internal nodes, i.e. of non-singleton indecomposable thin
    /// modules.
    pub fn dimension(&self) -> usize {
        self.nodes.len() - self.states
    }

    /// Whether no node has two parents.
    pub fn is_tree(&self) -> bool {
        self.nodes.iter().all(|n| n.parents.len() <= 1)
    }

    /// States labelling the sinks reachable from `t`.
    pub fn down_set(&self, t: NodeId) -> StateSet {
        let mut out = StateSet::new();
        let mut seen = HashSet::from([t.0]);
        let mut stack = vec![t.0];
        while let Some(a) = stack.pop() {
            if a < self.states {
                out.insert(a);
            }
            for &c in &self.nodes[a].children {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Whether every state below `t` satisfies `keep`. Stops at the first
    /// that does not.
    pub fn all_below(&self, t: NodeId, mut keep: impl FnMut(usize) -> bool) -> bool {
        let mut seen = HashSet::from([t.0]);
        let mut stack = vec![t.0];
        while let Some(a) = stack.pop() {
            if a < self.states && !keep(a) {
                return false;
            }
            for &c in &self.nodes[a].children {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        true
    }

    /// Member sets of the internal nodes, in insertion order.
    pub fn modules(&self) -> Vec<StateSet> {
        self.internal_nodes().map(|t| self.down_set(t)).collect()
    }

    /// Upward sweep from the sinks of `m`: a node is reached once all of its
    /// children are. Returns reached nodes in visiting order.
    fn sweep(&self, m: &StateSet) -> Vec<usize> {
        let mut pending: HashMap<usize, usize> = HashMap::new();
        let mut queue: VecDeque<usize> = m.iter().copied().filter(|&q| q < self.states).collect();
        let mut visited: Vec<usize> = queue.iter().copied().collect();
        while let Some(t) = queue.pop_front() {
            for &p in &self.nodes[t].parents {
                let left = pending
                    .entry(p)
                    .or_insert_with(|| self.nodes[p].children.len());
                *left -= 1;
                if *left == 0 {
                    queue.push_back(p);
                    visited.push(p);
                }
            }
        }
        visited
    }

    /// Reached nodes none of whose parents were reached.
    fn maximal_within(&self, m: &StateSet) -> Vec<usize> {
        let visited = self.sweep(m);
        let inside: HashSet<usize> = visited.iter().copied().collect();
        let mut top: Vec<usize> = visited
            .into_iter()
            .filter(|&t| self.nodes[t].parents.iter().all(|p| !inside.contains(p)))
            .collect();
        top.sort_unstable();
        top
    }

    /// Inserts `k` as a new internal node, with arcs to the maximal present
    /// nodes below it. Every indecomposable thin module strictly inside `k`
    /// must already be present.
    pub fn add_module(&mut self, k: &StateSet) -> Result<NodeId> {
        if k.iter().any(|&q| q >= self.states) {
            return Err(Error::Invariant("module mentions an unknown state".into()));
        }
        let visited = self.sweep(k);
        let duplicate = || Error::DuplicateModule(k.iter().map(|q| format!("#{q}")).collect());
        if k.len() <= 1 || visited.iter().any(|&t| self.nodes[t].size == k.len()) {
            return Err(duplicate());
        }
        let inside: HashSet<usize> = visited.iter().copied().collect();
        let mut apices: Vec<usize> = visited
            .into_iter()
            .filter(|&t| self.nodes[t].parents.iter().all(|p| !inside.contains(p)))
            .collect();
        apices.sort_unstable();
        let id = self.nodes.len();
        for &a in &apices {
            self.nodes[a].parents.push(id);
        }
        self.nodes.push(Node {
            children: apices,
            parents: Vec::new(),
            size: k.len(),
        });
        Ok(NodeId(id))
    }

    /// The node whose down set is exactly `m`, if any.
    pub fn find(&self, m: &StateSet) -> Option<NodeId> {
        if m.is_empty() {
            return None;
        }
        match self.maximal_within(m).as_slice() {
            [t] if self.nodes[*t].size == m.len() => Some(NodeId(*t)),
            _ => None,
        }
    }

    /// Whether `m` is a thin module: the maximal nodes below `m` form an
    /// overlapping family.
    pub fn is_thin_module(&self, m: &StateSet) -> bool {
        if m.is_empty() || m.iter().any(|&q| q >= self.states) {
            return false;
        }
        let top = self.maximal_within(m);
        let family: Vec<StateSet> = top.iter().map(|&t| self.down_set(NodeId(t))).collect();
        family_overlapping(&family)
    }

    /// The unique minimal set of nodes whose down sets form an overlapping
    /// family with union `m`.
    pub fn minimal_decomposition(&self, m: &StateSet) -> Result<Vec<NodeId>> {
        let not_thin = || Error::NotThinModule(m.iter().map(|q| format!("#{q}")).collect());
        if m.is_empty() || m.iter().any(|&q| q >= self.states) {
            return Err(not_thin());
        }
        let top = self.maximal_within(m);
        let family: Vec<StateSet> = top.iter().map(|&t| self.down_set(NodeId(t))).collect();
        if !family_overlapping(&family) {
            return Err(not_thin());
        }
        Ok(top.into_iter().map(NodeId).collect())
    }

    /// Whether the arcs are exactly the cover relation of inclusion among
    /// the node sets. Recomputes everything from down sets.
    pub fn is_transitively_reduced(&self) -> bool {
        let sets: Vec<StateSet> = self.nodes().map(|t| self.down_set(t)).collect();
        let below = |a: &StateSet, b: &StateSet| a.len() < b.len() && a.is_subset(b);
        (0..sets.len()).all(|i| {
            let covers: Vec<usize> = (0..sets.len())
                .filter(|&j| {
                    below(&sets[j], &sets[i])
                        && !sets
                            .iter()
                            .any(|m| below(&sets[j], m) && below(m, &sets[i]))
                })
                .collect();
            let mut children = self.nodes[i].children.clone();
            children.sort_unstable();
            children == covers
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> StateSet {
        v.iter().copied().collect()
    }

    fn kids(t: &DecompTree, n: NodeId) -> Vec<usize> {
        t.children(n).map(|c| c.0).collect()
    }

    #[test]
    fn add_to_sinks_only() {
        let mut t = DecompTree::with_sinks(4);
        let a = t.add_module(&set(&[0, 1])).unwrap();
        assert_eq!(kids(&t, a), [0, 1]);
        assert_eq!(t.down_set(a), set(&[0, 1]));
        assert_eq!(t.down_set(t.sink(2)), set(&[2]));
    }

    #[test]
    fn add_covers_existing_node() {
        let mut t = DecompTree::with_sinks(3);
        let ab = t.add_module(&set(&[0, 1])).unwrap();
        let abc = t.add_module(&set(&[0, 1, 2])).unwrap();
        assert_eq!(kids(&t, abc), [2, ab.0]);
        assert!(t.is_transitively_reduced());
    }

    #[test]
    fn add_above_overlapping_pair() {
        let mut t = DecompTree::with_sinks(4);
        let a = t.add_module(&set(&[0, 1])).unwrap();
        let b = t.add_module(&set(&[1, 2])).unwrap();
        let c = t.add_module(&set(&[0, 1, 2])).unwrap();
        assert_eq!(kids(&t, c), [a.0, b.0]);
        assert!(t.is_transitively_reduced());
        assert!(!t.is_tree());
    }

    #[test]
    fn duplicates_are_rejected() {
        let mut t = DecompTree::with_sinks(3);
        t.add_module(&set(&[0, 1])).unwrap();
        assert!(matches!(
            t.add_module(&set(&[0, 1])),
            Err(Error::DuplicateModule(_))
        ));
        assert!(matches!(
            t.add_module(&set(&[2])),
            Err(Error::DuplicateModule(_))
        ));
    }

    #[test]
    fn queries_on_path_shape() {
        let mut t = DecompTree::with_sinks(4);
        let a = t.add_module(&set(&[0, 1])).unwrap();
        let b = t.add_module(&set(&[1, 2])).unwrap();
        let c = t.add_module(&set(&[2, 3])).unwrap();
        assert!(t.is_thin_module(&set(&[0, 1, 2])));
        assert!(!t.is_thin_module(&set(&[0, 2])));
        assert!(t.is_thin_module(&set(&[1, 2])));
        assert_eq!(t.minimal_decomposition(&set(&[0, 1, 2])).unwrap(), [a, b]);
        assert_eq!(t.minimal_decomposition(&set(&[1, 2])).unwrap(), [b]);
        assert_eq!(
            t.minimal_decomposition(&set(&[0, 1, 2, 3])).unwrap(),
            [a, b, c]
        );
        assert!(t.minimal_decomposition(&set(&[0, 2])).is_err());
        assert_eq!(t.find(&set(&[1, 2])), Some(b));
        assert_eq!(t.find(&set(&[0, 1, 2])), None);
        assert_eq!(t.roots(), [a, b, c]);
        assert_eq!(t.dimension(), 3);
    }
}
