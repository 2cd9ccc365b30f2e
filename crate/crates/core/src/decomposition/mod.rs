//! The decomposition tree and the algorithm that builds it.
//!
//! For each focus state `v`, taken in reverse breadth-first order, the
//! auxiliary graph [`GvGraph`] is built. Its strongly connected components,
//! sources first, yield the indecomposable thin modules entered at `v`; each
//! is inserted into the [`DecompTree`] above the modules it covers.

mod gv;
mod tree;

pub(crate) use gv::GvContext;
pub use gv::{build_gv, ArcCase, GvGraph};
pub use tree::{DecompTree, NodeId};

use std::collections::HashSet;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::fsm::{Fsm, StateSet};

impl DecompTree {
    /// Builds the decomposition tree of an accessible machine.
    pub fn build(z: &Fsm) -> Result<DecompTree> {
        let order = z.reverse_bfs_order()?;
        let ctx = GvContext::new(z)?;
        let n = z.num_states();
        let mut tree = DecompTree::with_sinks(n);
        let mut local = vec![usize::MAX; n];
        let mut comp = vec![usize::MAX; n];
        for v in order {
            let g = ctx.build(v)?;
            let sccs = g.sccs_topological();
            let nodes: Vec<usize> = sccs.iter().flatten().copied().collect();
            for (i, &q) in nodes.iter().enumerate() {
                local[q] = i;
            }
            for (c, scc) in sccs.iter().enumerate() {
                for &q in scc {
                    comp[q] = c;
                }
            }
            // Up sets of the components, each the union of its own states
            // and the up sets of the components feeding it.
            let mut ups: Vec<FixedBitSet> = Vec::with_capacity(sccs.len());
            let mut merged = vec![usize::MAX; sccs.len()];
            for (c, scc) in sccs.iter().enumerate() {
                let mut up = FixedBitSet::with_capacity(nodes.len());
                for &q in scc {
                    up.insert(local[q]);
                    for &p in g.predecessors(q) {
                        let d = comp[p];
                        if d != c && merged[d] != c {
                            merged[d] = c;
                            up.union_with(&ups[d]);
                        }
                    }
                }
                ups.push(up);
            }
            for (c, scc) in sccs.iter().enumerate() {
                if scc.as_slice() == [v] {
                    continue;
                }
                let up = &ups[c];
                if decomposable(&tree, scc, |q| {
                    local[q] != usize::MAX && up.contains(local[q])
                }) {
                    continue;
                }
                let k: StateSet = up.ones().map(|i| nodes[i]).collect();
                tree.add_module(&k).map_err(|e| match e {
                    Error::DuplicateModule(_) => Error::DuplicateModule(
                        z.names_of(&k).iter().map(|s| s.to_string()).collect(),
                    ),
                    e => e,
                })?;
            }
            for &q in &nodes {
                local[q] = usize::MAX;
                comp[q] = usize::MAX;
            }
        }
        Ok(tree)
    }
}

/// Whether the up set of `scc` splits as its other ancestors, a thin module
/// entered at the focus, overlapped by a present node that meets `scc`,
/// leaves it and stays inside the up set. The part holding a state of
/// `scc` in any decomposition is such a node, so nothing else needs
/// checking. Searches upward from the sinks of `scc`.
fn decomposable(tree: &DecompTree, scc: &[usize], in_up: impl Fn(usize) -> bool) -> bool {
    let in_scc = |q: usize| scc.binary_search(&q).is_ok();
    let mut seen = HashSet::new();
    let mut stack: Vec<NodeId> = scc
        .iter()
        .flat_map(|&q| tree.parents(tree.sink(q)))
        .collect();
    while let Some(t) = stack.pop() {
        if !seen.insert(t) {
            continue;
        }
        if tree.size(t) <= scc.len() && tree.all_below(t, in_scc) {
            stack.extend(tree.parents(t));
        } else if tree.all_below(t, &in_up) {
            return true;
        }
    }
    false
}

/// The intersection of all thin modules containing `q` and entered
/// somewhere else. Each such module entered at `v` contains the ancestors of
/// `q` in the auxiliary graph for `v`, which is one of them.
pub fn representative(z: &Fsm, q: usize) -> Result<StateSet> {
    if q >= z.num_states() {
        return Err(Error::UnknownState(format!("#{q}")));
    }
    if q == z.start() {
        return Err(Error::StartHasNoRepresentative);
    }
    let ctx = GvContext::new(z)?;
    let mut acc: Option<StateSet> = None;
    for v in (0..z.num_states()).filter(|&v| v != q) {
        let g = ctx.build(v)?;
        if !g.contains(q) {
            continue;
        }
        let up = g.up_set(q)?;
        acc = Some(match acc {
            None => up,
            Some(a) => a.intersection(&up).copied().collect(),
        });
    }
    // The whole state set is always a candidate through the start.
    acc.ok_or_else(|| Error::Invariant("no auxiliary graph contains the state".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cycle3, flat_h1, path, s1, split_exit};
    use crate::modules::{enumerate_indecomposable_thin, is_thin_module, DEFAULT_ORACLE_BOUND};

    fn modules_named(z: &Fsm, tree: &DecompTree) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = tree
            .modules()
            .iter()
            .map(|m| z.names_of(m).into_iter().map(|s| s.to_string()).collect())
            .collect();
        out.sort();
        out
    }

    #[test]
    fn path_tree() {
        let p4 = path(4);
        let t = DecompTree::build(&p4).unwrap();
        assert_eq!(
            modules_named(&p4, &t),
            [vec!["1", "2"], vec!["2", "3"], vec!["3", "4"]]
        );
        assert_eq!(t.roots().len(), 3);
        assert_eq!(t.arc_count(), 6);
        assert_eq!(t.dimension(), 3);
    }

    #[test]
    fn flat_h1_tree() {
        let h = flat_h1();
        let t = DecompTree::build(&h).unwrap();
        assert_eq!(modules_named(&h, &t), [vec!["a", "b"], vec!["a", "b", "c"]]);
        let abc = t.find(&h.all_states()).unwrap();
        let ab = t.find(&h.set_of(["a", "b"]).unwrap()).unwrap();
        let mut kids: Vec<NodeId> = t.children(abc).collect();
        kids.sort();
        assert_eq!(kids, [t.sink(2), ab]);
        assert_eq!(t.down_set(abc), h.all_states());
        assert_eq!(t.dimension(), 2);
    }

    #[test]
    fn trivial_trees() {
        let t = DecompTree::build(&s1()).unwrap();
        assert_eq!(t.num_nodes(), 1);
        assert_eq!(t.dimension(), 0);
        // {1,2} and {2,3} overlap; their union is decomposable.
        let t = DecompTree::build(&cycle3()).unwrap();
        assert_eq!(t.dimension(), 2);
    }

    #[test]
    fn inaccessible_is_rejected() {
        let z = Fsm::new(["1", "2"], ["x"], [("2", "x", "1")], "1").unwrap();
        assert!(matches!(
            DecompTree::build(&z),
            Err(Error::NotAccessible { .. })
        ));
    }

    #[test]
    fn matches_oracle_on_fixtures() {
        for z in [
            path(5),
            flat_h1(),
            cycle3(),
            crate::fixtures::overlapping_non_thin(),
        ] {
            let t = DecompTree::build(&z).unwrap();
            let mut fast = t.modules();
            fast.sort();
            let mut slow: Vec<StateSet> = enumerate_indecomposable_thin(&z, DEFAULT_ORACLE_BOUND)
                .unwrap()
                .into_iter()
                .filter(|m| m.len() > 1)
                .collect();
            slow.sort();
            assert_eq!(fast, slow, "{z}");
            for mask in 1u64..1 << z.num_states() {
                let m = crate::modules::from_mask(mask);
                assert_eq!(t.is_thin_module(&m), is_thin_module(&z, &m), "{z} {m:?}");
            }
        }
    }

    /// The plain construction: test each component's up set against the
    /// tree built so far.
    fn reference_build(z: &Fsm) -> DecompTree {
        let ctx = GvContext::new(z).unwrap();
        let mut tree = DecompTree::with_sinks(z.num_states());
        for v in z.reverse_bfs_order().unwrap() {
            let g = ctx.build(v).unwrap();
            for scc in g.sccs_topological() {
                let k = g.up_set(scc[0]).unwrap();
                if scc != [v] && !tree.is_thin_module(&k) {
                    tree.add_module(&k).unwrap();
                }
            }
        }
        tree
    }

    #[test]
    fn matches_reference_on_medium_machines() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(2..=40);
            let k = rng.gen_range(1..=4);
            let z = crate::random::mixed_fsm(&mut rng, n, k);
            assert_eq!(DecompTree::build(&z).unwrap(), reference_build(&z), "{z}");
        }
        for z in [path(30), crate::fixtures::cycle(30)] {
            assert_eq!(DecompTree::build(&z).unwrap(), reference_build(&z), "{z}");
        }
    }

    #[test]
    fn representative_examples() {
        let p4 = path(4);
        assert_eq!(representative(&p4, 2).unwrap(), StateSet::from([1, 2]));
        assert_eq!(representative(&p4, 3).unwrap(), StateSet::from([2, 3]));
        assert_eq!(representative(&p4, 0), Err(Error::StartHasNoRepresentative));
        let h = flat_h1();
        assert_eq!(representative(&h, 2).unwrap(), h.all_states());
    }

    #[test]
    fn split_exit_tree_and_representative() {
        let z = split_exit();
        let tree = DecompTree::build(&z).unwrap();
        let mut got = modules_named(&z, &tree);
        got.sort();
        assert_eq!(
            got,
            [
                vec!["1", "2", "4", "5"],
                vec!["2", "3", "4", "5"],
                vec!["4", "5"]
            ]
        );
        // Both four-state modules hold 4 off their entrance; what they
        // share is not a module.
        let k = representative(&z, 3).unwrap();
        assert_eq!(k, StateSet::from([1, 3, 4]));
        assert!(!is_thin_module(&z, &k));
        assert_eq!(
            k,
            crate::modules::representative_oracle(&z, 3, DEFAULT_ORACLE_BOUND).unwrap()
        );
    }
}
