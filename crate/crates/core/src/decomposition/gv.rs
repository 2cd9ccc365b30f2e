use petgraph::algo::dominators::simple_fast;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::fsm::{Fsm, StateSet};

/// Which rule put an arc into [`GvGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcCase {
    /// `u -x-> w` in the machine, `w` not the focus.
    A,
    /// Reverse of a machine arc whose head is off the focus's walk.
    B,
    /// From the walk predecessor of the head to the tail.
    C,
    /// From the end of the walk to a state without an arc on that symbol,
    /// or to a state on a cycle of that symbol that avoids the focus.
    D,
}

/// Auxiliary digraph for a focus state `v`: the ancestors of a node `q`
/// form the smallest thin module entered at `v` containing `q`.
#[derive(Clone, Debug)]
pub struct GvGraph {
    focus: usize,
    kept: Vec<bool>,
    arcs: Vec<(usize, usize, ArcCase)>,
    preds: Adjacency,
    succs: Adjacency,
}

/// Deduplicated neighbour lists in one buffer.
#[derive(Clone, Debug)]
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    fn new(n: usize, pairs: impl Iterator<Item = (usize, usize)> + Clone) -> Adjacency {
        let mut offsets = vec![0; n + 1];
        for (a, _) in pairs.clone() {
            offsets[a + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0; offsets[n]];
        for (a, b) in pairs {
            targets[fill[a]] = b;
            fill[a] += 1;
        }
        // Sort and dedup each row in place, compacting as we go.
        let mut write = 0;
        for a in 0..n {
            let (lo, hi) = (offsets[a], offsets[a + 1]);
            targets[lo..hi].sort_unstable();
            offsets[a] = write;
            for i in lo..hi {
                if i == lo || targets[i] != targets[i - 1] {
                    targets[write] = targets[i];
                    write += 1;
                }
            }
        }
        offsets[n] = write;
        targets.truncate(write);
        Adjacency { offsets, targets }
    }

    fn row(&self, a: usize) -> &[usize] {
        &self.targets[self.offsets[a]..self.offsets[a + 1]]
    }
}

/// Per-machine data shared by the auxiliary graphs of every focus.
///
/// A state reachable from the start without passing the focus `v` is
/// reachable from the start in the auxiliary graph by machine arcs alone,
/// so only states dominated by `v` can survive pruning. Those form a
/// contiguous range in a preorder of the dominator tree.
pub(crate) struct GvContext<'a> {
    z: &'a Fsm,
    k: usize,
    /// Row-major transition table, `NONE` for missing arcs.
    next: Vec<u32>,
    /// Row-major cycle ids, `NONE` off cycles.
    cycles: Vec<u32>,
    /// Tails of the x-arcs into `w`, for slot `w * k + x`.
    rev_offsets: Vec<u32>,
    rev_tails: Vec<u32>,
    /// Dominator tree preorder, and each state's preorder interval.
    preorder: Vec<usize>,
    enter: Vec<usize>,
    leave: Vec<usize>,
    scratch: RefCell<Scratch>,
}

/// Buffers reused across foci, cleared again after each use.
struct Scratch {
    words: usize,
    pos: Vec<u32>,
    member: Vec<u64>,
    reached: Vec<bool>,
}

const NONE: u32 = u32::MAX;

/// Walks of one focus: `walks[x]` and the position of each state on it.
/// Few states lie on a walk, so a bit per symbol is checked before the
/// position table.
struct Walks<'s> {
    k: usize,
    words: usize,
    member: &'s [u64],
    pos: &'s [u32],
    walks: &'s [Vec<usize>],
}

impl Walks<'_> {
    #[inline]
    fn position(&self, x: usize, q: usize) -> Option<usize> {
        if self.member[q * self.words + x / 64] & (1 << (x % 64)) == 0 {
            return None;
        }
        Some(self.pos[q * self.k + x] as usize)
    }

    fn end(&self, x: usize) -> usize {
        *self.walks[x].last().unwrap()
    }
}

impl<'a> GvContext<'a> {
    pub(crate) fn new(z: &'a Fsm) -> Result<GvContext<'a>> {
        z.require_accessible()?;
        let n = z.num_states();
        let k = z.num_symbols();
        if n >= NONE as usize {
            return Err(Error::Invariant("too many states".into()));
        }
        let next: Vec<u32> = (0..n * k)
            .map(|s| z.step(s / k, s % k).map_or(NONE, |w| w as u32))
            .collect();
        let mut cycles = vec![NONE; n * k];
        for x in 0..k {
            for (q, c) in cycle_ids(z, x).into_iter().enumerate() {
                if c != usize::MAX {
                    cycles[q * k + x] = c as u32;
                }
            }
        }
        let mut rev_offsets = vec![0u32; n * k + 1];
        for (_, x, w) in z.arcs() {
            rev_offsets[w * k + x + 1] += 1;
        }
        for i in 0..n * k {
            rev_offsets[i + 1] += rev_offsets[i];
        }
        let mut fill = rev_offsets.clone();
        let mut rev_tails = vec![0u32; rev_offsets[n * k] as usize];
        for (u, x, w) in z.arcs() {
            rev_tails[fill[w * k + x] as usize] = u as u32;
            fill[w * k + x] += 1;
        }

        let mut g = DiGraph::<(), ()>::with_capacity(n, z.arc_count());
        for _ in 0..n {
            g.add_node(());
        }
        for (u, _, w) in z.arcs() {
            g.add_edge(NodeIndex::new(u), NodeIndex::new(w), ());
        }
        let doms = simple_fast(&g, NodeIndex::new(z.start()));
        let mut children = vec![Vec::new(); n];
        for q in (0..n).filter(|&q| q != z.start()) {
            let d = doms
                .immediate_dominator(NodeIndex::new(q))
                .expect("accessible states have dominators");
            children[d.index()].push(q);
        }
        let mut preorder = Vec::with_capacity(n);
        let mut enter = vec![0; n];
        let mut leave = vec![0; n];
        let mut stack = vec![(z.start(), false)];
        while let Some((q, done)) = stack.pop() {
            if done {
                leave[q] = preorder.len();
                continue;
            }
            enter[q] = preorder.len();
            preorder.push(q);
            stack.push((q, true));
            stack.extend(children[q].iter().map(|&c| (c, false)));
        }

        let words = k.div_ceil(64);
        let scratch = RefCell::new(Scratch {
            words,
            pos: vec![NONE; n * k],
            member: vec![0; n * words],
            reached: vec![false; n],
        });
        Ok(GvContext {
            z,
            k,
            next,
            cycles,
            rev_offsets,
            rev_tails,
            preorder,
            enter,
            leave,
            scratch,
        })
    }

    #[inline]
    fn step(&self, q: usize, x: usize) -> Option<usize> {
        match self.next[q * self.k + x] {
            NONE => None,
            w => Some(w as usize),
        }
    }

    #[inline]
    fn cycle(&self, q: usize, x: usize) -> u32 {
        self.cycles[q * self.k + x]
    }

    #[inline]
    fn tails(&self, x: usize, w: usize) -> &[u32] {
        let s = w * self.k + x;
        &self.rev_tails[self.rev_offsets[s] as usize..self.rev_offsets[s + 1] as usize]
    }

    /// The x-walks from v, stopped before the first repeat, recorded in
    /// the scratch tables.
    fn walks(&self, v: usize, sc: &mut Scratch) -> Vec<Vec<usize>> {
        let k = self.k;
        let words = sc.words;
        let mut walks = Vec::with_capacity(k);
        for x in 0..k {
            let mut walk = vec![v];
            sc.pos[v * k + x] = 0;
            let mut q = v;
            while let Some(w) = self.step(q, x) {
                if sc.pos[w * k + x] != NONE {
                    break;
                }
                sc.pos[w * k + x] = walk.len() as u32;
                walk.push(w);
                q = w;
            }
            for &q in &walk {
                sc.member[q * words + x / 64] |= 1 << (x % 64);
            }
            walks.push(walk);
        }
        walks
    }

    /// Arcs contributed by the slot `(u, x)`. Each has `u` as one end, and
    /// every arc comes from exactly one slot.
    fn slot_arcs(
        &self,
        v: usize,
        w: &Walks,
        u: usize,
        x: usize,
        out: &mut impl FnMut(usize, usize, ArcCase),
    ) {
        match self.step(u, x) {
            Some(t) if t != v => {
                out(u, t, ArcCase::A);
                // A module holding part of a cycle that avoids v would be
                // entered twice, so it holds all of it, and then it cannot
                // have an exit on x.
                let c = self.cycle(u, x);
                if c != NONE && c != self.cycle(v, x) && w.end(x) != u {
                    out(w.end(x), u, ArcCase::D);
                }
                match w.position(x, t) {
                    Some(i) if i >= 1 => {
                        let p = w.walks[x][i - 1];
                        if p != u {
                            out(p, u, ArcCase::C);
                        }
                    }
                    _ => out(t, u, ArcCase::B),
                }
            }
            Some(_) => {}
            None => {
                if w.end(x) != u {
                    out(w.end(x), u, ArcCase::D);
                }
            }
        }
    }

    /// Calls `out` on predecessors of `b`, possibly more than once.
    fn predecessors(&self, v: usize, w: &Walks, b: usize, out: &mut impl FnMut(usize)) {
        for x in 0..self.k {
            if b != v {
                self.tails(x, b).iter().for_each(|&u| out(u as usize));
            }
            self.slot_arcs(v, w, b, x, &mut |p, q, _| {
                if q == b {
                    out(p);
                }
            });
        }
    }

    /// Calls `out` on successors of `a` that lie in `range`, a set of
    /// preorder positions, possibly more than once.
    fn successors_within(
        &self,
        v: usize,
        w: &Walks,
        a: usize,
        range: std::ops::Range<usize>,
        out: &mut impl FnMut(usize),
    ) {
        let inside = |q: usize| range.contains(&self.enter[q]);
        let mut emit = |q: usize| {
            if inside(q) {
                out(q);
            }
        };
        for x in 0..self.k {
            if let Some(t) = self.step(a, x) {
                if t != v {
                    emit(t);
                }
            }
            match w.position(x, a) {
                // Reverse arcs into a, which is off the walk.
                None => self.tails(x, a).iter().for_each(|&u| emit(u as usize)),
                Some(i) => {
                    if let Some(&next) = w.walks[x].get(i + 1) {
                        for &u in self.tails(x, next) {
                            if u as usize != a {
                                emit(u as usize);
                            }
                        }
                    }
                }
            }
            if w.end(x) == a {
                let own = self.cycle(v, x);
                for &u in &self.preorder[range.clone()] {
                    let hit = match self.step(u, x) {
                        None => true,
                        Some(t) => t != v && self.cycle(u, x) != NONE && self.cycle(u, x) != own,
                    };
                    if hit && u != a {
                        emit(u);
                    }
                }
            }
        }
    }

    pub(crate) fn build(&self, v: usize) -> Result<GvGraph> {
        let z = self.z;
        if v >= z.num_states() {
            return Err(Error::UnknownState(format!("#{v}")));
        }
        let n = z.num_states();
        let mut guard = self.scratch.borrow_mut();
        let sc = &mut *guard;
        let walk_list = self.walks(v, sc);
        let walks = Walks {
            k: self.k,
            words: sc.words,
            member: &sc.member,
            pos: &sc.pos,
            walks: &walk_list,
        };

        // Survivors: dominated by v with no ancestor outside that set.
        let range = self.enter[v]..self.leave[v];
        let candidates = &self.preorder[range.clone()];
        let reached = &mut sc.reached;
        let mut stack = Vec::new();
        if v != z.start() {
            for &b in candidates {
                let mut outside = false;
                self.predecessors(v, &walks, b, &mut |p| {
                    outside |= !range.contains(&self.enter[p]);
                });
                if outside && !reached[b] {
                    reached[b] = true;
                    stack.push(b);
                }
            }
            while let Some(a) = stack.pop() {
                self.successors_within(v, &walks, a, range.clone(), &mut |b| {
                    if !reached[b] {
                        reached[b] = true;
                        stack.push(b);
                    }
                });
            }
        }

        let mut kept = vec![false; n];
        for &q in candidates.iter().filter(|&&q| !reached[q]) {
            kept[q] = true;
        }
        let mut arcs = Vec::new();
        for &u in candidates.iter().filter(|&&u| kept[u]) {
            for x in 0..self.k {
                self.slot_arcs(v, &walks, u, x, &mut |a, b, case| {
                    if kept[a] && kept[b] {
                        arcs.push((a, b, case));
                    }
                });
            }
        }
        for &q in candidates {
            reached[q] = false;
        }
        for (x, walk) in walk_list.iter().enumerate() {
            for &q in walk {
                sc.pos[q * self.k + x] = NONE;
                sc.member[q * sc.words + x / 64] = 0;
            }
        }
        let succs = Adjacency::new(n, arcs.iter().map(|&(a, b, _)| (a, b)));
        let preds = Adjacency::new(n, arcs.iter().map(|&(a, b, _)| (b, a)));
        Ok(GvGraph {
            focus: v,
            kept,
            arcs,
            preds,
            succs,
        })
    }
}

/// Builds the auxiliary graph of `z` for focus `v`.
pub fn build_gv(z: &Fsm, v: usize) -> Result<GvGraph> {
    GvContext::new(z)?.build(v)
}

/// Labels each state lying on a cycle of x-arcs with an id for its cycle;
/// other states get `usize::MAX`.
fn cycle_ids(z: &Fsm, x: usize) -> Vec<usize> {
    let n = z.num_states();
    let mut id = vec![usize::MAX; n];
    let mut walk_of = vec![usize::MAX; n];
    for s in 0..n {
        if walk_of[s] != usize::MAX {
            continue;
        }
        let mut q = s;
        loop {
            walk_of[q] = s;
            match z.step(q, x) {
                Some(w) if walk_of[w] == usize::MAX => q = w,
                Some(w) if walk_of[w] == s => {
                    // Closed a new cycle through w.
                    let mut c = w;
                    loop {
                        id[c] = w;
                        c = z.step(c, x).unwrap();
                        if c == w {
                            break;
                        }
                    }
                    break;
                }
                _ => break,
            }
        }
    }
    id
}

impl GvGraph {
    pub fn focus(&self) -> usize {
        self.focus
    }

    pub fn contains(&self, q: usize) -> bool {
        self.kept.get(q).copied().unwrap_or(false)
    }

    /// Surviving nodes in index order.
    pub fn nodes(&self) -> StateSet {
        (0..self.kept.len()).filter(|&q| self.kept[q]).collect()
    }

    /// Surviving arcs with the rule that added them. May repeat a pair
    /// under different rules.
    pub fn arcs(&self) -> &[(usize, usize, ArcCase)] {
        &self.arcs
    }

    pub fn successors(&self, q: usize) -> &[usize] {
        self.succs.row(q)
    }

    pub fn predecessors(&self, q: usize) -> &[usize] {
        self.preds.row(q)
    }

    /// Ancestors of `q`, `q` included.
    pub fn up_set(&self, q: usize) -> Result<StateSet> {
        if !self.contains(q) {
            return Err(Error::PrunedNode(format!("#{q}")));
        }
        let mut seen = vec![false; self.kept.len()];
        seen[q] = true;
        let mut stack = vec![q];
        while let Some(a) = stack.pop() {
            for &p in self.preds.row(a) {
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        Ok((0..seen.len()).filter(|&p| seen[p]).collect())
    }

    /// Strongly connected components, sources first.
    pub fn sccs_topological(&self) -> Vec<Vec<usize>> {
        let nodes: Vec<usize> = (0..self.kept.len()).filter(|&q| self.kept[q]).collect();
        let mut index = vec![usize::MAX; self.kept.len()];
        let mut g = DiGraph::<usize, ()>::with_capacity(nodes.len(), self.arcs.len());
        for &q in &nodes {
            index[q] = g.add_node(q).index();
        }
        for &q in &nodes {
            for &w in self.succs.row(q) {
                g.add_edge(NodeIndex::new(index[q]), NodeIndex::new(index[w]), ());
            }
        }
        // tarjan_scc yields sinks first.
        let mut sccs: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|i| g[i]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        sccs.reverse();
        sccs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{flat_h1, path};

    fn pairs(g: &GvGraph) -> Vec<(usize, usize)> {
        let mut p: Vec<(usize, usize)> = g.arcs().iter().map(|&(a, b, _)| (a, b)).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    #[test]
    fn path_focus_two() {
        let p4 = path(4);
        let g = build_gv(&p4, 1).unwrap();
        assert_eq!(g.nodes(), StateSet::from([1, 2, 3]));
        assert_eq!(pairs(&g), [(1, 2), (2, 3)]);
        assert_eq!(g.up_set(2).unwrap(), StateSet::from([1, 2]));
        assert_eq!(g.up_set(1).unwrap(), StateSet::from([1]));
        assert!(matches!(g.up_set(0), Err(Error::PrunedNode(_))));
    }

    #[test]
    fn path_focus_sink_prunes_everything_else() {
        let p4 = path(4);
        let g = build_gv(&p4, 3).unwrap();
        assert_eq!(g.nodes(), StateSet::from([3]));
        assert!(g.arcs().is_empty());
    }

    #[test]
    fn path_focus_start() {
        let p4 = path(4);
        let g = build_gv(&p4, 0).unwrap();
        assert_eq!(g.nodes(), p4.all_states());
        assert_eq!(pairs(&g), [(0, 1), (1, 2), (2, 3)]);
        assert_eq!(g.up_set(3).unwrap(), p4.all_states());
        let sccs = g.sccs_topological();
        assert_eq!(sccs, [vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn case_tags() {
        let h = flat_h1();
        let g = build_gv(&h, 0).unwrap();
        let mut tagged: Vec<_> = g.arcs().to_vec();
        tagged.sort();
        assert_eq!(
            tagged,
            [
                (0, 1, ArcCase::A),
                (0, 1, ArcCase::C),
                (0, 2, ArcCase::A),
                (1, 2, ArcCase::A),
                (1, 2, ArcCase::D),
            ]
        );
        assert_eq!(pairs(&g), [(0, 1), (0, 2), (1, 2)]);
        assert_eq!(g.up_set(1).unwrap(), StateSet::from([0, 1]));
    }

    /// Every arc of the unpruned graph straight from the rules, then a
    /// search from the start.
    fn naive(z: &Fsm, v: usize) -> (StateSet, Vec<(usize, usize, ArcCase)>) {
        let n = z.num_states();
        let mut arcs = Vec::new();
        for x in 0..z.num_symbols() {
            let mut walk = vec![v];
            while let Some(w) = z.step(*walk.last().unwrap(), x) {
                if walk.contains(&w) {
                    break;
                }
                walk.push(w);
            }
            let qx = *walk.last().unwrap();
            let ids = cycle_ids(z, x);
            for u in 0..n {
                match z.step(u, x) {
                    None if u != qx => arcs.push((qx, u, ArcCase::D)),
                    Some(w) if w != v => {
                        arcs.push((u, w, ArcCase::A));
                        if ids[u] != usize::MAX && ids[u] != ids[v] && u != qx {
                            arcs.push((qx, u, ArcCase::D));
                        }
                        match walk.iter().position(|&q| q == w) {
                            Some(i) if walk[i - 1] != u => arcs.push((walk[i - 1], u, ArcCase::C)),
                            Some(_) => {}
                            None => arcs.push((w, u, ArcCase::B)),
                        }
                    }
                    _ => {}
                }
            }
        }
        let mut reached = vec![false; n];
        if v != z.start() {
            reached[z.start()] = true;
            let mut stack = vec![z.start()];
            while let Some(a) = stack.pop() {
                for &(p, q, _) in &arcs {
                    if p == a && !reached[q] {
                        reached[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        arcs.retain(|&(a, b, _)| !reached[a] && !reached[b]);
        arcs.sort();
        ((0..n).filter(|&q| !reached[q]).collect(), arcs)
    }

    #[test]
    fn matches_naive_construction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..400 {
            let n = rng.gen_range(1..=12);
            let k = rng.gen_range(1..=3);
            let z = crate::random::mixed_fsm(&mut rng, n, k);
            for v in 0..z.num_states() {
                let g = build_gv(&z, v).unwrap();
                let mut arcs = g.arcs().to_vec();
                arcs.sort();
                assert_eq!((g.nodes(), arcs), naive(&z, v), "{z} focus {v}");
            }
        }
    }
}
