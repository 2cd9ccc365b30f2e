//! Property checks against the brute-force oracles.
//!
//! Each `check_*` function returns the violations it found on one input.
//! [`VerifyReport`] tallies them per property and keeps a replayable dump
//! of every failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;

use crate::decomposition::{representative, DecompTree};
use crate::error::Result;
use crate::fsm::{Fsm, StateSet};
use crate::hfsm::Hfsm;
use crate::hierarchy::{core, hfsm_dimension, is_maximal, machine_forms, maximize};
use crate::io::{write_fsm, write_hfsm};
use crate::modules::{
    analyze, enumerate_indecomposable_thin, enumerate_thin_modules, from_mask, is_module,
    is_module_abstract, is_thin_module, overlapping, representative_oracle,
};
use crate::random::random_word;

/// One failed instance of a property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub property: &'static str,
    pub detail: String,
    pub subset: Option<StateSet>,
}

impl Violation {
    fn new(
        property: &'static str,
        detail: impl Into<String>,
        subset: Option<StateSet>,
    ) -> Violation {
        Violation {
            property,
            detail: detail.into(),
            subset,
        }
    }
}

fn names(z: &Fsm, set: &StateSet) -> String {
    let v: Vec<String> = z.names_of(set).iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn subsets(n: usize) -> impl Iterator<Item = StateSet> {
    (1u64..1 << n).map(from_mask)
}

/// `is_module` agrees with the contraction round trip on every subset.
pub fn check_module_definitions(z: &Fsm) -> Vec<Violation> {
    subsets(z.num_states())
        .filter(|m| is_module(z, m) != is_module_abstract(z, m))
        .map(|m| {
            Violation::new(
                "module-definition",
                format!("{} disagrees", names(z, &m)),
                Some(m),
            )
        })
        .collect()
}

/// Singletons, the whole set, and unions of weakly connected components
/// are modules.
pub fn check_trivial_modules(z: &Fsm) -> Vec<Violation> {
    let n = z.num_states();
    let mut out = Vec::new();
    let mut trivial: Vec<StateSet> = (0..n).map(|q| StateSet::from([q])).collect();
    trivial.push(z.all_states());
    let comps = components(z);
    if comps.len() <= 12 {
        for mask in 1u64..1 << comps.len() {
            let u: StateSet = (0..comps.len())
                .filter(|&i| mask & (1 << i) != 0)
                .flat_map(|i| comps[i].iter().copied())
                .collect();
            trivial.push(u);
        }
    }
    for m in trivial {
        if !is_module(z, &m) {
            out.push(Violation::new(
                "trivial-modules",
                format!("{} is not a module", names(z, &m)),
                Some(m),
            ));
        }
    }
    out
}

fn components(z: &Fsm) -> Vec<StateSet> {
    let n = z.num_states();
    let mut adj = vec![Vec::new(); n];
    for (u, _, w) in z.arcs() {
        adj[u].push(w);
        adj[w].push(u);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = StateSet::from([s]);
        let mut stack = vec![s];
        while let Some(a) = stack.pop() {
            for &b in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    comp.insert(b);
                    stack.push(b);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Overlapping thin modules have thin union and intersection.
pub fn check_closure(z: &Fsm, thin: &[StateSet]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, a) in thin.iter().enumerate() {
        for b in &thin[i + 1..] {
            if !overlapping(a, b) {
                continue;
            }
            let u: StateSet = a.union(b).copied().collect();
            let x: StateSet = a.intersection(b).copied().collect();
            if !is_thin_module(z, &u) {
                out.push(Violation::new(
                    "closure",
                    format!("union of {} and {} is not thin", names(z, a), names(z, b)),
                    Some(u),
                ));
            }
            if !is_thin_module(z, &x) {
                out.push(Violation::new(
                    "closure",
                    format!(
                        "intersection of {} and {} is not thin",
                        names(z, a),
                        names(z, b)
                    ),
                    Some(x),
                ));
            }
        }
    }
    out
}

/// For a module `X` and `Y ⊆ X`, `Y` is a module of the machine iff it is a
/// module of the restriction to `X`.
pub fn check_restriction(z: &Fsm) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for x in subsets(z.num_states()).filter(|m| is_module(z, m)) {
        let r = z.restrict(&x)?;
        let xs: Vec<usize> = x.iter().copied().collect();
        for mask in 1u64..1 << xs.len() {
            let y: StateSet = (0..xs.len())
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| xs[i])
                .collect();
            let ry = r.set_of(z.names_of(&y))?;
            if is_module(z, &y) != is_module(&r, &ry) {
                out.push(Violation::new(
                    "restriction",
                    format!("{} inside module {}", names(z, &y), names(z, &x)),
                    Some(y),
                ));
            }
        }
    }
    Ok(out)
}

/// For thin `X ⊆ Y`, `Y` is thin iff its image is thin after contracting `X`.
pub fn check_contraction(z: &Fsm, thin: &[StateSet]) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for x in thin.iter().filter(|x| x.len() > 1) {
        let (c, blocks) = z.contract_named(std::slice::from_ref(x))?;
        let block = c.index_of(blocks[0].as_str()).expect("block is a state");
        for y in subsets(z.num_states()).filter(|y| y.len() > x.len() && x.is_subset(y)) {
            let rest: StateSet = y.difference(x).copied().collect();
            let mut image = c.set_of(z.names_of(&rest))?;
            image.insert(block);
            if is_thin_module(z, &y) != is_thin_module(&c, &image) {
                out.push(Violation::new(
                    "contraction",
                    format!("{} with {} contracted", names(z, &y), names(z, x)),
                    Some(y),
                ));
            }
        }
    }
    Ok(out)
}

/// Every member of a thin module with an x-exit reaches the exit along
/// x-arcs without leaving the module.
pub fn check_exit_paths(z: &Fsm, thin: &[StateSet]) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for m in thin {
        let a = analyze(z, m)?;
        for x in 0..z.num_symbols() {
            let Some(&exit) = a.exits(x).first() else {
                continue;
            };
            for &u in m {
                let mut q = u;
                let mut steps = 0;
                let reached = loop {
                    match z.step(q, x) {
                        Some(w) if w == exit => break true,
                        Some(w) if m.contains(&w) && steps < m.len() => {
                            q = w;
                            steps += 1;
                        }
                        _ => break false,
                    }
                };
                if !reached {
                    out.push(Violation::new(
                        "exit-paths",
                        format!(
                            "{} in {} misses the {}-exit",
                            z.state(u),
                            names(z, m),
                            z.symbol(x)
                        ),
                        Some(m.clone()),
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// The built tree holds exactly the indecomposable thin modules and answers
/// every subset query like the direct test.
pub fn check_tree(z: &Fsm, tree: &DecompTree, indecomposable: &[StateSet]) -> Vec<Violation> {
    let mut out = Vec::new();
    let fast: BTreeSet<StateSet> = tree.modules().into_iter().collect();
    let slow: BTreeSet<StateSet> = indecomposable
        .iter()
        .filter(|m| m.len() > 1)
        .cloned()
        .collect();
    for m in fast.symmetric_difference(&slow) {
        let side = if fast.contains(m) {
            "only in the tree"
        } else {
            "missing from the tree"
        };
        out.push(Violation::new(
            "tree-vs-oracle",
            format!("{} {side}", names(z, m)),
            Some(m.clone()),
        ));
    }
    for m in subsets(z.num_states()) {
        if tree.is_thin_module(&m) != is_thin_module(z, &m) {
            out.push(Violation::new(
                "tree-queries",
                format!("query on {} disagrees", names(z, &m)),
                Some(m),
            ));
        }
    }
    if !tree.is_transitively_reduced() {
        out.push(Violation::new(
            "tree-vs-oracle",
            "arcs are not the cover relation",
            None,
        ));
    }
    out
}

/// Representatives match the oracle, are indecomposable thin modules, and
/// reach every non-singleton indecomposable.
pub fn check_representatives(
    z: &Fsm,
    indecomposable: &[StateSet],
    bound: usize,
) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    let targets: BTreeSet<&StateSet> = indecomposable.iter().filter(|m| m.len() > 1).collect();
    let mut hit = BTreeSet::new();
    for q in (0..z.num_states()).filter(|&q| q != z.start()) {
        let k = representative(z, q)?;
        let oracle = representative_oracle(z, q, bound)?;
        if k != oracle {
            out.push(Violation::new(
                "representative",
                format!(
                    "for {}: fast {} oracle {}",
                    z.state(q),
                    names(z, &k),
                    names(z, &oracle)
                ),
                Some(k.clone()),
            ));
        }
        if targets.contains(&k) {
            hit.insert(k);
        } else {
            out.push(Violation::new(
                "representative",
                format!(
                    "for {}: {} is not an indecomposable thin module",
                    z.state(q),
                    names(z, &k)
                ),
                Some(k),
            ));
        }
    }
    for m in targets.into_iter().filter(|m| !hit.contains(*m)) {
        out.push(Violation::new(
            "representative",
            format!("{} is no state's representative", names(z, m)),
            Some(m.clone()),
        ));
    }
    Ok(out)
}

/// `n + 1 ≤ #indecomposables ≤ 2n − 1` and the tree has at most
/// `4n − 2 + |arcs|` arcs.
pub fn check_bounds(z: &Fsm, tree: &DecompTree) -> Vec<Violation> {
    let n = z.num_states();
    let mut out = Vec::new();
    let count = n + tree.dimension();
    if n > 1 && !(n + 1..=2 * n - 1).contains(&count) {
        out.push(Violation::new(
            "bounds",
            format!("{count} indecomposables for {n} states"),
            None,
        ));
    }
    if tree.arc_count() > 4 * n - 2 + z.arc_count() {
        out.push(Violation::new(
            "bounds",
            format!(
                "{} tree arcs for {n} states and {} arcs",
                tree.arc_count(),
                z.arc_count()
            ),
            None,
        ));
    }
    out
}

/// Running the hierarchy and its flattening on random words ends in the
/// same state.
pub fn check_semantics<R: Rng + ?Sized>(
    h: &Hfsm,
    rng: &mut R,
    words: usize,
    max_len: usize,
) -> Result<Vec<Violation>> {
    let flat = h.flatten();
    let mut out = Vec::new();
    for _ in 0..words {
        let w = random_word(rng, h.alphabet(), max_len);
        let a = h.eval(&w)?;
        let b = flat.eval(&w)?.cloned();
        if a != b {
            let word: Vec<&str> = w.iter().map(|s| s.as_str()).collect();
            out.push(Violation::new(
                "semantics",
                format!(
                    "word [{}]: hierarchy {a:?}, flattening {b:?}",
                    word.join(" ")
                ),
                None,
            ));
        }
    }
    Ok(out)
}

/// Maximising gives an equivalent HFSM of the largest order whose machines
/// are prime and make up the core.
pub fn check_maximize(h: &Hfsm) -> Result<Vec<Violation>> {
    let v = |d: String| Violation::new("maximize", d, None);
    let mut out = Vec::new();
    let m = maximize(h)?;
    let dim = hfsm_dimension(h)?;
    let flat_dim = DecompTree::build(&h.flatten())?.dimension();
    if m.order() != dim || dim != flat_dim {
        out.push(v(format!(
            "order {} vs dimension {dim} vs flat dimension {flat_dim}",
            m.order()
        )));
    }
    if !is_maximal(&m)? {
        out.push(v("a machine of the result is not prime".into()));
    }
    if !m.equivalent(h) {
        out.push(v("result is not equivalent".into()));
    }
    if machine_forms(&m)? != core(h)? {
        out.push(v("machines of the result differ from the core".into()));
    }
    Ok(out)
}

/// A failure with enough context to replay it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub property: &'static str,
    pub detail: String,
    /// The input in the FSM text format, or HFSM JSON.
    pub input: String,
    pub json: bool,
}

/// Pass and fail counts per property, plus failure dumps.
#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    counts: BTreeMap<&'static str, (usize, usize)>,
    counterexamples: Vec<Counterexample>,
    notes: Vec<String>,
    quiet: bool,
}

impl VerifyReport {
    /// A report that keeps counts and failures but no per-input notes.
    pub fn quiet() -> VerifyReport {
        VerifyReport {
            quiet: true,
            ..VerifyReport::default()
        }
    }

    fn record(
        &mut self,
        properties: &[&'static str],
        violations: Vec<Violation>,
        dump: impl Fn() -> (String, bool),
    ) {
        for p in properties {
            let failed = violations.iter().any(|v| v.property == *p);
            let c = self.counts.entry(p).or_default();
            if failed {
                c.1 += 1;
            } else {
                c.0 += 1;
            }
        }
        for viol in violations {
            let (input, json) = dump();
            let mut detail = viol.detail;
            if let Some(s) = &viol.subset {
                detail += &format!(" (subset indices {s:?})");
            }
            self.counterexamples.push(Counterexample {
                property: viol.property,
                detail,
                input,
                json,
            });
        }
    }

    /// Runs every machine-level property on `z`.
    pub fn verify_fsm(&mut self, name: &str, z: &Fsm, bound: usize) -> Result<()> {
        let dump = || (write_fsm(name, z), false);
        let thin = enumerate_thin_modules(z, bound)?;
        let indecomposable = enumerate_indecomposable_thin(z, bound)?;
        let tree = DecompTree::build(z)?;
        if !self.quiet {
            self.notes.push(format!(
                "{name}: {} states, {} indecomposable thin modules, tree dimension {}",
                z.num_states(),
                indecomposable.len(),
                tree.dimension()
            ));
        }
        self.record(&["module-definition"], check_module_definitions(z), dump);
        self.record(&["trivial-modules"], check_trivial_modules(z), dump);
        self.record(&["closure"], check_closure(z, &thin), dump);
        self.record(&["restriction"], check_restriction(z)?, dump);
        self.record(&["contraction"], check_contraction(z, &thin)?, dump);
        self.record(&["exit-paths"], check_exit_paths(z, &thin)?, dump);
        self.record(
            &["tree-vs-oracle", "tree-queries"],
            check_tree(z, &tree, &indecomposable),
            dump,
        );
        self.record(
            &["representative"],
            check_representatives(z, &indecomposable, bound)?,
            dump,
        );
        self.record(&["bounds"], check_bounds(z, &tree), dump);
        Ok(())
    }

    /// Runs the hierarchy-level properties on a thin HFSM.
    pub fn verify_hfsm<R: Rng + ?Sized>(&mut self, h: &Hfsm, rng: &mut R) -> Result<()> {
        let dump = || (write_hfsm(h), true);
        self.record(&["semantics"], check_semantics(h, rng, 100, 20)?, dump);
        if h.is_thin() {
            self.record(&["maximize"], check_maximize(h)?, dump);
        } else {
            self.notes
                .push("hierarchy is not thin; maximize skipped".into());
        }
        Ok(())
    }

    pub fn counts(&self) -> &BTreeMap<&'static str, (usize, usize)> {
        &self.counts
    }

    pub fn counterexamples(&self) -> &[Counterexample] {
        &self.counterexamples
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for note in &self.notes {
            writeln!(f, "{note}")?;
        }
        for (p, (pass, fail)) in &self.counts {
            writeln!(f, "{p:<18} {pass:>6} pass {fail:>6} fail")?;
        }
        if !self.counterexamples.is_empty() {
            writeln!(f, "{} counterexamples", self.counterexamples.len())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{flat_h1, h1, overlapping_non_thin, path, s1, split_exit};
    use crate::modules::DEFAULT_ORACLE_BOUND;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixtures_pass() {
        let mut r = VerifyReport::default();
        for (name, z) in [
            ("p4", path(4)),
            ("s1", s1()),
            ("h1", flat_h1()),
            ("overlapping_non_thin", overlapping_non_thin()),
        ] {
            r.verify_fsm(name, &z, DEFAULT_ORACLE_BOUND).unwrap();
        }
        r.verify_hfsm(&h1(), &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert!(r.passed(), "{r}\n{:?}", r.counterexamples());
        assert!(r.notes()[0].contains("7 indecomposable"));
    }

    #[test]
    fn split_exit_breaks_intersection_closure() {
        let z = split_exit();
        let thin = enumerate_thin_modules(&z, DEFAULT_ORACLE_BOUND).unwrap();
        let v = check_closure(&z, &thin);
        assert!(v.iter().any(|v| v.detail.starts_with("intersection")));
        assert!(v.iter().all(|v| !v.detail.starts_with("union")));
        let ind = enumerate_indecomposable_thin(&z, DEFAULT_ORACLE_BOUND).unwrap();
        assert!(!check_representatives(&z, &ind, DEFAULT_ORACLE_BOUND)
            .unwrap()
            .is_empty());
        let mut r = VerifyReport::default();
        r.verify_fsm("split", &z, DEFAULT_ORACLE_BOUND).unwrap();
        assert!(!r.passed());
        assert!(r
            .counterexamples()
            .iter()
            .all(|c| c.input.starts_with("fsm split")));
    }
}
