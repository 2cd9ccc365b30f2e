//! Module predicates and the brute-force oracles behind them.
//!
//! A set `M` of states is a module when contracting it to one state and
//! expanding the restriction back in restores the machine. [`is_module`]
//! decides this from entrances and exits; [`is_module_abstract`] performs
//! the round trip literally and exists to cross-check the fast test.
//!
//! The global start counts as an entrance of every set containing it: the
//! machine is entered there from outside. Without this the cycle
//! `1 → 2 → 3 → 1` would have `{1, 3}` as a module, which the round trip
//! rejects.

use crate::error::{Error, Result};
use crate::fsm::{Fsm, StateSet};

/// Default state count above which the subset-enumeration oracles refuse
/// to run.
pub const DEFAULT_ORACLE_BOUND: usize = 14;

/// Entrance and exit data of one state set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleSet {
    members: StateSet,
    entrances: StateSet,
    exits: Vec<StateSet>,
    complete: Vec<bool>,
    contains_start: bool,
    start: usize,
}

impl ModuleSet {
    pub fn members(&self) -> &StateSet {
        &self.members
    }

    /// Members receiving an arc from a non-member.
    pub fn entrances(&self) -> &StateSet {
        &self.entrances
    }

    /// Non-members receiving an arc on symbol `x` from a member.
    pub fn exits(&self, x: usize) -> &StateSet {
        &self.exits[x]
    }

    /// Whether every member has an arc on symbol `x`.
    pub fn all_have_arc(&self, x: usize) -> bool {
        self.complete[x]
    }

    pub fn contains_start(&self) -> bool {
        self.contains_start
    }

    /// Entrances together with the global start when it is a member.
    pub fn effective_entrances(&self) -> StateSet {
        let mut e = self.entrances.clone();
        if self.contains_start {
            e.insert(self.start);
        }
        e
    }

    /// The state through which the set is entered, if unique.
    pub fn entrance(&self) -> Option<usize> {
        let e = self.effective_entrances();
        if e.len() == 1 {
            e.first().copied()
        } else {
            None
        }
    }

    pub fn is_module(&self) -> bool {
        self.effective_entrances().len() <= 1
            && self
                .exits
                .iter()
                .zip(&self.complete)
                .all(|(exits, &complete)| exits.is_empty() || (exits.len() == 1 && complete))
    }
}

fn membership(z: &Fsm, m: &StateSet) -> Result<Vec<bool>> {
    if m.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut inside = vec![false; z.num_states()];
    for &q in m {
        if q >= z.num_states() {
            return Err(Error::UnknownState(format!("#{q}")));
        }
        inside[q] = true;
    }
    Ok(inside)
}

/// Computes entrances and exits of `m`.
pub fn analyze(z: &Fsm, m: &StateSet) -> Result<ModuleSet> {
    let inside = membership(z, m)?;
    let k = z.num_symbols();
    let mut entrances = StateSet::new();
    let mut exits = vec![StateSet::new(); k];
    let mut complete = vec![true; k];
    for u in 0..z.num_states() {
        for x in 0..k {
            match z.step(u, x) {
                Some(w) => match (inside[u], inside[w]) {
                    (false, true) => {
                        entrances.insert(w);
                    }
                    (true, false) => {
                        exits[x].insert(w);
                    }
                    _ => {}
                },
                None if inside[u] => complete[x] = false,
                None => {}
            }
        }
    }
    Ok(ModuleSet {
        members: m.clone(),
        entrances,
        exits,
        complete,
        contains_start: inside[z.start()],
        start: z.start(),
    })
}

/// At most one entrance, and per symbol either no exit or a unique exit
/// reached by an arc from every member.
pub fn is_module(z: &Fsm, m: &StateSet) -> bool {
    analyze(z, m).map(|a| a.is_module()).unwrap_or(false)
}

/// The contraction round trip: `m` is a module iff expanding
/// `restrict(z, m)` into `contract(z, {m})` gives back `z`.
pub fn is_module_abstract(z: &Fsm, m: &StateSet) -> bool {
    let Ok((contracted, names)) = z.contract_named(std::slice::from_ref(m)) else {
        return false;
    };
    let Ok(nested) = z.restrict(m) else {
        return false;
    };
    let host = contracted
        .index_of(names[0].as_str())
        .expect("block state exists");
    match contracted.expand(host, &nested) {
        Ok(expanded) => &expanded == z,
        Err(_) => false,
    }
}

/// Whether the x-arcs with both ends in `m` contain a cycle.
pub fn has_cycle_within(z: &Fsm, m: &StateSet, x: usize) -> bool {
    let Ok(inside) = membership(z, m) else {
        return false;
    };
    has_cycle_in(z, &inside, x)
}

fn has_cycle_in(z: &Fsm, inside: &[bool], x: usize) -> bool {
    // x-arcs form a functional graph: colour each walk, a walk that meets
    // its own colour has closed a cycle.
    let mut colour = vec![usize::MAX; z.num_states()];
    for s in 0..z.num_states() {
        if !inside[s] || colour[s] != usize::MAX {
            continue;
        }
        let mut q = s;
        loop {
            colour[q] = s;
            match z.step(q, x) {
                Some(w) if inside[w] => {
                    if colour[w] == s {
                        return true;
                    }
                    if colour[w] != usize::MAX {
                        break;
                    }
                    q = w;
                }
                _ => break,
            }
        }
    }
    false
}

/// A module that, for every symbol, has no exit on it or no cycle of it
/// inside.
pub fn is_thin_module(z: &Fsm, m: &StateSet) -> bool {
    let Ok(a) = analyze(z, m) else {
        return false;
    };
    if !a.is_module() {
        return false;
    }
    let inside = membership(z, m).unwrap();
    (0..z.num_symbols()).all(|x| a.exits[x].is_empty() || !has_cycle_in(z, &inside, x))
}

/// Intersecting and neither contains the other.
pub fn overlapping(a: &StateSet, b: &StateSet) -> bool {
    !a.is_disjoint(b) && !a.is_subset(b) && !b.is_subset(a)
}

/// Whether the overlap graph on `family` is connected.
pub fn family_overlapping(family: &[StateSet]) -> bool {
    if family.is_empty() {
        return true;
    }
    let mut reached = vec![false; family.len()];
    let mut stack = vec![0];
    reached[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..family.len() {
            if !reached[j] && overlapping(&family[i], &family[j]) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

pub(crate) fn to_mask(set: &StateSet) -> u64 {
    set.iter().fold(0, |m, &q| m | (1 << q))
}

pub fn from_mask(mask: u64) -> StateSet {
    (0..64).filter(|&q| mask & (1 << q) != 0).collect()
}

fn masks_overlap(a: u64, b: u64) -> bool {
    a & b != 0 && a & !b != 0 && b & !a != 0
}

fn check_bound(z: &Fsm, bound: usize) -> Result<()> {
    if z.num_states() > bound.min(63) {
        return Err(Error::SizeBound {
            states: z.num_states(),
            bound: bound.min(63),
        });
    }
    Ok(())
}

fn thin_masks(z: &Fsm, bound: usize) -> Result<Vec<u64>> {
    check_bound(z, bound)?;
    let n = z.num_states();
    Ok((1u64..1 << n)
        .filter(|&mask| is_thin_module(z, &from_mask(mask)))
        .collect())
}

/// Every thin module of `z`, by brute force over all subsets.
pub fn enumerate_thin_modules(z: &Fsm, bound: usize) -> Result<Vec<StateSet>> {
    Ok(thin_masks(z, bound)?.into_iter().map(from_mask).collect())
}

fn indecomposable_masks(thin: &[u64]) -> Vec<u64> {
    thin.iter()
        .copied()
        .filter(|&m| {
            let below: Vec<u64> = thin
                .iter()
                .copied()
                .filter(|&a| a != m && a & !m == 0)
                .collect();
            // Union of each connected component of the overlap graph.
            let mut done = vec![false; below.len()];
            for i in 0..below.len() {
                if done[i] {
                    continue;
                }
                done[i] = true;
                let mut union = below[i];
                let mut stack = vec![i];
                while let Some(a) = stack.pop() {
                    for b in 0..below.len() {
                        if !done[b] && masks_overlap(below[a], below[b]) {
                            done[b] = true;
                            union |= below[b];
                            stack.push(b);
                        }
                    }
                }
                if union == m {
                    return false;
                }
            }
            true
        })
        .collect()
}

/// The thin modules that are not the union of an overlapping family of
/// other thin modules, singletons included.
pub fn enumerate_indecomposable_thin(z: &Fsm, bound: usize) -> Result<Vec<StateSet>> {
    let thin = thin_masks(z, bound)?;
    Ok(indecomposable_masks(&thin)
        .into_iter()
        .map(from_mask)
        .collect())
}

/// The intersection of every thin module that contains `q` but is not
/// entered at `q`.
pub fn representative_oracle(z: &Fsm, q: usize, bound: usize) -> Result<StateSet> {
    if q >= z.num_states() {
        return Err(Error::UnknownState(format!("#{q}")));
    }
    if q == z.start() {
        return Err(Error::StartHasNoRepresentative);
    }
    z.require_accessible()?;
    let mut acc = u64::MAX;
    for mask in thin_masks(z, bound)? {
        if mask & (1 << q) == 0 {
            continue;
        }
        let a = analyze(z, &from_mask(mask))?;
        if a.entrance() != Some(q) {
            acc &= mask;
        }
    }
    Ok(from_mask(acc))
}

/// Whether no thin module overlaps `m`.
pub fn is_strong(z: &Fsm, m: &StateSet, bound: usize) -> Result<bool> {
    let m = to_mask(m);
    Ok(thin_masks(z, bound)?
        .into_iter()
        .all(|a| !masks_overlap(a, m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cycle3, flat_h1, overlapping_non_thin, path, s1};

    fn set(z: &Fsm, names: &[&str]) -> StateSet {
        z.set_of(names).unwrap()
    }

    fn named(z: &Fsm, sets: &[StateSet]) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = sets
            .iter()
            .map(|s| z.names_of(s).into_iter().map(|n| n.to_string()).collect())
            .collect();
        out.sort();
        out
    }

    #[test]
    fn analyze_examples() {
        let p4 = path(4);
        let a = analyze(&p4, &set(&p4, &["2", "3"])).unwrap();
        assert_eq!(a.entrances(), &set(&p4, &["2"]));
        assert_eq!(a.exits(0), &set(&p4, &["4"]));
        let a = analyze(&p4, &p4.all_states()).unwrap();
        assert!(a.entrances().is_empty());
        assert!(a.exits(0).is_empty());
        let h = flat_h1();
        let a = analyze(&h, &set(&h, &["b", "c"])).unwrap();
        assert_eq!(a.entrances(), &set(&h, &["b", "c"]));
        assert_eq!(analyze(&p4, &StateSet::new()), Err(Error::EmptySet));
    }

    #[test]
    fn module_examples() {
        let p4 = path(4);
        assert!(is_module(&p4, &set(&p4, &["2", "3"])));
        let h = flat_h1();
        assert!(!is_module(&h, &set(&h, &["a", "c"])));
        for z in [
            p4.clone(),
            h.clone(),
            cycle3(),
            s1(),
            overlapping_non_thin(),
        ] {
            assert!(is_module(&z, &z.all_states()));
            for q in 0..z.num_states() {
                assert!(is_module(&z, &StateSet::from([q])));
            }
        }
    }

    #[test]
    fn start_counts_as_entrance() {
        let c3 = cycle3();
        let m = set(&c3, &["1", "3"]);
        assert_eq!(analyze(&c3, &m).unwrap().entrances().len(), 1);
        assert!(!is_module(&c3, &m));
        assert!(!is_module_abstract(&c3, &m));
    }

    #[test]
    fn abstract_module_examples() {
        let p4 = path(4);
        assert!(is_module_abstract(&p4, &set(&p4, &["2", "3"])));
        assert!(is_module_abstract(&p4, &p4.all_states()));
        let h = flat_h1();
        assert!(!is_module_abstract(&h, &set(&h, &["b", "c"])));
    }

    #[test]
    fn module_tests_agree_on_fixtures() {
        for z in [path(4), flat_h1(), cycle3(), s1(), overlapping_non_thin()] {
            let n = z.num_states();
            for mask in 1u64..1 << n {
                let m = from_mask(mask);
                assert_eq!(is_module(&z, &m), is_module_abstract(&z, &m), "{z} {m:?}");
            }
        }
    }

    #[test]
    fn thin_examples() {
        let p4 = path(4);
        assert!(is_thin_module(&p4, &set(&p4, &["2", "3"])));
        let c3 = cycle3();
        assert!(is_thin_module(&c3, &set(&c3, &["2", "3"])));
        assert!(has_cycle_within(&c3, &c3.all_states(), 0));
        assert!(!has_cycle_within(&c3, &set(&c3, &["2", "3"]), 0));
    }

    #[test]
    fn overlapping_non_thin_modules() {
        let z = overlapping_non_thin();
        let nontrivial: Vec<StateSet> = (1u64..1 << z.num_states())
            .map(from_mask)
            .filter(|m| m.len() > 1 && m.len() < z.num_states() && is_module(&z, m))
            .collect();
        assert_eq!(
            named(&z, &nontrivial),
            [vec!["1", "2", "3"], vec!["2", "3", "4"]]
        );
        for m in &nontrivial {
            assert!(!is_thin_module(&z, m));
        }
        let union: StateSet = nontrivial[0].union(&nontrivial[1]).copied().collect();
        let inter: StateSet = nontrivial[0]
            .intersection(&nontrivial[1])
            .copied()
            .collect();
        assert!(!is_module(&z, &union));
        assert!(!is_module(&z, &inter));
    }

    #[test]
    fn overlap_examples() {
        let s = |v: &[usize]| v.iter().copied().collect::<StateSet>();
        assert!(overlapping(&s(&[1, 2]), &s(&[2, 3])));
        assert!(!overlapping(&s(&[1, 2]), &s(&[1, 2, 3])));
        assert!(family_overlapping(&[s(&[1, 2]), s(&[2, 3]), s(&[3, 4])]));
        assert!(!family_overlapping(&[s(&[1, 2]), s(&[3, 4])]));
        assert!(family_overlapping(&[s(&[1])]));
    }

    #[test]
    fn enumeration_examples() {
        let p4 = path(4);
        let thin = enumerate_thin_modules(&p4, DEFAULT_ORACLE_BOUND).unwrap();
        assert_eq!(thin.len(), 10);
        assert!(thin.iter().all(|m| {
            let v: Vec<usize> = m.iter().copied().collect();
            v.windows(2).all(|w| w[1] == w[0] + 1)
        }));
        assert_eq!(
            enumerate_thin_modules(&s1(), DEFAULT_ORACLE_BOUND).unwrap(),
            [StateSet::from([0])]
        );
        let h = flat_h1();
        assert_eq!(
            named(
                &h,
                &enumerate_thin_modules(&h, DEFAULT_ORACLE_BOUND).unwrap()
            ),
            [
                vec!["a"],
                vec!["a", "b"],
                vec!["a", "b", "c"],
                vec!["b"],
                vec!["c"]
            ]
        );
        assert!(matches!(
            enumerate_thin_modules(&path(15), DEFAULT_ORACLE_BOUND),
            Err(Error::SizeBound {
                states: 15,
                bound: 14
            })
        ));
    }

    #[test]
    fn indecomposable_examples() {
        let p4 = path(4);
        let ind = enumerate_indecomposable_thin(&p4, DEFAULT_ORACLE_BOUND).unwrap();
        assert_eq!(
            named(&p4, &ind),
            [
                vec!["1"],
                vec!["1", "2"],
                vec!["2"],
                vec!["2", "3"],
                vec!["3"],
                vec!["3", "4"],
                vec!["4"]
            ]
        );
        let h = flat_h1();
        let ind = enumerate_indecomposable_thin(&h, DEFAULT_ORACLE_BOUND).unwrap();
        assert_eq!(
            named(&h, &ind),
            [
                vec!["a"],
                vec!["a", "b"],
                vec!["a", "b", "c"],
                vec!["b"],
                vec!["c"]
            ]
        );
        let c3 = cycle3();
        assert_eq!(
            named(
                &c3,
                &enumerate_indecomposable_thin(&c3, DEFAULT_ORACLE_BOUND).unwrap()
            ),
            [
                vec!["1"],
                vec!["1", "2"],
                vec!["2"],
                vec!["2", "3"],
                vec!["3"]
            ]
        );
        // Two states swapped by x: only the trivial modules.
        let swap = Fsm::new(["1", "2"], ["x"], [("1", "x", "2"), ("2", "x", "1")], "1").unwrap();
        assert_eq!(
            enumerate_indecomposable_thin(&swap, DEFAULT_ORACLE_BOUND)
                .unwrap()
                .len(),
            3
        );
    }

    #[test]
    fn representative_examples() {
        let p4 = path(4);
        let k = |q: &str| {
            representative_oracle(&p4, p4.index_of(q).unwrap(), DEFAULT_ORACLE_BOUND).unwrap()
        };
        assert_eq!(k("3"), set(&p4, &["2", "3"]));
        assert_eq!(k("4"), set(&p4, &["3", "4"]));
        let h = flat_h1();
        assert_eq!(
            representative_oracle(&h, h.index_of("c").unwrap(), DEFAULT_ORACLE_BOUND).unwrap(),
            h.all_states()
        );
        assert_eq!(
            representative_oracle(&p4, 0, DEFAULT_ORACLE_BOUND),
            Err(Error::StartHasNoRepresentative)
        );
    }

    #[test]
    fn strong_examples() {
        let p4 = path(4);
        assert!(!is_strong(&p4, &set(&p4, &["2", "3"]), DEFAULT_ORACLE_BOUND).unwrap());
        assert!(is_strong(&p4, &p4.all_states(), DEFAULT_ORACLE_BOUND).unwrap());
        let h = flat_h1();
        assert!(is_strong(&h, &set(&h, &["a", "b"]), DEFAULT_ORACLE_BOUND).unwrap());
    }
}
