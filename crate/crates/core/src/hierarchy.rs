//! Contracted forms, cores and maximisation of hierarchical machines.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::decomposition::{DecompTree, GvContext};
use crate::error::{Error, Result};
use crate::fsm::{block_name, fresh_name, Fsm, StateSet, Symbol};
use crate::hfsm::{Hfsm, NestingArc};
use crate::modules::is_thin_module;

/// A machine up to renaming of states: states are numbered in breadth-first
/// order from the start, successors taken in symbol order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalFsm {
    pub states: usize,
    pub transitions: Vec<(usize, Symbol, usize)>,
}

impl fmt::Display for CanonicalFsm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} states", self.states)?;
        for (u, x, w) in &self.transitions {
            write!(f, "; {u} -{x}-> {w}")?;
        }
        Ok(())
    }
}

/// Canonical numbering of an accessible machine.
pub fn canonical_form(f: &Fsm) -> Result<CanonicalFsm> {
    let order = f.bfs_order();
    if order.len() != f.num_states() {
        return Err(Error::NotAccessible {
            unreachable: f.num_states() - order.len(),
        });
    }
    let mut number = vec![0; f.num_states()];
    for (i, &q) in order.iter().enumerate() {
        number[q] = i;
    }
    let mut transitions: Vec<(usize, Symbol, usize)> = f
        .arcs()
        .map(|(u, x, w)| (number[u], f.symbol(x).clone(), number[w]))
        .collect();
    transitions.sort();
    Ok(CanonicalFsm {
        states: f.num_states(),
        transitions,
    })
}

/// A multiset of canonical machines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Core(BTreeMap<CanonicalFsm, usize>);

impl Core {
    pub fn insert(&mut self, form: CanonicalFsm) {
        *self.0.entry(form).or_default() += 1;
    }

    /// Number of elements, counted with multiplicity.
    pub fn len(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CanonicalFsm, usize)> {
        self.0.iter().map(|(f, &c)| (f, c))
    }
}

impl fmt::Display for Core {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (form, count) in self.iter() {
            writeln!(f, "{count} x {form}")?;
        }
        Ok(())
    }
}

fn names(z: &Fsm, set: &StateSet) -> Vec<String> {
    z.names_of(set).into_iter().map(|s| s.to_string()).collect()
}

/// The maximal thin modules strictly inside the thin module `k`.
pub fn maximal_thin_submodules(z: &Fsm, k: &StateSet) -> Result<Vec<StateSet>> {
    if !is_thin_module(z, k) {
        return Err(Error::NotThinModule(names(z, k)));
    }
    if k.len() == 1 {
        return Ok(Vec::new());
    }
    let ctx = GvContext::new(z)?;
    let mut candidates: BTreeSet<StateSet> = BTreeSet::new();
    for &v in k {
        let g = ctx.build(v)?;
        // The largest thin module inside k entered at v: the nodes of k all
        // of whose ancestors are in k.
        let nodes = g.nodes();
        let mut good: StateSet = k.intersection(&nodes).copied().collect();
        loop {
            let bad: Vec<usize> = good
                .iter()
                .copied()
                .filter(|&q| g.up_set(q).map(|u| !u.is_subset(&good)).unwrap_or(true))
                .collect();
            if bad.is_empty() {
                break;
            }
            for q in bad {
                good.remove(&q);
            }
        }
        if !good.contains(&v) {
            continue;
        }
        if good != *k {
            candidates.insert(good);
            continue;
        }
        // k itself is entered at v; drop a sink component of the graph on k.
        for scc in g.sccs_topological() {
            if scc.contains(&v) || !scc.iter().all(|q| k.contains(q)) {
                continue;
            }
            let is_sink = scc.iter().all(|&q| {
                g.successors(q)
                    .iter()
                    .all(|w| scc.contains(w) || !k.contains(w))
            });
            if is_sink {
                candidates.insert(k.iter().copied().filter(|q| !scc.contains(q)).collect());
            }
        }
    }
    let mut maximal: Vec<StateSet> = candidates
        .iter()
        .filter(|c| {
            !candidates
                .iter()
                .any(|d| d.len() > c.len() && c.is_subset(d))
        })
        .cloned()
        .collect();
    for &q in k {
        if !maximal.iter().any(|m| m.contains(&q)) {
            maximal.push(StateSet::from([q]));
        }
    }
    maximal.sort();
    Ok(maximal)
}

/// `k` restricted to itself with its maximal thin submodules contracted.
pub fn contracted_form(z: &Fsm, k: &StateSet) -> Result<Fsm> {
    let parts = maximal_thin_submodules(z, k)?;
    let inner = z.restrict(k)?;
    let mut seen = StateSet::new();
    let mut sets = Vec::with_capacity(parts.len());
    for part in &parts {
        if !part.is_disjoint(&seen) {
            return Err(Error::Invariant(format!(
                "maximal thin submodules of {:?} overlap",
                names(z, k)
            )));
        }
        seen.extend(part.iter().copied());
        sets.push(inner.set_of(z.names_of(part))?);
    }
    inner.contract(&sets)
}

/// Canonical contracted forms of the non-singleton indecomposable thin
/// modules of one machine.
pub fn machine_core(z: &Fsm) -> Result<Core> {
    let tree = DecompTree::build(z)?;
    let mut core = Core::default();
    for k in tree.modules() {
        core.insert(canonical_form(&contracted_form(z, &k)?)?);
    }
    Ok(core)
}

fn require_thin(z: &Hfsm) -> Result<()> {
    match z.first_non_thin() {
        Some(m) => Err(Error::NotThinHfsm(m.to_string())),
        None => Ok(()),
    }
}

/// The multiset of contracted forms over every machine of a thin HFSM.
pub fn core(z: &Hfsm) -> Result<Core> {
    require_thin(z)?;
    let mut total = Core::default();
    for (_, m) in z.machines() {
        for (form, count) in machine_core(m)?.iter() {
            for _ in 0..count {
                total.insert(form.clone());
            }
        }
    }
    Ok(total)
}

/// Canonical forms of the machines themselves.
pub fn machine_forms(z: &Hfsm) -> Result<Core> {
    let mut forms = Core::default();
    for (_, m) in z.machines() {
        forms.insert(canonical_form(m)?);
    }
    Ok(forms)
}

/// Sum of the machines' dimensions.
pub fn hfsm_dimension(z: &Hfsm) -> Result<usize> {
    z.machines()
        .map(|(_, m)| DecompTree::build(m).map(|t| t.dimension()))
        .sum()
}

/// Whether no machine has a thin module other than its singletons and its
/// whole state set.
pub fn is_maximal(z: &Hfsm) -> Result<bool> {
    require_thin(z)?;
    for (_, m) in z.machines() {
        let tree = DecompTree::build(m)?;
        if tree.internal_nodes().any(|t| tree.size(t) < m.num_states()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Contracts `set` (indices into `machine`'s states) to one state and
/// nests the restriction there. Returns the new HFSM and the nested
/// machine's name.
pub fn nest(z: &Hfsm, machine: &str, set: &StateSet) -> Result<(Hfsm, String)> {
    let y = z.machine(machine)?;
    if set.len() < 2 || set.len() >= y.num_states() {
        return Err(Error::Invariant(format!(
            "cannot nest {} of the {} states of {machine:?}",
            set.len(),
            y.num_states()
        )));
    }
    let members = names(y, set);
    let taken_states: BTreeSet<String> = z
        .machines()
        .flat_map(|(_, m)| m.states().iter().map(|s| s.to_string()))
        .filter(|s| !members.contains(s))
        .collect();
    let block = fresh_name(block_name(&members), &taken_states);
    let (contracted, given) = y.contract_named(std::slice::from_ref(set))?;
    let contracted = contracted.rename_states(|s| {
        if *s == given[0] {
            crate::fsm::StateId::new(block.clone()).unwrap()
        } else {
            s.clone()
        }
    })?;
    let inner = y.restrict(set)?;

    let taken_machines: BTreeSet<String> = z.machines().map(|(n, _)| n.to_string()).collect();
    let child = fresh_name(
        format!("{machine}/{}", block_name(&members)),
        &taken_machines,
    );

    let mut machines: Vec<(String, Fsm)> = z
        .machines()
        .filter(|(n, _)| *n != machine)
        .map(|(n, m)| (n.to_string(), m.clone()))
        .collect();
    machines.push((machine.to_string(), contracted));
    machines.push((child.clone(), inner));
    let mut nesting: Vec<NestingArc> = z
        .nesting()
        .iter()
        .map(|a| {
            let mut a = a.clone();
            if a.parent == machine && members.iter().any(|m| m == a.state.as_str()) {
                a.parent = child.clone();
            }
            a
        })
        .collect();
    nesting.push(NestingArc {
        parent: machine.to_string(),
        state: crate::fsm::StateId::new(block)?,
        child: child.clone(),
    });
    let out = Hfsm::with_alphabet(z.alphabet().to_vec(), machines, z.root(), nesting)?;
    Ok((out, child))
}

/// Nests non-trivial thin modules until every machine is prime. The
/// smallest module goes first, ties broken by member names.
pub fn maximize(z: &Hfsm) -> Result<Hfsm> {
    require_thin(z)?;
    let mut z = z.clone();
    let mut work: VecDeque<String> = z.machines().map(|(n, _)| n.to_string()).collect();
    while let Some(name) = work.pop_front() {
        let y = z.machine(&name)?;
        let tree = DecompTree::build(y)?;
        let pick = tree
            .internal_nodes()
            .filter(|&t| tree.size(t) < y.num_states())
            .map(|t| {
                let set = tree.down_set(t);
                (set.len(), names(y, &set), set)
            })
            .min();
        let Some((_, _, set)) = pick else {
            continue;
        };
        let (next, child) = nest(&z, &name, &set)?;
        z = next;
        work.push_back(name);
        work.push_back(child);
    }
    Ok(z)
}
