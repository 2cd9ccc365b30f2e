//! Deterministic finite state machines without accepting states.
//!
//! An [`Fsm`] is a labelled pseudodigraph with a start state in which every
//! arc leaving a state carries a distinct symbol. States and symbols are kept
//! sorted by name, so a state can be referred to either by its [`StateId`] or
//! by its index into [`Fsm::states`]. Sets of states ([`StateSet`]) always use
//! indices and are only meaningful relative to the machine they came from.
//!
//! Besides execution this module implements the quotient algebra that the
//! rest of the crate is built on: quotients by a partition, contraction of
//! disjoint state sets, restriction to a state set and expansion of one
//! machine into a state of another.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// A set of states, by index into [`Fsm::states`].
pub type StateSet = BTreeSet<usize>;

/// Separator used when naming a contracted block after its members.
pub const BLOCK_SEPARATOR: &str = "+";

fn check_token(token: &str) -> Result<()> {
    if token.is_empty() || token.chars().any(char::is_whitespace) {
        return Err(Error::InvalidToken(token.to_string()));
    }
    Ok(())
}

macro_rules! token_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(token: impl Into<String>) -> Result<Self> {
                let token = token.into();
                check_token(&token)?;
                Ok(Self(token))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

token_type!(
    /// Name of a state. Unique within a machine, and within an HFSM.
    StateId
);
token_type!(
    /// An input symbol.
    Symbol
);

/// Name for a block formed from `members`, which must already be sorted.
pub fn block_name<S: AsRef<str>>(members: &[S]) -> String {
    members
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(BLOCK_SEPARATOR)
}

/// Returns `base`, primed until it is not in `taken`.
pub(crate) fn fresh_name(base: String, taken: &BTreeSet<String>) -> String {
    let mut name = base;
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// A deterministic finite state machine `(Q, Σ, δ, s)` with a partial
/// transition function.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fsm {
    states: Vec<StateId>,
    alphabet: Vec<Symbol>,
    /// Row-major `states.len() × alphabet.len()` transition table.
    delta: Vec<Option<usize>>,
    start: usize,
}

impl Fsm {
    /// Builds a machine from named parts, validating every invariant.
    pub fn new<S, A, T, P, Q, R>(states: S, alphabet: A, transitions: T, start: &str) -> Result<Fsm>
    where
        S: IntoIterator,
        S::Item: AsRef<str>,
        A: IntoIterator,
        A::Item: AsRef<str>,
        T: IntoIterator<Item = (P, Q, R)>,
        P: AsRef<str>,
        Q: AsRef<str>,
        R: AsRef<str>,
    {
        let states = states
            .into_iter()
            .map(|s| StateId::new(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let alphabet = alphabet
            .into_iter()
            .map(|s| Symbol::new(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let arcs = transitions
            .into_iter()
            .map(|(src, sym, dst)| {
                Ok((
                    StateId::new(src.as_ref())?,
                    Symbol::new(sym.as_ref())?,
                    StateId::new(dst.as_ref())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Fsm::assemble(states, alphabet, arcs, StateId::new(start)?)
    }

    /// Sorts and indexes named parts.
    pub(crate) fn assemble(
        mut states: Vec<StateId>,
        mut alphabet: Vec<Symbol>,
        arcs: Vec<(StateId, Symbol, StateId)>,
        start: StateId,
    ) -> Result<Fsm> {
        states.sort();
        if let Some(w) = states.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateState(w[0].to_string()));
        }
        alphabet.sort();
        if let Some(w) = alphabet.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateSymbol(w[0].to_string()));
        }
        let k = alphabet.len();
        let mut fsm = Fsm {
            delta: vec![None; states.len() * k],
            start: 0,
            states,
            alphabet,
        };
        fsm.start = fsm
            .index_of(start.as_str())
            .ok_or_else(|| Error::UnknownState(start.to_string()))?;
        for (src, sym, dst) in arcs {
            let u = fsm
                .index_of(src.as_str())
                .ok_or_else(|| Error::UnknownState(src.to_string()))?;
            let x = fsm
                .symbol_index(sym.as_str())
                .ok_or_else(|| Error::UnknownSymbol(sym.to_string()))?;
            let w = fsm
                .index_of(dst.as_str())
                .ok_or_else(|| Error::UnknownState(dst.to_string()))?;
            let slot = &mut fsm.delta[u * k + x];
            if slot.is_some() {
                return Err(Error::Nondeterministic {
                    state: src.to_string(),
                    symbol: sym.to_string(),
                });
            }
            *slot = Some(w);
        }
        Ok(fsm)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn state(&self, q: usize) -> &StateId {
        &self.states[q]
    }

    pub fn symbol(&self, x: usize) -> &Symbol {
        &self.alphabet[x]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn start_id(&self) -> &StateId {
        &self.states[self.start]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.states.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.alphabet
            .binary_search_by(|s| s.as_str().cmp(name))
            .ok()
    }

    /// `δ(q, x)`.
    #[inline]
    pub fn step(&self, q: usize, x: usize) -> Option<usize> {
        self.delta[q * self.alphabet.len() + x]
    }

    /// All arcs as `(source, symbol, target)` index triples, in state then
    /// symbol order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let k = self.alphabet.len();
        self.delta
            .iter()
            .enumerate()
            .filter_map(move |(i, t)| t.map(|w| (i / k.max(1), i % k.max(1), w)))
    }

    pub fn arc_count(&self) -> usize {
        self.delta.iter().filter(|t| t.is_some()).count()
    }

    pub fn all_states(&self) -> StateSet {
        (0..self.num_states()).collect()
    }

    /// Resolves state names to a [`StateSet`].
    pub fn set_of<I>(&self, names: I) -> Result<StateSet>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        names
            .into_iter()
            .map(|n| {
                self.index_of(n.as_ref())
                    .ok_or_else(|| Error::UnknownState(n.as_ref().to_string()))
            })
            .collect()
    }

    /// Sorted names of the states in `set`.
    pub fn names_of(&self, set: &StateSet) -> Vec<StateId> {
        set.iter().map(|&q| self.states[q].clone()).collect()
    }

    fn name_strings(&self, set: &StateSet) -> Vec<String> {
        set.iter().map(|&q| self.states[q].to_string()).collect()
    }

    /// Runs a word given as symbol indices. `None` is the undefined outcome.
    pub fn run(&self, word: &[usize]) -> Option<usize> {
        word.iter().try_fold(self.start, |q, &x| self.step(q, x))
    }

    /// The output function: the state reached on `word`, or `None` if some
    /// transition along the way is undefined.
    ///
    /// Symbols outside the alphabet are an error, not an undefined outcome.
    pub fn eval<S: AsRef<str>>(&self, word: &[S]) -> Result<Option<&StateId>> {
        let word = self.symbols_of(word)?;
        Ok(self.run(&word).map(|q| &self.states[q]))
    }

    pub fn symbols_of<S: AsRef<str>>(&self, word: &[S]) -> Result<Vec<usize>> {
        word.iter()
            .map(|s| {
                self.symbol_index(s.as_ref())
                    .ok_or_else(|| Error::UnknownSymbol(s.as_ref().to_string()))
            })
            .collect()
    }

    /// Breadth-first visit order from the start state, successors taken in
    /// symbol order. Contains only reachable states.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut order = Vec::with_capacity(self.num_states());
        let mut queue = VecDeque::from([self.start]);
        seen[self.start] = true;
        while let Some(q) = queue.pop_front() {
            order.push(q);
            for x in 0..self.num_symbols() {
                if let Some(w) = self.step(q, x) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        order
    }

    pub fn is_accessible(&self) -> bool {
        self.bfs_order().len() == self.num_states()
    }

    pub(crate) fn require_accessible(&self) -> Result<()> {
        let reached = self.bfs_order().len();
        if reached == self.num_states() {
            Ok(())
        } else {
            Err(Error::NotAccessible {
                unreachable: self.num_states() - reached,
            })
        }
    }

    /// A breadth-first visit order reversed, so the start state comes last.
    pub fn reverse_bfs_order(&self) -> Result<Vec<usize>> {
        let mut order = self.bfs_order();
        if order.len() != self.num_states() {
            return Err(Error::NotAccessible {
                unreachable: self.num_states() - order.len(),
            });
        }
        order.reverse();
        Ok(order)
    }

    /// The sub-machine induced on the states reachable from the start.
    pub fn accessible_part(&self) -> Fsm {
        let mut keep: Vec<usize> = self.bfs_order();
        if keep.len() == self.num_states() {
            return self.clone();
        }
        keep.sort_unstable();
        self.induced(&keep, self.start)
    }

    /// Induced sub-machine on `keep` (sorted indices), which contains `start`.
    fn induced(&self, keep: &[usize], start: usize) -> Fsm {
        let mut new_index = vec![usize::MAX; self.num_states()];
        for (i, &q) in keep.iter().enumerate() {
            new_index[q] = i;
        }
        let k = self.num_symbols();
        let mut delta = vec![None; keep.len() * k];
        for (i, &q) in keep.iter().enumerate() {
            for x in 0..k {
                if let Some(w) = self.step(q, x) {
                    if new_index[w] != usize::MAX {
                        delta[i * k + x] = Some(new_index[w]);
                    }
                }
            }
        }
        Fsm {
            states: keep.iter().map(|&q| self.states[q].clone()).collect(),
            alphabet: self.alphabet.clone(),
            delta,
            start: new_index[start],
        }
    }

    /// The quotient machine by a partition of the state set.
    ///
    /// Arcs between distinct members of one block vanish; a self-loop on a
    /// singleton block is kept. Singleton blocks keep their state's name and
    /// larger blocks are named after their sorted members. Fails with
    /// [`Error::QuotientUndefined`] when a block has arcs on one symbol into
    /// two different blocks.
    pub fn quotient(&self, partition: &[StateSet]) -> Result<Fsm> {
        Ok(self.quotient_named(partition)?.0)
    }

    fn quotient_named(&self, partition: &[StateSet]) -> Result<(Fsm, Vec<StateId>)> {
        let n = self.num_states();
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in partition.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::NotPartition("empty block".into()));
            }
            for &q in block {
                if q >= n {
                    return Err(Error::NotPartition(format!("state index {q} out of range")));
                }
                if block_of[q] != usize::MAX {
                    return Err(Error::NotDisjoint(self.states[q].to_string()));
                }
                block_of[q] = b;
            }
        }
        if let Some(q) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::NotPartition(format!(
                "state {:?} is in no block",
                self.states[q].as_str()
            )));
        }

        let mut taken: BTreeSet<String> = partition
            .iter()
            .filter(|b| b.len() == 1)
            .map(|b| self.states[*b.first().unwrap()].to_string())
            .collect();
        let mut names = Vec::with_capacity(partition.len());
        for block in partition {
            if block.len() == 1 {
                names.push(self.states[*block.first().unwrap()].clone());
            } else {
                let name = fresh_name(block_name(&self.name_strings(block)), &taken);
                taken.insert(name.clone());
                names.push(StateId(name));
            }
        }

        let mut arcs = Vec::new();
        for (b, block) in partition.iter().enumerate() {
            for x in 0..self.num_symbols() {
                let targets: BTreeSet<usize> = block
                    .iter()
                    .filter_map(|&q| self.step(q, x))
                    .map(|w| block_of[w])
                    .filter(|&t| block.len() == 1 || t != b)
                    .collect();
                match targets.len() {
                    0 => {}
                    1 => {
                        let t = *targets.first().unwrap();
                        arcs.push((names[b].clone(), self.alphabet[x].clone(), names[t].clone()));
                    }
                    _ => {
                        return Err(Error::QuotientUndefined {
                            block: names[b].to_string(),
                            symbol: self.alphabet[x].to_string(),
                            targets: targets.iter().map(|&t| names[t].to_string()).collect(),
                        })
                    }
                }
            }
        }
        let start = names[block_of[self.start]].clone();
        let fsm = Fsm::assemble(names.clone(), self.alphabet.clone(), arcs, start)?;
        Ok((fsm, names))
    }

    /// Contracts each of the pairwise disjoint `sets` to a single state.
    pub fn contract(&self, sets: &[StateSet]) -> Result<Fsm> {
        Ok(self.contract_named(sets)?.0)
    }

    /// As [`Fsm::contract`], also returning the name given to each set.
    pub fn contract_named(&self, sets: &[StateSet]) -> Result<(Fsm, Vec<StateId>)> {
        let mut covered = vec![false; self.num_states()];
        for set in sets {
            if set.is_empty() {
                return Err(Error::EmptySet);
            }
            for &q in set {
                if q >= self.num_states() {
                    return Err(Error::NotPartition(format!("state index {q} out of range")));
                }
                if covered[q] {
                    return Err(Error::NotDisjoint(self.states[q].to_string()));
                }
                covered[q] = true;
            }
        }
        let mut partition: Vec<StateSet> = sets.to_vec();
        partition.extend(
            (0..self.num_states())
                .filter(|&q| !covered[q])
                .map(|q| StateSet::from([q])),
        );
        let (fsm, names) = self.quotient_named(&partition)?;
        Ok((fsm, names[..sets.len()].to_vec()))
    }

    /// The machine induced on `set`.
    ///
    /// The start is the global start if it lies in `set`, otherwise a member
    /// receiving the most arcs from outside `set` (smallest name on ties).
    pub fn restrict(&self, set: &StateSet) -> Result<Fsm> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(&q) = set.iter().find(|&&q| q >= self.num_states()) {
            return Err(Error::UnknownState(format!("#{q}")));
        }
        let start = if set.contains(&self.start) {
            self.start
        } else {
            let mut incoming: BTreeMap<usize, usize> = set.iter().map(|&q| (q, 0)).collect();
            for (u, _, w) in self.arcs() {
                if !set.contains(&u) {
                    if let Some(c) = incoming.get_mut(&w) {
                        *c += 1;
                    }
                }
            }
            // max_by_key keeps the last maximum; iterate in reverse so the
            // smallest index wins ties.
            *incoming
                .iter()
                .rev()
                .max_by_key(|(_, &c)| c)
                .map(|(q, _)| q)
                .unwrap()
        };
        let keep: Vec<usize> = set.iter().copied().collect();
        Ok(self.induced(&keep, start))
    }

    /// The expansion of `nested` at state `host` of `self`.
    pub fn expand(&self, host: usize, nested: &Fsm) -> Result<Fsm> {
        if host >= self.num_states() {
            return Err(Error::UnknownState(format!("#{host}")));
        }
        for s in nested.states() {
            if let Some(q) = self.index_of(s.as_str()) {
                if q != host {
                    return Err(Error::NameCollision(s.to_string()));
                }
            }
        }
        let mut alphabet: Vec<Symbol> = self.alphabet.clone();
        alphabet.extend(nested.alphabet.iter().cloned());
        alphabet.sort();
        alphabet.dedup();

        let nested_start = nested.start_id().clone();
        let outer = |q: usize, a: &Symbol| -> Option<StateId> {
            let x = self.symbol_index(a.as_str())?;
            let w = self.step(q, x)?;
            Some(if w == host {
                nested_start.clone()
            } else {
                self.states[w].clone()
            })
        };

        let mut states = Vec::with_capacity(self.num_states() + nested.num_states() - 1);
        let mut arcs = Vec::new();
        for q in (0..self.num_states()).filter(|&q| q != host) {
            states.push(self.states[q].clone());
            for a in &alphabet {
                if let Some(w) = outer(q, a) {
                    arcs.push((self.states[q].clone(), a.clone(), w));
                }
            }
        }
        for q in 0..nested.num_states() {
            states.push(nested.states[q].clone());
            for a in &alphabet {
                let inner = nested
                    .symbol_index(a.as_str())
                    .and_then(|x| nested.step(q, x))
                    .map(|w| nested.states[w].clone());
                if let Some(w) = inner.or_else(|| outer(host, a)) {
                    arcs.push((nested.states[q].clone(), a.clone(), w));
                }
            }
        }
        let start = if host == self.start {
            nested_start
        } else {
            self.start_id().clone()
        };
        Fsm::assemble(states, alphabet, arcs, start)
    }

    /// Equivalence of output functions: equality of accessible parts.
    pub fn equivalent(&self, other: &Fsm) -> bool {
        self.accessible_part() == other.accessible_part()
    }

    /// Renames every state.
    pub fn rename_states(&self, rename: impl Fn(&StateId) -> StateId) -> Result<Fsm> {
        let states = self.states.iter().map(&rename).collect::<Vec<_>>();
        let arcs = self
            .arcs()
            .map(|(u, x, w)| {
                (
                    states[u].clone(),
                    self.alphabet[x].clone(),
                    states[w].clone(),
                )
            })
            .collect();
        let start = states[self.start].clone();
        Fsm::assemble(states, self.alphabet.clone(), arcs, start)
    }

    /// Same machine over a larger alphabet.
    pub(crate) fn with_alphabet(&self, alphabet: &[Symbol]) -> Result<Fsm> {
        let arcs = self
            .arcs()
            .map(|(u, x, w)| {
                (
                    self.states[u].clone(),
                    self.alphabet[x].clone(),
                    self.states[w].clone(),
                )
            })
            .collect();
        Fsm::assemble(
            self.states.clone(),
            alphabet.to_vec(),
            arcs,
            self.start_id().clone(),
        )
    }
}

impl fmt::Display for Fsm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "start {}", self.start_id())?;
        for (u, x, w) in self.arcs() {
            write!(
                f,
                "; {} -{}-> {}",
                self.states[u], self.alphabet[x], self.states[w]
            )?;
        }
        Ok(())
    }
}
