//! Hierarchical machines: named FSMs nested inside states of others.
//!
//! Execution always rests in a state that hosts nothing. Entering a host
//! state enters the nested machine at its start; a state without an arc on
//! the next symbol defers to the machine its own machine is nested in.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::fsm::{Fsm, StateId, Symbol};
use crate::modules::is_thin_module;

/// `child` is nested at `state`, a state of `parent`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NestingArc {
    pub parent: String,
    pub state: StateId,
    pub child: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hfsm {
    alphabet: Vec<Symbol>,
    machines: BTreeMap<String, Fsm>,
    root: String,
    nesting: Vec<NestingArc>,
    owner: HashMap<StateId, String>,
    hosted: HashMap<StateId, String>,
    parent: HashMap<String, (String, StateId)>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::InvalidHfsm {
        path: path.into(),
        message: message.into(),
    }
}

/// Name-insensitive shape: the root machine and what is nested where.
type Shape = (Fsm, BTreeSet<(StateId, Fsm)>);

impl Hfsm {
    /// Builds an HFSM over the union of the machines' alphabets.
    pub fn new<I, P, S, C>(machines: Vec<(String, Fsm)>, root: &str, nesting: I) -> Result<Hfsm>
    where
        I: IntoIterator<Item = (P, S, C)>,
        P: AsRef<str>,
        S: AsRef<str>,
        C: AsRef<str>,
    {
        let mut alphabet: Vec<Symbol> = machines
            .iter()
            .flat_map(|(_, m)| m.alphabet().iter().cloned())
            .collect();
        alphabet.sort();
        alphabet.dedup();
        let nesting = nesting
            .into_iter()
            .enumerate()
            .map(|(i, (p, s, c))| {
                Ok(NestingArc {
                    parent: p.as_ref().to_string(),
                    state: StateId::new(s.as_ref())
                        .map_err(|e| invalid(format!("nesting[{i}].state"), e.to_string()))?,
                    child: c.as_ref().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Hfsm::with_alphabet(alphabet, machines, root, nesting)
    }

    /// Builds an HFSM over `alphabet`, which must contain every machine's
    /// symbols.
    pub fn with_alphabet(
        alphabet: Vec<Symbol>,
        machines: Vec<(String, Fsm)>,
        root: &str,
        nesting: Vec<NestingArc>,
    ) -> Result<Hfsm> {
        let mut sorted = alphabet.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(
                "alphabet",
                format!("duplicate symbol {:?}", w[0].as_str()),
            ));
        }
        let alphabet = sorted;

        let mut by_name = BTreeMap::new();
        let mut owner = HashMap::new();
        for (i, (name, fsm)) in machines.into_iter().enumerate() {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(invalid(
                    format!("machines[{i}].name"),
                    format!("invalid machine name {name:?}"),
                ));
            }
            if let Some(x) = fsm
                .alphabet()
                .iter()
                .find(|x| alphabet.binary_search(x).is_err())
            {
                return Err(invalid(
                    format!("machines[{i}].transitions"),
                    format!("symbol {:?} not in alphabet", x.as_str()),
                ));
            }
            for s in fsm.states() {
                if let Some(other) = owner.insert(s.clone(), name.clone()) {
                    return Err(invalid(
                        format!("machines[{i}].states"),
                        format!("state {:?} also belongs to machine {other:?}", s.as_str()),
                    ));
                }
            }
            let fsm = if fsm.alphabet() == alphabet.as_slice() {
                fsm
            } else {
                fsm.with_alphabet(&alphabet)?
            };
            if by_name.insert(name.clone(), fsm).is_some() {
                return Err(invalid(
                    format!("machines[{i}].name"),
                    format!("duplicate machine {name:?}"),
                ));
            }
        }
        if !by_name.contains_key(root) {
            return Err(invalid("root", format!("unknown machine {root:?}")));
        }

        let mut hosted = HashMap::new();
        let mut parent = HashMap::new();
        for (i, arc) in nesting.iter().enumerate() {
            let Some(pm) = by_name.get(&arc.parent) else {
                return Err(invalid(
                    format!("nesting[{i}].parent"),
                    format!("unknown machine {:?}", arc.parent),
                ));
            };
            if !by_name.contains_key(&arc.child) {
                return Err(invalid(
                    format!("nesting[{i}].child"),
                    format!("unknown machine {:?}", arc.child),
                ));
            }
            if pm.index_of(arc.state.as_str()).is_none() {
                return Err(invalid(
                    format!("nesting[{i}].state"),
                    format!(
                        "state {:?} is not in machine {:?}",
                        arc.state.as_str(),
                        arc.parent
                    ),
                ));
            }
            if arc.child == root {
                return Err(invalid(
                    format!("nesting[{i}].child"),
                    "the root cannot be nested",
                ));
            }
            if hosted
                .insert(arc.state.clone(), arc.child.clone())
                .is_some()
            {
                return Err(invalid(
                    format!("nesting[{i}].state"),
                    format!("state {:?} already hosts a machine", arc.state.as_str()),
                ));
            }
            if parent
                .insert(arc.child.clone(), (arc.parent.clone(), arc.state.clone()))
                .is_some()
            {
                return Err(invalid(
                    format!("nesting[{i}].child"),
                    format!("machine {:?} is nested twice", arc.child),
                ));
            }
        }
        // Every machine must reach the root through its parents.
        for name in by_name.keys() {
            let mut seen = HashSet::new();
            let mut at = name.as_str();
            while at != root {
                if !seen.insert(at) {
                    return Err(invalid(
                        "nesting",
                        format!("machine {at:?} is on a nesting cycle"),
                    ));
                }
                match parent.get(at) {
                    Some((p, _)) => at = p,
                    None => {
                        return Err(invalid(
                            "nesting",
                            format!("machine {name:?} is not nested under the root"),
                        ))
                    }
                }
            }
        }
        let mut nesting = nesting;
        nesting.sort();
        Ok(Hfsm {
            alphabet,
            machines: by_name,
            root: root.to_string(),
            nesting,
            owner,
            hosted,
            parent,
        })
    }

    /// A single machine with nothing nested.
    pub fn flat(name: &str, fsm: Fsm) -> Result<Hfsm> {
        Hfsm::new(
            vec![(name.to_string(), fsm)],
            name,
            Vec::<(&str, &str, &str)>::new(),
        )
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    /// Number of machines.
    pub fn order(&self) -> usize {
        self.machines.len()
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn is_flat(&self) -> bool {
        self.machines.len() == 1
    }

    pub fn machine(&self, name: &str) -> Result<&Fsm> {
        self.machines
            .get(name)
            .ok_or_else(|| Error::UnknownMachine(name.to_string()))
    }

    /// Machines by name.
    pub fn machines(&self) -> impl Iterator<Item = (&str, &Fsm)> {
        self.machines.iter().map(|(n, m)| (n.as_str(), m))
    }

    /// Nesting arcs, sorted.
    pub fn nesting(&self) -> &[NestingArc] {
        &self.nesting
    }

    /// Machine owning `state`.
    pub fn owner(&self, state: &str) -> Option<&str> {
        self.owner.get(state).map(String::as_str)
    }

    /// Machine nested at `state`.
    pub fn hosted_at(&self, state: &str) -> Option<&str> {
        self.hosted.get(state).map(String::as_str)
    }

    /// Parent machine and host state of `machine`; `None` for the root.
    pub fn parent_of(&self, machine: &str) -> Option<(&str, &StateId)> {
        self.parent.get(machine).map(|(p, s)| (p.as_str(), s))
    }

    pub fn children_of(&self, machine: &str) -> Vec<&str> {
        self.nesting
            .iter()
            .filter(|a| a.parent == machine)
            .map(|a| a.child.as_str())
            .collect()
    }

    pub fn depth(&self, machine: &str) -> usize {
        let mut d = 0;
        let mut at = machine;
        while let Some((p, _)) = self.parent_of(at) {
            d += 1;
            at = p;
        }
        d
    }

    /// Machines with nothing nested in them, by name.
    pub fn leaves(&self) -> Vec<&str> {
        self.machines
            .keys()
            .filter(|m| self.children_of(m).is_empty())
            .map(String::as_str)
            .collect()
    }

    /// Machines in the subtree of `machine`, itself included.
    pub fn subtree<'a>(&'a self, machine: &'a str) -> Vec<&'a str> {
        let mut out = vec![];
        let mut stack = vec![machine];
        while let Some(m) = stack.pop() {
            out.push(m);
            stack.extend(self.children_of(m));
        }
        out.sort_unstable();
        out
    }

    /// States of the subtree of `machine` that host nothing, i.e. the states
    /// the subtree turns into when flattened.
    pub fn flattened_states(&self, machine: &str) -> Vec<StateId> {
        let mut out: Vec<StateId> = self
            .subtree(machine)
            .into_iter()
            .flat_map(|m| self.machines[m].states().iter())
            .filter(|s| !self.hosted.contains_key(*s))
            .cloned()
            .collect();
        out.sort();
        out
    }

    /// Where execution rests on entering `machine`.
    pub fn nested_start(&self, machine: &str) -> Result<StateId> {
        let mut s = self.machine(machine)?.start_id();
        while let Some(child) = self.hosted.get(s) {
            s = self.machines[child].start_id();
        }
        Ok(s.clone())
    }

    fn enter(&self, state: &StateId) -> StateId {
        match self.hosted.get(state) {
            Some(child) => self.nested_start(child).unwrap(),
            None => state.clone(),
        }
    }

    /// The hierarchical transition from `q` on `x`.
    pub fn step(&self, q: &str, x: &str) -> Result<Option<StateId>> {
        let xi = self
            .alphabet
            .binary_search_by(|s| s.as_str().cmp(x))
            .map_err(|_| Error::UnknownSymbol(x.to_string()))?;
        let mut machine = self
            .owner(q)
            .ok_or_else(|| Error::UnknownState(q.to_string()))?;
        let mut at = q.to_string();
        loop {
            let fsm = &self.machines[machine];
            // Machines share the HFSM alphabet, so symbol indices agree.
            let here = fsm.index_of(&at).unwrap();
            if let Some(w) = fsm.step(here, xi) {
                return Ok(Some(self.enter(fsm.state(w))));
            }
            match self.parent.get(machine) {
                Some((p, host)) => {
                    machine = p;
                    at = host.to_string();
                }
                None => return Ok(None),
            }
        }
    }

    /// The output function: the state reached on `word` from the nested start
    /// of the root.
    pub fn eval<S: AsRef<str>>(&self, word: &[S]) -> Result<Option<StateId>> {
        let mut q = self.nested_start(&self.root)?;
        for x in word {
            match self.step(q.as_str(), x.as_ref())? {
                Some(w) => q = w,
                None => {
                    // Keep validating the rest of the word.
                    for y in word {
                        if self
                            .alphabet
                            .binary_search_by(|s| s.as_str().cmp(y.as_ref()))
                            .is_err()
                        {
                            return Err(Error::UnknownSymbol(y.as_ref().to_string()));
                        }
                    }
                    return Ok(None);
                }
            }
        }
        Ok(Some(q))
    }

    /// Expands `machine` into its host state. Machines nested in `machine`
    /// move up into the parent, which keeps its name.
    pub fn expand_one(&self, machine: &str) -> Result<Hfsm> {
        self.machine(machine)?;
        let Some((parent, host)) = self.parent_of(machine) else {
            return Err(Error::RootExpansion(machine.to_string()));
        };
        let w = &self.machines[parent];
        let expanded = w.expand(w.index_of(host.as_str()).unwrap(), &self.machines[machine])?;
        let mut machines = self.machines.clone();
        machines.remove(machine);
        machines.insert(parent.to_string(), expanded);
        let nesting = self
            .nesting
            .iter()
            .filter(|a| a.child != machine)
            .map(|a| {
                let mut a = a.clone();
                if a.parent == machine {
                    a.parent = parent.to_string();
                }
                a
            })
            .collect();
        Hfsm::with_alphabet(
            self.alphabet.clone(),
            machines.into_iter().collect(),
            &self.root,
            nesting,
        )
    }

    /// The flat machine with the same behaviour.
    pub fn flatten(&self) -> Fsm {
        let mut z = self.clone();
        while !z.is_flat() {
            let leaf = z
                .leaves()
                .into_iter()
                .filter(|m| *m != z.root)
                .max_by(|a, b| z.depth(a).cmp(&z.depth(b)).then_with(|| b.cmp(a)))
                .unwrap()
                .to_string();
            z = z.expand_one(&leaf).expect("leaf expansion of a valid HFSM");
        }
        z.machines.remove(&z.root).unwrap()
    }

    /// Same output function: the flattenings have equal accessible parts.
    pub fn equivalent(&self, other: &Hfsm) -> bool {
        self.flatten().equivalent(&other.flatten())
    }

    /// Whether each machine's subtree flattens onto a thin module of the
    /// flattening.
    pub fn is_thin(&self) -> bool {
        self.first_non_thin().is_none()
    }

    /// A machine whose subtree is not a thin module of the flattening.
    pub fn first_non_thin(&self) -> Option<&str> {
        let flat = self.flatten();
        self.machines.keys().map(String::as_str).find(|m| {
            let states = self.flattened_states(m);
            match flat.set_of(&states) {
                Ok(set) => !set.is_empty() && !is_thin_module(&flat, &set),
                Err(_) => true,
            }
        })
    }

    fn shape(&self) -> Shape {
        let nested = self
            .nesting
            .iter()
            .map(|a| (a.state.clone(), self.machines[&a.child].clone()))
            .collect();
        (self.machines[&self.root].clone(), nested)
    }

    /// Whether `other` arises from `self` by expanding one or more nested
    /// machines, in any order. Machine names are ignored.
    pub fn refines(&self, other: &Hfsm) -> bool {
        if self.order() <= other.order() {
            return false;
        }
        let target = other.shape();
        let steps = self.order() - other.order();
        let mut frontier = vec![self.clone()];
        for _ in 0..steps {
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for z in &frontier {
                for m in z.machines.keys().filter(|m| **m != z.root) {
                    let e = z.expand_one(m).expect("expansion of a valid HFSM");
                    if seen.insert(e.shape()) {
                        next.push(e);
                    }
                }
            }
            frontier = next;
        }
        frontier.iter().any(|z| z.shape() == target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{flat_h1, h1, path};

    fn chain() -> Hfsm {
        // R: r0 -x-> r1 with M nested at r1, M: m0 -x-> m1 with L at m1.
        let r = Fsm::new(["r0", "r1"], ["x"], [("r0", "x", "r1")], "r0").unwrap();
        let m = Fsm::new(["m0", "m1"], ["x"], [("m0", "x", "m1")], "m0").unwrap();
        let l = Fsm::new(["l0", "l1"], ["x"], [("l0", "x", "l1")], "l0").unwrap();
        Hfsm::new(
            vec![("R".into(), r), ("M".into(), m), ("L".into(), l)],
            "R",
            [("R", "r1", "M"), ("M", "m1", "L")],
        )
        .unwrap()
    }

    #[test]
    fn nested_start_examples() {
        let h = h1();
        assert_eq!(h.nested_start("R").unwrap().as_str(), "a");
        assert_eq!(h.nested_start("N").unwrap().as_str(), "a");
        let flat = Hfsm::flat("P", path(4)).unwrap();
        assert_eq!(flat.nested_start("P").unwrap().as_str(), "1");
    }

    #[test]
    fn step_examples() {
        let h = h1();
        assert_eq!(h.step("a", "x").unwrap().unwrap().as_str(), "b");
        assert_eq!(h.step("a", "y").unwrap().unwrap().as_str(), "c");
        assert_eq!(h.step("b", "x").unwrap(), None);
        assert_eq!(h.step("q", "x"), Err(Error::UnknownState("q".into())));
        assert_eq!(h.step("a", "z"), Err(Error::UnknownSymbol("z".into())));
    }

    #[test]
    fn eval_examples() {
        let h = h1();
        assert_eq!(h.eval::<&str>(&[]).unwrap().unwrap().as_str(), "a");
        assert_eq!(h.eval(&["x", "y"]).unwrap().unwrap().as_str(), "c");
        assert_eq!(h.eval(&["y", "x"]).unwrap(), None);
        assert_eq!(
            h.eval(&["y", "x", "q"]),
            Err(Error::UnknownSymbol("q".into()))
        );
    }

    #[test]
    fn expand_examples() {
        let h = h1();
        let e = h.expand_one("N").unwrap();
        assert!(e.is_flat());
        assert_eq!(e.machine("R").unwrap(), &flat_h1());

        let c = chain();
        let e = c.expand_one("L").unwrap();
        assert_eq!(e.order(), 2);
        assert!(e.equivalent(&c));
        // Expanding a middle machine re-parents its children.
        let e = c.expand_one("M").unwrap();
        assert_eq!(e.parent_of("L").unwrap().0, "R");
        assert!(e.equivalent(&c));

        assert_eq!(h.expand_one("R"), Err(Error::RootExpansion("R".into())));
        let flat = Hfsm::flat("P", path(4)).unwrap();
        assert!(matches!(flat.expand_one("P"), Err(Error::RootExpansion(_))));
    }

    #[test]
    fn flatten_examples() {
        assert_eq!(h1().flatten(), flat_h1());
        assert_eq!(Hfsm::flat("P", path(4)).unwrap().flatten(), path(4));
        let c = chain();
        let f = c.flatten();
        assert_eq!(f.num_states(), 4);
        assert_eq!(f.eval(&["x", "x", "x"]).unwrap().unwrap().as_str(), "l1");
    }

    #[test]
    fn flatten_is_order_independent() {
        let c = chain();
        let a = c.expand_one("L").unwrap().expand_one("M").unwrap();
        let b = c.expand_one("M").unwrap().expand_one("L").unwrap();
        assert_eq!(a.flatten(), b.flatten());
    }

    #[test]
    fn equivalence_examples() {
        let h = h1();
        let flat = Hfsm::flat("F", flat_h1()).unwrap();
        assert!(h.equivalent(&flat));
        assert!(h.equivalent(&h));
        assert!(!h.equivalent(&Hfsm::flat("P", path(4)).unwrap()));
    }

    #[test]
    fn thinness_examples() {
        assert!(h1().is_thin());
        assert!(Hfsm::flat("P", path(4)).unwrap().is_thin());
        // Nesting always yields a module; here N holds an x-cycle and r
        // inherits the x-arc of its host, so the module is not thin.
        let root = Fsm::new(["A", "e"], ["x", "y"], [("A", "x", "e")], "A").unwrap();
        let inner = Fsm::new(
            ["p", "q", "r"],
            ["x", "y"],
            [("p", "x", "q"), ("q", "x", "p"), ("p", "y", "r")],
            "p",
        )
        .unwrap();
        let z = Hfsm::new(
            vec![("R".into(), root), ("N".into(), inner)],
            "R",
            [("R", "A", "N")],
        )
        .unwrap();
        assert!(!z.is_thin());
        assert_eq!(z.first_non_thin(), Some("N"));
    }

    #[test]
    fn refinement_examples() {
        let h = h1();
        let flat = Hfsm::flat("F", flat_h1()).unwrap();
        assert!(h.refines(&flat));
        assert!(!flat.refines(&h));
        assert!(!h.refines(&h));
        let c = chain();
        assert!(c.refines(&c.expand_one("M").unwrap()));
        assert!(c.refines(&Hfsm::flat("X", c.flatten()).unwrap()));
    }

    #[test]
    fn validation_errors_carry_paths() {
        let a = Fsm::new(["s"], ["x"], Vec::<(&str, &str, &str)>::new(), "s").unwrap();
        let b = Fsm::new(["s"], ["x"], Vec::<(&str, &str, &str)>::new(), "s").unwrap();
        let err = Hfsm::new(
            vec![("A".into(), a.clone()), ("B".into(), b)],
            "A",
            [("A", "s", "B")],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidHfsm { ref path, .. } if path == "machines[1].states"));
        let c = Fsm::new(["t"], ["x"], Vec::<(&str, &str, &str)>::new(), "t").unwrap();
        let err = Hfsm::new(
            vec![("A".into(), a.clone()), ("C".into(), c.clone())],
            "A",
            [("A", "q", "C")],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidHfsm { ref path, .. } if path == "nesting[0].state"));
        let err = Hfsm::new(
            vec![("A".into(), a), ("C".into(), c)],
            "A",
            Vec::<(&str, &str, &str)>::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidHfsm { ref path, .. } if path == "nesting"));
    }
}
