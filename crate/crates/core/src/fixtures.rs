//! Small named machines used in examples, tests and `verify`.

use crate::fsm::Fsm;
use crate::hfsm::Hfsm;

const NO_ARCS: [(&str, &str, &str); 0] = [];

/// One state, no arcs.
pub fn s1() -> Fsm {
    Fsm::new(["1"], ["x"], NO_ARCS, "1").unwrap()
}

/// The x-path `1 → 2 → … → n` starting at 1.
pub fn path(n: usize) -> Fsm {
    assert!(n >= 1);
    let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let arcs: Vec<(String, &str, String)> = (1..n)
        .map(|i| (i.to_string(), "x", (i + 1).to_string()))
        .collect();
    Fsm::new(&names, ["x"], arcs, "1").unwrap()
}

/// The a-cycle `1 → 2 → … → n → 1` starting at 1.
pub fn cycle(n: usize) -> Fsm {
    assert!(n >= 1);
    let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let arcs: Vec<(String, &str, String)> = (1..=n)
        .map(|i| (i.to_string(), "a", (i % n + 1).to_string()))
        .collect();
    Fsm::new(&names, ["a"], arcs, "1").unwrap()
}

/// The a-cycle `1 → 2 → 3 → 1` starting at 1.
pub fn cycle3() -> Fsm {
    cycle(3)
}

/// Root `R` (`A -y-> c`) with `N` (`a -x-> b`) nested at `A`.
pub fn h1() -> Hfsm {
    let root = Fsm::new(["A", "c"], ["x", "y"], [("A", "y", "c")], "A").unwrap();
    let nested = Fsm::new(["a", "b"], ["x", "y"], [("a", "x", "b")], "a").unwrap();
    Hfsm::new(
        vec![("R".to_string(), root), ("N".to_string(), nested)],
        "R",
        [("R", "A", "N")],
    )
    .unwrap()
}

/// The flattening of [`h1`].
pub fn flat_h1() -> Fsm {
    Fsm::new(
        ["a", "b", "c"],
        ["x", "y"],
        [("a", "x", "b"), ("a", "y", "c"), ("b", "y", "c")],
        "a",
    )
    .unwrap()
}

/// A machine whose only non-trivial modules are `{1,2,3}` and `{2,3,4}`.
///
/// Neither is thin (both contain an x-cycle and have an x-exit), and
/// neither their union nor their intersection is a module. Four states are
/// not enough for this: the union `{1,2,3,4}` would be the whole state set,
/// which is always a module.
pub fn overlapping_non_thin() -> Fsm {
    Fsm::new(
        ["1", "2", "3", "4", "5"],
        ["x", "y"],
        [
            ("1", "x", "2"),
            ("2", "x", "1"),
            ("3", "x", "4"),
            ("4", "x", "4"),
            ("1", "y", "5"),
            ("2", "y", "3"),
            ("3", "y", "2"),
        ],
        "1",
    )
    .unwrap()
}

/// Two overlapping thin modules, `{1,2,4,5}` entered at 1 and `{2,3,4,5}`
/// entered at 2, whose intersection `{2,4,5}` is not a module: its a-arcs
/// leave for both 3 and 1.
pub fn split_exit() -> Fsm {
    Fsm::new(
        ["1", "2", "3", "4", "5"],
        ["a", "b"],
        [
            ("1", "a", "2"),
            ("2", "a", "3"),
            ("2", "b", "4"),
            ("3", "a", "1"),
            ("4", "a", "1"),
            ("4", "b", "5"),
            ("5", "a", "1"),
        ],
        "1",
    )
    .unwrap()
}
