//! JSON form of hierarchical machines.
//!
//! ```json
//! { "alphabet": ["x", "y"],
//!   "root": "R",
//!   "machines": [ {"name": "R", "states": ["A", "c"], "start": "A",
//!                  "transitions": [["A", "y", "c"]]} ],
//!   "nesting": [ {"parent": "R", "state": "A", "child": "N"} ] }
//! ```

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsm::{Fsm, StateId, Symbol};
use crate::hfsm::{Hfsm, NestingArc};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HfsmDoc {
    alphabet: Vec<String>,
    root: String,
    machines: Vec<MachineDoc>,
    #[serde(default)]
    nesting: Vec<NestingDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineDoc {
    name: String,
    states: Vec<String>,
    start: String,
    #[serde(default)]
    transitions: Vec<(String, String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NestingDoc {
    parent: String,
    state: String,
    child: String,
}

fn invalid(path: String, message: impl Into<String>) -> Error {
    Error::InvalidHfsm {
        path,
        message: message.into(),
    }
}

/// Parses and validates an HFSM document.
pub fn parse_hfsm(text: &str) -> Result<Hfsm> {
    let doc: HfsmDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let alphabet = doc
        .alphabet
        .iter()
        .enumerate()
        .map(|(i, x)| {
            Symbol::new(x.as_str()).map_err(|e| invalid(format!("alphabet[{i}]"), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma: HashSet<&str> = doc.alphabet.iter().map(String::as_str).collect();

    let mut machines = Vec::with_capacity(doc.machines.len());
    for (i, m) in doc.machines.iter().enumerate() {
        let states = m
            .states
            .iter()
            .enumerate()
            .map(|(j, s)| {
                StateId::new(s.as_str())
                    .map_err(|e| invalid(format!("machines[{i}].states[{j}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut names = HashSet::new();
        for (j, s) in m.states.iter().enumerate() {
            if !names.insert(s.as_str()) {
                return Err(invalid(
                    format!("machines[{i}].states[{j}]"),
                    format!("duplicate state {s:?}"),
                ));
            }
        }
        if !names.contains(m.start.as_str()) {
            return Err(invalid(
                format!("machines[{i}].start"),
                format!("unknown state {:?}", m.start),
            ));
        }
        let mut slots = HashSet::new();
        let mut arcs = Vec::with_capacity(m.transitions.len());
        for (j, (s, x, d)) in m.transitions.iter().enumerate() {
            let path = format!("machines[{i}].transitions[{j}]");
            for q in [s, d] {
                if !names.contains(q.as_str()) {
                    return Err(invalid(path, format!("unknown state {q:?}")));
                }
            }
            if !sigma.contains(x.as_str()) {
                return Err(invalid(path, format!("unknown symbol {x:?}")));
            }
            if !slots.insert((s.as_str(), x.as_str())) {
                return Err(invalid(
                    path,
                    format!("state {s:?} already has a {x:?}-arc"),
                ));
            }
            arcs.push((
                StateId::new(s.as_str()).unwrap(),
                Symbol::new(x.as_str()).unwrap(),
                StateId::new(d.as_str()).unwrap(),
            ));
        }
        let fsm = Fsm::assemble(
            states,
            alphabet.clone(),
            arcs,
            StateId::new(m.start.as_str()).unwrap(),
        )
        .map_err(|e| invalid(format!("machines[{i}]"), e.to_string()))?;
        machines.push((m.name.clone(), fsm));
    }
    let nesting = doc
        .nesting
        .iter()
        .enumerate()
        .map(|(i, a)| {
            Ok(NestingArc {
                parent: a.parent.clone(),
                state: StateId::new(a.state.as_str())
                    .map_err(|e| invalid(format!("nesting[{i}].state"), e.to_string()))?,
                child: a.child.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Hfsm::with_alphabet(alphabet, machines, &doc.root, nesting)
}

/// Serialises an HFSM with the root first, then machines by name.
pub fn write_hfsm(z: &Hfsm) -> String {
    let mut machines: Vec<MachineDoc> = z
        .machines()
        .map(|(name, m)| MachineDoc {
            name: name.to_string(),
            states: m.states().iter().map(|s| s.to_string()).collect(),
            start: m.start_id().to_string(),
            transitions: m
                .arcs()
                .map(|(u, x, w)| {
                    (
                        m.state(u).to_string(),
                        m.symbol(x).to_string(),
                        m.state(w).to_string(),
                    )
                })
                .collect(),
        })
        .collect();
    machines.sort_by_key(|m| (m.name != z.root(), m.name.clone()));
    let doc = HfsmDoc {
        alphabet: z.alphabet().iter().map(|s| s.to_string()).collect(),
        root: z.root().to_string(),
        machines,
        nesting: z
            .nesting()
            .iter()
            .map(|a| NestingDoc {
                parent: a.parent.clone(),
                state: a.state.to_string(),
                child: a.child.clone(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("documents serialise");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::h1;

    const H1: &str = r#"{ "alphabet": ["x","y"],
  "root": "R",
  "machines": [ {"name":"R","states":["A","c"],"start":"A",
                 "transitions":[["A","y","c"]]},
                {"name":"N","states":["a","b"],"start":"a",
                 "transitions":[["a","x","b"]]} ],
  "nesting": [ {"parent":"R","state":"A","child":"N"} ] }"#;

    #[test]
    fn parses_example() {
        assert_eq!(parse_hfsm(H1).unwrap(), h1());
    }

    #[test]
    fn round_trip() {
        let text = write_hfsm(&h1());
        let back = parse_hfsm(&text).unwrap();
        assert_eq!(back, h1());
        assert_eq!(write_hfsm(&back), text);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = H1.replace(r#"["a","x","b"]"#, r#"["a","z","b"]"#);
        assert!(
            matches!(parse_hfsm(&bad), Err(Error::InvalidHfsm { path, .. }) if path == "machines[1].transitions[0]")
        );
        let bad = H1.replace(r#""state":"A""#, r#""state":"a""#);
        assert!(
            matches!(parse_hfsm(&bad), Err(Error::InvalidHfsm { path, .. }) if path == "nesting[0].state")
        );
        let bad = H1.replace(r#""root": "R""#, r#""root": "Q""#);
        assert!(matches!(parse_hfsm(&bad), Err(Error::InvalidHfsm { path, .. }) if path == "root"));
        let bad = H1.replace(r#""states":["a","b"]"#, r#""states":["a","c"]"#);
        assert!(matches!(parse_hfsm(&bad), Err(Error::InvalidHfsm { .. })));
        assert!(matches!(
            parse_hfsm("{ nope"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
