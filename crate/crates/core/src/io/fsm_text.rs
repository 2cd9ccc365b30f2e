//! Line-oriented FSM format.
//!
//! ```text
//! fsm p2
//! alphabet x
//! states 1 2
//! start 1
//! trans 1 x 2
//! ```
//!
//! `#` starts a comment. `alphabet` and `states` may repeat and accumulate.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::fsm::{Fsm, StateId, Symbol};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses one machine, returning its name (default `Z`) and the machine.
pub fn parse_fsm(text: &str) -> Result<(String, Fsm)> {
    let mut name: Option<String> = None;
    let mut alphabet: Vec<(usize, String)> = Vec::new();
    let mut states: Vec<(usize, String)> = Vec::new();
    let mut start: Option<(usize, String)> = None;
    let mut trans: Vec<(usize, [String; 3])> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(directive) = tokens.next() else {
            continue;
        };
        let args: Vec<String> = tokens.map(str::to_string).collect();
        match directive {
            "fsm" => {
                if name.is_some() {
                    return Err(parse_error(line, "second fsm directive"));
                }
                match args.as_slice() {
                    [n] => name = Some(n.clone()),
                    _ => return Err(parse_error(line, "expected: fsm <name>")),
                }
            }
            "alphabet" => alphabet.extend(args.into_iter().map(|a| (line, a))),
            "states" => states.extend(args.into_iter().map(|a| (line, a))),
            "start" => {
                if start.is_some() {
                    return Err(parse_error(line, "second start directive"));
                }
                match args.as_slice() {
                    [s] => start = Some((line, s.clone())),
                    _ => return Err(parse_error(line, "expected: start <state>")),
                }
            }
            "trans" => match <[String; 3]>::try_from(args) {
                Ok(t) => trans.push((line, t)),
                Err(_) => return Err(parse_error(line, "expected: trans <src> <sym> <dst>")),
            },
            other => return Err(parse_error(line, format!("unknown directive {other:?}"))),
        }
    }

    let mut seen = HashSet::new();
    for (line, s) in &states {
        if !seen.insert(s.as_str()) {
            return Err(parse_error(*line, format!("duplicate state {s:?}")));
        }
    }
    let mut seen_sym = HashSet::new();
    for (line, x) in &alphabet {
        if !seen_sym.insert(x.as_str()) {
            return Err(parse_error(*line, format!("duplicate symbol {x:?}")));
        }
    }
    let Some((start_line, start)) = start else {
        return Err(parse_error(
            text.lines().count().max(1),
            "missing start directive",
        ));
    };
    if !seen.contains(start.as_str()) {
        return Err(parse_error(start_line, format!("unknown state {start:?}")));
    }
    let mut slots: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (line, [src, sym, dst]) in &trans {
        for s in [src, dst] {
            if !seen.contains(s.as_str()) {
                return Err(parse_error(*line, format!("unknown state {s:?}")));
            }
        }
        if !seen_sym.contains(sym.as_str()) {
            return Err(parse_error(*line, format!("unknown symbol {sym:?}")));
        }
        if let Some(first) = slots.insert((src, sym), *line) {
            return Err(parse_error(
                *line,
                format!("state {src:?} already has a {sym:?}-arc (line {first})"),
            ));
        }
    }

    let to_parse = |line: usize| move |e: Error| parse_error(line, e.to_string());
    let states = states
        .iter()
        .map(|(l, s)| StateId::new(s.as_str()).map_err(to_parse(*l)))
        .collect::<Result<Vec<_>>>()?;
    let alphabet = alphabet
        .iter()
        .map(|(l, s)| Symbol::new(s.as_str()).map_err(to_parse(*l)))
        .collect::<Result<Vec<_>>>()?;
    let arcs = trans
        .iter()
        .map(|(_, [s, x, d])| {
            (
                StateId::new(s.as_str()).unwrap(),
                Symbol::new(x.as_str()).unwrap(),
                StateId::new(d.as_str()).unwrap(),
            )
        })
        .collect();
    let fsm = Fsm::assemble(states, alphabet, arcs, StateId::new(start).unwrap())
        .map_err(to_parse(start_line))?;
    Ok((name.unwrap_or_else(|| "Z".to_string()), fsm))
}

/// Serialises a machine; [`parse_fsm`] reads it back unchanged.
pub fn write_fsm(name: &str, z: &Fsm) -> String {
    let join = |items: &mut dyn Iterator<Item = &str>| items.collect::<Vec<_>>().join(" ");
    let mut out = format!("fsm {name}\n");
    if z.num_symbols() > 0 {
        out += &format!(
            "alphabet {}\n",
            join(&mut z.alphabet().iter().map(|s| s.as_str()))
        );
    }
    out += &format!(
        "states {}\n",
        join(&mut z.states().iter().map(|s| s.as_str()))
    );
    out += &format!("start {}\n", z.start_id());
    for (u, x, w) in z.arcs() {
        out += &format!("trans {} {} {}\n", z.state(u), z.symbol(x), z.state(w));
    }
    out
}
