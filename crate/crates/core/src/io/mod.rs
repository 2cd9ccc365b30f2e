//! File formats.

mod dot;
mod fsm_text;
mod hfsm_json;

pub use dot::{fsm_dot, tree_dot, tree_json};
pub use fsm_text::{parse_fsm, write_fsm};
pub use hfsm_json::{parse_hfsm, write_hfsm};

use crate::error::Result;
use crate::hfsm::Hfsm;

/// Reads either format: JSON documents start with `{`, anything else is
/// the FSM text format and becomes a flat hierarchy.
pub fn parse_any(text: &str) -> Result<Hfsm> {
    if text.trim_start().starts_with('{') {
        parse_hfsm(text)
    } else {
        let (name, z) = parse_fsm(text)?;
        Hfsm::flat(&name, z)
    }
}
