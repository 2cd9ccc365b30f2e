//! Thin modular decomposition of deterministic finite state machines.
//!
//! The crate computes the decomposition tree of an FSM (the inclusion dag of
//! its indecomposable thin modules), answers module queries from it, and
//! turns flat or hierarchical machines into equivalent maximally nested
//! hierarchical machines.
//!
//! ```
//! use hfsmdec::{fixtures, DecompTree};
//!
//! let p4 = fixtures::path(4);
//! let tree = DecompTree::build(&p4).unwrap();
//! assert_eq!(tree.dimension(), 3);
//! assert!(tree.is_thin_module(&p4.set_of(["1", "2", "3"]).unwrap()));
//! ```

pub mod cli;
pub mod decomposition;
pub mod error;
pub mod fixtures;
pub mod fsm;
pub mod hfsm;
pub mod hierarchy;
pub mod io;
pub mod modules;
pub mod random;
pub mod verify;

pub use decomposition::{build_gv, DecompTree, GvGraph, NodeId};
pub use error::{Error, Result};
pub use fsm::{Fsm, StateId, StateSet, Symbol};
pub use hfsm::{Hfsm, NestingArc};
pub use hierarchy::{canonical_form, core, maximize, CanonicalFsm, Core};

pub use modules::{analyze, is_module, is_thin_module, ModuleSet};
