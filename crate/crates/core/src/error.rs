use thiserror::Error;

/// Errors raised by the library and surfaced by the CLI.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid token {0:?}: tokens must be nonempty and contain no whitespace")]
    InvalidToken(String),

    #[error("unknown state {0:?}")]
    UnknownState(String),

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("duplicate state {0:?}")]
    DuplicateState(String),

    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(String),

    #[error("nondeterministic transition: state {state:?} already has a {symbol:?}-arc")]
    Nondeterministic { state: String, symbol: String },

    #[error("state set must be nonempty")]
    EmptySet,

    #[error("state sets are not pairwise disjoint (state {0:?} appears twice)")]
    NotDisjoint(String),

    #[error("not a partition of the state set: {0}")]
    NotPartition(String),

    #[error("quotient undefined: block {block:?} has {symbol:?}-arcs into {targets:?}")]
    QuotientUndefined {
        block: String,
        symbol: String,
        targets: Vec<String>,
    },

    #[error("state name collision: {0:?}")]
    NameCollision(String),

    #[error("machine is not accessible from its start state ({unreachable} unreachable states)")]
    NotAccessible { unreachable: usize },

    #[error("the start state has no representative module")]
    StartHasNoRepresentative,

    #[error("{0:?} is not a thin module")]
    NotThinModule(Vec<String>),

    #[error("HFSM is not thin: machine {0:?} does not flatten to a thin module")]
    NotThinHfsm(String),

    #[error("module {0:?} is already in the decomposition tree")]
    DuplicateModule(Vec<String>),

    #[error("state {0:?} was pruned from the auxiliary graph")]
    PrunedNode(String),

    #[error("{states} states exceed the brute-force bound of {bound}")]
    SizeBound { states: usize, bound: usize },

    #[error("unknown machine {0:?}")]
    UnknownMachine(String),

    #[error("machine {0:?} is the root and cannot be expanded")]
    RootExpansion(String),

    #[error("invalid HFSM: {path}: {message}")]
    InvalidHfsm { path: String, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
