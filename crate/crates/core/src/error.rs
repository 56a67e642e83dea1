use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown relation `{name}` at byte {pos}")]
    UnknownRelation { pos: usize, name: String },
    #[error("relation `{name}` at byte {pos} has arity {expected}, got {found} arguments")]
    ArityMismatch { pos: usize, name: String, expected: usize, found: usize },
    #[error("variable `{var}` at byte {pos} is already bound by an enclosing quantifier")]
    Shadowing { pos: usize, var: String },
    #[error("duplicate relation `{0}`")]
    DuplicateRelation(String),
    #[error("relation `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("2^{size} does not fit in 64 bits; pass an explicit radius override")]
    RadiusOverflow { size: usize },
    #[error("radius override must be at least 1")]
    InvalidOverride,
    #[error("invalid head: {0}")]
    BadHead(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoadError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undeclared element `{id}`")]
    UndeclaredElement { line: usize, id: String },
    #[error("line {line}: undeclared relation `{name}`")]
    UndeclaredRelation { line: usize, name: String },
    #[error("line {line}: relation `{name}` has arity {expected}, fact has {found} components")]
    ArityMismatch { line: usize, name: String, expected: usize, found: usize },
    #[error("line {line}: relation `{name}` declared twice")]
    DuplicateRelation { line: usize, name: String },
    #[error("line {line}: element `{id}` declared twice")]
    DuplicateElement { line: usize, id: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("distance index has depth {depth}, but radius {requested} was requested")]
    TooShallow { depth: u32, requested: u32 },
    #[error("element {0} is not in the domain")]
    UnknownElement(u32),
    #[error("canonical types need exactly one center, got {0}")]
    NotSingleCenter(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("free variable `{0}` is unbound")]
    Unbound(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumError {
    #[error("stream {stream} is not strictly increasing")]
    NonMonotone { stream: usize },
    #[error("no enumeration activity yet")]
    NoActivity,
    #[error("query has no free variables; decide it with the evaluator instead")]
    Sentence,
}

/// Crate-wide error.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error("maximum degree {found} exceeds the declared bound {bound}: the structure is not {bound}-degree-bounded")]
    DegreeBound { bound: usize, found: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
