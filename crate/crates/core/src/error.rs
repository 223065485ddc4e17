use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why an edge list or adjacency structure fails to describe a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    Empty,
    SelfLoop(usize),
    DuplicateEdge(usize, usize),
    Cycle(usize, usize),
    Disconnected,
}

impl std::fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TreeViolation::Empty => write!(f, "empty: no vertices"),
            TreeViolation::SelfLoop(v) => write!(f, "self-loop at vertex {v}"),
            TreeViolation::DuplicateEdge(u, v) => write!(f, "duplicate edge {u}-{v}"),
            TreeViolation::Cycle(u, v) => write!(f, "cycle: edge {u}-{v} closes a cycle"),
            TreeViolation::Disconnected => write!(f, "disconnected"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex {0} is out of range")]
    InvalidVertex(usize),

    #[error("not a tree: {0}")]
    NotATree(TreeViolation),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("the selection is empty")]
    EmptySelection,

    #[error("the subtree has no edge")]
    NoEdge,

    #[error("the selected vertices are not connected")]
    NotConnected,

    #[error("the host has no edge outside the subtree")]
    NoOutsideEdges,

    #[error("the subtree is not inessential")]
    NotInessential,

    #[error("inessential subtrees have distinct roots {0} and {1}")]
    DistinctRoots(String, String),

    #[error("the host tree is finite")]
    FiniteHost,

    #[error("incomplete knowledge: {0}")]
    IncompleteKnowledge(String),

    #[error("exploration budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search too large: {estimate} subsets exceed the limit of {limit}")]
    SearchTooLarge { estimate: u128, limit: u128 },

    #[error("every vertex has degree 2; there is no branch structure to contract")]
    NoBranchStructure,

    #[error("the subset lies inside one branchless chain; its contracted image is empty")]
    DegenerateImage,

    #[error("declared bounds refuted: {reason}")]
    DeclaredBoundsRefuted {
        reason: String,
        counterexample: Vec<String>,
    },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("invalid offspring distribution: {0}")]
    InvalidDistribution(String),

    #[error("unknown label {0}")]
    UnknownLabel(String),

    #[error("requested depth {requested} exceeds the sampled depth {available}")]
    InsufficientDepth { requested: usize, available: usize },

    #[error("conditioning on survival needed more than {attempts} attempts for trial {trial}")]
    RejectionBudget { trial: u64, attempts: usize },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}
