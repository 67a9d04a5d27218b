//! Crate-wide error type.

use crate::grid::Vertex;
use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid description was rejected (empty, zero side, overflow, too many dimensions).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// A stencil radius was rejected for the grid it is applied to.
    #[error("invalid stencil: {0}")]
    InvalidStencil(String),
    /// A machine or experiment configuration was rejected.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Exact integer arithmetic left the representable range.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    /// A vertex or linear index lies outside the grid.
    #[error("vertex or index out of range: {0}")]
    OutOfRange(String),
    /// Loading a block would push the resident footprint above `M`.
    #[error("capacity exceeded: loading block {block} needs {needed} of {capacity} element slots")]
    CapacityExceeded {
        block: u64,
        needed: u64,
        capacity: u64,
    },
    /// `load`/`allocate` of a block that is already in internal memory.
    #[error("block {0} is already resident")]
    AlreadyResident(u64),
    /// `evict` of a block that is not in internal memory.
    #[error("block {0} is not resident")]
    NotResident(u64),
    /// A block id beyond the address space of the layout.
    #[error("block {0} does not exist")]
    UnknownBlock(u64),
    /// Output blocks are allocated, never read; input blocks are read, never allocated.
    #[error("block {0} belongs to the wrong layer for this instruction")]
    WrongLayer(u64),
    /// `eval_stencil` found a stencil neighbor whose input element is not resident.
    #[error("missing input for neighbor {0:?}")]
    MissingInput(Vertex),
    /// `eval_stencil` found the output element of the vertex not resident.
    #[error("missing output slot for {0:?}")]
    MissingOutputSlot(Vertex),
    /// A vertex was evaluated twice.
    #[error("vertex {0:?} was already evaluated")]
    AlreadyEvaluated(Vertex),
    /// Internal memory is too small for the layout's sweep shape.
    #[error("unusable configuration: {0}")]
    UnusableConfiguration(String),
    /// An exhaustive enumeration would exceed its visit budget.
    #[error("enumeration budget exceeded: {needed} visits needed, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    /// A sweep issued an instruction the machine rejected; this is a plan bug.
    #[error("sweep aborted at instruction {instruction}: {source}")]
    SweepAborted {
        instruction: u64,
        #[source]
        source: Box<Error>,
    },
    /// Malformed trace or configuration text.
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The variant name, as recorded in experiment reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidStencil(_) => "InvalidStencil",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Overflow(_) => "Overflow",
            Error::OutOfRange(_) => "OutOfRange",
            Error::CapacityExceeded { .. } => "CapacityExceeded",
            Error::AlreadyResident(_) => "AlreadyResident",
            Error::NotResident(_) => "NotResident",
            Error::UnknownBlock(_) => "UnknownBlock",
            Error::WrongLayer(_) => "WrongLayer",
            Error::MissingInput(_) => "MissingInput",
            Error::MissingOutputSlot(_) => "MissingOutputSlot",
            Error::AlreadyEvaluated(_) => "AlreadyEvaluated",
            Error::UnusableConfiguration(_) => "UnusableConfiguration",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::SweepAborted { .. } => "SweepAborted",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Toml(_) => "Toml",
        }
    }
}
