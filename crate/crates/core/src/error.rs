use thiserror::Error;

/// Errors raised by the solver and its supporting modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("support [{left}, {right}] is narrower than four grid cells (dx = {dx})")]
    SupportTooNarrow { left: f64, right: f64, dx: f64 },

    #[error("empty support hull [{left}, {right}]")]
    EmptySupport { left: f64, right: f64 },

    #[error("patch collapsed: K_l = {k_left} > K_r = {k_right}")]
    Collapse { k_left: usize, k_right: usize },

    #[error("interface at {zeta} left the grid [{x_min}, {x_max}]")]
    OutOfGrid { zeta: f64, x_min: f64, x_max: f64 },

    #[error("node index {index} has no neighbours inside a grid of {n_nodes} nodes")]
    IndexOutOfGrid { index: usize, n_nodes: usize },

    #[error("supports overlap or touch: right interface {right_of_left} >= left interface {left_of_right}")]
    OverlappingSupports {
        right_of_left: f64,
        left_of_right: f64,
    },

    #[error(
        "invariant breach at step {step}: {check} failed at node {node:?} (margin {margin:e})"
    )]
    InvariantBreach {
        step: u64,
        check: String,
        node: Option<usize>,
        margin: f64,
    },

    #[error("tridiagonal system is not diagonally dominant at row {row}")]
    NotDiagonallyDominant { row: usize },

    #[error("interfaces do not cross before t = {t_max}")]
    NoCrossing { t_max: f64 },

    #[error("no exact solution is available for this run")]
    MissingOracle,

    #[error("run with dx = {dx} failed: {source}")]
    SeriesRun {
        dx: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
