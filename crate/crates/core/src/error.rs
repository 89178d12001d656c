use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("admissibility violated: sampled C1 norm {norm:.6e} exceeds bound {bound:.6e}")]
    Admissibility { norm: f64, bound: f64 },

    #[error("twist derivative leaks outside the support interval: {0}")]
    SupportLeak(String),

    #[error("invalid cutoff construction: {0}")]
    Cutoff(String),

    #[error("metric assembly failed at node {node}: det g = {det:.16e}")]
    MetricDeterminant { node: usize, det: f64 },

    #[error("linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    SolverDivergence { residual: f64, iterations: usize },

    #[error("time stepping precondition violated: {0}")]
    TimeGrid(String),

    #[error("initial state must be real valued for time symmetrization (max |Im| = {0:.3e})")]
    ComplexInitialState(f64),

    #[error("region is not contained in the grid: {0}")]
    Region(String),

    #[error("weight point invalid: {0}")]
    WeightPoint(String),

    #[error("field does not vanish on the working boundary (max |w| = {0:.3e})")]
    BoundaryTrace(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("lemma precondition violated: {0}")]
    LemmaPrecondition(String),

    #[error("non-degeneracy condition violated: measured q = {measured:.4e} < {required:.4e} (worst nodes {worst:?})")]
    NonDegeneracy {
        measured: f64,
        required: f64,
        worst: Vec<usize>,
    },

    #[error("Gauss-Newton diverged: objective rose twice (history {0:?})")]
    GaussNewtonDivergence(Vec<f64>),

    #[error("config: {0}")]
    Config(String),

    #[error("{experiment} pipeline: {source}")]
    Pipeline {
        experiment: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
