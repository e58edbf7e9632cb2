use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or infeasible input.
    Input,
    /// Argument outside the region where a transform converges.
    Domain,
    /// A structural hypothesis of the asymptotic theory fails for this input.
    Hypothesis,
    /// A numerical oracle could not produce a trustworthy answer.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("transform evaluated at z = 0")]
    ZeroArgument,
    #[error("negative weight {weight} at exponent {exponent}")]
    NegativeWeight { exponent: i32, weight: f64 },
    #[error("non-finite weight at exponent {exponent}")]
    NonFiniteWeight { exponent: i32 },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(&'static str),
    #[error("free walk has no vertical drift (g(0) = {g0:e}); bridge point undefined")]
    DegenerateDrift { g0: f64 },
    #[error("no root for {0} in the search bracket (heavy-tailed or unstable input)")]
    NoRoot(&'static str),
    #[error("no positive root of R+ = 1 at theta1 = {theta1}: beyond the bridge point")]
    BeyondBridge { theta1: f64 },
    #[error("no jitter root on the scan grid")]
    NoJitterRoot,
    #[error("regime mismatch: {0}")]
    RegimeMismatch(&'static str),
    #[error("kernel is not bridge-normalized (p = {p}, q = {q})")]
    NotBridgeNormalized { p: f64, q: f64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("argument outside convergence region: {0}")]
    OutsideRegion(&'static str),
    #[error("network is closed: r12 * r21 = {0} >= 1")]
    ClosedNetwork(f64),
    #[error("infeasible model: {0}")]
    Infeasible(String),
    #[error("oracle does not converge: {0}")]
    NonconvergentOracle(&'static str),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("inconclusive Monte Carlo: {censored} of {total} paths censored at the horizon")]
    Censoring { censored: u64, total: u64 },
    #[error("singular regression design")]
    SingularFit,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            ZeroArgument | BeyondBridge { .. } | OutsideRegion(_) => ErrorKind::Domain,
            NegativeWeight { .. }
            | NonFiniteWeight { .. }
            | InvalidKernel(_)
            | ClosedNetwork(_)
            | Infeasible(_)
            | InvalidArgument(_) => ErrorKind::Input,
            DegenerateKernel(_)
            | DegenerateDrift { .. }
            | NoRoot(_)
            | NoJitterRoot
            | RegimeMismatch(_)
            | NotBridgeNormalized { .. }
            | Hypothesis(_) => ErrorKind::Hypothesis,
            NonconvergentOracle(_) | Oracle(_) | Censoring { .. } | SingularFit => {
                ErrorKind::Oracle
            }
        }
    }
}
