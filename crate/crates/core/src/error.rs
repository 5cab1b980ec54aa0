use thiserror::Error;

/// Errors raised by the cat-code routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state carries non-negligible weight in the last few number states.
    #[error("truncation too small: tail mass {tail:.3e} above the last 5 levels of nmax={nmax}")]
    Truncation { nmax: usize, tail: f64 },

    /// The cat state |C^n⟩ at this amplitude has (numerically) zero norm.
    #[error("degenerate cat state: N_{n}({amplitude}) = {norm:.3e} is below threshold")]
    DegenerateCat { n: usize, amplitude: f64, norm: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("channel is not Hermiticity-preserving (deviation {deviation:.3e})")]
    NonHermitianChannel { deviation: f64 },

    #[error("no crossing found in [{lo}, {hi}] (alpha^2)")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("no candidate plan yields a positive key rate (best Q_Z={q_z:.4}, Q_X={q_x:.4})")]
    NoPositiveRate { q_z: f64, q_x: f64 },

    #[error("convergence failure: {0}")]
    Convergence(String),
}

impl Error {
    /// True for errors caused by invalid parameters, as opposed to numerical failure.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::DegenerateCat { .. } | Error::NonHermitianChannel { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
