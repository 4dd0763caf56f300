use thiserror::Error;

pub type Result<T> = std::result::Result<T, KarlinError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KarlinError {
    #[error("{name} = {value} is outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The jump-count Poisson mean exceeds the configured cap.
    #[error("resolution too fine / epsilon too small: jump-count mean {mean:.3e} exceeds cap {cap:.3e}")]
    ResolutionTooFine { mean: f64, cap: f64 },

    /// A Sibuya draw exceeded the configured cap on the number of points.
    #[error("heavy-tail overflow: Sibuya draw exceeds cap {cap}; raise sibuya_cap or use a larger beta")]
    HeavyTailOverflow { cap: u64 },

    #[error("{aborted} of {total} replicates aborted on heavy-tail overflow (limit {limit_fraction}); the generic sampler needs a larger sibuya_cap or beta above about 0.4")]
    AbortRate {
        aborted: usize,
        total: usize,
        limit_fraction: f64,
    },

    #[error("covariance matrix is not positive semi-definite: eigenvalue {eigenvalue:.3e} below {floor:.3e}")]
    NotPositiveSemidefinite { eigenvalue: f64, floor: f64 },

    #[error("circulant embedding failed: eigenvalue {eigenvalue:.3e} below {floor:.3e}")]
    CirculantNegative { eigenvalue: f64, floor: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub(crate) fn check_open(name: &'static str, value: f64, lo: f64, hi: f64, expected: &'static str) -> Result<()> {
    if value > lo && value < hi {
        Ok(())
    } else {
        Err(KarlinError::Domain { name, value, expected })
    }
}
