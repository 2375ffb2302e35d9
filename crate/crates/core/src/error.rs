use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or intermediate value left the representable range.
    #[error("numeric range error: {0}")]
    Range(String),

    /// `F(u)` overflowed, underflowed to zero, or produced a non-finite value.
    #[error("recurrence map component u{component} out of range ({value:e})")]
    MapOverflow { component: usize, value: f64 },

    /// The denominator of the M2 surface function vanished or turned negative.
    #[error("phi has a pole at x = {x:e}: M2 is empty in this direction")]
    PhiPole { x: f64 },

    /// An argument violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `(C, v1)` lies outside the admissible region of the M2 reduction.
    #[error("M2 reduction domain violation: {0}")]
    Domain(String),

    /// A point supplied as a fixed point or 2-cycle root failed its residual test.
    #[error("{what} residual {residual:e} exceeds tolerance {tolerance:e}")]
    NotOnOrbit {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    /// The starting point sits on a fixed point or 2-cycle, so its class is ambiguous.
    #[error("initial ratio {x0} coincides with an invariant point {point}")]
    Ambiguous { x0: f64, point: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
