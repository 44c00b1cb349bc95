use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite signal component at index {index}")]
    NonFiniteSignal { index: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate controller: every monomial is constant")]
    DegenerateController,

    #[error("plaintext {value} outside Z_N for N = {modulus}")]
    PlaintextOutOfRange { value: i128, modulus: u64 },

    #[error("ciphertexts belong to different backends or parameter sets")]
    BackendMismatch,

    #[error("backend capability {available} cannot evaluate {required}")]
    CapabilityExceeded { required: String, available: String },

    #[error("multiplicative depth limit {limit} reached")]
    DepthExceeded { limit: u32 },

    #[error("malformed wire data: {0}")]
    Wire(String),

    #[error("controller has no observable dynamics")]
    NoObservableDynamics,

    #[error("symbolic expansion exceeded the budget of {budget} monomials")]
    ExpansionBudgetExceeded { budget: usize },

    #[error("initial history not derivable at stage {stage}; use a zero initial state")]
    HistoryNotDerivable { stage: usize },

    #[error("controller output {value} overflows Z_N for N = {modulus}; the signal bound or N is mis-sized")]
    PlaintextOverflow { value: String, modulus: String },

    #[error("quantized signal {value} outside the admissible box |v| <= {bound}")]
    SignalBoundViolated { value: i128, bound: i64 },

    #[error("a non-fresh ciphertext was offered as a controller input")]
    StaleCiphertext,

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("plant state diverged (norm {norm:e})")]
    Diverged { norm: f64 },

    #[error("encrypted output {encrypted} differs from quantized output {quantized}")]
    ExactnessViolated { encrypted: i128, quantized: i128 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("channel {0} is not recorded in this trace")]
    MissingChannel(String),

    #[error("step {step}: {source}")]
    AtStep { step: u64, source: Box<Error> },

    #[error("i/o: {0}")]
    Io(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn at_step(self, step: u64) -> Error {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep { step, source: Box::new(e) },
        }
    }

    /// The underlying error with any step context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
