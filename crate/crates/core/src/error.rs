use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis index {index} out of range for a {n_qubits}-qubit state")]
    BasisIndexOutOfRange { index: u64, n_qubits: usize },

    #[error("qubit {qubit} out of range for a {n_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("qubit {0} appears more than once among targets and controls")]
    OverlappingQubits(usize),

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("oracle output {value} does not fit in a {width}-qubit register")]
    OracleOutputTooWide { value: u64, width: usize },

    #[error("register layouts or sizes differ")]
    LayoutMismatch,

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("amplitude vector of length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("register `{name}` was not returned to |0> (residual weight {residual:e})")]
    DirtyRegister { name: String, residual: f64 },

    #[error("value {value} is not representable with q={q}, frac_bits={frac_bits}, signed={signed}")]
    FixedPointOverflow {
        value: f64,
        q: u32,
        frac_bits: u32,
        signed: bool,
    },

    #[error("amplitude scale violated: |{scale} * {value}| > 1")]
    ScaleViolation { scale: f64, value: f64 },

    #[error("vector is all zeros")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("moduli {a} and {b} are not coprime")]
    NotCoprime { a: u64, b: u64 },

    #[error("modulus mismatch: GHZ round uses {round}, shares use {shares}")]
    ModulusMismatch { round: u64, shares: u64 },

    #[error("component {component}: aggregate magnitude {magnitude} does not fit the window of S = {modulus}")]
    AggregateOverflow {
        component: usize,
        magnitude: u128,
        modulus: u128,
    },

    #[error("state of {amplitudes} amplitudes exceeds the cap of {cap}")]
    StateTooLarge { amplitudes: u128, cap: u128 },

    #[error("component {component}: {source}")]
    Component {
        component: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sample {sample}: {source}")]
    Sample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {error}")]
    File { path: String, error: Box<Error> },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_component(self, component: usize) -> Self {
        Error::Component {
            component,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_file(self, path: &std::path::Path) -> Self {
        Error::File {
            path: path.display().to_string(),
            error: Box::new(self),
        }
    }

    pub(crate) fn in_sample(self, sample: usize) -> Self {
        Error::Sample {
            sample,
            source: Box::new(self),
        }
    }
}
