use thiserror::Error;

/// Problems found while reading a descriptor file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("line {line}: malformed entry {text:?} (expected key=value)")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key {0:?}")]
    MissingKey(&'static str),
    #[error("line {line}: {key} is not a valid integer: {value:?}")]
    InvalidInteger {
        line: usize,
        key: &'static str,
        value: String,
    },
    #[error("line {line}: malformed replica position {text:?} (expected gx,gy)")]
    MalformedReplica { line: usize, text: String },
    #[error("growth factor s={0} is invalid (s must be at least 2)")]
    InvalidGrowthFactor(u64),
    #[error("replica count k={0} is invalid (k must be at least 1)")]
    InvalidReplicaCount(u64),
    #[error("k={k} replicas cannot fit in a {s}x{s} grid")]
    TooManyReplicas { k: u64, s: u64 },
    #[error("k={k} but {listed} replica positions are listed")]
    CountMismatch { k: u64, listed: usize },
    #[error("replica {index} at ({gx},{gy}) lies outside the {s}x{s} grid")]
    ReplicaOutOfGrid {
        index: usize,
        gx: u64,
        gy: u64,
        s: u64,
    },
    #[error("replicas {first} and {second} share position ({gx},{gy})")]
    DuplicateReplica {
        first: usize,
        second: usize,
        gx: u64,
        gy: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(
        "unknown built-in fractal {0:?} (known: sierpinski-triangle, sierpinski-carpet, vicsek)"
    )]
    UnknownFractal(String),
    #[error("level {level} is too large for s={s}, k={k}: sizes overflow the supported range")]
    LevelTooLarge { level: u32, s: u64, k: u64 },
    #[error("cell count {k}^{level} overflows the 2^63 bound")]
    CountOverflow { k: u64, level: u32 },
    #[error("embedded coordinate ({x},{y}) is outside the {n}x{n} domain")]
    EmbeddedOutOfRange { x: u64, y: u64, n: u64 },
    #[error("compact coordinate ({x},{y}) is outside the {w}x{h} compact domain")]
    CompactOutOfRange { x: u64, y: u64, w: u64, h: u64 },
    #[error("embedded coordinate ({x},{y}) is not a cell of the fractal")]
    NotInFractal { x: u64, y: u64 },
    #[error("coarse cell ({x},{y}) of a blocked layout is not a cell of the coarse fractal")]
    CoarseNotInFractal { x: u64, y: u64 },
    #[error("block size {rho} is not a power of s={s} no larger than the domain side {n}")]
    InvalidBlockSize { rho: u64, s: u64, n: u64 },
    #[error("storage of {bytes} bytes exceeds the memory cap of {cap} bytes")]
    MemoryCapExceeded { bytes: u128, cap: u64 },
    #[error("level {level} exceeds the map fragment side {side}")]
    FragmentTooSmall { level: u32, side: usize },
    #[error("matrix shapes do not agree: {0}")]
    ShapeMismatch(String),
    #[error("arithmetic overflow in matrix-multiply-accumulate")]
    MmaOverflow,
    #[error("density {0} is outside [0, 1]")]
    InvalidDensity(f64),
    #[error("invalid rule {0:?} (expected B<digits>/S<digits>)")]
    InvalidRule(String),
    #[error("unknown backend {0:?} (expected bb, lambda or compact)")]
    InvalidBackend(String),
    #[error("invalid coordinate {0:?} (expected x,y)")]
    InvalidCoordinate(String),
    #[error("invalid level range {0:?} (expected a..b or a single level)")]
    InvalidLevelRange(String),
    #[error("oracle size guard: {cells} cells exceeds the limit of {limit}")]
    OracleTooLarge { cells: u64, limit: u64 },
    #[error("frame of side {n} exceeds the render cap of {cap}")]
    RenderTooLarge { n: u64, cap: u64 },
    #[error("grids disagree in shape: {0}")]
    GridMismatch(String),
    #[error("malformed PBM data: {0}")]
    Pbm(String),
    #[error("bench CSV: {0}")]
    Csv(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
