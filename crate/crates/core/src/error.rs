use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("track {vehicle_id} has {len} samples, at least {min} required")]
    TooShort {
        vehicle_id: String,
        len: usize,
        min: usize,
    },
    #[error("track {vehicle_id}: sampling interval varies ({dt_min} s .. {dt_max} s)")]
    NonUniformSampling {
        vehicle_id: String,
        dt_min: f64,
        dt_max: f64,
    },
    #[error("signal of {len} samples is shorter than the {window}-sample window")]
    SignalTooShort { len: usize, window: usize },
    #[error("interval [{t_start}, {t_end}] contains no samples")]
    EmptyInterval { t_start: f64, t_end: f64 },
    #[error("class {label} has {count} training examples, at least {min} required")]
    ClassUnderrepresented {
        label: String,
        count: usize,
        min: usize,
    },
    #[error("density fields span different grid extents")]
    LayoutMismatch,
    #[error("speed distributions use different control points")]
    MismatchedControlPoints,
    #[error("orthogonal design needs 16 complete runs, got {0}")]
    IncompleteRuns(usize),
    #[error("reference value is zero")]
    ZeroReference,
    #[error("{0}")]
    Clamped(String),
    #[error("no applicable correction action for the current layout")]
    NoApplicableAction,
    #[error("collision between vehicles {follower} and {leader} at t = {t} s")]
    CollisionDetected { follower: u64, leader: u64, t: f64 },
    #[error("simulation invariant violated: {0}")]
    InvariantViolated(String),
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Validation-class errors map to CLI exit code 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::Schema(_)
                | Error::TooShort { .. }
                | Error::NonUniformSampling { .. }
                | Error::MismatchedControlPoints
                | Error::ZeroReference
                | Error::Model(_)
        )
    }
}
