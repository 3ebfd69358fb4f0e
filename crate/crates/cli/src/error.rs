use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), key.as_ref().map(|k| format!(" (key '{k}')")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] powerfold::Error),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{suite}: {message}")]
    Failed { suite: String, message: String },
    #[error("{0}")]
    Hypothesis(String),
}

/// Machine-readable form of a failure.
#[derive(Debug, Serialize)]
pub struct Diagnostic {
    pub status: &'static str,
    pub module: String,
    pub operation: String,
    pub message: String,
    /// The offending value, in debug form.
    pub datum: String,
    pub line: Option<usize>,
    pub key: Option<String>,
}

fn origin(e: &powerfold::Error) -> (&'static str, &'static str) {
    use powerfold::Error::*;
    match e {
        EmptySequence | LengthMismatch { .. } | ZeroDegree | NonIncreasingDegrees { .. }
        | NonPositiveRadius { .. } | GrowthViolation { .. } | ZeroBaseConstant
        | DiskRadiusViolation { .. } | Overflow { .. } | InvalidParameter(_) => ("sequences", "validate"),
        DegenerateCell { .. } => ("folding", "build_cell"),
        OutsideStrip { .. } | OnSlitWithoutSide => ("folding", "psi"),
        InsideDisk { .. } => ("folding", "sigma"),
        OutsideAnnulus { .. } | DegenerateDegrees { .. } | ContinuityFailure { .. } => ("folding", "g_annulus"),
        OutsideDomain { .. } => ("globalmap", "h"),
        ModeMismatch => ("globalmap", "disk_mode_domain"),
        TooCloseToBoundary | DegenerateDerivative => ("analysis", "beltrami_estimate"),
        ZeroOnContour | NonIntegralWinding { .. } => ("analysis", "winding_number"),
        EmptyAnnulus { .. } => ("dynamics", "annulus_A"),
        HypothesisViolated { .. } | InclusionFailure { .. } => ("dynamics", "verify_wandering"),
        Precondition(_) => ("dynamics", "truncated_orbit_compare"),
        AtStep { .. } => ("dynamics", "orbit"),
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Hypothesis(_) => 3,
            _ => 1,
        }
    }

    pub fn diagnostic(&self, command: &str) -> Diagnostic {
        let (module, operation) = match self {
            CliError::Parse { .. } => ("cli".to_string(), format!("{command}: parse")),
            CliError::Invalid(e) => {
                let (m, o) = origin(e);
                (m.to_string(), o.to_string())
            }
            CliError::Io { .. } => ("cli".to_string(), format!("{command}: io")),
            CliError::Failed { suite, .. } => ("cli".to_string(), format!("verify {suite}")),
            CliError::Hypothesis(_) => ("dynamics".to_string(), "verify_wandering".to_string()),
        };
        let (line, key) = match self {
            CliError::Parse { line, key, .. } => (*line, key.clone()),
            _ => (None, None),
        };
        let datum = match self {
            CliError::Parse { key, line, .. } => format!("{key:?} at line {line:?}"),
            CliError::Invalid(e) => format!("{e:?}"),
            CliError::Io { path, .. } => path.clone(),
            CliError::Failed { message, .. } | CliError::Hypothesis(message) => message.clone(),
        };
        Diagnostic {
            status: "error",
            module,
            operation,
            message: self.to_string(),
            datum,
            line,
            key,
        }
    }
}

pub fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}
