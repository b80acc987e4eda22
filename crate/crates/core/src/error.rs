use thiserror::Error;

/// Errors produced by the metric, geodesic and checker layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QhError {
    #[error("input error: {0}")]
    Input(String),

    #[error("degenerate arc: {0}")]
    DegenerateArc(String),

    #[error("arc leaves the domain near {point:?}")]
    ArcNotInDomain { point: Vec<f64> },

    #[error("points are not connected in the metric graph at resolution level {level}")]
    Unreachable { level: u32 },

    #[error("tower arithmetic domain error: {0}")]
    TowerDomain(String),

    #[error("mapping error: image of {point:?} is not in the target domain")]
    Mapping { point: Vec<f64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),
}

impl QhError {
    pub fn input(msg: impl Into<String>) -> Self {
        QhError::Input(msg.into())
    }

    /// Short machine-readable tag, used by the CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            QhError::Input(_) => "input",
            QhError::DegenerateArc(_) => "degenerate_arc",
            QhError::ArcNotInDomain { .. } => "arc_not_in_domain",
            QhError::Unreachable { .. } => "unreachable",
            QhError::TowerDomain(_) => "tower_domain",
            QhError::Mapping { .. } => "mapping",
            QhError::Unsupported(_) => "unsupported",
            QhError::Format(_) => "format",
        }
    }
}

impl From<serde_json::Error> for QhError {
    fn from(e: serde_json::Error) -> Self {
        QhError::Format(e.to_string())
    }
}

pub type Result<T, E = QhError> = std::result::Result<T, E>;
