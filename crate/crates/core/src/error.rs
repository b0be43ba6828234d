use std::fmt;

/// Sub-step in which a bounds violation was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Initial,
    Diffusion,
    Reaction,
    Convection,
    Iterative,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Initial => "initial condition",
            Stage::Diffusion => "diffusion step",
            Stage::Reaction => "reaction step",
            Stage::Convection => "convection step",
            Stage::Iterative => "iterative sweep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular Maxwell-Stefan system{}: relative determinant {rel_det:e}",
        face.map(|f| format!(" at face {f}")).unwrap_or_default())]
    SingularSystem { face: Option<usize>, rel_det: f64 },

    #[error("{stage} failed: species {species} in cell {cell} has mole fraction {value:e} outside [0, 1]")]
    StepFailure {
        stage: Stage,
        species: usize,
        cell: usize,
        value: f64,
    },

    #[error("grid mismatch: {left} cells vs {right} cells")]
    GridMismatch { left: usize, right: usize },

    #[error("at t = {time:e}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_time(self, time: f64) -> Self {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime {
                time,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
