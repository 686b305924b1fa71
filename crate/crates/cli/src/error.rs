use std::fmt;

/// Failures mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Missing or conflicting arguments; printed with the usage line.
    Usage(String),
    /// Unreadable or invalid input files and configuration.
    Input(String),
    /// The numerics failed on valid input.
    Numerical(String),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<buckling::SpectrumError> for CliError {
    fn from(e: buckling::SpectrumError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<buckling::discretize::DiscretizeError> for CliError {
    fn from(e: buckling::discretize::DiscretizeError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<buckling::BoundError> for CliError {
    fn from(e: buckling::BoundError) -> Self {
        use buckling::BoundError::*;
        match e {
            NegativeDiscriminant { .. } | UnboundedObjective { .. } | InfeasiblePrefix | BracketingFailure(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<buckling::solve::SolveError> for CliError {
    fn from(e: buckling::solve::SolveError) -> Self {
        use buckling::solve::SolveError;
        match e {
            SolveError::Discretize(d) => d.into(),
            SolveError::Eigen(buckling::eigensolve::EigenError::TooManyRequested { .. })
            | SolveError::NotEnoughValues { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<buckling::probe::ProbeError> for CliError {
    fn from(e: buckling::probe::ProbeError) -> Self {
        use buckling::probe::ProbeError;
        match e {
            ProbeError::Discretize(d) => d.into(),
            ProbeError::Eigen(buckling::eigensolve::EigenError::TooManyRequested { .. }) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<buckling::oracle::OracleError> for CliError {
    fn from(e: buckling::oracle::OracleError) -> Self {
        use buckling::oracle::OracleError;
        match e {
            OracleError::BracketingFailure { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
