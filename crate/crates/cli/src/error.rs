use deblur_core::DeblurError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Output(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Output(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

/// Classifies an error raised while processing already-loaded data.
pub fn from_pipeline(e: DeblurError) -> CliError {
    match e {
        DeblurError::InvalidImage(_)
        | DeblurError::InvalidConfig(_)
        | DeblurError::ImageRead { .. }
        | DeblurError::Manifest(_) => CliError::Input(e.to_string()),
        DeblurError::ImageWrite { .. } | DeblurError::Io(_) => CliError::Output(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    }
}
