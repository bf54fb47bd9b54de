//! Error classification onto the documented exit codes.

use gbs_core::bench::BenchError;
use gbs_core::kernels::KernelError;
use gbs_core::probability::ProbError;
use gbs_core::samplers::SamplerError;
use gbs_core::state::StateError;
use gbs_core::textcfg::CfgError;
use gbs_core::validation::ValidationError;

#[derive(Debug)]
pub enum AppError {
    /// Exit code 2: bad flags, config files, spec files, missing inputs.
    Config(String),
    /// Exit code 3: the request exceeds a kernel or enumeration limit.
    Scale(String),
    /// Exit code 4: numerical validity failure (indefinite matrices,
    /// untrusted kernel values).
    Numeric(String),
    /// Exit code 1: I/O and environment failures.
    Io(String),
}

impl AppError {
    pub fn code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Scale(_) => 3,
            AppError::Numeric(_) => 4,
            AppError::Io(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "configuration error: {m}"),
            AppError::Scale(m) => write!(f, "scale refusal: {m}"),
            AppError::Numeric(m) => write!(f, "numerical validity failure: {m}"),
            AppError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<CfgError> for AppError {
    fn from(e: CfgError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<StateError> for AppError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::Io(io) => AppError::Io(io.to_string()),
            StateError::InvalidState(_) | StateError::Linalg(_) => {
                AppError::Numeric(e.to_string())
            }
            other => AppError::Config(other.to_string()),
        }
    }
}

impl From<KernelError> for AppError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::TooManyClicks { .. } | KernelError::TooLarge { .. } => {
                AppError::Scale(e.to_string())
            }
            _ => AppError::Numeric(e.to_string()),
        }
    }
}

impl From<ProbError> for AppError {
    fn from(e: ProbError) -> Self {
        match e {
            ProbError::State(s) => s.into(),
            ProbError::Kernel(k) => k.into(),
            ProbError::PatternKernel { pattern, source } => match source {
                KernelError::TooManyClicks { .. } | KernelError::TooLarge { .. } => {
                    AppError::Scale(format!("pattern {pattern}: {source}"))
                }
                other => AppError::Numeric(format!("pattern {pattern}: {other}")),
            },
            ProbError::TooManyModes { .. } => AppError::Scale(e.to_string()),
            ProbError::NumericallyInvalid { .. } => AppError::Numeric(e.to_string()),
            ProbError::Dimension(_) | ProbError::InvalidParameter(_) => {
                AppError::Config(e.to_string())
            }
        }
    }
}

impl From<SamplerError> for AppError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Prob(p) => p.into(),
            SamplerError::State(s) => s.into(),
            SamplerError::SampleAborted { index, source } => {
                let inner: AppError = (*source).into();
                match inner {
                    AppError::Scale(m) => AppError::Scale(format!("sample {index}: {m}")),
                    AppError::Numeric(m) => AppError::Numeric(format!("sample {index}: {m}")),
                    other => other,
                }
            }
            SamplerError::InvalidParameter(ref msg) => {
                // expected-clicks-over-limit refusals are scale problems
                if msg.contains("kernel limit") || msg.contains("caps at") {
                    AppError::Scale(e.to_string())
                } else {
                    AppError::Config(e.to_string())
                }
            }
            SamplerError::Parse { .. } => AppError::Config(e.to_string()),
        }
    }
}

impl From<ValidationError> for AppError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::Prob(p) => p.into(),
            ValidationError::Sampler(s) => s.into(),
            ValidationError::Io(io) => AppError::Io(io.to_string()),
            other => AppError::Config(other.to_string()),
        }
    }
}

impl From<BenchError> for AppError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Kernel(k) => k.into(),
            BenchError::Prob(p) => p.into(),
            other => AppError::Config(other.to_string()),
        }
    }
}
