use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::formats::canonical::CanonicalError;
use crate::formats::pcap::{PcapError, PcapWriteError};
use crate::formats::LineError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", path.display())]
    NotFound { path: PathBuf },
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Pcap { path: PathBuf, source: PcapError },
    #[error("{}: {source}", path.display())]
    PcapWrite {
        path: PathBuf,
        source: PcapWriteError,
    },
    #[error("{}: {source}", path.display())]
    Canonical {
        path: PathBuf,
        source: CanonicalError,
    },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: LineError },
    #[error("{}: {source}", path.display())]
    Pipeline {
        path: PathBuf,
        source: csimotion_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn read(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            Error::NotFound {
                path: path.to_path_buf(),
            }
        } else {
            Error::Read {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub fn format(path: &Path, source: LineError) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn pipeline(path: &Path, source: impl Into<csimotion_core::Error>) -> Self {
        Error::Pipeline {
            path: path.to_path_buf(),
            source: source.into(),
        }
    }

    /// 1 for internal invariant violations, 2 for everything caused by
    /// inputs or arguments.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Internal(_) => 1,
            _ => 2,
        }
    }
}
