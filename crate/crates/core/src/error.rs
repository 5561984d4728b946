// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller supplied something outside an operation's contract.
    #[error("rejected input: {0}")]
    Input(String),
    /// A configured memory/size ceiling would be exceeded.
    #[error("resource ceiling `{ceiling}` exceeded: {detail}")]
    Resource { ceiling: &'static str, detail: String },
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("experiment failed: {0}")]
    Experiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
