//! Library side of the `lieibvp` command: configuration files, solve and
//! bench runners, artifact writers and the verification suite.

pub mod bench;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod verify;

pub use error::CliError;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/configuration.md")]
pub mod book_configuration {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/acceptance.md")]
pub mod book_acceptance {}
