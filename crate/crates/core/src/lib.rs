pub mod bases;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod nlls;
pub mod reference;
pub mod solver;
pub mod symmetry;

pub use error::{Error, Result};

// The book's library chapters run as doc-tests.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/symmetries.md")]
pub mod book_symmetries {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod book_fitting {}
