pub mod error;
pub mod experiments;
pub mod invariance;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod polyhedra;
pub mod setrep;

pub use error::{Error, Result};
