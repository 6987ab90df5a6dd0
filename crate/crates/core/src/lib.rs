//! Numerical toolkit for frequent hypercyclicity experiments on sequence
//! spaces and spaces of operators.

pub mod algebra;
pub mod criteria;
pub mod density;
pub mod error;
pub mod fhc;
pub mod hardy;
pub mod scalar;
pub mod spaces;

pub use error::{Error, Result};
pub use scalar::{Wide, C64};
