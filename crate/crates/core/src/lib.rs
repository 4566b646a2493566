//! Defect sequences, maximality and model-space computations for
//! contractive operator tuples on finite-dimensional spaces.

pub mod drury_arveson;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod maximality;
pub mod numeric;
pub mod random;
pub mod tuple;
pub mod words;
pub mod zoo;

pub use error::{Error, Result};
pub use numeric::{ComplexMatrix, Subspace, TolerancePolicy, C64};
pub use tuple::{defect_sequence, DefectProfile, OperatorTuple};
pub use words::{MultiIndex, Word};
