//! Sparse sequence vectors, weight rules and shift-type operators.

mod bounds;
mod shift;
mod vector;
mod weights;

pub use bounds::{subset_sum_bound_check, SubsetBoundReport, MAX_SUBSET_TERMS};
pub use shift::{Orbit, QOrbit, ShiftDirection, ShiftOp, TaylorPoly};
pub use vector::{EntryRecord, IndexDomain, SeqVector};
pub use weights::{LogPrefix, WeightRule, WeightSeq};

pub(crate) use vector::check_exponent;
pub(crate) use weights::cplx as cplx_serde;
