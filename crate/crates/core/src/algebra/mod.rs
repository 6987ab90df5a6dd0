//! Finite matrix representatives of operators and the maps `S ↦ R S T`.

mod conj;
mod lowrank;
mod mat;
mod norms;
mod rank_one;
pub mod svd;

pub use conj::{
    conjugate_by, conjugation, conjugation_power, conjugation_with_growth, embed,
    left_multiplication, restrict, right_multiplication, Factor, WindowGrowth,
};
pub use lowrank::LowRank;
pub use mat::MatOp;
pub use norms::{
    operator_norm, orthogonal_sum_additivity, schatten_norm, trace, AdditivityReport,
    ORTHOGONALITY_TOL,
};
pub use rank_one::{outer, Pairing, RankOne};
pub use svd::{pseudo_inverse, singular_values, SingularSpectrum, Svd, MAX_SVD_DIM};
