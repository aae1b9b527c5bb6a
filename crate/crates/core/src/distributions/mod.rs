//! Claim-size laws F and mixing laws G with the functionals the estimators
//! and predictors consume: tail, integrated tail, mgf, and ∫ · dG.

mod claim;
mod mixing;

pub use claim::{ClaimDistribution, ClaimKind, TailClass};
pub use mixing::{Atom, DensityPart, DensityShape, EndpointExpansion, MixingDistribution};
