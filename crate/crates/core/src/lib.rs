//! Weighted tensor-product decomposition spaces: exact epsilon-dimensions, redundant and
//! orthogonal weight transforms, ANOVA and anchored decompositions with norm-equivalence
//! certificates, weighted Sobol indices, m-variate truncation bounds and kernel regression.

pub mod cli;
pub mod decomp;
pub mod epsdim;
pub mod equivalence;
pub mod index;
pub mod quad;
pub mod regress;
pub mod sensitivity;
pub mod series;
pub mod weights;
