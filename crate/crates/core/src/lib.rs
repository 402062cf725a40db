//! Numerical kernels for the q-difference Poisson structure on moduli of
//! parabolic bundles over an elliptic curve: Laurent series with tracked
//! windows, theta bases and first cohomology of line bundles, extension
//! classes, the moduli bracket, the loop-group comparison and symplectic
//! leaf labels.

pub mod bracket;
pub mod error;
pub mod laurent;
pub mod leaf;
pub mod linalg;
pub mod loop_rmatrix;
pub mod qdiff;
pub mod theta;

pub use bracket::{bracket_matrix, jacobiator, BracketMatrix, BracketTensor};
pub use error::{Error, Result};
pub use laurent::{LaurentSeries, NumericContext};
pub use leaf::{
    instability_index, LeafScanner, SearchConfig, StratumKind, StratumReport, SubBundleProbe,
    Witness,
};
pub use loop_rmatrix::{compare_brackets, BracketComparison, LoopOrbitPoint};
pub use qdiff::{ExtensionClass, Multiplier, ParabolicSection};
pub use theta::{H1Class, LineBundle, ThetaVector};
