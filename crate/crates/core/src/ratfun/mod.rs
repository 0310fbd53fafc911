//! Real-coefficient polynomial and rational transfer-function algebra.

mod poly;
mod roots;
mod tf;

pub use poly::{Polynomial, MAX_DEGREE};
pub use roots::{is_hurwitz, poly_roots, poly_roots_with_margin, RootClass, RootSet, ROOT_MARGIN};
pub use tf::{tf_combine, DcGain, RationalTF, TfOp, TfProps};
