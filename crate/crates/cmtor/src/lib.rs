//! Torsion subgroups of CM elliptic curves over number fields of odd degree.
//!
//! The crate decides which torsion groups occur in a given odd degree, computes
//! the imaginary quadratic class numbers this depends on, and derives the
//! density statistics of Olson degrees and their generalizations, together
//! with a bulk census over ranges of degrees.

pub mod bounds;
pub mod census;
pub mod classnum;
pub mod density;
pub mod numtheory;
pub mod odt;

pub use classnum::ClassNumberCache;
