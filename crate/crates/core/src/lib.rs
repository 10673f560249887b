//! Finite-rank Toeplitz subshifts at desk scale: words and codes, S-adic
//! directive sequences, Bratteli diagrams, skeleton towers, strong rank-2
//! structure, conjugacy and inverse-conjugacy tests, and generators for
//! explicit constructions.

pub mod bratteli;
pub mod constructions;
pub mod error;
pub mod format;
pub mod inverse;
pub mod rank2;
pub mod sadic;
pub mod skeletons;
pub mod verdict;
pub mod words;

pub use error::{Error, Result};
pub use sadic::{Anchor, CertLevel, DirectiveSequence, Morphism, PerStatus, PointWindow, StructuralFlags};
pub use verdict::{Status, Verdict};
pub use words::{Alphabet, Building, Letter, Word};
