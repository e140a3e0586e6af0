//! Invariant and equivariant linear maps under permutation actions: block
//! spectra, bounded-rank fitting, component census and weight-shared
//! factorizations.

pub mod combinatorics;
pub mod demo;
pub mod equivariant;
pub mod error;
pub mod invariant;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod oracle;
pub mod perm;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Matrix};
pub use perm::{CycleDecomposition, Partition, Permutation};

/// Order-preserving map, parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}
