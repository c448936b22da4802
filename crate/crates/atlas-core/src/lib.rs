//! Set-oriented approximation of embedded attractors and unstable manifolds,
//! plus diffusion-map coordinates of the resulting box coverings.
//!
//! The crate is organized along the processing chain:
//!
//! * [`dynamics`] — time-`T` maps for the Kuramoto–Sivashinsky equation, the
//!   Mackey–Glass delay equation, and a few analytic test maps.
//! * [`observation`] — observation maps into `R^k` (POD projection, delay
//!   coordinates) and the snapshot-based POD basis.
//! * [`covering`] — hierarchical dyadic box collections together with the
//!   subdivision and continuation algorithms that grow them.
//! * [`dmaps`] — kernel construction, Markov normalization, spectral
//!   embedding and Nyström extension to out-of-sample points.
//! * [`dimension`] — kernel-sum scans for bandwidth tuning and intrinsic
//!   dimension estimation.
//!
//! All inner loops that are data-parallel (point mapping, kernel assembly,
//! scan sums, batch extension) go through [`exec`], which uses rayon when the
//! `parallel` feature (default) is enabled and plain loops otherwise. Results
//! are independent of the thread count: reductions are tree-shaped over
//! index-ordered intermediates, never racy accumulations.

pub mod covering;
pub mod dimension;
pub mod dmaps;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod io;
pub mod observation;
pub mod state;

pub use error::{Error, Result};
pub use state::{ObservedPoint, StateVector, SystemKind};
