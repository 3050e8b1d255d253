//! Voronoi-area p-value combination for testing the disjunction hypothesis.
//!
//! Each gene (or hypothesis) carries a vector of p-values, one per measured
//! aspect. Under the *disjunction* null at least one component is null, so
//! rejection requires evidence that **all** components are non-null. This
//! crate combines bivariate (and trivariate) p-vectors into a single value
//! per gene by
//!
//! 1. ranking the p-vectors by distance from the origin under one of four
//!    ordering schemes ([`ordering`]),
//! 2. tessellating the unit square with the Voronoi diagram of the p-vectors
//!    and taking cell areas as planar spacings ([`geometry`]),
//! 3. accumulating areas in rank order into combined values `T` and probit
//!    transforms `Z` ([`pipeline`]),
//!
//! and then declaring significance with Benjamini-Hochberg, a spacings
//! variant of BH, or empirical-null left-tail FDR estimates from a penalized
//! Gaussian mixture ([`mtp`], [`empnull`]).
//!
//! [`highdim`] extends the combination to 3D p-vectors via pairwise
//! projection areas, [`periodicity`] computes Fisher's exact G test for
//! expression time courses, and [`simulate`] is a seeded Monte Carlo harness
//! scoring realized FDR and power (1-NDR) for all procedures.
//!
//! The crate is data-parallel over cells, replicates and genes when built
//! with the `parallel` feature (default, via rayon); without it every entry
//! point falls back to the equivalent sequential loop. Results are
//! bitwise-identical either way.

pub mod empnull;
pub mod error;
pub mod geometry;
pub mod highdim;
pub mod io;
pub mod mtp;
pub mod numeric;
pub mod ordering;
pub mod periodicity;
pub mod pipeline;
pub mod runtime;
pub mod simulate;

pub use error::{Error, Result};
pub use geometry::{PVector, PVector2, PVector3, Tessellation};
pub use ordering::{OrderingScheme, Ranking};
pub use pipeline::CombinedRecord;
