//! Exact-arithmetic kernel for simplicial lattice cones and fans.
//!
//! The crate computes, over arbitrary-precision integers and rationals:
//!
//! - cone multiplicities, dual cones, support forms and sheds
//!   ([`cone`]);
//! - fans with star subdivision, regularity, terminality, roof concavity,
//!   completeness and coordinate projections ([`fan`]);
//! - generic desingularization machinery: the G-subdivision point with
//!   `l(x) = 1 + 1/mu`, iterated G-desingularization, minimal 2D
//!   resolutions and Hilbert bases of cone semigroups ([`desing`]);
//! - the fans of the rank-4 Drinfeld-module moduli threefold as exact
//!   functions of a prime power `q`, together with the subdivision
//!   schedules for its terminal, essential-smooth and compactified models
//!   ([`drinfeld`]).
//!
//! No floating point is used anywhere: every multiplicity, linear form and
//! lattice point is computed exactly, so equality checks are meaningful.

pub mod cone;
pub mod desing;
pub mod drinfeld;
pub mod fan;
pub mod linalg;

pub use cone::{Face, SimplicialCone, SupportForm};
pub use fan::{Concavity, Fan, SubdivisionSchedule, Wall};
pub use linalg::{Int, IntMatrix, LatticeVector, Rat};
