//! Koopman operator approximation for dynamical systems with finite-group
//! symmetries.
//!
//! The crate covers the full pipeline:
//!
//! * [`groups`] — finite groups (cyclic, dihedral, direct products), their
//!   irreducible representations, concrete matrix actions, projection
//!   operators, and isotypic change-of-basis transforms.
//! * [`dynamics`] — coupled Duffing oscillator networks, fixed-step RK4
//!   integration, snapshot sampling, and symmetry closure of snapshot sets.
//! * [`dictionaries`] — observable dictionaries (radial basis functions,
//!   monomials, coordinates), group closure, and symmetry-adapted bases.
//! * [`edmd`] — extended dynamic mode decomposition, dense and
//!   block-diagonal, with eigenvalues, eigenfunctions, and Koopman modes.
//! * [`kdmd`] — kernel DMD, dense and block-diagonal.
//! * [`analysis`] — block-structure extraction, interaction prediction for
//!   mismatched symmetry assumptions, symmetry inference, and sensor-noise
//!   ensembles.
//!
//! All heavy inner loops (dictionary evaluation, trajectory sampling, kernel
//! assembly, per-block eigensolves, noise realizations) run data-parallel
//! through rayon when the default `parallel` feature is enabled and fall back
//! to sequential loops otherwise. Sequential entry points (`*_seq`) are kept
//! public so the two paths can be compared directly; see `benches/parallel.rs`.

pub mod analysis;
pub mod dictionaries;
pub mod dynamics;
pub mod edmd;
pub mod groups;
pub mod kdmd;
pub mod linalg;
pub mod par;

pub use num_complex::Complex64;
