//! Haar-random process tensors from closed system-environment dynamics.
//!
//! A system S repeatedly interacts with an environment E through Haar-random
//! unitaries while half of a fresh maximally entangled pair is swapped into S
//! before each step. Tracing out E at the end leaves the Choi state of the
//! resulting multi-time process. This crate builds those Choi states, scores
//! how far they sit from Markovian references, and checks the Monte-Carlo
//! statistics against exact averages computed with the Weingarten calculus.
//!
//! Module map:
//! - [`linalg`]: dense complex matrices, labeled tensor factors, spectra.
//! - [`haar`]: seeded Haar-unitary and Haar-state sampling.
//! - [`process`]: circuit propagation and Choi-state assembly.
//! - [`measures`]: non-Markovianity estimates on a Choi state.
//! - [`symgroup`]: exact characters and the Weingarten function.
//! - [`analytic`]: closed-form ensemble averages and distance bounds.
//! - [`concentration`]: tail-probability experiments against those bounds.

pub mod analytic;
pub mod concentration;
pub mod haar;
pub mod linalg;
pub mod measures;
pub mod process;
pub mod symgroup;
