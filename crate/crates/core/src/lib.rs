//! Local permutations of Bell-state products as binary symplectic
//! matrices, and multi-copy entanglement distillation built on them.
//!
//! Bit layout: a vector over n pairs has 2n bits; pair j (0-based) holds
//! the phase bit at position 2j and the flip bit at 2j+1, position 0 being
//! the leftmost character of the text form. Documentation that counts rows
//! from 1 (rows 2m+2, …, 2n) maps to 0-based index minus one.

pub mod bellstate;
pub mod error;
pub mod gf2;
pub mod pipeline;
pub mod protocol;
pub mod search;
pub mod symplectic;
pub mod verify;

pub use bellstate::{werner, BellDiagonal, JointBellState, SVector, SinglePairAffineMap};
pub use error::{Error, Result};
pub use gf2::{BitMatrix, PauliVector, Subspace, SymplecticForm, SymplecticMatrix};
pub use pipeline::{optimize_schedule, run_recurrence, Schedule, YieldResult};
pub use protocol::{
    apply_step, brute_force_oracle, dej_step, make_step, proposed_step, DistillationStep,
    StepOutcome,
};
pub use search::{best_step, enumerate_isotropic, Objective, SearchReport};
pub use symplectic::{Transposition, Transvection, TwoQubitOp};
