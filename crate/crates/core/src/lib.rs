//! Bootstrap percolation on the Erdős–Rényi graph G(n,p).
//!
//! The crate simulates the process through its time-rescaled mark process
//! (one used vertex per time step, negative-binomial activation times), on
//! explicit graphs, and through three dynamical variants; it also computes
//! the exact law of the final size for small `n` and the threshold
//! quantities that describe the large-`n` behaviour.

pub mod dynamics;
pub mod error;
pub mod exact;
pub mod graph;
pub mod markproc;
pub mod montecarlo;
pub mod params;
pub mod seed;
pub mod theory;

pub use error::{Error, Result};
pub use params::{ActivationTime, Params, TrialOutcome, DEFAULT_BIG_THRESHOLD};
pub use seed::{derive_stream, Seed, TrialRng};
