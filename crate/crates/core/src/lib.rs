//! Compositional design-space exploration for multi-component hardware
//! accelerators.
//!
//! The crate splits the exploration flow into the stages a system designer
//! would run in order:
//!
//! 1. [`characterize`] drives a synthesis backend over each component's knob
//!    space (loop unrolls, memory ports) and extracts the design-space
//!    regions that bound the Pareto-optimal implementations.
//! 2. [`tmg`] models the assembled system as a timed marked graph and
//!    derives its maximum sustainable throughput from the minimum cycle
//!    time.
//! 3. [`planner`] solves a throughput-constrained cost-minimization LP over
//!    the graph to assign per-component latency budgets along a swept
//!    Pareto curve.
//! 4. [`mapper`] inverts the latency budgets back into knob settings via a
//!    diminishing-returns model and triggers the few extra syntheses that
//!    are actually needed.
//!
//! [`backend`] abstracts the synthesis tool pair (HLS + memory generator)
//! behind a deterministic simulated model and a table-replay variant, with
//! an invocation ledger that memoizes every call. [`model`] holds the shared
//! value types and the Pareto utilities.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature for embedded or sandboxed use. File formats, orchestration
//! and the command-line interface live in the companion `cosmos-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod backend;
pub mod characterize;
pub mod mapper;
mod math;
pub mod model;
pub mod planner;
pub mod tmg;
