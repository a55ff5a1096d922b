// SPDX-License-Identifier: Apache-2.0

//! `tzlab` is a gate-level netlist workbench for studying zero-footprint
//! hardware trojans.
//!
//! The attacker side salvages power and area by tying near-constant nets to
//! constants ([`attack::salvage`]) and spends the freed budget on a
//! counter-triggered trojan ([`attack::inject`]). The defender side runs
//! stuck-at test suites ([`atpg`]) and threshold-based power/area screening
//! ([`detector`]). Supporting machinery covers `.bench` netlists
//! ([`netlist`]), bit-parallel simulation ([`logicsim`]), signal
//! probabilities ([`probability`]) and a cell-library cost model
//! ([`costmodel`]).
//!
//! See the crate's `examples/` directory for one runnable walkthrough per
//! capability.

pub mod atpg;
pub mod attack;
pub mod benchmarks;
pub mod cli;
pub mod costmodel;
pub mod detector;
pub mod logicsim;
pub mod netlist;
pub mod probability;

pub use netlist::{parse_bench, write_bench, Gate, GateKind, Netlist, NetlistError};
