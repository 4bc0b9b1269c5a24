//! Monte Carlo toolkit for excited random walks (cookie walks) on the
//! integer lattice.
//!
//! A walker at site `z` consumes one cookie per visit: the `i`-th visit
//! steps right with probability `omega_z(i)`, and all visits beyond the
//! stack depth `M` are fair. The single parameter
//! `delta = E[sum_i (2 omega(i) - 1)]` (average total drift per site)
//! governs the asymptotic regime: recurrence, zero-speed transience,
//! ballisticity with stable fluctuations, or Gaussian fluctuations.
//!
//! The crate simulates three coupled layers and cross-checks them
//! statistically:
//!
//! * [`walk`] — the walk itself via the coin-toss construction, with
//!   first-passage times `T_n` and backtrack counts `D_{n,k}`;
//! * [`branching`] — the branching process `V` with one immigrant per
//!   generation whose law matches the reversed backtrack array, with
//!   extinction time `sigma_0` and total progeny `S`;
//! * [`diffusion`] — the approximating diffusion
//!   `dY = (1 - delta) dt + sqrt(2 Y) dB` absorbed at zero.
//!
//! [`stats`] holds the estimators (tail indices, two-sample KS, stable-law
//! characteristic function, passage-time normalization) and [`harness`]
//! wires everything into reproducible, seedable experiments behind the
//! `erw` command-line binary.
//!
//! Start with the `examples/` directory: each example is a small runnable
//! tour of one capability (`cargo run --release --example walk_basics`).

pub mod branching;
pub mod diffusion;
pub mod env;
pub mod harness;
pub mod rng;
pub mod stats;
pub mod walk;

pub use env::{CookieStack, Environment, EnvironmentLaw, Regime};
