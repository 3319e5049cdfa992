//! Analytical engine and slot-level Monte Carlo simulator for hybrid
//! device-to-device (D2D) resource allocation in a single cellular uplink cell.
//!
//! A cell hosts K cellular users (CUEs), each owning one uplink channel, and
//! M D2D pairs (DUEs) that may reuse those channels non-orthogonally. Power
//! control at the DUE is distributed and reacts to per-slot fading feedback;
//! mode selection (direct D2D vs. relaying through the base station) and
//! channel pairing are decided centrally once per epoch from topology-level
//! statistics.
//!
//! Modules:
//! - [`system`]: scenario constants, topology generation, link budgets, fading.
//! - [`policy`]: the maximum-reward (MR) power policy and its region structure.
//! - [`throughput`]: expected DUE/CUE throughput, closed forms, optimal blockage weight.
//! - [`allocation`]: epoch-level throughput matrix, Hungarian matching, GEO baseline.
//! - [`sim`]: slot-level Monte Carlo engine and campaign aggregation.

pub mod allocation;
pub mod policy;
pub mod sim;
pub mod system;
pub mod throughput;
