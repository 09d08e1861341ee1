//! Motion-capture-driven emulation of the dynamic wireless channel around
//! the human body, coupled to a deterministic packet-level simulator for
//! evaluating adaptive WBAN reconfiguration policies.
//!
//! The pipeline: parse a BVH motion clip ([`bvh`]), reconstruct world-space
//! joint trajectories and fit the torso cylinder ([`kinematics`]), split each
//! Tx-Rx path into free-space and body-surface portions and evaluate the
//! 2.4 GHz link loss with per-frame shadowing ([`channel`]), quantify channel
//! stability ([`analytics`]), and feed the emulated trace into a packet
//! simulator ([`netsim`]) driven by fixed-power or adaptive policies
//! ([`adaptive`]): IMU-peak transmission scheduling, EMG-controlled and
//! heart-rate-controlled transmission power.
//!
//! Each major capability has a runnable example under `examples/`; the
//! `wbansim` binary exposes the same pipeline as `emulate`, `analyze`,
//! `simulate`, and `report` subcommands driven by a TOML scenario file
//! ([`scenario`]).

pub mod adaptive;
pub mod analytics;
pub mod bvh;
pub mod channel;
pub mod cli;
pub mod error;
pub mod kinematics;
pub mod netsim;
pub mod scenario;
pub mod signals;
pub mod synth;

pub use error::{Error, Result};
