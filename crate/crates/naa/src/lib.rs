//! Simulation and detection library for cooperative ransomware detection.
//!
//! The crate models a fleet of machines, each running a local detector over
//! its own file-operation stream, plus two network mechanisms that let
//! machines corroborate suspicion before alarming the user: an ant-colony
//! style WAN inquiry (`acom`) and a LAN broadcast (`bm`). Everything runs on
//! a deterministic discrete-event simulator (`netsim`), and `harness` drives
//! fleet-scale sweeps and emits result tables.

pub mod acom;
pub mod bm;
pub mod detector;
pub mod fsmodel;
pub mod harness;
pub mod netsim;

/// Identifier of a machine in the simulated fleet.
pub type NodeId = usize;
