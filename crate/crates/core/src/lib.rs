//! Settings-register map compiler and verification workbench.
//!
//! A [`spec::RegisterMapSpec`] describes the bus, clock domains, slaves and
//! their settings words. From it the crate can
//!
//! * elaborate a structural model for a global (optionally registered,
//!   synchronized and locally copied) or a distributed bus architecture
//!   ([`elaborate`]),
//! * simulate the Ready-gated configuration bus across clock domains and
//!   module swaps ([`sim`]),
//! * emit SystemVerilog for the elaborated design ([`emit`]),
//! * estimate registers, ALMs, ALUTs and fmax with a calibrated model
//!   ([`cost`]).

pub mod cost;
pub mod elaborate;
pub mod emit;
pub mod protocol;
pub mod sim;
pub mod spec;

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
