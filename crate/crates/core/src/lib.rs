//! Cat codes over the lossy bosonic channel.
//!
//! * [`fock`]: truncated number-basis states and operators, cat states.
//! * [`channel`]: loss, recovery, and the effective 4×4 logical channel
//!   (exact Fock composition, closed form, Pauli approximation).
//! * [`metrics`]: diamond distance to the identity and analytic envelopes.
//! * [`optimize`]: Lambert W, closed-form optimal amplitude, (α, s) search.
//! * [`repeater`]: one-way repeater chains, QBERs and secure key rate per mode.

pub mod channel;
pub mod error;
pub mod fock;
pub mod metrics;
pub mod optimize;
pub mod repeater;
pub mod search;

pub use error::{Error, Result};
