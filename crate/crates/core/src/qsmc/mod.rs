//! Secure aggregation of scaled local gradients.
//!
//! Every client turns beta_k g_k into integers mu_k = round(gamma beta_k g_k), splits
//! them into residues modulo pairwise-coprime d_i and masks each residue with its
//! Fourier-basis outcome from a shared d_i-level GHZ state. The masks sum to zero, so
//! the server's masked total is (sum_k mu_k) mod d_i; the Chinese remainder theorem
//! recovers the sum. Decoy particles guard each distribution against interception.

mod crt;
mod decoy;
mod ghz;
mod protocol;

pub use crt::{compute_shares, crt_reconstruct, scale_to_integers, CrtConfig, DEFAULT_MODULI};
pub use decoy::{
    detection_probability, intercept_error_probability, run_decoy_check, run_decoy_check_with, Attacker, Basis,
    DecoyCheck,
};
pub use ghz::{ghz_fourier_distribution, run_ghz_round, GhzBackend, GhzRound, GhzSource, DEFAULT_STATE_CAP};
pub use protocol::{
    aggregate_residue, run_protocol, weights_from_counts, AbortRecord, Interception, Message, MessageKind,
    Participant, ProtocolConfig, ProtocolTranscript, RoundRecord, TAG_DECOY, TAG_GHZ, TAG_INTERCEPT,
};
