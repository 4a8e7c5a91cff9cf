//! Comparison decoders: beam search, diverse beam search, nucleus and
//! typical sampling, and beam-sample hybrids, all behind the same model
//! interface and budget ledger as the search decoders.

pub mod beam;
pub mod sampling;

pub use beam::{beam_sample_decode, beam_search, diverse_beam_search, BeamConfig};
pub use sampling::{
    nucleus_filter, sample_decode, sample_decode_scored, typical_filter, TokenFilter, TokenProb,
};
