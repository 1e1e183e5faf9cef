//! LDPC code design and joint erasure decoding for the two-user
//! frame-asynchronous unsourced binary adder channel.

pub mod channel;
pub mod codes;
pub mod codespec;
pub mod de;
pub mod decoder;
pub mod degree;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod lp;
pub mod optimizer;
pub mod rlc;
pub mod tanner;

pub use error::{Error, Result};
