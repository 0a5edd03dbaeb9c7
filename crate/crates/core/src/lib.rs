#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Link-level simulator for downlink Alamouti space-time block coded MC-CDMA.
//!
//! The transmit chain spreads every user's symbols with orthogonal
//! Walsh-Hadamard codes, places the chips on the time-frequency grid with one
//! of four chip-mapping schemes, applies Alamouti coding per subcarrier across
//! two OFDM symbols, and sends the result through a time-varying geometric
//! MIMO channel. The receiver applies per-subcarrier ZF or MMSE single-user
//! detection, despreads, and optionally runs a rate-1/2 turbo decoder.
//!
//! Modules map one-to-one onto the signal chain:
//!
//! * [`spreading`] Walsh-Hadamard codes, fast transform, chip mapping
//! * [`stbc`] Alamouti encoding, equalizer coefficients, combining
//! * [`ofdm`] subcarrier allocation and cyclic-prefix OFDM
//! * [`channel`] power-delay profiles, sub-ray MIMO channel, AWGN
//! * [`coding`] turbo code, puncturing, channel interleaver
//! * [`modem`] Gray QPSK/16QAM mapping with hard and soft demapping
//! * [`sim`] configuration, frame chain, parallel sweeps and reports

pub mod channel;
pub mod coding;
mod error;
pub mod modem;
pub mod ofdm;
pub mod rng;
pub mod sim;
pub mod spreading;
pub mod stbc;

pub use error::{Error, Result};
pub use num_complex::Complex64;
