//! Synthetic data: coloured noise, bursts, line interference, injection.

mod bursts;
mod inject;
mod noise;
mod psd_model;
pub mod rng;

pub use bursts::{
    awgn_burst, burst, line_interference, sine_burst, BurstKind, BurstSpec, DEFAULT_AWGN_SIGMA_RATIO,
    DEFAULT_DECAY_TAU, DEFAULT_LINE_DELTA, DEFAULT_SINE_SIGMA_RATIO,
};
pub use inject::inject;
pub use noise::{colored_noise, modulate_std};
pub use psd_model::{Line, PsdModel, Segment};
