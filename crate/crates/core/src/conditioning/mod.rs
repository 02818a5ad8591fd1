//! Band-pass filtering, whitening, and spectral-line detection.

mod butterworth;
mod lines;
mod whiten;

pub use butterworth::{butterworth_bandpass, Bandpass, Biquad, FilterMode};
pub use lines::{detect_lines, merge_bands, LineBand, DEFAULT_LINE_THRESHOLD, DEFAULT_MEDIAN_WINDOW_HZ};
pub use whiten::{whiten, whiten_full, whiten_localized, WhitenMode, PSD_FLOOR_FRACTION};

pub(crate) use whiten::floored_psd_grid;
