//! Frequency-domain matched filter and short-window normalized cross-correlation.

mod ccf;
mod matched_filter;
mod running;

pub use ccf::{decorrelation_time, normalized_ccf, peak_ratio_r3, CcfResult, R3_THRESHOLD};
pub use matched_filter::{
    matched_filter, reweight_snr, reweighted_snr, sigma_norm, sigma_norm_on_grid, MfConfig, MfMode, Peak, Reweight,
    SnrSeries, DEFAULT_BLOCK_LEN, DEFAULT_CHI2_BINS, SNR_THRESHOLD,
};
pub use running::{running_window_ccf, write_running_csv, RunningPoint};
