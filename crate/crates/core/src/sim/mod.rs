//! Simulation driver: configuration, per-frame chain, sweeps and reports.

pub mod config;
pub mod frame;
pub mod report;
pub mod sweep;

use std::fmt::Write as _;

pub use config::{noise_variance_for, ChannelKind, Coding, GammaMode, SimConfig};
pub use frame::{FrameEngine, FrameResult, SnrMeasurement};
pub use report::{read_csv, rows, summary, write_csv, write_csv_file, ResultRow, CSV_HEADER};
pub use sweep::{run_point, sweep, sweep_with_progress, ErrorStats, PointResult};

use crate::error::Result;

/// Derived physical-layer quantities of a configuration.
pub fn info(cfg: &SimConfig) -> Result<String> {
    cfg.validate()?;
    let ofdm = cfg.ofdm();
    let engine = FrameEngine::new(cfg)?;
    let mapping = engine.mapping();
    let useful = ofdm.useful_duration();
    let symbol = ofdm.symbol_duration();
    let frame = cfg.frame_symbols as f64 * symbol;
    let mut out = String::new();
    let mut line = |label: &str, value: String| {
        let _ = writeln!(out, "{label:<32} {value}");
    };
    line(
        "subcarrier spacing",
        format!("{:.2} kHz", ofdm.subcarrier_spacing() / 1e3),
    );
    line("useful symbol duration", format!("{:.3} us", useful * 1e6));
    line(
        "guard interval",
        format!("{:.3} us", ofdm.guard_duration() * 1e6),
    );
    line("total symbol duration", format!("{:.3} us", symbol * 1e6));
    line(
        "occupied bandwidth",
        format!("{:.2} MHz", ofdm.occupied_bandwidth() / 1e6),
    );
    line(
        "guard spectral efficiency loss",
        format!("{:.1} %", 100.0 * ofdm.guard_duration() / symbol),
    );
    line(
        "guard power efficiency loss",
        format!("{:.2} dB", 10.0 * (symbol / useful).log10()),
    );
    line(
        "frame duration",
        format!("{:.4} ms + {} us guard", frame * 1e3, cfg.frame_guard_us),
    );
    line(
        "max Doppler",
        format!("{:.1} Hz", cfg.spatial().max_doppler()),
    );
    line(
        "spreading",
        format!(
            "{} Lc={} (Sf={} St={}), {} users",
            cfg.chip_mapping,
            cfg.lc,
            mapping.freq_spread(),
            mapping.time_spread(),
            cfg.users
        ),
    );
    line(
        "bits per user and frame",
        format!(
            "{} coded, {} information",
            engine.coded_bits_per_user(),
            engine.info_bits_per_user()
        ),
    );
    let rate = cfg.code_rate();
    line(
        "throughput",
        format!("{:.2} Mbit/s", cfg.symbol_bit_rate() * rate / 1e6),
    );
    line(
        "throughput with frame guard",
        format!("{:.2} Mbit/s", cfg.framed_bit_rate() * rate / 1e6),
    );
    Ok(out)
}
