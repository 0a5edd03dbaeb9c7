//! Simulation configuration, read from TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{load_profile, ChannelModel, ChannelProfile, SpatialConfig};
use crate::error::{invalid, Error, Result};
use crate::modem::Constellation;
use crate::ofdm::OfdmParams;
use crate::spreading::MappingScheme;
use crate::stbc::Detector;

/// Serde adapter for types with `FromStr` and `Display` string forms.
mod as_str {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coding {
    None,
    TurboR12,
}

impl Coding {
    pub fn rate(self) -> f64 {
        match self {
            Coding::None => 1.0,
            Coding::TurboR12 => 0.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Coding::None => "none",
            Coding::TurboR12 => "turbo_r12",
        }
    }
}

impl fmt::Display for Coding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Coding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Coding::None),
            "turbo_r12" => Ok(Coding::TurboR12),
            other => Err(invalid(format!(
                "unknown coding {other:?}, expected none or turbo_r12"
            ))),
        }
    }
}

/// Where the MMSE detector gets its SNR estimate from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// The true chip SNR of the current Eb/N0 point.
    Genie,
    /// A fixed linear SNR.
    Fixed(f64),
}

impl fmt::Display for GammaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaMode::Genie => f.write_str("genie"),
            GammaMode::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for GammaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "genie" {
            return Ok(GammaMode::Genie);
        }
        let value = s
            .strip_prefix("fixed:")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| invalid(format!("gamma_mode {s:?} is not genie or fixed:<value>")))?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(invalid(format!("fixed gamma {value} must be positive")));
        }
        Ok(GammaMode::Fixed(value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Flat,
    BlockRayleigh,
    Geometric,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Flat => "flat",
            ChannelKind::BlockRayleigh => "block_rayleigh",
            ChannelKind::Geometric => "geometric",
        })
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(ChannelKind::Flat),
            "block_rayleigh" => Ok(ChannelKind::BlockRayleigh),
            "geometric" => Ok(ChannelKind::Geometric),
            other => Err(invalid(format!(
                "unknown channel_model {other:?}, expected flat, block_rayleigh or geometric"
            ))),
        }
    }
}

/// Every simulation parameter. Missing keys take the defaults of the
/// reference outdoor configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    #[serde(with = "as_str")]
    pub chip_mapping: MappingScheme,
    /// `St` for the 2D mappings; ignored by 1D ones.
    pub time_spreading: usize,
    #[serde(with = "as_str")]
    pub detector: Detector,
    #[serde(with = "as_str")]
    pub gamma_mode: GammaMode,

    pub fft_size: usize,
    pub used_carriers: usize,
    pub guard_samples: usize,
    pub sampling_freq_hz: f64,
    /// Idle time closing every frame, used only for throughput reporting.
    pub frame_guard_us: f64,

    #[serde(with = "as_str")]
    pub channel_model: ChannelKind,
    /// Subcarriers sharing one gain in the block Rayleigh model.
    pub rayleigh_block_subcarriers: usize,
    /// `bran_e` for the built-in profile, otherwise a profile file path.
    pub channel_profile: String,
    pub bs_spacing_lambda: f64,
    pub ms_spacing_lambda: f64,
    pub velocity_kmh: f64,
    pub carrier_freq_hz: f64,
    pub num_subrays: usize,
    pub angle_spread_bs_deg: f64,
    pub angle_spread_ms_deg: f64,

    pub nt: usize,
    pub nr: usize,

    #[serde(with = "as_str")]
    pub coding: Coding,
    pub turbo_iterations: usize,
    pub interleaver_seed: u64,
    pub log_map: bool,
    #[serde(with = "as_str")]
    pub modulation: Constellation,

    pub users: usize,
    pub lc: usize,
    pub frame_symbols: usize,

    #[serde(alias = "ebn0")]
    pub ebn0_db: Vec<f64>,
    pub max_frames: u64,
    pub target_bit_errors: u64,
    /// Bits that must be simulated before the error target may stop a point.
    pub min_bits: u64,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let ofdm = OfdmParams::default();
        let spatial = SpatialConfig::default();
        Self {
            chip_mapping: MappingScheme::OneDb,
            time_spreading: 2,
            detector: Detector::Mmse,
            gamma_mode: GammaMode::Genie,
            fft_size: ofdm.fft_size,
            used_carriers: ofdm.used_carriers,
            guard_samples: ofdm.guard_samples,
            sampling_freq_hz: ofdm.sampling_freq,
            frame_guard_us: 20.8,
            channel_model: ChannelKind::Geometric,
            rayleigh_block_subcarriers: 1,
            channel_profile: "bran_e".into(),
            bs_spacing_lambda: spatial.bs_spacing,
            ms_spacing_lambda: spatial.ms_spacing,
            velocity_kmh: 60.0,
            carrier_freq_hz: spatial.carrier_freq,
            num_subrays: spatial.num_subrays,
            angle_spread_bs_deg: spatial.angle_spread_bs_deg,
            angle_spread_ms_deg: spatial.angle_spread_ms_deg,
            nt: 2,
            nr: 2,
            coding: Coding::None,
            turbo_iterations: crate::coding::DEFAULT_ITERATIONS,
            interleaver_seed: 0,
            log_map: false,
            modulation: Constellation::Qpsk,
            users: 32,
            lc: 32,
            frame_symbols: 30,
            ebn0_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            max_frames: 20_000,
            target_bit_errors: 1000,
            min_bits: 0,
            master_seed: 1,
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm().validate()?;
        self.spatial().validate()?;
        if !(1..=2).contains(&self.nt) || !(1..=2).contains(&self.nr) {
            return Err(invalid(format!(
                "nt={} and nr={} must each be 1 or 2",
                self.nt, self.nr
            )));
        }
        if !self.lc.is_power_of_two() || self.lc < 2 {
            return Err(invalid(format!("lc={} must be a power of two", self.lc)));
        }
        if self.users == 0 || self.users > self.lc {
            return Err(invalid(format!(
                "users={} must be in 1..={}",
                self.users, self.lc
            )));
        }
        if self.frame_symbols == 0 || !self.frame_symbols.is_multiple_of(2) {
            return Err(invalid(format!(
                "frame_symbols={} must be even and positive",
                self.frame_symbols
            )));
        }
        if self.turbo_iterations == 0 {
            return Err(invalid("turbo_iterations must be positive"));
        }
        if self.rayleigh_block_subcarriers == 0 {
            return Err(invalid("rayleigh_block_subcarriers must be positive"));
        }
        if self.max_frames == 0 {
            return Err(invalid("max_frames must be positive"));
        }
        if self.ebn0_db.iter().any(|v| !v.is_finite()) {
            return Err(invalid("ebn0_db values must be finite"));
        }
        if !(self.frame_guard_us >= 0.0) {
            return Err(invalid("frame_guard_us must be non-negative"));
        }
        Ok(())
    }

    pub fn ofdm(&self) -> OfdmParams {
        OfdmParams {
            fft_size: self.fft_size,
            used_carriers: self.used_carriers,
            guard_samples: self.guard_samples,
            sampling_freq: self.sampling_freq_hz,
        }
    }

    pub fn spatial(&self) -> SpatialConfig {
        SpatialConfig {
            nt: self.nt,
            nr: self.nr,
            num_subrays: self.num_subrays,
            angle_spread_bs_deg: self.angle_spread_bs_deg,
            angle_spread_ms_deg: self.angle_spread_ms_deg,
            bs_spacing: self.bs_spacing_lambda,
            ms_spacing: self.ms_spacing_lambda,
            velocity: self.velocity_kmh / 3.6,
            carrier_freq: self.carrier_freq_hz,
        }
    }

    pub fn channel_model(&self) -> ChannelModel {
        match self.channel_model {
            ChannelKind::Flat => ChannelModel::Flat,
            ChannelKind::BlockRayleigh => ChannelModel::BlockRayleigh {
                block_subcarriers: self.rayleigh_block_subcarriers,
            },
            ChannelKind::Geometric => ChannelModel::Geometric,
        }
    }

    pub fn profile(&self) -> Result<ChannelProfile> {
        match self.channel_model {
            ChannelKind::Geometric => load_profile(&self.channel_profile),
            _ => Ok(ChannelProfile::single_tap()),
        }
    }

    /// Time positions of one STBC layer: Alamouti pairs, or OFDM symbols
    /// without STBC.
    pub fn layer_slots(&self) -> usize {
        if self.nt == 2 {
            self.frame_symbols / 2
        } else {
            self.frame_symbols
        }
    }

    pub fn layers(&self) -> usize {
        self.nt
    }

    pub fn code_rate(&self) -> f64 {
        self.coding.rate()
    }

    /// `N0 = 1 / (R m Eb/N0)` for unit transmit energy per subcarrier use.
    pub fn noise_variance_for(&self, ebn0_db: f64) -> f64 {
        noise_variance_for(ebn0_db, self.modulation.bits_per_symbol(), self.code_rate())
    }

    /// Uncoded bit rate of the whole multiplex over OFDM symbols, ignoring
    /// frame guard time.
    pub fn symbol_bit_rate(&self) -> f64 {
        let ofdm = self.ofdm();
        let load = self.users as f64 / self.lc as f64;
        self.used_carriers as f64 * self.modulation.bits_per_symbol() as f64 * load
            / ofdm.symbol_duration()
    }

    /// Bit rate after the frame guard time is accounted for.
    pub fn framed_bit_rate(&self) -> f64 {
        let frame = self.frame_symbols as f64 * self.ofdm().symbol_duration();
        self.symbol_bit_rate() * frame / (frame + self.frame_guard_us * 1e-6)
    }
}

/// `N0 = 1 / (R m 10^(ebn0/10))`.
pub fn noise_variance_for(ebn0_db: f64, bits_per_symbol: usize, rate: f64) -> f64 {
    1.0 / (rate * bits_per_symbol as f64 * 10f64.powf(ebn0_db / 10.0))
}
