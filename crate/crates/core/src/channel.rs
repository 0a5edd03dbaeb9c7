//! Time-varying wideband MIMO channel built from a tapped delay line whose
//! taps are sums of angularly spread sub-rays.
//!
//! Each tap `l` of the power-delay profile is split into `M` sub-rays of
//! power `P_l / M`. Every sub-ray has its own departure angle at the base
//! station, arrival angle at the mobile, random phase, and Doppler shift
//! `f_D cos(aoa - travel_dir)`. The response of antenna pair `(t, r)` is
//!
//! ```text
//! h_tr(f, t) = sum_l sum_m sqrt(P_l/M) a_t(aod) a_r(aoa) exp(j(2 pi f_m t + phi)) exp(-j 2 pi f tau_l)
//! ```
//!
//! with uniform linear arrays `a_i(theta) = exp(j 2 pi d i sin(theta))`.
//!
//! Angles follow the spatial channel model recipe: a mean direction per
//! realization (inside a 120 degree sector at the base station, anywhere
//! around the mobile), Gaussian per-tap mean angles around it and Laplacian
//! sub-ray offsets inside each tap. The composite spread is split evenly in
//! standard deviation between the two levels.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::rng::{substream, Domain};
use crate::spreading::ResourceGrid;
use crate::stbc::ChannelMatrix;

/// Propagation speed used for wavelengths and Doppler.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Per-path share of the composite angle spread (standard deviations).
const INTRA_PATH_FRACTION: f64 = 0.5;

/// Half width of the base-station sector the mean departure angle lies in.
const BS_SECTOR_HALF_WIDTH: f64 = PI / 3.0;

const BRAN_E: &str = include_str!("../profiles/bran_e.profile");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Seconds.
    pub delay: f64,
    /// Linear, normalized so all taps sum to one.
    pub power: f64,
}

/// Average power-delay profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    taps: Vec<Tap>,
}

impl ChannelProfile {
    /// Validates the taps and normalizes their total power to one.
    pub fn new(mut taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidProfile("profile has no taps".into()));
        }
        for (i, tap) in taps.iter().enumerate() {
            if !(tap.delay >= 0.0) || !tap.delay.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "tap {i} has invalid delay {}",
                    tap.delay
                )));
            }
            if !(tap.power > 0.0) || !tap.power.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "tap {i} has invalid power {}",
                    tap.power
                )));
            }
        }
        if let Some(i) = taps.windows(2).position(|w| w[1].delay < w[0].delay) {
            return Err(Error::InvalidProfile(format!(
                "delays decrease at tap {}",
                i + 1
            )));
        }
        let total: f64 = taps.iter().map(|t| t.power).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "total power {total} cannot be normalized"
            )));
        }
        taps.iter_mut().for_each(|t| t.power /= total);
        Ok(Self { taps })
    }

    /// Parses `delay_ns power_db` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut taps = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |msg: String| Error::ProfileParse { line: n + 1, msg };
            if fields.len() != 2 {
                return Err(parse_err(format!(
                    "expected `delay_ns power_db`, found {line:?}"
                )));
            }
            let delay_ns: f64 = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad delay {:?}", fields[0])))?;
            let power_db: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad power {:?}", fields[1])))?;
            taps.push(Tap {
                delay: delay_ns * 1e-9,
                power: 10f64.powf(power_db / 10.0),
            });
        }
        Self::new(taps)
    }

    /// The shipped 17-path BRAN E profile.
    pub fn bran_e() -> Self {
        Self::parse(BRAN_E).expect("shipped profile is valid")
    }

    /// Flat channel: one tap at zero delay.
    pub fn single_tap() -> Self {
        Self {
            taps: vec![Tap {
                delay: 0.0,
                power: 1.0,
            }],
        }
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn mean_delay(&self) -> f64 {
        self.taps.iter().map(|t| t.power * t.delay).sum()
    }

    pub fn rms_delay_spread(&self) -> f64 {
        let mean = self.mean_delay();
        let second: f64 = self.taps.iter().map(|t| t.power * t.delay * t.delay).sum();
        (second - mean * mean).max(0.0).sqrt()
    }

    pub fn max_delay(&self) -> f64 {
        self.taps.last().map_or(0.0, |t| t.delay)
    }

    /// Same profile with every delay moved by `offset` seconds.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(
            self.taps
                .iter()
                .map(|t| Tap {
                    delay: t.delay + offset,
                    power: t.power,
                })
                .collect(),
        )
    }
}

/// Reads a profile file. The name `bran_e` selects the built-in profile.
pub fn load_profile(path: impl AsRef<Path>) -> Result<ChannelProfile> {
    let path = path.as_ref();
    if path.as_os_str() == "bran_e" {
        return Ok(ChannelProfile::bran_e());
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    ChannelProfile::parse(&text).map_err(|e| e.context(format!("profile {}", path.display())))
}

/// Base station or mobile end of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bs,
    Ms,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bs" => Ok(Side::Bs),
            "ms" => Ok(Side::Ms),
            other => Err(invalid(format!(
                "unknown side {other:?}, expected bs or ms"
            ))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Bs => "bs",
            Side::Ms => "ms",
        })
    }
}

/// Antenna arrays, angular spreads and mobility.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialConfig {
    pub nt: usize,
    pub nr: usize,
    pub num_subrays: usize,
    pub angle_spread_bs_deg: f64,
    pub angle_spread_ms_deg: f64,
    /// Element spacing in wavelengths.
    pub bs_spacing: f64,
    pub ms_spacing: f64,
    /// m/s.
    pub velocity: f64,
    pub carrier_freq: f64,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            nt: 2,
            nr: 2,
            num_subrays: 20,
            angle_spread_bs_deg: 21.4,
            angle_spread_ms_deg: 68.0,
            bs_spacing: 10.0,
            ms_spacing: 0.5,
            velocity: 60.0 / 3.6,
            carrier_freq: 5.0e9,
        }
    }
}

impl SpatialConfig {
    pub fn max_doppler(&self) -> f64 {
        max_doppler(self.velocity, self.carrier_freq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 || self.nr == 0 {
            return Err(invalid("antenna counts must be positive"));
        }
        if self.num_subrays == 0 {
            return Err(invalid("need at least one sub-ray per path"));
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if ![
            self.angle_spread_bs_deg,
            self.angle_spread_ms_deg,
            self.bs_spacing,
            self.ms_spacing,
            self.velocity,
            self.carrier_freq,
        ]
        .into_iter()
        .all(finite_nonneg)
        {
            return Err(invalid(
                "spatial parameters must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// Maximum Doppler shift `v fc / c` in Hz.
pub fn max_doppler(velocity: f64, carrier_freq: f64) -> f64 {
    velocity * carrier_freq / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ray {
    aod: f64,
    aoa: f64,
    phase: f64,
    doppler: f64,
}

/// One frozen draw of all sub-ray parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    delays: Vec<f64>,
    amplitudes: Vec<f64>,
    powers: Vec<f64>,
    /// Tap-major, `num_subrays` per tap.
    rays: Vec<Ray>,
    num_subrays: usize,
    nt: usize,
    nr: usize,
    bs_spacing: f64,
    ms_spacing: f64,
    max_doppler: f64,
    travel_dir: f64,
}

/// Draws a realization from the channel substream of `seed`.
pub fn realize(
    profile: &ChannelProfile,
    spatial: &SpatialConfig,
    seed: u64,
) -> Result<ChannelRealization> {
    let mut rng = substream(seed, 0, Domain::Channel);
    ChannelRealization::draw(profile, spatial, &mut rng)
}

fn laplace<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    let b = std_dev / std::f64::consts::SQRT_2;
    let u: f64 = rng.random::<f64>() - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

impl ChannelRealization {
    pub fn draw<R: Rng + ?Sized>(
        profile: &ChannelProfile,
        spatial: &SpatialConfig,
        rng: &mut R,
    ) -> Result<Self> {
        spatial.validate()?;
        let m = spatial.num_subrays;
        let as_bs = spatial.angle_spread_bs_deg.to_radians();
        let as_ms = spatial.angle_spread_ms_deg.to_radians();
        let inter = (1.0 - INTRA_PATH_FRACTION * INTRA_PATH_FRACTION).sqrt();
        let f_d = spatial.max_doppler();

        let travel_dir = rng.random_range(-PI..PI);
        let bs_center = rng.random_range(-BS_SECTOR_HALF_WIDTH..BS_SECTOR_HALF_WIDTH);
        let ms_center = rng.random_range(-PI..PI);

        let mut rays = Vec::with_capacity(profile.taps().len() * m);
        for _ in profile.taps() {
            let n_bs: f64 = StandardNormal.sample(rng);
            let n_ms: f64 = StandardNormal.sample(rng);
            let path_aod = bs_center + as_bs * inter * n_bs;
            let path_aoa = ms_center + as_ms * inter * n_ms;
            for _ in 0..m {
                let aod = path_aod + laplace(rng, as_bs * INTRA_PATH_FRACTION);
                let aoa = path_aoa + laplace(rng, as_ms * INTRA_PATH_FRACTION);
                let phase = rng.random_range(0.0..2.0 * PI);
                rays.push(Ray {
                    aod,
                    aoa,
                    phase,
                    doppler: f_d * (aoa - travel_dir).cos(),
                });
            }
        }
        Ok(Self {
            delays: profile.taps().iter().map(|t| t.delay).collect(),
            amplitudes: profile
                .taps()
                .iter()
                .map(|t| (t.power / m as f64).sqrt())
                .collect(),
            powers: profile.taps().iter().map(|t| t.power).collect(),
            rays,
            num_subrays: m,
            nt: spatial.nt,
            nr: spatial.nr,
            bs_spacing: spatial.bs_spacing,
            ms_spacing: spatial.ms_spacing,
            max_doppler: f_d,
            travel_dir,
        })
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn num_taps(&self) -> usize {
        self.delays.len()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn max_doppler(&self) -> f64 {
        self.max_doppler
    }

    pub fn travel_dir(&self) -> f64 {
        self.travel_dir
    }

    /// Doppler frequency of every sub-ray, tap-major.
    pub fn subray_dopplers(&self) -> impl Iterator<Item = f64> + '_ {
        self.rays.iter().map(|r| r.doppler)
    }

    /// Complex gain of every tap at time `t`, laid out `(tx, rx, tap)`.
    pub fn tap_gains(&self, t: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.nt * self.nr * self.num_taps()];
        self.tap_gains_into(t, &mut out);
        out
    }

    pub fn tap_gains_into(&self, t: f64, out: &mut [Complex64]) {
        let taps = self.num_taps();
        out.fill(Complex64::new(0.0, 0.0));
        let m = self.num_subrays;
        for (l, rays) in self.rays.chunks(m).enumerate() {
            let amp = self.amplitudes[l];
            for ray in rays {
                let base = 2.0 * PI * ray.doppler * t + ray.phase;
                let tx_step = 2.0 * PI * self.bs_spacing * ray.aod.sin();
                let rx_step = 2.0 * PI * self.ms_spacing * ray.aoa.sin();
                for tx in 0..self.nt {
                    for rx in 0..self.nr {
                        let phase = base + tx_step * tx as f64 + rx_step * rx as f64;
                        out[(tx * self.nr + rx) * taps + l] += Complex64::from_polar(amp, phase);
                    }
                }
            }
        }
    }

    /// `h_tr,k(t)` at the given baseband subcarrier frequencies.
    pub fn frequency_response(&self, t: f64, freqs: &[f64]) -> ChannelMatrix {
        let phasors = TapPhasors::new(&self.delays, freqs);
        let mut out = ChannelMatrix::zeros(self.nt, self.nr, freqs.len());
        self.frequency_response_with(t, &phasors, &mut out);
        out
    }

    /// Same as [`Self::frequency_response`] with precomputed delay phasors.
    pub fn frequency_response_with(&self, t: f64, phasors: &TapPhasors, out: &mut ChannelMatrix) {
        let taps = self.num_taps();
        let gains = self.tap_gains(t);
        let nc = phasors.nc;
        for tx in 0..self.nt {
            for rx in 0..self.nr {
                let g = &gains[(tx * self.nr + rx) * taps..(tx * self.nr + rx + 1) * taps];
                let link = out.link_mut(tx, rx);
                link.fill(Complex64::new(0.0, 0.0));
                for (l, gl) in g.iter().enumerate() {
                    let row = &phasors.values[l * nc..(l + 1) * nc];
                    for (h, p) in link.iter_mut().zip(row) {
                        *h += gl * p;
                    }
                }
            }
        }
    }

    /// Expected correlation between elements 0 and 1 on one side, averaged
    /// over the random sub-ray phases: `sum_l sum_m P_l/M a_1 a_0^*`.
    pub fn spatial_correlation(&self, side: Side) -> Complex64 {
        let m = self.num_subrays;
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, rays) in self.rays.chunks(m).enumerate() {
            let w = self.powers[l] / m as f64;
            for ray in rays {
                let phase = match side {
                    Side::Bs => 2.0 * PI * self.bs_spacing * ray.aod.sin(),
                    Side::Ms => 2.0 * PI * self.ms_spacing * ray.aoa.sin(),
                };
                acc += Complex64::from_polar(w, phase);
            }
        }
        acc
    }
}

/// `exp(-j 2 pi f_k tau_l)` for every tap and subcarrier.
#[derive(Debug, Clone)]
pub struct TapPhasors {
    nc: usize,
    values: Vec<Complex64>,
}

impl TapPhasors {
    pub fn new(delays: &[f64], freqs: &[f64]) -> Self {
        let mut values = Vec::with_capacity(delays.len() * freqs.len());
        for &tau in delays {
            values.extend(
                freqs
                    .iter()
                    .map(|&f| Complex64::from_polar(1.0, -2.0 * PI * f * tau)),
            );
        }
        Self {
            nc: freqs.len(),
            values,
        }
    }
}

/// Channel snapshots of one frame, one per OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    snapshots: Vec<ChannelMatrix>,
}

impl ChannelTrace {
    pub fn new(snapshots: Vec<ChannelMatrix>) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| invalid("channel trace needs at least one snapshot"))?;
        let dims = (first.nt(), first.nr(), first.nc());
        if snapshots
            .iter()
            .any(|h| (h.nt(), h.nr(), h.nc()) != dims || !h.is_finite())
        {
            return Err(invalid(
                "channel trace snapshots disagree or are not finite",
            ));
        }
        Ok(Self { snapshots })
    }

    pub fn snapshot(&self, symbol: usize) -> &ChannelMatrix {
        &self.snapshots[symbol]
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn into_snapshots(self) -> Vec<ChannelMatrix> {
        self.snapshots
    }
}

/// `y_r,k = sum_t h_tr,k x_t,k` for every OFDM symbol.
pub fn apply_channel(tx: &ResourceGrid, trace: &ChannelTrace) -> Result<ResourceGrid> {
    let h0 = trace.snapshot(0);
    if tx.antennas() != h0.nt() || tx.subcarriers() != h0.nc() || tx.symbols() != trace.len() {
        return Err(invalid(format!(
            "grid {}x{}x{} does not match trace {}x{}x{}",
            tx.antennas(),
            tx.subcarriers(),
            tx.symbols(),
            h0.nt(),
            h0.nc(),
            trace.len()
        )));
    }
    let mut rx = ResourceGrid::new(h0.nr(), tx.subcarriers(), tx.symbols());
    for sym in 0..tx.symbols() {
        let h = trace.snapshot(sym);
        for r in 0..h.nr() {
            let out = rx.column_mut(r, sym);
            for t in 0..h.nt() {
                let x = tx.column(t, sym);
                for ((y, g), x) in out.iter_mut().zip(h.link(t, r)).zip(x) {
                    *y += g * x;
                }
            }
        }
    }
    Ok(rx)
}

/// Adds circularly symmetric complex Gaussian noise of variance `n0`.
pub fn add_awgn_with<R: Rng + ?Sized>(cells: &mut [Complex64], n0: f64, rng: &mut R) -> Result<()> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(invalid(format!(
            "noise variance {n0} must be finite and >= 0"
        )));
    }
    if n0 == 0.0 {
        return Ok(());
    }
    let sigma = (n0 / 2.0).sqrt();
    for c in cells {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *c += Complex64::new(re * sigma, im * sigma);
    }
    Ok(())
}

/// Adds AWGN to every cell of `grid` from the noise substream of `seed`.
pub fn add_awgn(grid: &mut ResourceGrid, n0: f64, seed: u64) -> Result<()> {
    let mut rng = substream(seed, 0, Domain::Noise);
    add_awgn_with(grid.cells_mut(), n0, &mut rng)
}

/// Average magnitude of the element-0/element-1 correlation on one side,
/// over `num_realizations` independent realizations.
pub fn estimate_spatial_correlation(
    profile: &ChannelProfile,
    spatial: &SpatialConfig,
    spacing: f64,
    side: Side,
    num_realizations: usize,
    seed: u64,
) -> Result<f64> {
    if num_realizations < 32 {
        return Err(invalid(
            "spatial correlation needs at least 32 realizations",
        ));
    }
    let mut cfg = spatial.clone();
    cfg.nt = 2;
    cfg.nr = 2;
    match side {
        Side::Bs => cfg.bs_spacing = spacing,
        Side::Ms => cfg.ms_spacing = spacing,
    }
    let mut sum = 0.0;
    for i in 0..num_realizations {
        let mut rng = substream(seed, i as u64, Domain::Channel);
        let real = ChannelRealization::draw(profile, &cfg, &mut rng)?;
        sum += real.spatial_correlation(side).norm();
    }
    Ok(sum / num_realizations as f64)
}

/// Frequency separation at which the measured frequency correlation first
/// drops to one half (3 dB), estimated on `num_subcarriers` uniformly spaced
/// tones over `num_realizations` realizations.
pub fn measure_coherence_bandwidth(
    profile: &ChannelProfile,
    spatial: &SpatialConfig,
    spacing_hz: f64,
    num_subcarriers: usize,
    num_realizations: usize,
    seed: u64,
) -> Result<f64> {
    if num_subcarriers < 4 || num_realizations == 0 || !(spacing_hz > 0.0) {
        return Err(invalid(
            "coherence bandwidth needs tones, realizations and spacing",
        ));
    }
    let mut cfg = spatial.clone();
    cfg.nt = 1;
    cfg.nr = 1;
    let n = num_subcarriers;
    let freqs: Vec<f64> = (0..n)
        .map(|k| (k as f64 - n as f64 / 2.0) * spacing_hz)
        .collect();
    let phasors = TapPhasors::new(
        &profile.taps().iter().map(|t| t.delay).collect::<Vec<_>>(),
        &freqs,
    );
    let max_lag = n / 2;
    let mut acc = vec![Complex64::new(0.0, 0.0); max_lag + 1];
    let mut h = ChannelMatrix::zeros(1, 1, n);
    for i in 0..num_realizations {
        let mut rng = substream(seed, i as u64, Domain::Channel);
        let real = ChannelRealization::draw(profile, &cfg, &mut rng)?;
        real.frequency_response_with(0.0, &phasors, &mut h);
        let link = h.link(0, 0);
        for (lag, a) in acc.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..n - lag {
                s += link[k] * link[k + lag].conj();
            }
            *a += s / (n - lag) as f64;
        }
    }
    let r0 = acc[0].norm();
    let corr: Vec<f64> = acc.iter().map(|a| a.norm() / r0).collect();
    match corr.iter().position(|&c| c < 0.5) {
        Some(lag) => {
            let (c0, c1) = (corr[lag - 1], corr[lag]);
            let frac = (c0 - 0.5) / (c0 - c1);
            Ok((lag as f64 - 1.0 + frac) * spacing_hz)
        }
        None => Ok(max_lag as f64 * spacing_hz),
    }
}

/// Per-frame source of channel snapshots used by the simulator.
#[derive(Debug, Clone)]
pub enum FrameChannel {
    /// `h = 1` on every link.
    Flat,
    /// Independent `CN(0, 1)` gains per Alamouti pair, link and group of
    /// adjacent subcarriers, constant inside each group and pair.
    BlockRayleigh {
        block_subcarriers: usize,
        /// `(pair, tx, rx, block)`.
        gains: Vec<Complex64>,
        blocks: usize,
    },
    /// Sub-ray geometric model sampled at OFDM-symbol instants.
    Geometric {
        realization: Box<ChannelRealization>,
        symbol_duration: f64,
    },
}

/// Which channel model a simulation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModel {
    Flat,
    BlockRayleigh { block_subcarriers: usize },
    Geometric,
}

impl FrameChannel {
    /// Draws the channel for one frame.
    #[allow(clippy::too_many_arguments)]
    pub fn draw<R: Rng + ?Sized>(
        model: ChannelModel,
        profile: &ChannelProfile,
        spatial: &SpatialConfig,
        nc: usize,
        pairs: usize,
        symbol_duration: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(match model {
            ChannelModel::Flat => FrameChannel::Flat,
            ChannelModel::BlockRayleigh { block_subcarriers } => {
                if block_subcarriers == 0 {
                    return Err(invalid("Rayleigh block size must be positive"));
                }
                let blocks = nc.div_ceil(block_subcarriers);
                let count = pairs * spatial.nt * spatial.nr * blocks;
                let sigma = std::f64::consts::FRAC_1_SQRT_2;
                let gains = (0..count)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        Complex64::new(re * sigma, im * sigma)
                    })
                    .collect();
                FrameChannel::BlockRayleigh {
                    block_subcarriers,
                    gains,
                    blocks,
                }
            }
            ChannelModel::Geometric => FrameChannel::Geometric {
                realization: Box::new(ChannelRealization::draw(profile, spatial, rng)?),
                symbol_duration,
            },
        })
    }

    /// Physical channel at fractional OFDM-symbol position `position`
    /// (symbol `n` spans `[n, n + 1)`; pair `p` spans `[2p, 2p + 2)`).
    pub fn response(&self, position: f64, phasors: &TapPhasors, out: &mut ChannelMatrix) {
        match self {
            FrameChannel::Flat => {
                for t in 0..out.nt() {
                    for r in 0..out.nr() {
                        out.link_mut(t, r).fill(Complex64::new(1.0, 0.0));
                    }
                }
            }
            FrameChannel::BlockRayleigh {
                block_subcarriers,
                gains,
                blocks,
            } => {
                let pair = (position / 2.0).floor() as usize;
                let (nt, nr) = (out.nt(), out.nr());
                for t in 0..nt {
                    for r in 0..nr {
                        let base = ((pair * nt + t) * nr + r) * blocks;
                        for (k, h) in out.link_mut(t, r).iter_mut().enumerate() {
                            *h = gains[base + k / block_subcarriers];
                        }
                    }
                }
            }
            FrameChannel::Geometric {
                realization,
                symbol_duration,
            } => realization.frequency_response_with(position * symbol_duration, phasors, out),
        }
    }
}
