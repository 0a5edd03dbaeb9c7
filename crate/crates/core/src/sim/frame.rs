//! One frame through the full transmit, channel and receive chain.

use rand::{Rng, RngCore};

use crate::channel::{
    add_awgn_with, apply_channel, ChannelModel, ChannelProfile, ChannelTrace, FrameChannel,
    SpatialConfig, TapPhasors,
};
use crate::coding::{Permutation, TurboCode, TurboConfig, TAIL_BITS};
use crate::error::{invalid, Result};
use crate::modem::Constellation;
use crate::ofdm::Ofdm;
use crate::rng::{substream, Domain};
use crate::spreading::{ChipMapping, ResourceGrid, SpreadingMatrix};
use crate::stbc::{alamouti_encode_into, ChannelMatrix, EqualizerBank};
use crate::Complex64;

use super::config::{Coding, GammaMode, SimConfig};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Floor on the post-detection noise variance handed to the soft demapper,
/// so noiseless runs still produce finite LLRs.
const MIN_NOISE_VAR: f64 = 1e-12;

/// Error counts of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameResult {
    /// Information bits per user.
    pub bits_per_user: u64,
    /// Bit errors per user.
    pub user_errors: Vec<u64>,
}

impl FrameResult {
    pub fn bits(&self) -> u64 {
        self.bits_per_user * self.user_errors.len() as u64
    }

    pub fn bit_errors(&self) -> u64 {
        self.user_errors.iter().sum()
    }

    /// A frame is in error when any user has a bit error.
    pub fn frame_error(&self) -> bool {
        self.bit_errors() > 0
    }
}

/// Signal and noise energy per used cell at the OFDM demodulator output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrMeasurement {
    pub signal_energy: f64,
    pub noise_energy: f64,
}

impl SnrMeasurement {
    pub fn snr(&self) -> f64 {
        self.signal_energy / self.noise_energy
    }
}

/// Per-worker instance of every module in the chain, plus scratch buffers.
#[derive(Debug)]
pub struct FrameEngine {
    cfg: SimConfig,
    profile: ChannelProfile,
    spatial: SpatialConfig,
    model: ChannelModel,
    codes: SpreadingMatrix,
    mapping: ChipMapping,
    ofdm: Ofdm,
    phasors: TapPhasors,
    turbo: Option<TurboCode>,
    equalizer: EqualizerBank,
    constellation: Constellation,
    symbol_duration: f64,
    /// Lc-chip blocks per user in one layer.
    layer_blocks: usize,
    /// Modulated bits per user and frame.
    coded_bits: usize,
    /// Information bits per user and frame.
    info_bits: usize,

    data: Vec<u8>,
    coded: Vec<u8>,
    symbols: Vec<Complex64>,
    /// Per layer, `slots x subcarriers`.
    layer_cells: Vec<Vec<Complex64>>,
    chips: Vec<Complex64>,
    cell_gain: Vec<f64>,
    cell_noise: Vec<f64>,
    estimates: Vec<Complex64>,
    block_rho: Vec<f64>,
    block_noise: Vec<f64>,
    tx: ResourceGrid,
    snapshots: Vec<ChannelMatrix>,
    channel: FrameChannel,
    csi: ChannelMatrix,
    samples: Vec<Complex64>,
}

impl FrameEngine {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let ofdm_params = cfg.ofdm();
        let nc = cfg.used_carriers;
        let slots = cfg.layer_slots();
        let layers = cfg.layers();
        let profile = cfg
            .profile()
            .map_err(|e| e.context("loading channel profile"))?;
        let mapping = ChipMapping::new(cfg.chip_mapping, cfg.lc, cfg.time_spreading, nc, slots)?;
        let layer_blocks = mapping.num_blocks();
        let constellation = cfg.modulation;
        let coded_bits = layers * layer_blocks * constellation.bits_per_symbol();
        let (turbo, info_bits) = match cfg.coding {
            Coding::None => (None, coded_bits),
            Coding::TurboR12 => {
                if coded_bits <= TAIL_BITS + 1 {
                    return Err(invalid(format!(
                        "{coded_bits} coded bits per user cannot hold a turbo block"
                    )));
                }
                let k = (coded_bits - TAIL_BITS) / 2;
                let code = TurboCode::new(TurboConfig {
                    block_len: k,
                    iterations: cfg.turbo_iterations,
                    interleaver_seed: cfg.interleaver_seed,
                    log_map: cfg.log_map,
                })?;
                (Some(code), k)
            }
        };
        let freqs = ofdm_params.subcarrier_freqs()?;
        let delays: Vec<f64> = profile.taps().iter().map(|t| t.delay).collect();
        let phasors = TapPhasors::new(&delays, &freqs);
        let users = cfg.users;
        Ok(Self {
            profile,
            spatial: cfg.spatial(),
            model: cfg.channel_model(),
            codes: SpreadingMatrix::walsh_hadamard(cfg.lc, users)?,
            mapping,
            ofdm: Ofdm::new(ofdm_params)?,
            phasors,
            turbo,
            equalizer: EqualizerBank::new(cfg.detector, f64::INFINITY, cfg.nt, cfg.nr, nc)?,
            constellation,
            symbol_duration: ofdm_params.symbol_duration(),
            layer_blocks,
            coded_bits,
            info_bits,
            data: vec![0; users * info_bits],
            coded: vec![0; users * coded_bits],
            symbols: vec![ZERO; users * coded_bits / constellation.bits_per_symbol()],
            layer_cells: vec![vec![ZERO; slots * nc]; layers],
            chips: vec![ZERO; layer_blocks * cfg.lc],
            cell_gain: vec![0.0; slots * nc],
            cell_noise: vec![0.0; slots * nc],
            estimates: vec![ZERO; users * layers * layer_blocks],
            block_rho: vec![1.0; layers * layer_blocks],
            block_noise: vec![0.0; layers * layer_blocks],
            tx: ResourceGrid::new(cfg.nt, nc, cfg.frame_symbols),
            snapshots: vec![ChannelMatrix::zeros(cfg.nt, cfg.nr, nc); cfg.frame_symbols],
            channel: FrameChannel::Flat,
            csi: ChannelMatrix::zeros(cfg.nt, cfg.nr, nc),
            samples: vec![ZERO; ofdm_params.samples_per_symbol()],
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Information bits per user and frame.
    pub fn info_bits_per_user(&self) -> usize {
        self.info_bits
    }

    /// Bits on the air per user and frame (after coding).
    pub fn coded_bits_per_user(&self) -> usize {
        self.coded_bits
    }

    pub fn mapping(&self) -> &ChipMapping {
        &self.mapping
    }

    /// Runs frame `frame` at the given Eb/N0.
    pub fn run_frame(&mut self, ebn0_db: f64, frame: u64) -> Result<FrameResult> {
        let n0 = self.cfg.noise_variance_for(ebn0_db);
        self.run_frame_with_noise(n0, frame)
    }

    /// Runs frame `frame` with complex noise variance `n0` per receive
    /// antenna and subcarrier.
    pub fn run_frame_with_noise(&mut self, n0: f64, frame: u64) -> Result<FrameResult> {
        if !(n0 >= 0.0) || !n0.is_finite() {
            return Err(invalid(format!(
                "noise variance {n0} must be finite and >= 0"
            )));
        }
        let seed = self.cfg.master_seed;
        self.generate_data(frame);
        let permutation = self.encode(frame)?;
        self.transmit()?;
        let trace = self.draw_trace(frame)?;
        let rx = apply_channel(&self.tx, &trace)?;
        let rx = self.ofdm_link(rx, n0, &mut substream(seed, frame, Domain::Noise))?;
        self.snapshots = trace.into_snapshots();
        self.detect(&rx, n0)?;
        self.decide_and_count(permutation.as_ref())
    }

    /// Sends frame `frame` through the chain and measures, at the OFDM
    /// demodulator output, the received signal and noise energy per used
    /// cell and receive antenna.
    pub fn measure_snr(&mut self, n0: f64, frame: u64) -> Result<SnrMeasurement> {
        let seed = self.cfg.master_seed;
        self.generate_data(frame);
        self.encode(frame)?;
        self.transmit()?;
        let trace = self.draw_trace(frame)?;
        let clean = apply_channel(&self.tx, &trace)?;
        let noisy = self.ofdm_link(
            clean.clone(),
            n0,
            &mut substream(seed, frame, Domain::Noise),
        )?;
        self.snapshots = trace.into_snapshots();
        let cells = clean.cells().len() as f64;
        let signal = clean.cells().iter().map(|c| c.norm_sqr()).sum::<f64>() / cells;
        let noise = noisy
            .cells()
            .iter()
            .zip(clean.cells())
            .map(|(y, x)| (y - x).norm_sqr())
            .sum::<f64>()
            / cells;
        Ok(SnrMeasurement {
            signal_energy: signal,
            noise_energy: noise,
        })
    }

    fn generate_data(&mut self, frame: u64) {
        let mut rng = substream(self.cfg.master_seed, frame, Domain::Data);
        for b in &mut self.data {
            *b = rng.random_range(0..2u8);
        }
    }

    /// Turbo encodes and channel interleaves every user's bits, then maps
    /// them to symbols. Returns the channel interleaver of the frame.
    fn encode(&mut self, frame: u64) -> Result<Option<Permutation>> {
        let users = self.cfg.users;
        let permutation = match &self.turbo {
            None => {
                self.coded.copy_from_slice(&self.data);
                None
            }
            Some(code) => {
                let seed = substream(self.cfg.master_seed, frame, Domain::Interleaver).next_u64();
                let perm = Permutation::random(self.coded_bits, seed);
                for u in 0..users {
                    let info = &self.data[u * self.info_bits..(u + 1) * self.info_bits];
                    let word = perm.interleave(&code.encode(info)?)?;
                    self.coded[u * self.coded_bits..(u + 1) * self.coded_bits]
                        .copy_from_slice(&word);
                }
                Some(perm)
            }
        };
        self.constellation
            .map_bits_into(&self.coded, &mut self.symbols)?;
        Ok(permutation)
    }

    /// Spreads, maps chips and builds the per-antenna transmit grid.
    fn transmit(&mut self) -> Result<()> {
        let lc = self.cfg.lc;
        let users = self.cfg.users;
        let per_user = self.cfg.layers() * self.layer_blocks;
        let mut block_symbols = vec![ZERO; users];
        for layer in 0..self.cfg.layers() {
            for b in 0..self.layer_blocks {
                let index = layer * self.layer_blocks + b;
                for (u, s) in block_symbols.iter_mut().enumerate() {
                    *s = self.symbols[u * per_user + index];
                }
                self.codes
                    .spread_into(&block_symbols, &mut self.chips[b * lc..(b + 1) * lc])?;
            }
            self.mapping
                .map_into(&self.chips, &mut self.layer_cells[layer])?;
        }

        let nc = self.cfg.used_carriers;
        if self.cfg.nt == 1 {
            self.tx.antenna_mut(0).copy_from_slice(&self.layer_cells[0]);
            return Ok(());
        }
        let mut ant = [
            [vec![ZERO; nc], vec![ZERO; nc]],
            [vec![ZERO; nc], vec![ZERO; nc]],
        ];
        for p in 0..self.cfg.layer_slots() {
            let s1 = &self.layer_cells[0][p * nc..(p + 1) * nc];
            let s2 = &self.layer_cells[1][p * nc..(p + 1) * nc];
            {
                let [[a0, a1], [b0, b1]] = &mut ant;
                alamouti_encode_into(s1, s2, [a0, a1], [b0, b1]);
            }
            for (t, slots) in ant.iter().enumerate() {
                for (i, values) in slots.iter().enumerate() {
                    self.tx.column_mut(t, 2 * p + i).copy_from_slice(values);
                }
            }
        }
        Ok(())
    }

    /// Samples the frame's channel in the middle of every OFDM symbol.
    fn draw_trace(&mut self, frame: u64) -> Result<ChannelTrace> {
        let mut rng = substream(self.cfg.master_seed, frame, Domain::Channel);
        let channel = FrameChannel::draw(
            self.model,
            &self.profile,
            &self.spatial,
            self.cfg.used_carriers,
            self.cfg.frame_symbols / 2,
            self.symbol_duration,
            &mut rng,
        )?;
        let mut snapshots = std::mem::take(&mut self.snapshots);
        for (n, h) in snapshots.iter_mut().enumerate() {
            channel.response(n as f64 + 0.5, &self.phasors, h);
        }
        self.channel = channel;
        ChannelTrace::new(snapshots)
    }

    /// OFDM modulation of the received grid, time-domain AWGN, demodulation.
    fn ofdm_link<R: Rng + ?Sized>(
        &mut self,
        mut rx: ResourceGrid,
        n0: f64,
        rng: &mut R,
    ) -> Result<ResourceGrid> {
        for r in 0..rx.antennas() {
            for n in 0..rx.symbols() {
                self.ofdm
                    .modulate_into(rx.column(r, n), &mut self.samples)?;
                add_awgn_with(&mut self.samples, n0, rng)?;
                self.ofdm
                    .demodulate_into(&self.samples, rx.column_mut(r, n))?;
            }
        }
        Ok(rx)
    }

    fn gamma(&self, n0: f64) -> f64 {
        match self.cfg.gamma_mode {
            GammaMode::Fixed(g) => g,
            GammaMode::Genie if n0 == 0.0 => f64::INFINITY,
            GammaMode::Genie => self.cfg.users as f64 / self.cfg.lc as f64 / n0,
        }
    }

    /// Equalizes every layer slot with perfect CSI, then demaps chips,
    /// despreads all users and computes per-block rho and noise variance.
    fn detect(&mut self, rx: &ResourceGrid, n0: f64) -> Result<()> {
        let nc = self.cfg.used_carriers;
        let nt = self.cfg.nt;
        let nr = self.cfg.nr;
        self.equalizer = EqualizerBank::new(self.cfg.detector, self.gamma(n0), nt, nr, nc)?;
        let scale = if nt == 2 {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            1.0
        };
        for slot in 0..self.cfg.layer_slots() {
            // Alamouti pairs are equalized with the channel sampled at the
            // pair midpoint, while each slot was sent through its own snapshot.
            if nt == 2 {
                self.channel
                    .response(2.0 * slot as f64 + 1.0, &self.phasors, &mut self.csi);
                self.csi.scale(scale);
            } else {
                self.csi.clone_from(&self.snapshots[slot]);
            }
            self.equalizer.update(&self.csi)?;
            let cells = slot * nc..(slot + 1) * nc;
            for k in 0..nc {
                self.cell_gain[slot * nc + k] = self.equalizer.gain(k);
                self.cell_noise[slot * nc + k] = self.equalizer.noise_gain(k);
            }
            if nt == 2 {
                let received: Vec<(&[Complex64], &[Complex64])> = (0..nr)
                    .map(|r| (rx.column(r, 2 * slot), rx.column(r, 2 * slot + 1)))
                    .collect();
                let (z1, z2) = self.layer_cells.split_at_mut(1);
                self.equalizer.combine_into(
                    &received,
                    &mut z1[0][cells.clone()],
                    &mut z2[0][cells],
                )?;
            } else {
                let received: Vec<&[Complex64]> = (0..nr).map(|r| rx.column(r, slot)).collect();
                self.equalizer
                    .equalize_into(&received, &mut self.layer_cells[0][cells])?;
            }
        }

        let lc = self.cfg.lc;
        let users = self.cfg.users;
        let per_user = self.cfg.layers() * self.layer_blocks;
        let mut despread = vec![ZERO; users];
        for layer in 0..self.cfg.layers() {
            self.mapping
                .demap_from(&self.layer_cells[layer], &mut self.chips)?;
            for b in 0..self.layer_blocks {
                let index = layer * self.layer_blocks + b;
                self.codes
                    .despread_all(&self.chips[b * lc..(b + 1) * lc], &mut despread)?;
                for (u, s) in despread.iter().enumerate() {
                    self.estimates[u * per_user + index] = *s;
                }
                let cells = self.mapping.block_cells(b);
                let gain: f64 = cells.iter().map(|&c| self.cell_gain[c]).sum();
                let noise: f64 = cells.iter().map(|&c| self.cell_noise[c]).sum();
                let rho = if gain > 0.0 { lc as f64 / gain } else { 1.0 };
                self.block_rho[index] = rho;
                self.block_noise[index] = rho * rho * n0 * noise / lc as f64;
            }
        }
        Ok(())
    }

    fn decide_and_count(&mut self, permutation: Option<&Permutation>) -> Result<FrameResult> {
        let users = self.cfg.users;
        let per_user = self.cfg.layers() * self.layer_blocks;
        let m = self.constellation.bits_per_symbol();
        let mut user_errors = vec![0u64; users];
        let mut decided = vec![0u8; self.coded_bits];
        let mut llrs = vec![0.0; self.coded_bits];
        for (u, errors) in user_errors.iter_mut().enumerate() {
            let estimates = &self.estimates[u * per_user..(u + 1) * per_user];
            let sent = &self.data[u * self.info_bits..(u + 1) * self.info_bits];
            match (&self.turbo, permutation) {
                (Some(code), Some(perm)) => {
                    for (i, est) in estimates.iter().enumerate() {
                        let var = self.block_noise[i].max(MIN_NOISE_VAR);
                        self.constellation.demap_soft_one(
                            *est,
                            self.block_rho[i],
                            var,
                            &mut llrs[i * m..(i + 1) * m],
                        );
                    }
                    let out = code.decode(&perm.deinterleave(&llrs)?)?;
                    *errors = count_errors(&out.bits, sent);
                }
                _ => {
                    for (i, est) in estimates.iter().enumerate() {
                        self.constellation.demap_hard_into(
                            std::slice::from_ref(est),
                            self.block_rho[i],
                            &mut decided[i * m..(i + 1) * m],
                        );
                    }
                    *errors = count_errors(&decided, sent);
                }
            }
        }
        Ok(FrameResult {
            bits_per_user: self.info_bits as u64,
            user_errors,
        })
    }
}

fn count_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}
