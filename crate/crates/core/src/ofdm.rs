//! Cyclic-prefix OFDM with a centered, DC-free subcarrier allocation.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    pub fft_size: usize,
    pub used_carriers: usize,
    pub guard_samples: usize,
    pub sampling_freq: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            used_carriers: 736,
            guard_samples: 216,
            sampling_freq: 57.6e6,
        }
    }
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 {
            return Err(invalid("fft_size must be at least 2"));
        }
        if self.used_carriers == 0 || !self.used_carriers.is_multiple_of(2) {
            return Err(invalid(format!(
                "used_carriers {} must be even and positive",
                self.used_carriers
            )));
        }
        if self.used_carriers > self.fft_size {
            return Err(invalid(format!(
                "{} used carriers do not fit in a {}-point FFT",
                self.used_carriers, self.fft_size
            )));
        }
        if self.used_carriers / 2 >= self.fft_size / 2 + self.fft_size % 2 {
            return Err(invalid(format!(
                "{} used carriers leave no room for the DC null in a {}-point FFT",
                self.used_carriers, self.fft_size
            )));
        }
        if !(self.sampling_freq > 0.0) {
            return Err(invalid("sampling frequency must be positive"));
        }
        Ok(())
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.sampling_freq / self.fft_size as f64
    }

    /// Useful symbol duration `Tu = 1/df`.
    pub fn useful_duration(&self) -> f64 {
        self.fft_size as f64 / self.sampling_freq
    }

    pub fn guard_duration(&self) -> f64 {
        self.guard_samples as f64 / self.sampling_freq
    }

    /// Total symbol duration `Ts = Tu + Tg`.
    pub fn symbol_duration(&self) -> f64 {
        self.useful_duration() + self.guard_duration()
    }

    pub fn occupied_bandwidth(&self) -> f64 {
        self.used_carriers as f64 * self.subcarrier_spacing()
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.fft_size + self.guard_samples
    }

    /// Baseband frequency of every used subcarrier, in grid order.
    pub fn subcarrier_freqs(&self) -> Result<Vec<f64>> {
        let df = self.subcarrier_spacing();
        Ok(allocate_subcarriers(self)?
            .into_iter()
            .map(|b| b as f64 * df)
            .collect())
    }
}

/// Signed FFT bins of the used subcarriers: `-Nc/2..=-1` then `1..=Nc/2`.
pub fn allocate_subcarriers(params: &OfdmParams) -> Result<Vec<i64>> {
    params.validate()?;
    let half = (params.used_carriers / 2) as i64;
    Ok((-half..0).chain(1..=half).collect())
}

/// OFDM modulator/demodulator with cached FFT plans.
///
/// Transforms are unitary, so per-sample time-domain energy equals
/// per-subcarrier energy and white noise keeps its variance across the FFT.
#[derive(Clone)]
pub struct Ofdm {
    params: OfdmParams,
    bins: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Ofdm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ofdm")
            .field("params", &self.params)
            .finish()
    }
}

impl Ofdm {
    pub fn new(params: OfdmParams) -> Result<Self> {
        let n = params.fft_size;
        let bins = allocate_subcarriers(&params)?
            .into_iter()
            .map(|b| b.rem_euclid(n as i64) as usize)
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            params,
            bins,
            forward,
            inverse,
            buffer: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    pub fn modulate(&mut self, column: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.params.samples_per_symbol()];
        self.modulate_into(column, &mut out)?;
        Ok(out)
    }

    /// One OFDM symbol: IFFT of the used bins with the cyclic prefix in front.
    pub fn modulate_into(&mut self, column: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let p = self.params;
        if column.len() != p.used_carriers {
            return Err(invalid(format!(
                "modulate: {} values for {} subcarriers",
                column.len(),
                p.used_carriers
            )));
        }
        if out.len() != p.samples_per_symbol() {
            return Err(invalid("modulate: output length mismatch"));
        }
        self.buffer.fill(Complex64::new(0.0, 0.0));
        for (&bin, &v) in self.bins.iter().zip(column) {
            self.buffer[bin] = v;
        }
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let scale = 1.0 / (p.fft_size as f64).sqrt();
        let g = p.guard_samples;
        for (o, b) in out[g..].iter_mut().zip(&self.buffer) {
            *o = b * scale;
        }
        out.copy_within(p.fft_size..p.fft_size + g, 0);
        Ok(())
    }

    pub fn demodulate(&mut self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.params.used_carriers];
        self.demodulate_into(samples, &mut out)?;
        Ok(out)
    }

    /// Strips the prefix, runs the forward FFT and picks the used bins.
    pub fn demodulate_into(
        &mut self,
        samples: &[Complex64],
        column: &mut [Complex64],
    ) -> Result<()> {
        let p = self.params;
        if samples.len() != p.samples_per_symbol() {
            return Err(invalid(format!(
                "demodulate: {} samples, expected {}",
                samples.len(),
                p.samples_per_symbol()
            )));
        }
        if column.len() != p.used_carriers {
            return Err(invalid("demodulate: output length mismatch"));
        }
        self.buffer.copy_from_slice(&samples[p.guard_samples..]);
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let scale = 1.0 / (p.fft_size as f64).sqrt();
        for (c, &bin) in column.iter_mut().zip(&self.bins) {
            *c = self.buffer[bin] * scale;
        }
        Ok(())
    }
}
