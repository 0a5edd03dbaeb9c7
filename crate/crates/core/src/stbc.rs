//! Alamouti space-time block coding per subcarrier and single-user detection.
//!
//! Antenna 1 sends `(s1, -s2*)` and antenna 2 sends `(s2, s1*)` over the two
//! OFDM symbols of a pair. The receiver applies one complex coefficient per
//! subcarrier and antenna pair,
//!
//! ```text
//! g_tr,k = h*_tr,k / (sum_t' sum_r' |h_t'r',k|^2 + 1/gamma)
//! ```
//!
//! with `1/gamma = 0` for zero forcing, and combines the two slots of every
//! receive antenna with the conjugate Alamouti structure. The coefficients
//! need no knowledge of the other users' codes.
//!
//! All channel values handed to this module are *effective* gains: when the
//! transmitter splits its power over two antennas, the caller folds the
//! `1/sqrt(2)` into `H` before computing the equalizer.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// ZF denominators below this are treated as a dead subcarrier.
pub const ZF_EPSILON: f64 = 1e-30;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Per-subcarrier channel gains `h_tr,k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    nt: usize,
    nr: usize,
    nc: usize,
    h: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn zeros(nt: usize, nr: usize, nc: usize) -> Self {
        Self {
            nt,
            nr,
            nc,
            h: vec![ZERO; nt * nr * nc],
        }
    }

    pub fn from_fn(
        nt: usize,
        nr: usize,
        nc: usize,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut m = Self::zeros(nt, nr, nc);
        for t in 0..nt {
            for r in 0..nr {
                for k in 0..nc {
                    m.h[(t * nr + r) * nc + k] = f(t, r, k);
                }
            }
        }
        m
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn get(&self, t: usize, r: usize, k: usize) -> Complex64 {
        self.h[(t * self.nr + r) * self.nc + k]
    }

    /// Gains of one antenna pair across all subcarriers.
    pub fn link(&self, t: usize, r: usize) -> &[Complex64] {
        let start = (t * self.nr + r) * self.nc;
        &self.h[start..start + self.nc]
    }

    pub fn link_mut(&mut self, t: usize, r: usize) -> &mut [Complex64] {
        let start = (t * self.nr + r) * self.nc;
        &mut self.h[start..start + self.nc]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.h
    }

    pub fn scale(&mut self, factor: f64) {
        self.h.iter_mut().for_each(|h| *h *= factor);
    }

    /// `sum_t sum_r |h_tr,k|^2` for one subcarrier.
    pub fn energy(&self, k: usize) -> f64 {
        let mut e = 0.0;
        for t in 0..self.nt {
            for r in 0..self.nr {
                e += self.get(t, r, k).norm_sqr();
            }
        }
        e
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().all(|h| h.re.is_finite() && h.im.is_finite())
    }
}

/// Single-user detection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Zf,
    Mmse,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Detector::Zf => "zf",
            Detector::Mmse => "mmse",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zf" => Ok(Detector::Zf),
            "mmse" => Ok(Detector::Mmse),
            other => Err(invalid(format!("unknown detector {other:?}"))),
        }
    }
}

/// The four transmitted values of one Alamouti pair, per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct AlamoutiBlock {
    /// `antennas[t][slot]`, each a vector over subcarriers.
    pub antennas: [[Vec<Complex64>; 2]; 2],
}

/// Alamouti-encodes two chip vectors with unit total transmit power.
pub fn alamouti_encode(s1: &[Complex64], s2: &[Complex64]) -> Result<AlamoutiBlock> {
    if s1.len() != s2.len() {
        return Err(invalid(format!(
            "alamouti_encode: {} vs {} chips",
            s1.len(),
            s2.len()
        )));
    }
    let n = s1.len();
    let mut block = AlamoutiBlock {
        antennas: [
            [vec![ZERO; n], vec![ZERO; n]],
            [vec![ZERO; n], vec![ZERO; n]],
        ],
    };
    {
        let [[a0, a1], [b0, b1]] = &mut block.antennas;
        alamouti_encode_into(s1, s2, [a0, a1], [b0, b1]);
    }
    Ok(block)
}

/// Slice form of [`alamouti_encode`]; all slices must have equal length.
pub fn alamouti_encode_into(
    s1: &[Complex64],
    s2: &[Complex64],
    ant1: [&mut [Complex64]; 2],
    ant2: [&mut [Complex64]; 2],
) {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let [a0, a1] = ant1;
    let [b0, b1] = ant2;
    for k in 0..s1.len() {
        a0[k] = s1[k] * scale;
        a1[k] = -s2[k].conj() * scale;
        b0[k] = s2[k] * scale;
        b1[k] = s1[k].conj() * scale;
    }
}

/// Per-subcarrier detection coefficients for one channel snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerBank {
    detector: Detector,
    gamma: f64,
    nt: usize,
    nr: usize,
    nc: usize,
    coeffs: Vec<Complex64>,
    /// Signal gain after combining, `E / (E + 1/gamma)`.
    gains: Vec<f64>,
    /// `sum |g|^2`, the noise power gain after combining.
    noise_gains: Vec<f64>,
    degenerate: usize,
}

/// Builds the ZF or MMSE coefficients for every subcarrier of `h`.
///
/// `gamma` is the chip-level signal-to-noise ratio and is only read in MMSE
/// mode; it must be positive there (`f64::INFINITY` reduces to ZF).
pub fn compute_equalizer(
    h: &ChannelMatrix,
    detector: Detector,
    gamma: f64,
) -> Result<EqualizerBank> {
    let mut bank = EqualizerBank::new(detector, gamma, h.nt(), h.nr(), h.nc())?;
    bank.update(h)?;
    Ok(bank)
}

impl EqualizerBank {
    /// Empty bank, ready for [`EqualizerBank::update`].
    pub fn new(detector: Detector, gamma: f64, nt: usize, nr: usize, nc: usize) -> Result<Self> {
        if detector == Detector::Mmse && !(gamma > 0.0) {
            return Err(invalid(format!("MMSE needs gamma > 0, got {gamma}")));
        }
        if !(1..=2).contains(&nt) || nr == 0 {
            return Err(invalid(format!("unsupported antenna setup {nt}x{nr}")));
        }
        Ok(Self {
            detector,
            gamma,
            nt,
            nr,
            nc,
            coeffs: vec![ZERO; nt * nr * nc],
            gains: vec![0.0; nc],
            noise_gains: vec![0.0; nc],
            degenerate: 0,
        })
    }

    /// Recomputes all coefficients for a new channel snapshot.
    pub fn update(&mut self, h: &ChannelMatrix) -> Result<()> {
        if h.nt() != self.nt || h.nr() != self.nr || h.nc() != self.nc {
            return Err(invalid(format!(
                "channel {}x{}x{} does not match equalizer {}x{}x{}",
                h.nt(),
                h.nr(),
                h.nc(),
                self.nt,
                self.nr,
                self.nc
            )));
        }
        if !h.is_finite() {
            return Err(invalid("channel contains non-finite values"));
        }
        let inv_gamma = self.inv_gamma();
        self.degenerate = 0;
        for k in 0..self.nc {
            let energy = h.energy(k);
            let denom = energy + inv_gamma;
            let dead = denom < ZF_EPSILON;
            if dead {
                self.degenerate += 1;
            }
            for t in 0..self.nt {
                for r in 0..self.nr {
                    self.coeffs[(t * self.nr + r) * self.nc + k] = if dead {
                        ZERO
                    } else {
                        h.get(t, r, k).conj() / denom
                    };
                }
            }
            if dead {
                self.gains[k] = 0.0;
                self.noise_gains[k] = 0.0;
            } else {
                self.gains[k] = energy / denom;
                self.noise_gains[k] = energy / (denom * denom);
            }
        }
        Ok(())
    }

    pub fn detector(&self) -> Detector {
        self.detector
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn inv_gamma(&self) -> f64 {
        match self.detector {
            Detector::Zf => 0.0,
            Detector::Mmse => 1.0 / self.gamma,
        }
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn coeff(&self, t: usize, r: usize, k: usize) -> Complex64 {
        self.coeffs[(t * self.nr + r) * self.nc + k]
    }

    /// Signal amplitude gain of subcarrier `k` after combining.
    pub fn gain(&self, k: usize) -> f64 {
        self.gains[k]
    }

    /// Noise power gain of subcarrier `k` after combining.
    pub fn noise_gain(&self, k: usize) -> f64 {
        self.noise_gains[k]
    }

    /// Subcarriers whose ZF denominator fell below [`ZF_EPSILON`].
    pub fn degenerate_subcarriers(&self) -> usize {
        self.degenerate
    }

    /// MMSE bias correction over the subcarriers carrying one spread symbol.
    pub fn rho(&self, subcarriers: &[usize]) -> Result<f64> {
        if subcarriers.is_empty() {
            return Err(invalid("rho needs at least one subcarrier"));
        }
        let sum: f64 = subcarriers.iter().map(|&k| self.gains[k]).sum();
        Ok(if sum > 0.0 {
            subcarriers.len() as f64 / sum
        } else {
            1.0
        })
    }

    /// Alamouti combining of one slot pair from every receive antenna.
    ///
    /// `received[r] = (y_r(u), y_r(u + T))`. Returns `(z1, z2)` aligned with
    /// the transmitted `(s1, s2)`. With a single transmit antenna the two
    /// slots are simply equalized independently.
    pub fn combine(
        &self,
        received: &[(&[Complex64], &[Complex64])],
    ) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let mut z1 = vec![ZERO; self.nc];
        let mut z2 = vec![ZERO; self.nc];
        self.combine_into(received, &mut z1, &mut z2)?;
        Ok((z1, z2))
    }

    pub fn combine_into(
        &self,
        received: &[(&[Complex64], &[Complex64])],
        z1: &mut [Complex64],
        z2: &mut [Complex64],
    ) -> Result<()> {
        if received.len() != self.nr {
            return Err(invalid(format!(
                "expected {} receive antennas, got {}",
                self.nr,
                received.len()
            )));
        }
        if z1.len() != self.nc
            || z2.len() != self.nc
            || received
                .iter()
                .any(|(a, b)| a.len() != self.nc || b.len() != self.nc)
        {
            return Err(invalid("combine: subcarrier count mismatch"));
        }
        z1.fill(ZERO);
        z2.fill(ZERO);
        for (r, (first, second)) in received.iter().enumerate() {
            if self.nt == 2 {
                let g1 = &self.coeffs[r * self.nc..(r + 1) * self.nc];
                let g2 = &self.coeffs[(self.nr + r) * self.nc..(self.nr + r + 1) * self.nc];
                for k in 0..self.nc {
                    let y1 = first[k];
                    let y2c = second[k].conj();
                    z1[k] += g1[k] * y1 + g2[k].conj() * y2c;
                    z2[k] += g2[k] * y1 - g1[k].conj() * y2c;
                }
            } else {
                let g = &self.coeffs[r * self.nc..(r + 1) * self.nc];
                for k in 0..self.nc {
                    z1[k] += g[k] * first[k];
                    z2[k] += g[k] * second[k];
                }
            }
        }
        Ok(())
    }

    /// Single-slot equalization, single transmit antenna only.
    pub fn equalize_into(&self, received: &[&[Complex64]], z: &mut [Complex64]) -> Result<()> {
        if self.nt != 1 {
            return Err(invalid("equalize_into needs a single transmit antenna"));
        }
        if received.len() != self.nr || z.len() != self.nc {
            return Err(invalid("equalize: dimension mismatch"));
        }
        z.fill(ZERO);
        for (r, y) in received.iter().enumerate() {
            if y.len() != self.nc {
                return Err(invalid("equalize: subcarrier count mismatch"));
            }
            let g = &self.coeffs[r * self.nc..(r + 1) * self.nc];
            for k in 0..self.nc {
                z[k] += g[k] * y[k];
            }
        }
        Ok(())
    }
}

/// `rho = Lc / sum_k E_k / (E_k + 1/gamma)` over the given subcarriers, with
/// `E_k = sum_t sum_r |h_tr,k|^2`. Pass `gamma = f64::INFINITY` for the ZF
/// limit.
pub fn compute_rho(h: &ChannelMatrix, gamma: f64, subcarriers: &[usize]) -> Result<f64> {
    if subcarriers.is_empty() {
        return Err(invalid("rho needs at least one subcarrier"));
    }
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    let inv_gamma = 1.0 / gamma;
    let mut sum = 0.0;
    for &k in subcarriers {
        if k >= h.nc() {
            return Err(invalid(format!("subcarrier {k} out of range")));
        }
        let e = h.energy(k);
        let denom = e + inv_gamma;
        if denom > 0.0 {
            sum += e / denom;
        }
    }
    Ok(if sum > 0.0 {
        subcarriers.len() as f64 / sum
    } else {
        1.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        c(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        )
    }

    fn random_channel(rng: &mut ChaCha8Rng, nt: usize, nr: usize, nc: usize) -> ChannelMatrix {
        ChannelMatrix::from_fn(nt, nr, nc, |_, _, _| rand_c(rng))
    }

    /// Transmits an encoded block through `h` (physical gains) without noise.
    fn propagate(
        block: &AlamoutiBlock,
        h: &ChannelMatrix,
    ) -> Vec<(Vec<Complex64>, Vec<Complex64>)> {
        (0..h.nr())
            .map(|r| {
                let mut out = [vec![ZERO; h.nc()], vec![ZERO; h.nc()]];
                for (slot, o) in out.iter_mut().enumerate() {
                    for k in 0..h.nc() {
                        o[k] = (0..2)
                            .map(|t| h.get(t, r, k) * block.antennas[t][slot][k])
                            .sum();
                    }
                }
                let [a, b] = out;
                (a, b)
            })
            .collect()
    }

    fn effective(h: &ChannelMatrix) -> ChannelMatrix {
        let mut e = h.clone();
        e.scale(std::f64::consts::FRAC_1_SQRT_2);
        e
    }

    fn as_refs(rx: &[(Vec<Complex64>, Vec<Complex64>)]) -> Vec<(&[Complex64], &[Complex64])> {
        rx.iter()
            .map(|(a, b)| (a.as_slice(), b.as_slice()))
            .collect()
    }

    #[test]
    fn encode_example() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = alamouti_encode(&[c(1.0, 0.0)], &[c(0.0, 1.0)]).unwrap();
        assert_eq!(b.antennas[0][0][0], c(s, 0.0));
        assert_eq!(b.antennas[0][1][0], c(0.0, s));
        assert_eq!(b.antennas[1][0][0], c(0.0, s));
        assert_eq!(b.antennas[1][1][0], c(s, 0.0));
        let z = alamouti_encode(&[ZERO], &[ZERO]).unwrap();
        assert!(z.antennas.iter().flatten().flatten().all(|v| *v == ZERO));
        assert!(alamouti_encode(&[ZERO], &[]).is_err());
    }

    #[test]
    fn encode_preserves_energy_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s1 = rand_c(&mut rng);
            let s2 = rand_c(&mut rng);
            let b = alamouti_encode(&[s1], &[s2]).unwrap();
            let e: f64 = b.antennas.iter().flatten().map(|v| v[0].norm_sqr()).sum();
            assert!((e - (s1.norm_sqr() + s2.norm_sqr())).abs() < 1e-12);
            // X X^H = (|s1|^2+|s2|^2)/2 I with X[slot][antenna].
            let x = |slot: usize, t: usize| b.antennas[t][slot][0];
            let off = x(0, 0) * x(1, 0).conj() + x(0, 1) * x(1, 1).conj();
            assert!(off.norm() < 1e-12);
        }
    }

    #[test]
    fn equalizer_examples() {
        let h = ChannelMatrix::from_fn(2, 2, 1, |_, _, _| c(1.0, 0.0));
        let bank = compute_equalizer(&h, Detector::Mmse, 1.0).unwrap();
        for t in 0..2 {
            for r in 0..2 {
                assert!((bank.coeff(t, r, 0) - c(0.2, 0.0)).norm() < 1e-15);
            }
        }
        let h = ChannelMatrix::from_fn(2, 1, 1, |t, _, _| if t == 0 { c(2.0, 0.0) } else { ZERO });
        let bank = compute_equalizer(&h, Detector::Zf, 0.0).unwrap();
        assert!((bank.coeff(0, 0, 0) - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(bank.coeff(1, 0, 0), ZERO);
    }

    #[test]
    fn mmse_needs_positive_gamma() {
        let h = ChannelMatrix::zeros(2, 1, 4);
        assert!(compute_equalizer(&h, Detector::Mmse, 0.0).is_err());
        assert!(compute_equalizer(&h, Detector::Mmse, -1.0).is_err());
    }

    #[test]
    fn dead_subcarriers_are_zeroed_and_counted() {
        let h = ChannelMatrix::from_fn(2, 1, 3, |_, _, k| if k == 1 { ZERO } else { c(1.0, 0.0) });
        let bank = compute_equalizer(&h, Detector::Zf, 0.0).unwrap();
        assert_eq!(bank.degenerate_subcarriers(), 1);
        assert_eq!(bank.coeff(0, 0, 1), ZERO);
        assert!(bank.coeff(0, 0, 0).norm() > 0.0);
    }

    #[test]
    fn mmse_converges_to_zf() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for nr in [1, 2] {
            let h = random_channel(&mut rng, 2, nr, 64);
            let zf = compute_equalizer(&h, Detector::Zf, 0.0).unwrap();
            let mmse = compute_equalizer(&h, Detector::Mmse, 1e9).unwrap();
            for t in 0..2 {
                for r in 0..nr {
                    for k in 0..64 {
                        let a = zf.coeff(t, r, k);
                        let b = mmse.coeff(t, r, k);
                        assert!((a - b).norm() / a.norm() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn flat_channel_zf_recovers_chips() {
        let s1 = vec![c(1.0, -1.0), c(0.5, 0.25)];
        let s2 = vec![c(-0.3, 0.7), c(0.0, 1.0)];
        let block = alamouti_encode(&s1, &s2).unwrap();
        let h = ChannelMatrix::from_fn(2, 1, 2, |_, _, _| c(1.0, 0.0));
        let bank = compute_equalizer(&effective(&h), Detector::Zf, 0.0).unwrap();
        let rx = propagate(&block, &h);
        let (z1, z2) = bank.combine(&as_refs(&rx)).unwrap();
        for k in 0..2 {
            assert!((z1[k] - s1[k]).norm() < 1e-12);
            assert!((z2[k] - s2[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn random_channel_zf_matches_matrix_oracle() {
        // Oracle: solve the 2x2 Alamouti system [y1; y2*] = A [s1; s2] per
        // subcarrier by explicit matrix inversion (Nr = 1).
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_channel(&mut rng, 2, 1, 16);
        let he = effective(&h);
        let s1: Vec<_> = (0..16).map(|_| rand_c(&mut rng)).collect();
        let s2: Vec<_> = (0..16).map(|_| rand_c(&mut rng)).collect();
        let rx = propagate(&alamouti_encode(&s1, &s2).unwrap(), &h);
        let bank = compute_equalizer(&he, Detector::Zf, 0.0).unwrap();
        let (z1, z2) = bank.combine(&as_refs(&rx)).unwrap();
        for k in 0..16 {
            let (h1, h2) = (he.get(0, 0, k), he.get(1, 0, k));
            let a = [[h1, h2], [h2.conj(), -h1.conj()]];
            let y = [rx[0].0[k], rx[0].1[k].conj()];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let x1 = (a[1][1] * y[0] - a[0][1] * y[1]) / det;
            let x2 = (-a[1][0] * y[0] + a[0][0] * y[1]) / det;
            assert!((z1[k] - x1).norm() < 1e-10);
            assert!((z2[k] - x2).norm() < 1e-10);
            assert!((x1 - s1[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_channel(&mut rng, 2, 2, 8);
        let bank = compute_equalizer(&h, Detector::Mmse, 3.0).unwrap();
        let zeros = vec![ZERO; 8];
        let (z1, z2) = bank.combine(&[(&zeros, &zeros), (&zeros, &zeros)]).unwrap();
        assert!(z1.iter().chain(&z2).all(|z| *z == ZERO));
        assert!(bank.combine(&[(&zeros, &zeros)]).is_err());
    }

    #[test]
    fn rho_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_channel(&mut rng, 2, 2, 32);
        let all: Vec<usize> = (0..32).collect();
        assert!((compute_rho(&h, f64::INFINITY, &all).unwrap() - 1.0).abs() < 1e-15);
        let flat = ChannelMatrix::from_fn(2, 1, 4, |_, _, _| c(0.5, 0.5));
        let a = flat.energy(0);
        let rho = compute_rho(&flat, 4.0, &[0, 1, 2, 3]).unwrap();
        assert!((rho - (a + 0.25) / a).abs() < 1e-12);
        // Direct summation oracle at gamma = 5.
        let mut s = 0.0;
        for k in 0..32 {
            let mut e = 0.0;
            for t in 0..2 {
                for r in 0..2 {
                    e += h.get(t, r, k).norm_sqr();
                }
            }
            s += e / (e + 0.2);
        }
        let rho = compute_rho(&h, 5.0, &all).unwrap();
        assert!((rho - 32.0 / s).abs() < 1e-12);
        let bank = compute_equalizer(&h, Detector::Mmse, 5.0).unwrap();
        assert!((bank.rho(&all).unwrap() - rho).abs() < 1e-12);
        assert!(compute_rho(&h, 5.0, &[]).is_err());
        assert!(bank.rho(&[]).is_err());
    }

    proptest! {
        #[test]
        fn zf_noiseless_identity(seed in any::<u64>(), nr in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_channel(&mut rng, 2, nr, 8);
            let s1: Vec<_> = (0..8).map(|_| rand_c(&mut rng)).collect();
            let s2: Vec<_> = (0..8).map(|_| rand_c(&mut rng)).collect();
            let rx = propagate(&alamouti_encode(&s1, &s2).unwrap(), &h);
            let bank = compute_equalizer(&effective(&h), Detector::Zf, 0.0).unwrap();
            let (z1, z2) = bank.combine(&as_refs(&rx)).unwrap();
            for k in 0..8 {
                prop_assert!((z1[k] - s1[k]).norm() < 1e-10);
                prop_assert!((z2[k] - s2[k]).norm() < 1e-10);
            }
        }

        #[test]
        fn no_leakage_between_streams(seed in any::<u64>(), nr in 1usize..3, gamma in 0.1f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_channel(&mut rng, 2, nr, 4);
            let s1: Vec<_> = (0..4).map(|_| rand_c(&mut rng)).collect();
            let zeros = vec![ZERO; 4];
            let rx = propagate(&alamouti_encode(&s1, &zeros).unwrap(), &h);
            let bank = compute_equalizer(&effective(&h), Detector::Mmse, gamma).unwrap();
            let (_, z2) = bank.combine(&as_refs(&rx)).unwrap();
            prop_assert!(z2.iter().all(|z| z.norm() < 1e-12));
            let rx = propagate(&alamouti_encode(&zeros, &s1).unwrap(), &h);
            let (z1, _) = bank.combine(&as_refs(&rx)).unwrap();
            prop_assert!(z1.iter().all(|z| z.norm() < 1e-12));
        }

        #[test]
        fn zf_output_invariant_to_channel_scaling(seed in any::<u64>(), re in 0.1f64..3.0, im in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_channel(&mut rng, 2, 2, 4);
            let alpha = c(re, im);
            let hs = ChannelMatrix::from_fn(2, 2, 4, |t, r, k| h.get(t, r, k) * alpha);
            let s1: Vec<_> = (0..4).map(|_| rand_c(&mut rng)).collect();
            let s2: Vec<_> = (0..4).map(|_| rand_c(&mut rng)).collect();
            let block = alamouti_encode(&s1, &s2).unwrap();
            let out = |h: &ChannelMatrix| {
                let rx = propagate(&block, h);
                compute_equalizer(&effective(h), Detector::Zf, 0.0).unwrap().combine(&as_refs(&rx)).unwrap()
            };
            let (a1, a2) = out(&h);
            let (b1, b2) = out(&hs);
            for k in 0..4 {
                prop_assert!((a1[k] - b1[k]).norm() < 1e-9);
                prop_assert!((a2[k] - b2[k]).norm() < 1e-9);
            }
        }

        #[test]
        fn rho_at_least_one(seed in any::<u64>(), gamma in 0.01f64..1e6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_channel(&mut rng, 2, 2, 16);
            let set: Vec<usize> = (0..16).collect();
            let rho = compute_rho(&h, gamma, &set).unwrap();
            prop_assert!(rho > 1.0);
        }
    }
}
