//! Gray-labeled QPSK and 16QAM with unit average energy.
//!
//! Bits are grouped per axis: the first half of a symbol's bits labels the
//! in-phase level, the second half the quadrature level. On each axis the
//! first bit is the sign (0 -> positive) and, for 16QAM, the second bit
//! selects the inner (0) or outer (1) amplitude. LLRs are `ln P(b=0)/P(b=1)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constellation {
    Qpsk,
    Qam16,
}

impl Constellation {
    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Constellation::Qpsk => "qpsk",
            Constellation::Qam16 => "16qam",
        }
    }

    fn axis_bits(self) -> usize {
        self.bits_per_symbol() / 2
    }

    fn scale(self) -> f64 {
        match self {
            Constellation::Qpsk => std::f64::consts::FRAC_1_SQRT_2,
            Constellation::Qam16 => 1.0 / 10f64.sqrt(),
        }
    }

    /// Axis level for the given per-axis label bits.
    fn level(self, bits: &[u8]) -> f64 {
        let sign = if bits[0] == 0 { 1.0 } else { -1.0 };
        let mag = match self {
            Constellation::Qpsk => 1.0,
            Constellation::Qam16 => {
                if bits[1] == 0 {
                    1.0
                } else {
                    3.0
                }
            }
        };
        sign * mag * self.scale()
    }

    /// `(level, label)` of every point on one axis.
    fn axis_points(self) -> impl Iterator<Item = (f64, [u8; 2])> {
        let labels: &'static [[u8; 2]] = match self {
            Constellation::Qpsk => &[[0, 0], [1, 0]],
            Constellation::Qam16 => &[[0, 0], [0, 1], [1, 0], [1, 1]],
        };
        labels.iter().map(move |l| (self.level(l), *l))
    }

    /// All constellation points with their bit labels.
    pub fn points(self) -> Vec<(Complex64, Vec<u8>)> {
        let m = self.bits_per_symbol();
        (0..self.order())
            .map(|v| {
                let bits: Vec<u8> = (0..m).map(|i| ((v >> (m - 1 - i)) & 1) as u8).collect();
                (self.map_one(&bits), bits)
            })
            .collect()
    }

    fn map_one(self, bits: &[u8]) -> Complex64 {
        let h = self.axis_bits();
        Complex64::new(self.level(&bits[..h]), self.level(&bits[h..]))
    }

    pub fn map_bits(self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); bits.len() / self.bits_per_symbol()];
        self.map_bits_into(bits, &mut out)?;
        Ok(out)
    }

    pub fn map_bits_into(self, bits: &[u8], out: &mut [Complex64]) -> Result<()> {
        let m = self.bits_per_symbol();
        if !bits.len().is_multiple_of(m) || bits.len() / m != out.len() {
            return Err(invalid(format!(
                "{} bits do not fill {} {} symbols",
                bits.len(),
                out.len(),
                self.as_str()
            )));
        }
        for (sym, chunk) in out.iter_mut().zip(bits.chunks_exact(m)) {
            *sym = self.map_one(chunk);
        }
        Ok(())
    }

    fn decide_axis(self, y: f64, out: &mut [u8]) {
        out[0] = u8::from(y < 0.0);
        if self == Constellation::Qam16 {
            out[1] = u8::from(y.abs() > 2.0 * self.scale());
        }
    }

    /// Nearest-point decisions on `rho * estimate`.
    pub fn demap_hard(self, estimates: &[Complex64], rho: f64) -> Vec<u8> {
        let mut bits = vec![0; estimates.len() * self.bits_per_symbol()];
        self.demap_hard_into(estimates, rho, &mut bits);
        bits
    }

    pub fn demap_hard_into(self, estimates: &[Complex64], rho: f64, bits: &mut [u8]) {
        let m = self.bits_per_symbol();
        let h = self.axis_bits();
        for (est, out) in estimates.iter().zip(bits.chunks_exact_mut(m)) {
            let y = est * rho;
            let (i_bits, q_bits) = out.split_at_mut(h);
            self.decide_axis(y.re, i_bits);
            self.decide_axis(y.im, q_bits);
        }
    }

    /// Max-log LLRs of one symbol estimate after scaling by `rho`, with
    /// complex noise variance `noise_var` at the scaled estimate.
    pub fn demap_soft_one(self, estimate: Complex64, rho: f64, noise_var: f64, llrs: &mut [f64]) {
        let y = estimate * rho;
        let h = self.axis_bits();
        for (axis, v) in [y.re, y.im].into_iter().enumerate() {
            for bit in 0..h {
                let mut d0 = f64::INFINITY;
                let mut d1 = f64::INFINITY;
                for (level, label) in self.axis_points() {
                    let d = (v - level) * (v - level);
                    if label[bit] == 0 {
                        d0 = d0.min(d);
                    } else {
                        d1 = d1.min(d);
                    }
                }
                llrs[axis * h + bit] = (d1 - d0) / noise_var;
            }
        }
    }

    pub fn demap_soft(self, estimates: &[Complex64], rho: f64, noise_var: f64) -> Result<Vec<f64>> {
        if !(noise_var > 0.0) {
            return Err(invalid(format!(
                "noise variance {noise_var} must be positive"
            )));
        }
        let m = self.bits_per_symbol();
        let mut llrs = vec![0.0; estimates.len() * m];
        for (est, out) in estimates.iter().zip(llrs.chunks_exact_mut(m)) {
            self.demap_soft_one(*est, rho, noise_var, out);
        }
        Ok(llrs)
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Constellation::Qpsk),
            "16qam" => Ok(Constellation::Qam16),
            other => Err(invalid(format!("unknown modulation {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BOTH: [Constellation; 2] = [Constellation::Qpsk, Constellation::Qam16];

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn qpsk_zero_label() {
        let s = Constellation::Qpsk.map_bits(&[0, 0]).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s, vec![Complex64::new(a, a)]);
    }

    #[test]
    fn unit_average_energy() {
        for c in BOTH {
            let pts = c.points();
            assert_eq!(pts.len(), c.order());
            let e: f64 = pts.iter().map(|(p, _)| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-15);
        }
        let levels: Vec<f64> = Constellation::Qam16
            .points()
            .iter()
            .map(|(p, _)| p.re)
            .collect();
        for l in levels {
            let v = l * 10f64.sqrt();
            assert!([-3.0, -1.0, 1.0, 3.0].iter().any(|x| (x - v).abs() < 1e-12));
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for c in BOTH {
            let pts = c.points();
            let min_d = 2.0 * c.scale();
            for (p, a) in &pts {
                for (q, b) in &pts {
                    if ((p - q).norm() - min_d).abs() < 1e-12 {
                        let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
                        assert_eq!(diff, 1);
                    }
                }
            }
        }
    }

    #[test]
    fn indivisible_bit_count_is_rejected() {
        assert!(Constellation::Qpsk.map_bits(&[0, 1, 1]).is_err());
        assert!(Constellation::Qam16.map_bits(&[0, 1]).is_err());
    }

    #[test]
    fn hard_round_trip_and_rho_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in BOTH {
            let bits = random_bits(&mut rng, 4000);
            let syms = c.map_bits(&bits).unwrap();
            assert_eq!(c.demap_hard(&syms, 1.0), bits);
            let shrunk: Vec<_> = syms.iter().map(|s| s / 1.7).collect();
            assert_eq!(c.demap_hard(&shrunk, 1.7), bits);
        }
        let bits = random_bits(&mut rng, 400);
        let syms = Constellation::Qpsk.map_bits(&bits).unwrap();
        for rho in [0.01, 0.5, 3.0, 1e6] {
            assert_eq!(Constellation::Qpsk.demap_hard(&syms, rho), bits);
        }
    }

    #[test]
    fn soft_sign_convention() {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let llr = Constellation::Qpsk
            .demap_soft(&[Complex64::new(a, a)], 1.0, 1.0)
            .unwrap();
        assert!(llr[0] > 0.0 && llr[1] > 0.0);
        assert!(Constellation::Qpsk.demap_soft(&[], 1.0, 0.0).is_err());
    }

    #[test]
    fn soft_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for c in BOTH {
            let pts = c.points();
            for _ in 0..2000 {
                let est = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                let rho = rng.random_range(0.5..2.0);
                let var = rng.random_range(0.05..2.0);
                let llr = c.demap_soft(&[est], rho, var).unwrap();
                let y = est * rho;
                for b in 0..c.bits_per_symbol() {
                    let dist = |bit: u8| {
                        pts.iter()
                            .filter(|(_, l)| l[b] == bit)
                            .map(|(p, _)| (y - p).norm_sqr())
                            .fold(f64::INFINITY, f64::min)
                    };
                    let oracle = (dist(1) - dist(0)) / var;
                    assert!((llr[b] - oracle).abs() < 1e-9 * oracle.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn soft_scales_inversely_with_variance() {
        let est = [Complex64::new(0.2, -0.9)];
        for c in BOTH {
            let a = c.demap_soft(&est, 1.0, 1.0).unwrap();
            let b = c.demap_soft(&est, 1.0, 2.0).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x / y - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hard_decisions_agree_with_soft_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in BOTH {
            for _ in 0..100_000 {
                let est = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                let rho = rng.random_range(0.5..2.0);
                let hard = c.demap_hard(&[est], rho);
                let soft = c.demap_soft(&[est], rho, 0.3).unwrap();
                for (h, s) in hard.iter().zip(&soft) {
                    if s.abs() > 1e-12 {
                        assert_eq!(*h, u8::from(*s < 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn empirical_energy_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for c in BOTH {
            let bits = random_bits(&mut rng, 1_000_000 * c.bits_per_symbol());
            let syms = c.map_bits(&bits).unwrap();
            let e = syms.iter().map(|s| s.norm_sqr()).sum::<f64>() / syms.len() as f64;
            assert!((e - 1.0).abs() < 1e-3, "{c}: {e}");
        }
    }
}
