//! Rate-1/3 parallel concatenated turbo code punctured to rate 1/2, decoded
//! with iterative max-log-MAP, plus the frame-level channel interleaver.
//!
//! Both constituent encoders are the UMTS recursive systematic code with
//! feedback `1 + D^2 + D^3` (13 octal) and feedforward `1 + D + D^3`
//! (15 octal). The internal interleaver is a seeded odd-even permutation, so
//! together with alternating parity puncturing every information bit keeps
//! exactly one parity bit.
//!
//! Codeword layout for `K` information bits (`2K + 12` bits):
//!
//! ```text
//! x_0 p_0 x_1 p_1 ... x_{K-1} p_{K-1}  tail1 (x z x z x z)  tail2 (x' z' x' z' x' z')
//! ```
//!
//! where `p_k` is the first encoder's parity for even `k` and the second
//! encoder's for odd `k`. LLRs are `ln P(b=0)/P(b=1)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

const MEMORY: usize = 3;
const STATES: usize = 1 << MEMORY;
/// Tail bits per constituent encoder (systematic and parity per step).
pub const TAIL_BITS_PER_ENCODER: usize = 2 * MEMORY;
pub const TAIL_BITS: usize = 2 * TAIL_BITS_PER_ENCODER;
pub const DEFAULT_ITERATIONS: usize = 6;

const NEG_INF: f64 = -1e300;

/// State is `(a_{k-1}, a_{k-2}, a_{k-3})` packed as bits 2, 1, 0.
#[derive(Debug, Clone, Copy)]
struct Trellis {
    next: [[usize; 2]; STATES],
    parity: [[u8; 2]; STATES],
    /// Input that drives each state towards zero.
    tail_input: [u8; STATES],
}

impl Trellis {
    fn umts() -> Self {
        let mut next = [[0; 2]; STATES];
        let mut parity = [[0; 2]; STATES];
        let mut tail_input = [0; STATES];
        for s in 0..STATES {
            let s1 = ((s >> 2) & 1) as u8;
            let s2 = ((s >> 1) & 1) as u8;
            let s3 = (s & 1) as u8;
            for u in 0..2u8 {
                let a = u ^ s2 ^ s3;
                parity[s][u as usize] = a ^ s1 ^ s3;
                next[s][u as usize] = ((a as usize) << 2) | ((s1 as usize) << 1) | s2 as usize;
            }
            tail_input[s] = s2 ^ s3;
        }
        Self {
            next,
            parity,
            tail_input,
        }
    }

    /// Encodes `bits` and terminates; returns (parity, tail) with the tail
    /// laid out `x z x z x z`.
    fn encode(&self, bits: &[u8]) -> (Vec<u8>, [u8; TAIL_BITS_PER_ENCODER]) {
        let mut state = 0;
        let mut parity = Vec::with_capacity(bits.len());
        for &b in bits {
            parity.push(self.parity[state][b as usize]);
            state = self.next[state][b as usize];
        }
        let mut tail = [0; TAIL_BITS_PER_ENCODER];
        for step in 0..MEMORY {
            let u = self.tail_input[state];
            tail[2 * step] = u;
            tail[2 * step + 1] = self.parity[state][u as usize];
            state = self.next[state][u as usize];
        }
        debug_assert_eq!(state, 0);
        (parity, tail)
    }
}

/// Permutation `perm` with interleaved[i] = input[perm[i]].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self {
            perm: (0..len).collect(),
        }
    }

    pub fn from_vec(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(invalid("not a permutation"));
            }
        }
        Ok(Self { perm })
    }

    /// Uniformly random permutation from `seed`.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm }
    }

    /// Random permutation that maps even positions to even ones and odd to odd.
    pub fn odd_even(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut evens: Vec<usize> = (0..len).step_by(2).collect();
        let mut odds: Vec<usize> = (1..len).step_by(2).collect();
        evens.shuffle(&mut rng);
        odds.shuffle(&mut rng);
        let mut perm = vec![0; len];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = if i % 2 == 0 {
                evens[i / 2]
            } else {
                odds[i / 2]
            };
        }
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        Ok(self.perm.iter().map(|&p| input[p]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        let mut out = vec![T::default(); input.len()];
        for (v, &p) in input.iter().zip(&self.perm) {
            out[p] = *v;
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.perm.len() {
            return Err(invalid(format!(
                "interleaver of length {} applied to {len} values",
                self.perm.len()
            )));
        }
        Ok(())
    }
}

/// Bit interleaver over one user's coded frame.
pub fn channel_interleaver(frame_size: usize, seed: u64) -> Permutation {
    Permutation::random(frame_size, seed)
}

pub fn channel_interleave<T: Copy>(values: &[T], seed: u64) -> Result<Vec<T>> {
    channel_interleaver(values.len(), seed).interleave(values)
}

pub fn channel_deinterleave<T: Copy + Default>(values: &[T], seed: u64) -> Result<Vec<T>> {
    channel_interleaver(values.len(), seed).deinterleave(values)
}

/// The three unpunctured streams plus tails.
#[derive(Debug, Clone, PartialEq)]
pub struct MotherCodeword<T> {
    pub systematic: Vec<T>,
    pub parity1: Vec<T>,
    pub parity2: Vec<T>,
    pub tail1: [T; TAIL_BITS_PER_ENCODER],
    pub tail2: [T; TAIL_BITS_PER_ENCODER],
}

/// Keeps every systematic bit and alternates parity1 (even) / parity2 (odd).
pub fn puncture<T: Copy>(word: &MotherCodeword<T>) -> Result<Vec<T>> {
    let k = word.systematic.len();
    if word.parity1.len() != k || word.parity2.len() != k {
        return Err(invalid("puncture: stream lengths differ"));
    }
    let mut out = Vec::with_capacity(2 * k + TAIL_BITS);
    for i in 0..k {
        out.push(word.systematic[i]);
        out.push(if i % 2 == 0 {
            word.parity1[i]
        } else {
            word.parity2[i]
        });
    }
    out.extend_from_slice(&word.tail1);
    out.extend_from_slice(&word.tail2);
    Ok(out)
}

/// Restores the mother-code layout, putting LLR 0 at deleted positions.
pub fn depuncture(llrs: &[f64], k: usize) -> Result<MotherCodeword<f64>> {
    if llrs.len() != 2 * k + TAIL_BITS {
        return Err(invalid(format!(
            "depuncture: {} LLRs for K={k}, expected {}",
            llrs.len(),
            2 * k + TAIL_BITS
        )));
    }
    let mut word = MotherCodeword {
        systematic: vec![0.0; k],
        parity1: vec![0.0; k],
        parity2: vec![0.0; k],
        tail1: [0.0; TAIL_BITS_PER_ENCODER],
        tail2: [0.0; TAIL_BITS_PER_ENCODER],
    };
    for i in 0..k {
        word.systematic[i] = llrs[2 * i];
        if i % 2 == 0 {
            word.parity1[i] = llrs[2 * i + 1];
        } else {
            word.parity2[i] = llrs[2 * i + 1];
        }
    }
    word.tail1
        .copy_from_slice(&llrs[2 * k..2 * k + TAIL_BITS_PER_ENCODER]);
    word.tail2
        .copy_from_slice(&llrs[2 * k + TAIL_BITS_PER_ENCODER..]);
    Ok(word)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurboConfig {
    pub block_len: usize,
    pub iterations: usize,
    pub interleaver_seed: u64,
    /// Adds the `ln(1 + e^-|x|)` correction (log-MAP) to every max.
    pub log_map: bool,
}

impl TurboConfig {
    pub fn new(block_len: usize) -> Self {
        Self {
            block_len,
            iterations: DEFAULT_ITERATIONS,
            interleaver_seed: 0,
            log_map: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecodeOutput {
    pub bits: Vec<u8>,
    /// Posterior LLRs of the information bits.
    pub llrs: Vec<f64>,
}

/// Rate-1/2 punctured turbo code of a fixed block length.
#[derive(Debug, Clone)]
pub struct TurboCode {
    config: TurboConfig,
    trellis: Trellis,
    interleaver: Permutation,
}

impl TurboCode {
    pub fn new(config: TurboConfig) -> Result<Self> {
        let interleaver = Permutation::odd_even(config.block_len, config.interleaver_seed);
        Self::with_interleaver(config, interleaver)
    }

    pub fn with_interleaver(config: TurboConfig, interleaver: Permutation) -> Result<Self> {
        if config.block_len == 0 {
            return Err(invalid("turbo block length must be positive"));
        }
        if config.iterations == 0 {
            return Err(invalid("turbo decoding needs at least one iteration"));
        }
        if interleaver.len() != config.block_len {
            return Err(invalid("interleaver length differs from block length"));
        }
        Ok(Self {
            config,
            trellis: Trellis::umts(),
            interleaver,
        })
    }

    pub fn config(&self) -> &TurboConfig {
        &self.config
    }

    pub fn block_len(&self) -> usize {
        self.config.block_len
    }

    /// Punctured codeword length, `2K + 12`.
    pub fn codeword_len(&self) -> usize {
        2 * self.config.block_len + TAIL_BITS
    }

    pub fn interleaver(&self) -> &Permutation {
        &self.interleaver
    }

    pub fn encode_mother(&self, bits: &[u8]) -> Result<MotherCodeword<u8>> {
        if bits.len() != self.config.block_len {
            return Err(invalid(format!(
                "turbo_encode: {} bits for K={}",
                bits.len(),
                self.config.block_len
            )));
        }
        let (parity1, tail1) = self.trellis.encode(bits);
        let permuted = self.interleaver.interleave(bits)?;
        let (parity2, tail2) = self.trellis.encode(&permuted);
        Ok(MotherCodeword {
            systematic: bits.to_vec(),
            parity1,
            parity2,
            tail1,
            tail2,
        })
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<u8>> {
        puncture(&self.encode_mother(bits)?)
    }

    pub fn decode(&self, llrs: &[f64]) -> Result<DecodeOutput> {
        let k = self.config.block_len;
        let word = depuncture(llrs, k)?;
        if llrs.iter().any(|l| l.is_nan()) {
            return Err(invalid("turbo_decode: NaN input LLR"));
        }
        let sys2 = self.interleaver.interleave(&word.systematic)?;
        let mut apriori1 = vec![0.0; k];
        let mut post2 = vec![0.0; k];
        let mut ext = vec![0.0; k];
        for _ in 0..self.config.iterations {
            let post1 = self.siso(&word.systematic, &word.parity1, &word.tail1, &apriori1);
            for i in 0..k {
                ext[i] = post1[i] - apriori1[i] - word.systematic[i];
            }
            let apriori2 = self.interleaver.interleave(&ext)?;
            post2 = self.siso(&sys2, &word.parity2, &word.tail2, &apriori2);
            let ext2: Vec<f64> = (0..k).map(|i| post2[i] - apriori2[i] - sys2[i]).collect();
            apriori1 = self.interleaver.deinterleave(&ext2)?;
        }
        let llrs = self.interleaver.deinterleave(&post2)?;
        let bits = llrs.iter().map(|&l| u8::from(l < 0.0)).collect();
        Ok(DecodeOutput { bits, llrs })
    }

    fn max_star(&self, a: f64, b: f64) -> f64 {
        let m = a.max(b);
        if self.config.log_map && m > NEG_INF {
            m + (-(a - b).abs()).exp().ln_1p()
        } else {
            m
        }
    }

    /// Max-log-MAP over one terminated constituent trellis. Returns the
    /// posterior LLR of every information bit.
    fn siso(
        &self,
        sys: &[f64],
        par: &[f64],
        tail: &[f64; TAIL_BITS_PER_ENCODER],
        apriori: &[f64],
    ) -> Vec<f64> {
        let k = sys.len();
        let steps = k + MEMORY;
        let t = &self.trellis;
        // Branch metric for input u with parity p: half the signed LLR sum.
        let metric = |step: usize, u: u8, p: u8| -> f64 {
            let (ls, lp) = if step < k {
                (sys[step] + apriori[step], par[step])
            } else {
                let j = step - k;
                (tail[2 * j], tail[2 * j + 1])
            };
            let su = if u == 0 { 0.5 } else { -0.5 };
            let sp = if p == 0 { 0.5 } else { -0.5 };
            su * ls + sp * lp
        };

        let mut alpha = vec![[NEG_INF; STATES]; steps + 1];
        alpha[0][0] = 0.0;
        for step in 0..steps {
            let mut next = [NEG_INF; STATES];
            for s in 0..STATES {
                let a = alpha[step][s];
                if a <= NEG_INF {
                    continue;
                }
                for u in self.inputs(step, k, s) {
                    let ns = t.next[s][u as usize];
                    let m = a + metric(step, u, t.parity[s][u as usize]);
                    next[ns] = self.max_star(next[ns], m);
                }
            }
            normalize(&mut next);
            alpha[step + 1] = next;
        }

        let mut beta = [NEG_INF; STATES];
        beta[0] = 0.0;
        let mut post = vec![0.0; k];
        for step in (0..steps).rev() {
            let mut prev = [NEG_INF; STATES];
            let mut best = [NEG_INF; 2];
            for s in 0..STATES {
                let a = alpha[step][s];
                for u in self.inputs(step, k, s) {
                    let ns = t.next[s][u as usize];
                    if beta[ns] <= NEG_INF {
                        continue;
                    }
                    let m = metric(step, u, t.parity[s][u as usize]) + beta[ns];
                    prev[s] = self.max_star(prev[s], m);
                    if step < k && a > NEG_INF {
                        best[u as usize] = self.max_star(best[u as usize], a + m);
                    }
                }
            }
            if step < k {
                post[step] = best[0] - best[1];
            }
            normalize(&mut prev);
            beta = prev;
        }
        post
    }

    fn inputs(&self, step: usize, k: usize, state: usize) -> impl Iterator<Item = u8> {
        let forced = (step >= k).then(|| self.trellis.tail_input[state]);
        (0..2u8).filter(move |&u| forced.is_none_or(|f| f == u))
    }
}

fn normalize(metrics: &mut [f64; STATES]) {
    let m = metrics.iter().copied().fold(NEG_INF, f64::max);
    if m > NEG_INF {
        for v in metrics.iter_mut() {
            if *v > NEG_INF {
                *v -= m;
            }
        }
    }
}
