//! Parallel Monte Carlo sweeps with a worker-count independent stop rule.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

use super::config::SimConfig;
use super::frame::{FrameEngine, FrameResult};

/// Frames each worker runs per scheduling round.
const FRAMES_PER_WORKER: u64 = 4;

/// Accumulated counts of one `(config, Eb/N0)` point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ErrorStats {
    pub bits: u64,
    pub bit_errors: u64,
    pub frames: u64,
    pub frame_errors: u64,
    /// Frames in which each user had at least one bit error.
    pub user_frame_errors: Vec<u64>,
}

impl ErrorStats {
    pub fn new(users: usize) -> Self {
        Self {
            user_frame_errors: vec![0; users],
            ..Self::default()
        }
    }

    pub fn add(&mut self, frame: &FrameResult) {
        if self.user_frame_errors.len() < frame.user_errors.len() {
            self.user_frame_errors.resize(frame.user_errors.len(), 0);
        }
        self.bits += frame.bits();
        self.bit_errors += frame.bit_errors();
        self.frames += 1;
        self.frame_errors += u64::from(frame.frame_error());
        for (acc, &e) in self.user_frame_errors.iter_mut().zip(&frame.user_errors) {
            *acc += u64::from(e > 0);
        }
    }

    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.bits)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn user_fer(&self, user: usize) -> f64 {
        ratio(self.user_frame_errors[user], self.frames)
    }

    /// Standard error of the BER estimate under independent bit errors.
    pub fn ber_std_error(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        let p = self.ber();
        (p * (1.0 - p) / self.bits as f64).sqrt()
    }

    /// Normal-approximation 95% confidence interval of the BER.
    pub fn ber_interval(&self) -> (f64, f64) {
        let half = 1.96 * self.ber_std_error();
        ((self.ber() - half).max(0.0), (self.ber() + half).min(1.0))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Result of one swept point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub ebn0_db: f64,
    pub stats: ErrorStats,
}

/// Runs frames `0, 1, 2, ...` at `ebn0_db` until the stop rule fires.
///
/// Frames are evaluated in parallel rounds but merged strictly in frame
/// order, and the stop rule is checked after every frame, so the result
/// depends only on the configuration.
pub fn run_point(cfg: &SimConfig, ebn0_db: f64, workers: usize) -> Result<ErrorStats> {
    let pool = build_pool(workers)?;
    let mut engines = (0..workers)
        .map(|_| FrameEngine::new(cfg))
        .collect::<Result<Vec<_>>>()?;
    run_point_with(cfg, ebn0_db, &pool, &mut engines)
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(invalid("at least one worker is required"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))
}

fn run_point_with(
    cfg: &SimConfig,
    ebn0_db: f64,
    pool: &rayon::ThreadPool,
    engines: &mut [FrameEngine],
) -> Result<ErrorStats> {
    let mut stats = ErrorStats::new(cfg.users);
    let round = engines.len() as u64 * FRAMES_PER_WORKER;
    let mut next = 0u64;
    while next < cfg.max_frames {
        let end = (next + round).min(cfg.max_frames);
        let start = next;
        let results: Vec<Vec<Result<FrameResult>>> = pool.install(|| {
            engines
                .par_iter_mut()
                .enumerate()
                .map(|(w, engine)| {
                    let first = start + w as u64 * FRAMES_PER_WORKER;
                    (first..(first + FRAMES_PER_WORKER).min(end))
                        .map(|f| engine.run_frame(ebn0_db, f))
                        .collect()
                })
                .collect()
        });
        for (offset, result) in results.into_iter().flatten().enumerate() {
            let frame = start + offset as u64;
            let result = result.map_err(|e| e.context(format!("frame {frame} at {ebn0_db} dB")))?;
            stats.add(&result);
            if should_stop(cfg, &stats) {
                return Ok(stats);
            }
        }
        next = end;
    }
    Ok(stats)
}

fn should_stop(cfg: &SimConfig, stats: &ErrorStats) -> bool {
    stats.frames >= cfg.max_frames
        || (stats.bit_errors >= cfg.target_bit_errors && stats.bits >= cfg.min_bits)
}

/// Runs every Eb/N0 point of the configuration.
pub fn sweep(cfg: &SimConfig, workers: usize) -> Result<Vec<PointResult>> {
    sweep_with_progress(cfg, workers, |_| {})
}

/// [`sweep`] that reports each point as soon as it is finished.
pub fn sweep_with_progress(
    cfg: &SimConfig,
    workers: usize,
    mut progress: impl FnMut(&PointResult),
) -> Result<Vec<PointResult>> {
    cfg.validate()?;
    if cfg.ebn0_db.is_empty() {
        return Err(invalid("the Eb/N0 list is empty"));
    }
    let pool = build_pool(workers)?;
    let mut engines = (0..workers)
        .map(|_| FrameEngine::new(cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(cfg.ebn0_db.len());
    for &ebn0_db in &cfg.ebn0_db {
        let stats = run_point_with(cfg, ebn0_db, &pool, &mut engines)
            .map_err(|e: Error| e.context(format!("simulating {ebn0_db} dB")))?;
        let point = PointResult { ebn0_db, stats };
        progress(&point);
        points.push(point);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(errors: &[u64]) -> FrameResult {
        FrameResult {
            bits_per_user: 10,
            user_errors: errors.to_vec(),
        }
    }

    #[test]
    fn stats_accumulate() {
        let mut s = ErrorStats::new(2);
        s.add(&frame(&[0, 0]));
        s.add(&frame(&[3, 0]));
        s.add(&frame(&[1, 2]));
        assert_eq!(
            (s.bits, s.bit_errors, s.frames, s.frame_errors),
            (60, 6, 3, 2)
        );
        assert_eq!(s.user_frame_errors, vec![2, 1]);
        assert_eq!(s.ber(), 0.1);
        assert!((s.fer() - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.user_fer(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_stats_have_zero_rates() {
        let s = ErrorStats::new(1);
        assert_eq!((s.ber(), s.fer(), s.ber_std_error()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let cfg = SimConfig {
            ebn0_db: vec![],
            ..SimConfig::default()
        };
        assert!(sweep(&cfg, 1).is_err());
        assert!(run_point(&SimConfig::default(), 0.0, 0).is_err());
    }
}
