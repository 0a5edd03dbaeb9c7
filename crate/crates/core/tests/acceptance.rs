//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use mccdma::channel::{
    estimate_spatial_correlation, max_doppler, measure_coherence_bandwidth, ChannelProfile, Side,
    SpatialConfig,
};
use mccdma::coding::{TurboCode, TurboConfig};
use mccdma::modem::Constellation;
use mccdma::ofdm::OfdmParams;
use mccdma::sim::{self, ChannelKind, Coding, ErrorStats, FrameEngine, SimConfig};
use mccdma::spreading::MappingScheme;
use mccdma::stbc::Detector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn workers() -> usize {
    std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(8)
}

fn run(cfg: &SimConfig, ebn0: f64) -> ErrorStats {
    sim::run_point(cfg, ebn0, workers()).expect("simulation runs")
}

fn awgn_anchor() -> Outcome {
    let cfg = SimConfig {
        channel_model: ChannelKind::Flat,
        nt: 1,
        nr: 1,
        detector: Detector::Mmse,
        min_bits: 10_000_000,
        target_bit_errors: 1,
        ..SimConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for ebn0 in [4.0, 6.0, 8.0] {
        let s = run(&cfg, ebn0);
        let p = q((2.0 * 10f64.powf(ebn0 / 10.0)).sqrt());
        let se = (p * (1.0 - p) / s.bits as f64).sqrt();
        let z = (s.ber() - p) / se;
        pass &= s.bits >= 10_000_000 && z.abs() <= 3.0;
        parts.push(format!(
            "{ebn0} dB: {:.4e} vs {:.4e} ({z:+.2} SE, {} bits)",
            s.ber(),
            p,
            s.bits
        ));
    }
    (pass, parts.join("; "))
}

/// `E[Q(sqrt(2 x Eb/N0))]` with `x ~ Gamma(2, 1/2)`, the post-combining SNR
/// factor of two half-power Rayleigh branches, by composite Simpson
/// integration.
fn mrc_two_branch_ber(ebn0_db: f64) -> f64 {
    let g = 10f64.powf(ebn0_db / 10.0);
    let pdf = |x: f64| 4.0 * x * (-2.0 * x).exp();
    let f = |x: f64| q((2.0 * x * g).sqrt()) * pdf(x);
    let (a, b, n) = (0.0, 30.0, 200_000);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

fn alamouti_anchor() -> Outcome {
    let ebn0 = 14.0;
    let cfg = SimConfig {
        channel_model: ChannelKind::BlockRayleigh,
        rayleigh_block_subcarriers: 16,
        chip_mapping: MappingScheme::OneDa,
        lc: 16,
        users: 16,
        nt: 2,
        nr: 1,
        detector: Detector::Zf,
        target_bit_errors: 40_000,
        ..SimConfig::default()
    };
    let s = run(&cfg, ebn0);
    let oracle = mrc_two_branch_ber(ebn0);
    let rel = (s.ber() - oracle).abs() / oracle;
    (
        rel <= 0.10,
        format!(
            "{ebn0} dB: {:.4e} vs oracle {:.4e} ({:.1}% off, {} errors)",
            s.ber(),
            oracle,
            100.0 * rel,
            s.bit_errors
        ),
    )
}

fn noiseless_identity() -> Outcome {
    let mut failures = Vec::new();
    let mut runs = 0;
    for scheme in MappingScheme::ALL {
        for detector in [Detector::Zf, Detector::Mmse] {
            for nr in [1, 2] {
                for modulation in [Constellation::Qpsk, Constellation::Qam16] {
                    for coding in [Coding::None, Coding::TurboR12] {
                        let cfg = SimConfig {
                            chip_mapping: scheme,
                            detector,
                            nt: 2,
                            nr,
                            modulation,
                            coding,
                            ..SimConfig::default()
                        };
                        let mut engine = FrameEngine::new(&cfg).expect("valid config");
                        let errors: u64 = (0..10)
                            .map(|f| engine.run_frame_with_noise(0.0, f).unwrap().bit_errors())
                            .sum();
                        runs += 1;
                        if errors > 0 {
                            failures.push(format!(
                                "{scheme}/{detector}/2x{nr}/{modulation}/{coding}: {errors}"
                            ));
                        }
                    }
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{runs} configurations x 10 frames, 0 bit errors")
    } else {
        format!("errors in {}", failures.join(", "))
    };
    (failures.is_empty() && runs == 64, detail)
}

fn channel_statistics() -> Outcome {
    let profile = ChannelProfile::bran_e();
    let spatial = SpatialConfig::default();
    let n = 32;
    let bs_half = estimate_spatial_correlation(&profile, &spatial, 0.5, Side::Bs, n, 1).unwrap();
    let ms_half = estimate_spatial_correlation(&profile, &spatial, 0.5, Side::Ms, n, 2).unwrap();
    let bs_ten = estimate_spatial_correlation(&profile, &spatial, 10.0, Side::Bs, n, 3).unwrap();
    let ms_ten = estimate_spatial_correlation(&profile, &spatial, 10.0, Side::Ms, n, 4).unwrap();
    let rms = profile.rms_delay_spread();
    let ofdm = OfdmParams::default();
    let bc = measure_coherence_bandwidth(
        &profile,
        &spatial,
        ofdm.subcarrier_spacing(),
        ofdm.used_carriers,
        n,
        5,
    )
    .unwrap();
    let fd = max_doppler(60.0 / 3.6, 5.0e9);
    let checks = [
        (bs_half - 0.7).abs() <= 0.15,
        (ms_half - 0.35).abs() <= 0.15,
        bs_ten < 0.15,
        ms_ten < 0.15,
        (0.2e-6..=0.3e-6).contains(&rms),
        (bc - 1.5e6).abs() <= 0.5e6,
        (fd - 277.8).abs() <= 0.1,
    ];
    (
        checks.iter().all(|&c| c),
        format!(
            "corr 0.5l BS {bs_half:.3} MS {ms_half:.3}, 10l BS {bs_ten:.3} MS {ms_ten:.3}; \
             rms delay {:.3} us; coherence bw {:.2} MHz; Doppler {fd:.2} Hz",
            rms * 1e6,
            bc / 1e6
        ),
    )
}

fn figure_ordering() -> Outcome {
    let ebn0 = 6.0;
    let base = SimConfig {
        chip_mapping: MappingScheme::OneDb,
        lc: 32,
        users: 32,
        bs_spacing_lambda: 10.0,
        ms_spacing_lambda: 0.5,
        target_bit_errors: 300,
        min_bits: 100 * 736 * 30 * 2,
        ..SimConfig::default()
    };
    let mut ber = std::collections::HashMap::new();
    let mut min_errors = u64::MAX;
    let setups = [(1, 1), (2, 1), (2, 2)];
    for (nt, nr) in setups {
        for detector in [Detector::Mmse, Detector::Zf] {
            let cfg = SimConfig {
                nt,
                nr,
                detector,
                ..base.clone()
            };
            let s = run(&cfg, ebn0);
            min_errors = min_errors.min(s.bit_errors);
            ber.insert((nt, nr, detector), s.ber());
        }
    }
    let b = |nt, nr, d| ber[&(nt, nr, d)];
    let gap = |nt, nr| (b(nt, nr, Detector::Zf) / b(nt, nr, Detector::Mmse)).log10();
    let diversity = b(2, 2, Detector::Mmse) < b(2, 1, Detector::Mmse)
        && b(2, 1, Detector::Mmse) < b(1, 1, Detector::Mmse);
    let mmse_better = setups
        .iter()
        .all(|&(nt, nr)| b(nt, nr, Detector::Mmse) <= b(nt, nr, Detector::Zf));
    let gap_shrinks = gap(2, 2) < gap(1, 1);
    let detail = setups
        .iter()
        .map(|&(nt, nr)| {
            format!(
                "{nt}x{nr} MMSE {:.3e} ZF {:.3e}",
                b(nt, nr, Detector::Mmse),
                b(nt, nr, Detector::Zf)
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (
        diversity && mmse_better && gap_shrinks && min_errors >= 300,
        format!(
            "{ebn0} dB: {detail}; ZF/MMSE gap {:.2} -> {:.2} -> {:.2} decades; min errors {min_errors}",
            gap(1, 1),
            gap(2, 1),
            gap(2, 2)
        ),
    )
}

fn zf_load_invariance() -> Outcome {
    let ebn0 = 8.0;
    // Errors are strongly correlated within a frame, so both loads run the
    // same frames and therefore see the same channel realizations.
    let compare = |nt: usize| {
        let base = SimConfig {
            nt,
            nr: 1,
            detector: Detector::Zf,
            max_frames: 400,
            target_bit_errors: u64::MAX,
            ..SimConfig::default()
        };
        let single = run(
            &SimConfig {
                users: 1,
                ..base.clone()
            },
            ebn0,
        );
        let full = run(&SimConfig { users: 32, ..base }, ebn0);
        let (a_lo, a_hi) = single.ber_interval();
        let (b_lo, b_hi) = full.ber_interval();
        (
            a_lo <= b_hi && b_lo <= a_hi,
            format!(
                "{nt}x1: Nu=1 {:.4e} [{a_lo:.3e}, {a_hi:.3e}], Nu=32 {:.4e} [{b_lo:.3e}, {b_hi:.3e}]",
                single.ber(),
                full.ber()
            ),
        )
    };
    let miso = compare(2);
    let siso = compare(1);
    (
        miso.0 && siso.0,
        format!("{ebn0} dB, 400 frames each; {}; {}", miso.1, siso.1),
    )
}

fn bpsk_llrs(code: &[u8], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    code.iter()
        .map(|&b| {
            let n: f64 = StandardNormal.sample(rng);
            let y = if b == 0 { 1.0 } else { -1.0 } + sigma * n;
            2.0 * y / (sigma * sigma)
        })
        .collect()
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn turbo_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let code = TurboCode::new(TurboConfig::new(320)).unwrap();
    let exact = (0..100).all(|_| {
        let bits = random_bits(&mut rng, 320);
        let llrs: Vec<f64> = code
            .encode(&bits)
            .unwrap()
            .iter()
            .map(|&b| if b == 0 { 20.0 } else { -20.0 })
            .collect();
        code.decode(&llrs).unwrap().bits == bits
    });

    // Brute-force ML over all 256 messages at Es/N0 = 0 dB.
    let small = TurboCode::new(TurboConfig::new(8)).unwrap();
    let book: Vec<(Vec<u8>, Vec<u8>)> = (0..256u32)
        .map(|m| {
            let msg: Vec<u8> = (0..8).map(|i| ((m >> i) & 1) as u8).collect();
            let cw = small.encode(&msg).unwrap();
            (msg, cw)
        })
        .collect();
    let sigma = std::f64::consts::FRAC_1_SQRT_2;
    let trials = 100;
    let mut agree = 0;
    for _ in 0..trials {
        let (_, cw) = &book[rng.random_range(0..256)];
        let llrs = bpsk_llrs(cw, sigma, &mut rng);
        let ml = book
            .iter()
            .max_by(|a, b| {
                let score = |c: &[u8]| -> f64 {
                    c.iter()
                        .zip(&llrs)
                        .map(|(&bit, l)| if bit == 0 { *l } else { -*l })
                        .sum()
                };
                score(&a.1).total_cmp(&score(&b.1))
            })
            .unwrap();
        if small.decode(&llrs).unwrap().bits == ml.0 {
            agree += 1;
        }
    }
    let agreement = agree as f64 / trials as f64;

    // Eb/N0 at which the coded BER crosses 1e-4, against uncoded BPSK.
    let k = 684;
    let big = TurboCode::new(TurboConfig::new(k)).unwrap();
    let target = 1e-4;
    let uncoded = {
        let (mut lo, mut hi) = (0.0f64, 15.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if q((2.0 * 10f64.powf(mid / 10.0)).sqrt()) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mut prev: Option<(f64, f64)> = None;
    let mut coded = f64::NAN;
    let mut ebn0 = 0.0;
    while ebn0 <= uncoded {
        let sigma = (1.0 / (2.0 * 0.5 * 10f64.powf(ebn0 / 10.0))).sqrt();
        let (mut bits, mut errors) = (0u64, 0u64);
        while bits < 2_000_000 && errors < 200 {
            let msg = random_bits(&mut rng, k);
            let llrs = bpsk_llrs(&big.encode(&msg).unwrap(), sigma, &mut rng);
            let out = big.decode(&llrs).unwrap().bits;
            errors += out.iter().zip(&msg).filter(|(a, b)| a != b).count() as u64;
            bits += k as u64;
        }
        let ber = errors as f64 / bits as f64;
        if ber <= target {
            coded = match prev {
                Some((e0, b0)) if b0 > target && ber > 0.0 => {
                    let t = (b0.log10() - target.log10()) / (b0.log10() - ber.log10());
                    e0 + t * (ebn0 - e0)
                }
                _ => ebn0,
            };
            break;
        }
        prev = Some((ebn0, ber));
        ebn0 += 0.25;
    }
    let gain = uncoded - coded;
    (
        exact && agreement >= 0.95 && gain >= 2.0,
        format!(
            "noiseless K=320 x100 exact: {exact}; ML agreement K=8 {:.0}%; \
             BER 1e-4 at {coded:.2} dB coded vs {uncoded:.2} dB uncoded (gain {gain:.2} dB)",
            100.0 * agreement
        ),
    )
}

fn write_config(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "det.toml",
        "nt = 2\nnr = 2\ncoding = \"turbo_r12\"\nebn0_db = [0.0, 2.0]\n\
         target_bit_errors = 3000\nmax_frames = 40\nmaster_seed = 99\n",
    );
    let mut outputs = Vec::new();
    for w in [1, 4, 8] {
        let out = dir.path().join(format!("w{w}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_mccdma"))
            .args(["simulate", "--config"])
            .arg(&config)
            .args(["--workers", &w.to_string(), "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(&out).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    let rows = sim::read_csv(outputs[0].as_slice()).unwrap();
    (
        same,
        format!(
            "workers 1/4/8 byte-identical: {same} ({} rows, frames {:?})",
            rows.len(),
            rows.iter().map(|r| r.frames).collect::<Vec<_>>()
        ),
    )
}

fn throughput() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "info.toml",
        "modulation = \"qpsk\"\ncoding = \"none\"\n",
    );
    let out = Command::new(env!("CARGO_BIN_EXE_mccdma"))
        .args(["info", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    let value = text
        .lines()
        .find(|l| l.starts_with("throughput "))
        .and_then(|l| l.split_whitespace().nth(1))
        .and_then(|v| v.parse::<f64>().ok());
    match value {
        Some(v) => (
            (66.0..=69.0).contains(&v),
            format!("info reports {v} Mbit/s"),
        ),
        None => (false, format!("no throughput line in: {text}")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("analytic AWGN anchor", awgn_anchor),
        ("Alamouti diversity anchor", alamouti_anchor),
        ("noiseless identity", noiseless_identity),
        ("channel statistics", channel_statistics),
        ("figure ordering", figure_ordering),
        ("ZF load invariance", zf_load_invariance),
        ("turbo chain", turbo_chain),
        ("determinism", determinism),
        ("throughput arithmetic", throughput),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check();
        failed += usize::from(!pass);
        println!(
            "{} {}. {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
