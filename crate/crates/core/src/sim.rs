//! Monte Carlo and exact evaluation of grown codes.
//!
//! Trial `i` of a run seeded with `s` draws from ChaCha8 keyed by `s` on
//! stream `i` (see [`trial_rng`]), so counts do not depend on how trials are
//! spread over threads. Thread count follows `RAYON_NUM_THREADS`.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ErasureRate;
use crate::codec::{encode_in_place, transmit_into, MessageLayout, ScDecoder, TernarySymbol};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{epsilon_for_depth, CodeSpec};

pub const DEFAULT_SEED: u64 = 0x5EED_0382;

/// Longest block [`exact_error_enumeration`] will walk (2^16 patterns).
pub const MAX_ENUMERATION_LENGTH: usize = 16;

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub z0: f64,
    pub channel: f64,
    pub epsilon: f64,
    pub n: u32,
    pub trials: u64,
    pub block_errors: u64,
    pub info_bits_total: u64,
    pub p_bound: f64,
    pub wall_time_per_info_bit: f64,
    pub seed: u64,
}

impl SimReport {
    pub fn block_error_rate(&self) -> f64 {
        self.block_errors as f64 / self.trials as f64
    }

    /// Binomial standard error of [`Self::block_error_rate`].
    pub fn std_error(&self) -> f64 {
        let p = self.block_error_rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub const CSV_HEADER: &'static str =
        "z0,channel,epsilon,n,trials,block_errors,info_bits_total,p_bound,wall_time_per_info_bit,seed";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.z0,
            self.channel,
            self.epsilon,
            self.n,
            self.trials,
            self.block_errors,
            self.info_bits_total,
            self.p_bound,
            self.wall_time_per_info_bit,
            self.seed
        )
    }
}

/// Sends the all-zero codeword of `spec` over `BEC(spec.z0)` `trials` times.
pub fn monte_carlo(spec: &CodeSpec<f64>, trials: u64, seed: u64) -> Result<SimReport> {
    monte_carlo_on(spec, spec.z0(), trials, seed)
}

/// Like [`monte_carlo`] but over an arbitrary channel, not necessarily the
/// one the code was designed for.
pub fn monte_carlo_on(
    spec: &CodeSpec<f64>,
    channel: &ErasureRate<f64>,
    trials: u64,
    seed: u64,
) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let layout = MessageLayout::new(spec)?;
    let len = layout.len();
    let start = Instant::now();
    let block_errors: u64 = (0..trials)
        .into_par_iter()
        .map_init(
            || {
                let decoder = ScDecoder::new(spec).expect("layout already validated");
                (decoder, vec![0u8; len], vec![TernarySymbol::Erased; len])
            },
            |(decoder, x, y), trial| {
                let mut rng = trial_rng(seed, trial);
                x.fill(0);
                encode_in_place(spec, x);
                transmit_into(x, channel, &mut rng, y);
                let outcome = decoder
                    .decode_with(y, |_, _, _| {})
                    .expect("all-zero codeword cannot produce a conflict");
                u64::from(outcome.is_failure())
            },
        )
        .sum();
    let elapsed = start.elapsed().as_secs_f64();
    let info_bits_total = trials * layout.dimension() as u64;
    Ok(SimReport {
        z0: spec.z0().to_f64(),
        channel: channel.to_f64(),
        epsilon: *spec.epsilon(),
        n: spec.n(),
        trials,
        block_errors,
        info_bits_total,
        p_bound: *spec.p_bound(),
        wall_time_per_info_bit: if info_bits_total == 0 {
            f64::NAN
        } else {
            elapsed / info_bits_total as f64
        },
        seed,
    })
}

/// Exact block-error probability of `spec` on `BEC(spec.z0)` by summing over
/// every erasure pattern.
pub fn exact_error_enumeration<S: Scalar>(spec: &CodeSpec<S>) -> Result<f64> {
    let z = spec
        .z0()
        .value()
        .to_f64()
        .and_then(|z| ErasureRate::new(z).ok())
        .ok_or_else(|| Error::InvalidParameter("z0 is not representable as f64".into()))?;
    exact_error_enumeration_on(spec, &z)
}

pub fn exact_error_enumeration_on<S: Scalar>(spec: &CodeSpec<S>, channel: &ErasureRate<f64>) -> Result<f64> {
    let len = usize::try_from(spec.block_length()).unwrap_or(usize::MAX);
    if len > MAX_ENUMERATION_LENGTH {
        return Err(Error::EnumerationBudget {
            length: len,
            limit: MAX_ENUMERATION_LENGTH,
        });
    }
    let mut decoder = ScDecoder::new(spec)?;
    // failing patterns, bucketed by number of erasures
    let mut failures = vec![0u64; len + 1];
    let mut y = vec![TernarySymbol::Zero; len];
    for mask in 0u32..(1u32 << len) {
        for (i, s) in y.iter_mut().enumerate() {
            *s = if mask >> i & 1 == 1 {
                TernarySymbol::Erased
            } else {
                TernarySymbol::Zero
            };
        }
        if decoder.decode_with(&y, |_, _, _| {})?.is_failure() {
            failures[mask.count_ones() as usize] += 1;
        }
    }
    let z = channel.to_f64();
    Ok(failures
        .iter()
        .enumerate()
        .map(|(k, &count)| count as f64 * z.powi(k as i32) * (1.0 - z).powi((len - k) as i32))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub block_length: u64,
    pub rate: f64,
    pub p_bound: f64,
    pub e_tau: f64,
    pub time_per_info_bit: Option<f64>,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "n,epsilon,N,rate,p_bound,e_tau,time_per_info_bit";

    pub fn from_spec(spec: &CodeSpec<f64>) -> Self {
        Self {
            n: spec.n(),
            epsilon: *spec.epsilon(),
            block_length: spec.block_length(),
            rate: *spec.rate(),
            p_bound: *spec.p_bound(),
            e_tau: *spec.expected_tau(),
            time_per_info_bit: None,
        }
    }

    pub fn csv_line(&self) -> String {
        let mut line = format!(
            "{},{},{},{},{},{},",
            self.n, self.epsilon, self.block_length, self.rate, self.p_bound, self.e_tau
        );
        if let Some(t) = self.time_per_info_bit {
            let _ = write!(line, "{t}");
        }
        line
    }
}

/// Timed companion runs for a sweep: `channel_uses / N` blocks per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepTiming {
    pub channel_uses: u64,
    pub seed: u64,
}

/// Exact metrics for `eps = 2^(-n/5)` and each `n` in `ns`.
pub fn sweep_exact(z0: &ErasureRate<f64>, ns: RangeInclusive<u32>) -> Result<Vec<SweepRow>> {
    sweep(z0, ns, None)
}

pub fn sweep(
    z0: &ErasureRate<f64>,
    ns: RangeInclusive<u32>,
    timing: Option<SweepTiming>,
) -> Result<Vec<SweepRow>> {
    ns.map(|n| {
        let spec = CodeSpec::grow(z0.clone(), epsilon_for_depth(n), Some(n))?;
        let mut row = SweepRow::from_spec(&spec);
        if let Some(t) = timing {
            let trials = (t.channel_uses >> n).max(1);
            let report = monte_carlo(&spec, trials, t.seed)?;
            row.time_per_info_bit = Some(report.wall_time_per_info_bit);
        }
        Ok(row)
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauSample {
    pub trials: u64,
    pub mean: f64,
    /// Unbiased sample variance of the stopping depth.
    pub variance: f64,
}

impl TauSample {
    pub fn std_error(&self) -> f64 {
        (self.variance / self.trials as f64).sqrt()
    }
}

/// Depth at which one random walk down the (implicit) tree stops.
pub fn stopping_depth<R: Rng + ?Sized>(z0: &ErasureRate<f64>, threshold: f64, n: u32, rng: &mut R) -> u32 {
    let mut z = z0.clone();
    let mut depth = 0;
    while depth < n && z.polarization_gap() > threshold {
        z = if rng.random::<bool>() { z.sharp() } else { z.flat() };
        depth += 1;
    }
    depth
}

/// Sample mean of the stopping depth over `trials` random walks.
pub fn sample_tau(z0: &ErasureRate<f64>, epsilon: f64, n: u32, trials: u64, seed: u64) -> Result<TauSample> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be a positive finite number, got {epsilon}"
        )));
    }
    let threshold = epsilon * f64::pow2_neg(n);
    let (sum, sum_sq) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let d = u64::from(stopping_depth(z0, threshold, n, &mut trial_rng(seed, i)));
            (d, d * d)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let t = trials as f64;
    let mean = sum as f64 / t;
    let variance = if trials > 1 {
        (sum_sq as f64 - t * mean * mean).max(0.0) / (t - 1.0)
    } else {
        0.0
    };
    Ok(TauSample {
        trials,
        mean,
        variance,
    })
}
