//! Pulse-level Monte Carlo simulation of the protocol's quantum phase
//! under an honest measuring node, with dark counts and imperfect
//! visibility. The tallies it produces feed the security engine and
//! cross-validate the analytic channel model.
//!
//! Per window: both senders draw a uniform phase bit. Matching bits route
//! intensity `(1+V) eta mu` to the constructive detector and
//! `(1-V) eta mu` to the destructive one; mismatched bits swap the two.
//! Each detector clicks independently with probability `1 - (1-d) e^-I`.
//! Exactly-one-click windows are successful: a left click keeps the
//! receiver's bit, a right click flips it, so a bit error is precisely a
//! click on the dim detector. Successful windows then become estimation
//! windows with probability `P_est`, signal windows otherwise. Double
//! clicks are counted and discarded.
//!
//! Randomness is a counter-based stream: draw j of window w is a pure
//! function of `(seed, 5w + j)`, so any partition of the window range
//! into batches reproduces the serial stream exactly and tallies merge by
//! integer addition. Streaming accumulation only; nothing is stored per
//! window.

use rayon::prelude::*;

use crate::channel::{self, ChannelParams};
use crate::error::{Error, Result};
use crate::security::{ProtocolParams, Tallies};

/// Uniform draws consumed per window (two phase bits, two detectors, one
/// estimation choice). Fixed so the stream layout never depends on
/// branching.
const DRAWS_PER_WINDOW: u64 = 5;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer over a Weyl sequence; draw `position` of stream
/// `seed`.
#[inline]
fn draw(seed: u64, position: u64) -> u64 {
    let mut z = seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(position.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in [0, 1) from the top 53 bits.
#[inline]
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One simulation run: window count, protocol and channel parameters, the
/// stream seed, and the batch granularity used for parallel accumulation.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub n_windows: u64,
    pub protocol: ProtocolParams,
    pub channel: ChannelParams,
    pub seed: u64,
    /// Windows per accumulation batch. Results are identical for every
    /// batch size; it only bounds per-task work.
    pub batch_size: u64,
}

impl SimConfig {
    pub const DEFAULT_BATCH_SIZE: u64 = 1 << 20;

    pub fn new(
        n_windows: u64,
        protocol: ProtocolParams,
        channel: ChannelParams,
        seed: u64,
    ) -> Result<Self> {
        if n_windows == 0 {
            return Err(Error::OutOfRange {
                name: "n_windows",
                value: 0.0,
                reason: "simulation needs at least one window",
            });
        }
        Ok(Self {
            n_windows,
            protocol,
            channel,
            seed,
            batch_size: Self::DEFAULT_BATCH_SIZE,
        })
    }

    pub fn with_batch_size(mut self, batch_size: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::OutOfRange {
                name: "batch_size",
                value: 0.0,
                reason: "batch size must be positive",
            });
        }
        self.batch_size = batch_size;
        Ok(self)
    }
}

/// Exact integer tallies of one run. The four click categories partition
/// the window count; successful windows split into signal and estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimTallies {
    pub n_sig: u64,
    pub n_est: u64,
    pub n_est_bit: u64,
    pub n_sig_bit_err: u64,
    pub n_left_clicks: u64,
    pub n_right_clicks: u64,
    pub n_double_clicks: u64,
    pub n_no_click: u64,
}

impl SimTallies {
    fn merge(mut self, o: SimTallies) -> SimTallies {
        self.n_sig += o.n_sig;
        self.n_est += o.n_est;
        self.n_est_bit += o.n_est_bit;
        self.n_sig_bit_err += o.n_sig_bit_err;
        self.n_left_clicks += o.n_left_clicks;
        self.n_right_clicks += o.n_right_clicks;
        self.n_double_clicks += o.n_double_clicks;
        self.n_no_click += o.n_no_click;
        self
    }
}

/// Runs the simulation. Deterministic in the seed and independent of the
/// batch size and of how batches are scheduled across threads.
pub fn simulate(cfg: &SimConfig) -> SimTallies {
    let v = cfg.channel.visibility();
    let d = cfg.channel.dark_rate;
    let intensity = channel::transmittance(&cfg.channel) * cfg.protocol.mu;
    let p_bright = channel::click_probability((1.0 + v) * intensity, d);
    let p_dim = channel::click_probability((1.0 - v) * intensity, d);
    let p_est = cfg.protocol.p_est;
    let seed = cfg.seed;

    let n_batches = cfg.n_windows.div_ceil(cfg.batch_size);
    (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let start = batch * cfg.batch_size;
            let end = (start + cfg.batch_size).min(cfg.n_windows);
            let mut t = SimTallies::default();
            for w in start..end {
                let base = w * DRAWS_PER_WINDOW;
                let alice = draw(seed, base) >> 63;
                let bob = draw(seed, base + 1) >> 63;
                let click_bright = unit(draw(seed, base + 2)) < p_bright;
                let click_dim = unit(draw(seed, base + 3)) < p_dim;
                match (click_bright, click_dim) {
                    (true, true) => t.n_double_clicks += 1,
                    (false, false) => t.n_no_click += 1,
                    (bright, _) => {
                        // Matching bits aim the bright output at the left
                        // detector; a dim-side click is a bit error.
                        let left = bright == (alice == bob);
                        if left {
                            t.n_left_clicks += 1;
                        } else {
                            t.n_right_clicks += 1;
                        }
                        let bit_err = !bright;
                        if unit(draw(seed, base + 4)) < p_est {
                            t.n_est += 1;
                            t.n_est_bit += u64::from(bit_err);
                        } else {
                            t.n_sig += 1;
                            t.n_sig_bit_err += u64::from(bit_err);
                        }
                    }
                }
            }
            t
        })
        .reduce(SimTallies::default, SimTallies::merge)
}

/// Projection onto the engine's tallies, dropping simulator-only
/// diagnostics.
pub fn tallies_to_engine(st: &SimTallies) -> Tallies {
    Tallies {
        n_sig: st.n_sig as f64,
        n_est: st.n_est as f64,
        n_est_bit: st.n_est_bit as f64,
        n_sig_bit_err: st.n_sig_bit_err as f64,
    }
}

/// Standard score of an observed count against a Binomial(n, p) model.
pub fn z_score(observed: u64, n_trials: u64, p: f64) -> f64 {
    let n = n_trials as f64;
    let mean = n * p;
    let var = n * p * (1.0 - p);
    if var <= 0.0 {
        return if observed as f64 == mean {
            0.0
        } else {
            f64::INFINITY
        };
    }
    (observed as f64 - mean) / var.sqrt()
}
