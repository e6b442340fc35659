//! Key-rate maximization over the free protocol parameters and rate-loss
//! curve generation.
//!
//! The objective has hard zero plateaus (clamped rates) that defeat
//! gradient methods, so the search is a log-spaced coarse grid followed by
//! local log-grid refinement around the incumbent. Evaluations may run
//! concurrently; the argmax reduction is a lexicographic
//! (rate, -mu, -p_est) fold over the grid in index order, so results are
//! deterministic regardless of scheduling.

use rayon::prelude::*;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::security::{self, KeyRateResult, ProtocolParams};

/// Whether to optimize the finite-key rate at a given window count or the
/// collective-attack infinite-key rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Finite,
    Asymptotic,
}

/// Search ranges and grid resolution.
///
/// The default intensity range reaches down to 1e-8: the optimal intensity
/// tracks the per-arm transmittance (roughly `mu* ~ eta / 10`), so a
/// floor of 1e-4 would already clamp every point past ~50 dB to zero rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    /// Intensity search interval (log-spaced), within (0, inf).
    pub mu_range: (f64, f64),
    /// Estimation-probability search interval (log-spaced). Capped at 1/2
    /// by default: estimating more than half the windows can never help
    /// the `1 - P_est` rate prefactor.
    pub p_est_range: (f64, f64),
    /// Grid points per axis in each pass.
    pub coarse_grid: usize,
    /// Local refinement passes after the coarse scan.
    pub refine_rounds: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            mu_range: (1e-8, 1.0),
            p_est_range: (1e-4, 0.5),
            coarse_grid: 25,
            refine_rounds: 3,
        }
    }
}

impl SearchSpec {
    fn validate(&self) -> Result<()> {
        let ranges = [
            ("mu_range", self.mu_range, f64::INFINITY),
            ("p_est_range", self.p_est_range, 1.0),
        ];
        for (name, (lo, hi), cap) in ranges {
            if !(lo > 0.0 && lo <= hi && hi < cap && hi.is_finite()) {
                return Err(Error::OutOfRange {
                    name,
                    value: lo,
                    reason: "range must satisfy 0 < lo <= hi within physical bounds",
                });
            }
        }
        if self.coarse_grid < 2 {
            return Err(Error::OutOfRange {
                name: "coarse_grid",
                value: self.coarse_grid as f64,
                reason: "need at least two grid points per axis",
            });
        }
        Ok(())
    }
}

/// Best parameters found at one channel point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizedPoint {
    pub mu: f64,
    /// Zero in asymptotic mode (no estimation overhead in the
    /// infinite-key limit).
    pub p_est: f64,
    pub result: KeyRateResult,
}

/// One record of a rate-loss curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub loss_db: f64,
    pub distance_km: f64,
    pub point: OptimizedPoint,
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if lo == hi || points == 1 {
        return vec![lo];
    }
    let ratio = hi / lo;
    (0..points)
        .map(|i| lo * ratio.powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// Lexicographic (rate, -mu, -p_est) preference.
fn better(candidate: &OptimizedPoint, incumbent: &OptimizedPoint) -> bool {
    let c = (candidate.result.rate, -candidate.mu, -candidate.p_est);
    let i = (incumbent.result.rate, -incumbent.mu, -incumbent.p_est);
    c > i
}

/// The objective being maximized, bundled for grid evaluation.
struct Objective<'a> {
    ch: &'a ChannelParams,
    n_windows: f64,
    eps_total: f64,
    f_ec: f64,
    mode: Mode,
}

impl Objective<'_> {
    /// One grid evaluation. Parameter combinations the engine rejects
    /// (for example an inversion with no finite solution) are simply not
    /// candidates.
    fn eval(&self, mu: f64, p_est: f64) -> Option<OptimizedPoint> {
        match self.mode {
            Mode::Finite => {
                let p = ProtocolParams::new(mu, p_est, self.n_windows, self.f_ec, self.eps_total)
                    .ok()?;
                let (_, result) = security::key_rate_finite(self.ch, &p).ok()?;
                Some(OptimizedPoint { mu, p_est, result })
            }
            Mode::Asymptotic => {
                let result = security::key_rate_asymptotic(mu, self.ch, self.f_ec).ok()?;
                Some(OptimizedPoint {
                    mu,
                    p_est: 0.0,
                    result,
                })
            }
        }
    }

    fn best_on_grid(
        &self,
        mus: &[f64],
        p_ests: &[f64],
        incumbent: Option<OptimizedPoint>,
    ) -> Option<OptimizedPoint> {
        let candidates: Vec<OptimizedPoint> = mus
            .par_iter()
            .flat_map_iter(|&mu| p_ests.iter().map(move |&p_est| (mu, p_est)))
            .filter_map(|(mu, p_est)| self.eval(mu, p_est))
            .collect();
        // Sequential fold in grid order keeps the tie-break deterministic.
        candidates
            .into_iter()
            .fold(incumbent, |best, cand| match best {
                Some(b) if !better(&cand, &b) => Some(b),
                _ => Some(cand),
            })
    }
}

/// Shrunken log-range one coarse step around `center`, clipped to the
/// original bounds.
fn refine_range(center: f64, (lo, hi): (f64, f64), points: usize) -> (f64, f64) {
    let step = (hi / lo).powf(1.0 / (points - 1) as f64);
    ((center / step).max(lo), (center * step).min(hi))
}

/// Maximizes the key rate at one channel point. Deterministic for a fixed
/// spec; a channel with no positive-rate parameters yields a zero-rate
/// point, not an error.
pub fn optimize_point(
    ch: &ChannelParams,
    n_windows: f64,
    eps_total: f64,
    f_ec: f64,
    spec: &SearchSpec,
    mode: Mode,
) -> Result<OptimizedPoint> {
    spec.validate()?;
    let objective = Objective {
        ch,
        n_windows,
        eps_total,
        f_ec,
        mode,
    };
    let k = spec.coarse_grid;
    let mut mu_range = spec.mu_range;
    let mut p_range = spec.p_est_range;

    let mut best: Option<OptimizedPoint> = None;
    for _round in 0..=spec.refine_rounds {
        let mus = log_grid(mu_range.0, mu_range.1, k);
        let p_ests = match mode {
            Mode::Finite => log_grid(p_range.0, p_range.1, k),
            Mode::Asymptotic => vec![0.0],
        };
        best = objective.best_on_grid(&mus, &p_ests, best);
        let Some(ref b) = best else { break };
        mu_range = refine_range(b.mu, spec.mu_range, k);
        if mode == Mode::Finite {
            p_range = refine_range(b.p_est.max(spec.p_est_range.0), spec.p_est_range, k);
        }
    }

    // Every grid point failing to evaluate still yields a zero-rate point
    // at the bottom of the search box, not an error.
    Ok(best.unwrap_or(OptimizedPoint {
        mu: spec.mu_range.0,
        p_est: match mode {
            Mode::Finite => spec.p_est_range.0,
            Mode::Asymptotic => 0.0,
        },
        result: KeyRateResult {
            key_length: 0.0,
            rate: 0.0,
            e_bit: 0.0,
            e_ph_bound: 0.0,
            eps_total: match mode {
                Mode::Finite => eps_total,
                Mode::Asymptotic => 0.0,
            },
            clamped: true,
        },
    }))
}

/// Optimizes every point of a loss grid (dB, ascending). One record per
/// grid point.
pub fn rate_distance_curve(
    ch_base: &ChannelParams,
    loss_grid_db: &[f64],
    n_windows: f64,
    eps_total: f64,
    f_ec: f64,
    spec: &SearchSpec,
    mode: Mode,
) -> Result<Vec<CurvePoint>> {
    let mut curve = Vec::with_capacity(loss_grid_db.len());
    for &loss_db in loss_grid_db {
        let ch = ch_base.with_loss_db(loss_db)?;
        let point = optimize_point(&ch, n_windows, eps_total, f_ec, spec, mode)?;
        curve.push(CurvePoint {
            loss_db,
            distance_km: ch.distance_km(),
            point,
        });
    }
    Ok(curve)
}

/// Largest loss on the curve still delivering a positive rate; `None`
/// when the whole curve is dead.
pub fn cutoff_loss_db(curve: &[CurvePoint]) -> Option<f64> {
    curve
        .iter()
        .filter(|c| c.point.result.rate > 0.0)
        .map(|c| c.loss_db)
        .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}
