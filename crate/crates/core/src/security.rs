//! Security engine: turns observed (or expected) tallies into a certified
//! phase-error bound, a key length and a key rate.
//!
//! Finite-key mode chains one Chernoff bound and three Kato bounds, each
//! at failure probability eps^2, into an upper bound on the number of
//! phase errors among signal windows:
//!
//! ```text
//! N_ph_bar = U_m{ 2 (1-P)/P U_e(N_est_bit)
//!                 + 2 sqrt(2) sqrt((1-P)/P) sqrt(U_e(N_est_bit) U_e(C0))
//!                 + 2 U_e(C0) },            C0 = C_U(N (1-P)(1 - e^-mu)^2),
//! ```
//!
//! evaluated innermost-first with every intermediate kept in the
//! certificate. The chain consumes 4 eps^2 of failure probability; with
//! the smoothing and correction parameters both set to eps the total
//! security parameter is 6 eps. Asymptotic mode instead bounds the
//! phase-error rate per successful window by
//! `2 P_err + 2 sqrt(2) sqrt(P_err P_oo) + 2 P_oo` with no estimation
//! overhead.

use crate::bounds::{self, BoundInput};
use crate::channel::{self, ChannelParams};
use crate::error::{Error, Result};

/// Source and protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Trusted upper bound on the pulse intensity (photons/pulse).
    pub mu: f64,
    /// Probability that a window is used for error estimation.
    pub p_est: f64,
    /// Number of time windows. Carried as a real so that runs beyond 2^53
    /// windows stay representable.
    pub n_windows: f64,
    /// Error-correction inefficiency, >= 1.
    pub f_ec: f64,
    /// Total security failure parameter; the per-inequality budget is
    /// `eps_total / 6`.
    pub eps_total: f64,
}

impl ProtocolParams {
    pub fn new(mu: f64, p_est: f64, n_windows: f64, f_ec: f64, eps_total: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::OutOfRange {
                name: "mu",
                value: mu,
                reason: "intensity bound must be finite and nonnegative",
            });
        }
        if !(p_est > 0.0 && p_est < 1.0) {
            return Err(Error::OutOfRange {
                name: "p_est",
                value: p_est,
                reason: "estimation probability must lie strictly in (0, 1)",
            });
        }
        if !(n_windows >= 1.0 && n_windows.is_finite()) {
            return Err(Error::OutOfRange {
                name: "n_windows",
                value: n_windows,
                reason: "window count must be finite and >= 1",
            });
        }
        if !(f_ec >= 1.0 && f_ec.is_finite()) {
            return Err(Error::OutOfRange {
                name: "f_ec",
                value: f_ec,
                reason: "error-correction efficiency must be >= 1",
            });
        }
        if !(eps_total > 0.0 && eps_total < 1.0) {
            return Err(Error::OutOfRange {
                name: "eps_total",
                value: eps_total,
                reason: "security parameter must lie in (0, 1)",
            });
        }
        Ok(Self {
            mu,
            p_est,
            n_windows,
            f_ec,
            eps_total,
        })
    }

    /// Per-inequality failure probability under the `eps_total = 6 eps`
    /// allocation (smoothing and correction parameters both equal to eps).
    pub fn component_epsilon(&self) -> f64 {
        self.eps_total / 6.0
    }
}

/// Observed or expected counts. Real-valued: the Monte Carlo path fills in
/// exact integers, the analytic path expected values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tallies {
    /// Signal (key-generation) windows with a successful measurement.
    pub n_sig: f64,
    /// Estimation windows with a successful measurement.
    pub n_est: f64,
    /// Bit errors among estimation windows.
    pub n_est_bit: f64,
    /// Bit errors among signal windows. Stands in for the error-correction
    /// disclosure that fixes the `f H2(e_bit)` cost.
    pub n_sig_bit_err: f64,
}

impl Tallies {
    /// Observed signal-window bit error rate; zero when there are no
    /// signal windows.
    pub fn e_bit(&self) -> f64 {
        if self.n_sig > 0.0 {
            self.n_sig_bit_err / self.n_sig
        } else {
            0.0
        }
    }

    fn check_against(&self, n: f64) -> Result<()> {
        let fields = [
            ("n_sig", self.n_sig, n),
            ("n_est", self.n_est, n),
            ("n_est_bit", self.n_est_bit, self.n_est),
            ("n_sig_bit_err", self.n_sig_bit_err, self.n_sig),
        ];
        for (name, value, limit) in fields {
            if !(value >= 0.0 && value.is_finite()) || value > limit * (1.0 + 1e-9) {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    reason: "tally inconsistent with the window count",
                });
            }
        }
        Ok(())
    }
}

/// The certified phase-error bound with its intermediate terms and the
/// failure probability consumed producing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseErrorCertificate {
    /// Upper bound on the number of phase errors among signal windows.
    pub n_ph_bar: f64,
    /// `2 (1-P)/P U_e(N_est_bit)`.
    pub term_bit: f64,
    /// `2 sqrt(2) sqrt((1-P)/P) sqrt(U_e(N_est_bit) U_e(C0))`.
    pub term_cross: f64,
    /// `2 U_e(C0)`.
    pub term_oo: f64,
    /// `4 eps^2`: three Kato bounds and one Chernoff bound at eps^2 each.
    pub eps_consumed: f64,
}

/// Key length, rate and diagnostics of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateResult {
    /// Extractable key length (clamped at zero).
    pub key_length: f64,
    /// Key rate per window, `l / N`.
    pub rate: f64,
    /// Bit error rate fed into the error-correction term.
    pub e_bit: f64,
    /// Phase-error ratio fed into the privacy-amplification term.
    pub e_ph_bound: f64,
    /// Total security parameter of the run (0 in asymptotic mode).
    pub eps_total: f64,
    /// True when a ratio exceeded 1/2 or the raw length went negative and
    /// the result was clamped.
    pub clamped: bool,
}

fn h2_clamped(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    -(p * p.log2()) - (1.0 - p) * (1.0 - p).log2()
}

/// Binary entropy `H2(p) = -p log2 p - (1-p) log2 (1-p)`, with
/// `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            reason: "entropy argument must lie in [0, 1]",
        });
    }
    Ok(h2_clamped(p))
}

/// Upper bound `(1 - e^-mu)^2` on the weight of the odd-odd component,
/// from the trusted vacuum-amplitude lower bound `e^-mu`.
pub fn p_oo_upper(mu: f64) -> f64 {
    assert!(mu >= 0.0, "mu must be nonnegative");
    let one_minus_vac = -(-mu).exp_m1();
    one_minus_vac * one_minus_vac
}

/// Certified upper bound on the number of phase errors among signal
/// windows, at per-inequality failure probability `eps^2`.
///
/// Every concentration bound runs over all `N` windows; the innermost
/// Chernoff output and the summed per-window bound are both capped at `N`
/// (window counts and probability sums cannot exceed it) before feeding
/// the next inversion.
pub fn phase_error_bound(
    t: &Tallies,
    p: &ProtocolParams,
    eps: f64,
) -> Result<PhaseErrorCertificate> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            reason: "failure probability must lie in (0, 1]",
        });
    }
    let n = p.n_windows;
    t.check_against(n)?;
    let eps2 = eps * eps;

    let c_raw = n * (1.0 - p.p_est) * p_oo_upper(p.mu);
    let c0 = bounds::chernoff_upper(c_raw, eps2)?.min(n);
    let u_bit = bounds::kato_upper_expectation(&BoundInput::new(t.n_est_bit, n, eps2)?);
    let u_oo = bounds::kato_upper_expectation(&BoundInput::new(c0, n, eps2)?);

    let ratio = (1.0 - p.p_est) / p.p_est;
    let term_bit = 2.0 * ratio * u_bit;
    let term_cross = 2.0 * std::f64::consts::SQRT_2 * ratio.sqrt() * (u_bit * u_oo).sqrt();
    let term_oo = 2.0 * u_oo;
    let summed = (term_bit + term_cross + term_oo).min(n);
    let n_ph_bar = bounds::kato_upper_observation(summed, n, eps2)?;

    Ok(PhaseErrorCertificate {
        n_ph_bar,
        term_bit,
        term_cross,
        term_oo,
        eps_consumed: 4.0 * eps2,
    })
}

/// Extractable key length
/// `l = N_sig (1 - H2(N_ph_bar / N_sig) - f H2(e_bit))
///      - 2 log2(1/(2 eps~)) - log2(2/eps_cor)`
/// with both epsilons set to `eps_total / 6`, clamped at zero.
///
/// Ratios above 1/2 saturate the entropy and zero the key; degenerate
/// inputs produce a zero-rate result, never an error.
pub fn key_length(t: &Tallies, cert: &PhaseErrorCertificate, p: &ProtocolParams) -> KeyRateResult {
    let eps = p.component_epsilon();
    let (eps_tilde, eps_cor) = (eps, eps);
    if t.n_sig <= 0.0 {
        return KeyRateResult {
            key_length: 0.0,
            rate: 0.0,
            e_bit: 0.0,
            e_ph_bound: 0.0,
            eps_total: p.eps_total,
            clamped: true,
        };
    }
    let raw_ratio = cert.n_ph_bar / t.n_sig;
    let e_ph = raw_ratio.clamp(0.0, 0.5);
    let e_bit = t.e_bit().clamp(0.0, 0.5);
    let log_terms = 2.0 * (1.0 / (2.0 * eps_tilde)).log2() + (2.0 / eps_cor).log2();
    let l_raw = t.n_sig * (1.0 - h2_clamped(e_ph) - p.f_ec * h2_clamped(e_bit)) - log_terms;
    KeyRateResult {
        key_length: l_raw.max(0.0),
        rate: l_raw.max(0.0) / p.n_windows,
        e_bit,
        e_ph_bound: e_ph,
        eps_total: p.eps_total,
        clamped: raw_ratio > 0.5 || l_raw < 0.0,
    }
}

/// Collective-attack, infinite-key rate at intensity bound `mu`:
/// per-window probabilities only, no estimation overhead.
///
/// With `Q = S_large + S_small`, `P_err = S_small` and
/// `P_oo = (1 - e^-mu)^2`:
///
/// ```text
/// e_ph = (2 P_err + 2 sqrt(2) sqrt(P_err P_oo) + 2 P_oo) / Q
/// R    = Q (1 - H2(e_ph) - f H2(e_bit))
/// ```
pub fn key_rate_asymptotic(mu: f64, ch: &ChannelParams, f_ec: f64) -> Result<KeyRateResult> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::OutOfRange {
            name: "mu",
            value: mu,
            reason: "intensity bound must be finite and nonnegative",
        });
    }
    if !(f_ec >= 1.0 && f_ec.is_finite()) {
        return Err(Error::OutOfRange {
            name: "f_ec",
            value: f_ec,
            reason: "error-correction efficiency must be >= 1",
        });
    }
    let cr = channel::click_rates(mu, ch);
    let q = cr.total();
    if q <= 0.0 {
        return Ok(KeyRateResult {
            key_length: 0.0,
            rate: 0.0,
            e_bit: 0.0,
            e_ph_bound: 0.0,
            eps_total: 0.0,
            clamped: true,
        });
    }
    let e_bit = (cr.s_small / q).clamp(0.0, 0.5);
    let p_err = cr.s_small;
    let p_oo = p_oo_upper(mu);
    let e_ph_raw =
        (2.0 * p_err + 2.0 * std::f64::consts::SQRT_2 * (p_err * p_oo).sqrt() + 2.0 * p_oo) / q;
    let e_ph = e_ph_raw.min(0.5);
    let r_raw = q * (1.0 - h2_clamped(e_ph) - f_ec * h2_clamped(e_bit));
    let rate = r_raw.max(0.0);
    Ok(KeyRateResult {
        key_length: if rate > 0.0 { f64::INFINITY } else { 0.0 },
        rate,
        e_bit,
        e_ph_bound: e_ph,
        eps_total: 0.0,
        clamped: e_ph_raw > 0.5 || r_raw < 0.0,
    })
}

/// Expected tallies of the analytic channel model, scaled to `n_windows`.
pub fn analytic_tallies(
    mu: f64,
    p_est: f64,
    ch: &ChannelParams,
    n_windows: f64,
) -> Result<Tallies> {
    let et = channel::expected_tallies(mu, p_est, ch)?;
    let cr = channel::click_rates(mu, ch);
    Ok(Tallies {
        n_sig: n_windows * et.n_sig_rate,
        n_est: n_windows * p_est * cr.total(),
        n_est_bit: n_windows * et.n_est_bit_rate,
        n_sig_bit_err: n_windows * (1.0 - p_est) * cr.s_small,
    })
}

/// Full analytic finite-key pipeline: expected tallies, certificate, key
/// rate.
pub fn key_rate_finite(
    ch: &ChannelParams,
    p: &ProtocolParams,
) -> Result<(PhaseErrorCertificate, KeyRateResult)> {
    let tallies = analytic_tallies(p.mu, p.p_est, ch, p.n_windows)?;
    let cert = phase_error_bound(&tallies, p, p.component_epsilon())?;
    let result = key_length(&tallies, &cert, p);
    Ok((cert, result))
}

#[cfg(test)]
// Frozen oracle constants keep their full printed precision.
#[allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]
mod tests {
    use super::*;

    fn assert_rel(actual: f64, expected: f64, tol: f64, what: &str) {
        let rel = (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        assert!(
            rel <= tol,
            "{what}: actual {actual:.17e}, expected {expected:.17e}, rel {rel:.3e}"
        );
    }

    #[test]
    fn binary_entropy_reference_points() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_rel(
            binary_entropy(0.11).unwrap(),
            0.499_915_958_164_528,
            1e-14,
            "H2(0.11)",
        );
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn odd_odd_weight_bound() {
        assert_eq!(p_oo_upper(0.0), 0.0);
        assert!((p_oo_upper(1e3) - 1.0).abs() < 1e-12);
        assert_rel(
            p_oo_upper(0.1),
            9.055_917_006_062_712e-3,
            1e-14,
            "P_oo(0.1)",
        );
    }

    fn reference_protocol(mu: f64, p_est: f64, n: f64) -> ProtocolParams {
        ProtocolParams::new(mu, p_est, n, 1.1, 1e-10).unwrap()
    }

    #[test]
    fn certificate_collapses_at_eps_one() {
        // At eps = 1 every bound returns its argument, so the certificate
        // must equal the three bare terms.
        let p = reference_protocol(0.05, 0.1, 1e12);
        let t = Tallies {
            n_sig: 1e8,
            n_est: 1.2e7,
            n_est_bit: 3.3e5,
            n_sig_bit_err: 2.9e6,
        };
        let cert = phase_error_bound(&t, &p, 1.0).unwrap();
        let c0 = p.n_windows * (1.0 - p.p_est) * p_oo_upper(p.mu);
        let expect_bit = 2.0 * (0.9 / 0.1) * t.n_est_bit;
        let expect_cross =
            2.0 * std::f64::consts::SQRT_2 * (0.9f64 / 0.1).sqrt() * (t.n_est_bit * c0).sqrt();
        let expect_oo = 2.0 * c0;
        assert_rel(cert.term_bit, expect_bit, 1e-12, "term_bit");
        assert_rel(cert.term_cross, expect_cross, 1e-12, "term_cross");
        assert_rel(cert.term_oo, expect_oo, 1e-12, "term_oo");
        assert_rel(
            cert.n_ph_bar,
            expect_bit + expect_cross + expect_oo,
            1e-12,
            "n_ph_bar",
        );
        assert_eq!(cert.eps_consumed, 4.0);
    }

    #[test]
    fn certificate_vanishes_without_errors_or_intensity() {
        let p = reference_protocol(0.0, 0.1, 1e12);
        let t = Tallies {
            n_sig: 1e8,
            ..Default::default()
        };
        let cert = phase_error_bound(&t, &p, 1.0).unwrap();
        assert_eq!(cert.n_ph_bar, 0.0);
    }

    // The full chain against a 60-digit independent evaluation:
    // N = 1e13, 40 dB reference channel, mu = 3e-4, p_est = 0.15.
    #[test]
    fn finite_key_chain_frozen_values() {
        let ch = ChannelParams::reference(40.0).unwrap();
        let p = reference_protocol(3e-4, 0.15, 1e13);
        let t = analytic_tallies(p.mu, p.p_est, &ch, p.n_windows).unwrap();
        assert_rel(t.n_est_bit, 40_574.927_509_786_006, 1e-13, "n_est_bit");
        assert_rel(t.n_sig, 15_300_835.820_810_088, 1e-13, "n_sig");
        assert_rel(t.e_bit(), 1.502_693_002_622_830_4e-2, 1e-13, "e_bit");

        let cert = phase_error_bound(&t, &p, p.component_epsilon()).unwrap();
        assert_rel(cert.term_bit, 482_972.845_284_146_59, 1e-11, "term_bit");
        assert_rel(
            cert.term_cross,
            1_229_360.529_671_855_6,
            1e-11,
            "term_cross",
        );
        assert_rel(cert.term_oo, 1_564_608.990_621_314_2, 1e-11, "term_oo");
        assert_rel(cert.n_ph_bar, 3_294_995.156_120_937_1, 1e-11, "n_ph_bar");
        assert_rel(
            cert.eps_consumed,
            4.0 * (1e-10f64 / 6.0).powi(2),
            1e-12,
            "eps",
        );

        let res = key_length(&t, &cert, &p);
        assert_rel(res.e_ph_bound, 0.215_347_396_358_540_03, 1e-11, "ratio");
        assert_rel(res.key_length, 1_907_049.388_990_922_1, 1e-9, "key length");
        assert_rel(res.rate, 1.907_049_388_990_922_1e-7, 1e-9, "rate");
        assert!(!res.clamped);
        assert_eq!(res.eps_total, 1e-10);
    }

    #[test]
    fn key_length_without_any_errors_is_all_but_the_log_terms() {
        let p = reference_protocol(0.05, 0.1, 1e12);
        let t = Tallies {
            n_sig: 1e6,
            ..Default::default()
        };
        let cert = PhaseErrorCertificate {
            n_ph_bar: 0.0,
            term_bit: 0.0,
            term_cross: 0.0,
            term_oo: 0.0,
            eps_consumed: 0.0,
        };
        let res = key_length(&t, &cert, &p);
        let eps = 1e-10f64 / 6.0;
        let logs = 2.0 * (1.0 / (2.0 * eps)).log2() + (2.0 / eps).log2();
        assert_rel(res.key_length, 1e6 - logs, 1e-12, "l");
        // The two log terms together equal log2(1/(2 eps^3)).
        assert_rel(
            logs,
            (1.0 / (2.0 * eps.powi(3))).log2(),
            1e-12,
            "log identity",
        );
    }

    #[test]
    fn saturated_phase_error_ratio_zeroes_the_key() {
        let p = reference_protocol(0.05, 0.1, 1e12);
        let t = Tallies {
            n_sig: 1e6,
            ..Default::default()
        };
        let cert = PhaseErrorCertificate {
            n_ph_bar: 0.5e6,
            term_bit: 0.0,
            term_cross: 0.0,
            term_oo: 0.5e6,
            eps_consumed: 0.0,
        };
        let res = key_length(&t, &cert, &p);
        assert_eq!(res.key_length, 0.0);
        assert_eq!(res.e_ph_bound, 0.5);
        assert!(res.clamped);

        // No signal windows at all: zero rate, not an error.
        let empty = key_length(&Tallies::default(), &cert, &p);
        assert_eq!(empty.rate, 0.0);
    }

    #[test]
    fn asymptotic_rate_frozen_value() {
        let ch = ChannelParams::reference(40.0).unwrap();
        let res = key_rate_asymptotic(2e-4, &ch, 1.1).unwrap();
        assert_rel(res.e_bit, 1.504_040_467_703_036_7e-2, 1e-13, "e_bit");
        assert_rel(res.e_ph_bound, 0.160_050_356_461_386_76, 1e-12, "e_ph");
        assert_rel(res.rate, 2.900_699_642_931_540_1e-7, 1e-11, "R");
        assert!(res.key_length.is_infinite());
    }

    #[test]
    fn asymptotic_rate_edge_cases() {
        // No light, no dark counts: nothing clicks.
        let ch = ChannelParams::new(10.0, 0.0, 0.3, 0.015).unwrap();
        let res = key_rate_asymptotic(0.0, &ch, 1.1).unwrap();
        assert_eq!(res.rate, 0.0);

        // 10% misalignment kills the key at every loss and intensity.
        for loss in [0.0, 20.0, 40.0] {
            let ch = ChannelParams::new(loss, 5e-11, 0.3, 0.10).unwrap();
            for i in 0..=30 {
                let mu = 10f64.powf(-5.0 + 5.0 * i as f64 / 30.0);
                let res = key_rate_asymptotic(mu, &ch, 1.1).unwrap();
                assert_eq!(res.rate, 0.0, "positive rate at loss={loss}, mu={mu}");
            }
        }
    }

    #[test]
    fn finite_key_converges_to_asymptotic() {
        // Huge-N finite rate vs the asymptotic rate from the same
        // per-window probabilities, within 5%.
        let ch = ChannelParams::reference(20.0).unwrap();
        let p = ProtocolParams::new(3e-3, 1e-3, 1e20, 1.1, 1e-10).unwrap();
        let (_, finite) = key_rate_finite(&ch, &p).unwrap();
        let asym = key_rate_asymptotic(3e-3, &ch, 1.1).unwrap();
        assert!(finite.rate > 0.0);
        let ratio = finite.rate / asym.rate;
        assert!(
            (ratio - 1.0).abs() <= 0.05,
            "finite/asymptotic = {ratio} not within 5%"
        );
    }

    #[test]
    fn certificate_terms_nonnegative_and_monotone() {
        let ch = ChannelParams::reference(30.0).unwrap();
        let mut prev_nph = 0.0;
        // Monotone in the number of estimation bit errors.
        for i in 0..=10 {
            let p = reference_protocol(1e-3, 0.1, 1e12);
            let mut t = analytic_tallies(p.mu, p.p_est, &ch, p.n_windows).unwrap();
            t.n_est_bit = 1e3 * i as f64;
            let cert = phase_error_bound(&t, &p, p.component_epsilon()).unwrap();
            assert!(cert.term_bit >= 0.0 && cert.term_cross >= 0.0 && cert.term_oo >= 0.0);
            assert!(
                cert.n_ph_bar >= prev_nph,
                "not monotone in n_est_bit at {i}"
            );
            prev_nph = cert.n_ph_bar;
        }
        // Monotone in the intensity bound.
        let mut prev = 0.0;
        for i in 0..=10 {
            let mu = 1e-4 * (1 + i) as f64;
            let p = reference_protocol(mu, 0.1, 1e12);
            let t = analytic_tallies(p.mu, p.p_est, &ch, p.n_windows).unwrap();
            let cert = phase_error_bound(&t, &p, p.component_epsilon()).unwrap();
            assert!(cert.n_ph_bar >= prev, "not monotone in mu at {mu}");
            prev = cert.n_ph_bar;
        }
    }

    #[test]
    fn tighter_security_costs_key() {
        let ch = ChannelParams::reference(20.0).unwrap();
        let mut prev_l = 0.0;
        for k in 0..=9 {
            let eps_total = 10f64.powf(-15.0 + k as f64);
            let p = ProtocolParams::new(1e-3, 0.1, 1e12, 1.1, eps_total).unwrap();
            let (_, res) = key_rate_finite(&ch, &p).unwrap();
            assert!(
                res.key_length >= prev_l,
                "key length shrank as eps grew at {eps_total:e}"
            );
            prev_l = res.key_length;
        }
    }

    #[test]
    fn doubling_windows_at_least_doubles_key_minus_log_terms() {
        let ch = ChannelParams::reference(20.0).unwrap();
        let eps = 1e-10f64 / 6.0;
        let log_terms = (1.0 / (2.0 * eps.powi(3))).log2();
        for n in [1e11, 1e12, 1e13] {
            let p1 = ProtocolParams::new(1e-3, 0.1, n, 1.1, 1e-10).unwrap();
            let p2 = ProtocolParams::new(1e-3, 0.1, 2.0 * n, 1.1, 1e-10).unwrap();
            let (_, r1) = key_rate_finite(&ch, &p1).unwrap();
            let (_, r2) = key_rate_finite(&ch, &p2).unwrap();
            assert!(
                r2.key_length >= 2.0 * r1.key_length - log_terms,
                "sublinear overhead not shrinking at n={n:e}"
            );
        }
    }

    #[test]
    fn tally_and_parameter_validation() {
        assert!(ProtocolParams::new(-0.1, 0.1, 1e6, 1.1, 1e-10).is_err());
        assert!(ProtocolParams::new(0.1, 0.0, 1e6, 1.1, 1e-10).is_err());
        assert!(ProtocolParams::new(0.1, 1.0, 1e6, 1.1, 1e-10).is_err());
        assert!(ProtocolParams::new(0.1, 0.1, 0.0, 1.1, 1e-10).is_err());
        assert!(ProtocolParams::new(0.1, 0.1, 1e6, 0.9, 1e-10).is_err());
        assert!(ProtocolParams::new(0.1, 0.1, 1e6, 1.1, 0.0).is_err());

        let p = reference_protocol(0.05, 0.1, 1e6);
        let bad = Tallies {
            n_sig: 2e6,
            ..Default::default()
        };
        assert!(phase_error_bound(&bad, &p, 0.5).is_err());
        let bad_est = Tallies {
            n_est: 10.0,
            n_est_bit: 11.0,
            ..Default::default()
        };
        assert!(phase_error_bound(&bad_est, &p, 0.5).is_err());
        let t = Tallies::default();
        assert!(phase_error_bound(&t, &p, 0.0).is_err());
        assert!(phase_error_bound(&t, &p, 1.5).is_err());
    }
}
