//! Analytic model of the honest channel and interferometric detection.
//!
//! Both senders sit symmetrically around the measuring node, so a total
//! link loss of `loss_db` puts half of it on each arm and the per-arm
//! amplitude transmittance is `10^(-loss_db/20)`. Detector efficiency is
//! folded into that transmittance. With visibility `V = 1 - 2 e_mis`, the
//! constructive output of the interferometer sees intensity `(1+V) eta mu`
//! and the destructive output `(1-V) eta mu`; each detector also fires on
//! dark counts with probability `d` per window.

use crate::error::{Error, Result};

/// Physical link and detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Total sender-to-sender transmission loss in dB.
    pub loss_db: f64,
    /// Dark count probability per window, per detector.
    pub dark_rate: f64,
    /// Detector efficiency.
    pub det_eff: f64,
    /// Misalignment rate; visibility is `1 - 2 e_mis`.
    pub e_mis: f64,
    /// Fibre attenuation used only for the distance <-> loss conversion.
    pub attenuation_db_per_km: f64,
}

impl ChannelParams {
    pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;
    /// Reference detector/fibre parameters used by the bundled sweeps and
    /// benchmarks: efficient SNSPD-class detectors on standard fibre.
    pub const REFERENCE_DET_EFF: f64 = 0.3;
    pub const REFERENCE_DARK_RATE: f64 = 5.0e-11;
    pub const REFERENCE_E_MIS: f64 = 0.015;

    pub fn new(loss_db: f64, dark_rate: f64, det_eff: f64, e_mis: f64) -> Result<Self> {
        if !(loss_db >= 0.0 && loss_db.is_finite()) {
            return Err(Error::OutOfRange {
                name: "loss_db",
                value: loss_db,
                reason: "loss must be finite and nonnegative",
            });
        }
        if !(0.0..=1.0).contains(&dark_rate) {
            return Err(Error::OutOfRange {
                name: "dark_rate",
                value: dark_rate,
                reason: "dark count rate is a probability",
            });
        }
        if !(det_eff > 0.0 && det_eff <= 1.0) {
            return Err(Error::OutOfRange {
                name: "det_eff",
                value: det_eff,
                reason: "detector efficiency must lie in (0, 1]",
            });
        }
        if !(0.0..0.5).contains(&e_mis) {
            return Err(Error::OutOfRange {
                name: "e_mis",
                value: e_mis,
                reason: "misalignment must lie in [0, 0.5) so that V > 0",
            });
        }
        Ok(Self {
            loss_db,
            dark_rate,
            det_eff,
            e_mis,
            attenuation_db_per_km: Self::DEFAULT_ATTENUATION_DB_PER_KM,
        })
    }

    /// Same link expressed as a fibre length, converted at
    /// `attenuation_db_per_km` (default 0.2 dB/km).
    pub fn from_distance_km(
        distance_km: f64,
        dark_rate: f64,
        det_eff: f64,
        e_mis: f64,
    ) -> Result<Self> {
        if !(distance_km >= 0.0 && distance_km.is_finite()) {
            return Err(Error::OutOfRange {
                name: "distance_km",
                value: distance_km,
                reason: "distance must be finite and nonnegative",
            });
        }
        Self::new(
            distance_km * Self::DEFAULT_ATTENUATION_DB_PER_KM,
            dark_rate,
            det_eff,
            e_mis,
        )
    }

    /// Reference parameters at the given total loss.
    pub fn reference(loss_db: f64) -> Result<Self> {
        Self::new(
            loss_db,
            Self::REFERENCE_DARK_RATE,
            Self::REFERENCE_DET_EFF,
            Self::REFERENCE_E_MIS,
        )
    }

    pub fn with_attenuation(mut self, attenuation_db_per_km: f64) -> Result<Self> {
        if !(attenuation_db_per_km > 0.0 && attenuation_db_per_km.is_finite()) {
            return Err(Error::OutOfRange {
                name: "attenuation_db_per_km",
                value: attenuation_db_per_km,
                reason: "attenuation must be finite and positive",
            });
        }
        self.attenuation_db_per_km = attenuation_db_per_km;
        Ok(self)
    }

    pub fn with_loss_db(mut self, loss_db: f64) -> Result<Self> {
        if !(loss_db >= 0.0 && loss_db.is_finite()) {
            return Err(Error::OutOfRange {
                name: "loss_db",
                value: loss_db,
                reason: "loss must be finite and nonnegative",
            });
        }
        self.loss_db = loss_db;
        Ok(self)
    }

    /// Interference visibility `V = 1 - 2 e_mis`.
    pub fn visibility(&self) -> f64 {
        1.0 - 2.0 * self.e_mis
    }

    pub fn distance_km(&self) -> f64 {
        self.loss_db / self.attenuation_db_per_km
    }
}

/// Per-window click probabilities of the two interferometer outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickRates {
    /// Constructive (bright) output.
    pub s_large: f64,
    /// Destructive (dim) output.
    pub s_small: f64,
}

impl ClickRates {
    /// Probability of a successful (exactly-one-click) window.
    pub fn total(&self) -> f64 {
        self.s_large + self.s_small
    }
}

/// Expected per-window rates of the observable tallies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedTallies {
    /// Signal windows per window sent: `(1 - P_est)(S_large + S_small)`.
    pub n_sig_rate: f64,
    /// Bit error rate among successful windows.
    pub e_bit: f64,
    /// Estimation-window bit errors per window sent: `P_est * S_small`.
    pub n_est_bit_rate: f64,
}

/// Per-arm transmittance with detector efficiency folded in:
/// `eta = det_eff * 10^(-loss_db / 20)`.
pub fn transmittance(ch: &ChannelParams) -> f64 {
    ch.det_eff * 10f64.powf(-ch.loss_db / 20.0)
}

/// Per-detector click probability `1 - (1-d) e^-I`, arranged as
/// `(1 - e^-I) + d e^-I` via expm1 so weak intensities keep full relative
/// precision.
pub(crate) fn click_probability(intensity: f64, dark: f64) -> f64 {
    let em = (-intensity).exp_m1();
    -em + dark * (1.0 + em)
}

/// Click probabilities of the constructive / destructive outputs for
/// intensity upper bound `mu`:
///
/// ```text
/// S_large = (1 - (1-d) e^(-(1+V) eta mu)) (1-d) e^(-(1-V) eta mu)
/// S_small = (1 - (1-d) e^(-(1-V) eta mu)) (1-d) e^(-(1+V) eta mu)
/// ```
pub fn click_rates(mu: f64, ch: &ChannelParams) -> ClickRates {
    assert!(mu >= 0.0 && mu.is_finite(), "mu must be finite and >= 0");
    let v = ch.visibility();
    let d = ch.dark_rate;
    let i = transmittance(ch) * mu;
    let bright = (1.0 + v) * i;
    let dim = (1.0 - v) * i;
    let no_dark = 1.0 - d;
    ClickRates {
        s_large: click_probability(bright, d) * no_dark * (-dim).exp(),
        s_small: click_probability(dim, d) * no_dark * (-bright).exp(),
    }
}

/// `e_bit = S_small / (S_large + S_small)`.
pub fn bit_error_rate(cr: &ClickRates) -> Result<f64> {
    let total = cr.total();
    if total <= 0.0 {
        return Err(Error::DegenerateChannel);
    }
    Ok(cr.s_small / total)
}

/// Expected tally rates for estimation probability `p_est`.
pub fn expected_tallies(mu: f64, p_est: f64, ch: &ChannelParams) -> Result<ExpectedTallies> {
    if !(p_est > 0.0 && p_est < 1.0) {
        return Err(Error::OutOfRange {
            name: "p_est",
            value: p_est,
            reason: "estimation probability must lie strictly in (0, 1)",
        });
    }
    let cr = click_rates(mu, ch);
    Ok(ExpectedTallies {
        n_sig_rate: (1.0 - p_est) * cr.total(),
        e_bit: bit_error_rate(&cr)?,
        n_est_bit_rate: p_est * cr.s_small,
    })
}
