//! Concentration-inequality toolkit: Kato's martingale bound in its four
//! inverse forms, plus the multiplicative Chernoff upper bound.
//!
//! Kato's inequality refines Azuma's. For random variables X_m in [0, 1]
//! adapted to a filtration, any a in R and b >= 0 satisfying the tail
//! constraint exp(-2(b^2 - a^2) / (1 + 4a/(3 sqrt n))^2) = eps bound the
//! difference between the conditional-expectation sum and the observed
//! count Lambda = sum X_m by (b + a(2 Lambda/n - 1)) sqrt(n), except with
//! probability eps. Minimizing that deviation over (a, b) gives closed
//! forms; with a = 0 the bound collapses to Azuma-Hoeffding. The four
//! inverse forms convert between observed counts and expectation sums:
//!
//! * `U_e`/`L_e` - bounds on the expectation sum given an observation,
//! * `U_m`/`L_m` - bounds on the observation given an expectation sum,
//!   obtained by inverting the forward inequality with the coefficients
//!   evaluated at the expectation argument.
//!
//! Counts are real-valued throughout: the key-rate chain feeds Chernoff
//! outputs (reals) back into Kato bounds, and window counts past 2^53 must
//! keep working, so `n` is carried as an f64 as well.
//!
//! The coefficient numerators subtract like-magnitude O(n^(5/2)) terms, so
//! they are evaluated in double-double arithmetic; see `dd`.

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Relative float noise tolerated (and clamped) when a count falls
/// slightly outside [0, n]; larger excursions are rejected.
const COUNT_CLAMP_REL: f64 = 1e-9;

/// An observed count `lambda_obs` of `n` random variables in [0, 1],
/// together with the failure probability `eps` of the single inequality
/// being evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInput {
    lambda_obs: f64,
    n: f64,
    eps: f64,
}

impl BoundInput {
    /// Validates `0 <= lambda_obs <= n` (clamping float noise up to
    /// `1e-9 * n` outside the interval), `n >= 1` and `eps` in (0, 1].
    pub fn new(lambda_obs: f64, n: f64, eps: f64) -> Result<Self> {
        check_n(n)?;
        check_eps(eps)?;
        let lambda_obs = clamp_count(lambda_obs, n, "lambda_obs")?;
        Ok(Self { lambda_obs, n, eps })
    }

    pub fn lambda_obs(&self) -> f64 {
        self.lambda_obs
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Deviation-shape parameters of Kato's inequality. `b >= |a|` always
/// holds for coefficients produced here, which keeps the deviation term
/// `b + a(2 Lambda/n - 1)` nonnegative on all of [0, n].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KatoCoefficients {
    pub a: f64,
    pub b: f64,
}

/// Which tail of the martingale difference is being bounded.
#[derive(Debug, Clone, Copy)]
enum Tail {
    /// Bounds `sum E(X_m | F_{m-1}) - Lambda` from above: coefficients (a1, b1).
    Expectation,
    /// Bounds `Lambda - sum E(X_m | F_{m-1})` from above: coefficients (a2, b2).
    Observation,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            reason: "failure probability must lie in (0, 1]",
        });
    }
    Ok(())
}

fn check_n(n: f64) -> Result<()> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::OutOfRange {
            name: "n",
            value: n,
            reason: "number of random variables must be finite and >= 1",
        });
    }
    Ok(())
}

fn clamp_count(value: f64, n: f64, name: &'static str) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::OutOfRange {
            name,
            value,
            reason: "count must be finite",
        });
    }
    let slack = COUNT_CLAMP_REL * n;
    if value < -slack || value > n + slack {
        return Err(Error::OutOfRange {
            name,
            value,
            reason: "count must lie in [0, n]",
        });
    }
    Ok(value.clamp(0.0, n))
}

/// Closed-form deviation-optimal coefficients, in double-double precision.
///
/// With L = ln(eps) and g = 9 Lambda (n - Lambda) - 2 n L (> 0 for eps < 1):
///
/// ```text
/// a1 =  3 (72 sqrt(n) L Lambda (n - Lambda) - 16 n^(3/2) L^2
///          + 9 sqrt(2) (n - 2 Lambda) sqrt(-n^2 L g)) / (4 (9n - 8L) g)
/// b1 =  sqrt(18 a^2 n - (16 a^2 + 24 a sqrt(n) + 9 n) L) / (3 sqrt(2 n))
/// ```
///
/// and for the observation tail the sign of the irrational term flips, the
/// whole numerator is negated, and the odd `24 a sqrt(n)` term of `b`
/// flips sign. At eps = 1 everything vanishes: the bounds collapse to the
/// identity.
fn coefficients(lambda: f64, n: f64, eps: f64, tail: Tail) -> (Dd, Dd) {
    let ln_eps = eps.ln();
    if ln_eps == 0.0 {
        return (Dd::ZERO, Dd::ZERO);
    }

    let n_dd = Dd::from(n);
    let lam = Dd::from(lambda);
    let sqrt_n = n_dd.sqrt();
    let l = Dd::from(ln_eps);
    let n_minus_lam = n_dd - lam;

    let g = Dd::from(9.0) * lam * n_minus_lam - Dd::from(2.0) * n_dd * l;
    let t_poly =
        Dd::from(72.0) * sqrt_n * lam * n_minus_lam * l - Dd::from(16.0) * n_dd * sqrt_n * l * l;
    let inner = n_dd * n_dd * (-l) * g;
    let t_irr = Dd::from(9.0) * Dd::from(2.0).sqrt() * (n_dd - Dd::from(2.0) * lam) * inner.sqrt();
    let den = Dd::from(4.0) * (Dd::from(9.0) * n_dd - Dd::from(8.0) * l) * g;

    let a = match tail {
        Tail::Expectation => Dd::from(3.0) * (t_poly + t_irr) / den,
        Tail::Observation => Dd::from(-3.0) * (t_poly - t_irr) / den,
    };

    let sixteen_a2 = Dd::from(16.0) * a * a;
    let cross = Dd::from(24.0) * a * sqrt_n;
    let nine_n = Dd::from(9.0) * n_dd;
    let poly = match tail {
        Tail::Expectation => sixteen_a2 + cross + nine_n,
        Tail::Observation => sixteen_a2 - cross + nine_n,
    };
    let b_sq = (Dd::from(18.0) * a * a * n_dd - poly * l) / (Dd::from(18.0) * n_dd);
    (a, b_sq.sqrt())
}

/// Deviation term `(b + a (2 Lambda / n - 1)) sqrt(n)`.
fn deviation(lambda: f64, n: f64, a: Dd, b: Dd) -> Dd {
    let n_dd = Dd::from(n);
    let t = Dd::from(2.0) * Dd::from(lambda) / n_dd - Dd::from(1.0);
    (b + a * t) * n_dd.sqrt()
}

/// Optimized coefficients (a1, b1) for the expectation-side bounds
/// `U_e` and `L_m`.
pub fn kato_coefficients_upper(input: &BoundInput) -> KatoCoefficients {
    let (a, b) = coefficients(input.lambda_obs, input.n, input.eps, Tail::Expectation);
    KatoCoefficients {
        a: a.to_f64(),
        b: b.to_f64(),
    }
}

/// Optimized coefficients (a2, b2) for the observation-side bounds
/// `L_e` and `U_m`.
pub fn kato_coefficients_lower(input: &BoundInput) -> KatoCoefficients {
    let (a, b) = coefficients(input.lambda_obs, input.n, input.eps, Tail::Observation);
    KatoCoefficients {
        a: a.to_f64(),
        b: b.to_f64(),
    }
}

/// `U_e`: upper bound on the conditional-expectation sum given the
/// observed count. Never smaller than the observation itself.
pub fn kato_upper_expectation(input: &BoundInput) -> f64 {
    let (a, b) = coefficients(input.lambda_obs, input.n, input.eps, Tail::Expectation);
    (Dd::from(input.lambda_obs) + deviation(input.lambda_obs, input.n, a, b)).to_f64()
}

/// `L_e`: lower bound on the conditional-expectation sum given the
/// observed count. May be negative; callers clamp where a count is meant.
pub fn kato_lower_expectation(input: &BoundInput) -> f64 {
    let (a, b) = coefficients(input.lambda_obs, input.n, input.eps, Tail::Observation);
    (Dd::from(input.lambda_obs) - deviation(input.lambda_obs, input.n, a, b)).to_f64()
}

/// `U_m`: upper bound on the observed count given the expectation sum.
///
/// The coefficients (a2, b2) are evaluated at the expectation argument and
/// the forward inequality is then solved for Lambda:
/// `(E + (b2 - a2) sqrt n) / (1 - 2 a2 / sqrt n)`. For expectation sums
/// far below ~4 ln(1/eps) the denominator turns nonpositive and no finite
/// inversion exists; that is reported as an error.
pub fn kato_upper_observation(expectation_sum: f64, n: f64, eps: f64) -> Result<f64> {
    let input = BoundInput::new(expectation_sum, n, eps)?;
    let (a, b) = coefficients(input.lambda_obs, n, eps, Tail::Observation);
    let sqrt_n = Dd::from(n).sqrt();
    let denom = Dd::from(1.0) - Dd::from(2.0) * a / sqrt_n;
    if denom.to_f64() <= 0.0 {
        return Err(Error::UnboundedInversion {
            form: "U_m",
            denominator: denom.to_f64(),
        });
    }
    Ok(((Dd::from(input.lambda_obs) + (b - a) * sqrt_n) / denom).to_f64())
}

/// `L_m`: lower bound on the observed count given the expectation sum,
/// clamped at zero. Provided for completeness; the key-rate path never
/// uses it.
pub fn kato_lower_observation(expectation_sum: f64, n: f64, eps: f64) -> Result<f64> {
    let input = BoundInput::new(expectation_sum, n, eps)?;
    let (a, b) = coefficients(input.lambda_obs, n, eps, Tail::Expectation);
    let sqrt_n = Dd::from(n).sqrt();
    let denom = Dd::from(1.0) + Dd::from(2.0) * a / sqrt_n;
    if denom.to_f64() <= 0.0 {
        return Err(Error::UnboundedInversion {
            form: "L_m",
            denominator: denom.to_f64(),
        });
    }
    let raw = ((Dd::from(input.lambda_obs) - (b - a) * sqrt_n) / denom).to_f64();
    Ok(raw.max(0.0))
}

/// Multiplicative Chernoff upper bound `C_U` on a sum of independent
/// {0, 1} variables with expectation `mu_exp`:
///
/// ```text
/// C_U = (1 + delta) mu,   delta = (k + sqrt(k^2 + 8 mu k)) / (2 mu),
/// ```
///
/// with k = ln(1/eps), rearranged to `mu + (k + sqrt(k^2 + 8 mu k)) / 2`
/// so that nothing is singular for small mu. A zero expectation returns
/// zero: a sum of zero-mean indicators is almost surely zero.
pub fn chernoff_upper(mu_exp: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(mu_exp >= 0.0 && mu_exp.is_finite()) {
        return Err(Error::OutOfRange {
            name: "mu_exp",
            value: mu_exp,
            reason: "expectation must be finite and nonnegative",
        });
    }
    if mu_exp == 0.0 {
        return Ok(0.0);
    }
    let k = -eps.ln();
    if k == 0.0 {
        return Ok(mu_exp);
    }
    Ok(mu_exp + 0.5 * (k + (k * k + 8.0 * mu_exp * k).sqrt()))
}
