//! Characteristic scales, deterministic volume approximations and the limit laws.
//!
//! With `gamma_d` the volume of the unit ball:
//!
//! * `beta_k = (N alpha^((k-1)d) mu_1...mu_k)^(-1/((k-1)d+k))` is the time scale
//!   of the k-th mutation when earlier types form many small balls;
//! * `kappa_j = (mu_j alpha^d)^(-1/(d+1))` is the time for a single growing
//!   ball to pick up a type-`j` mutation;
//! * `v_j(t) = gamma_d^j (d!)^j / (j(d+1))! * mu_1...mu_j * N * alpha^(jd) * t^(j(d+1))`
//!   approximates the expected volume with at least `j` mutations.
//!
//! The laws themselves are described by [`LimitLaw`]; [`LimitLaw::evaluator`]
//! precomputes what a law needs for fast repeated CDF evaluation.

use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::process::ModelParams;
use crate::quadrature::integrate;

/// Largest exponent `x` kept in `exp(-x)` before the tail is treated as zero.
const TAIL_EXPONENT: f64 = 16.0 * std::f64::consts::LN_10;

/// Grid size for hypoexponential laws that cannot use the distinct-rate formula.
pub const HYPOEXP_GRID_POINTS: usize = 1 << 14;

pub fn unit_ball_volume(dim: usize) -> Result<f64> {
    match dim {
        1 => Ok(2.0),
        2 => Ok(std::f64::consts::PI),
        3 => Ok(4.0 * std::f64::consts::PI / 3.0),
        _ => Err(Error::UnsupportedDimension(dim)),
    }
}

/// `ln(n!)` as a compensated sum of logarithms.
pub fn ln_factorial(n: u64) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for i in 2..=n {
        let term = (i as f64).ln();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            carry += (sum - t) + term;
        } else {
            carry += (term - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn check_type(params: &ModelParams, k: usize) -> Result<()> {
    if k == 0 || k > params.target {
        return Err(Error::TypeOutOfRange {
            index: k,
            max: params.target,
        });
    }
    Ok(())
}

/// `(k-1)d + k`, the exponent appearing in `beta_k` and the Weibull-type laws.
pub fn growth_exponent(dim: usize, k: usize) -> u32 {
    ((k - 1) * dim + k) as u32
}

pub fn beta_k(params: &ModelParams, k: usize) -> Result<f64> {
    check_type(params, k)?;
    Ok(ln_beta(params.dim, params.volume(), params.alpha, &params.mu[..k]).exp())
}

/// `ln beta_k` for rates `mu_1..mu_k`, kept separate so callers can stay in log space.
pub fn ln_beta(dim: usize, volume: f64, alpha: f64, mu: &[f64]) -> f64 {
    let k = mu.len();
    let d = dim as f64;
    let log_sum = volume.ln() + (k as f64 - 1.0) * d * alpha.ln() + mu.iter().map(|m| m.ln()).sum::<f64>();
    -log_sum / f64::from(growth_exponent(dim, k))
}

pub fn kappa_j(params: &ModelParams, j: usize) -> Result<f64> {
    check_type(params, j)?;
    let d = params.dim as f64;
    Ok((params.mu(j) * params.alpha.powf(d)).powf(-1.0 / (d + 1.0)))
}

/// Closed-form `v_k(t)`; `v_0 = N`.
pub fn v_k(params: &ModelParams, k: usize, t: f64) -> Result<f64> {
    if k > params.target {
        return Err(Error::TypeOutOfRange {
            index: k,
            max: params.target,
        });
    }
    if t < 0.0 {
        return Err(Error::InvalidParams(format!("negative time {t}")));
    }
    if k == 0 {
        return Ok(params.volume());
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let d = params.dim as f64;
    let kf = k as f64;
    let gamma = unit_ball_volume(params.dim)?;
    let ln = kf * (gamma.ln() + ln_factorial(params.dim as u64))
        - ln_factorial((k * (params.dim + 1)) as u64)
        + params.mu[..k].iter().map(|m| m.ln()).sum::<f64>()
        + params.volume().ln()
        + kf * d * params.alpha.ln()
        + kf * (d + 1.0) * t.ln();
    Ok(ln.exp())
}

/// `v_k(t)` by numerically integrating
/// `v_j(t) = int_0^t mu_j v_{j-1}(r) gamma_d (alpha (t - r))^d dr` from `v_0 = N`.
pub fn v_k_recursive(params: &ModelParams, k: usize, t: f64) -> Result<f64> {
    if k > params.target {
        return Err(Error::TypeOutOfRange {
            index: k,
            max: params.target,
        });
    }
    let gamma = unit_ball_volume(params.dim)?;
    recursive_volume(params, gamma, k, t)
}

fn recursive_volume(params: &ModelParams, gamma: f64, j: usize, t: f64) -> Result<f64> {
    if j == 0 {
        return Ok(params.volume());
    }
    let mu = params.mu(j);
    let alpha = params.alpha;
    let dim = params.dim as i32;
    let mut failure = None;
    let r = integrate(
        |r| match recursive_volume(params, gamma, j - 1, r) {
            Ok(v) => mu * v * gamma * (alpha * (t - r)).powi(dim),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        t,
        0.0,
        1e-13,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(r.value),
    }
}

/// Probability that a single ball born at time 0 has received a type-`j`
/// mutation by time `t`: `1 - exp(-(gamma_d/(d+1)) mu_j alpha^d t^(d+1))`.
pub fn single_ball_passage_cdf(params: &ModelParams, j: usize, t: f64) -> Result<f64> {
    check_type(params, j)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let d = params.dim as f64;
    let gamma = unit_ball_volume(params.dim)?;
    let x = gamma / (d + 1.0) * params.mu(j) * params.alpha.powf(d) * t.powf(d + 1.0);
    Ok(-(-x).exp_m1())
}

/// Density of the rescaled gap `(sigma_{j+1} - sigma_j) / kappa_{j+1}`:
/// `gamma_d t^d exp(-gamma_d t^(d+1) / (d+1))`.
pub fn gap_density(dim: usize, t: f64) -> Result<f64> {
    let gamma = unit_ball_volume(dim)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let d = dim as f64;
    Ok(gamma * t.powf(d) * (-gamma * t.powf(d + 1.0) / (d + 1.0)).exp())
}

/// Limit CDF of `D_{j,k} / (alpha kappa_{j+1})`:
/// `F(s) = int_0^inf gamma_d min(t, s)^d exp(-gamma_d t^(d+1)/(d+1)) dt`.
///
/// Evaluated as `1 - int_s^T gamma_d (t^d - s^d) exp(..) dt`, the part of the
/// integral beyond the kink at `t = s`, with `T` the point where the
/// exponential drops below `1e-16`. The omitted tail is below `1e-16`.
pub fn distance_cdf(dim: usize, s: f64) -> Result<f64> {
    let gamma = unit_ball_volume(dim)?;
    if s.is_nan() {
        return Err(Error::InvalidParams("NaN argument".into()));
    }
    if s <= 0.0 {
        return Ok(0.0);
    }
    let d = dim as f64;
    let a = gamma / (d + 1.0);
    let t_max = (TAIL_EXPONENT / a).powf(1.0 / (d + 1.0));
    if s >= t_max {
        return Ok(1.0);
    }
    let sd = s.powi(dim as i32);
    let survival = integrate(
        |t| gamma * (t.powi(dim as i32) - sd) * (-a * t.powf(d + 1.0)).exp(),
        s,
        t_max,
        1e-13,
        1e-12,
    )?;
    Ok((1.0 - survival.value).clamp(0.0, 1.0))
}

/// `g_k(t) = gamma_d^(k-1) (d!)^(k-1) t^((k-1)(d+1)) / ((k-1)(d+1))!`.
pub fn theorem3_integrand(dim: usize, k: usize, t: f64) -> Result<f64> {
    let gamma = unit_ball_volume(dim)?;
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    if k == 1 {
        return Ok(1.0);
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let km = (k - 1) as f64;
    let p = (k - 1) * (dim + 1);
    let ln = km * (gamma.ln() + ln_factorial(dim as u64)) - ln_factorial(p as u64) + p as f64 * t.ln();
    Ok(ln.exp())
}

/// `beta_k mu_k v_{k-1}(beta_k t)`, the same quantity as [`theorem3_integrand`].
pub fn theorem3_integrand_via_volume(params: &ModelParams, k: usize, t: f64) -> Result<f64> {
    let beta = beta_k(params, k)?;
    Ok(beta * params.mu(k) * v_k(params, k - 1, beta * t)?)
}

/// `gamma_d^(k-1) (d!)^(k-1) / ((k-1)d+k)!`.
pub fn weibull_coefficient(dim: usize, k: usize) -> Result<f64> {
    let gamma = unit_ball_volume(dim)?;
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let km = (k - 1) as f64;
    let ln = km * (gamma.ln() + ln_factorial(dim as u64)) - ln_factorial(u64::from(growth_exponent(dim, k)));
    Ok(ln.exp())
}

/// Rate of one summand in a hypoexponential law; infinite rates contribute 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Finite(f64),
    Infinite,
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rate::Finite(r) => serializer.serialize_f64(*r),
            Rate::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RateVisitor;
        impl Visitor<'_> for RateVisitor {
            type Value = Rate;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Rate, E> {
                if v > 0.0 && v.is_finite() {
                    Ok(Rate::Finite(v))
                } else if v == f64::INFINITY {
                    Ok(Rate::Infinite)
                } else {
                    Err(E::custom(format!("rate must be positive, got {v}")))
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rate, E> {
                self.visit_f64(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rate, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rate, E> {
                v.parse::<Rate>().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(RateVisitor)
    }
}

impl std::str::FromStr for Rate {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Rate::Infinite),
            other => match other.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(Rate::Finite(v)),
                Ok(v) if v == f64::INFINITY => Ok(Rate::Infinite),
                _ => Err(format!("invalid rate {s:?}")),
            },
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Finite(r) => write!(f, "{r}"),
            Rate::Infinite => f.write_str("inf"),
        }
    }
}

/// One of the limiting distributions of the rescaled waiting times and distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitLaw {
    /// Sum of independent exponentials with the given rates.
    Hypoexponential { rates: Vec<Rate> },
    Exp1,
    /// `1 - exp(-C t^m)`.
    WeibullType { coefficient: f64, exponent: u32 },
    /// Limit law of rescaled inter-mutation distances on a `dim`-dimensional torus.
    DistanceLaw { dim: usize },
}

impl LimitLaw {
    pub fn hypoexponential(rates: Vec<Rate>) -> Result<Self> {
        let law = LimitLaw::Hypoexponential { rates };
        law.validate()?;
        Ok(law)
    }

    /// Weibull-type law for `sigma_k / beta_k`.
    pub fn theorem3(dim: usize, k: usize) -> Result<Self> {
        Ok(LimitLaw::WeibullType {
            coefficient: weibull_coefficient(dim, k)?,
            exponent: growth_exponent(dim, k),
        })
    }

    /// Weibull-type law for `sigma_k / beta_l`; only `l` enters the law.
    pub fn theorem4(dim: usize, l: usize) -> Result<Self> {
        Self::theorem3(dim, l)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LimitLaw::Hypoexponential { rates } => {
                if rates.is_empty() || rates.iter().all(|r| *r == Rate::Infinite) {
                    return Err(Error::DegenerateLaw);
                }
                if rates.iter().any(|r| matches!(r, Rate::Finite(v) if !(*v > 0.0 && v.is_finite()))) {
                    return Err(Error::InvalidParams("hypoexponential rates must be positive".into()));
                }
                Ok(())
            }
            LimitLaw::Exp1 => Ok(()),
            LimitLaw::WeibullType {
                coefficient,
                exponent,
            } => {
                if !(*coefficient > 0.0 && coefficient.is_finite()) || *exponent == 0 {
                    return Err(Error::InvalidParams(format!(
                        "Weibull-type law needs C > 0 and m >= 1, got C = {coefficient}, m = {exponent}"
                    )));
                }
                Ok(())
            }
            LimitLaw::DistanceLaw { dim } => unit_ball_volume(*dim).map(|_| ()),
        }
    }

    pub fn evaluator(&self) -> Result<LawCdf> {
        self.validate()?;
        Ok(match self {
            LimitLaw::Hypoexponential { rates } => LawCdf::Hypo(Hypoexponential::new(rates)),
            LimitLaw::Exp1 => LawCdf::Exp1,
            LimitLaw::WeibullType {
                coefficient,
                exponent,
            } => LawCdf::Weibull {
                coefficient: *coefficient,
                exponent: f64::from(*exponent),
            },
            LimitLaw::DistanceLaw { dim } => LawCdf::Distance(*dim),
        })
    }

    pub fn name(&self) -> String {
        match self {
            LimitLaw::Hypoexponential { rates } => {
                let r: Vec<String> = rates.iter().map(Rate::to_string).collect();
                format!("hypoexponential({})", r.join(", "))
            }
            LimitLaw::Exp1 => "exponential(1)".into(),
            LimitLaw::WeibullType {
                coefficient,
                exponent,
            } => format!("1 - exp(-{coefficient} t^{exponent})"),
            LimitLaw::DistanceLaw { dim } => format!("distance law (d = {dim})"),
        }
    }
}

/// CDF of `law` at `t`. Builds a fresh evaluator; prefer [`LimitLaw::evaluator`] in loops.
pub fn limit_cdf(law: &LimitLaw, t: f64) -> Result<f64> {
    law.evaluator()?.cdf(t)
}

/// Prepared CDF of a [`LimitLaw`].
#[derive(Debug, Clone)]
pub enum LawCdf {
    Hypo(Hypoexponential),
    Exp1,
    Weibull { coefficient: f64, exponent: f64 },
    Distance(usize),
}

impl LawCdf {
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::InvalidParams("NaN argument".into()));
        }
        if t <= 0.0 {
            return Ok(0.0);
        }
        Ok(match self {
            LawCdf::Hypo(h) => h.cdf(t),
            LawCdf::Exp1 => -(-t).exp_m1(),
            LawCdf::Weibull {
                coefficient,
                exponent,
            } => -(-coefficient * t.powf(*exponent)).exp_m1(),
            LawCdf::Distance(dim) => distance_cdf(*dim, t)?,
        })
    }

    /// Smallest `t` with `cdf(t) >= p`, by bisection.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("quantile level {p} outside [0, 1)")));
        }
        let mut hi = 1.0;
        while self.cdf(hi)? < p {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// Sum of independent exponentials.
///
/// Up to three well-separated finite rates use the distinct-rate closed form.
/// Anything else (repeated or close rates, long sums) is evaluated from a CDF
/// table built by convolving one exponential at a time on a uniform grid.
#[derive(Debug, Clone)]
pub enum Hypoexponential {
    Single(f64),
    Distinct { rates: Vec<f64>, weights: Vec<f64> },
    Grid { step: f64, table: Arc<[f64]> },
}

impl Hypoexponential {
    fn new(rates: &[Rate]) -> Self {
        let finite: Vec<f64> = rates
            .iter()
            .filter_map(|r| match r {
                Rate::Finite(v) => Some(*v),
                Rate::Infinite => None,
            })
            .collect();
        if finite.len() == 1 {
            return Hypoexponential::Single(finite[0]);
        }
        if finite.len() <= 3 {
            let weights: Vec<f64> = (0..finite.len())
                .map(|i| {
                    finite
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, rj)| rj / (rj - finite[i]))
                        .product()
                })
                .collect();
            let conditioning: f64 = weights.iter().map(|w| w.abs()).sum();
            if conditioning.is_finite() && conditioning <= 100.0 {
                return Hypoexponential::Distinct {
                    rates: finite,
                    weights,
                };
            }
        }
        Self::grid(&finite)
    }

    fn grid(rates: &[f64]) -> Self {
        let r_min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean: f64 = rates.iter().map(|r| 1.0 / r).sum();
        let horizon = mean + (TAIL_EXPONENT + 2.0 * rates.len() as f64) / r_min;
        let n = HYPOEXP_GRID_POINTS;
        let step = horizon / (n - 1) as f64;
        // Point mass at 0, then one exponential at a time: G' = r (F - G), with
        // F linear between grid nodes so each update is exact.
        let mut prev = vec![1.0; n];
        let mut next = vec![0.0; n];
        for &r in rates {
            let x = r * step;
            let e = (-x).exp();
            let one_minus = -(-x).exp_m1();
            let w_next = 1.0 - one_minus / x;
            let w_prev = one_minus / x - e;
            next[0] = 0.0;
            for i in 0..n - 1 {
                next[i + 1] = e * next[i] + w_prev * prev[i] + w_next * prev[i + 1];
            }
            std::mem::swap(&mut prev, &mut next);
        }
        let mut running = 0.0f64;
        for v in prev.iter_mut() {
            running = running.max(v.min(1.0));
            *v = running;
        }
        Hypoexponential::Grid {
            step,
            table: prev.into(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Hypoexponential::Single(r) => -(-r * t).exp_m1(),
            Hypoexponential::Distinct { rates, weights } => {
                let tail: f64 = rates.iter().zip(weights).map(|(r, w)| w * (-r * t).exp()).sum();
                (1.0 - tail).clamp(0.0, 1.0)
            }
            Hypoexponential::Grid { step, table } => {
                let pos = t / step;
                let i = pos.floor() as usize;
                if i + 1 >= table.len() {
                    return 1.0;
                }
                let frac = pos - i as f64;
                table[i] + frac * (table[i + 1] - table[i])
            }
        }
    }
}
