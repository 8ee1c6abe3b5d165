//! Exact exponent bookkeeping for the local-average remainder.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = Ratio<i64>;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// Parses `a/b`, an integer, or a finite decimal such as `0.125`, exactly.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::domain(format!("not a rational number: {s:?}"));
    if s.contains('/') {
        return Q::from_str(s)
            .map_err(|_| bad())
            .and_then(|r| if *r.denom() == 0 { Err(bad()) } else { Ok(r) });
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())) {
        return Err(bad());
    }
    if frac.len() > 15 {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: i64 = if digits.is_empty() {
        0
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let r = Q::new(n, 10i64.pow(frac.len() as u32));
    Ok(if neg { -r } else { r })
}

fn to_f64(r: &Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `θ ∈ [0, 1/4]` and `q ∈ [1, 3]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HypothesisParams {
    theta: Q,
    q: Q,
}

impl HypothesisParams {
    pub fn new(theta: Q, q_exp: Q) -> Result<Self> {
        check_theta(theta)?;
        if q_exp < Q::one() || q_exp > q(3, 1) {
            return Err(Error::domain(format!("q must lie in [1, 3], got {q_exp}")));
        }
        Ok(HypothesisParams { theta, q: q_exp })
    }

    pub fn theta(&self) -> Q {
        self.theta
    }

    pub fn q(&self) -> Q {
        self.q
    }
}

fn check_theta(theta: Q) -> Result<()> {
    if theta < Q::zero() || theta > q(1, 4) {
        return Err(Error::domain(format!("theta must lie in [0, 1/4], got {theta}")));
    }
    Ok(())
}

/// Exponent pair `(α, β)` in `S(T, X) ≪ T^α X^β + T²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StxPair {
    pub alpha: Q,
    pub beta: Q,
}

impl StxPair {
    pub fn new(alpha: Q, beta: Q) -> Result<Self> {
        if alpha < Q::zero() || alpha >= q(3, 1) || beta < Q::zero() {
            return Err(Error::domain(format!(
                "exponent pair needs 0 <= alpha < 3 and beta >= 0, got ({alpha}, {beta})"
            )));
        }
        Ok(StxPair { alpha, beta })
    }

    /// `X`-exponent `β/(3 − α)` of the pair at `α = 2` on the line through
    /// the trivial pair `(3, 0)`.
    pub fn beta_at_two(&self) -> Q {
        self.beta / (q(3, 1) - self.alpha)
    }

    /// Exponent `1 + β₂` of the spectral-sum term in the remainder.
    pub fn stx_exponent(&self) -> Q {
        Q::one() + self.beta_at_two()
    }
}

impl fmt::Display for StxPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.alpha, self.beta)
    }
}

/// Interpolates `(3, 0)` and `(7/4 + θ, 1/4)` to `(2, 1/(5 − 4θ))`.
pub fn interpolate_stx(theta: Q) -> Result<StxPair> {
    check_theta(theta)?;
    Ok(StxPair {
        alpha: q(2, 1),
        beta: Q::one() / (q(5, 1) - q(4, 1) * theta),
    })
}

/// `2q/(q + 1)`.
pub fn qv_exponent(q_exp: Q) -> Q {
    q(2, 1) * q_exp / (q_exp + Q::one())
}

/// `max((6 − 4θ)/(5 − 4θ), 2q/(q + 1))`.
pub fn remainder_exponent(p: &HypothesisParams) -> Q {
    let four_theta = q(4, 1) * p.theta;
    let stx = (q(6, 1) - four_theta) / (q(5, 1) - four_theta);
    stx.max(qv_exponent(p.q))
}

/// `max(1 + β₂, 2q/(q + 1))` for an arbitrary exponent pair.
pub fn remainder_exponent_with(pair: &StxPair, q_exp: Q) -> Q {
    pair.stx_exponent().max(qv_exponent(q_exp))
}

/// `(3 − 2θ)/(2 − 2θ)`: the smallest `q` at which the `2q/(q + 1)` term
/// dominates.
pub fn crossover_q(theta: Q) -> Result<Q> {
    check_theta(theta)?;
    Ok((q(3, 1) - q(2, 1) * theta) / (q(2, 1) - q(2, 1) * theta))
}

/// `(1 + β₂)/(1 − β₂)`, the crossover for an arbitrary pair; `None` when the
/// spectral-sum term dominates for every `q`.
pub fn crossover_q_with(pair: &StxPair) -> Option<Q> {
    let b = pair.beta_at_two();
    (b < Q::one()).then(|| (Q::one() + b) / (Q::one() - b))
}

/// `T = X^{2/(q+1)}` and `η = e^{−2R/(q+1)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Balance {
    pub t_exponent: Q,
    pub eta: f64,
}

pub fn balance(p: &HypothesisParams, radius: f64) -> Result<Balance> {
    if !(radius >= 1.0) || !radius.is_finite() {
        return Err(Error::domain(format!("balance needs R >= 1, got {radius}")));
    }
    let t_exponent = q(2, 1) / (p.q + Q::one());
    Ok(Balance {
        t_exponent,
        eta: (-radius * to_f64(&t_exponent)).exp(),
    })
}

/// Named exponent pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StxPreset {
    /// `(2, 1/(5 − 4θ))`, interpolated from the `θ`-pair.
    Interpolated,
    /// `(2, 1/4)`.
    TwoQuarter,
    /// `(7/4 + θ, 1/4)`.
    SevenFourthsTheta,
    /// `(15/8, 1/4)`.
    FifteenEighths,
    /// `(2, 0)`, conjectural.
    Conjectural,
}

impl StxPreset {
    pub const ALL: [StxPreset; 5] = [
        StxPreset::Interpolated,
        StxPreset::TwoQuarter,
        StxPreset::SevenFourthsTheta,
        StxPreset::FifteenEighths,
        StxPreset::Conjectural,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StxPreset::Interpolated => "interpolated",
            StxPreset::TwoQuarter => "two-quarter",
            StxPreset::SevenFourthsTheta => "seven-fourths-theta",
            StxPreset::FifteenEighths => "fifteen-eighths",
            StxPreset::Conjectural => "conjectural",
        }
    }

    pub fn pair(&self, theta: Q) -> Result<StxPair> {
        check_theta(theta)?;
        Ok(match self {
            StxPreset::Interpolated => interpolate_stx(theta)?,
            StxPreset::TwoQuarter => StxPair {
                alpha: q(2, 1),
                beta: q(1, 4),
            },
            StxPreset::SevenFourthsTheta => StxPair {
                alpha: q(7, 4) + theta,
                beta: q(1, 4),
            },
            StxPreset::FifteenEighths => StxPair {
                alpha: q(15, 8),
                beta: q(1, 4),
            },
            StxPreset::Conjectural => StxPair {
                alpha: q(2, 1),
                beta: Q::zero(),
            },
        })
    }
}

impl FromStr for StxPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        StxPreset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = StxPreset::ALL.iter().map(|p| p.name()).collect();
            Error::domain(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// A rational printed both exactly and in decimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exact(pub Q);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Exact", 2)?;
        st.serialize_field("exact", &self.0.to_string())?;
        st.serialize_field("decimal", &to_f64(&self.0))?;
        st.end()
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:.6})", self.0, to_f64(&self.0))
    }
}

/// One line of the exponent table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanRow {
    pub preset: &'static str,
    pub theta: Exact,
    pub q: Exact,
    pub alpha: Exact,
    pub beta: Exact,
    /// `None` when the spectral-sum term dominates for every `q`.
    pub crossover: Option<Exact>,
    pub exponent: Exact,
    pub t_exponent: Exact,
}

pub fn plan(p: &HypothesisParams, preset: StxPreset) -> Result<PlanRow> {
    let pair = preset.pair(p.theta)?;
    Ok(PlanRow {
        preset: preset.name(),
        theta: Exact(p.theta),
        q: Exact(p.q),
        alpha: Exact(pair.alpha),
        beta: Exact(pair.beta),
        crossover: crossover_q_with(&pair).map(Exact),
        exponent: Exact(remainder_exponent_with(&pair, p.q)),
        t_exponent: Exact(q(2, 1) / (p.q + Q::one())),
    })
}

/// CSV of plan rows, rationals in exact form.
pub fn plan_csv(rows: &[PlanRow]) -> String {
    let mut s = String::from("preset,theta,q,alpha,beta,crossover,exponent,exponent_decimal,T_exponent\n");
    for r in rows {
        let cross = r.crossover.map(|c| c.0.to_string()).unwrap_or_else(|| "none".into());
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.preset,
            r.theta.0,
            r.q.0,
            r.alpha.0,
            r.beta.0,
            cross,
            r.exponent.0,
            to_f64(&r.exponent.0),
            r.t_exponent.0
        ));
    }
    s
}
