//! Upper half-space model of hyperbolic 3-space and the Picard group action.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::FromPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussInt;

/// A point `x + y·j` of H³ with `x` complex and `y > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct PointH3 {
    x: Complex64,
    y: f64,
}

impl PointH3 {
    pub fn new(x1: f64, x2: f64, y: f64) -> Result<Self> {
        if !(x1.is_finite() && x2.is_finite() && y.is_finite()) {
            return Err(Error::domain("point coordinates must be finite"));
        }
        if y <= 0.0 {
            return Err(Error::domain(format!("point height must be positive, got y = {y}")));
        }
        Ok(PointH3 {
            x: Complex64::new(x1, x2),
            y,
        })
    }

    pub fn from_complex(x: Complex64, y: f64) -> Result<Self> {
        PointH3::new(x.re, x.im, y)
    }

    /// The point `j = (0, 0, 1)`.
    pub fn j() -> Self {
        PointH3 {
            x: Complex64::new(0.0, 0.0),
            y: 1.0,
        }
    }

    pub fn x(&self) -> Complex64 {
        self.x
    }

    pub fn x1(&self) -> f64 {
        self.x.re
    }

    pub fn x2(&self) -> f64 {
        self.x.im
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn is_j(&self) -> bool {
        self.x.re == 0.0 && self.x.im == 0.0 && self.y == 1.0
    }

    /// Membership in the closed fundamental domain
    /// `|x1| ≤ 1/2, 0 ≤ x2 ≤ 1/2, |x|² + y² ≥ 1`, widened by `slack`.
    pub fn in_fundamental_domain(&self, slack: f64) -> bool {
        self.x1().abs() <= 0.5 + slack
            && self.x2() >= -slack
            && self.x2() <= 0.5 + slack
            && self.x.norm_sqr() + self.y * self.y >= 1.0 - slack
    }
}

impl TryFrom<[f64; 3]> for PointH3 {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        PointH3::new(v[0], v[1], v[2])
    }
}

impl From<PointH3> for [f64; 3] {
    fn from(p: PointH3) -> Self {
        [p.x1(), p.x2(), p.y()]
    }
}

impl fmt::Display for PointH3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x1(), self.x2(), self.y)
    }
}

/// `cosh d(z, w)`, evaluated from the quotient formula.
pub fn delta(z: &PointH3, w: &PointH3) -> f64 {
    ((z.x - w.x).norm_sqr() + z.y * z.y + w.y * w.y) / (2.0 * z.y * w.y)
}

/// Hyperbolic distance `d(z, w)`.
pub fn distance(z: &PointH3, w: &PointH3) -> f64 {
    delta(z, w).max(1.0).acosh()
}

/// Volume `π(sinh 2R − 2R)` of a hyperbolic ball of radius `R`.
pub fn ball_volume(radius: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::domain(format!("ball radius must be nonnegative, got {radius}")));
    }
    Ok(PI * sinh_minus_id(2.0 * radius))
}

/// `sinh(t) − t` without cancellation for small `t`.
pub(crate) fn sinh_minus_id(t: f64) -> f64 {
    if t.abs() < 0.1 {
        // t³/3! + t⁵/5! + ...; seven terms reach f64 precision for |t| < 0.1
        let t2 = t * t;
        let mut term = t * t2 / 6.0;
        let mut sum = 0.0;
        let mut k = 3.0;
        for _ in 0..7 {
            sum += term;
            term *= t2 / ((k + 1.0) * (k + 2.0));
            k += 2.0;
        }
        sum
    } else {
        t.sinh() - t
    }
}

/// An element of PSL₂(Z[i]): a matrix `(a b; c d)` with `ad − bc = 1`,
/// identified with its negative.
#[derive(Clone, Copy, Debug)]
pub struct Motion {
    pub a: GaussInt<i64>,
    pub b: GaussInt<i64>,
    pub c: GaussInt<i64>,
    pub d: GaussInt<i64>,
}

fn gi(re: i64, im: i64) -> GaussInt<i64> {
    GaussInt::new(re, im)
}

impl Motion {
    pub fn new(a: GaussInt<i64>, b: GaussInt<i64>, c: GaussInt<i64>, d: GaussInt<i64>) -> Result<Self> {
        let det = checked_det(&a, &b, &c, &d).ok_or_else(|| Error::Overflow("determinant of motion".into()))?;
        if det != gi(1, 0) {
            return Err(Error::domain(format!("motion has determinant {det}, expected 1")));
        }
        Ok(Motion { a, b, c, d })
    }

    pub fn identity() -> Self {
        Motion {
            a: gi(1, 0),
            b: gi(0, 0),
            c: gi(0, 0),
            d: gi(1, 0),
        }
    }

    /// `z ↦ z + t`.
    pub fn translation(t: GaussInt<i64>) -> Self {
        Motion {
            a: gi(1, 0),
            b: t,
            c: gi(0, 0),
            d: gi(1, 0),
        }
    }

    /// `(0 −1; 1 0)`.
    pub fn inversion() -> Self {
        Motion {
            a: gi(0, 0),
            b: gi(-1, 0),
            c: gi(1, 0),
            d: gi(0, 0),
        }
    }

    /// `(i 0; 0 −i)`, acting as `x ↦ −x`.
    pub fn half_turn() -> Self {
        Motion {
            a: gi(0, 1),
            b: gi(0, 0),
            c: gi(0, 0),
            d: gi(0, -1),
        }
    }

    /// Matrix product `self · other`, with overflow detection.
    pub fn compose(&self, other: &Motion) -> Result<Motion> {
        let m = |p: &GaussInt<i64>, q: &GaussInt<i64>, r: &GaussInt<i64>, s: &GaussInt<i64>| {
            let x = checked_mul(p, q)?;
            let y = checked_mul(r, s)?;
            Some(gi(x.re.checked_add(y.re)?, x.im.checked_add(y.im)?))
        };
        let ovf = || Error::Overflow("motion product".into());
        Ok(Motion {
            a: m(&self.a, &other.a, &self.b, &other.c).ok_or_else(ovf)?,
            b: m(&self.a, &other.b, &self.b, &other.d).ok_or_else(ovf)?,
            c: m(&self.c, &other.a, &self.d, &other.c).ok_or_else(ovf)?,
            d: m(&self.c, &other.b, &self.d, &other.d).ok_or_else(ovf)?,
        })
    }

    pub fn inverse(&self) -> Motion {
        Motion {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `norm(a) + norm(b) + norm(c) + norm(d)`.
    pub fn frobenius_norm_sq(&self) -> i64 {
        self.a.norm() + self.b.norm() + self.c.norm() + self.d.norm()
    }

    fn entries(&self) -> [i64; 8] {
        [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re, self.d.im,
        ]
    }

    /// Representative of `±γ` whose first nonzero entry is positive.
    fn canonical_entries(&self) -> [i64; 8] {
        let e = self.entries();
        let first = e.iter().copied().find(|v| *v != 0).unwrap_or(0);
        if first < 0 {
            e.map(|v| -v)
        } else {
            e
        }
    }
}

fn checked_mul(p: &GaussInt<i64>, q: &GaussInt<i64>) -> Option<GaussInt<i64>> {
    let re = p.re.checked_mul(q.re)?.checked_sub(p.im.checked_mul(q.im)?)?;
    let im = p.re.checked_mul(q.im)?.checked_add(p.im.checked_mul(q.re)?)?;
    Some(gi(re, im))
}

fn checked_det(a: &GaussInt<i64>, b: &GaussInt<i64>, c: &GaussInt<i64>, d: &GaussInt<i64>) -> Option<GaussInt<i64>> {
    let ad = checked_mul(a, d)?;
    let bc = checked_mul(b, c)?;
    Some(gi(ad.re.checked_sub(bc.re)?, ad.im.checked_sub(bc.im)?))
}

impl PartialEq for Motion {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_entries() == other.canonical_entries()
    }
}

impl Eq for Motion {}

impl Hash for Motion {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical_entries().hash(state);
    }
}

impl fmt::Display for Motion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]", self.a, self.b, self.c, self.d)
    }
}

#[inline]
pub(crate) fn to_c64(g: &GaussInt<i64>) -> Complex64 {
    Complex64::new(g.re as f64, g.im as f64)
}

/// `γz = (az + b)(cz + d)⁻¹` in explicit coordinates.
pub fn apply(g: &Motion, z: &PointH3) -> PointH3 {
    let (a, b, c, d) = (to_c64(&g.a), to_c64(&g.b), to_c64(&g.c), to_c64(&g.d));
    let y2 = z.y * z.y;
    let cxd = c * z.x + d;
    let q = cxd.norm_sqr() + c.norm_sqr() * y2;
    let num = (a * z.x + b) * cxd.conj() + a * c.conj() * y2;
    PointH3 { x: num / q, y: z.y / q }
}

/// Exact test of `δ(z, γz) ≤ X`, treating the floating-point inputs as the
/// rationals they represent.
///
/// With `Q = |cx + d|² + |c|²y²` and `P = (ax + b)·conj(cx + d) + a·conj(c)·y²`
/// the inequality is `|xQ − P|² + y²Q² + y² ≤ 2X·y²·Q`.
pub fn delta_le_exact(z: &PointH3, g: &Motion, bound: f64) -> bool {
    delta_cmp_exact(z, g, bound) != Ordering::Greater
}

/// Exact comparison of `δ(z, γz)` with `bound`.
pub fn delta_cmp_exact(z: &PointH3, g: &Motion, bound: f64) -> Ordering {
    let r = |v: f64| BigRational::from_f64(v).expect("finite coordinate");
    let x = RatC::new(r(z.x1()), r(z.x2()));
    let y = r(z.y());
    let y2 = &y * &y;
    let a = RatC::from_gauss(&g.a);
    let b = RatC::from_gauss(&g.b);
    let c = RatC::from_gauss(&g.c);
    let d = RatC::from_gauss(&g.d);

    let cxd = c.mul(&x).add(&d);
    let q = cxd.norm_sqr() + c.norm_sqr() * &y2;
    let p = a.mul(&x).add(&b).mul(&cxd.conj()).add(&a.mul(&c.conj()).scale(&y2));
    let lhs = x.scale(&q).sub(&p).norm_sqr() + &y2 * &q * &q + &y2;
    let two = BigRational::from_integer(BigInt::from(2));
    let rhs = two * r(bound) * &y2 * &q;
    lhs.cmp(&rhs)
}

#[derive(Clone, Debug)]
struct RatC {
    re: BigRational,
    im: BigRational,
}

impl RatC {
    fn new(re: BigRational, im: BigRational) -> Self {
        RatC { re, im }
    }

    fn from_gauss(g: &GaussInt<i64>) -> Self {
        RatC::new(
            BigRational::from_integer(BigInt::from(g.re)),
            BigRational::from_integer(BigInt::from(g.im)),
        )
    }

    fn add(&self, o: &RatC) -> RatC {
        RatC::new(&self.re + &o.re, &self.im + &o.im)
    }

    fn sub(&self, o: &RatC) -> RatC {
        RatC::new(&self.re - &o.re, &self.im - &o.im)
    }

    fn mul(&self, o: &RatC) -> RatC {
        RatC::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }

    fn scale(&self, s: &BigRational) -> RatC {
        RatC::new(&self.re * s, &self.im * s)
    }

    fn conj(&self) -> RatC {
        RatC::new(self.re.clone(), -self.im.clone())
    }

    fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

/// Result of [`reduce`]: `point = apply(motion, input)`.
#[derive(Clone, Copy, Debug)]
pub struct Reduced {
    pub point: PointH3,
    pub motion: Motion,
}

/// Iteration budget for [`reduce`].
pub const REDUCE_MAX_STEPS: usize = 10_000;

/// Moves `z` into the closed fundamental domain
/// `|x1| ≤ 1/2, 0 ≤ x2 ≤ 1/2, |x|² + y² ≥ 1`.
///
/// Boundary ties go to the image with the lexicographically smallest
/// `(x1, x2)`.
pub fn reduce(z: &PointH3) -> Result<Reduced> {
    let mut motion = Motion::identity();
    let mut p = *z;
    let step = |g: Motion, p: &mut PointH3, motion: &mut Motion| -> Result<()> {
        *p = apply(&g, p);
        *motion = g.compose(motion)?;
        Ok(())
    };
    for _ in 0..REDUCE_MAX_STEPS {
        // translate x into [-1/2, 1/2)²
        let t = gi(-(p.x1() + 0.5).floor() as i64, -(p.x2() + 0.5).floor() as i64);
        if !t.is_zero() {
            step(Motion::translation(t), &mut p, &mut motion)?;
        }
        if p.x2() < 0.0 || (p.x2() == 0.0 && p.x1() > 0.0) {
            step(Motion::half_turn(), &mut p, &mut motion)?;
        }
        if p.x1() >= 0.5 {
            step(Motion::translation(gi(-1, 0)), &mut p, &mut motion)?;
        }
        if p.x2() == 0.5 && p.x1() > 0.0 {
            // x ↦ −x + i keeps x2 = 1/2 and flips x1
            step(Motion::half_turn(), &mut p, &mut motion)?;
            step(Motion::translation(gi(0, 1)), &mut p, &mut motion)?;
        }
        let r2 = p.x.norm_sqr() + p.y * p.y;
        if r2 < 1.0 {
            step(Motion::inversion(), &mut p, &mut motion)?;
            continue;
        }
        if r2 == 1.0 {
            // on the unit sphere: compare with the inverted and re-reduced image
            let alt = apply(&Motion::inversion(), &p);
            let t = gi(-(alt.x1() + 0.5).floor() as i64, -(alt.x2() + 0.5).floor() as i64);
            let alt = apply(&Motion::translation(t), &alt);
            if (alt.x1(), alt.x2()) < (p.x1(), p.x2()) && alt.in_fundamental_domain(0.0) {
                step(Motion::inversion(), &mut p, &mut motion)?;
                step(Motion::translation(t), &mut p, &mut motion)?;
            }
        }
        return Ok(Reduced { point: p, motion });
    }
    Err(Error::NonTermination(REDUCE_MAX_STEPS))
}

/// Random element of PSL₂(Z[i]) built as a word in the generators.
#[cfg(test)]
pub(crate) fn random_motion<R: rand::Rng>(rng: &mut R, length: usize) -> Motion {
    let mut g = Motion::identity();
    for _ in 0..length {
        let gen = match rng.gen_range(0..4) {
            0 => Motion::translation(gi(rng.gen_range(-2..=2), rng.gen_range(-2..=2))),
            1 => Motion::inversion(),
            2 => Motion::half_turn(),
            _ => Motion::translation(gi(rng.gen_range(-1..=1), 0)),
        };
        g = gen.compose(&g).unwrap();
    }
    g
}
