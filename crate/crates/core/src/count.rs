//! Exact lattice-point counts `N(X, z) = #{γ ∈ PSL₂(Z[i]) : δ(z, γz) ≤ X}`.
//!
//! Group elements are enumerated by bottom row. For a coprime pair `(c, d)`
//! every solution of `ad − bc = 1` is `(a₀ + tc, b₀ + td)` with `t ∈ Z[i]`,
//! and `γ_t z = γ₀ z + t`, so the admissible `t` form a Euclidean disc.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{solve_unimodular, GaussInt};
use crate::geometry::{apply, delta, delta_le_exact, distance, to_c64, Motion, PointH3};

/// Catalan's constant.
pub const CATALAN: f64 = 0.915_965_594_177_219_015_054_603_514_932_384_110_774;

/// Volume of the Picard orbifold.
pub const VOLUME: f64 = CATALAN / 3.0;

/// `c_Γ = π/(2·vol) = 3π/(2·Catalan)`.
pub const C_GAMMA: f64 = 3.0 * PI / (2.0 * CATALAN);

/// Coefficient `a` in `N(X, z) ~ a·X²` with `X = cosh R`.
///
/// The orbit count in a ball of radius `R` is asymptotic to
/// `μ(B_R)/vol ~ c_Γ·e^{2R}`, and `e^{2R} ~ 4X²`.
pub const LEADING_COEFFICIENT: f64 = 4.0 * C_GAMMA;

/// `LEADING_COEFFICIENT · X²`.
pub fn main_term(x: f64) -> f64 {
    LEADING_COEFFICIENT * x * x
}

/// Default cap of [`count_naive`].
pub const ORACLE_CAP: f64 = 50.0;

/// Largest absolute value of a matrix entry the enumeration core produces.
const ENTRY_LIMIT: f64 = (1u64 << 24) as f64;

/// Coset budget of one enumeration.
const COSET_BUDGET: f64 = 4e9;

/// Relative width of the band in which float boundary tests defer to exact
/// arithmetic.
const GUARD: f64 = 1e-9;

/// One exact count together with its main term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    #[serde(rename = "X")]
    pub x: f64,
    pub z: PointH3,
    pub count: u64,
    pub main_term: f64,
    pub remainder: f64,
}

impl CountResult {
    pub fn new(x: f64, z: PointH3, count: u64) -> Self {
        let main = main_term(x);
        CountResult {
            x,
            z,
            count,
            main_term: main,
            remainder: count as f64 - main,
        }
    }
}

fn check_cutoff(x: f64) -> Result<()> {
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::domain(format!("cutoff X must be a finite number >= 1, got {x}")));
    }
    Ok(())
}

/// `N(X, z)`.
pub fn count_exact(x: f64, z: &PointH3) -> Result<CountResult> {
    check_cutoff(x)?;
    let count = if z.is_j() {
        count_at_j(&[x])?[0]
    } else {
        count_exact_general(x, z)?
    };
    Ok(CountResult::new(x, *z, count))
}

/// `N(X, z)` through the general coset enumeration, without the `z = j`
/// specialisation.
pub fn count_exact_general(x: f64, z: &PointH3) -> Result<u64> {
    check_cutoff(x)?;
    let table = CosetTable::new(x, z.x(), 0.0, z.y())?;
    Ok(table.count(x, z))
}

fn q_max(x: f64) -> f64 {
    x + (x * x - 1.0).max(0.0).sqrt()
}

/// Bottom row `(c, d)` of a group element with one solution `(a₀, b₀)` of
/// `a·d − b·c = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coset {
    pub c: GaussInt<i64>,
    pub d: GaussInt<i64>,
    pub a0: GaussInt<i64>,
    pub b0: GaussInt<i64>,
}

/// Coordinates of the admissible-`t` disc of one coset at one point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Frame {
    /// Integer shift `s`; `t = s + u`.
    pub s: (i64, i64),
    /// Disc centre in the `u` coordinates, inside `[-1/2, 1/2]²`.
    pub w: Complex64,
    /// Squared radius for `δ ≤ X`; may be slightly negative.
    pub rho2: f64,
    /// Magnitude of the terms cancelling in `rho2`.
    pub scale: f64,
    pub y: f64,
    pub y_image: f64,
}

impl Frame {
    /// `δ(z, γ_t z)` for `t = s + u`.
    pub fn delta(&self, u: Complex64) -> f64 {
        ((u - self.w).norm_sqr() + self.y * self.y + self.y_image * self.y_image) / (2.0 * self.y * self.y_image)
    }
}

impl Coset {
    /// The element `(a₀ + tc, b₀ + td; c, d)`.
    pub fn motion(&self, t: GaussInt<i64>) -> Motion {
        Motion {
            a: self.a0 + t * self.c,
            b: self.b0 + t * self.d,
            c: self.c,
            d: self.d,
        }
    }

    pub(crate) fn frame(&self, x: f64, z: &PointH3) -> Option<Frame> {
        let (c, d, a0, b0) = (to_c64(&self.c), to_c64(&self.d), to_c64(&self.a0), to_c64(&self.b0));
        let (zx, y) = (z.x(), z.y());
        let y2 = y * y;
        let cxd = c * zx + d;
        let q = cxd.norm_sqr() + c.norm_sqr() * y2;
        if q > q_max(x) * (1.0 + GUARD) {
            return None;
        }
        let y_image = y / q;
        let image = ((a0 * zx + b0) * cxd.conj() + a0 * c.conj() * y2) / q;
        let w = zx - image;
        let s = (w.re.round(), w.im.round());
        let two_xyy = 2.0 * x * y * y_image;
        let rho2 = two_xyy - y2 - y_image * y_image;
        let scale = two_xyy + y2 + y_image * y_image;
        if rho2 < -GUARD * scale {
            return None;
        }
        Some(Frame {
            s: (s.0 as i64, s.1 as i64),
            w: Complex64::new(w.re - s.0, w.im - s.1),
            rho2,
            scale,
            y,
            y_image,
        })
    }

    /// `#{t : δ(z, γ_t z) ≤ X}`.
    pub(crate) fn count(&self, x: f64, z: &PointH3) -> u64 {
        let Some(f) = self.frame(x, z) else {
            return 0;
        };
        let inside = |ur: i64, ui: i64| -> bool {
            let u = Complex64::new(ur as f64, ui as f64);
            let r2 = (u - f.w).norm_sqr();
            let margin = f.rho2 - r2;
            let guard = GUARD * (f.scale + r2);
            if margin > guard {
                true
            } else if margin < -guard {
                false
            } else {
                let t = GaussInt::new(f.s.0 + ur, f.s.1 + ui);
                delta_le_exact(z, &self.motion(t), x)
            }
        };
        let rho = f.rho2.max(0.0).sqrt();
        let lo_re = (f.w.re - rho).floor() as i64 - 1;
        let hi_re = (f.w.re + rho).ceil() as i64 + 1;
        let mut total = 0u64;
        for ur in lo_re..=hi_re {
            let dx = ur as f64 - f.w.re;
            let h = (f.rho2 - dx * dx).max(0.0).sqrt();
            let mut lo = (f.w.im - h).ceil() as i64;
            let mut hi = (f.w.im + h).floor() as i64;
            if lo > hi {
                let mid = f.w.im.round() as i64;
                if !inside(ur, mid) {
                    continue;
                }
                lo = mid;
                hi = mid;
            }
            while inside(ur, lo - 1) {
                lo -= 1;
            }
            while inside(ur, hi + 1) {
                hi += 1;
            }
            while lo <= hi && !inside(ur, lo) {
                lo += 1;
            }
            while hi >= lo && !inside(ur, hi) {
                hi -= 1;
            }
            if hi >= lo {
                total += (hi - lo + 1) as u64;
            }
        }
        total
    }
}

/// Every coset, up to sign, that can contribute to `N(X, z)` for some `z`
/// with `|x(z) − centre| ≤ x_radius` and `y(z) ≥ y_min`.
///
/// The list is a superset for each such point; per-point counts apply the
/// exact test, so one table serves a whole quadrature box.
#[derive(Clone, Debug)]
pub struct CosetTable {
    x_max: f64,
    cosets: Vec<Coset>,
}

impl CosetTable {
    pub fn new(x_max: f64, centre: Complex64, x_radius: f64, y_min: f64) -> Result<Self> {
        check_cutoff(x_max)?;
        if !(y_min > 0.0) {
            return Err(Error::domain("coset table needs a positive height bound"));
        }
        let qm = q_max(x_max) * (1.0 + GUARD);
        let c_radius = qm.sqrt() / y_min;
        let d_extent = qm.sqrt() + c_radius * (centre.norm() + x_radius) + 1.0;
        if c_radius > ENTRY_LIMIT || d_extent > ENTRY_LIMIT {
            return Err(Error::Overflow(format!(
                "coset enumeration at X = {x_max}, y >= {y_min} needs entries beyond 2^24"
            )));
        }
        let estimate = PI * PI / 2.0 * (qm / y_min) * (qm / y_min) * (1.0 + x_radius).powi(2);
        if estimate > COSET_BUDGET {
            return Err(Error::Budget(format!(
                "about {estimate:.3e} cosets needed at X = {x_max}, y >= {y_min}"
            )));
        }

        let cr = c_radius.floor() as i64;
        let mut cs = Vec::new();
        for re in 0..=cr {
            for im in -cr..=cr {
                if re == 0 && im <= 0 {
                    continue;
                }
                let n = (re * re + im * im) as f64;
                if n * y_min * y_min <= qm {
                    cs.push(GaussInt::new(re, im));
                }
            }
        }
        let mut rows: Vec<Vec<Coset>> = cs
            .par_iter()
            .map(|c| {
                let cc = to_c64(c);
                let cn = c.norm() as f64;
                let r = (qm - cn * y_min * y_min).max(0.0).sqrt() + cn.sqrt() * x_radius + GUARD;
                let mid = -cc * centre;
                let mut out = Vec::new();
                let (lo_re, hi_re) = ((mid.re - r).floor() as i64, (mid.re + r).ceil() as i64);
                for dr in lo_re..=hi_re {
                    let dx = dr as f64 - mid.re;
                    let h2 = r * r - dx * dx;
                    if h2 < 0.0 {
                        continue;
                    }
                    let h = h2.sqrt();
                    for di in (mid.im - h).floor() as i64..=(mid.im + h).ceil() as i64 {
                        let d = GaussInt::new(dr, di);
                        if let Some((a0, b0)) = solve_unimodular(c, &d) {
                            out.push(Coset { c: *c, d, a0, b0 });
                        }
                    }
                }
                out
            })
            .collect();
        // c = 0: d is a unit, taken up to sign
        let mut cosets = Vec::new();
        for d in [GaussInt::new(1, 0), GaussInt::new(0, 1)] {
            let (a0, b0) = solve_unimodular(&GaussInt::new(0, 0), &d).expect("unit");
            cosets.push(Coset {
                c: GaussInt::new(0, 0),
                d,
                a0,
                b0,
            });
        }
        for row in rows.iter_mut() {
            cosets.append(row);
        }
        Ok(CosetTable { x_max, cosets })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn cosets(&self) -> &[Coset] {
        &self.cosets
    }

    pub fn len(&self) -> usize {
        self.cosets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cosets.is_empty()
    }

    /// `N(X, z)`; `X` must not exceed the cutoff the table was built for,
    /// and `z` must lie in the region it was built for.
    pub fn count(&self, x: f64, z: &PointH3) -> u64 {
        debug_assert!(x <= self.x_max);
        self.cosets.par_iter().map(|cs| cs.count(x, z)).sum()
    }
}

/// `N(X, j)` for several cutoffs in one pass, in exact integer arithmetic.
///
/// At `j`, `2δ(j, γj) = |a|² + |b|² + |c|² + |d|²`. Writing `n = |c|² + |d|²`
/// and `w₀ = a₀·conj(c) + b₀·conj(d)`, the norm sum of `γ_t` equals
/// `n + (1 + |nt + w₀|²)/n`, so the admissible `t` correspond to the points
/// `v ≡ w₀ (mod n)` with `|v|² ≤ n(M − n) − 1`, `M = ⌊2X⌋`.
pub fn count_at_j(xs: &[f64]) -> Result<Vec<u64>> {
    for &x in xs {
        check_cutoff(x)?;
    }
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let ms: Vec<i64> = xs
        .iter()
        .map(|&x| {
            let m = (2.0 * x).floor();
            if m > (1u64 << 31) as f64 {
                Err(Error::Overflow(format!("cutoff X = {x} too large for the exact path")))
            } else {
                Ok(m as i64)
            }
        })
        .collect::<Result<_>>()?;
    let m_max = *ms.iter().max().unwrap();

    let mut sl = vec![0u64; xs.len()];
    // c = 0 or d = 0: four unit choices each
    for (c, d) in [((0, 0), (1, 0)), ((1, 0), (0, 0))] {
        let c = GaussInt::new(c.0, c.1);
        let d = GaussInt::new(d.0, d.1);
        add_coset_counts(&c, &d, &ms, 4, &mut sl);
    }
    // c, d ≠ 0: orbits of (c, d) ↦ (αc, ±αd), α a unit, have size 8
    let r = m_max.isqrt();
    let cs: Vec<GaussInt<i64>> = (1..=r)
        .flat_map(|re| (0..=r).map(move |im| GaussInt::new(re, im)))
        .filter(|c| c.norm() < m_max - 1)
        .collect();
    let partial: Vec<Vec<u64>> = cs
        .par_iter()
        .map(|c| {
            let mut acc = vec![0u64; ms.len()];
            let room = m_max - 1 - c.norm();
            let dr_max = room.isqrt();
            for dr in 0..=dr_max {
                let di_max = (room - dr * dr).isqrt();
                let di_lo = if dr == 0 { 1 } else { -di_max };
                for di in di_lo..=di_max {
                    add_coset_counts(c, &GaussInt::new(dr, di), &ms, 8, &mut acc);
                }
            }
            acc
        })
        .collect();
    for p in partial {
        for (s, v) in sl.iter_mut().zip(p) {
            *s += v;
        }
    }
    Ok(sl.into_iter().map(|v| v / 2).collect())
}

fn add_coset_counts(c: &GaussInt<i64>, d: &GaussInt<i64>, ms: &[i64], weight: u64, acc: &mut [u64]) {
    let n = c.norm() + d.norm();
    if ms.iter().all(|&m| m <= n) {
        return;
    }
    let Some((a0, b0)) = solve_unimodular(c, d) else {
        return;
    };
    let w0 = a0 * c.conj() + b0 * d.conj();
    let (r1, r2) = (w0.re.rem_euclid(n), w0.im.rem_euclid(n));
    for (slot, &m) in acc.iter_mut().zip(ms) {
        if m > n {
            *slot += weight * residue_disc_count(n * (m - n) - 1, n, r1, r2);
        }
    }
}

/// `#{v ∈ Z[i] : |v|² ≤ k, v ≡ r₁ + r₂·i (mod n)}`.
fn residue_disc_count(k: i64, n: i64, r1: i64, r2: i64) -> u64 {
    if k < 0 {
        return 0;
    }
    let s = k.isqrt();
    let mut v = -s + (r1 + s).rem_euclid(n);
    let mut total = 0i64;
    while v <= s {
        let h = (k - v * v).isqrt();
        total += (h - r2).div_euclid(n) - (-h - 1 - r2).div_euclid(n);
        v += n;
    }
    total as u64
}

/// Gaussian integers of norm at most `n`.
fn disc(n: i64) -> Vec<GaussInt<i64>> {
    let r = n.max(0).isqrt();
    let mut out = Vec::new();
    for re in -r..=r {
        let h = (n - re * re).isqrt();
        for im in -h..=h {
            out.push(GaussInt::new(re, im));
        }
    }
    out
}

/// `N(X, z)` by exhaustive search over `SL₂(Z[i])` matrices, refusing
/// `X > ORACLE_CAP`.
pub fn count_naive(x: f64, z: &PointH3) -> Result<u64> {
    count_naive_with_cap(x, z, ORACLE_CAP)
}

/// [`count_naive`] with an explicit cap.
///
/// Uses `|a|² + |b|² + |c|² + |d|² = 2 cosh d(j, γj)` and
/// `d(j, γj) ≤ 2 d(j, z) + d(z, γz)`.
pub fn count_naive_with_cap(x: f64, z: &PointH3, cap: f64) -> Result<u64> {
    check_cutoff(x)?;
    if x > cap {
        return Err(Error::OracleCap { x, cap });
    }
    let reach = 2.0 * distance(&PointH3::j(), z) + x.acosh();
    let bound = (2.0 * reach.cosh() * (1.0 + 1e-12) + 1e-9).floor() as i64;
    let within = |g: &Motion| -> bool {
        let dv = delta(z, &apply(g, z));
        if (dv - x).abs() <= GUARD * x {
            delta_le_exact(z, g, x)
        } else {
            dv <= x
        }
    };
    let mut sl = 0u64;
    let all = disc(bound);
    for c in &all {
        for d in &all {
            let used = c.norm() + d.norm();
            if used > bound {
                continue;
            }
            if c.re == 0 && c.im == 0 {
                let Some(a) = d.unit_inverse() else { continue };
                for b in disc(bound - used - a.norm()) {
                    let g = Motion { a, b, c: *c, d: *d };
                    if within(&g) {
                        sl += 1;
                    }
                }
                continue;
            }
            for a in &all {
                if used + a.norm() > bound {
                    continue;
                }
                let Some(b) = (*a * *d - GaussInt::new(1, 0)).exact_div(c) else {
                    continue;
                };
                if used + a.norm() + b.norm() > bound {
                    continue;
                }
                let g = Motion { a: *a, b, c: *c, d: *d };
                if within(&g) {
                    sl += 1;
                }
            }
        }
    }
    Ok(sl / 2)
}

/// `n` points from `a` to `b`, equally spaced in `log X`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a > 0.0 && b >= a) || n == 0 {
        return Err(Error::domain(format!("invalid log grid {a}:{b}:{n}")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let (la, lb) = (a.ln(), b.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp())
        .collect();
    v[0] = a;
    v[n - 1] = b;
    Ok(v)
}

/// Counts over a list of cutoffs at one point.
pub fn count_sweep(xs: &[f64], z: &PointH3) -> Result<Vec<CountResult>> {
    if z.is_j() {
        let counts = count_at_j(xs)?;
        return Ok(xs
            .iter()
            .zip(counts)
            .map(|(&x, n)| CountResult::new(x, *z, n))
            .collect());
    }
    let Some(&top) = xs.iter().max_by(|a, b| a.total_cmp(b)) else {
        return Ok(Vec::new());
    };
    for &x in xs {
        check_cutoff(x)?;
    }
    let table = CosetTable::new(top, z.x(), 0.0, z.y())?;
    Ok(xs.iter().map(|&x| CountResult::new(x, *z, table.count(x, z))).collect())
}

/// Sweep table with header `X,count,main_term,remainder`.
pub fn sweep_csv(rows: &[CountResult]) -> String {
    let mut out = String::from("X,count,main_term,remainder\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.x, r.count, r.main_term, r.remainder));
    }
    out
}
