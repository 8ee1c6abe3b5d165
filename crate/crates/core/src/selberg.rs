//! Selberg transforms of ball kernels and of the smoothed kernels `k±`.
//!
//! `h(r) = (4π/r) ∫₀^∞ k(cosh u) sin(ru) sinh u du`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ball_volume;
use crate::numeric::integrate;
use crate::smoothed::{smoothed_kernel, SmoothedKernelSpec};

/// Width of the half-strip `|Im r| < STRIP` on which transforms are evaluated.
pub const STRIP: f64 = 2.0;

/// Radius around `0` and `±i` inside which the Taylor expansion is used.
pub const TAYLOR_RADIUS: f64 = 1e-4;

/// A transform value at a spectral parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformValue {
    pub r: Complex64,
    pub value: Complex64,
}

/// `M_n = ∫₀^R uⁿ sinh u du = Σ_j R^{n+2j+2} / ((2j+1)!·(n+2j+2))`.
fn moment(n: u32, radius: f64) -> f64 {
    let mut sum = 0.0;
    // R^{n+2j+2}/(2j+1)!
    let mut pow_fact = radius.powi(n as i32 + 2);
    let mut j = 0u32;
    loop {
        let term = pow_fact / (n + 2 * j + 2) as f64;
        sum += term;
        if term <= 1e-18 * sum || j > 400 {
            return sum;
        }
        pow_fact *= radius * radius / ((2 * j + 2) * (2 * j + 3)) as f64;
        j += 1;
    }
}

/// `c_k = M_{2k+1}/(2k+1)!`, the coefficients of `h_R(r)/(4π)` in `(−r²)^k`.
fn series_coefficients(radius: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut fact = 1.0;
    for k in 0..count {
        let n = 2 * k as u32 + 1;
        fact *= if k == 0 { 1.0 } else { ((n - 1) * n) as f64 };
        out.push(moment(n, radius) / fact);
    }
    out
}

/// Number of coefficients after which `c_k·|w|^k` is negligible.
fn series_length(radius: f64, w: f64) -> usize {
    // c_k ≲ R^{2k+2} sinh R/(2k+1)!; stop once (R·sqrt|w|)^{2k}/(2k+1)! < 1e-20
    let x = radius * w.sqrt().max(1.0);
    let mut term = 1.0;
    let mut k = 0;
    while k < 12 || term > 1e-20 {
        k += 1;
        term *= x * x / ((2 * k) * (2 * k + 1)) as f64;
        if k > 500 {
            break;
        }
    }
    k + 1
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::domain(format!("ball radius must be positive, got {radius}")));
    }
    Ok(())
}

fn check_strip(r: Complex64) -> Result<()> {
    if !(r.im.abs() < STRIP) || !r.re.is_finite() {
        return Err(Error::domain(format!(
            "spectral parameter {r} outside |Im r| < {STRIP}"
        )));
    }
    Ok(())
}

/// Selberg transform `h_R(r)` of the indicator of the ball of radius `R`.
pub fn h_ball(radius: f64, r: Complex64) -> Result<Complex64> {
    check_radius(radius)?;
    check_strip(r)?;
    let i = Complex64::i();
    if r.norm() < TAYLOR_RADIUS {
        return Ok(taylor_at_zero(radius, r));
    }
    for r0 in [i, -i] {
        if (r - r0).norm() < TAYLOR_RADIUS {
            return Ok(taylor_at_pole(radius, r, r0));
        }
    }
    if r.norm() * radius <= 2.0 {
        return Ok(power_series(radius, r));
    }
    if r.im == 0.0 {
        return Ok(Complex64::new(h_ball_real_form(radius, r.re), 0.0));
    }
    Ok(closed_form(radius, r))
}

fn horner(c: &[f64], w: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, ck| acc * w + ck)
}

fn taylor_at_zero(radius: f64, r: Complex64) -> Complex64 {
    4.0 * PI * horner(&series_coefficients(radius, 4), -r * r)
}

/// Four Taylor terms about `r₀ = ±i`:
/// `h^{(m)}(r₀)/m! = r₀^{−m}·4π·Σ_k c_k·C(2k, m)`.
fn taylor_at_pole(radius: f64, r: Complex64, r0: Complex64) -> Complex64 {
    let dz = r - r0;
    let c = series_coefficients(radius, series_length(radius, 1.0));
    let mut acc = Complex64::new(0.0, 0.0);
    let mut step = Complex64::new(1.0, 0.0);
    for m in 0..4u32 {
        let s: f64 = c.iter().enumerate().map(|(k, ck)| ck * binomial(2 * k as u32, m)).sum();
        acc += step * r0.powi(-(m as i32)) * s;
        step *= dz;
    }
    4.0 * PI * acc
}

fn power_series(radius: f64, r: Complex64) -> Complex64 {
    let w = -r * r;
    4.0 * PI * horner(&series_coefficients(radius, series_length(radius, w.norm())), w)
}

/// `2π sinh(R(1+ir))/(ir(1+ir)) − 2π sinh(R(1−ir))/(ir(1−ir))`.
fn closed_form(radius: f64, r: Complex64) -> Complex64 {
    let ir = Complex64::i() * r;
    let one = Complex64::new(1.0, 0.0);
    let t1 = 2.0 * PI * (radius * (one + ir)).sinh() / (ir * (one + ir));
    let t2 = 2.0 * PI * (radius * (one - ir)).sinh() / (ir * (one - ir));
    t1 - t2
}

/// The exponential closed form of `h_R(r)`, valid off `r ∈ {0, ±i}` but
/// cancelling badly near those points.
pub fn h_ball_complex_form(radius: f64, r: Complex64) -> Result<Complex64> {
    check_radius(radius)?;
    check_strip(r)?;
    let i = Complex64::i();
    if r.norm() == 0.0 || r == i || r == -i {
        return Err(Error::domain(format!("closed form is singular at r = {r}")));
    }
    Ok(closed_form(radius, r))
}

/// `h_R(r)` for real `r ≠ 0`:
/// `4π/(r(1+r²))·(cosh R sin Rr − r sinh R cos Rr)`.
pub fn h_ball_real_form(radius: f64, r: f64) -> f64 {
    let (s, c) = (radius * r).sin_cos();
    4.0 * PI / (r * (1.0 + r * r)) * (radius.cosh() * s - r * radius.sinh() * c)
}

/// `d h_R / dr` for real `r ≥ 1`.
fn h_ball_derivative(radius: f64, r: f64) -> f64 {
    let (s, c) = (radius * r).sin_cos();
    let (ch, sh) = (radius.cosh(), radius.sinh());
    let num = ch * s - r * sh * c;
    let dnum = radius * ch * c - sh * c + r * radius * sh * s;
    let den = r * (1.0 + r * r);
    let dden = 1.0 + 3.0 * r * r;
    4.0 * PI * (dnum * den - num * dden) / (den * den)
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `h±(r) = h_{R±η}(r)·h_η(r)/μ(B_η)`.
pub fn h_pm(spec: &SmoothedKernelSpec, r: Complex64) -> Result<Complex64> {
    let outer = h_ball(spec.outer_radius(), r)?;
    let inner = h_ball(spec.eta(), r)?;
    Ok(outer * inner / ball_volume(spec.eta())?)
}

/// [`h_pm`] on the real line.
pub fn h_pm_real(spec: &SmoothedKernelSpec, r: f64) -> Result<f64> {
    Ok(h_pm(spec, Complex64::new(r, 0.0))?.re)
}

/// Absolute tolerance of [`selberg_numeric`].
pub const NUMERIC_TOL: f64 = 1e-8;

/// `(4π/r) ∫₀^{u_max} k(cosh u) sin(ru) sinh u du` by adaptive Simpson.
///
/// `breaks` lists points in `(0, u_max)` where `k(cosh u)` is not smooth.
pub fn selberg_numeric<F: Fn(f64) -> f64>(k: F, r: f64, u_max: f64, breaks: &[f64]) -> Result<f64> {
    selberg_numeric_tol(k, r, u_max, breaks, NUMERIC_TOL)
}

/// [`selberg_numeric`] with an explicit absolute tolerance.
pub fn selberg_numeric_tol<F: Fn(f64) -> f64>(k: F, r: f64, u_max: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    if !(u_max >= 0.0) || !r.is_finite() {
        return Err(Error::domain("selberg_numeric needs u_max >= 0 and finite r"));
    }
    let mut pts = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < u_max));
    pts.push(u_max);
    pts.sort_by(f64::total_cmp);
    // sin(ru)/r, equal to u at r = 0
    let sinc = |u: f64| if r == 0.0 { u } else { (r * u).sin() / r };
    // at least 20 samples per period of sin(ru)
    let panel = if r == 0.0 {
        u_max.max(1e-3)
    } else {
        (2.0 * PI / r.abs()) / 10.0
    };
    let integral = integrate(
        |u| k(u.cosh()) * sinc(u) * u.sinh(),
        &pts,
        tol / (4.0 * PI),
        panel.min(0.25),
    )?;
    Ok(4.0 * PI * integral)
}

/// Coefficients of the oscillatory decomposition
/// `h±(r) = A·e^{ir(R±η)} + B·e^{−ir(R±η)}`, `r ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbDecomposition {
    pub a: Complex64,
    pub b: Complex64,
}

/// Splits `h±(r)` by expanding the hyperbolic sines of `h_{R±η}` into
/// exponentials; the factor `h_η(r)/μ(B_η)` is carried by both `A` and `B`.
pub fn ab_decomposition(spec: &SmoothedKernelSpec, r: f64) -> Result<AbDecomposition> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("A/B decomposition needs r >= 1, got {r}")));
    }
    let (alpha, beta) = outer_coefficients(spec.outer_radius(), r);
    let h = h_ball(spec.eta(), Complex64::new(r, 0.0))?.re / ball_volume(spec.eta())?;
    Ok(AbDecomposition {
        a: alpha * h,
        b: beta * h,
    })
}

/// `(α, β)` with `h_ρ(r) = α·e^{iρr} + β·e^{−iρr}`.
fn outer_coefficients(rho: f64, r: f64) -> (Complex64, Complex64) {
    let ir = Complex64::new(0.0, r);
    let one = Complex64::new(1.0, 0.0);
    let (ep, em) = (rho.exp(), (-rho).exp());
    let p = ir * (one + ir);
    let m = ir * (one - ir);
    let alpha = PI * ep / p + PI * em / m;
    let beta = -PI * em / p - PI * ep / m;
    (alpha, beta)
}

/// `(∂A/∂r, ∂B/∂r)`.
pub fn ab_derivative(spec: &SmoothedKernelSpec, r: f64) -> Result<AbDecomposition> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("A/B decomposition needs r >= 1, got {r}")));
    }
    let rho = spec.outer_radius();
    let (alpha, beta) = outer_coefficients(rho, r);
    let i = Complex64::i();
    let (ep, em) = (rho.exp(), (-rho).exp());
    // d/dr 1/(ir ∓ r²) = −(i ∓ 2r)/(ir ∓ r²)²
    let p = i * r - r * r;
    let m = i * r + r * r;
    let dp = -(i - 2.0 * r) / (p * p);
    let dm = -(i + 2.0 * r) / (m * m);
    let dalpha = PI * ep * dp + PI * em * dm;
    let dbeta = -PI * em * dp - PI * ep * dm;
    let vol = ball_volume(spec.eta())?;
    let h = h_ball(spec.eta(), Complex64::new(r, 0.0))?.re / vol;
    let dh = h_ball_derivative(spec.eta(), r) / vol;
    Ok(AbDecomposition {
        a: dalpha * h + alpha * dh,
        b: dbeta * h + beta * dh,
    })
}

/// `e^R r^{−2} min(1, (ηr)^{−2})`.
pub fn ab_envelope(spec: &SmoothedKernelSpec, r: f64) -> f64 {
    let er = (spec.eta() * r).max(1.0);
    spec.radius().exp() / (r * r * er * er)
}

/// Default flagging constant of [`bound_check_hpm`].
pub const BOUND_CONSTANT: f64 = 100.0;

/// Envelope-ratio report for `|h±(r)| ≪ R e^R (1+|r|)^{−2} (1+η|r|)^{−2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub spec: SmoothedKernelSpec,
    pub max_ratio: f64,
    pub grid_size: usize,
    pub flagged: bool,
}

/// Largest value of `|h±(r)|·(1+|r|)²(1+η|r|)²/(R e^R)` over the grid.
pub fn bound_check_hpm(spec: &SmoothedKernelSpec, grid: &[f64], constant: f64) -> Result<BoundReport> {
    let scale = spec.radius() * spec.radius().exp();
    let mut max_ratio: f64 = 0.0;
    for &r in grid {
        let v = h_pm_real(spec, r)?.abs();
        let a = r.abs();
        let ratio = v * (1.0 + a).powi(2) * (1.0 + spec.eta() * a).powi(2) / scale;
        max_ratio = max_ratio.max(ratio);
    }
    Ok(BoundReport {
        spec: *spec,
        max_ratio,
        grid_size: grid.len(),
        flagged: max_ratio > constant,
    })
}

/// Default tolerance of [`convolution_check`].
pub const CONVOLUTION_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionRow {
    pub r: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub abs_error: f64,
}

/// Comparison of the numerical transform of `k±` with `h±` on a set of `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionReport {
    pub spec: SmoothedKernelSpec,
    pub tolerance: f64,
    pub max_abs_error: f64,
    pub passed: bool,
    pub rows: Vec<ConvolutionRow>,
}

/// Evaluates the transform of `k±` by quadrature at each `r` and compares it
/// with [`h_pm_real`].
pub fn convolution_check(spec: &SmoothedKernelSpec, rs: &[f64], tol: f64) -> Result<ConvolutionReport> {
    let k = |t: f64| smoothed_kernel(t, spec).expect("t >= 1");
    let kink = (spec.outer_radius() - spec.eta()).abs();
    let rows = rs
        .par_iter()
        .map(|&r| {
            let numeric = selberg_numeric(k, r, spec.support(), &[kink])?;
            let closed_form = h_pm_real(spec, r)?;
            Ok(ConvolutionRow {
                r,
                numeric,
                closed_form,
                abs_error: (numeric - closed_form).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Ok(ConvolutionReport {
        spec: *spec,
        tolerance: tol,
        max_abs_error,
        passed: max_abs_error <= tol,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::log_grid;
    use crate::smoothed::Sign;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn spec(r: f64, eta: f64, sign: Sign) -> SmoothedKernelSpec {
        SmoothedKernelSpec::new(r, eta, sign).unwrap()
    }

    #[test]
    fn special_values() {
        let v0 = h_ball(1.0, c(0.0, 0.0)).unwrap();
        assert!((v0.re - 4.0 * PI / 1f64.exp()).abs() < 1e-13);
        assert!((v0.re - 4.6229).abs() < 1e-4);
        let vi = h_ball(1.0, c(0.0, 1.0)).unwrap();
        assert!((vi.re - ball_volume(1.0).unwrap()).abs() < 1e-13 && vi.im.abs() < 1e-15);
        let vmi = h_ball(1.0, c(0.0, -1.0)).unwrap();
        assert!((vmi - vi).norm() < 1e-13);
        for radius in [0.3f64, 1.0, 2.5, 6.0, 12.0] {
            let at0 = 4.0 * PI * (radius * radius.cosh() - radius.sinh());
            assert!(rel(h_ball(radius, c(0.0, 0.0)).unwrap(), c(at0, 0.0)) < 1e-12);
            let ati = ball_volume(radius).unwrap();
            assert!(rel(h_ball(radius, c(0.0, 1.0)).unwrap(), c(ati, 0.0)) < 1e-12);
        }
    }

    /// `4π ∫₀^R (sin(ru)/r) sinh u du` by Gauss–Legendre in complex arithmetic.
    fn oracle(radius: f64, r: Complex64) -> Complex64 {
        let (x, w) = crate::numeric::gauss_legendre(20);
        let panels = 64;
        let h = radius / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            for (xi, wi) in x.iter().zip(&w) {
                let u = h * (p as f64 + 0.5 * (xi + 1.0));
                let sinc = if r.norm() == 0.0 { c(u, 0.0) } else { (r * u).sin() / r };
                acc += 0.5 * h * wi * sinc * u.sinh();
            }
        }
        4.0 * PI * acc
    }

    #[test]
    fn real_form_agrees_with_complex_form() {
        let v = h_ball(2.0, c(1.5, 0.0)).unwrap().re;
        assert!((v - h_ball_real_form(2.0, 1.5)).abs() < 1e-10);
        let t = closed_form(2.0, c(1.5, 0.0));
        assert!((t.re - v).abs() < 1e-10 && t.im.abs() < 1e-10);
    }

    #[test]
    fn strip_enforced() {
        assert!(h_ball(1.0, c(0.0, 2.0)).is_err());
        assert!(h_ball(1.0, c(3.0, -2.5)).is_err());
        assert!(h_ball(0.0, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn matches_quadrature_oracle() {
        for radius in [0.2, 0.7, 1.0, 3.0, 6.0] {
            for r in [
                c(0.0, 0.0),
                c(1e-6, 0.0),
                c(0.0, 1.0 + 1e-6),
                c(0.0, 1.0 - 1e-6),
                c(0.0, -1.0),
                c(0.3, 0.2),
                c(2.5, 0.0),
                c(4.0, -1.5),
                c(0.0, 1.9),
            ] {
                let v = h_ball(radius, r).unwrap();
                assert!(rel(v, oracle(radius, r)) < 1e-10, "R={radius} r={r}");
            }
        }
    }

    #[test]
    fn limits_near_removable_points() {
        for radius in [0.5, 1.0, 3.0, 8.0] {
            let at0 = h_ball(radius, c(0.0, 0.0)).unwrap();
            for r in [c(1e-6, 0.0), c(-1e-6, 0.0), c(0.0, 1e-6)] {
                assert!(rel(h_ball(radius, r).unwrap(), at0) < 1e-8);
            }
            // h has nonzero slope at ±i, so compare with the first-order expansion
            let i = c(0.0, 1.0);
            let ati = h_ball(radius, i).unwrap();
            let slope =
                (h_ball(radius, i * (1.0 + 1e-5)).unwrap() - h_ball(radius, i * (1.0 - 1e-5)).unwrap()) / (2e-5 * i);
            for d in [c(0.0, 1e-6), c(0.0, -1e-6)] {
                let v = h_ball(radius, i + d).unwrap();
                assert!(rel(v, ati + slope * d) < 1e-8, "R={radius} d={d}");
            }
        }
    }

    #[test]
    fn branches_agree_at_switch_over() {
        let i = c(0.0, 1.0);
        for radius in [0.7, 2.0, 5.0] {
            for dir in [c(1.0, 0.0), c(0.0, 1.0), c(0.6, -0.8)] {
                let r = dir * TAYLOR_RADIUS;
                let a = taylor_at_zero(radius, r);
                let b = power_series(radius, r);
                assert!(rel(a, b) < 1e-9);
                for r0 in [i, -i] {
                    let r = r0 + dir * TAYLOR_RADIUS;
                    let a = taylor_at_pole(radius, r, r0);
                    let b = if r.norm() * radius <= 2.0 {
                        power_series(radius, r)
                    } else {
                        closed_form(radius, r)
                    };
                    assert!(rel(a, b) < 1e-9, "R={radius} r0={r0} dir={dir}");
                }
            }
            let r = 2.0 / radius;
            for t in [c(r, 0.0), c(r * 0.6, r * 0.8)] {
                assert!(rel(power_series(radius, t), closed_form(radius, t)) < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn even_and_real(radius in 0.05f64..8.0, re in -50.0f64..50.0, im in -1.9f64..1.9) {
            let r = c(re, im);
            let a = h_ball(radius, r).unwrap();
            let b = h_ball(radius, -r).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
            let real = h_ball(radius, c(re, 0.0)).unwrap();
            prop_assert!(real.im.abs() <= 1e-12);
            let s = spec(1.0 + radius / 2.0, 0.05 + radius / 10.0, Sign::Plus);
            let p = h_pm(&s, r).unwrap();
            let q = h_pm(&s, -r).unwrap();
            prop_assert!((p - q).norm() <= 1e-12 * p.norm().max(1.0));
            prop_assert!(h_pm(&s, c(re, 0.0)).unwrap().im.abs() <= 1e-12);
        }

        #[test]
        fn bounded_by_value_at_zero(radius in 0.05f64..8.0, r in -100.0f64..100.0) {
            let v = h_ball(radius, c(r, 0.0)).unwrap().re.abs();
            let at0 = h_ball(radius, c(0.0, 0.0)).unwrap().re;
            prop_assert!(v <= at0 * (1.0 + 1e-12));
            prop_assert!(at0 <= ball_volume(radius).unwrap());
        }
    }

    #[test]
    fn h_pm_examples() {
        let s = spec(2.0, 0.5, Sign::Plus);
        let at_i = h_pm(&s, c(0.0, 1.0)).unwrap();
        assert!(rel(at_i, h_ball(2.5, c(0.0, 1.0)).unwrap()) < 1e-12);
        let at0 = h_pm(&s, c(0.0, 0.0)).unwrap();
        let expected =
            h_ball(2.5, c(0.0, 0.0)).unwrap() * h_ball(0.5, c(0.0, 0.0)).unwrap() / ball_volume(0.5).unwrap();
        assert_eq!(at0, expected);
        let s = spec(3.0, 0.2, Sign::Minus);
        assert!(h_pm(&s, c(5.0, 0.0)).unwrap().norm() <= h_pm(&s, c(0.0, 0.0)).unwrap().re);
    }

    #[test]
    fn numeric_transform_of_ball() {
        assert_eq!(selberg_numeric(|_| 0.0, 2.0, 3.0, &[]).unwrap(), 0.0);
        // indicator of B_R has transform h_R
        for (radius, r) in [(1.0, 0.0), (1.0, 2.0), (2.5, 7.0), (3.0, 0.3)] {
            let k = |t: f64| if t <= f64::cosh(radius) { 1.0 } else { 0.0 };
            let v = selberg_numeric(k, r, radius, &[]).unwrap();
            let exact = h_ball(radius, c(r, 0.0)).unwrap().re;
            assert!((v - exact).abs() < 1e-7, "R={radius} r={r}: {v} vs {exact}");
        }
    }

    #[test]
    fn convolution_theorem_example() {
        let s = spec(1.5, 0.3, Sign::Plus);
        let rho = s.outer_radius();
        let k = |t: f64| smoothed_kernel(t, &s).unwrap();
        let v = selberg_numeric(k, 2.0, s.support(), &[rho - 0.3]).unwrap();
        let exact = h_pm_real(&s, 2.0).unwrap();
        assert!((v - exact).abs() < 1e-4, "{v} vs {exact}");
    }

    #[test]
    fn convolution_report() {
        let s = spec(1.5, 0.3, Sign::Minus);
        let rep = convolution_check(&s, &[0.0, 0.5, 2.0, 7.5], CONVOLUTION_TOL).unwrap();
        assert!(rep.passed, "{}", rep.max_abs_error);
        assert_eq!(rep.rows.len(), 4);
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["spec"]["R"], 1.5);
    }

    #[test]
    fn ab_reconstruction() {
        for s in [
            spec(3.0, 0.2, Sign::Plus),
            spec(5.0, 0.1, Sign::Minus),
            spec(1.0, 0.9, Sign::Minus),
        ] {
            let rho = s.outer_radius();
            for r in log_grid(1.0, 1e3, 200).unwrap() {
                let ab = ab_decomposition(&s, r).unwrap();
                let phase = Complex64::from_polar(1.0, rho * r);
                let rebuilt = ab.a * phase + ab.b * phase.conj();
                let h = h_pm(&s, c(r, 0.0)).unwrap();
                let scale = (ab.a.norm() + ab.b.norm()).max(h.norm());
                assert!((rebuilt - h).norm() <= 1e-10 * scale, "r={r}");
                assert!(ab.a.norm() / ab_envelope(&s, r) < 100.0);
                assert!(ab.b.norm() / ab_envelope(&s, r) < 100.0);
            }
        }
        assert!(ab_decomposition(&spec(2.0, 0.1, Sign::Plus), 0.5).is_err());
    }

    #[test]
    fn ab_derivative_matches_finite_differences() {
        let s = spec(5.0, 0.1, Sign::Plus);
        let mut worst: f64 = 0.0;
        for r in log_grid(1.0, 1e3, 60).unwrap() {
            let h = 1e-5 * r;
            let up = ab_decomposition(&s, r + h).unwrap();
            let down = ab_decomposition(&s, r - h.min(r - 1.0).max(0.0)).unwrap();
            let width = h + h.min(r - 1.0).max(0.0);
            let fd = (up.a - down.a) / width;
            let an = ab_derivative(&s, r).unwrap();
            assert!((fd - an.a).norm() <= 1e-4 * an.a.norm().max(fd.norm()), "r={r}");
            let env = s.radius().exp() / r.powi(3) / (s.eta() * r).max(1.0);
            worst = worst.max(an.a.norm() / env);
        }
        assert!(worst < 100.0, "derivative envelope constant {worst}");
    }

    #[test]
    fn bound_check_examples() {
        let s = spec(3.0, 0.2, Sign::Plus);
        let grid = log_grid(1.0, 1e3, 200).unwrap();
        let rep = bound_check_hpm(&s, &grid, BOUND_CONSTANT).unwrap();
        assert!(rep.max_ratio.is_finite() && !rep.flagged);
        assert_eq!(rep.grid_size, 200);
        let neg: Vec<f64> = grid.iter().map(|r| -r).collect();
        assert_eq!(
            bound_check_hpm(&s, &neg, BOUND_CONSTANT).unwrap().max_ratio,
            rep.max_ratio
        );
        let s = spec(1.0, 0.9, Sign::Plus);
        let rep = bound_check_hpm(&s, &[0.0], BOUND_CONSTANT).unwrap();
        assert!(!rep.flagged);
        let json = serde_json::to_value(&rep).unwrap();
        for key in ["spec", "max_ratio", "grid_size", "flagged"] {
            assert!(json.get(key).is_some());
        }
    }
}
