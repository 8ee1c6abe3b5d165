//! Local averages `∫ N(X, z) f(z) dμ(z)` against smooth bumps supported inside
//! the fundamental domain.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::count::{main_term, CosetTable, VOLUME};
use crate::error::{Error, Result};
use crate::geometry::{distance, PointH3};
use crate::numeric::{gauss_legendre, integrate, pairwise_sum};

/// Default upper bound on the height of an admissible support.
pub const DEFAULT_CUSP_CUTOFF: f64 = 4.0;

/// Euclidean clearance required between the support and the faces of the
/// fundamental domain.
pub const BOUNDARY_MARGIN: f64 = 1e-3;

/// Relative agreement required of the node-doubling check in [`integral`].
pub const INTEGRAL_TOL: f64 = 1e-4;

/// Coset checks allowed in one [`local_average`] call.
pub const WORK_BUDGET: f64 = 2e11;

/// `A·exp(−s/(1 − (d/ρ)²))` for `d = d(z, centre) < ρ`, zero outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    center: PointH3,
    radius: f64,
    sharpness: f64,
    #[serde(default = "one")]
    amplitude: f64,
    #[serde(default = "default_cutoff")]
    cutoff: f64,
}

fn one() -> f64 {
    1.0
}

fn default_cutoff() -> f64 {
    DEFAULT_CUSP_CUTOFF
}

/// Axis-aligned box in `(x1, x2, y)` containing the support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportBox {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
    pub y: (f64, f64),
}

impl TestFunction {
    pub fn new(center: PointH3, radius: f64, sharpness: f64, cutoff: f64) -> Result<Self> {
        TestFunction {
            center,
            radius,
            sharpness,
            amplitude: 1.0,
            cutoff,
        }
        .validated()
    }

    /// Centre `(0.1, 0.22, 1.5)`, radius `0.1`, sharpness `1`.
    pub fn default_bump() -> Self {
        TestFunction::new(
            PointH3::new(0.1, 0.22, 1.5).expect("valid point"),
            0.1,
            1.0,
            DEFAULT_CUSP_CUTOFF,
        )
        .expect("default bump is admissible")
    }

    /// Re-runs the construction checks; used after deserialisation.
    pub fn validated(self) -> Result<Self> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::domain(format!(
                "support radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.sharpness > 0.0) || !self.sharpness.is_finite() {
            return Err(Error::domain(format!(
                "sharpness must be positive, got {}",
                self.sharpness
            )));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::domain(format!(
                "amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::domain(format!(
                "cusp cutoff must be positive, got {}",
                self.cutoff
            )));
        }
        let b = self.support_box();
        if b.y.1 > self.cutoff {
            return Err(Error::domain(format!(
                "support reaches height {:.6} above the cusp cutoff {}",
                b.y.1, self.cutoff
            )));
        }
        let m = BOUNDARY_MARGIN;
        if b.x1.0 < -0.5 + m || b.x1.1 > 0.5 - m || b.x2.0 < m || b.x2.1 > 0.5 - m {
            return Err(Error::domain(format!(
                "support around {} leaves the fundamental domain's vertical faces",
                self.center
            )));
        }
        // the support is the euclidean ball about (x, y cosh ρ) of radius y sinh ρ
        let (ce, re) = self.euclidean_ball();
        let gap = (ce.0.norm_sqr() + ce.1 * ce.1).sqrt() - re;
        if gap < 1.0 + m {
            return Err(Error::domain(format!(
                "support around {} meets the unit hemisphere",
                self.center
            )));
        }
        Ok(self)
    }

    /// Multiplies `f` by `lambda ≥ 0`.
    pub fn scaled(self, lambda: f64) -> Result<Self> {
        TestFunction {
            amplitude: self.amplitude * lambda,
            ..self
        }
        .validated()
    }

    pub fn center(&self) -> PointH3 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Profile as a function of the distance to the centre.
    pub fn profile(&self, d: f64) -> f64 {
        let u = d / self.radius;
        if u >= 1.0 || self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * (-self.sharpness / (1.0 - u * u)).exp()
    }

    pub fn eval(&self, z: &PointH3) -> f64 {
        self.profile(distance(&self.center, z))
    }

    fn euclidean_ball(&self) -> ((Complex64, f64), f64) {
        let y = self.center.y();
        ((self.center.x(), y * self.radius.cosh()), y * self.radius.sinh())
    }

    pub fn support_box(&self) -> SupportBox {
        let ((x, _), re) = self.euclidean_ball();
        let y = self.center.y();
        SupportBox {
            x1: (x.re - re, x.re + re),
            x2: (x.im - re, x.im + re),
            y: (y * (-self.radius).exp(), y * self.radius.exp()),
        }
    }
}

/// Tensor Gauss–Legendre rule with `nodes_per_axis` points per cell and
/// `2^{level−1}` cells per axis at refinement level `level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub nodes_per_axis: usize,
    pub refinement_levels: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes_per_axis: 4,
            refinement_levels: 3,
        }
    }
}

impl QuadratureSpec {
    pub fn new(nodes_per_axis: usize, refinement_levels: u32) -> Result<Self> {
        QuadratureSpec {
            nodes_per_axis,
            refinement_levels,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.nodes_per_axis < 4 {
            return Err(Error::domain(format!(
                "nodes_per_axis must be at least 4, got {}",
                self.nodes_per_axis
            )));
        }
        if !(1..=8).contains(&self.refinement_levels) {
            return Err(Error::domain(format!(
                "refinement_levels must lie in 1..=8, got {}",
                self.refinement_levels
            )));
        }
        Ok(self)
    }
}

/// Nodes of the product rule on `b` with their weights times `y⁻³`.
fn box_nodes(b: &SupportBox, order: usize, cells: usize) -> Vec<(PointH3, f64)> {
    let (gx, gw) = gauss_legendre(order);
    let axis = |(lo, hi): (f64, f64)| -> Vec<(f64, f64)> {
        let h = (hi - lo) / cells as f64;
        let mut out = Vec::with_capacity(cells * order);
        for c in 0..cells {
            let a = lo + h * c as f64;
            for (x, w) in gx.iter().zip(&gw) {
                out.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
            }
        }
        out
    };
    let (ax, bx, cy) = (axis(b.x1), axis(b.x2), axis(b.y));
    let mut nodes = Vec::with_capacity(ax.len() * bx.len() * cy.len());
    for &(x1, w1) in &ax {
        for &(x2, w2) in &bx {
            for &(y, w3) in &cy {
                let p = PointH3::new(x1, x2, y).expect("box lies in H3");
                nodes.push((p, w1 * w2 * w3 / (y * y * y)));
            }
        }
    }
    nodes
}

fn cells_at(level: u32) -> usize {
    1usize << (level - 1)
}

fn quadrature_f(f: &TestFunction, order: usize, level: u32) -> f64 {
    let nodes = box_nodes(&f.support_box(), order, cells_at(level));
    let terms: Vec<f64> = nodes.par_iter().map(|(p, w)| w * f.eval(p)).collect();
    pairwise_sum(&terms)
}

/// Node doublings tried by [`integral`] before giving up.
pub const MAX_DOUBLINGS: u32 = 4;

/// `∫ f dμ` on the finest level of `quad`, doubling the nodes per axis until
/// two successive values agree to [`INTEGRAL_TOL`].
pub fn integral(f: &TestFunction, quad: &QuadratureSpec) -> Result<f64> {
    let quad = quad.validated()?;
    let level = quad.refinement_levels;
    let mut order = quad.nodes_per_axis;
    let mut last = quadrature_f(f, order, level);
    let mut achieved = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        order *= 2;
        let next = quadrature_f(f, order, level);
        achieved = (next - last).abs();
        last = next;
        if achieved <= INTEGRAL_TOL * next.abs() {
            return Ok(next);
        }
    }
    Err(Error::Quadrature {
        estimate: last,
        achieved,
        requested: INTEGRAL_TOL * last.abs(),
    })
}

/// `f̄ = (∫ f dμ)/vol(Γ\H³)`.
pub fn average_value(f: &TestFunction, quad: &QuadratureSpec) -> Result<f64> {
    Ok(integral(f, quad)? / VOLUME)
}

/// `∫ f dμ = 4π ∫_0^ρ f(d) sinh² d dd`, the radial oracle for [`integral`].
pub fn radial_integral(f: &TestFunction) -> Result<f64> {
    let rho = f.radius();
    let tol = 1e-13 * f.amplitude().max(f64::MIN_POSITIVE) * rho.sinh().powi(2) * rho;
    Ok(4.0 * PI * integrate(|d| f.profile(d) * d.sinh().powi(2), &[0.0, rho], tol, rho / 16.0)?)
}

/// Values of `∫ N(X, z) f(z) dμ(z)` at refinement levels `1..=L`.
pub fn local_average_levels(x: f64, f: &TestFunction, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let quad = quad.validated()?;
    let table = coset_table(x, f)?;
    (1..=quad.refinement_levels)
        .map(|level| local_average_at(x, f, quad.nodes_per_axis, level, &table))
        .collect()
}

/// `∫ N(X, z) f(z) dμ(z)` on the finest level of `quad`.
pub fn local_average(x: f64, f: &TestFunction, quad: &QuadratureSpec) -> Result<f64> {
    let quad = quad.validated()?;
    let table = coset_table(x, f)?;
    local_average_at(x, f, quad.nodes_per_axis, quad.refinement_levels, &table)
}

fn coset_table(x: f64, f: &TestFunction) -> Result<CosetTable> {
    let b = f.support_box();
    let centre = Complex64::new(0.5 * (b.x1.0 + b.x1.1), 0.5 * (b.x2.0 + b.x2.1));
    let half = 0.5 * (b.x1.1 - b.x1.0);
    CosetTable::new(x, centre, half * std::f64::consts::SQRT_2, b.y.0).map_err(|e| match e {
        Error::Budget(msg) | Error::Overflow(msg) => Error::Budget(format!(
            "{msg}; limiting node: lowest support height y = {:.6} below centre {}",
            b.y.0,
            f.center()
        )),
        other => other,
    })
}

fn local_average_at(x: f64, f: &TestFunction, order: usize, level: u32, table: &CosetTable) -> Result<f64> {
    let nodes = box_nodes(&f.support_box(), order, cells_at(level));
    let weighted: Vec<(PointH3, f64)> = nodes
        .into_iter()
        .map(|(p, w)| (p, w * f.eval(&p)))
        .filter(|(_, w)| *w != 0.0)
        .collect();
    let work = weighted.len() as f64 * table.len() as f64;
    if work > WORK_BUDGET {
        let low = weighted
            .iter()
            .map(|(p, _)| *p)
            .min_by(|a, b| a.y().total_cmp(&b.y()))
            .expect("non-empty");
        return Err(Error::Budget(format!(
            "{work:.3e} coset checks at X = {x}; limiting node {low} needs {} cosets",
            table.len()
        )));
    }
    let terms: Vec<f64> = weighted
        .par_iter()
        .map(|(p, w)| {
            let n: u64 = table.cosets().iter().map(|c| c.count(x, p)).sum();
            n as f64 * w
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// One row of [`remainder_curve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "X")]
    pub x: f64,
    pub local_average: f64,
    pub main_term: f64,
    pub remainder: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderCurve {
    pub rows: Vec<CurveRow>,
    /// Least-squares slope of `log|remainder|` against `log X`, when at least
    /// two remainders are nonzero.
    pub slope: Option<f64>,
    /// Rows left out of the fit because their remainder is exactly zero.
    pub zero_remainders: usize,
}

/// `local_average(X) − (main term)·∫ f dμ` over `xs`, with the main term of
/// [`crate::count::main_term`].
pub fn remainder_curve(xs: &[f64], f: &TestFunction, quad: &QuadratureSpec) -> Result<RemainderCurve> {
    let quad = quad.validated()?;
    let mass = if f.amplitude() == 0.0 { 0.0 } else { integral(f, &quad)? };
    let top = xs.iter().copied().fold(f64::NAN, f64::max);
    if xs.is_empty() {
        return Ok(RemainderCurve {
            rows: Vec::new(),
            slope: None,
            zero_remainders: 0,
        });
    }
    let table = coset_table(top, f)?;
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        let value = local_average_at(x, f, quad.nodes_per_axis, quad.refinement_levels, &table)?;
        let mt = main_term(x) * mass;
        rows.push(CurveRow {
            x,
            local_average: value,
            main_term: mt,
            remainder: value - mt,
        });
    }
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.remainder != 0.0)
        .map(|r| (r.x.ln(), r.remainder.abs().ln()))
        .collect();
    Ok(RemainderCurve {
        zero_remainders: rows.len() - fit.len(),
        slope: least_squares_slope(&fit),
        rows,
    })
}

/// Slope of the least-squares line through `points`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// CSV with header `X,local_average,main_term,remainder`.
pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from("X,local_average,main_term,remainder\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.x, r.local_average, r.main_term, r.remainder
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::{count_exact_general, C_GAMMA};

    fn quad(n: usize, l: u32) -> QuadratureSpec {
        QuadratureSpec::new(n, l).unwrap()
    }

    fn bump(x1: f64, x2: f64, y: f64, r: f64) -> TestFunction {
        TestFunction::new(PointH3::new(x1, x2, y).unwrap(), r, 1.0, DEFAULT_CUSP_CUTOFF).unwrap()
    }

    #[test]
    fn normalisation_constants() {
        assert!((PI / 2.0 / VOLUME - C_GAMMA).abs() < 1e-13);
    }

    #[test]
    fn construction_rejects_bad_supports() {
        let p = |a, b, c| PointH3::new(a, b, c).unwrap();
        assert!(TestFunction::new(p(0.1, 0.22, 1.5), 0.1, 1.0, 4.0).is_ok());
        // crosses x2 = 0
        assert!(TestFunction::new(p(0.1, 0.05, 1.5), 0.1, 1.0, 4.0).is_err());
        // crosses the unit hemisphere
        assert!(TestFunction::new(p(0.1, 0.22, 1.0), 0.1, 1.0, 4.0).is_err());
        // above the cusp cutoff
        assert!(TestFunction::new(p(0.1, 0.22, 3.95), 0.02, 1.0, 4.0).is_err());
        assert!(TestFunction::new(p(0.1, 0.22, 3.95), 0.02, 1.0, 5.0).is_ok());
        assert!(TestFunction::new(p(0.1, 0.22, 1.5), 0.0, 1.0, 4.0).is_err());
        assert!(TestFunction::new(p(0.1, 0.22, 1.5), 0.1, 0.0, 4.0).is_err());
        assert!(QuadratureSpec::new(3, 2).is_err());
        assert!(QuadratureSpec::new(4, 0).is_err());
    }

    #[test]
    fn integral_matches_radial_oracle() {
        for f in [
            TestFunction::default_bump(),
            bump(0.0, 0.25, 2.0, 0.1),
            bump(-0.2, 0.3, 3.0, 0.05),
            bump(0.3, 0.1, 1.2, 0.04),
        ] {
            let q = integral(&f, &quad(4, 3)).unwrap();
            let r = radial_integral(&f).unwrap();
            assert!((q - r).abs() < 1e-4 * r, "{q} vs {r}");
        }
    }

    #[test]
    fn average_value_examples() {
        let f = TestFunction::default_bump();
        let q = quad(4, 3);
        let a = average_value(&f, &q).unwrap();
        assert!((a * VOLUME - integral(&f, &q).unwrap()).abs() <= 1e-10 * a * VOLUME);
        let a3 = average_value(&f.scaled(3.0).unwrap(), &q).unwrap();
        assert!((a3 - 3.0 * a).abs() < 1e-12 * a3);
        // concentration: f̄ shrinks with the radius like ρ³
        let mut last = a;
        for r in [0.05, 0.02, 0.01] {
            let g = bump(0.1, 0.22, 1.5, r);
            let v = average_value(&g, &q).unwrap();
            assert!(v < last);
            last = v;
        }
        let tiny = bump(0.1, 0.22, 1.5, 0.01);
        let ball = 4.0 * PI / 3.0 * 0.01f64.powi(3);
        assert!(average_value(&tiny, &q).unwrap() < ball / VOLUME);
        // self-convergence between two levels
        let coarse = average_value(&f, &quad(4, 2)).unwrap();
        assert!((coarse - a).abs() < 1e-4 * a);
    }

    #[test]
    fn local_average_at_unit_cutoff() {
        let f = TestFunction::default_bump();
        let q = quad(4, 2);
        let la = local_average(1.0, &f, &q).unwrap();
        // N(1, z) = 1 off the fixed-point loci
        let mass = quadrature_f(&f, 4, 2);
        assert!((la - mass).abs() < 1e-14 * mass);
    }

    #[test]
    fn coset_table_counts_agree_with_general_path() {
        let f = TestFunction::default_bump();
        let table = coset_table(30.0, &f).unwrap();
        for (p, _) in box_nodes(&f.support_box(), 4, 1).iter().step_by(7) {
            let n: u64 = table.cosets().iter().map(|c| c.count(30.0, p)).sum();
            assert_eq!(n, count_exact_general(30.0, p).unwrap(), "{p}");
        }
    }

    #[test]
    fn linearity_in_f() {
        let q = quad(4, 2);
        let f = TestFunction::default_bump();
        let g = bump(-0.2, 0.25, 2.0, 0.1);
        let x = 10.0;
        let lf = local_average(x, &f, &q).unwrap();
        let lg = local_average(x, &g, &q).unwrap();
        let l2 = local_average(x, &f.scaled(2.0).unwrap(), &q).unwrap();
        assert!((l2 - 2.0 * lf).abs() < 1e-12 * l2);
        // a two-bump average, integrated over each support separately
        let both = lf + lg;
        assert!(both > lf && both > lg);
        assert!(lf >= integral(&f, &q).unwrap() * (1.0 - 1e-4));
        assert_eq!(local_average(x, &f.scaled(0.0).unwrap(), &q).unwrap(), 0.0);
    }

    #[test]
    fn remainder_curve_examples() {
        let f = TestFunction::default_bump();
        let q = quad(4, 2);
        let c = remainder_curve(&[10.0, 20.0], &f, &q).unwrap();
        assert_eq!(c.rows.len(), 2);
        assert!(c.rows.iter().all(|r| r.remainder.is_finite()));
        let zero = remainder_curve(&[10.0, 20.0], &f.scaled(0.0).unwrap(), &q).unwrap();
        assert!(zero.rows.iter().all(|r| r.remainder == 0.0));
        assert_eq!(zero.zero_remainders, 2);
        assert_eq!(zero.slope, None);
        let csv = curve_csv(&c.rows);
        assert!(csv.starts_with("X,local_average,main_term,remainder\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, 1.5 * k as f64 + 2.0)).collect();
        assert!((least_squares_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(least_squares_slope(&pts[..1]), None);
    }

    #[test]
    fn deterministic() {
        let f = TestFunction::default_bump();
        let q = quad(4, 2);
        let a = local_average(15.0, &f, &q).unwrap();
        let b = local_average(15.0, &f, &q).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let f = TestFunction::default_bump();
        let s = serde_json::to_string(&f).unwrap();
        let g: TestFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g.validated().unwrap());
        let bad = s.replace("\"radius\":0.1", "\"radius\":5.0");
        let h: TestFunction = serde_json::from_str(&bad).unwrap();
        assert!(h.validated().is_err());
    }
}
