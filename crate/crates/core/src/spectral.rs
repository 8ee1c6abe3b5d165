//! Spectral parameters `r_j` of the Picard orbifold and sums over them.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{integrate, pairwise_sum};
use crate::selberg::{ab_decomposition, ab_derivative, h_pm_real};
use crate::smoothed::SmoothedKernelSpec;

/// `T³/(3π⁴)`, the Weyl-law prediction for `#{r_j ≤ T}`.
pub fn weyl_count(t: f64) -> f64 {
    t * t * t / (3.0 * PI.powi(4))
}

/// Ascending list of spectral parameters `r_j > 1`, repeated by multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueTable {
    entries: Vec<f64>,
    source: String,
}

impl EigenvalueTable {
    pub fn new(entries: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        for (k, r) in entries.iter().enumerate() {
            if !r.is_finite() || *r <= 1.0 {
                return Err(Error::domain(format!("entry {k}: r = {r} violates r > 1")));
            }
            if k > 0 && *r < entries[k - 1] {
                return Err(Error::domain(format!("entry {k}: r = {r} breaks ascending order")));
            }
        }
        Ok(EigenvalueTable {
            entries,
            source: source.into(),
        })
    }

    pub fn empty(source: impl Into<String>) -> Self {
        EigenvalueTable {
            entries: Vec::new(),
            source: source.into(),
        }
    }

    /// `r_j = (3π⁴ j)^{1/3}`, `j = 1..=n`, which matches the Weyl law exactly
    /// at every node.
    pub fn synthetic_weyl(n: usize) -> Self {
        let entries = (1..=n).map(|j| (3.0 * PI.powi(4) * j as f64).cbrt()).collect();
        EigenvalueTable {
            entries,
            source: format!("synthetic Weyl table, {n} entries, r_j = (3 pi^4 j)^(1/3)"),
        }
    }

    /// Reads a CSV file with header `r` and one value per line.
    pub fn ingest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses the CSV format of [`EigenvalueTable::ingest`].
    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let err = |line: usize, msg: String| Error::Parse {
            path: path.clone(),
            line,
            msg,
        };
        let mut entries: Vec<f64> = Vec::new();
        let mut header_seen = false;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let field = raw.trim();
            if field.is_empty() {
                continue;
            }
            if !header_seen {
                if field != "r" {
                    return Err(err(line, format!("expected header \"r\", found {field:?}")));
                }
                header_seen = true;
                continue;
            }
            let r: f64 = field
                .parse()
                .map_err(|_| err(line, format!("not a number: {field:?}")))?;
            if !r.is_finite() || r <= 1.0 {
                return Err(err(line, format!("r = {r} violates r > 1 (no small eigenvalues)")));
            }
            if let Some(&last) = entries.last() {
                if r < last {
                    return Err(err(line, format!("r = {r} after {last}: rows must be ascending")));
                }
            }
            entries.push(r);
        }
        Ok(EigenvalueTable {
            entries,
            source: path.display().to_string(),
        })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max(&self) -> Option<f64> {
        self.entries.last().copied()
    }

    /// `#{r_j ≤ t}`.
    pub fn count_up_to(&self, t: f64) -> usize {
        self.entries.partition_point(|r| *r <= t)
    }

    /// `#{r_j ≤ T} / (T³/(3π⁴))`.
    pub fn weyl_ratio(&self, t: f64) -> Result<f64> {
        if !(t > 1.0) {
            return Err(Error::domain(format!("Weyl ratio needs T > 1, got {t}")));
        }
        Ok(self.count_up_to(t) as f64 / weyl_count(t))
    }

    /// `S(T, X) = Σ_{r_j ≤ T} X^{i r_j}`.
    pub fn spectral_sum(&self, t: f64, x: f64) -> Result<Complex64> {
        if !(x > 1.0) {
            return Err(Error::domain(format!("spectral sum needs X > 1, got {x}")));
        }
        Ok(self.spectral_sum_log(t, x.ln()))
    }

    /// `Σ_{r_j ≤ T} e^{i r_j ℓ}` for an arbitrary real `ℓ`.
    pub fn spectral_sum_log(&self, t: f64, log_x: f64) -> Complex64 {
        let head = &self.entries[..self.count_up_to(t)];
        let (re, im): (Vec<f64>, Vec<f64>) = head
            .iter()
            .map(|r| {
                let (s, c) = (r * log_x).sin_cos();
                (c, s)
            })
            .unzip();
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
    }

    /// Largest `|S(T, X)|/(T^α X^β + T²)` over `grid`.
    pub fn stx_envelope(&self, alpha: f64, beta: f64, grid: &[(f64, f64)]) -> Result<StxReport> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::domain("exponent pair must be finite"));
        }
        let table_max = self.max().unwrap_or(0.0);
        let mut points = Vec::with_capacity(grid.len());
        for &(t, x) in grid {
            let s = self.spectral_sum(t, x)?.norm();
            let ratio = s / (t.powf(alpha) * x.powf(beta) + t * t);
            points.push(StxPoint {
                t,
                x,
                abs_sum: s,
                ratio,
                truncated: t > table_max,
            });
        }
        let max_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
        Ok(StxReport {
            source: self.source.clone(),
            alpha,
            beta,
            max_ratio,
            points,
        })
    }

    /// `Σ_j h±(r_j)` over the table, with the envelope tail bound beyond it.
    pub fn sum_h_direct(&self, spec: &SmoothedKernelSpec) -> Result<DirectSum> {
        let terms = self
            .entries
            .par_iter()
            .map(|&r| h_pm_real(spec, r))
            .collect::<Result<Vec<f64>>>()?;
        Ok(DirectSum {
            value: pairwise_sum(&terms),
            tail_estimate: tail_estimate(spec, self.max().unwrap_or(1.0)),
        })
    }

    /// `Σ_j h±(r_j)` by summation by parts against `S(u, Y)`, `Y = e^{R±η}`,
    /// over the windows `(T, 2T]`, `T = 1, 2, 4, …`:
    ///
    /// `Σ_{T<r_j≤2T} A(r_j) Y^{ir_j} = A(2T)S(2T) − A(T)S(T) − ∫_T^{2T} A′(u) S(u) du`,
    /// and likewise for `B` against `Y^{−ir_j}`.
    pub fn sum_h_parts(&self, spec: &SmoothedKernelSpec) -> Result<f64> {
        let Some(top) = self.max() else {
            return Ok(0.0);
        };
        let rho = spec.outer_radius();
        let mut windows = Vec::new();
        let mut t = 1.0;
        while t < top {
            windows.push(t);
            t *= 2.0;
        }
        let parts = windows
            .par_iter()
            .map(|&t| self.window_by_parts(spec, rho, t, 2.0 * t))
            .collect::<Result<Vec<Complex64>>>()?;
        let re: Vec<f64> = parts.iter().map(|p| p.re).collect();
        Ok(pairwise_sum(&re))
    }

    fn window_by_parts(&self, spec: &SmoothedKernelSpec, rho: f64, lo: f64, hi: f64) -> Result<Complex64> {
        let s = |u: f64| self.spectral_sum_log(u, rho);
        let (ab_lo, ab_hi) = (ab_decomposition(spec, lo)?, ab_decomposition(spec, hi)?);
        let (s_lo, s_hi) = (s(lo), s(hi));
        let boundary = ab_hi.a * s_hi - ab_lo.a * s_lo + ab_hi.b * s_hi.conj() - ab_lo.b * s_lo.conj();

        // S is constant between consecutive eigenvalues
        let first = self.count_up_to(lo);
        let last = self.count_up_to(hi);
        let mut cuts = vec![lo];
        cuts.extend(self.entries[first..last].iter().copied().filter(|r| *r > lo && *r < hi));
        cuts.push(hi);
        cuts.dedup();
        let scale = ab_lo.a.norm() + ab_lo.b.norm();
        let mut integral = Complex64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let sv = s(a);
            let d = |u: f64| ab_derivative(spec, u).expect("u >= 1");
            let share = scale * (b - a) / (hi - lo);
            let slope = d(a);
            // floor at the roundoff level of the integrand
            let floor = 1e-12 * (slope.a.norm() + slope.b.norm()) * (b - a);
            let tol = (PARTS_TOL * share / sv.norm().max(1.0)).max(floor);
            let panel = (b - a).max(1e-12);
            let are = integrate(|u| d(u).a.re, &[a, b], tol, panel)?;
            let aim = integrate(|u| d(u).a.im, &[a, b], tol, panel)?;
            let bre = integrate(|u| d(u).b.re, &[a, b], tol, panel)?;
            let bim = integrate(|u| d(u).b.im, &[a, b], tol, panel)?;
            integral += Complex64::new(are, aim) * sv + Complex64::new(bre, bim) * sv.conj();
        }
        Ok(boundary - integral)
    }
}

/// Tolerance of the `∂_u A` integrals in [`EigenvalueTable::sum_h_parts`],
/// relative to `|A| + |B|` at the start of each window and divided by `|S|`
/// on each piece.
pub const PARTS_TOL: f64 = 1e-11;

/// Envelope `R e^R (1+r)^{−2} (1+ηr)^{−2}` integrated against the Weyl
/// density `r²/π⁴ dr` over `r > t`, bounded in closed form by
/// `R e^R/π⁴ · [(1/η − t)₊ + 1/(η² max(t, 1/η))]`.
pub fn tail_estimate(spec: &SmoothedKernelSpec, t: f64) -> f64 {
    let eta = spec.eta();
    let inv = 1.0 / eta;
    let scale = spec.radius() * spec.radius().exp() / PI.powi(4);
    scale * ((inv - t).max(0.0) + 1.0 / (eta * eta * t.max(inv)))
}

/// Result of [`EigenvalueTable::sum_h_direct`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectSum {
    pub value: f64,
    /// Reported beside the sum, never added to it.
    pub tail_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StxPoint {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    pub abs_sum: f64,
    pub ratio: f64,
    /// `T` exceeds the largest tabulated `r_j`, so `S(T, X)` is truncated.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StxReport {
    pub source: String,
    pub alpha: f64,
    pub beta: f64,
    pub max_ratio: f64,
    pub points: Vec<StxPoint>,
}
