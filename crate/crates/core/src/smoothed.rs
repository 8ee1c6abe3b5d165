//! Smoothed counting kernels `k±` and the smoothed counts `N±(R, z)`.
//!
//! `k±(δ(z, w)) = μ(B_{R±η}(z) ∩ B_η(w)) / μ(B_η)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::count::CosetTable;
use crate::error::{Error, Result};
use crate::geometry::{sinh_minus_id, PointH3};
use crate::numeric::{integrate, pairwise_sum, Pchip};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            _ => Err(Error::Config(format!("sign must be + or -, got {s:?}"))),
        }
    }
}

/// Radius `R ≥ 1`, width `0 < η < 1` and sign of a smoothed kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedKernelSpec {
    #[serde(rename = "R")]
    r: f64,
    eta: f64,
    sign: Sign,
}

impl SmoothedKernelSpec {
    pub fn new(r: f64, eta: f64, sign: Sign) -> Result<Self> {
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::domain(format!("kernel radius must satisfy R >= 1, got {r}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::domain(format!(
                "kernel width must satisfy 0 < eta < 1, got {eta}"
            )));
        }
        Ok(SmoothedKernelSpec { r, eta, sign })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// `R ± η`, the radius of the large ball.
    pub fn outer_radius(&self) -> f64 {
        self.r + self.sign.factor() * self.eta
    }

    /// Distance beyond which the kernel vanishes.
    pub fn support(&self) -> f64 {
        self.outer_radius() + self.eta
    }
}

/// Absolute tolerance of the cap integral.
const KERNEL_TOL: f64 = 1e-11;

/// `k±(t)` for `t = cosh d ≥ 1`.
pub fn smoothed_kernel(t: f64, spec: &SmoothedKernelSpec) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::domain(format!("kernel argument must be >= 1, got {t}")));
    }
    kernel_at_distance(t.acosh(), spec.outer_radius(), spec.eta())
}

/// `μ(B_rho(z) ∩ B_eta(w)) / μ(B_eta)` with `d(z, w) = d`.
pub fn kernel_at_distance(d: f64, rho: f64, eta: f64) -> Result<f64> {
    if d >= rho + eta {
        return Ok(0.0);
    }
    if d <= rho - eta {
        return Ok(1.0);
    }
    if d <= eta - rho {
        return Ok(sinh_minus_id(2.0 * rho) / sinh_minus_id(2.0 * eta));
    }
    // shells of radius s = ησ around w; the part of each inside B_rho(z) is
    // a cap of relative area (1 − κ)/2
    let g = |sigma: f64| -> f64 {
        let s = eta * sigma;
        let sh = s.sinh() / eta;
        sh * sh * inside_fraction(d, s, rho)
    };
    let mut breaks = vec![0.0];
    for b in [(d - rho).abs(), d + rho] {
        if b > 0.0 && b < eta {
            breaks.push(b / eta);
        }
    }
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    let integral = integrate(g, &breaks, KERNEL_TOL, 0.125)?;
    let norm = sinh_minus_id(2.0 * eta) / (4.0 * eta * eta * eta);
    Ok((integral / norm).clamp(0.0, 1.0))
}

/// Fraction of the sphere of radius `s` about `w` that lies in `B_rho(z)`,
/// `d(z, w) = d > 0`.
fn inside_fraction(d: f64, s: f64, rho: f64) -> f64 {
    if s + d <= rho {
        return 1.0;
    }
    if s <= d - rho || s >= d + rho {
        return 0.0;
    }
    // cosh d cosh s − cosh ρ written without cancellation
    let num = (0.5 * (d + s + rho)).sinh() * (0.5 * (d + s - rho)).sinh()
        + (0.5 * (d - s + rho)).sinh() * (0.5 * (d - s - rho)).sinh();
    let kappa = num / (d.sinh() * s.sinh());
    (0.5 * (1.0 - kappa.clamp(-1.0, 1.0))).clamp(0.0, 1.0)
}

/// Number of interpolation nodes of [`KernelTable`].
pub const KERNEL_TABLE_NODES: usize = 1025;

/// `k±` tabulated in the distance over its transition band and
/// interpolated monotonically.
#[derive(Clone, Debug)]
pub struct KernelTable {
    lo: f64,
    hi: f64,
    below: f64,
    interp: Pchip,
}

impl KernelTable {
    pub fn new(spec: &SmoothedKernelSpec) -> Result<Self> {
        let (rho, eta) = (spec.outer_radius(), spec.eta());
        let lo = (rho - eta).abs();
        let hi = rho + eta;
        let below = kernel_at_distance(0.0, rho, eta)?;
        let n = KERNEL_TABLE_NODES;
        let ds: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let vals = ds
            .par_iter()
            .map(|&d| kernel_at_distance(d, rho, eta))
            .collect::<Result<Vec<f64>>>()?;
        Ok(KernelTable {
            lo,
            hi,
            below,
            interp: Pchip::new(ds, vals)?,
        })
    }

    /// Kernel value at distance `d`.
    pub fn at_distance(&self, d: f64) -> f64 {
        if d <= self.lo {
            self.below
        } else if d >= self.hi {
            0.0
        } else {
            self.interp.eval(d).clamp(0.0, 1.0)
        }
    }
}

/// `N±(R, z) = Σ_γ k±(δ(z, γz))`.
pub fn count_smoothed(spec: &SmoothedKernelSpec, z: &PointH3) -> Result<f64> {
    let table = KernelTable::new(spec)?;
    let x_cut = spec.support().cosh();
    let rho = spec.outer_radius();
    let x_in = if rho >= spec.eta() {
        (rho - spec.eta()).cosh()
    } else {
        1.0
    };
    let cosets = CosetTable::new(x_cut, z.x(), 0.0, z.y())?;
    let partial: Vec<f64> = cosets
        .cosets()
        .par_iter()
        .map(|cs| {
            let Some(f) = cs.frame(x_cut, z) else {
                return 0.0;
            };
            let r = f.rho2.max(0.0).sqrt();
            let mut inner = 0u64;
            let mut band = Vec::new();
            for ur in (f.w.re - r).floor() as i64..=(f.w.re + r).ceil() as i64 {
                for ui in (f.w.im - r).floor() as i64..=(f.w.im + r).ceil() as i64 {
                    let dv = f.delta(num_complex::Complex64::new(ur as f64, ui as f64));
                    if dv <= x_in && x_in > 1.0 {
                        inner += 1;
                    } else if dv < x_cut {
                        band.push(table.at_distance(dv.max(1.0).acosh()));
                    }
                }
            }
            inner as f64 + pairwise_sum(&band)
        })
        .collect();
    Ok(pairwise_sum(&partial))
}
