//! Quadrature, interpolation and summation helpers shared by the modules.

use crate::error::{Error, Result};

/// Maximum bisection depth of one adaptive Simpson panel.
pub const SIMPSON_MAX_DEPTH: u32 = 48;

/// Function-evaluation budget of one [`integrate`] call.
pub const SIMPSON_MAX_EVALS: usize = 20_000_000;

struct Simpson<'a, F> {
    f: &'a F,
    evals: usize,
    unconverged: f64,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evals += 1;
        (self.f)(x)
    }

    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let h = (b - a) / 12.0;
        let left = h * (fa + 4.0 * flm + fm);
        let right = h * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        if depth == 0 || self.evals >= SIMPSON_MAX_EVALS || m <= a || m >= b {
            self.unconverged += diff.abs() / 15.0;
            return left + right + diff / 15.0;
        }
        self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[breaks[0], breaks[last]]`.
///
/// Every interval between consecutive breakpoints is cut into panels no wider
/// than `max_panel`; each panel receives a share of the absolute tolerance
/// `tol` proportional to its length. Fails with [`Error::Quadrature`] when a
/// panel cannot meet its share.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64, max_panel: f64) -> Result<f64> {
    if breaks.len() < 2 {
        return Ok(0.0);
    }
    let total = breaks[breaks.len() - 1] - breaks[0];
    if total <= 0.0 {
        return Ok(0.0);
    }
    let mut s = Simpson {
        f: &f,
        evals: 0,
        unconverged: 0.0,
    };
    let mut sum = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let panels = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
        let width = (hi - lo) / panels as f64;
        for k in 0..panels {
            let a = lo + width * k as f64;
            let b = if k + 1 == panels { hi } else { a + width };
            let fa = s.eval(a);
            let fm = s.eval(0.5 * (a + b));
            let fb = s.eval(b);
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let share = tol * (b - a) / total;
            sum += s.step(a, b, fa, fm, fb, whole, share, SIMPSON_MAX_DEPTH);
        }
    }
    if s.unconverged > tol || !sum.is_finite() {
        return Err(Error::Quadrature {
            estimate: sum,
            achieved: s.unconverged,
            requested: tol,
        });
    }
    Ok(sum)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre quadrature with `panels` equal panels of
/// `order` points each.
pub fn gauss_legendre_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut terms = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            terms.push(0.5 * h * wi * f(lo + 0.5 * h * (xi + 1.0)));
        }
    }
    pairwise_sum(&terms)
}

/// Sum in a fixed binary tree, independent of how the slice was produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Butland slopes).
#[derive(Clone, Debug)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two nodes.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::domain("pchip needs at least two nodes and matching lengths"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("pchip nodes must be strictly increasing"));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = s[0];
            m[1] = s[0];
        } else {
            for k in 1..n - 1 {
                if s[k - 1] * s[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    m[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
                }
            }
            m[0] = end_slope(h[0], h[1], s[0], s[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        }
        Ok(Pchip { x, y, m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.x.partition_point(|v| *v <= t) - 1;
        let h = self.x[k + 1] - self.x[k];
        let u = (t - self.x[k]) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.y[k] + h10 * h * self.m[k] + h01 * self.y[k + 1] + h11 * h * self.m[k + 1]
    }
}

fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d.signum() != s0.signum() || s0 == 0.0 {
        0.0
    } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}
