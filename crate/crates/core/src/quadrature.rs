//! Gauss-Legendre rules, composite panels and Richardson helpers.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        (
            self.nodes.iter().map(|x| c + h * x).collect(),
            self.weights.iter().map(|w| w * h).collect(),
        )
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule: each interval between consecutive `breaks` is split into
/// `panels` equal panels carrying a `rule`.
pub fn composite_nodes(rule: &GaussLegendre, breaks: &[f64], panels: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(rule.len() * panels * breaks.len());
    let mut ws = Vec::with_capacity(xs.capacity());
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let (x, w) = rule.mapped(a + p as f64 * h, a + (p + 1) as f64 * h);
            xs.extend(x);
            ws.extend(w);
        }
    }
    (xs, ws)
}

pub fn composite<F: Fn(f64) -> f64>(f: F, rule: &GaussLegendre, breaks: &[f64], panels: usize) -> f64 {
    let (xs, ws) = composite_nodes(rule, breaks, panels);
    xs.iter().zip(&ws).map(|(x, w)| w * f(*x)).sum()
}

/// Sorted, deduplicated breakpoints inside `[a, b]`, including both ends.
pub fn breakpoints(a: f64, b: f64, interior: &[f64]) -> Vec<f64> {
    let mut v = vec![a, b];
    v.extend(interior.iter().copied().filter(|&x| x > a && x < b));
    v.sort_by(|x, y| x.total_cmp(y));
    v.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
    v
}

/// Result of a two-resolution integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Doubles the panel count until two successive composite sums agree to
/// `tol * max(scale, |I|)`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    tol: f64,
    scale: f64,
    start_panels: usize,
) -> Result<Estimate> {
    let rule = GaussLegendre::new(10);
    let mut panels = start_panels.max(1);
    let mut prev = composite(&f, &rule, breaks, panels);
    for _ in 0..16 {
        panels *= 2;
        let cur = composite(&f, &rule, breaks, panels);
        let err = (cur - prev).abs();
        if !cur.is_finite() {
            return Err(Error::QuadratureFailure("non-finite integrand".into()));
        }
        if err <= tol * scale.max(cur.abs()) {
            return Ok(Estimate { value: cur, error: err, panels });
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure(format!(
        "no agreement to {tol:e} after {panels} panels"
    )))
}

/// Richardson extrapolation of a pair with step ratio 2 and known order `p`.
/// Returns (extrapolated value, error estimate of the fine value).
pub fn richardson(coarse: f64, fine: f64, order: u32) -> (f64, f64) {
    let f = 2f64.powi(order as i32);
    let diff = (fine - coarse) / (f - 1.0);
    (fine + diff, diff.abs())
}

/// Observed convergence order from three successive halvings.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse.abs() / e_fine.abs()).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(6);
        let v = r.integrate(|x| x.powi(11) + 3.0 * x.powi(10), -1.0, 1.0);
        assert!((v - 6.0 / 11.0).abs() < 1e-14);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_stays_accurate() {
        let r = GaussLegendre::new(64);
        let v = r.integrate(f64::exp, 0.0, 1.0);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let est = adaptive(|x: f64| x.abs(), &breakpoints(-1.0, 2.0, &[0.0]), 1e-12, 1.0, 2).unwrap();
        assert!((est.value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn richardson_removes_leading_error() {
        let h = 0.1;
        let f = |h: f64| 1.0 + 3.0 * h * h;
        let (x, _) = richardson(f(h), f(h / 2.0), 2);
        assert!((x - 1.0).abs() < 1e-14);
    }
}
