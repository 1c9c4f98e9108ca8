//! Radial Fourier transform, f̂(k) = 4π ∫ f(r) sin(kr)/(kr) r² dr.
//!
//! Convention: f̂(k) = ∫ f(x) e^{-ik·x} dx, inverse with (2π)⁻³.

use crate::error::Result;
use crate::quadrature::{adaptive, breakpoints, composite, composite_nodes, GaussLegendre};
use std::f64::consts::PI;

/// A radial function supported in `[0, support()]`.
pub trait RadialProfile: Sync {
    fn value(&self, r: f64) -> f64;
    fn support(&self) -> f64;
    /// Interior radii where the profile may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Closure-backed profile.
pub struct FnProfile<F> {
    pub f: F,
    pub support: f64,
    pub breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> FnProfile<F> {
    pub fn new(support: f64, f: F) -> Self {
        Self { f, support, breaks: Vec::new() }
    }
}

impl<F: Fn(f64) -> f64 + Sync> RadialProfile for FnProfile<F> {
    fn value(&self, r: f64) -> f64 {
        (self.f)(r)
    }
    fn support(&self) -> f64 {
        self.support
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// `sin(x)/x`, with the Taylor series near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

/// Radial transform at `k`, refined until two panel counts agree to `tol`
/// relative to `4π∫|f| r²`.
pub fn radial_fourier(f: &dyn RadialProfile, k: f64, tol: f64) -> Result<f64> {
    let rmax = f.support();
    let br = breakpoints(0.0, rmax, &f.breakpoints());
    let start = 2 + (k * rmax / 4.0).ceil() as usize;
    let rule = GaussLegendre::new(10);
    let scale = 4.0 * PI * composite(|r| f.value(r).abs() * r * r, &rule, &br, start);
    let est = adaptive(|r| 4.0 * PI * f.value(r) * sinc(k * r) * r * r, &br, tol, scale.max(f64::MIN_POSITIVE), start)?;
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volume() {
        let ball = FnProfile::new(1.0, |_| 1.0);
        let v = radial_fourier(&ball, 0.0, 1e-12).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ball_transform_closed_form() {
        let ball = FnProfile::new(1.0, |_| 1.0);
        for k in [0.3f64, 1.0, 7.5] {
            let exact = 4.0 * PI * (k.sin() - k * k.cos()) / k.powi(3);
            let v = radial_fourier(&ball, k, 1e-12).unwrap();
            assert!((v - exact).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn sinc_is_continuous_at_switch() {
        let a = sinc(1e-4 * (1.0 - 1e-12));
        let b = (1e-4f64).sin() / 1e-4;
        assert!((a - b).abs() < 1e-15);
    }
}

/// Radial transform cached on fixed quadrature nodes, for evaluation at many
/// momenta up to `p_max`, with the decay bound |f̂(p)| ≤ D/p².
#[derive(Debug, Clone)]
pub struct RadialTransform {
    r: Vec<f64>,
    /// 4π w f(r) r²
    wf: Vec<f64>,
    support: f64,
    p_max: f64,
    decay: f64,
}

const TRANSFORM_ORDER: usize = 16;
const TV_SAMPLES: usize = 256;

impl RadialTransform {
    /// Panels are at most one period 2π/p_max wide; `refine` doubles them.
    pub fn new<F: Fn(f64) -> f64 + Sync>(f: F, support: f64, interior: &[f64], p_max: f64, refine: u32) -> Self {
        let br = breakpoints(0.0, support, interior);
        let rule = GaussLegendre::new(TRANSFORM_ORDER);
        let mut r = Vec::new();
        let mut w = Vec::new();
        for seg in br.windows(2) {
            let len = seg[1] - seg[0];
            let panels = ((len * p_max / (2.0 * PI)).ceil() as usize).max(2) << refine;
            let (xs, ws) = composite_nodes(&rule, seg, panels);
            r.extend(xs);
            w.extend(ws);
        }
        let fr = crate::par::map_slice(&r, |x| f(*x));
        let wf = r.iter().zip(&w).zip(&fr).map(|((x, w), v)| 4.0 * PI * w * v * x * x).collect();
        // D = 4π(TV(rf) on (0, R) + |Rf(R⁻)|), from one integration by parts
        let mut tv = 0.0;
        let mut prev = 0.0;
        for seg in br.windows(2) {
            let len = seg[1] - seg[0];
            let eps = 1e-12 * len.max(1e-300);
            for j in 0..=TV_SAMPLES {
                let x = (seg[0] + len * j as f64 / TV_SAMPLES as f64).clamp(seg[0] + eps, seg[1] - eps);
                let h = x * f(x);
                tv += (h - prev).abs();
                prev = h;
            }
        }
        tv += prev.abs();
        Self { r, wf, support, p_max, decay: 1.01 * 4.0 * PI * tv }
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.r.iter().zip(&self.wf).map(|(x, w)| w * sinc(p * x)).sum()
    }

    pub fn at_zero(&self) -> f64 {
        self.wf.iter().sum()
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// D with |f̂(p)| ≤ D/p² for all p > 0.
    pub fn decay_constant(&self) -> f64 {
        self.decay
    }

    pub fn nodes(&self) -> usize {
        self.r.len()
    }
}

/// Gauss nodes on [0, p_max] for radial momentum integrals, with the measure
/// (2π)⁻³4πp² folded into the weights. Panels are at most π/(2R) wide.
pub fn momentum_grid(support: f64, p_max: f64, interior: &[f64], refine: u32) -> (Vec<f64>, Vec<f64>) {
    let br = breakpoints(0.0, p_max, interior);
    let rule = GaussLegendre::new(TRANSFORM_ORDER);
    let width = PI / (2.0 * support);
    let mut p = Vec::new();
    let mut w = Vec::new();
    for seg in br.windows(2) {
        let panels = (((seg[1] - seg[0]) / width).ceil() as usize).max(1) << refine;
        let (xs, ws) = composite_nodes(&rule, seg, panels);
        for (x, wt) in xs.into_iter().zip(ws) {
            w.push(wt * x * x / (2.0 * PI * PI));
            p.push(x);
        }
    }
    (p, w)
}
