//! Bump function, box geometry, localized kernels and the sliding identity.

use crate::check::{CheckRecord, IdentityReport};
use crate::error::{Error, Result};
use crate::par;
use crate::potential::RadialPotential;
use crate::quadrature::{breakpoints, composite, composite_nodes, GaussLegendre};
use crate::scattering::ScatteringSolution;
use crate::table::UniformTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

pub const DEFAULT_STEEPNESS: f64 = 1.0;
pub const STEEPNESS_RANGE: (f64, f64) = (0.05, 20.0);
const ACORR_INTERVALS: usize = 2048;
const ACORR_ORDER: usize = 10;

fn norm(x: &Vec3) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// φ(t) = exp(−σ/(1 − 4t²)) on |t| < ½.
pub fn bump_1d(sigma: f64, t: f64) -> f64 {
    let q = 1.0 - 4.0 * t * t;
    if q <= 0.0 {
        0.0
    } else {
        (-sigma / q).exp()
    }
}

pub fn bump_1d_derivative(sigma: f64, t: f64) -> f64 {
    let q = 1.0 - 4.0 * t * t;
    if q <= 0.0 {
        0.0
    } else {
        (-sigma / q).exp() * (-8.0 * sigma * t / (q * q))
    }
}

/// ∫ f over `[a, b]` with enough panels that the essential flatness of φ at
/// ±½ is resolved.
fn bump_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = GaussLegendre::new(20);
    composite(f, &rule, &[a, b], panels)
}

/// χ(x) = c·φ(x₁)φ(x₂)φ(x₃) normalized in L².
#[derive(Debug, Clone)]
pub struct BumpProfile {
    pub steepness: f64,
    pub c: f64,
    /// ∫φ².
    pub phi_l2: f64,
    /// ∫φ'².
    pub dphi_l2: f64,
    acorr: UniformTable,
}

pub fn build_bump(steepness: f64) -> Result<BumpProfile> {
    let (lo, hi) = STEEPNESS_RANGE;
    if !(steepness >= lo && steepness <= hi) {
        return Err(Error::DomainError(format!("steepness {steepness} outside [{lo}, {hi}]")));
    }
    let sq = |t: f64| bump_1d(steepness, t).powi(2);
    let coarse = bump_quad(sq, -0.5, 0.5, 16);
    let fine = bump_quad(sq, -0.5, 0.5, 32);
    if (coarse - fine).abs() > 1e-13 * fine {
        return Err(Error::NormalizationFailure(format!("∫φ² unstable: {coarse:e} vs {fine:e}")));
    }
    let dphi_l2 = bump_quad(|t| bump_1d_derivative(steepness, t).powi(2), -0.5, 0.5, 32);
    let acorr0 = fine;
    let acorr = UniformTable::build(0.0, 1.0, ACORR_INTERVALS, ACORR_ORDER, |y| {
        autocorr_raw(steepness, y) / acorr0
    });
    let chi = BumpProfile { steepness, c: fine.powf(-1.5), phi_l2: fine, dphi_l2, acorr };
    let check = chi.l2_norm_sq_direct();
    if (check - 1.0).abs() > 1e-10 {
        return Err(Error::NormalizationFailure(format!("∫χ² = {check}")));
    }
    Ok(chi)
}

/// ∫φ(t)φ(t − y) dt.
fn autocorr_raw(sigma: f64, y: f64) -> f64 {
    let y = y.abs();
    if y >= 1.0 {
        return 0.0;
    }
    bump_quad(|t| bump_1d(sigma, t) * bump_1d(sigma, t - y), y - 0.5, 0.5, 16)
}

impl BumpProfile {
    pub fn phi(&self, t: f64) -> f64 {
        bump_1d(self.steepness, t)
    }

    pub fn dphi(&self, t: f64) -> f64 {
        bump_1d_derivative(self.steepness, t)
    }

    pub fn chi(&self, x: &Vec3) -> f64 {
        self.c * self.phi(x[0]) * self.phi(x[1]) * self.phi(x[2])
    }

    /// One-dimensional factor c^{1/3}φ.
    pub fn chi_1d(&self, t: f64) -> f64 {
        self.c.cbrt() * self.phi(t)
    }

    pub fn sup(&self) -> f64 {
        self.c * (-3.0 * self.steepness).exp()
    }

    /// Normalized 1D autocorrelation Ã(y), Ã(0) = 1, from the table.
    pub fn acorr(&self, y: f64) -> f64 {
        let y = y.abs();
        if y >= 1.0 {
            0.0
        } else {
            self.acorr.eval(y)
        }
    }

    /// Ã(y) by direct quadrature.
    pub fn acorr_direct(&self, y: f64) -> f64 {
        autocorr_raw(self.steepness, y) / self.phi_l2
    }

    /// (χ∗χ)(y) = ∏ Ã(yᵢ).
    pub fn chi_conv(&self, y: &Vec3) -> f64 {
        self.acorr(y[0]) * self.acorr(y[1]) * self.acorr(y[2])
    }

    pub fn chi_conv_product_direct(&self, y: &Vec3) -> f64 {
        self.acorr_direct(y[0]) * self.acorr_direct(y[1]) * self.acorr_direct(y[2])
    }

    /// (χ∗χ)(y) by a three-dimensional tensor Gauss rule over the overlap of
    /// the two shifted cubes. Independent of the factorized table.
    pub fn chi_conv_direct(&self, y: &Vec3, panels: usize) -> f64 {
        let rule = GaussLegendre::new(20);
        let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..3)
            .map(|i| {
                let (lo, hi) = ((y[i] - 0.5).max(-0.5), (y[i] + 0.5).min(0.5));
                composite_nodes(&rule, &[lo, hi], panels)
            })
            .collect();
        let mut acc = 0.0;
        for (x0, w0) in axes[0].0.iter().zip(&axes[0].1) {
            for (x1, w1) in axes[1].0.iter().zip(&axes[1].1) {
                for (x2, w2) in axes[2].0.iter().zip(&axes[2].1) {
                    let x = [*x0, *x1, *x2];
                    let xm = [x0 - y[0], x1 - y[1], x2 - y[2]];
                    acc += w0 * w1 * w2 * self.chi(&x) * self.chi(&xm);
                }
            }
        }
        acc
    }

    /// ∫χ² by the tensor rule.
    pub fn l2_norm_sq_direct(&self) -> f64 {
        let rule = GaussLegendre::new(20);
        let (xs, ws) = composite_nodes(&rule, &[-0.5, 0.5], 8);
        let one: f64 = xs.iter().zip(&ws).map(|(x, w)| w * self.phi(*x).powi(2)).sum();
        self.c * self.c * one.powi(3)
    }

    /// ∫|∇χ|² = 3∫φ'²/∫φ².
    pub fn grad_sq_integral(&self) -> f64 {
        3.0 * self.dphi_l2 / self.phi_l2
    }
}

/// Configuration-side geometry parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    pub rho_mu: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "L_over_ell")]
    pub l_over_ell: f64,
    pub s: f64,
    pub b: f64,
    #[serde(rename = "Xi")]
    pub xi: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
}

pub const DEFAULT_SUPPORT_MARGIN: f64 = 0.5;
pub const DEFAULT_SMALLNESS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxGeometry {
    pub rho_mu: f64,
    pub a: f64,
    pub k: f64,
    pub ell: f64,
    pub big_l: f64,
    pub s: f64,
    pub b: f64,
    pub xi: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub support_radius: f64,
    pub margin: f64,
}

impl BoxGeometry {
    /// ℓ = K⁻¹(ρ_μ a)^{−1/2}, L = (L/ℓ)·ℓ.
    pub fn new(p: &GeometryParams, a: f64, support_radius: f64) -> Result<Self> {
        Self::with_margin(p, a, support_radius, DEFAULT_SUPPORT_MARGIN, DEFAULT_SMALLNESS)
    }

    pub fn with_margin(p: &GeometryParams, a: f64, support_radius: f64, margin: f64, smallness: f64) -> Result<Self> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::GeometryViolation(format!("{name} = {v} must be positive")))
            }
        };
        pos("rho_mu", p.rho_mu)?;
        pos("a", a)?;
        pos("s", p.s)?;
        pos("b", p.b)?;
        if !(p.k > 1.0) {
            return Err(Error::GeometryViolation(format!("K = {} must exceed 1", p.k)));
        }
        if !(p.xi >= 3.0) {
            return Err(Error::GeometryViolation(format!("Xi = {} must be at least 3", p.xi)));
        }
        if !(p.l_over_ell > 2.0) {
            return Err(Error::GeometryViolation(format!(
                "box side must satisfy 2·ell < L (L/ell = {})",
                p.l_over_ell
            )));
        }
        let ell = (p.rho_mu * a).powf(-0.5) / p.k;
        if !(support_radius <= margin * ell) {
            return Err(Error::SupportViolation(format!(
                "R = {support_radius} exceeds {margin}·ell = {}",
                margin * ell
            )));
        }
        let rho_a3 = p.rho_mu * a.powi(3);
        let filling = p.rho_mu * ell.powi(3);
        if rho_a3 < smallness && filling < 1.0 - 1e-9 {
            return Err(Error::GeometryViolation(format!("rho_mu·ell³ = {filling} is below 1")));
        }
        Ok(Self {
            rho_mu: p.rho_mu,
            a,
            k: p.k,
            ell,
            big_l: p.l_over_ell * ell,
            s: p.s,
            b: p.b,
            xi: p.xi,
            delta: p.delta,
            epsilon: p.epsilon,
            support_radius,
            margin,
        })
    }

    pub fn rho_a3(&self) -> f64 {
        self.rho_mu * self.a.powi(3)
    }

    /// ρ_μ ℓ³.
    pub fn filling(&self) -> f64 {
        self.rho_mu * self.ell.powi(3)
    }

    /// Same parameters with a different box scale `ell`.
    pub fn with_ell(&self, ell: f64) -> Self {
        let ratio = self.big_l / self.ell;
        Self { ell, big_l: ratio * ell, ..*self }
    }
}

#[derive(Debug, Clone)]
pub struct LocalizedPotentials {
    pub geom: BoxGeometry,
    pub chi: BumpProfile,
    pub sol: ScatteringSolution,
}

pub fn build_localized_potentials(
    geom: &BoxGeometry,
    pot: &RadialPotential,
    sol: &ScatteringSolution,
    chi: &BumpProfile,
) -> Result<LocalizedPotentials> {
    if !sol.matches(pot) {
        return Err(Error::MissingScattering("solution was computed for a different potential".into()));
    }
    let r = pot.support_radius();
    if r >= geom.margin * geom.ell {
        return Err(Error::SupportViolation(format!("R = {r} not below {}·ell = {}", geom.margin, geom.margin * geom.ell)));
    }
    Ok(LocalizedPotentials { geom: *geom, chi: chi.clone(), sol: sol.clone() })
}

impl LocalizedPotentials {
    pub fn ell(&self) -> f64 {
        self.geom.ell
    }

    pub fn support(&self) -> f64 {
        self.sol.support_radius()
    }

    fn scaled(&self, x: &Vec3) -> Vec3 {
        let l = self.geom.ell;
        [x[0] / l, x[1] / l, x[2] / l]
    }

    /// W(x) = v(x)/(χ∗χ)(x/ℓ).
    pub fn big_w(&self, x: &Vec3) -> f64 {
        let r = norm(x);
        if r > self.support() {
            return 0.0;
        }
        self.sol.potential().value(r) / self.chi.chi_conv(&self.scaled(x))
    }

    /// W₁(x) = g(x)/(χ∗χ)(x/ℓ).
    pub fn big_w1(&self, x: &Vec3) -> f64 {
        let r = norm(x);
        if r > self.support() {
            return 0.0;
        }
        self.sol.g(r) / self.chi.chi_conv(&self.scaled(x))
    }

    fn envelope(&self, x: &Vec3, y: &Vec3) -> f64 {
        self.chi.chi(&self.scaled(x)) * self.chi.chi(&self.scaled(y))
    }

    pub fn w(&self, x: &Vec3, y: &Vec3) -> f64 {
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        self.envelope(x, y) * self.big_w(&d)
    }

    pub fn w1(&self, x: &Vec3, y: &Vec3) -> f64 {
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        self.w(x, y) * self.sol.one_minus_omega(norm(&d))
    }

    pub fn w2(&self, x: &Vec3, y: &Vec3) -> f64 {
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        self.w1(x, y) * (1.0 + self.sol.omega(norm(&d)))
    }

    /// ∫ f(z) dz over B(0, R) in spherical coordinates.
    fn ball_integral<F: Fn(&Vec3) -> f64 + Sync + Send>(&self, f: F, radial_panels: usize, n_theta: usize) -> f64 {
        let rr = self.support();
        let rule = GaussLegendre::new(10);
        let br = breakpoints(0.0, rr, &self.sol.potential().breakpoints());
        let (rs, wr) = composite_nodes(&rule, &br, radial_panels);
        let ct = GaussLegendre::new(n_theta);
        let n_phi = 2 * n_theta;
        let shells = par::map_range(rs.len(), |i| {
            let r = rs[i];
            let mut acc = 0.0;
            for (c, wc) in ct.nodes.iter().zip(&ct.weights) {
                let st = (1.0 - c * c).sqrt();
                for j in 0..n_phi {
                    let ph = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
                    let z = [r * st * ph.cos(), r * st * ph.sin(), r * c];
                    acc += wc * f(&z);
                }
            }
            acc * 2.0 * PI / n_phi as f64 * r * r * wr[i]
        });
        shells.iter().sum()
    }

    /// ∬ w₁ = ℓ³ ∫ W₁(z)(χ∗χ)(z/ℓ) dz, with χ∗χ inside the integral taken by
    /// direct 1D quadrature rather than the table.
    pub fn double_integral_w1(&self, radial_panels: usize, n_theta: usize) -> f64 {
        let l3 = self.geom.ell.powi(3);
        l3 * self.ball_integral(|z| self.big_w1(z) * self.chi.chi_conv_product_direct(&self.scaled(z)), radial_panels, n_theta)
    }

    pub fn double_integral_w2(&self, radial_panels: usize, n_theta: usize) -> f64 {
        let l3 = self.geom.ell.powi(3);
        l3 * self.ball_integral(
            |z| {
                self.big_w1(z) * (1.0 + self.sol.omega(norm(z))) * self.chi.chi_conv_product_direct(&self.scaled(z))
            },
            radial_panels,
            n_theta,
        )
    }

    /// C such that W₁ ≤ (1 + C(R/ℓ)²) g on supp v. χ∗χ decreases along rays,
    /// so the sup of 1/(χ∗χ) sits on the sphere of radius R.
    pub fn w1_constant(&self) -> f64 {
        let rr = self.support();
        let t = rr / self.geom.ell;
        let n = 48;
        let ct = GaussLegendre::new(n);
        let mut worst: f64 = 1.0;
        for c in ct.nodes.iter().chain([1.0, -1.0].iter()) {
            let st = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..(2 * n) {
                let ph = 2.0 * PI * j as f64 / (2 * n) as f64;
                let z = [t * st * ph.cos(), t * st * ph.sin(), t * c];
                worst = worst.max(1.0 / self.chi.chi_conv(&z));
            }
        }
        // (1,1,1)/√3 is the extremal direction for a product of even, decreasing factors.
        let d = t / 3f64.sqrt();
        worst = worst.max(1.0 / self.chi.chi_conv(&[d, d, d]));
        (worst - 1.0) / (t * t)
    }
}

const IDENTITY_RADIAL_PANELS: usize = 4;
const IDENTITY_THETA: usize = 8;

/// Integral identities for w₁, w₂ and the pointwise W₁ bound.
pub fn check_integral_identities(lp: &LocalizedPotentials, tol: f64) -> IdentityReport {
    let mut rep = IdentityReport::new("localization-integrals");
    let l3 = lp.geom.ell.powi(3);
    let a = lp.sol.a;
    let g_omega = lp.sol.integral_g_omega().unwrap_or(f64::NAN);
    let inputs = |r: CheckRecord| r.input("ell", lp.geom.ell).input("K", lp.geom.k).input("steepness", lp.chi.steepness);

    let w1c = lp.double_integral_w1(IDENTITY_RADIAL_PANELS, IDENTITY_THETA);
    let w1f = lp.double_integral_w1(2 * IDENTITY_RADIAL_PANELS, 3 * IDENTITY_THETA / 2);
    let ref1 = 8.0 * PI * l3 * a;
    rep.push(
        inputs(CheckRecord::new("localize-w1-integral", "localized-kernel-integrals"))
            .input("quadrature_change", (w1f - w1c).abs() / ref1)
            .value(w1f)
            .reference(ref1)
            .within((w1f - ref1).abs() / ref1, tol),
    );

    let w2c = lp.double_integral_w2(IDENTITY_RADIAL_PANELS, IDENTITY_THETA);
    let w2f = lp.double_integral_w2(2 * IDENTITY_RADIAL_PANELS, 3 * IDENTITY_THETA / 2);
    let ref2 = l3 * (8.0 * PI * a + g_omega);
    rep.push(
        inputs(CheckRecord::new("localize-w2-integral", "localized-kernel-integrals"))
            .input("quadrature_change", (w2f - w2c).abs() / ref2)
            .value(w2f)
            .reference(ref2)
            .within((w2f - ref2).abs() / ref2, tol),
    );

    let c = lp.w1_constant();
    let t = lp.support() / lp.geom.ell;
    let bound = 1.0 + c * t * t;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2000 {
        let r = lp.support() * rng.gen::<f64>().cbrt();
        let ct: f64 = rng.gen_range(-1.0..1.0);
        let ph: f64 = rng.gen_range(0.0..2.0 * PI);
        let st = (1.0 - ct * ct).sqrt();
        let z = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
        let g = lp.sol.g(r);
        let w1 = lp.big_w1(&z);
        if w1 < -1e-15 {
            worst = f64::INFINITY;
        }
        if g > 0.0 {
            worst = worst.max(w1 / g - bound);
        }
    }
    rep.push(
        inputs(CheckRecord::new("localize-w1-pointwise", "w1-pointwise-bound"))
            .input("C", c)
            .value(c)
            .within(worst.max(0.0), 1e-12),
    );
    rep
}

/// Periodic sliding identity ℓ⁻³∫_Ω w_u^per(x,y) du = v^per(x − y), and the
/// same with (W₁, g) in place of (W, v).
pub fn sliding_identity_check(
    geom: &BoxGeometry,
    pot: &RadialPotential,
    sol: &ScatteringSolution,
    chi: &BumpProfile,
    pairs: &[(Vec3, Vec3)],
    tol: f64,
) -> Result<IdentityReport> {
    if !(2.0 * geom.ell < geom.big_l) {
        return Err(Error::GeometryViolation(format!("2·ell = {} not below L = {}", 2.0 * geom.ell, geom.big_l)));
    }
    let lp = build_localized_potentials(geom, pot, sol, chi)?;
    let mut rep = IdentityReport::new("sliding");
    let results = par::map_slice(pairs, |(x, y)| sliding_pair(&lp, x, y));
    let vscale = pot.value(0.0).max(f64::MIN_POSITIVE);
    for (i, ((x, y), res)) in pairs.iter().zip(results).enumerate() {
        let (lv, rv, lg, rg, change) = res;
        let sep = min_image(&[x[0] - y[0], x[1] - y[1], x[2] - y[2]], geom.big_l);
        let rel = |l: f64, r: f64| if r.abs() > 0.0 { (l - r).abs() / r.abs() } else { (l - r).abs() / vscale };
        rep.push(
            CheckRecord::new(format!("sliding-v-{i:02}"), "sliding-localization")
                .input("x", x.to_vec())
                .input("y", y.to_vec())
                .input("separation", norm(&sep))
                .input("u_refinement_change", change)
                .value(lv)
                .reference(rv)
                .within(rel(lv, rv), tol),
        );
        rep.push(
            CheckRecord::new(format!("sliding-g-{i:02}"), "sliding-localization")
                .input("x", x.to_vec())
                .input("y", y.to_vec())
                .value(lg)
                .reference(rg)
                .within(rel(lg, rg), tol),
        );
    }
    Ok(rep)
}

fn min_image(d: &Vec3, l: f64) -> Vec3 {
    let f = |x: f64| x - l * (x / l).round();
    [f(d[0]), f(d[1]), f(d[2])]
}

/// Returns (lhs_v, v^per, lhs_g, g^per, change under u-grid doubling).
fn sliding_pair(lp: &LocalizedPotentials, x: &Vec3, y: &Vec3) -> (f64, f64, f64, f64, f64) {
    let l = lp.geom.big_l;
    let n0 = 64 * (l / lp.geom.ell).ceil() as usize;
    let eval = |n: usize| {
        // factor[i][m+1] = Σ_j ∫_{-L/2}^{L/2} χ₁((xᵢ−u+(j+m)L)/ℓ) χ₁((yᵢ−u+jL)/ℓ) du
        let mut factor = [[0.0; 3]; 3];
        for i in 0..3 {
            for m in -1i32..=1 {
                factor[i][(m + 1) as usize] = periodic_overlap(lp, x[i], y[i], m, n);
            }
        }
        let (mut sv, mut sg, mut rv, mut rg) = (0.0, 0.0, 0.0, 0.0);
        for m0 in -1i32..=1 {
            for m1 in -1i32..=1 {
                for m2 in -1i32..=1 {
                    let d = [
                        x[0] - y[0] + m0 as f64 * l,
                        x[1] - y[1] + m1 as f64 * l,
                        x[2] - y[2] + m2 as f64 * l,
                    ];
                    let r = norm(&d);
                    if r > lp.support() {
                        continue;
                    }
                    let f = factor[0][(m0 + 1) as usize] * factor[1][(m1 + 1) as usize] * factor[2][(m2 + 1) as usize];
                    sv += lp.big_w(&d) * f;
                    sg += lp.big_w1(&d) * f;
                    rv += lp.sol.potential().value(r);
                    rg += lp.sol.g(r);
                }
            }
        }
        let l3 = lp.geom.ell.powi(3);
        (sv / l3, rv, sg / l3, rg)
    };
    let c = eval(n0);
    let f = eval(2 * n0);
    let change = (f.0 - c.0).abs() / f.1.abs().max(f64::MIN_POSITIVE);
    (f.0, f.1, f.2, f.3, change)
}

/// Periodic trapezoid over u ∈ [−L/2, L/2) with images |j| ≤ 1.
fn periodic_overlap(lp: &LocalizedPotentials, xi: f64, yi: f64, m: i32, n: usize) -> f64 {
    let l = lp.geom.big_l;
    let ell = lp.geom.ell;
    let h = l / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        let u = -0.5 * l + k as f64 * h;
        for j in -1i32..=1 {
            let a = lp.chi.chi_1d((xi - u + (j + m) as f64 * l) / ell);
            if a == 0.0 {
                continue;
            }
            acc += a * lp.chi.chi_1d((yi - u + j as f64 * l) / ell);
        }
    }
    acc * h
}

/// Seeded sample of pairs on the torus with |x − y|_per < R, the first one
/// straddling the seam.
pub fn sample_pairs(geom: &BoxGeometry, count: usize, seed: u64) -> Vec<(Vec3, Vec3)> {
    let l = geom.big_l;
    let rr = geom.support_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    if count > 0 {
        let x = [0.5 * l - 0.2 * rr, 0.0, 0.1 * rr];
        let y = [-0.5 * l + 0.3 * rr, 0.1 * rr, 0.0];
        out.push((x, y));
    }
    while out.len() < count {
        let x: Vec3 = [0, 1, 2].map(|_| rng.gen_range(-0.5 * l..0.5 * l));
        let r = rr * rng.gen_range(0.05f64..0.95);
        let ct: f64 = rng.gen_range(-1.0..1.0);
        let ph: f64 = rng.gen_range(0.0..2.0 * PI);
        let st = (1.0 - ct * ct).sqrt();
        let d = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
        let wrap = |v: f64| v - l * ((v + 0.5 * l) / l).floor();
        let y = [wrap(x[0] - d[0]), wrap(x[1] - d[1]), wrap(x[2] - d[2])];
        out.push((x, y));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpScaling {
    pub rho: f64,
    pub big_l: f64,
    pub delta: f64,
    pub c_lambda: f64,
}

/// Gross-Pitaevskii scaling: ρ = N^{3κ−2}λ⁻³, L = N^{1−κ}λ, δ = κ/(4−6κ),
/// C(λ) = (a/λ)^{1/2 + 3κ/(4−6κ)}.
pub fn gp_scaling_convert(n: f64, kappa: f64, lambda: f64, a: f64) -> Result<GpScaling> {
    if !(kappa > 0.0 && kappa < 2.0 / 3.0) {
        return Err(Error::DomainError(format!("kappa = {kappa} outside (0, 2/3)")));
    }
    if !(n >= 1.0) || !(lambda > 0.0) || !(a > 0.0) {
        return Err(Error::DomainError("N ≥ 1, lambda > 0 and a > 0 required".into()));
    }
    // κ/(4−6κ) written so that κ = 2/5 rounds to exactly 1/4.
    let delta = 1.0 / (4.0 / kappa - 6.0);
    Ok(GpScaling {
        rho: n.powf(3.0 * kappa - 2.0) / lambda.powi(3),
        big_l: n.powf(1.0 - kappa) * lambda,
        delta,
        c_lambda: (a / lambda).powf(0.5 + 3.0 * delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_normalized_and_even() {
        let chi = build_bump(DEFAULT_STEEPNESS).unwrap();
        assert!((chi.l2_norm_sq_direct() - 1.0).abs() < 1e-10);
        let x = [0.1, -0.33, 0.2];
        assert_eq!(chi.chi(&x), chi.chi(&[-0.1, 0.33, -0.2]));
        assert_eq!(chi.chi(&[0.5, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn conv_table_matches_tensor_quadrature() {
        let chi = build_bump(DEFAULT_STEEPNESS).unwrap();
        for y in [[0.0, 0.0, 0.0], [0.1, 0.2, -0.05], [0.4, 0.0, 0.3]] {
            let t = chi.chi_conv(&y);
            let d = chi.chi_conv_direct(&y, 6);
            assert!((t - d).abs() < 1e-10, "{y:?}: {t} vs {d}");
        }
    }

    #[test]
    fn rejects_out_of_range_steepness() {
        assert!(build_bump(0.0).is_err());
        assert!(build_bump(100.0).is_err());
    }

    #[test]
    fn gp_conversion_examples() {
        let g = gp_scaling_convert(1e4, 0.25, 1.0, 1.0).unwrap();
        assert!((g.rho - 1e-5).abs() < 1e-17);
        assert_eq!(gp_scaling_convert(10.0, 0.4, 1.0, 1.0).unwrap().delta, 0.25);
        assert!(gp_scaling_convert(10.0, 0.7, 1.0, 1.0).is_err());
    }
}
