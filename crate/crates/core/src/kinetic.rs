//! Kinetic localization symbol F(k) and the gap certificate
//! F(k) ≤ k² − 2π²L⁻² over the lattice 2πL⁻¹ℤ³ (rescaled to ℓ = 1).
//!
//! F₁ = (2π)⁻³∫τ(p)|ĥ(p)|² dp with ĥ(p) = χ̂(p−k) − θ̂(k)χ̂(p), τ = (p² − s⁻²)₊.
//! For fixed (p₂, p₃) the p₁-integral is ∫(q² − c')₊f(q)dq with
//! c' = s⁻² − p₂² − p₃², read from tables of tail moments ∫_{|q|≥m}q^j f.
//! (p₂, p₃) are summed on a uniform grid; the weights are products of
//! band-limited 1D factors and the only non-smooth set is the circle c' = 0.
//! Outside that disc the p₁-integral is a polynomial in p₂², p₃², so each
//! grid row's exterior part reduces to suffix sums.

use crate::error::{Error, Result};
use crate::fourier::sinc;
use crate::localization::BumpProfile;
use crate::par;
use crate::quadrature::GaussLegendre;
use crate::table::UniformTable;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// β in F₂ ≤ b·min(βk², 1).
pub const BETA: f64 = 1.0 / 12.0;
const PHI_NODES: usize = 1024;
const PHAT_STEP: f64 = 1.0 / 16.0;
const PHAT_ORDER: usize = 12;
const TAIL_STEP: f64 = 0.125;
const TAIL_ORDER: usize = 8;
/// Initial reach of the tail tables and the outer grid.
const DEFAULT_Q_CUT: f64 = 1000.0;
/// Tables must extend this far beyond s⁻¹ and every |kᵢ|; φ̂² ≈ e⁻⁴⁰ there.
const REACH_MARGIN: f64 = 400.0;
const OUTER_STEP: f64 = 0.25;
const WEIGHT_FLOOR: f64 = 1e-28;

/// Tail moments ∫_{|q|≥m} q^j f(q) dq for j = 0, 2 on a uniform m-grid.
#[derive(Debug, Clone)]
struct TailMoments {
    m0: Vec<f64>,
    m2: Vec<f64>,
}

/// The three inner functions attached to one momentum coordinate value κ:
/// φ̂(q−κ)², φ̂(q−κ)φ̂(q).
#[derive(Debug, Clone)]
struct CoordTables {
    shifted: TailMoments,
    mixed: TailMoments,
}

/// Cached φ̂ and tail tables for one bump.
#[derive(Debug, Clone)]
pub struct KineticEngine {
    pub steepness: f64,
    c: f64,
    phat: UniformTable,
    base: CoordTables,
    tables: BTreeMap<u64, CoordTables>,
    outer_step: f64,
    q_cut: f64,
}

/// Output of [`compute_f`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FComponents {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub i: f64,
    pub ii: f64,
    pub iii: f64,
    /// |F₁(h) − F₁(2h)| for the outer trapezoid.
    pub residual: f64,
}

/// θ̂(k)/ℓ³ = ∏ sinc(kᵢ/2) at ℓ = 1.
pub fn theta_hat(k: &[f64; 3]) -> f64 {
    sinc(0.5 * k[0]) * sinc(0.5 * k[1]) * sinc(0.5 * k[2])
}

/// τ(p) = (p² − s⁻²ℓ⁻²)₊.
pub fn tau(p: &[f64; 3], s: f64, ell: f64) -> f64 {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    (p2 - 1.0 / (s * s * ell * ell)).max(0.0)
}

fn phat_direct(sigma: f64, q: f64) -> f64 {
    // Midpoint rule; exact up to aliasing φ̂(2πN − q), negligible here.
    let n = PHI_NODES;
    let h = 1.0 / n as f64;
    let mut acc = 0.0;
    for i in n / 2..n {
        let t = (i as f64 + 0.5) * h - 0.5;
        let q4 = 1.0 - 4.0 * t * t;
        if q4 <= 0.0 {
            continue;
        }
        acc += (-sigma / q4).exp() * (q * t).cos();
    }
    2.0 * acc * h
}

impl KineticEngine {
    pub fn new(chi: &BumpProfile) -> Self {
        Self::with_reach(chi.steepness, chi.c, DEFAULT_Q_CUT)
    }

    fn with_reach(sigma: f64, c: f64, q_cut: f64) -> Self {
        // shifted arguments p − k reach 2·q_cut
        let n = (2.0 * q_cut / PHAT_STEP).ceil() as usize;
        let phat = UniformTable::build(0.0, n as f64 * PHAT_STEP, n, PHAT_ORDER, |q| phat_direct(sigma, q));
        let mut eng = Self {
            steepness: sigma,
            c,
            phat,
            base: CoordTables { shifted: TailMoments { m0: vec![], m2: vec![] }, mixed: TailMoments { m0: vec![], m2: vec![] } },
            tables: BTreeMap::new(),
            outer_step: OUTER_STEP,
            q_cut,
        };
        eng.base = eng.build_coord(0.0);
        eng
    }

    /// Momentum magnitude (s⁻¹ or a coordinate of k) the tables cover.
    pub fn reach(&self) -> f64 {
        self.q_cut - REACH_MARGIN
    }

    /// Rebuilds the tables if `r` exceeds the current reach; prepared
    /// coordinates are dropped.
    pub fn ensure_reach(&mut self, r: f64) {
        if r > self.reach() {
            let q_cut = ((r + REACH_MARGIN) / 100.0).ceil() * 100.0;
            let h = self.outer_step;
            *self = Self::with_reach(self.steepness, self.c, q_cut).with_outer_step(h);
        }
    }

    /// Outer trapezoid spacing; the residual compares against twice this.
    pub fn with_outer_step(mut self, h: f64) -> Self {
        self.outer_step = h;
        self
    }

    pub fn outer_step(&self) -> f64 {
        self.outer_step
    }

    /// φ̂(q) = ∫φ(t)e^{−iqt}dt.
    pub fn phi_hat(&self, q: f64) -> f64 {
        let q = q.abs();
        if q >= self.phat.x_max() {
            0.0
        } else {
            self.phat.eval(q)
        }
    }

    /// χ̂(p) = c∏φ̂(pᵢ).
    pub fn chi_hat(&self, p: &[f64; 3]) -> f64 {
        self.c * self.phi_hat(p[0]) * self.phi_hat(p[1]) * self.phi_hat(p[2])
    }

    fn build_coord(&self, kappa: f64) -> CoordTables {
        let shifted = self.tail_moments(|q| self.phi_hat(q - kappa).powi(2));
        let mixed = self.tail_moments(|q| self.phi_hat(q - kappa) * self.phi_hat(q));
        CoordTables { shifted, mixed }
    }

    fn tail_moments<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> TailMoments {
        let n = (self.q_cut / TAIL_STEP) as usize;
        let rule = GaussLegendre::new(8);
        let pieces = par::map_range(n, |j| {
            let (a, b) = (j as f64 * TAIL_STEP, (j + 1) as f64 * TAIL_STEP);
            let (xs, ws) = rule.mapped(a, b);
            let mut p0 = 0.0;
            let mut p2 = 0.0;
            for (x, w) in xs.iter().zip(&ws) {
                let v = f(*x) + f(-*x);
                p0 += w * v;
                p2 += w * v * x * x;
            }
            (p0, p2)
        });
        let mut m0 = vec![0.0; n + 1];
        let mut m2 = vec![0.0; n + 1];
        for j in (0..n).rev() {
            m0[j] = m0[j + 1] + pieces[j].0;
            m2[j] = m2[j + 1] + pieces[j].1;
        }
        TailMoments { m0, m2 }
    }

    fn key(kappa: f64) -> u64 {
        kappa.abs().to_bits()
    }

    /// Builds tail tables for every coordinate value that occurs in `ks`,
    /// widening the reach first if needed.
    pub fn prepare(&mut self, ks: &[[f64; 3]]) {
        self.ensure_reach(ks.iter().flatten().fold(0.0, |m: f64, x| m.max(x.abs())));
        let mut need: Vec<f64> = ks
            .iter()
            .flat_map(|k| k.iter().map(|x| x.abs()))
            .filter(|x| !self.tables.contains_key(&Self::key(*x)))
            .collect();
        need.sort_by(f64::total_cmp);
        need.dedup();
        let built = par::map_slice(&need, |&kappa| self.build_coord(kappa));
        for (kappa, t) in need.into_iter().zip(built) {
            self.tables.insert(Self::key(kappa), t);
        }
    }

    fn coord(&self, kappa: f64) -> Option<&CoordTables> {
        if kappa == 0.0 {
            return Some(&self.base);
        }
        self.tables.get(&Self::key(kappa))
    }

    /// ∫|∇χ|² from the Fourier side, (2π)⁻³∫p²χ̂².
    pub fn grad_sq_from_tables(&self) -> f64 {
        let t0 = self.base.shifted.m0[0];
        let t2 = self.base.shifted.m2[0];
        self.c * self.c * 3.0 * t2 * t0 * t0 / (2.0 * PI).powi(3)
    }

    /// F₁ components at ℓ = 1 for momentum k. Tables for the coordinates of k
    /// must have been prepared.
    pub fn f1_components(&self, k: &[f64; 3], s: f64) -> Result<(f64, f64, f64, f64)> {
        let tabs: Vec<&CoordTables> = k
            .iter()
            .map(|x| self.coord(x.abs()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::QuadratureFailure("tail tables not prepared for k".into()))?;
        if 1.0 / s > self.reach() || k.iter().any(|x| x.abs() > self.reach()) {
            return Err(Error::QuadratureFailure(format!("s⁻¹ = {} or k = {k:?} beyond table reach {}", 1.0 / s, self.reach())));
        }
        let big_s = 1.0 / (s * s);
        let th = theta_hat(k);
        let h = self.outer_step;
        let half = (self.q_cut / h).ceil() as usize;
        let npts = 2 * half + 1;
        let grid: Vec<f64> = (0..npts).map(|i| (i as f64 - half as f64) * h).collect();
        let base: Vec<f64> = grid.iter().map(|&p| self.phi_hat(p)).collect();
        // weights[d][t][i]: φ̂(p−k_d)², φ̂(p−k_d)φ̂(p), φ̂(p)² for t = I, II, III
        let weights: Vec<[Vec<f64>; 3]> = [1usize, 2]
            .iter()
            .map(|&d| {
                let a: Vec<f64> = grid.iter().map(|&p| self.phi_hat(p - k[d])).collect();
                [
                    a.iter().map(|x| x * x).collect(),
                    a.iter().zip(&base).map(|(x, y)| x * y).collect(),
                    base.iter().map(|x| x * x).collect(),
                ]
            })
            .collect();
        let inner = [&tabs[0].shifted, &tabs[0].mixed, &self.base.shifted];
        let tot0: [f64; 3] = [inner[0].m0[0], inner[1].m0[0], inner[2].m0[0]];
        let tot2: [f64; 3] = [inner[0].m2[0], inner[1].m2[0], inner[2].m2[0]];
        // Suffix sums over |j − half| ≥ n of w and p²w, all nodes and even offsets.
        let suffix = |w: &[f64], even: bool| {
            let mut r0 = vec![0.0; half + 2];
            let mut r2 = vec![0.0; half + 2];
            for n in (0..=half).rev() {
                let (mut a0, mut a2) = (0.0, 0.0);
                if !even || n % 2 == 0 {
                    let p2 = (n as f64 * h).powi(2);
                    let pair = if n == 0 { w[half] } else { w[half + n] + w[half - n] };
                    a0 = pair;
                    a2 = pair * p2;
                }
                r0[n] = r0[n + 1] + a0;
                r2[n] = r2[n + 1] + a2;
            }
            (r0, r2)
        };
        let tails: Vec<[(Vec<f64>, Vec<f64>); 2]> =
            (0..3).map(|t| [suffix(&weights[1][t], false), suffix(&weights[1][t], true)]).collect();
        let interp = Interp::new(self.base.shifted.m0.len());
        let rows = par::map_range(npts, |i| {
            let mut acc = [[0.0f64; 3]; 2];
            let pi = grid[i];
            let coarse_row = (i as isize - half as isize) % 2 == 0;
            let rest = big_s - pi * pi;
            // |p_j| < a: table-based inner integral; |p_j| ≥ a: polynomial in p_j².
            let n_a = if rest > 0.0 { ((rest.sqrt() / h).ceil() as usize).min(half + 1) } else { 0 };
            for t in 0..3 {
                let wi = weights[0][t][i];
                if wi == 0.0 {
                    continue;
                }
                let lin = tot2[t] - rest * tot0[t];
                for (r, (r0, r2)) in tails[t].iter().enumerate() {
                    if r == 1 && !coarse_row {
                        continue;
                    }
                    acc[r][t] += wi * (lin * r0[n_a] + tot0[t] * r2[n_a]);
                }
            }
            if n_a > 0 {
                let w_i = [weights[0][0][i], weights[0][1][i], weights[0][2][i]];
                for j in (half + 1 - n_a)..(half + n_a) {
                    let pj = grid[j];
                    let wj = [weights[1][0][j], weights[1][1][j], weights[1][2][j]];
                    let w = [w_i[0] * wj[0], w_i[1] * wj[1], w_i[2] * wj[2]];
                    if w[0].abs().max(w[1].abs()).max(w[2].abs()) < WEIGHT_FLOOR {
                        continue;
                    }
                    // ∫(p₁² − c')₊ f(p₁) dp₁ = M₂(√c'₊) − c'M₀(√c'₊)
                    let cprime = rest - pj * pj;
                    let lw = interp.weights(cprime.max(0.0).sqrt());
                    let coarse = coarse_row && (j as isize - half as isize) % 2 == 0;
                    for t in 0..3 {
                        let v = w[t] * (lw.apply(&inner[t].m2) - cprime * lw.apply(&inner[t].m0));
                        acc[0][t] += v;
                        if coarse {
                            acc[1][t] += v;
                        }
                    }
                }
            }
            acc
        });
        let mut total = [[0.0f64; 3]; 2];
        for a in rows {
            for r in 0..2 {
                for t in 0..3 {
                    total[r][t] += a[r][t];
                }
            }
        }
        let pref = self.c * self.c / (2.0 * PI).powi(3);
        let fine = [pref * h * h * total[0][0], pref * h * h * total[0][1], pref * h * h * total[0][2]];
        let coarse = [
            pref * 4.0 * h * h * total[1][0],
            pref * 4.0 * h * h * total[1][1],
            pref * 4.0 * h * h * total[1][2],
        ];
        let i_term = fine[0];
        let ii = -2.0 * th * fine[1];
        let iii = th * th * fine[2];
        let f1c = coarse[0] - 2.0 * th * coarse[1] + th * th * coarse[2];
        let f1 = i_term + ii + iii;
        Ok((i_term, ii, iii, (f1 - f1c).abs()))
    }

    /// Full F(k) at ℓ = 1.
    pub fn components(&self, k: &[f64; 3], s: f64, b: f64) -> Result<FComponents> {
        let (i, ii, iii, residual) = self.f1_components(k, s)?;
        let th = theta_hat(k);
        let f2 = b * (1.0 - th * th);
        let f1 = i + ii + iii;
        Ok(FComponents { f: f1 + f2, f1, f2, i, ii, iii, residual })
    }

    /// Tail moment ∫_{|q|≥m} q^j φ̂(q)² dq, j ∈ {0, 2}.
    pub fn base_tail(&self, m: f64, j: u32) -> f64 {
        let lw = Interp::new(self.base.shifted.m0.len()).weights(m);
        match j {
            0 => lw.apply(&self.base.shifted.m0),
            _ => lw.apply(&self.base.shifted.m2),
        }
    }

    /// k-independent upper bound on F₁(k) for |k| ≤ ½s⁻¹, from
    /// |ĥ|² ≤ 2χ̂(p−k)² + 2θ̂²χ̂(p)², (|q| + |k|)² ≤ 4|q|² on |q| ≥ ½s⁻¹ and a
    /// union bound over the coordinate that exceeds |q|/√3.
    pub fn f1_uniform_bound(&self, s: f64) -> f64 {
        let p0 = self.base.shifted.m0[0];
        let p2 = self.base.shifted.m2[0];
        let ball = |r: f64| {
            let t = r / 3f64.sqrt();
            3.0 * (self.base_tail(t, 2) * p0 * p0 + 2.0 * self.base_tail(t, 0) * p0 * p2)
        };
        let pref = self.c * self.c / (2.0 * PI).powi(3);
        pref * 2.0 * (4.0 * ball(0.5 / s) + ball(1.0 / s))
    }
}

struct Interp {
    denom: Vec<f64>,
    n: usize,
}

struct LocalWeights {
    start: usize,
    w: [f64; TAIL_ORDER],
    len: usize,
}

impl LocalWeights {
    fn apply(&self, v: &[f64]) -> f64 {
        if self.len == 0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in 0..self.len {
            acc += self.w[j] * v[self.start + j];
        }
        acc
    }
}

impl Interp {
    /// `n` is the length of the tail tables being interpolated.
    fn new(n: usize) -> Self {
        let denom = (0..TAIL_ORDER)
            .map(|j| (0..TAIL_ORDER).filter(|m| *m != j).map(|m| j as f64 - m as f64).product())
            .collect();
        Self { denom, n }
    }

    fn weights(&self, m: f64) -> LocalWeights {
        let n = self.n;
        let t = m / TAIL_STEP;
        if t >= (n - 1) as f64 {
            return LocalWeights { start: 0, w: [0.0; TAIL_ORDER], len: 0 };
        }
        let start = (t.floor() as isize - TAIL_ORDER as isize / 2 + 1).clamp(0, (n - TAIL_ORDER) as isize) as usize;
        let s = t - start as f64;
        let mut w = [0.0; TAIL_ORDER];
        let mut prod = 1.0;
        for m in 0..TAIL_ORDER {
            let d = s - m as f64;
            if d == 0.0 {
                w[m] = 1.0;
                return LocalWeights { start, w, len: TAIL_ORDER };
            }
            prod *= d;
        }
        for j in 0..TAIL_ORDER {
            w[j] = prod / ((s - j as f64) * self.denom[j]);
        }
        LocalWeights { start, w, len: TAIL_ORDER }
    }
}

/// F(k) = F₁ + F₂ for a physical box of side ℓ: F_ℓ(k) = ℓ⁻² F₁(kℓ).
/// Builds a fresh engine; use [`KineticEngine`] directly for many momenta.
pub fn compute_f(k: &[f64; 3], chi: &BumpProfile, s: f64, b: f64, ell: f64) -> Result<FComponents> {
    if !(s > 0.0 && b >= 0.0 && ell > 0.0) || k.iter().any(|x| !x.is_finite()) {
        return Err(Error::DomainError("k finite, s, ell > 0 and b ≥ 0 required".into()));
    }
    let kr = [k[0] * ell, k[1] * ell, k[2] * ell];
    let mut eng = KineticEngine::new(chi);
    eng.ensure_reach(1.0 / s);
    eng.prepare(&[kr]);
    let c = eng.components(&kr, s, b)?;
    let sc = 1.0 / (ell * ell);
    Ok(FComponents {
        f: c.f * sc,
        f1: c.f1 * sc,
        f2: c.f2 * sc,
        i: c.i * sc,
        ii: c.ii * sc,
        iii: c.iii * sc,
        residual: c.residual * sc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRow {
    /// Orbit representative k₁ ≥ k₂ ≥ k₃ ≥ 0 (units of 1/ℓ).
    pub k: [f64; 3],
    pub multiplicity: usize,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub residual: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub steepness: f64,
    pub b: f64,
    pub s: f64,
    pub l_over_ell: f64,
    pub k_split: f64,
    pub gap_constant: f64,
    /// Uniform bound on F₁ used for every orbit not in `rows`.
    pub f1_bound: f64,
    pub n_momenta: usize,
    /// Orbits with F₁ evaluated.
    pub rows: Vec<MarginRow>,
    pub bounded_orbits: usize,
    /// Smallest k² among bounded orbits, and its margin k² − gap − U − b.
    pub bounded_min_k2: Option<f64>,
    pub bounded_margin: Option<f64>,
    pub min_margin: f64,
    pub first_violation: Option<[f64; 3]>,
    pub lattice_pass: bool,
    pub beta: f64,
    pub c_tail: f64,
    pub c23: f64,
    pub tail_margin: f64,
    pub tail_pass: bool,
    pub max_residual: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Orbit representatives n₁ ≥ n₂ ≥ n₃ ≥ 0 of ℤ³ \ {0} with |n| ≤ r, and
/// their orbit sizes under signed permutations.
pub fn lattice_orbits(r: f64) -> Vec<([i64; 3], usize)> {
    let nmax = r.floor() as i64;
    let r2 = r * r;
    let mut out = Vec::new();
    for a in 0..=nmax {
        for b in 0..=a {
            for c in 0..=b {
                let n2 = (a * a + b * b + c * c) as f64;
                if n2 == 0.0 || n2 > r2 {
                    continue;
                }
                out.push(([a, b, c], orbit_size(a, b, c)));
            }
        }
    }
    out
}

fn orbit_size(a: i64, b: i64, c: i64) -> usize {
    let nonzero = [a, b, c].iter().filter(|x| **x != 0).count();
    let perms = if a == b && b == c {
        1
    } else if a == b || b == c || a == c {
        3
    } else {
        6
    };
    perms << nonzero
}

/// Orbits with k² ≤ gap + U(s) + b_cap get an exact F₁; elsewhere
/// k² − gap − U(s) − b > 0 already holds for every b < b_cap.
pub const DEFAULT_B_CAP: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub b_cap: f64,
    pub c23_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { b_cap: DEFAULT_B_CAP, c23_samples: 24 }
    }
}

/// Per-s data shared by every b.
#[derive(Debug, Clone)]
pub struct SData {
    pub s: f64,
    pub l_over_ell: f64,
    pub k_split: f64,
    pub f1_bound: f64,
    pub b_cap: f64,
    /// (k, multiplicity, F₁, residual, θ̂²)
    pub exact: Vec<([f64; 3], usize, f64, f64, f64)>,
    pub bounded_orbits: usize,
    pub bounded_momenta: usize,
    /// (k, k²) of the bounded orbit closest to the origin.
    pub bounded_min: Option<([f64; 3], f64)>,
    pub c23: f64,
    pub c_tail: f64,
}

pub fn certify_gap(chi: &BumpProfile, b: f64, s: f64, l_over_ell: f64, k_split: f64) -> Result<GapCertificate> {
    let mut eng = KineticEngine::new(chi);
    let data = prepare_s(&mut eng, chi, s, l_over_ell, k_split, &CertifyOptions::default())?;
    Ok(certify_from(&data, chi, b))
}

/// Evaluates F₁ where the uniform bound is not enough, and the tail constants.
pub fn prepare_s(
    eng: &mut KineticEngine,
    chi: &BumpProfile,
    s: f64,
    l_over_ell: f64,
    k_split: f64,
    opts: &CertifyOptions,
) -> Result<SData> {
    if !(l_over_ell > 2.0) {
        return Err(Error::GeometryViolation(format!("L/ell = {l_over_ell} must exceed 2")));
    }
    if !(s > 0.0) || !(k_split >= 0.5 / s * (1.0 - 1e-12)) {
        return Err(Error::GeometryViolation(format!("k_split = {k_split} must be at least 1/(2s) = {}", 0.5 / s)));
    }
    let dk = 2.0 * PI / l_over_ell;
    let gap = 2.0 * PI * PI / (l_over_ell * l_over_ell);
    eng.ensure_reach(1.0 / s);
    let f1_bound = eng.f1_uniform_bound(s);
    let cut = gap + f1_bound + opts.b_cap;
    let mut ks = Vec::new();
    let mut mult = Vec::new();
    let (mut bounded_orbits, mut bounded_momenta) = (0, 0);
    let mut bounded_min: Option<([f64; 3], f64)> = None;
    for (n, m) in lattice_orbits(k_split / dk) {
        let k = n.map(|x| x as f64 * dk);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 <= cut {
            ks.push(k);
            mult.push(m);
        } else {
            bounded_orbits += 1;
            bounded_momenta += m;
            if bounded_min.is_none_or(|(_, q)| k2 < q) {
                bounded_min = Some((k, k2));
            }
        }
    }
    eng.prepare(&ks);
    let e = &*eng;
    let exact = ks
        .iter()
        .zip(mult)
        .map(|(k, m)| {
            let (i, ii, iii, r) = e.f1_components(k, s)?;
            let th = theta_hat(k);
            Ok((*k, m, i + ii + iii, r, th * th))
        })
        .collect::<Result<_>>()?;
    let c23 = sample_c23(eng, s, dk, k_split, opts.c23_samples)?;
    Ok(SData {
        s,
        l_over_ell,
        k_split,
        f1_bound,
        b_cap: opts.b_cap,
        exact,
        bounded_orbits,
        bounded_momenta,
        bounded_min,
        c23,
        c_tail: 2.0 * chi.grad_sq_integral(),
    })
}

/// 2·sup(|II| + |III|) over lattice momenta just beyond k_split along the
/// axis, face diagonal and body diagonal directions.
fn sample_c23(eng: &mut KineticEngine, s: f64, dk: f64, k_split: f64, samples: usize) -> Result<f64> {
    let dirs: [[f64; 3]; 4] = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [2.0, 1.0, 0.0]];
    let per_dir = (samples / dirs.len()).max(1);
    let mut ks = Vec::new();
    for d in dirs {
        let nd = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let first = (k_split / (dk * nd)).floor() as i64 + 1;
        for j in 0..per_dir as i64 {
            let t = (first + j * first.max(1) / per_dir as i64) as f64;
            ks.push(d.map(|x| x * t * dk));
        }
    }
    eng.prepare(&ks);
    let e = &*eng;
    let vals = par::map_slice(&ks, |k| e.f1_components(k, s).map(|(_, ii, iii, r)| ii.abs() + iii.abs() + r));
    let mut sup: f64 = 0.0;
    for v in vals {
        sup = sup.max(v?);
    }
    Ok(2.0 * sup)
}

/// Certificate for one b from precomputed per-s data.
pub fn certify_from(data: &SData, chi: &BumpProfile, b: f64) -> GapCertificate {
    let gap = 2.0 * PI * PI / (data.l_over_ell * data.l_over_ell);
    let mut rows = Vec::with_capacity(data.exact.len());
    let mut min_margin = f64::INFINITY;
    let mut first: Option<([f64; 3], f64)> = None;
    let mut max_res: f64 = 0.0;
    let mut n_momenta = data.bounded_momenta;
    for &(k, m, f1, r, th2) in &data.exact {
        let f2 = b * (1.0 - th2);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let f = f1 + f2;
        let margin = k2 - gap - f - r;
        if margin <= 0.0 && first.is_none_or(|(_, q)| k2 < q) {
            first = Some((k, k2));
        }
        min_margin = min_margin.min(margin);
        max_res = max_res.max(r);
        n_momenta += m;
        rows.push(MarginRow { k, multiplicity: m, f, f1, f2, residual: r, margin });
    }
    let bounded_margin = match data.bounded_min {
        Some((k, k2)) => {
            let m = k2 - gap - data.f1_bound - b;
            if m <= 0.0 && first.is_none_or(|(_, q)| k2 < q) {
                first = Some((k, k2));
            }
            min_margin = min_margin.min(m);
            Some(m)
        }
        None => None,
    };
    let tail_margin = 1.0 / (8.0 * data.s * data.s) - data.c_tail - data.c23 - b - gap;
    let lattice_pass = first.is_none();
    let tail_pass = tail_margin >= 0.0;
    let mut notes = vec![
        "gap constant 2π²L⁻²".to_string(),
        format!("bump steepness {}", chi.steepness),
    ];
    if data.bounded_orbits > 0 {
        notes.push(format!(
            "{} orbits with k² > gap + U + {}: F₁ replaced by uniform bound U = {:e}",
            data.bounded_orbits,
            data.b_cap,
            data.f1_bound
        ));
    }
    GapCertificate {
        steepness: chi.steepness,
        b,
        s: data.s,
        l_over_ell: data.l_over_ell,
        k_split: data.k_split,
        gap_constant: gap,
        f1_bound: data.f1_bound,
        n_momenta,
        rows,
        bounded_orbits: data.bounded_orbits,
        bounded_min_k2: data.bounded_min.map(|(_, q)| q),
        bounded_margin,
        min_margin: if min_margin.is_finite() { min_margin } else { 0.0 },
        first_violation: first.map(|(k, _)| k),
        lattice_pass,
        beta: BETA,
        c_tail: data.c_tail,
        c23: data.c23,
        tail_margin,
        tail_pass,
        max_residual: max_res,
        pass: lattice_pass && tail_pass,
        notes,
    }
}

impl GapCertificate {
    /// min(min lattice margin, tail margin); positive iff the certificate passes.
    pub fn worst_margin(&self) -> f64 {
        self.min_margin.min(self.tail_margin)
    }
}

/// Best admissible (b, s): largest minimum margin, ties broken by larger b
/// then larger s.
pub fn search_admissible(
    chi: &BumpProfile,
    b_grid: &[f64],
    s_grid: &[f64],
    l_over_ell: f64,
    opts: &CertifyOptions,
) -> Result<(f64, f64, GapCertificate)> {
    if b_grid.is_empty() || s_grid.is_empty() {
        return Err(Error::DomainError("search grids must be non-empty".into()));
    }
    let mut eng = KineticEngine::new(chi);
    let mut best: Option<GapCertificate> = None;
    let mut least: Option<GapCertificate> = None;
    for &s in s_grid {
        let data = prepare_s(&mut eng, chi, s, l_over_ell, 0.5 / s, opts)?;
        for &b in b_grid {
            let cert = certify_from(&data, chi, b);
            if cert.pass {
                let better = match &best {
                    None => true,
                    Some(c) => (cert.min_margin, cert.b, cert.s) > (c.min_margin, c.b, c.s),
                };
                if better {
                    best = Some(cert);
                }
            } else {
                let better = match &least {
                    None => true,
                    Some(c) => cert.worst_margin() > c.worst_margin(),
                };
                if better {
                    least = Some(cert);
                }
            }
        }
    }
    match (best, least) {
        (Some(c), _) => Ok((c.b, c.s, c)),
        (None, Some(c)) => Err(Error::NoAdmissiblePair { b: c.b, s: c.s, margin: c.worst_margin() }),
        (None, None) => unreachable!("grids are non-empty"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_sizes_cover_the_lattice() {
        let r = 4.3;
        let total: usize = lattice_orbits(r).iter().map(|(_, m)| m).sum();
        let mut brute = 0;
        for a in -5i64..=5 {
            for b in -5i64..=5 {
                for c in -5i64..=5 {
                    let n2 = (a * a + b * b + c * c) as f64;
                    if n2 > 0.0 && n2 <= r * r {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(total, brute);
    }

    #[test]
    fn tau_vanishes_inside_ball() {
        assert_eq!(tau(&[1.0, 2.0, 0.0], 0.1, 1.0), 0.0);
        assert!((tau(&[20.0, 0.0, 0.0], 0.1, 1.0) - 300.0).abs() < 1e-12);
        assert_eq!(theta_hat(&[0.0; 3]), 1.0);
    }
}
