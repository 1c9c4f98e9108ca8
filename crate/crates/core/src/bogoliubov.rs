//! Per-box energy lower bound: the Bogoliubov integral for the quadratic
//! symbol (A, Ŵ₁), the condensate term A₀, the energy budget
//! E_Main + E_gap + E_error and the particle grouping, plus the LHY reference
//! energy and the depletion bound on the torus.
//!
//! Unnamed constants of the error terms are inputs ([`BoundConstants`]); every
//! budget row carries the realized values.

use crate::error::{Error, Result};
use crate::fourier::{momentum_grid, RadialTransform};
use crate::localization::{BoxGeometry, LocalizedPotentials};
use crate::par;
use crate::scattering::ScatteringSolution;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// 128/(15√π).
pub fn lhy_constant() -> f64 {
    128.0 / (15.0 * PI.sqrt())
}

/// c with 1 − √(1−x) ≤ x/2 + c·x² on [0, 1/4], attained at x = 1/4.
pub fn expansion_constant() -> f64 {
    14.0 - 8.0 * 3f64.sqrt()
}

const START_P: f64 = 32.0;
const MAX_DOUBLINGS: u32 = 12;

/// (2π)⁻³∫ĝ²/(2p²)dp against ∫gω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GOmegaIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_residual: f64,
    pub p_max: f64,
    pub tail_bound: f64,
}

/// Raises p_max until the tail bound D²/(12π²P³) is below tol·∫gω/10.
pub fn g_omega_identity(sol: &ScatteringSolution, tol: f64) -> Result<GOmegaIdentity> {
    let rhs = sol.integral_g_omega()?;
    let r = sol.support_radius();
    let interior = sol.potential().breakpoints();
    let mut p_max = START_P / r;
    for _ in 0..MAX_DOUBLINGS {
        let t = RadialTransform::new(|x| sol.g(x), r, &interior, p_max, 0);
        let d = t.decay_constant();
        let tail = d * d / (12.0 * PI * PI * p_max.powi(3));
        if tail <= 0.1 * tol * rhs.abs() {
            let (p, w) = momentum_grid(r, p_max, &[], 0);
            let vals = par::map_range(p.len(), |i| {
                let g = t.eval(p[i]);
                w[i] * g * g / (2.0 * p[i] * p[i])
            });
            let lhs = par::sum_range(vals.len(), |i| vals[i]);
            return Ok(GOmegaIdentity { lhs, rhs, relative_residual: (lhs - rhs).abs() / rhs.abs(), p_max, tail_bound: tail });
        }
        p_max *= 2.0;
    }
    Err(Error::TailNotConverged(format!("ĝ² tail above {tol:e} at p_max = {p_max}")))
}

/// Ŵ₁ of the direction-averaged W₁ on a radial momentum grid, shared by every
/// particle number n.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    pub ell: f64,
    pub s: f64,
    pub p_max: f64,
    /// D with |Ŵ₁(p)| ≤ D/p².
    pub decay: f64,
    pub w1_zero: f64,
    /// Bound on |Ŵ₁ − Ŵ₁(direction-averaged)| from the spread of 1/(χ∗χ).
    pub anisotropy: f64,
    p: Vec<f64>,
    w: Vec<f64>,
    w1: Vec<f64>,
}

const OCTANT_NODES: usize = 8;

impl SymbolTable {
    pub fn from_transform(t: &RadialTransform, ell: f64, s: f64, anisotropy: f64, refine: u32) -> Self {
        let pc = 1.0 / (s * ell);
        let kinks: Vec<f64> = [pc, 2f64.sqrt() * pc].into_iter().filter(|x| *x < t.p_max()).collect();
        let (p, w) = momentum_grid(t.support(), t.p_max(), &kinks, refine);
        let w1 = par::map_slice(&p, |x| t.eval(*x));
        Self { ell, s, p_max: t.p_max(), decay: t.decay_constant(), w1_zero: t.at_zero(), anisotropy, p, w, w1 }
    }

    /// W₁(r) = g(r)·⟨1/(χ∗χ)(rω/ℓ)⟩ over directions ω (octant Gauss rule).
    pub fn for_box(lp: &LocalizedPotentials, s: f64, p_max: f64, refine: u32) -> Self {
        let ell = lp.ell();
        let rr = lp.support();
        let gl = crate::quadrature::GaussLegendre::new(OCTANT_NODES);
        let dirs: Vec<([f64; 3], f64)> = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .filter(|(c, _)| **c > 0.0)
            .flat_map(|(c, wc)| {
                let st = (1.0 - c * c).sqrt();
                (0..OCTANT_NODES).map(move |j| {
                    let ph = 0.5 * PI * (j as f64 + 0.5) / OCTANT_NODES as f64;
                    ([st * ph.cos(), st * ph.sin(), *c], *wc)
                })
            })
            .collect();
        let wsum: f64 = dirs.iter().map(|d| d.1).sum();
        let inv = |r: f64, d: &[f64; 3]| 1.0 / lp.chi.chi_conv(&[r * d[0] / ell, r * d[1] / ell, r * d[2] / ell]);
        let mean = |r: f64| dirs.iter().map(|(d, w)| w * inv(r, d)).sum::<f64>() / wsum;
        let t = RadialTransform::new(|r| lp.sol.g(r) * mean(r), rr, &lp.sol.potential().breakpoints(), p_max, refine);
        let diag = 1.0 / 3f64.sqrt();
        let spread = (inv(rr, &[diag, diag, diag]) - inv(rr, &[1.0, 0.0, 0.0])).abs();
        let g_abs = lp.sol.integrate_ball(|r| lp.sol.g(r).abs()).map(|e| e.value).unwrap_or(f64::NAN);
        Self::from_transform(&t, ell, s, spread * g_abs, refine)
    }

    /// Doubles p_max until the tail of the n_max bound is below tol relative.
    pub fn adaptive_for_box(lp: &LocalizedPotentials, s: f64, n_max: f64, tol: f64, refine: u32) -> Result<Self> {
        let pc = 1.0 / (s * lp.ell());
        let mut p_max = (START_P / lp.support()).max(4.0 * pc);
        for _ in 0..MAX_DOUBLINGS {
            let t = Self::for_box(lp, s, p_max, refine);
            let b = bogoliubov_integral(&QuadraticSymbol::new(&t, n_max.max(1.0))?)?;
            if b.tail_bound <= tol * b.bound.abs().max(f64::MIN_POSITIVE) {
                return Ok(t);
            }
            p_max *= 2.0;
        }
        Err(Error::TailNotConverged(format!("Bogoliubov tail above {tol:e} at p_max = {p_max}")))
    }

    pub fn nodes(&self) -> usize {
        self.p.len()
    }
}

/// A(p) = (ℓ³/(n+1))τ(p) + 2Ŵ₁(0) paired with Ŵ₁ for one particle number.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticSymbol<'a> {
    pub table: &'a SymbolTable,
    pub n: f64,
}

impl<'a> QuadraticSymbol<'a> {
    pub fn new(table: &'a SymbolTable, n: f64) -> Result<Self> {
        if !(n >= 0.0) || !(table.w1_zero >= 0.0) {
            return Err(Error::DomainError(format!("n = {n} and Ŵ₁(0) = {} must be non-negative", table.w1_zero)));
        }
        Ok(Self { table, n })
    }

    /// ℓ³/(n+1).
    pub fn lambda(&self) -> f64 {
        self.table.ell.powi(3) / (self.n + 1.0)
    }

    pub fn tau(&self, p: f64) -> f64 {
        let pc = 1.0 / (self.table.s * self.table.ell);
        (p * p - pc * pc).max(0.0)
    }

    pub fn a(&self, p: f64) -> f64 {
        self.lambda() * self.tau(p) + 2.0 * self.table.w1_zero
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovTerms {
    pub n: f64,
    /// (2π)⁻³∫[A − √(A² − Ŵ₁²)] dp
    pub integral: f64,
    /// −(n/2)·integral, the lower bound from completing the square.
    pub bound: f64,
    pub i: f64,
    pub ii: f64,
    /// c·n(2π)⁻³∫Ŵ₁(0)⁴/(2A³) with c from [`expansion_constant`].
    pub remainder_bound: f64,
    /// Bound on the part of `bound` beyond p_max.
    pub tail_bound: f64,
    pub p_max: f64,
    pub nodes: usize,
    /// max over nodes of (A − √(A²−Ŵ₁²) − 4εA)₊/(Ŵ₁²/A); at most 1.
    pub max_pointwise_ratio: f64,
    pub pointwise_ok: bool,
    /// A² − Ŵ₁² ≥ 0 and |Ŵ₁| ≤ Ŵ₁(0) at every node.
    pub symbol_ok: bool,
}

pub fn bogoliubov_integral(sym: &QuadraticSymbol) -> Result<BogoliubovTerms> {
    let t = sym.table;
    let n = sym.n;
    let lam = sym.lambda();
    let w0 = t.w1_zero;
    let pc = 1.0 / (t.s * t.ell);
    if t.p_max * t.p_max < 2.0 * pc * pc {
        return Err(Error::TailNotConverged(format!("p_max = {} below √2·p_c = {}", t.p_max, 2f64.sqrt() * pc)));
    }
    let rows = par::map_range(t.p.len(), |k| {
        let (p, w, wp) = (t.p[k], t.w[k], t.w1[k]);
        let a = sym.a(p);
        let disc = a * a - wp * wp;
        let sq = disc.max(0.0).sqrt();
        if wp == 0.0 {
            let rem = if w0 == 0.0 { 0.0 } else { w * w0.powi(4) / (2.0 * a.powi(3)) };
            return [0.0, 0.0, 0.0, rem, 0.0, if disc >= 0.0 { 0.0 } else { 1.0 }];
        }
        let val = wp * wp / (a + sq);
        // a − sq loses all digits once Ŵ₁ ≪ A, so allow rounding at the scale of A
        let direct = a - sq;
        let slack = 4.0 * f64::EPSILON * a;
        let ratio = (direct - slack).max(0.0) / (wp * wp / a);
        let ok = disc >= 0.0 && wp.abs() <= w0 * (1.0 + 1e-12);
        [
            w * val,
            w * wp * wp / (2.0 * p * p),
            w * (wp * wp / (2.0 * a) - wp * wp / (2.0 * lam * p * p)),
            w * w0.powi(4) / (2.0 * a.powi(3)),
            ratio,
            if ok { 0.0 } else { 1.0 },
        ]
    });
    let col = |j: usize| par::sum_range(rows.len(), |k| rows[k][j]);
    let integral = col(0);
    let i = -n * (n + 1.0) / (2.0 * t.ell.powi(3)) * col(1);
    let ii = -0.5 * n * col(2);
    let remainder_bound = expansion_constant() * n * col(3);
    let max_ratio = rows.iter().map(|r| r[4]).fold(0.0, f64::max);
    let symbol_ok = rows.iter().all(|r| r[5] == 0.0);
    let p3 = 3.0 * t.p_max.powi(3);
    let d2 = t.decay * t.decay;
    // beyond p_max: A ≥ λp²/2 and |Ŵ₁| ≤ D/p²
    let tail_integral = if n == 0.0 { 0.0 } else { d2 / (PI * PI * lam * p3) };
    Ok(BogoliubovTerms {
        n,
        integral,
        bound: -0.5 * n * integral,
        i,
        ii,
        remainder_bound,
        tail_bound: 0.5 * n * tail_integral,
        p_max: t.p_max,
        nodes: t.p.len(),
        max_pointwise_ratio: max_ratio,
        pointwise_ok: max_ratio <= 1.0,
        symbol_ok,
    })
}

/// ∬w₁ and ∬w₂ from the localization module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalIntegrals {
    pub w1: f64,
    pub w2: f64,
}

impl LocalIntegrals {
    pub fn compute(lp: &LocalizedPotentials, refine: u32) -> Self {
        let (panels, theta) = (4 << refine, 8 << refine);
        Self { w1: lp.double_integral_w1(panels, theta), w2: lp.double_integral_w2(panels, theta) }
    }
}

/// A₀ = n₀(n₀−1)/(2ℓ⁶)∬w₂ − (ρ_μn₀/ℓ³ + ¼(ρ_μ − (n₀−1)/ℓ³)²)∬w₁.
pub fn compute_a0(n0: f64, n: f64, geom: &BoxGeometry, ints: &LocalIntegrals) -> Result<f64> {
    if !(0.0 <= n0 && n0 <= n) {
        return Err(Error::DomainError(format!("need 0 ≤ n0 ≤ n, got n0 = {n0}, n = {n}")));
    }
    let l3 = geom.ell.powi(3);
    let rho = geom.rho_mu;
    let d = rho - (n0 - 1.0) / l3;
    Ok(n0 * (n0 - 1.0) / (2.0 * l3 * l3) * ints.w2 - (rho * n0 / l3 + 0.25 * d * d) * ints.w1)
}

/// E_Main(n) = −4πaρ_μ²ℓ³ + 2π(a/ℓ³)(ρ_μℓ³ − n)².
pub fn e_main(a: f64, rho: f64, ell: f64, n: f64) -> f64 {
    let l3 = ell.powi(3);
    let d = rho * l3 - n;
    -4.0 * PI * a * rho * rho * l3 + 2.0 * PI * a / l3 * d * d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub sizes: Vec<u64>,
    /// The last group is below Ξρℓ³ (only the upper bound applies to it).
    pub last_below_minimum: bool,
}

/// Groups with sizes in [Ξρℓ³, (Ξ+1)ρℓ³] except the last, which is only
/// bounded above. Even split into ⌈M/⌊hi⌋⌉ groups, larger first; greedy
/// ⌊hi⌋-sized groups if that split violates the lower bound.
pub fn partition_particles(m: u64, xi: f64, rho_ell3: f64) -> Result<Partition> {
    if !(xi >= 3.0) || !(rho_ell3 >= 1.0) {
        return Err(Error::DomainError(format!("need Xi ≥ 3 and rho·ell³ ≥ 1, got {xi}, {rho_ell3}")));
    }
    let lo = xi * rho_ell3;
    let hi = (xi + 1.0) * rho_ell3;
    let hi_i = hi.floor() as u64;
    if m == 0 {
        return Ok(Partition { sizes: vec![], last_below_minimum: false });
    }
    let groups = m.div_ceil(hi_i);
    let q = m / groups;
    let extra = m % groups;
    let even: Vec<u64> = (0..groups).map(|j| q + u64::from(j < extra)).collect();
    let sizes = if even.iter().all(|s| *s as f64 >= lo) {
        even
    } else {
        let mut v = vec![hi_i; (m / hi_i) as usize];
        if m % hi_i > 0 {
            v.push(m % hi_i);
        }
        v
    };
    let last_below_minimum = (*sizes.last().unwrap() as f64) < lo;
    Ok(Partition { sizes, last_below_minimum })
}

/// Constants of the unquantified error terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConstants {
    /// C in −Ca(ρ_μ + nℓ⁻³)(n₊ + 1) of the interaction estimate.
    pub c_interaction: f64,
    /// C in the gap coefficient bℓ⁻² − Ca((n+1)/ℓ³ + ρ_μ).
    pub c_gap: f64,
    /// C in the −Caρ_μ term of E_error.
    pub c_error: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self { c_interaction: 1.0, c_gap: 1.0, c_error: 1.0 }
    }
}

/// One row of the per-box budget, for particle number n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub n: f64,
    pub e_main: f64,
    pub a0: f64,
    pub bogoliubov: BogoliubovTerms,
    /// −c_int·a(ρ_μ + nℓ⁻³) − c_err·aρ_μ
    pub constant_terms: f64,
    /// total − E_Main
    pub e_error: f64,
    pub e_gap_coeff: f64,
    /// e_gap_coeff ≥ b/(2ℓ²)
    pub gap_dominates: bool,
    pub total: f64,
}

/// Inputs shared by every n in one box.
#[derive(Debug, Clone)]
pub struct BoxContext {
    pub geom: BoxGeometry,
    pub b: f64,
    pub s: f64,
    pub constants: BoundConstants,
    pub integrals: LocalIntegrals,
    pub symbol: SymbolTable,
    pub integral_g_omega: f64,
    pub refine: u32,
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

impl BoxContext {
    pub fn new(lp: &LocalizedPotentials, b: f64, s: f64, constants: BoundConstants, refine: u32) -> Result<Self> {
        if !(b > 0.0 && s > 0.0) {
            return Err(Error::DomainError(format!("b = {b} and s = {s} must be positive")));
        }
        let geom = lp.geom;
        let n_max = ((geom.xi + 1.0) * geom.filling()).floor();
        let symbol = SymbolTable::adaptive_for_box(lp, s, n_max, DEFAULT_TAIL_TOL, refine)?;
        Ok(Self {
            geom,
            b,
            s,
            constants,
            integrals: LocalIntegrals::compute(lp, refine),
            symbol,
            integral_g_omega: lp.sol.integral_g_omega()?,
            refine,
        })
    }

    /// ⌊(Ξ+1)ρ_μℓ³⌋.
    pub fn n_max(&self) -> u64 {
        ((self.geom.xi + 1.0) * self.geom.filling()).floor() as u64
    }
}

/// Budget for an n-particle group: H_n ≥ A₀(n) − (n/2)(2π)⁻³∫(A − √(A²−Ŵ₁²))
/// + constant terms, valid when the gap coefficient is non-negative.
pub fn assemble_box_bound(ctx: &BoxContext, n: u64) -> Result<EnergyBudget> {
    let g = &ctx.geom;
    let nf = n as f64;
    let l3 = g.ell.powi(3);
    let a = g.a;
    let rho = g.rho_mu;
    let c = &ctx.constants;
    let e_gap_coeff = ctx.b / (g.ell * g.ell) - c.c_gap * a * ((nf + 1.0) / l3 + rho);
    if e_gap_coeff < 0.0 {
        return Err(Error::GapNotDominating(format!(
            "gap coefficient {e_gap_coeff:e} < 0 at n = {n}, K = {}; increase K or b",
            g.k
        )));
    }
    let bog = bogoliubov_integral(&QuadraticSymbol::new(&ctx.symbol, nf)?)?;
    let a0 = compute_a0(nf, nf, g, &ctx.integrals)?;
    let constant_terms = -c.c_interaction * a * (rho + nf / l3) - c.c_error * a * rho;
    let total = a0 + bog.bound + constant_terms;
    let em = e_main(a, rho, g.ell, nf);
    Ok(EnergyBudget {
        n: nf,
        e_main: em,
        a0,
        bogoliubov: bog,
        constant_terms,
        e_error: total - em,
        e_gap_coeff,
        gap_dominates: e_gap_coeff >= ctx.b / (2.0 * g.ell * g.ell),
        total,
    })
}

/// Lower bound on the whole Fock space of one box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBound {
    pub rows: Vec<EnergyBudget>,
    pub min_total: f64,
    pub argmin_n: f64,
    /// −4πρ_μ²aℓ³
    pub leading: f64,
    /// C₀ with min_total = −4πρ_μ²aℓ³ − C₀ρ_μ²aℓ³(ρ_μa³)^{1/2}
    pub c0: f64,
    /// Every n ∈ [Ξρ_μℓ³, (Ξ+1)ρ_μℓ³] has total ≥ 0, so full groups can be dropped.
    pub full_groups_nonnegative: bool,
    pub gap_dominates: bool,
    pub notes: Vec<String>,
}

pub fn box_lower_bound(ctx: &BoxContext) -> Result<BoxBound> {
    let g = &ctx.geom;
    let rows = (0..=ctx.n_max()).map(|n| assemble_box_bound(ctx, n)).collect::<Result<Vec<_>>>()?;
    let best = rows.iter().min_by(|x, y| x.total.total_cmp(&y.total)).expect("n = 0 row");
    let l3 = g.ell.powi(3);
    let leading = -4.0 * PI * g.rho_mu * g.rho_mu * g.a * l3;
    let scale = g.rho_mu * g.rho_mu * g.a * l3 * g.rho_a3().sqrt();
    let lo = g.xi * g.filling();
    let full_groups_nonnegative = rows.iter().filter(|r| r.n >= lo).all(|r| r.total >= 0.0);
    let mut notes = vec![format!(
        "constants c_interaction = {}, c_gap = {}, c_error = {}",
        ctx.constants.c_interaction, ctx.constants.c_gap, ctx.constants.c_error
    )];
    notes.push(format!(
        "Ŵ₁ from the direction-averaged W₁; anisotropy bound {:e} against Ŵ₁(0) = {:e}",
        ctx.symbol.anisotropy, ctx.symbol.w1_zero
    ));
    if !full_groups_nonnegative {
        notes.push("some full group has a negative bound; ρ_μa³ is not small enough for this K".into());
    }
    Ok(BoxBound {
        min_total: best.total,
        argmin_n: best.n,
        leading,
        c0: -(best.total - leading) / scale,
        full_groups_nonnegative,
        gap_dominates: rows.iter().all(|r| r.gap_dominates),
        notes,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LhyPrediction {
    pub rho: f64,
    pub a: f64,
    pub leading: f64,
    pub correction: f64,
    pub e_per_particle: f64,
}

/// e/N = 4πaρ(1 + (128/(15√π))√(ρa³)).
pub fn lhy_energy(rho: f64, a: f64) -> Result<LhyPrediction> {
    let x = rho * a.powi(3);
    if !(rho > 0.0 && a > 0.0) || !(x < 1.0) {
        return Err(Error::DilutenessViolation(format!("rho·a³ = {x} must lie in (0, 1)")));
    }
    let leading = 4.0 * PI * a * rho;
    let correction = leading * lhy_constant() * x.sqrt();
    Ok(LhyPrediction { rho, a, leading, correction, e_per_particle: leading + correction })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepletionInputs {
    /// ⟨H⟩/N − 4πaρ for the state.
    pub energy_excess_per_particle: f64,
    /// Certified lower bound on ⟨H̃⟩/N.
    pub lower_bound_per_particle: f64,
    pub big_l: f64,
    pub n: f64,
    pub rho: f64,
    pub a: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepletionBound {
    /// ⟨n₊⟩/N ≤ (⟨H⟩ − lb(H̃))L²/(2π²N)
    pub fraction_bound: f64,
    /// C in C·ρaL²(ρa³)^{1/2−ε}, equal to (C_E + C₀(ρa³)^ε)/(2π²).
    pub constant: f64,
    pub excess_constant: f64,
    pub lower_bound_constant: f64,
    /// δ with L = (ρa)^{−1/2}(ρa³)^{−δ}
    pub delta: f64,
    pub complete_condensation: bool,
}

pub fn depletion_bound(inp: &DepletionInputs) -> Result<DepletionBound> {
    let DepletionInputs { energy_excess_per_particle: ex, lower_bound_per_particle: lb, big_l, n, rho, a, epsilon } = *inp;
    if !(big_l > 0.0 && n > 0.0 && rho > 0.0 && a > 0.0) || !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::InconsistentInputs("L, N, ρ, a must be positive and ε ∈ [0, 1/2]".into()));
    }
    if (n - rho * big_l.powi(3)).abs() > 1e-9 * n {
        return Err(Error::InconsistentInputs(format!("N = {n} differs from ρL³ = {}", rho * big_l.powi(3))));
    }
    let x = rho * a.powi(3);
    if !(x < 1.0) {
        return Err(Error::InconsistentInputs(format!("ρa³ = {x} is not dilute")));
    }
    let leading = 4.0 * PI * a * rho;
    let gap = 2.0 * PI * PI / (big_l * big_l);
    let fraction = (leading + ex - lb) / gap;
    if fraction < -1e-12 * leading / gap {
        return Err(Error::InconsistentInputs(format!("lower bound {lb} exceeds the assumed energy {}", leading + ex)));
    }
    let unit = a * rho * x.powf(0.5 - epsilon);
    let excess_constant = ex / unit;
    let lower_bound_constant = (leading - lb) / (a * rho * x.sqrt());
    let delta = -(big_l * (rho * a).sqrt()).ln() / x.ln();
    Ok(DepletionBound {
        fraction_bound: fraction.max(0.0),
        constant: (excess_constant + lower_bound_constant * x.powf(epsilon)) / (2.0 * PI * PI),
        excess_constant,
        lower_bound_constant,
        delta,
        complete_condensation: 2.0 * delta + epsilon < 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_constant_is_tight_at_quarter() {
        let x: f64 = 0.25;
        let lhs = 1.0 - (1.0 - x).sqrt() - x / 2.0;
        assert!((lhs - expansion_constant() * x * x).abs() < 1e-15);
        for j in 1..100 {
            let x = 0.25 * j as f64 / 100.0;
            assert!(1.0 - (1.0 - x).sqrt() <= x / 2.0 + expansion_constant() * x * x + 1e-16);
        }
    }

    #[test]
    fn partition_example() {
        let p = partition_particles(10, 3.0, 1.0).unwrap();
        assert_eq!(p.sizes, vec![4, 3, 3]);
        assert!(!p.last_below_minimum);
        assert!(partition_particles(0, 3.0, 1.0).unwrap().sizes.is_empty());
        let p = partition_particles(2, 3.0, 1.0).unwrap();
        assert_eq!(p.sizes, vec![2]);
        assert!(p.last_below_minimum);
    }
}
