//! Run configuration shared by every suite, read from one TOML file.

use crate::bogoliubov::{BoundConstants, DEFAULT_TAIL_TOL};
use crate::error::{Error, Result};
use crate::fock::{LanczosOptions, DEFAULT_CUTOFF, DEFAULT_MAX_DIM};
use crate::localization::{
    build_bump, BoxGeometry, BumpProfile, GeometryParams, DEFAULT_STEEPNESS, DEFAULT_SUPPORT_MARGIN,
};
use crate::potential::{PotentialSpec, RadialPotential};
use crate::scattering::{solve_scattering, ScatteringSolution};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: Option<String>,
    pub potential: PotentialSpec,
    /// Steepness of the localization bump χ.
    pub steepness: f64,
    pub geometry: Geometry,
    pub tolerances: Tolerances,
    pub scatter: ScatterConfig,
    pub localize: LocalizeConfig,
    pub kinetic: KineticConfig,
    pub bogoliubov: BogoliubovConfig,
    pub potsplit: PotsplitConfig,
    pub ed: EdConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_917,
            out_dir: None,
            potential: PotentialSpec::SquareWell { v0: 2.0, r: 1.0 },
            steepness: DEFAULT_STEEPNESS,
            geometry: Geometry::default(),
            tolerances: Tolerances::default(),
            scatter: ScatterConfig::default(),
            localize: LocalizeConfig::default(),
            kinetic: KineticConfig::default(),
            bogoliubov: BogoliubovConfig::default(),
            potsplit: PotsplitConfig::default(),
            ed: EdConfig::default(),
        }
    }
}

/// Box geometry. Exactly one of `rho_mu` and `rho_a3` sets the density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub rho_mu: Option<f64>,
    pub rho_a3: Option<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "L_over_ell")]
    pub l_over_ell: f64,
    pub s: f64,
    pub b: f64,
    #[serde(rename = "Xi")]
    pub xi: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: Option<f64>,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            rho_mu: None,
            rho_a3: Some(1e-6),
            k: 10.0,
            l_over_ell: 4.0,
            s: 0.01,
            b: 0.1,
            xi: 3.0,
            delta: 0.0,
            epsilon: 0.0,
            kappa: Some(0.4),
        }
    }
}

impl Geometry {
    pub fn rho_mu(&self, a: f64) -> f64 {
        match (self.rho_mu, self.rho_a3) {
            (Some(r), _) => r,
            (None, Some(x)) => x / a.powi(3),
            (None, None) => f64::NAN,
        }
    }

    pub fn params(&self, a: f64) -> GeometryParams {
        GeometryParams {
            rho_mu: self.rho_mu(a),
            k: self.k,
            l_over_ell: self.l_over_ell,
            s: self.s,
            b: self.b,
            xi: self.xi,
            delta: self.delta,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode: f64,
    pub scattering_length: f64,
    pub born: f64,
    pub fourier: f64,
    pub integrals: f64,
    pub sliding: f64,
    pub f_zero: f64,
    pub potsplit: f64,
    pub commutator: f64,
    pub g_omega: f64,
    pub e_main: f64,
    pub c0_stability: f64,
    pub lhy: f64,
    pub lanczos_dense: f64,
    pub counts: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ode: 1e-10,
            scattering_length: 1e-8,
            born: 1e-2,
            fourier: 1e-6,
            integrals: 1e-6,
            sliding: 1e-5,
            f_zero: 1e-10,
            potsplit: 1e-12,
            commutator: 1e-10,
            g_omega: 1e-6,
            e_main: 1e-12,
            c0_stability: 0.05,
            lhy: 1e-6,
            lanczos_dense: 1e-10,
            counts: 1e-10,
        }
    }
}

impl Tolerances {
    fn named(&self) -> [(&'static str, f64); 15] {
        [
            ("ode", self.ode),
            ("scattering_length", self.scattering_length),
            ("born", self.born),
            ("fourier", self.fourier),
            ("integrals", self.integrals),
            ("sliding", self.sliding),
            ("f_zero", self.f_zero),
            ("potsplit", self.potsplit),
            ("commutator", self.commutator),
            ("g_omega", self.g_omega),
            ("e_main", self.e_main),
            ("c0_stability", self.c0_stability),
            ("lhy", self.lhy),
            ("lanczos_dense", self.lanczos_dense),
            ("counts", self.counts),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    pub k_grid: Vec<f64>,
    /// Defaults to 2R.
    pub r_max: Option<f64>,
    /// Depth of the weak square well used for the Born-limit check.
    pub born_v0: f64,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self { k_grid: vec![0.5, 1.0, 2.0, 5.0], r_max: None, born_v0: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizeConfig {
    #[serde(rename = "K")]
    pub k_values: Vec<f64>,
    pub pairs: usize,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        Self { k_values: vec![5.0, 10.0], pairs: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticConfig {
    pub b_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub b_cap: f64,
    pub c23_samples: usize,
}

impl Default for KineticConfig {
    fn default() -> Self {
        Self {
            b_grid: vec![1e-4, 1e-3, 1e-2, 1e-1],
            s_grid: vec![0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001],
            b_cap: 1.0,
            c23_samples: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BogoliubovConfig {
    pub rho_a3: Vec<f64>,
    /// Base quadrature level; the stability check compares it with `refine + 1`.
    pub refine: u32,
    pub tail_tol: f64,
    pub constants: BoundConstants,
}

impl Default for BogoliubovConfig {
    fn default() -> Self {
        Self { rho_a3: vec![1e-6], refine: 0, tail_tol: DEFAULT_TAIL_TOL, constants: BoundConstants::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotsplitConfig {
    /// (N, M) pairs: particle number and lattice points per axis.
    pub cases: Vec<(usize, usize)>,
    pub ell: f64,
    pub rho_mu: f64,
    pub commutator_n: Vec<usize>,
    pub commutator_m: usize,
    pub samples: usize,
    pub max_dim: usize,
}

impl Default for PotsplitConfig {
    fn default() -> Self {
        Self {
            cases: vec![(2, 2), (2, 3), (3, 2)],
            ell: 2.2,
            rho_mu: 0.05,
            commutator_n: vec![1, 2, 3],
            commutator_m: 2,
            samples: 200,
            max_dim: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdConfig {
    pub big_l: f64,
    pub n: usize,
    pub cutoff: i32,
    pub couplings: Vec<f64>,
    pub max_dim: usize,
    /// Particle numbers for the Lanczos-vs-dense comparison.
    pub dense_check_n: Vec<usize>,
    pub perturbation_coupling: f64,
    pub lanczos: LanczosOptions,
}

impl Default for EdConfig {
    fn default() -> Self {
        Self {
            big_l: 10.0,
            n: 6,
            cutoff: DEFAULT_CUTOFF,
            couplings: vec![1.0, 0.5, 0.25],
            max_dim: DEFAULT_MAX_DIM,
            dense_check_n: vec![2, 3, 4],
            perturbation_coupling: 5e-4,
            lanczos: LanczosOptions::default(),
        }
    }
}

/// Potential, scattering solution, bump and box geometry, resolved once.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub pot: RadialPotential,
    pub sol: ScatteringSolution,
    pub chi: BumpProfile,
    pub geom: BoxGeometry,
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(other.to_string()),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks that need no numerics.
    pub fn validate(&self) -> Result<()> {
        for (name, t) in self.tolerances.named() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("tolerance `{name}` = {t} must be positive")));
            }
        }
        let g = &self.geometry;
        match (g.rho_mu, g.rho_a3) {
            (Some(_), Some(_)) => return Err(Error::Config("set only one of geometry.rho_mu and geometry.rho_a3".into())),
            (None, None) => return Err(Error::Config("geometry needs rho_mu or rho_a3".into())),
            (Some(x), None) | (None, Some(x)) if !(x.is_finite() && x > 0.0) => {
                return Err(Error::Config(format!("density {x} must be positive")))
            }
            _ => {}
        }
        if !(g.xi >= 3.0) {
            return Err(Error::Config(format!("particle-group parameter Xi = {} violates Xi >= 3", g.xi)));
        }
        if !(g.l_over_ell > 2.0) {
            return Err(Error::Config(format!(
                "box condition 2 ell < L violated: L/ell = {}",
                g.l_over_ell
            )));
        }
        if !(g.k > 1.0) {
            return Err(Error::Config(format!("K = {} must exceed 1", g.k)));
        }
        if !(g.s > 0.0 && g.b > 0.0) {
            return Err(Error::Config(format!("s = {} and b = {} must be positive", g.s, g.b)));
        }
        if let Some(k) = g.kappa {
            if !(k > 0.0 && k < 2.0 / 3.0) {
                return Err(Error::Config(format!("scaling exponent kappa = {k} outside (0, 2/3)")));
            }
        }
        if !(self.steepness > 0.0) {
            return Err(Error::Config(format!("steepness = {} must be positive", self.steepness)));
        }
        if let Some(n) = self.ed.couplings.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::Config(format!("coupling {n} must be non-negative")));
        }
        if self.potsplit.cases.iter().any(|&(n, m)| n == 0 || m < 2) {
            return Err(Error::Config("potsplit cases need N >= 1 and M >= 2".into()));
        }
        Ok(())
    }

    /// Non-empty sweep lists for the suite about to run.
    pub fn validate_for(&self, suite: &str) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::Config(format!("`{name}` must not be empty for suite {suite}")))
            } else {
                Ok(())
            }
        };
        let all = suite == "all";
        if all || suite == "scatter" {
            empty("scatter.k_grid", self.scatter.k_grid.len())?;
        }
        if all || suite == "localize" {
            empty("localize.K", self.localize.k_values.len())?;
        }
        if all || suite == "kinetic-cert" {
            empty("kinetic.b_grid", self.kinetic.b_grid.len())?;
            empty("kinetic.s_grid", self.kinetic.s_grid.len())?;
        }
        if all || suite == "bogoliubov" {
            empty("bogoliubov.rho_a3", self.bogoliubov.rho_a3.len())?;
        }
        if all || suite == "potsplit-check" {
            empty("potsplit.cases", self.potsplit.cases.len())?;
            empty("potsplit.commutator_n", self.potsplit.commutator_n.len())?;
        }
        if all || suite == "ed" {
            empty("ed.couplings", self.ed.couplings.len())?;
        }
        Ok(())
    }

    /// Solves the scattering problem and builds the box; support and
    /// geometry violations come back as configuration errors.
    pub fn resolve(&self) -> Result<Resolved> {
        let pot = self.potential.build().map_err(cfg_err)?;
        let r = pot.support_radius();
        let sol = solve_scattering(&pot, self.scatter.r_max.unwrap_or(2.0 * r), self.tolerances.ode)?;
        let chi = build_bump(self.steepness).map_err(cfg_err)?;
        let geom = self.geometry_for(&sol, r, self.geometry.k, self.geometry.rho_mu(sol.a))?;
        Ok(Resolved { pot, sol, chi, geom })
    }

    pub fn geometry_for(&self, sol: &ScatteringSolution, r: f64, k: f64, rho_mu: f64) -> Result<BoxGeometry> {
        let mut p = self.geometry.params(sol.a);
        p.k = k;
        p.rho_mu = rho_mu;
        let ell = (rho_mu * sol.a).powf(-0.5) / k;
        if !(r < DEFAULT_SUPPORT_MARGIN * ell) {
            return Err(Error::Config(format!(
                "support condition R < ell/2 violated: R = {r}, ell = {ell} (K = {k})"
            )));
        }
        BoxGeometry::new(&p, sol.a, r).map_err(cfg_err)
    }
}
