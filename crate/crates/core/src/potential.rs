//! Compactly supported, non-negative radial potentials.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PotentialKind {
    SquareWell { v0: f64 },
    /// Piecewise linear through `(r, v)` nodes, zero beyond the support.
    Tabulated { r: Vec<f64>, v: Vec<f64> },
    Callable { label: String, f: Callable },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SquareWell { v0 } => write!(f, "SquareWell {{ v0: {v0} }}"),
            Self::Tabulated { r, .. } => write!(f, "Tabulated {{ nodes: {} }}", r.len()),
            Self::Callable { label, .. } => write!(f, "Callable({label})"),
        }
    }
}

/// Serializable description, as used in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    SquareWell {
        v0: f64,
        #[serde(rename = "R")]
        r: f64,
    },
    Table {
        path: String,
    },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<RadialPotential> {
        match self {
            Self::SquareWell { v0, r } => RadialPotential::square_well(*v0, *r),
            Self::Table { path } => RadialPotential::load_table(path),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialPotential {
    kind: PotentialKind,
    support: f64,
}

const VALIDATION_SAMPLES: usize = 2048;

impl RadialPotential {
    pub fn square_well(v0: f64, radius: f64) -> Result<Self> {
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(Error::InvalidPotential(format!("square well depth {v0} must be positive")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidPotential(format!("support radius {radius} must be positive")));
        }
        Ok(Self { kind: PotentialKind::SquareWell { v0 }, support: radius })
    }

    /// Linear interpolation through the table; `v` vanishes past `support`.
    pub fn tabulated(r: Vec<f64>, v: Vec<f64>, support: f64) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(Error::InvalidPotential("table needs at least two (r, v) rows".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential("table radii must be increasing and non-negative".into()));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidPotential(format!("table value {x} is negative or not finite")));
        }
        if !(support.is_finite() && support > 0.0) {
            return Err(Error::InvalidPotential(format!("support radius {support} must be positive")));
        }
        if r.iter().zip(&v).any(|(ri, vi)| *ri > support && *vi != 0.0) {
            return Err(Error::InvalidPotential("table has nonzero values beyond R".into()));
        }
        if v.iter().all(|x| *x == 0.0) {
            return Err(Error::InvalidPotential("potential vanishes identically".into()));
        }
        Ok(Self { kind: PotentialKind::Tabulated { r, v }, support })
    }

    /// Arbitrary finite profile on `[0, support]`. Validated on a sample grid.
    pub fn from_fn<F>(label: impl Into<String>, support: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support.is_finite() && support > 0.0) {
            return Err(Error::InvalidPotential(format!("support radius {support} must be positive")));
        }
        let mut any = false;
        for i in 0..=VALIDATION_SAMPLES {
            let r = support * i as f64 / VALIDATION_SAMPLES as f64;
            let x = f(r);
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidPotential(format!("v({r}) = {x} is negative or not finite")));
            }
            any |= x > 0.0;
        }
        if !any {
            return Err(Error::InvalidPotential("potential vanishes on every sample".into()));
        }
        Ok(Self {
            kind: PotentialKind::Callable { label: label.into(), f: Arc::new(f) },
            support,
        })
    }

    /// Two-column text table with a `# R=<value>` header line.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut support = None;
        let (mut r, mut v) = (Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                if let Some(val) = h.trim().strip_prefix("R=") {
                    support = Some(val.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidPotential(format!("bad R header on line {}: {e}", lineno + 1))
                    })?);
                }
                continue;
            }
            let cols: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidPotential(format!("line {}: {e}", lineno + 1)))?;
            if cols.len() != 2 {
                return Err(Error::InvalidPotential(format!("line {}: expected two columns", lineno + 1)));
            }
            r.push(cols[0]);
            v.push(cols[1]);
        }
        let support = support.ok_or_else(|| Error::InvalidPotential("missing `# R=<value>` header".into()))?;
        Self::tabulated(r, v, support)
    }

    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_table(&std::fs::read_to_string(path)?)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn support_radius(&self) -> f64 {
        self.support
    }

    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if r > self.support {
            return 0.0;
        }
        match &self.kind {
            PotentialKind::SquareWell { v0 } => *v0,
            PotentialKind::Tabulated { r: rs, v } => {
                if r <= rs[0] {
                    return v[0];
                }
                let n = rs.len();
                if r >= rs[n - 1] {
                    return v[n - 1];
                }
                let i = rs.partition_point(|x| *x <= r) - 1;
                let t = (r - rs[i]) / (rs[i + 1] - rs[i]);
                v[i] + t * (v[i + 1] - v[i])
            }
            PotentialKind::Callable { f, .. } => f(r),
        }
    }

    /// Radii in `(0, R)` where the profile may have a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Tabulated { r, .. } => {
                r.iter().copied().filter(|x| *x > 0.0 && *x < self.support).collect()
            }
            _ => Vec::new(),
        }
    }

    /// `λ⁻² v(r/λ)`, whose scattering length is `λ a`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let kind = match &self.kind {
            PotentialKind::SquareWell { v0 } => PotentialKind::SquareWell { v0: v0 / (lambda * lambda) },
            PotentialKind::Tabulated { r, v } => PotentialKind::Tabulated {
                r: r.iter().map(|x| x * lambda).collect(),
                v: v.iter().map(|x| x / (lambda * lambda)).collect(),
            },
            PotentialKind::Callable { label, f } => {
                let f = f.clone();
                PotentialKind::Callable {
                    label: format!("{label} scaled by {lambda}"),
                    f: Arc::new(move |r| f(r / lambda) / (lambda * lambda)),
                }
            }
        };
        Self { kind, support: self.support * lambda }
    }

    /// Multiplies the profile by `factor > 0`.
    pub fn with_coupling(&self, factor: f64) -> Self {
        let kind = match &self.kind {
            PotentialKind::SquareWell { v0 } => PotentialKind::SquareWell { v0: v0 * factor },
            PotentialKind::Tabulated { r, v } => PotentialKind::Tabulated {
                r: r.clone(),
                v: v.iter().map(|x| x * factor).collect(),
            },
            PotentialKind::Callable { label, f } => {
                let f = f.clone();
                PotentialKind::Callable {
                    label: format!("{label} x {factor}"),
                    f: Arc::new(move |r| factor * f(r)),
                }
            }
        };
        Self { kind, support: self.support }
    }

    /// Short identifier used to tie a scattering solution to its potential.
    pub fn fingerprint(&self) -> String {
        let samples: Vec<String> = (0..=8)
            .map(|i| format!("{:.15e}", self.value(self.support * i as f64 / 8.0)))
            .collect();
        format!("R={:.15e};{}", self.support, samples.join(","))
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            PotentialKind::SquareWell { v0 } => format!("square-well v0={v0} R={}", self.support),
            PotentialKind::Tabulated { r, .. } => format!("table ({} rows) R={}", r.len(), self.support),
            PotentialKind::Callable { label, .. } => format!("{label} R={}", self.support),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let p = RadialPotential::parse_table("# R=1.5\n0 2\n1 1\n1.5 0\n").unwrap();
        assert_eq!(p.support_radius(), 1.5);
        assert!((p.value(0.5) - 1.5).abs() < 1e-15);
        assert_eq!(p.value(2.0), 0.0);
        assert_eq!(p.breakpoints(), vec![1.0]);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(RadialPotential::square_well(-1.0, 1.0).is_err());
        assert!(RadialPotential::parse_table("0 1\n1 0\n").is_err());
        assert!(RadialPotential::parse_table("# R=1\n0 -1\n1 0\n").is_err());
        assert!(RadialPotential::from_fn("zero", 1.0, |_| 0.0).is_err());
        assert!(RadialPotential::from_fn("neg", 1.0, |r| r - 0.5).is_err());
    }

    #[test]
    fn spec_parses_from_toml() {
        #[derive(Deserialize)]
        struct W {
            potential: PotentialSpec,
        }
        let w: W = toml::from_str(r#"potential = { kind = "square-well", v0 = 2.0, R = 1.0 }"#).unwrap();
        assert_eq!(w.potential, PotentialSpec::SquareWell { v0: 2.0, r: 1.0 });
    }
}
