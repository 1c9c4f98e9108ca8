//! Uniform-grid tables with local Lagrange interpolation.

use crate::par;

#[derive(Debug, Clone)]
pub struct UniformTable {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    order: usize,
    denom: Vec<f64>,
}

impl UniformTable {
    /// Samples `f` at `intervals + 1` equispaced nodes on `[x0, x1]`.
    pub fn build<F>(x0: f64, x1: f64, intervals: usize, order: usize, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let h = (x1 - x0) / intervals as f64;
        let y = par::map_range(intervals + 1, |i| f(x0 + i as f64 * h));
        Self::from_values(x0, h, y, order)
    }

    pub fn from_values(x0: f64, h: f64, y: Vec<f64>, order: usize) -> Self {
        let order = order.clamp(2, y.len());
        let mut denom = vec![0.0; order];
        for (j, d) in denom.iter_mut().enumerate() {
            let mut p = 1.0;
            for m in 0..order {
                if m != j {
                    p *= j as f64 - m as f64;
                }
            }
            *d = p;
        }
        Self { x0, h, y, order, denom }
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.y.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.h;
        let n = self.y.len();
        let half = self.order / 2;
        let start = (t.floor() as isize - half as isize + 1).clamp(0, (n - self.order) as isize) as usize;
        let s = t - start as f64;
        let mut prod = 1.0;
        for m in 0..self.order {
            let d = s - m as f64;
            if d == 0.0 {
                return self.y[start + m];
            }
            prod *= d;
        }
        let mut acc = 0.0;
        for j in 0..self.order {
            acc += self.y[start + j] / ((s - j as f64) * self.denom[j]);
        }
        acc * prod
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function() {
        let t = UniformTable::build(0.0, 2.0, 200, 8, f64::sin);
        for x in [0.0, 0.0031, 0.77, 1.999, 2.0] {
            assert!((t.eval(x) - x.sin()).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn exact_on_low_degree_polynomials() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(5);
        let t = UniformTable::build(-1.0, 1.0, 7, 8, p);
        assert!((t.eval(0.123) - p(0.123)).abs() < 1e-13);
    }
}
