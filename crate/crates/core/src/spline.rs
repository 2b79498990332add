//! Natural cubic splines in one and two dimensions.

use crate::error::{Error, Result};

fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations.
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let c = h1 / 6.0;
        let d = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        let denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (d - a * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

#[derive(Debug, Clone)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::domain("spline needs at least two matching abscissae and values"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("spline abscissae must be strictly increasing"));
        }
        let m = natural_second_derivatives(&x, &y);
        Ok(Spline { x, y, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Value, first and second derivative. Beyond the knots the end
    /// segments are extended linearly.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        if t <= self.x[0] || t >= self.x[n - 1] {
            let (i, xe) = if t <= self.x[0] { (0, self.x[0]) } else { (n - 2, self.x[n - 1]) };
            let (v, d, _) = self.segment(i, xe);
            return (v + d * (t - xe), d, 0.0);
        }
        let i = self.x.partition_point(|&s| s <= t) - 1;
        self.segment(i.min(n - 2), t)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    fn segment(&self, i: usize, t: f64) -> (f64, f64, f64) {
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d =
            (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let dd = a * m0 + b * m1;
        (v, d, dd)
    }
}

/// Tensor-product natural bicubic spline on a rectilinear grid.
#[derive(Debug, Clone)]
pub struct Bicubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// One spline along `y` per grid column `x_i`.
    columns: Vec<Spline>,
}

/// Value, gradient and Hessian `[[xx, xy], [xy, yy]]`.
pub type Jet = (f64, [f64; 2], [[f64; 2]; 2]);

impl Bicubic {
    /// `values[i][j]` is the sample at `(xs[i], ys[j])`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: &[Vec<f64>]) -> Result<Self> {
        if xs.len() < 2 || ys.len() < 2 || values.len() != xs.len() {
            return Err(Error::domain("tabulated grid needs at least 2x2 samples matching its axes"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("tabulated x axis must be strictly increasing"));
        }
        let columns = values
            .iter()
            .map(|row| {
                if row.len() != ys.len() {
                    return Err(Error::domain("tabulated row length does not match the y axis"));
                }
                Spline::new(ys.clone(), row.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bicubic { xs, ys, columns })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xs[0] && x <= *self.xs.last().unwrap() && y >= self.ys[0] && y <= *self.ys.last().unwrap()
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().unwrap())
    }

    pub fn eval(&self, x: f64, y: f64) -> Jet {
        let n = self.xs.len();
        let mut f = Vec::with_capacity(n);
        let mut fy = Vec::with_capacity(n);
        let mut fyy = Vec::with_capacity(n);
        for c in &self.columns {
            let (v, d, dd) = c.eval(y);
            f.push(v);
            fy.push(d);
            fyy.push(dd);
        }
        let sx = Spline::new(self.xs.clone(), f).expect("validated axis");
        let sxy = Spline::new(self.xs.clone(), fy).expect("validated axis");
        let syy = Spline::new(self.xs.clone(), fyy).expect("validated axis");
        let (v, vx, vxx) = sx.eval(x);
        let (vy, vxy, _) = sxy.eval(x);
        let vyy = syy.value(x);
        (v, [vx, vy], [[vxx, vxy], [vxy, vyy]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_is_linear_for_linear_data() {
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let s = Spline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.value(*xi) - yi).abs() < 1e-14);
        }
        let (v, d, dd) = s.eval(1.234);
        assert!((v - (2.0 * 1.234 - 1.0)).abs() < 1e-13);
        assert!((d - 2.0).abs() < 1e-13);
        assert!(dd.abs() < 1e-12);
    }

    #[test]
    fn converges_on_smooth_function() {
        let x: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = Spline::new(x, y).unwrap();
        let (v, d, dd) = s.eval(4.321);
        assert!((v - 4.321f64.sin()).abs() < 1e-6);
        assert!((d - 4.321f64.cos()).abs() < 1e-4);
        assert!((dd + 4.321f64.sin()).abs() < 1e-2);
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(Spline::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn bicubic_recovers_bilinear_product() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..9).map(|i| i as f64 * 0.5).collect();
        let vals: Vec<Vec<f64>> = xs.iter().map(|x| ys.iter().map(|y| x * y + x - y).collect()).collect();
        let b = Bicubic::new(xs, ys, &vals).unwrap();
        let (v, g, h) = b.eval(2.3, 1.7);
        assert!((v - (2.3 * 1.7 + 2.3 - 1.7)).abs() < 1e-12);
        assert!((g[0] - 2.7).abs() < 1e-12 && (g[1] - 1.3).abs() < 1e-12);
        assert!((h[0][1] - 1.0).abs() < 1e-12 && h[0][0].abs() < 1e-12 && h[1][1].abs() < 1e-12);
    }
}
