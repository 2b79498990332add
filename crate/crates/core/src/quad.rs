//! Quadrature rules: adaptive Gauss–Kronrod (7/15) and fixed 5-point
//! Gauss–Legendre.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const GL5_X: [f64; 5] = [-0.906179845938664, -0.5384693101056831, 0.0, 0.5384693101056831, 0.906179845938664];
const GL5_W: [f64; 5] =
    [0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891];

/// Values the quadrature rules can accumulate.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

fn kronrod<T: Integrand, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron = kron + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` to absolute
/// tolerance `tol` (interval bisection, depth-limited).
pub fn adaptive<T: Integrand, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64, tol: f64) -> T {
    if a == b {
        return T::zero();
    }
    fn recurse<T: Integrand, F: FnMut(f64) -> T>(
        f: &mut F,
        a: f64,
        b: f64,
        whole: T,
        err: f64,
        tol: f64,
        depth: u32,
    ) -> T {
        if err <= tol || depth == 0 {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (left, el) = kronrod(f, a, m);
        let (right, er) = kronrod(f, m, b);
        recurse(f, a, m, left, el, 0.5 * tol, depth - 1) + recurse(f, m, b, right, er, 0.5 * tol, depth - 1)
    }
    let (whole, err) = kronrod(&mut f, a, b);
    recurse(&mut f, a, b, whole, err, tol, 40)
}

/// Five-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre5<T: Integrand, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64) -> T {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = T::zero();
    for (x, w) in GL5_X.iter().zip(GL5_W) {
        acc = acc + f(c + h * x) * w;
    }
    acc * h
}

/// Composite trapezoid rule on a uniform grid with spacing `dx`.
pub fn trapezoid<T: Integrand>(values: &[T], dx: f64) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner = values[1..n - 1].iter().fold(T::zero(), |acc, &v| acc + v);
            (inner + (values[0] + values[n - 1]) * 0.5) * dx
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_oscillatory_function() {
        let v = adaptive(|x: f64| (10.0 * x).sin(), 0.0, 3.0, 1e-13);
        let exact = (1.0 - 30f64.cos()) / 10.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn complex_integrand() {
        let v = adaptive(|x: f64| Complex64::new(0.0, x).exp(), 0.0, 1.0, 1e-13);
        let exact = (Complex64::new(0.0, 1.0).exp() - 1.0) / Complex64::new(0.0, 1.0);
        assert!((v - exact).norm() < 1e-12);
    }

    #[test]
    fn gauss_legendre_exact_for_degree_nine() {
        let v = gauss_legendre5(|x: f64| x.powi(9) + x.powi(8), -1.0, 2.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + (2f64.powi(9) + 1.0) / 9.0;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive(|x: f64| x, 1.0, 1.0, 1e-10), 0.0);
    }
}
