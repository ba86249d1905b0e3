//! Small quadrature helpers shared by the hydrostatics and resistance code.

use std::f64::consts::PI;

/// Trapezoidal weights for an ordered, possibly non-uniform abscissa list.
pub fn trapezoid_weights(coords: &[f64]) -> Vec<f64> {
    let n = coords.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = coords[k + 1] - coords[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    w
}

/// Trapezoidal integral of `values` sampled at `coords`.
pub fn trapezoid(coords: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(coords.len(), values.len());
    coords
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Nodes are returned in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels of
/// `order` nodes each. Nodes ascend.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (ti, wi) in t.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (ti + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is the exactness limit for 8 nodes
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_large_order_is_stable() {
        let (x, w) = gauss_legendre(512);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
        let cos_int: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert!((cos_int - 2.0 * 3.0f64.sin() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn composite_rule_matches_exponential() {
        let (x, w) = composite_gauss_legendre(0.0, 2.0, 16, 8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((v - (2.0f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_exact_on_linear() {
        let xs = [0.0, 0.1, 0.5, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&xs, &ys) - 2.5).abs() < 1e-15);
        let w = trapezoid_weights(&xs);
        let v: f64 = w.iter().zip(&ys).map(|(a, b)| a * b).sum();
        assert!((v - 2.5).abs() < 1e-15);
    }
}
