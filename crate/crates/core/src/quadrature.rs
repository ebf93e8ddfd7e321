//! Small quadrature helpers: Gauss–Legendre rules, first-kind Chebyshev
//! points with Fejér weights, and barycentric interpolation on them.

use std::f64::consts::PI;

/// A 1-D rule on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Nodes and weights affinely mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (m + h * x, h * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre rule with `n` points (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
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
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
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

/// First-kind Chebyshev points `cos((2j+1)π/(2n))`, descending, with Fejér
/// (first rule) weights on `[-1, 1]`.
pub fn chebyshev_fejer(n: usize) -> Rule {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let th = (2 * j + 1) as f64 * PI / (2 * n) as f64;
        nodes.push(th.cos());
        let mut s = 0.0;
        for k in 1..=n / 2 {
            let kf = k as f64;
            s += (2.0 * kf * th).cos() / (4.0 * kf * kf - 1.0);
        }
        weights.push(2.0 / n as f64 * (1.0 - 2.0 * s));
    }
    Rule { nodes, weights }
}

/// Barycentric weights for the first-kind Chebyshev points of [`chebyshev_fejer`].
pub fn chebyshev_barycentric_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let th = (2 * j + 1) as f64 * PI / (2 * n) as f64;
            let s = th.sin();
            if j % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Barycentric interpolation coefficients at `x` for nodes `xs` with weights `bw`.
/// Writes normalised coefficients into `out` (they sum to one).
pub fn barycentric_coefficients(xs: &[f64], bw: &[f64], x: f64, out: &mut [f64]) {
    for (j, &xj) in xs.iter().enumerate() {
        if x == xj {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[j] = 1.0;
            return;
        }
    }
    let mut total = 0.0;
    for j in 0..xs.len() {
        let c = bw[j] / (x - xs[j]);
        out[j] = c;
        total += c;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Least-squares slope of `ln y` against `ln x`. `None` if any value is not
/// strictly positive or fewer than two points are given.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return None;
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 12, 33] {
            let r = gauss_legendre(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let q: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn fejer_integrates_polynomials() {
        let r = chebyshev_fejer(16);
        for deg in 0..16 {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let q: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(x, w)| w * x.powi(deg))
                .sum();
            assert!((q - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn barycentric_reproduces_polynomial() {
        let n = 12;
        let r = chebyshev_fejer(n);
        let bw = chebyshev_barycentric_weights(n);
        let f = |x: f64| 3.0 * x.powi(7) - x.powi(2) + 0.5;
        let vals: Vec<f64> = r.nodes.iter().map(|&x| f(x)).collect();
        let mut c = vec![0.0; n];
        for x in [-0.93, -0.1, 0.0, 0.41, 0.999] {
            barycentric_coefficients(&r.nodes, &bw, x, &mut c);
            let v: f64 = c.iter().zip(&vals).map(|(a, b)| a * b).sum();
            assert!((v - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.7)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 1.7).abs() < 1e-12);
        assert!(log_log_slope(&xs, &[0.0, 1.0, 1.0, 1.0]).is_none());
    }
}
