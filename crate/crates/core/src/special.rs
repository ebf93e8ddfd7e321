//! Exponentially scaled modified Bessel function `I₀(w)e^{−w}` for complex
//! arguments with `Re w ≥ 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// `I₀(w)·e^{−w}`. Arguments with negative real part are reflected first,
/// so the result is `I₀(w)·e^{−w'}` with `w' = ±w`, `Re w' ≥ 0`; use
/// [`i0_scaled_arg`] to learn which sign was used.
pub fn i0_scaled(w: Complex64) -> Complex64 {
    i0_scaled_arg(w).1
}

/// Returns `(w', I₀(w')e^{−w'})` with `w' = ±w` chosen so that `Re w' ≥ 0`.
pub fn i0_scaled_arg(w: Complex64) -> (Complex64, Complex64) {
    let w = if w.re < 0.0 { -w } else { w };
    let v = if w.re >= 18.0 {
        asymptotic(w)
    } else if w.norm() <= 17.0 && w.im.abs() <= 4.0 {
        series(w)
    } else {
        trapezoid(w)
    };
    (w, v)
}

fn series(w: Complex64) -> Complex64 {
    let q = w * w * 0.25;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term = term * q / (kf * kf);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum * (-w).exp()
}

fn asymptotic(w: Complex64) -> Complex64 {
    let inv = w.inv();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut prev = f64::INFINITY;
    for k in 1..100 {
        let odd = (2 * k - 1) as f64;
        term = term * inv * (odd * odd / (8.0 * k as f64));
        let t = term.norm();
        if t > prev {
            break;
        }
        sum += term;
        prev = t;
        if t <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum / (2.0 * PI * w).sqrt()
}

/// `(1/π)∫₀^π e^{w(cos θ − 1)} dθ` by the trapezoid rule, which is
/// spectrally accurate for this periodic integrand.
fn trapezoid(w: Complex64) -> Complex64 {
    let n = (1.6 * w.norm()).ceil() as usize + 24;
    let h = PI / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..=n {
        let th = j as f64 * h;
        let f = (w * (th.cos() - 1.0)).exp();
        sum += if j == 0 || j == n { f * 0.5 } else { f };
    }
    sum * h / PI
}
