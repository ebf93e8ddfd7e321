//! Property tests for the invariants of the geometry, bracket, solver
//! constants, Fourier inversion and serialisation layers.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use faddeev_core::cauchy::{bracket_uncut, AmplitudeField, AmplitudeSource, FieldError};
use faddeev_core::geometry::{
    from_chart, im_k_norm, k_from_lambda, lambda_from_k, to_chart, variety_residuals, Frame, Hemisphere,
    RegionParams, Vec3,
};
use faddeev_core::grid::{GridSpec, LambdaGrid, MomentumGrid};
use faddeev_core::pipeline::{RegionConfig, RunConfig};
use faddeev_core::recon::{compare_norm, inverse_fourier};
use faddeev_core::scatter::{PotentialModel, ScatteringData};
use faddeev_core::solver::{c8, check_feasibility, eta, field_norm, r_min, ConstantsTable, SolverConfig};
use faddeev_core::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_spec() -> GridSpec {
    GridSpec {
        n_shells: 3,
        n_polar: 2,
        n_azimuth: 4,
        n_boundary: 8,
        n_rings: 3,
        n_ring_angles: 4,
        n_phi: 8,
        ..GridSpec::default()
    }
}

fn cz(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn direction() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, 0.0f64..2.0 * PI).prop_map(|(c, a)| {
        let s = (1.0 - c * c).sqrt();
        Vec3::new(s * a.cos(), s * a.sin(), c)
    })
}

fn lambda() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -PI..PI).prop_map(|(e, a)| Complex64::from_polar(10f64.powf(e), a))
}

/// `a·e^{−s|p|²}/(1+|λ|)`; smooth and bounded on the whole variety.
struct Bump {
    a: Complex64,
    s: f64,
}

impl AmplitudeSource for Bump {
    fn eval(&self, lambda: Complex64, frame: &Frame) -> Result<Complex64, FieldError> {
        Ok(self.a * (-self.s * frame.p_norm * frame.p_norm).exp() / (1.0 + lambda.norm()))
    }
}

struct Sum<'a>(&'a Bump, &'a Bump, Complex64);

impl AmplitudeSource for Sum<'_> {
    fn eval(&self, lambda: Complex64, frame: &Frame) -> Result<Complex64, FieldError> {
        Ok(self.2 * self.0.eval(lambda, frame)? + self.1.eval(lambda, frame)?)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn chart_round_trip(hemi in prop_oneof![Just(Hemisphere::Plus), Just(Hemisphere::Minus)],
                        r in 1e-6f64..0.999, a in -PI..PI) {
        let u = Complex64::from_polar(r, a);
        let (h, v) = to_chart(from_chart(hemi, u));
        prop_assert_eq!(h, hemi);
        prop_assert!((v - u).norm() <= 1e-14 * r.max(1e-300) + 1e-15 * r);
    }

    #[test]
    fn variety_and_lambda_round_trip(dir in direction(), pn in 1e-4f64..20.0, lam in lambda()) {
        let params = RegionParams::new(E.powi(4), 0.1).unwrap();
        let p = dir * pn;
        prop_assume!(!params.in_cone(p));
        let frame = params.frame(p).unwrap();
        let k = k_from_lambda(lam, &frame).unwrap();
        let (r1, r2) = variety_residuals(k, p);
        prop_assert!(r1 <= 1e-12 && r2 <= 1e-12, "{} {}", r1, r2);
        let want = im_k_norm(lam, pn);
        prop_assert!((k.im().norm() - want).abs() <= 1e-12 * want);
        prop_assert!((k.re().norm() - want).abs() <= 1e-12 * want);
        let back = lambda_from_k(k, &frame).unwrap();
        prop_assert!((back - lam).norm() <= 1e-12 * lam.norm());
    }

    #[test]
    fn bracket_is_bilinear(a1 in -1.0f64..1.0, a2 in -1.0f64..1.0, s1 in 0.1f64..2.0, s2 in 0.1f64..2.0,
                           alpha_re in -2.0f64..2.0, alpha_im in -2.0f64..2.0, lam in lambda()) {
        let frame = RegionParams::new(20.0, 0.1).unwrap().frame(Vec3::new(0.7, 0.3, 0.4)).unwrap();
        let u = Bump { a: cz(a1, 0.3), s: s1 };
        let v = Bump { a: cz(0.2, a2), s: s2 };
        let w = Bump { a: cz(1.0, -0.5), s: 0.5 };
        let alpha = cz(alpha_re, alpha_im);
        let lhs = bracket_uncut(&Sum(&u, &v, alpha), &w, lam, &frame, 16).unwrap().value;
        let rhs = alpha * bracket_uncut(&u, &w, lam, &frame, 16).unwrap().value
            + bracket_uncut(&v, &w, lam, &frame, 16).unwrap().value;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm() + rhs.norm()));
        let lhs2 = bracket_uncut(&w, &Sum(&u, &v, alpha), lam, &frame, 16).unwrap().value;
        let rhs2 = alpha * bracket_uncut(&w, &u, lam, &frame, 16).unwrap().value
            + bracket_uncut(&w, &v, lam, &frame, 16).unwrap().value;
        prop_assert!((lhs2 - rhs2).norm() <= 1e-12 * (1.0 + lhs2.norm() + rhs2.norm()));
    }

    #[test]
    fn eta_decreases_past_e_squared(c in 1e-4f64..1.0, rho in E * E..1e4, f in 1.01f64..4.0) {
        let k = ConstantsTable::default();
        prop_assert!(eta(c, rho * f, 4.0, &k) < eta(c, rho, 4.0, &k));
    }

    #[test]
    fn c8_is_monotone(tau in 0.01f64..0.5, rho in 1.0f64..1e4, f in 1.01f64..4.0) {
        let k = ConstantsTable::default();
        prop_assert!(c8(4.0, tau, rho * f, &k) < c8(4.0, tau, rho, &k));
        prop_assert!(c8(4.0, tau * f, rho, &k) > c8(4.0, tau, rho, &k));
    }

    #[test]
    fn r_min_exceeds_twice_c(c in 0.0f64..0.05, tau in 0.01f64..0.5, rho in 10.0f64..1e4) {
        let k = ConstantsTable::default();
        if let Ok(r) = r_min(4.0, 2.0, tau, rho, c, &k) {
            prop_assert!(r >= 2.0 * c);
        }
    }

    #[test]
    fn feasibility_survives_halving_tau_and_doubling_rho(c in 0.0f64..0.05, tau in 0.005f64..0.2,
                                                           rho in E * E..1e4) {
        let cfg = SolverConfig::default();
        let k = ConstantsTable::default();
        if check_feasibility(&cfg, c, tau, rho, &k).feasible() {
            prop_assert!(check_feasibility(&cfg, c, tau / 2.0, 2.0 * rho, &k).feasible());
        }
    }

    #[test]
    fn compare_norm_triangle(seed in any::<u64>(), mu0 in 0.0f64..4.0) {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let grid = MomentumGrid::new(&params, &small_spec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<Complex64> {
            (0..grid.len()).map(|_| cz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        };
        let (b, c) = (draw(), draw());
        let truth = |p: Vec3| cz((-p.norm2()).exp(), 0.1 * p.x);
        let ab = compare_norm(truth, &b, &grid, mu0).unwrap();
        let ac = compare_norm(truth, &c, &grid, mu0).unwrap();
        // ‖b − c‖ through a lookup of b as the "truth".
        let lookup = |p: Vec3| b[grid.find(p).unwrap()];
        let bc = compare_norm(lookup, &c, &grid, mu0).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(compare_norm(lookup, &b, &grid, mu0).unwrap() == 0.0);
    }

    #[test]
    fn inverse_fourier_is_linear_and_real_on_hermitian_data(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let grid = MomentumGrid::new(&params, &small_spec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<Complex64> =
            (0..grid.len()).map(|_| cz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let herm: Vec<Complex64> = (0..grid.len()).map(|i| 0.5 * (raw[i] + raw[grid.antipode(i)].conj())).collect();
        let other: Vec<Complex64> = raw.iter().map(|z| z * cz(0.0, 1.0)).collect();
        let points = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.3, -0.7, 1.1), Vec3::new(-2.0, 0.5, 0.25)];
        let v = inverse_fourier(&herm, &grid, &points).unwrap();
        let scale: f64 = grid.nodes.iter().map(|n| n.weight).sum();
        for z in &v {
            prop_assert!(z.im.abs() <= 1e-12 * scale, "{}", z);
        }
        let mix: Vec<Complex64> = herm.iter().zip(&other).map(|(a, b)| alpha * a + b).collect();
        let lhs = inverse_fourier(&mix, &grid, &points).unwrap();
        let w = inverse_fourier(&other, &grid, &points).unwrap();
        for i in 0..points.len() {
            prop_assert!((lhs[i] - (alpha * v[i] + w[i])).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn field_norm_is_absolutely_homogeneous(seed in any::<u64>(), a_re in -3.0f64..3.0, a_im in -3.0f64..3.0,
                                            mu0 in 0.0f64..4.0) {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let spec = small_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = AmplitudeField::from_fn(
            &params,
            Arc::new(MomentumGrid::new(&params, &spec).unwrap()),
            LambdaGrid::new(&spec),
            |_, _, _, _, _| cz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        );
        let alpha = cz(a_re, a_im);
        let n = field_norm(&field, mu0).unwrap();
        let m = field_norm(&field.scaled(alpha), mu0).unwrap();
        prop_assert!((m - alpha.norm() * n).abs() <= 1e-12 * (1.0 + m));
        let sum = field.combine(cz(1.0, 0.0), &field.scaled(alpha), cz(1.0, 0.0));
        prop_assert!(field_norm(&sum, mu0).unwrap() <= n + m + 1e-12);
    }

    #[test]
    fn data_table_round_trip_is_bit_exact(seed in any::<u64>(), rho in 10.0f64..200.0, tau in 0.05f64..0.3) {
        let params = RegionParams::new(rho, tau).unwrap();
        let data = ScatteringData::zeros(&params, &small_spec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = data.map(|_, _, _, _| {
            cz(rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-300..300)), rng.random_range(-1e-5..1e-5))
        });
        let text = data.to_table();
        let back = ScatteringData::from_table(&text).unwrap();
        prop_assert_eq!(back.to_table(), text);
        for (a, b) in data.values.iter().zip(&back.values) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn config_round_trip(rho in 8.0f64..500.0, tau in 0.01f64..0.5, amp in -1.0f64..1.0, width in 0.1f64..3.0,
                         workers in proptest::option::of(1usize..16)) {
        let cfg = RunConfig {
            workers,
            potential: PotentialModel::gaussian(amp, width),
            region: RegionConfig { rho, tau, ..RegionConfig::default() },
            ..RunConfig::default()
        };
        prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
