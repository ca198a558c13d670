//! Oracle tests for the adaptive quadrature module. Expected values come from
//! closed-form antiderivatives or brute-force grids, never from the
//! implementation under test.

use mis_core::quadrature::{integrate, inverse_cdf, Interval, QuadratureConfig};
use mis_core::Error;
use std::f64::consts::PI;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn example_domain() -> Interval {
    Interval::new(3.0 / (2.0 * PI), PI).unwrap()
}

fn assert_close(actual: f64, expected: f64, rel: f64) {
    let tol = rel * expected.abs().max(1e-300);
    assert!(
        (actual - expected).abs() <= tol,
        "actual {actual} vs expected {expected} (rel err {:.3e})",
        (actual - expected).abs() / expected.abs()
    );
}

#[test]
fn identity_integrand_matches_closed_form() {
    // closed form: (hi^2 - lo^2) / 2, about 4.82082 on this domain
    let d = example_domain();
    let expected = (d.hi() * d.hi() - d.lo() * d.lo()) / 2.0;
    let got = integrate(|x| x, d, &cfg()).unwrap();
    assert_close(got, expected, 1e-12);
    assert_close(got, 4.82082, 1e-5);
}

#[test]
fn shifted_quadratic_matches_closed_form() {
    // closed form: (hi^3 - lo^3)/3 - (hi^2 - lo^2)/(2 pi), about 8.76463
    let d = example_domain();
    let cube = (d.hi().powi(3) - d.lo().powi(3)) / 3.0;
    let square = (d.hi() * d.hi() - d.lo() * d.lo()) / (2.0 * PI);
    let got = integrate(|x| x * x - x / PI, d, &cfg()).unwrap();
    assert_close(got, cube - square, 1e-12);
    assert_close(got, 8.76463, 1e-5);
}

#[test]
fn sine_matches_closed_form() {
    // closed form: cos(lo) - cos(hi), about 1.88816
    let d = example_domain();
    let got = integrate(f64::sin, d, &cfg()).unwrap();
    assert_close(got, d.lo().cos() - d.hi().cos(), 1e-12);
    assert_close(got, 1.88816, 1e-5);
}

#[test]
fn zero_integrand_is_zero() {
    let got = integrate(|_| 0.0, example_domain(), &cfg()).unwrap();
    assert_eq!(got, 0.0);
}

#[test]
fn high_degree_polynomial_is_exact() {
    // A single 15-point panel is exact through degree 29.
    let d = Interval::new(-1.0, 2.0).unwrap();
    let expected = (2.0f64.powi(30) - (-1.0f64).powi(30)) / 30.0;
    let got = integrate(|x| x.powi(29), d, &cfg()).unwrap();
    assert_close(got, expected, 1e-13);
}

#[test]
fn integrable_endpoint_singularity_converges() {
    // integral of 1/sqrt(x) over [0,1] = 2; the pole sits at the endpoint
    // where f64 spacing is dense, so refinement resolves it
    let d = Interval::new(0.0, 1.0).unwrap();
    let got = integrate(|x| 1.0 / x.sqrt(), d, &cfg()).unwrap();
    assert_close(got, 2.0, 1e-7);
}

#[test]
fn oscillatory_integrand_converges() {
    // integral of sin(40 x) over [0, pi] = (1 - cos(40 pi)) / 40 = 0;
    // use sin(41 x): (1 - cos(41 pi)) / 41 = 2/41
    let d = Interval::new(0.0, PI).unwrap();
    let got = integrate(|x| (41.0 * x).sin(), d, &cfg()).unwrap();
    assert_close(got, 2.0 / 41.0, 1e-9);
}

#[test]
fn non_finite_integrand_is_reported() {
    let d = Interval::new(-1.0, 1.0).unwrap();
    let err = integrate(|x| x.sqrt(), d, &cfg()).unwrap_err();
    assert!(matches!(err, Error::NonFiniteIntegrand { .. }), "got {err:?}");
}

#[test]
fn exhausted_subdivision_budget_is_reported() {
    let tight = QuadratureConfig {
        rel_tol: 1e-15,
        abs_tol: 1e-300,
        max_subdivisions: 2,
    };
    let d = Interval::new(0.0, 1.0).unwrap();
    let err = integrate(|x| 1.0 / (1.0 - x).sqrt(), d, &tight).unwrap_err();
    assert!(matches!(err, Error::NonConvergence { .. }), "got {err:?}");
}

#[test]
fn interval_rejects_degenerate_bounds() {
    assert!(Interval::new(1.0, 1.0).is_err());
    assert!(Interval::new(2.0, 1.0).is_err());
    assert!(Interval::new(f64::NEG_INFINITY, 1.0).is_err());
    assert!(Interval::new(0.0, f64::NAN).is_err());
}

#[test]
fn inverse_cdf_uniform_midpoint() {
    let d = Interval::new(0.0, 1.0).unwrap();
    let x = inverse_cdf(|_| 1.0, d, 0.5, &cfg()).unwrap();
    assert_close(x, 0.5, 1e-9);
}

#[test]
fn inverse_cdf_endpoints() {
    let d = example_domain();
    let norm = (d.hi() * d.hi() - d.lo() * d.lo()) / 2.0;
    let pdf = move |x: f64| x / norm;
    assert_eq!(inverse_cdf(pdf, d, 0.0, &cfg()).unwrap(), d.lo());
    assert_eq!(inverse_cdf(pdf, d, 1.0, &cfg()).unwrap(), d.hi());
}

#[test]
fn inverse_cdf_sine_matches_dense_grid_oracle() {
    // Brute-force oracle: tabulate the CDF of pdf = sin(x)/norm on a 1e6-point
    // grid, invert by linear interpolation, and compare.
    let d = example_domain();
    let norm = d.lo().cos() - d.hi().cos();
    let pdf = move |x: f64| x.sin() / norm;

    let m = 1_000_000usize;
    let h = (d.hi() - d.lo()) / m as f64;
    let mut cdf = Vec::with_capacity(m + 1);
    cdf.push(0.0f64);
    let mut acc = 0.0;
    for k in 0..m {
        let a = d.lo() + k as f64 * h;
        acc += 0.5 * (pdf(a) + pdf(a + h)) * h;
        cdf.push(acc);
    }
    let u = 0.7;
    let j = cdf.partition_point(|&c| c < u);
    let (c0, c1) = (cdf[j - 1], cdf[j]);
    let oracle = d.lo() + ((j - 1) as f64 + (u - c0) / (c1 - c0)) * h;

    let got = inverse_cdf(pdf, d, u, &cfg()).unwrap();
    assert_close(got, oracle, 1e-6);

    // closed form for the same inversion: arccos(cos(lo) - u * norm)
    let exact = (d.lo().cos() - u * norm).acos();
    assert_close(got, exact, 1e-9);
}

#[test]
fn inverse_cdf_rejects_unnormalized_density() {
    let d = Interval::new(0.0, 1.0).unwrap();
    let err = inverse_cdf(|_| 2.0, d, 0.5, &cfg()).unwrap_err();
    assert!(matches!(err, Error::NotNormalized { .. }), "got {err:?}");
}

#[test]
fn inverse_cdf_is_monotone_in_u() {
    let d = example_domain();
    let norm = d.lo().cos() - d.hi().cos();
    let pdf = move |x: f64| x.sin() / norm;
    let mut prev = d.lo();
    for k in 0..=40 {
        let u = k as f64 / 40.0;
        let x = inverse_cdf(pdf, d, u, &cfg()).unwrap();
        assert!(
            x >= prev - 1e-9 * (d.hi() - d.lo()),
            "u = {u}: x = {x} < previous {prev}"
        );
        prev = x;
    }
}

#[test]
fn linearity_of_integration() {
    let d = Interval::new(-2.0, 3.0).unwrap();
    let g = |x: f64| 3.0 * x * x - x;
    let h = |x: f64| x.cos() + 0.5 * x;
    let (a, b) = (1.75, -0.6);
    let lhs = integrate(move |x| a * g(x) + b * h(x), d, &cfg()).unwrap();
    let rhs = a * integrate(g, d, &cfg()).unwrap() + b * integrate(h, d, &cfg()).unwrap();
    assert_close(lhs, rhs, 1e-9);
}
