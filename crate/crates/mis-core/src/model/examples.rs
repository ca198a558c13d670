//! The built-in example problems.
//!
//! Five one-dimensional problems exercise the estimator family. The first
//! four share the domain `[3/(2π), π]` and the techniques
//!
//! * `p1(x) ∝ x`,
//! * `p2(x) ∝ x² − x/π`,
//! * `p3(x) ∝ sin x`,
//!
//! with per-sample costs `(1, 6.24, 3.28)`, and differ in the integrand:
//!
//! 1. `f(x) = x (x² − x/π) sin x` — each technique captures one factor;
//! 2. `f(x) = (x² − x/π) sin² x` — a product shared by two techniques;
//! 3. `f(x) = x + (x² − x/π) + sin x` — a sum of the three shapes;
//! 4. `f(x) = 30 p1(x) + 30 p2(x) + 40 p3(x)` — proportional to the
//!    mixture at coefficients `(0.3, 0.3, 0.4)`, so the combined estimator
//!    has zero variance there and the integral is exactly 100.
//!
//! Example 5 integrates `f(x) = √x + sin x` on `[1/100, π/2]` with the two
//! techniques `p1(x) ∝ 2 − x` and `p2(x) ∝ sin² x` at equal unit costs.
//!
//! All normalization constants come from closed-form antiderivatives
//! evaluated in double precision, and every sampler inverts its CDF either
//! in closed form or by a safeguarded Newton iteration on the closed-form
//! antiderivative, so constructing a problem performs no quadrature.

use std::f64::consts::PI;

use super::{Problem, Technique};
use crate::error::{Error, Result};
use crate::quadrature::Interval;

/// Builds one of the five built-in example problems (`id` in `1..=5`).
pub fn example_problem(id: u32) -> Result<Problem> {
    match id {
        1 => {
            let (domain, techniques) = shared_techniques()?;
            Problem::new(
                "example-1",
                domain,
                |x: f64| x * (x * x - x / PI) * x.sin(),
                techniques,
                Some(10.287570131573922),
            )
        }
        2 => {
            let (domain, techniques) = shared_techniques()?;
            Problem::new(
                "example-2",
                domain,
                |x: f64| (x * x - x / PI) * x.sin() * x.sin(),
                techniques,
                Some(3.596147593765877),
            )
        }
        3 => {
            let (domain, techniques) = shared_techniques()?;
            Problem::new(
                "example-3",
                domain,
                |x: f64| x + (x * x - x / PI) + x.sin(),
                techniques,
                Some(15.473607862427448),
            )
        }
        4 => {
            let (domain, techniques) = shared_techniques()?;
            let parts: Vec<(Technique, f64)> =
                techniques.iter().cloned().zip([30.0, 30.0, 40.0]).collect();
            Problem::new(
                "example-4",
                domain,
                move |x: f64| parts.iter().map(|(t, w)| w * t.pdf(x)).sum(),
                techniques,
                Some(100.0),
            )
        }
        5 => {
            let domain = Interval::new(0.01, PI / 2.0)?;
            let (a, b) = (domain.lo(), domain.hi());

            // ∫ (2 - x) dx = 2x - x²/2
            let ramp_lo = 2.0 * a - a * a / 2.0;
            let ramp_mass = (2.0 * b - b * b / 2.0) - ramp_lo;
            let ramp = Technique::new(
                "2-x",
                1.0,
                move |x: f64| {
                    if x < a || x > b {
                        0.0
                    } else {
                        (2.0 - x) / ramp_mass
                    }
                },
                move |u: f64| {
                    let radicand = (2.0 - a) * (2.0 - a) - 2.0 * u * ramp_mass;
                    (2.0 - radicand.max(0.0).sqrt()).clamp(a, b)
                },
            )?;

            // ∫ sin² x dx = x/2 - sin(2x)/4
            let sinsq_cdf = move |x: f64| x / 2.0 - (2.0 * x).sin() / 4.0;
            let sinsq_lo = sinsq_cdf(a);
            let sinsq_mass = sinsq_cdf(b) - sinsq_lo;
            let sinsq = Technique::new(
                "sin^2",
                1.0,
                move |x: f64| {
                    if x < a || x > b {
                        0.0
                    } else {
                        x.sin() * x.sin() / sinsq_mass
                    }
                },
                move |u: f64| {
                    let target = sinsq_lo + u * sinsq_mass;
                    invert_increasing(target, a, b, sinsq_cdf, |x| x.sin() * x.sin())
                },
            )?;

            Problem::new(
                "example-5",
                domain,
                |x: f64| x.sqrt() + x.sin(),
                vec![ramp, sinsq],
                Some(2.311750829226867),
            )
        }
        id => Err(Error::UnknownExample { id }),
    }
}

/// Domain and techniques shared by examples 1 through 4.
fn shared_techniques() -> Result<(Interval, Vec<Technique>)> {
    let domain = Interval::new(1.5 / PI, PI)?;
    let (a, b) = (domain.lo(), domain.hi());

    // ∫ x dx = x²/2
    let linear_mass = (b * b - a * a) / 2.0;
    let linear = Technique::new(
        "x",
        1.0,
        move |x: f64| {
            if x < a || x > b {
                0.0
            } else {
                x / linear_mass
            }
        },
        move |u: f64| (a * a + u * (b * b - a * a)).sqrt().clamp(a, b),
    )?;

    // ∫ (x² - x/π) dx = x³/3 - x²/(2π)
    let poly_cdf = |x: f64| x * x * x / 3.0 - x * x / (2.0 * PI);
    let poly_lo = poly_cdf(a);
    let poly_mass = poly_cdf(b) - poly_lo;
    let poly = Technique::new(
        "x^2-x/pi",
        6.24,
        move |x: f64| {
            if x < a || x > b {
                0.0
            } else {
                (x * x - x / PI) / poly_mass
            }
        },
        move |u: f64| {
            let target = poly_lo + u * poly_mass;
            invert_increasing(target, a, b, poly_cdf, |x| x * x - x / PI)
        },
    )?;

    // ∫ sin x dx = -cos x
    let sin_lo = a.cos();
    let sin_mass = a.cos() - b.cos();
    let sine = Technique::new(
        "sin",
        3.28,
        move |x: f64| {
            if x < a || x > b {
                0.0
            } else {
                x.sin() / sin_mass
            }
        },
        move |u: f64| (sin_lo - u * sin_mass).clamp(-1.0, 1.0).acos().clamp(a, b),
    )?;

    Ok((domain, vec![linear, poly, sine]))
}

/// Solves `value(x) = target` for `x` in `[lo, hi]` where `value` is
/// strictly increasing, by Newton steps safeguarded with bisection.
fn invert_increasing(
    target: f64,
    mut lo: f64,
    mut hi: f64,
    value: impl Fn(f64) -> f64,
    deriv: impl Fn(f64) -> f64,
) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..128 {
        let err = value(x) - target;
        if err > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = deriv(x);
        let mut next = if d > 0.0 { x - err / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}
