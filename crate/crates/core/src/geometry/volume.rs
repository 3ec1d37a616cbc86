//! Fractions of two-point binary configurations with an interior minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{has_interior_minimum, line_length, region_area, sigma_matrix, tare, CornerPoint, Matrix2};
use crate::quadrature::{integrate_2d, Quadrature};
use crate::{Error, Result};

/// Absolute tolerance requested from the exact quadrature.
pub const EXACT_FRACTION_TOL: f64 = 1e-9;

/// How pairs of configurations are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMeasure {
    /// `(s, t, x, y)` uniform on `[0,1]⁴`.
    #[default]
    Corner,
    /// Each conditional table uniform on the simplex `Δ³`, reduced by the
    /// tare map. Its corner density is proportional to `line_length`.
    Simplex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FractionMethod {
    ExactQuadrature,
    MonteCarlo { seed: u64, samples: u64, workers: usize, measure: SamplingMeasure },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FractionEstimate {
    pub value: f64,
    /// Quadrature error estimate or Monte Carlo standard error.
    pub error: f64,
    pub evaluations: u64,
    pub method: FractionMethod,
}

pub fn interior_fraction(method: FractionMethod) -> Result<FractionEstimate> {
    match method {
        FractionMethod::ExactQuadrature => {
            let q = exact_fraction();
            Ok(FractionEstimate { value: q.value, error: q.error, evaluations: q.evaluations as u64, method })
        }
        FractionMethod::MonteCarlo { seed, samples, workers, measure } => {
            if samples == 0 || workers == 0 {
                return Err(Error::Precondition("Monte Carlo needs at least one sample and one worker".into()));
            }
            let hits = monte_carlo(seed, samples, workers, measure);
            let p = hits as f64 / samples as f64;
            Ok(FractionEstimate {
                value: p,
                error: (p * (1.0 - p) / samples as f64).sqrt(),
                evaluations: samples,
                method,
            })
        }
    }
}

/// Eight copies of the region area integrated over `0 ≤ s ≤ t ≤ 1/2`.
fn exact_fraction() -> Quadrature {
    let area = |t: f64, s: f64| {
        if s <= 0.0 || t <= 0.0 {
            // The area tends to 1/2 on the edge s = 0.
            return 0.5;
        }
        region_area(CornerPoint { s, t }).expect("interior point")
    };
    let q = integrate_2d(area, 0.0, 0.5, |_| 0.0, |t| t, EXACT_FRACTION_TOL / 8.0, 1e-12);
    Quadrature { value: 8.0 * q.value, error: 8.0 * q.error, evaluations: q.evaluations }
}

/// Splits `samples` as evenly as possible, the first workers taking the remainder.
fn share(samples: u64, workers: usize, w: usize) -> u64 {
    let base = samples / workers as u64;
    base + u64::from((w as u64) < samples % workers as u64)
}

fn monte_carlo(seed: u64, samples: u64, workers: usize, measure: SamplingMeasure) -> u64 {
    let run = |w: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(w as u64);
        let mut hits = 0u64;
        for _ in 0..share(samples, workers, w) {
            let (p, q) = match measure {
                SamplingMeasure::Corner => (uniform_corner(&mut rng), uniform_corner(&mut rng)),
                SamplingMeasure::Simplex => (simplex_corner(&mut rng), simplex_corner(&mut rng)),
            };
            // Boundary draws have probability zero; count them as misses.
            hits += u64::from(has_interior_minimum(p, q).unwrap_or(false));
        }
        hits
    };
    if workers == 1 {
        return run(0);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers).map(|w| scope.spawn(move || run(w))).collect();
        handles.into_iter().map(|h| h.join().expect("Monte Carlo worker panicked")).sum()
    })
}

fn uniform_corner<R: Rng>(rng: &mut R) -> CornerPoint {
    CornerPoint { s: rng.random(), t: rng.random() }
}

/// A uniform point of `Δ³` from normalized exponential spacings.
pub(crate) fn uniform_simplex<R: Rng>(rng: &mut R) -> Matrix2 {
    let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let total: f64 = e.iter().sum();
    [[e[0] / total, e[1] / total], [e[2] / total, e[3] / total]]
}

fn simplex_corner<R: Rng>(rng: &mut R) -> CornerPoint {
    tare(&uniform_simplex(rng)).expect("valid table")
}

/// `∫_{Δ³} f` for `f` constant along `V`, computed as
/// `∫∫ f(σ(s,t)) l(s,t) ds dt` with `l` from [`line_length`].
///
/// The square is split along its diagonals, where `l` has kinks, and each
/// triangle is integrated adaptively. Volumes use the coordinates
/// `(q₁₁, q₁₂, q₂₁)`, in which `Δ³` has volume 1/6.
pub fn pushforward_integral<F: Fn(&Matrix2) -> f64>(f: F, abs_tol: f64) -> Quadrature {
    let g = |s: f64, t: f64| {
        let p = CornerPoint { s, t };
        f(&sigma_matrix(p)) * line_length(p)
    };
    let tol = 0.25 * abs_tol;
    let pieces = [
        // Left and right triangles, where min is s or 1 − s.
        integrate_2d(g, 0.0, 0.5, |s| s, |s| 1.0 - s, tol, 0.0),
        integrate_2d(g, 0.5, 1.0, |s| 1.0 - s, |s| s, tol, 0.0),
        // Bottom and top, where min is t or 1 − t.
        integrate_2d(|t, s| g(s, t), 0.0, 0.5, |t| t, |t| 1.0 - t, tol, 0.0),
        integrate_2d(|t, s| g(s, t), 0.5, 1.0, |t| 1.0 - t, |t| t, tol, 0.0),
    ];
    pieces.iter().fold(Quadrature { value: 0.0, error: 0.0, evaluations: 0 }, |acc, q| Quadrature {
        value: acc.value + q.value,
        error: acc.error + q.error,
        evaluations: acc.evaluations + q.evaluations,
    })
}

