//! MAP classification error `ℙ(Ŝ ≠ S) = 1 − Σ_{x,y} max_s Q(s,x,y)` on the
//! correlation domain.
//!
//! On `Δ_P` every `Q(s,x,y)` is affine in the coordinates, so
//! `Σ_{x,y} max_s Q` is convex and the error is concave. A concave function on
//! a box attains its minimum at a vertex, which is why only the corners of
//! the binary box need to be evaluated.

use ndarray::ArrayView3;
use serde::Serialize;

use crate::dist::JointDistribution;
use crate::domain::{view3, CorrelationDomain, DomainCoords};
use crate::{Error, Result};

/// Corners whose error is within this distance of the minimum tie.
const TIE_TOL: f64 = 1e-12;

/// More movable slices than this make corner enumeration too expensive.
const MAX_CORNER_DIMS: usize = 20;

/// Bayes error of guessing `S` from `(X,Y)`. For two states of `S` this is
/// `Σ_{x,y} min_s Q(s,x,y)`.
pub fn classification_error(q: &JointDistribution) -> Result<f64> {
    if q.space().ndim() != 3 {
        return Err(Error::Precondition("expected a distribution over S × X × Y".into()));
    }
    Ok(error_of(view3(q)))
}

fn error_of(q: ArrayView3<f64>) -> f64 {
    let (_, nx, ny) = q.dim();
    let mut hit = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            hit += q.slice(ndarray::s![.., x, y]).iter().fold(0.0f64, |m, &v| m.max(v));
        }
    }
    (1.0 - hit).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSearch {
    Corners,
    Grid,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    /// Evaluated points with their error.
    pub evaluated: Vec<(DomainCoords, f64)>,
    pub min_error: f64,
    /// Indices into `evaluated` attaining the minimum.
    pub argmin: Vec<usize>,
    pub search: ErrorSearch,
}

/// Evaluates every corner of the binary box and returns the minimizers.
pub fn minimize_classification_error(d: &CorrelationDomain) -> Result<ErrorReport> {
    let Some(bounds) = d.bounds() else {
        return Err(Error::Precondition("corner search needs binary X and Y".into()));
    };
    let movable: Vec<usize> = (0..bounds.len()).filter(|&k| bounds[k].1 > bounds[k].0).collect();
    if movable.len() > MAX_CORNER_DIMS {
        return Err(Error::Precondition(format!("{} movable coordinates is too many for corner enumeration", movable.len())));
    }
    let mut evaluated = Vec::with_capacity(1 << movable.len());
    for mask in 0u32..(1u32 << movable.len()) {
        let mut t: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        for (bit, &k) in movable.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                t[k] = bounds[k].1;
            }
        }
        let coords = DomainCoords::new(t);
        let e = error_of(d.embed_unchecked(&coords).view());
        evaluated.push((coords, e));
    }
    Ok(summarize(evaluated, ErrorSearch::Corners))
}

/// Exhaustive search over an `n`-point grid per coordinate of the binary box.
pub fn classification_error_grid(d: &CorrelationDomain, n: usize) -> Result<ErrorReport> {
    let Some(bounds) = d.bounds() else {
        return Err(Error::Precondition("grid search needs binary X and Y".into()));
    };
    if n < 2 {
        return Err(Error::Precondition("grid needs at least two points per axis".into()));
    }
    let dims = bounds.len();
    let total = n.checked_pow(dims as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| Error::Precondition("grid too large".into()))?;
    let mut evaluated = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let t = bounds
            .iter()
            .map(|&(lo, hi)| {
                let i = rem % n;
                rem /= n;
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            })
            .collect();
        let coords = DomainCoords::new(t);
        let e = error_of(d.embed_unchecked(&coords).view());
        evaluated.push((coords, e));
    }
    Ok(summarize(evaluated, ErrorSearch::Grid))
}

fn summarize(evaluated: Vec<(DomainCoords, f64)>, search: ErrorSearch) -> ErrorReport {
    let min_error = evaluated.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let argmin = (0..evaluated.len()).filter(|&i| evaluated[i].1 <= min_error + TIE_TOL).collect();
    ErrorReport { evaluated, min_error, argmin, search }
}
