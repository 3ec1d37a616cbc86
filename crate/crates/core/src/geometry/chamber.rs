//! Sign chambers of the determinant on mixtures of 2×2 tables.
//!
//! `det` is quadratic on the simplex of mixture weights, so vertex and edge
//! midpoint signs alone can miss a crossing. The verdict therefore also scans
//! a barycentric grid of mixtures.

use serde::Serialize;

use super::{check_distribution, det, Matrix2};
use crate::binomial::Sign;
use crate::{Error, Result};

/// Subdivisions per edge of the barycentric grid.
pub const CHAMBER_GRID: usize = 24;

/// Determinants within this distance of zero count as lying on `Σ`.
const DET_TOL: f64 = 1e-12;

/// Grids with more points than this are replaced by vertices and midpoints.
const MAX_GRID_POINTS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chamber {
    Positive,
    Negative,
    /// Every mixture is a product distribution.
    OnSigma,
    Both,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChamberReport {
    pub point_dets: Vec<f64>,
    pub point_signs: Vec<Sign>,
    /// `(i, j, det((P_i + P_j)/2))` for `i < j`.
    pub midpoint_dets: Vec<(usize, usize, f64)>,
    pub midpoint_signs: Vec<Sign>,
    pub mixture_det: f64,
    pub mixture_sign: Sign,
    pub grid_min_det: f64,
    pub grid_max_det: f64,
    pub grid_points: usize,
    pub verdict: Chamber,
    pub same_chamber: bool,
}

fn mix(config: &[Matrix2], w: &[f64]) -> Matrix2 {
    let mut m = [[0.0; 2]; 2];
    for (p, &wi) in config.iter().zip(w) {
        for x in 0..2 {
            for y in 0..2 {
                m[x][y] += wi * p[x][y];
            }
        }
    }
    m
}

/// Calls `f` on each weight vector with entries in `{0, 1/n, …, 1}` summing to 1.
fn for_each_composition(k: usize, n: usize, f: &mut impl FnMut(&[f64])) {
    fn rec(parts: &mut Vec<usize>, k: usize, left: usize, n: usize, f: &mut impl FnMut(&[f64])) {
        if parts.len() + 1 == k {
            parts.push(left);
            let w: Vec<f64> = parts.iter().map(|&c| c as f64 / n as f64).collect();
            f(&w);
            parts.pop();
            return;
        }
        for c in 0..=left {
            parts.push(c);
            rec(parts, k, left - c, n, f);
            parts.pop();
        }
    }
    rec(&mut Vec::with_capacity(k), k, n, n, f);
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn chamber_test(config: &[Matrix2], weights: &[f64]) -> Result<ChamberReport> {
    if config.is_empty() || config.len() != weights.len() {
        return Err(Error::Precondition("need one weight per table and at least one table".into()));
    }
    for q in config {
        check_distribution(q)?;
    }
    if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition("mixture weights must be nonnegative and sum to 1".into()));
    }
    let point_dets: Vec<f64> = config.iter().map(det).collect();
    let mut midpoint_dets = Vec::new();
    for i in 0..config.len() {
        for j in i + 1..config.len() {
            midpoint_dets.push((i, j, det(&mix(&[config[i], config[j]], &[0.5, 0.5]))));
        }
    }
    let mixture_det = det(&mix(config, weights));

    let k = config.len();
    let mut lo = point_dets.iter().chain(midpoint_dets.iter().map(|m| &m.2)).fold(f64::INFINITY, |a, &b| a.min(b));
    let mut hi = point_dets.iter().chain(midpoint_dets.iter().map(|m| &m.2)).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut grid_points = point_dets.len() + midpoint_dets.len();
    if k > 1 && binomial(CHAMBER_GRID + k - 1, k - 1) <= MAX_GRID_POINTS as f64 {
        grid_points = 0;
        for_each_composition(k, CHAMBER_GRID, &mut |w| {
            let d = det(&mix(config, w));
            lo = lo.min(d);
            hi = hi.max(d);
            grid_points += 1;
        });
    }
    let verdict = match (lo < -DET_TOL, hi > DET_TOL) {
        (true, true) => Chamber::Both,
        (true, false) => Chamber::Negative,
        (false, true) => Chamber::Positive,
        (false, false) => Chamber::OnSigma,
    };
    Ok(ChamberReport {
        point_signs: point_dets.iter().map(|&d| Sign::of(d, DET_TOL)).collect(),
        point_dets,
        midpoint_signs: midpoint_dets.iter().map(|m| Sign::of(m.2, DET_TOL)).collect(),
        midpoint_dets,
        mixture_det,
        mixture_sign: Sign::of(mixture_det, DET_TOL),
        grid_min_det: lo,
        grid_max_det: hi,
        grid_points,
        verdict,
        same_chamber: verdict != Chamber::Both,
    })
}
