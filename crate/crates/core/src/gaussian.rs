//! Jointly Gaussian `(S, X, Y)`.
//!
//! `I(S : X,Y) = log(det Σ_S · det Σ_XY / det Σ)`. In the one-dimensional case
//! the cross covariance `t = Cov(X, Y)` is the only free parameter once
//! `Cov(S, X)` and `Cov(S, Y)` are fixed, and [`scan_covariance`] locates the
//! minimizer of `I` over the feasible interval of `t`.

use nalgebra::{DMatrix, Matrix3};
use serde::Serialize;

use crate::dist::InfoValue;
use crate::infomin::Location;
use crate::{Error, Result};

/// Relative asymmetry tolerated in an input covariance.
const SYMMETRY_TOL: f64 = 1e-12;

/// A covariance matrix of `(S, X, Y)` with block sizes `dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianTriple {
    sigma: DMatrix<f64>,
    dims: [usize; 3],
}

impl GaussianTriple {
    pub fn new(sigma: DMatrix<f64>, dims: [usize; 3]) -> Result<Self> {
        let n: usize = dims.iter().sum();
        if dims.contains(&0) || sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::ShapeMismatch { expected: vec![n, n], found: vec![sigma.nrows(), sigma.ncols()] });
        }
        let scale = sigma.amax().max(1.0);
        if (0..n).any(|i| (0..i).any(|j| (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOL * scale)) {
            return Err(Error::Precondition("covariance matrix is not symmetric".into()));
        }
        Ok(Self { sigma, dims })
    }

    /// The 1-D triple `[[a, d, e], [d, b, t], [e, t, c]]`.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64, e: f64, t: f64) -> Self {
        let m = Matrix3::new(a, d, e, d, b, t, e, t, c);
        Self { sigma: DMatrix::from_iterator(3, 3, m.iter().copied()), dims: [1, 1, 1] }
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// `log det` of the principal submatrix on `start..start+len`.
    fn log_det(&self, start: usize, len: usize) -> Result<f64> {
        let block = self.sigma.view((start, start), (len, len)).into_owned();
        let chol = block.cholesky().ok_or(Error::NotPositiveDefinite)?;
        Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
    }
}

pub fn gaussian_mi(g: &GaussianTriple) -> Result<InfoValue> {
    let [ds, dx, dy] = g.dims;
    let full = g.log_det(0, ds + dx + dy)?;
    let s = g.log_det(0, ds)?;
    let xy = g.log_det(ds, dx + dy)?;
    Ok(InfoValue::from_nats((s + xy - full).max(0.0)))
}

/// The fixed entries of a 1-D triple `[[a, d, e], [d, b, t], [e, t, c]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarCovariance {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl ScalarCovariance {
    /// `det Σ(t) = (abc − be² − cd²) + 2de·t − a·t²`.
    pub fn det(&self, t: f64) -> f64 {
        let Self { a, b, c, d, e } = *self;
        a * b * c - b * e * e - c * d * d + 2.0 * d * e * t - a * t * t
    }

    /// `I(t) = log(a(bc − t²)/det Σ(t))`, defined on the feasible interval.
    pub fn information(&self, t: f64) -> f64 {
        (self.a * (self.b * self.c - t * t) / self.det(t)).ln()
    }

    /// `dI/dt = 2t/(t² − bc) + 2(at − de)/det Σ(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let Self { a, b, c, d, e } = *self;
        2.0 * t / (t * t - b * c) + 2.0 * (a * t - d * e) / self.det(t)
    }

    /// `g(t) = de·t² − (be² + cd²)t + bcde = (dt − be)(et − cd)`, whose zeros
    /// in the feasible interval are the zeros of `dI/dt`.
    pub fn critical_polynomial(&self, t: f64) -> f64 {
        let Self { b, c, d, e, .. } = *self;
        d * e * t * t - (b * e * e + c * d * d) * t + b * c * d * e
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussianScan {
    /// Open interval of `t` for which `Σ(t)` is positive definite.
    pub domain: (f64, f64),
    /// Zeros of the critical polynomial, listed even when infeasible.
    pub roots: Vec<f64>,
    /// `d = e = 0`: the critical polynomial vanishes identically and the
    /// only critical point is `t = 0`.
    pub degenerate: bool,
    pub location: Location,
    /// Minimizer, or the endpoint approached by the infimum.
    pub t_star: f64,
    pub i_star: InfoValue,
}

pub fn scan_covariance(p: &ScalarCovariance) -> Result<GaussianScan> {
    let ScalarCovariance { a, b, c, d, e } = *p;
    if !(a > 0.0 && a * b - d * d > 0.0 && c > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let k = a * b * c - b * e * e - c * d * d;
    let disc = (d * e) * (d * e) + a * k;
    if disc.is_nan() || disc <= 0.0 {
        return Err(Error::InfeasibleCovariance);
    }
    let root = disc.sqrt();
    // Stable roots of −a t² + 2de t + k.
    let (lo, hi) = if d * e >= 0.0 {
        let hi = (d * e + root) / a;
        (-k / (a * hi), hi)
    } else {
        let lo = (d * e - root) / a;
        (lo, -k / (a * lo))
    };
    let (lo, hi) = if lo.is_finite() && hi.is_finite() { (lo, hi) } else { ((d * e - root) / a, (d * e + root) / a) };

    let degenerate = d == 0.0 && e == 0.0;
    let roots = if d != 0.0 && e != 0.0 {
        vec![b * e / d, c * d / e]
    } else {
        vec![0.0]
    };
    let inside: Vec<f64> = roots.iter().copied().filter(|&r| r > lo && r < hi).collect();
    if let Some(&t) = inside.first() {
        return Ok(GaussianScan {
            domain: (lo, hi),
            roots,
            degenerate,
            location: Location::Interior,
            t_star: t,
            i_star: InfoValue::from_nats(p.information(t).max(0.0)),
        });
    }
    // No critical point: I is monotone on D and tends to +∞ at an endpoint
    // where det Σ vanishes but bc − t² does not. At the other endpoint both
    // vanish and the limit is log(a·t/(a·t − de)).
    let down = p.derivative(0.5 * (lo + hi)) > 0.0;
    let t_end = if down { lo } else { hi };
    let limit = (a * t_end / (a * t_end - d * e)).ln();
    Ok(GaussianScan {
        domain: (lo, hi),
        roots,
        degenerate,
        location: Location::Boundary,
        t_star: t_end,
        i_star: InfoValue::from_nats(limit.max(0.0)),
    })
}
