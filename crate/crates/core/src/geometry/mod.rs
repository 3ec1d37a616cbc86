//! Geometry of the all-binary model.
//!
//! A product distribution on two binary variables is a point of the Segre
//! surface `Σ`, parametrized by corner coordinates `(s, t)` through
//! `σ(s, t) = [[st, s(1−t)], [(1−s)t, (1−s)(1−t)]]`. A binary shuffle
//! configuration with two stimulus states is then a pair of corner points, and
//! whether its correlation domain has an interior minimizer depends only on the
//! slope of the line joining them.

mod chamber;
mod discriminant;
mod volume;


pub use chamber::{chamber_test, Chamber, ChamberReport, CHAMBER_GRID};
pub use discriminant::{
    has_interior_minimum, line_slope, region, region_area, slope_range, solve_hyperplanes, Hyperplane, Region,
    SlopeInterval, SlopeSet,
};
pub use volume::{
    interior_fraction, pushforward_integral, FractionEstimate, FractionMethod, SamplingMeasure,
    EXACT_FRACTION_TOL,
};

use serde::Serialize;

use crate::binomial::Sign;
use crate::dist::{JointDistribution, StateSpace};
use crate::domain::MarginalPair;
use crate::infomin::Location;
use crate::{Error, Result};

/// A 2×2 table indexed `[x][y]`.
pub type Matrix2 = [[f64; 2]; 2];

/// Determinants below this are treated as zero by [`sigma_inverse`].
pub const SEGRE_TOL: f64 = 1e-10;

/// Tolerance on the entries and total mass of a 2×2 distribution.
const MASS_TOL: f64 = 1e-9;

/// Corner coordinates: `s = P(x₁)` and `t = P(y₁)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CornerPoint {
    pub s: f64,
    pub t: f64,
}

impl CornerPoint {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(Error::Precondition(format!("corner point ({s}, {t}) is outside the unit square")));
        }
        Ok(Self { s, t })
    }

    pub fn is_interior(&self) -> bool {
        self.s > 0.0 && self.s < 1.0 && self.t > 0.0 && self.t < 1.0
    }

    pub(crate) fn require_interior(&self) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::VertexDegenerate { s: self.s, t: self.t })
        }
    }
}

/// An element of the symmetry group of the square, applied as: reflect `s`,
/// reflect `t`, then exchange the axes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct Chart {
    reflect_s: bool,
    reflect_t: bool,
    swap: bool,
}

impl Chart {
    /// The chart taking `p` into `0 < s ≤ t ≤ 1/2`, with `p`'s image.
    pub(crate) fn canonical(p: CornerPoint) -> (Self, CornerPoint) {
        let chart = Chart {
            reflect_s: p.s > 0.5,
            reflect_t: p.t > 0.5,
            swap: false,
        };
        let q = chart.apply(p);
        let chart = Chart { swap: q.s > q.t, ..chart };
        (chart, chart.apply(p))
    }

    pub(crate) fn apply(&self, p: CornerPoint) -> CornerPoint {
        let s = if self.reflect_s { 1.0 - p.s } else { p.s };
        let t = if self.reflect_t { 1.0 - p.t } else { p.t };
        if self.swap {
            CornerPoint { s: t, t: s }
        } else {
            CornerPoint { s, t }
        }
    }

    pub(crate) fn invert(&self, p: CornerPoint) -> CornerPoint {
        let (s, t) = if self.swap { (p.t, p.s) } else { (p.s, p.t) };
        CornerPoint {
            s: if self.reflect_s { 1.0 - s } else { s },
            t: if self.reflect_t { 1.0 - t } else { t },
        }
    }

    /// Image in the original frame of a slope measured in the chart's frame.
    pub(crate) fn slope_back(&self, d: f64) -> f64 {
        let d = if self.swap { 1.0 / d } else { d };
        if self.reflect_s != self.reflect_t {
            -d
        } else {
            d
        }
    }
}

pub fn sigma_matrix(p: CornerPoint) -> Matrix2 {
    let (s, t) = (p.s, p.t);
    [[s * t, s * (1.0 - t)], [(1.0 - s) * t, (1.0 - s) * (1.0 - t)]]
}

/// `σ(p)` as a distribution over `X × Y`.
pub fn sigma(p: CornerPoint) -> Result<JointDistribution> {
    CornerPoint::new(p.s, p.t)?;
    let m = sigma_matrix(p);
    JointDistribution::from_vec(StateSpace::new([("X", 2), ("Y", 2)])?, vec![m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// The table of a distribution over two binary axes.
pub fn to_matrix(q: &JointDistribution) -> Result<Matrix2> {
    if q.space().shape() != [2, 2] {
        return Err(Error::ShapeMismatch { expected: vec![2, 2], found: q.space().shape() });
    }
    Ok([[q.prob(&[0, 0]), q.prob(&[0, 1])], [q.prob(&[1, 0]), q.prob(&[1, 1])]])
}

pub fn det(q: &Matrix2) -> f64 {
    q[0][0] * q[1][1] - q[0][1] * q[1][0]
}

pub(crate) fn check_distribution(q: &Matrix2) -> Result<()> {
    for (i, &v) in q.iter().flatten().enumerate() {
        if !v.is_finite() || v < -MASS_TOL {
            return Err(Error::InvalidMass { index: i, value: v });
        }
    }
    let total: f64 = q.iter().flatten().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::NotNormalized(total));
    }
    Ok(())
}

/// Inverse of `σ` on the Segre surface.
pub fn sigma_inverse(q: &Matrix2) -> Result<CornerPoint> {
    check_distribution(q)?;
    let d = det(q);
    if d.abs() > SEGRE_TOL {
        return Err(Error::NotOnSegre(d));
    }
    Ok(marginal_point(q))
}

fn marginal_point(q: &Matrix2) -> CornerPoint {
    CornerPoint {
        s: (q[0][0] + q[0][1]).clamp(0.0, 1.0),
        t: (q[0][0] + q[1][0]).clamp(0.0, 1.0),
    }
}

/// Projection onto `Σ` along `V = [[1, −1], [−1, 1]]`.
///
/// Moving along `V` changes the determinant by exactly the step and leaves
/// both marginals alone, so the foot of the projection is `σ` of the
/// marginals of `q`.
pub fn tare(q: &Matrix2) -> Result<CornerPoint> {
    check_distribution(q)?;
    Ok(marginal_point(q))
}

/// Length, in the `V` parameter, of the segment of `Δ³` through `σ(p)`.
pub fn line_length(p: CornerPoint) -> f64 {
    p.s.min(p.t).min(1.0 - p.s).min(1.0 - p.t)
}

/// Sign of the signal correlation of the configuration `{σ(p), σ(q)}`.
pub fn signal_sign_corner(p: CornerPoint, q: CornerPoint) -> Sign {
    Sign::of((q.s - p.s) * (q.t - p.t), 0.0)
}

/// Marginal pair with prior `prior` and `P(x₁|S=k) = points[k].s`,
/// `P(y₁|S=k) = points[k].t`.
pub fn corner_marginals(prior: &[f64], points: &[CornerPoint]) -> Result<MarginalPair> {
    if prior.len() != points.len() || prior.len() < 2 {
        return Err(Error::Precondition("need a prior weight for each of at least two corner points".into()));
    }
    let mut sx = Vec::with_capacity(2 * prior.len());
    let mut sy = Vec::with_capacity(2 * prior.len());
    for (&w, p) in prior.iter().zip(points) {
        CornerPoint::new(p.s, p.t)?;
        sx.extend([w * p.s, w * (1.0 - p.s)]);
        sy.extend([w * p.t, w * (1.0 - p.t)]);
    }
    let n = prior.len();
    MarginalPair::new(
        JointDistribution::from_vec(StateSpace::new([("S", n), ("X", 2)])?, sx)?,
        JointDistribution::from_vec(StateSpace::new([("S", n), ("Y", 2)])?, sy)?,
    )
}

/// `I(X:Y)` along the determinant line `P^t = P⁰ + tV` of a positive 2×2 table.
#[derive(Clone, Debug, Serialize)]
pub struct DeterminantLine {
    pub det: f64,
    /// `D = [−min(a, d), min(b, c)]`.
    pub domain: (f64, f64),
    /// Zero of `dI/dt`, that is `t = −det P⁰`.
    pub critical_t: f64,
    pub location: Location,
    /// Minimizer located numerically from the sign of `dI/dt`.
    pub t_min: f64,
    pub i_min: f64,
    /// Whether `det P⁰` itself lies in `D`.
    pub det_in_domain: bool,
}

fn xy_information(m: &Matrix2) -> f64 {
    let rows = [m[0][0] + m[0][1], m[1][0] + m[1][1]];
    let cols = [m[0][0] + m[1][0], m[0][1] + m[1][1]];
    let mut acc = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let v = m[x][y];
            if v > 0.0 {
                acc += v * (v / (rows[x] * cols[y])).ln();
            }
        }
    }
    acc.max(0.0)
}

pub fn determinant_line(p0: &Matrix2) -> Result<DeterminantLine> {
    check_distribution(p0)?;
    let [[a, b], [c, d]] = *p0;
    if a.min(b).min(c).min(d) <= 0.0 {
        return Err(Error::Precondition("the determinant line needs a strictly positive table".into()));
    }
    let (lo, hi) = (-a.min(d), b.min(c));
    let at = |t: f64| [[a + t, b - t], [c - t, d + t]];
    let slope = |t: f64| ((a + t) * (d + t)).ln() - ((b - t) * (c - t)).ln();
    let dt = det(p0);
    let critical_t = -dt;
    // dI/dt is increasing, so bisect on its sign.
    let (mut l, mut h) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (l + h);
        if m <= l || m >= h {
            break;
        }
        if slope(m) > 0.0 {
            h = m;
        } else {
            l = m;
        }
    }
    let t_min = 0.5 * (l + h);
    let location = if critical_t > lo && critical_t < hi { Location::Interior } else { Location::Boundary };
    Ok(DeterminantLine {
        det: dt,
        domain: (lo, hi),
        critical_t,
        location,
        t_min,
        i_min: xy_information(&at(t_min)),
        det_in_domain: dt >= lo && dt <= hi,
    })
}
