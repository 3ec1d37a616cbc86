//! Hyperplanes through a point of `Σ` cutting the level surfaces `Σ_r`, and
//! the admissible slopes they induce in corner coordinates.
//!
//! A hyperplane `n = (a, b, c, d)` containing `V` meets `Σ` in a line of the
//! corner chart: with `a − b − c + d = 0` the `st` terms of `n·σ(s, t)`
//! cancel, leaving `s(b − d) + t(c − d) + d = 0`, whose slope is
//! `δ = −(b − d)/(c − d)`.

use serde::{Serialize, Serializer};

use super::{Chart, CornerPoint};
use crate::{Error, Result};

/// `n = (a, b, c, d)`, normalized to `a = 1` by [`solve_hyperplanes`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hyperplane {
    pub n: [f64; 4],
}

impl Hyperplane {
    /// Residuals of `n·V = 0`, `r·ad = bc` and `n·σ(p) = 0`.
    pub fn residuals(&self, p: CornerPoint, r: f64) -> [f64; 3] {
        let [a, b, c, d] = self.n;
        let m = super::sigma_matrix(p);
        [
            a - b - c + d,
            r * a * d - b * c,
            a * m[0][0] + b * m[0][1] + c * m[1][0] + d * m[1][1],
        ]
    }

    /// Slope in the corner chart of the line `H ∩ Σ`.
    pub fn slope(&self) -> f64 {
        let [_, b, c, d] = self.n;
        let den = c - d;
        if den == 0.0 {
            f64::INFINITY
        } else {
            -(b - d) / den
        }
    }
}

/// The hyperplanes containing `V` and `σ(p)` whose intersection with `Σ_r`
/// is a pair of lines.
///
/// They are indexed by the roots `d₊ ≥ d₋` of `(1−s)(1−t)d² + Bd + st = 0`
/// with `B = s(1−s) + t(1−t) + r(s−t)²`. The discriminant factors as
/// `(s−t)²W` with `W = (1−s−t)² + 2r(s(1−s) + t(1−t)) + r²(s−t)²`, which
/// gives `b` and `c` without dividing by `s − t`:
///
/// `b = ((1−s−t) + r(s−t) − ε√W) / (2(1−t))`,
/// `c = ((1−s−t) − r(s−t) + ε√W) / (2(1−s))`,
///
/// where `ε = ±sgn(s−t)` for `d±`. At `s = t` the sign is taken as for
/// `s < t`, so each branch is continuous from that side.
pub fn solve_hyperplanes(p: CornerPoint, r: f64) -> Result<Vec<Hyperplane>> {
    p.require_interior()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("level r must be positive and finite, got {r}")));
    }
    let (s, t) = (p.s, p.t);
    let (u, v, k) = (s * (1.0 - s), t * (1.0 - t), 1.0 - s - t);
    let diff = s - t;
    let w = k * k + 2.0 * r * (u + v) + r * r * diff * diff;
    let q = (1.0 - s) * (1.0 - t);
    let big_b = u + v + r * diff * diff;
    let d_minus = (-big_b - diff.abs() * w.sqrt()) / (2.0 * q);
    // Product of the roots is st/q; this avoids cancellation in d₊.
    let d_plus = s * t / (q * d_minus);
    let sgn = if diff > 0.0 { 1.0 } else { -1.0 };
    let w = w.sqrt();
    let plane = |d: f64, eps: f64| {
        // Each numerator x + e·√W is rewritten through W − x², known in closed
        // form, whenever the two terms would cancel.
        let (xb, xc) = (k + r * diff, k - r * diff);
        let b = if xb * eps <= 0.0 { (xb - eps * w) / (2.0 * (1.0 - t)) } else { -2.0 * r * t / (xb + eps * w) };
        let c = if xc * eps >= 0.0 { (xc + eps * w) / (2.0 * (1.0 - s)) } else { -2.0 * r * s / (xc - eps * w) };
        Hyperplane { n: [1.0, b, c, d] }
    };
    Ok(vec![plane(d_plus, sgn), plane(d_minus, -sgn)])
}

/// An interval of the extended real line. Infinite endpoints stand for the
/// vertical direction, which is a single point of the projective line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl SlopeInterval {
    pub fn contains(&self, m: f64) -> bool {
        let above = if self.lo_closed { m >= self.lo } else { m > self.lo };
        let below = if self.hi_closed { m <= self.hi } else { m < self.hi };
        above && below
    }
}

fn endpoint(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl Serialize for SlopeInterval {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let text = format!(
            "{}{}, {}{}",
            if self.lo_closed { "[" } else { "(" },
            endpoint(self.lo),
            endpoint(self.hi),
            if self.hi_closed { "]" } else { ")" }
        );
        ser.serialize_str(&text)
    }
}

/// Slopes of the lines through a corner point along which the two-point
/// configuration has an interior minimizer. It is the projective line with
/// two disjoint closed finite intervals removed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeSet {
    pub intervals: Vec<SlopeInterval>,
    /// The removed intervals, sorted.
    pub excluded: [(f64, f64); 2],
}

impl SlopeSet {
    fn from_excluded(mut excluded: [(f64, f64); 2]) -> Self {
        excluded.sort_by(|a, b| a.0.total_cmp(&b.0));
        let [e1, e2] = excluded;
        let iv = |lo, hi, lo_closed, hi_closed| SlopeInterval { lo, hi, lo_closed, hi_closed };
        SlopeSet {
            intervals: vec![
                iv(f64::NEG_INFINITY, e1.0, true, false),
                iv(e1.1, e2.0, false, false),
                iv(e2.1, f64::INFINITY, false, true),
            ],
            excluded,
        }
    }

    pub fn contains(&self, m: f64) -> bool {
        !m.is_nan() && self.intervals.iter().any(|i| i.contains(m))
    }

    /// The four finite interval endpoints.
    pub fn endpoints(&self) -> [f64; 4] {
        let [e1, e2] = self.excluded;
        [e1.0, e1.1, e2.0, e2.1]
    }

    /// Angle between the direction of slope `m` and the nearest endpoint
    /// direction. Angles stay bounded for steep lines, unlike slope differences.
    pub fn endpoint_distance(&self, m: f64) -> f64 {
        let theta = m.atan();
        self.endpoints()
            .iter()
            .map(|e| {
                let d = (theta - e.atan()).abs();
                d.min(std::f64::consts::PI - d)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Excluded slope intervals for `0 < s ≤ t ≤ 1/2`.
fn canonical_excluded(p: CornerPoint) -> [(f64, f64); 2] {
    let (s, t) = (p.s, p.t);
    [(-(1.0 - t) / s, -t / (1.0 - s)), ((1.0 - t) / (1.0 - s), t / s)]
}

/// Slope `Δt/Δs` of the line through `p` and `q`; infinite for vertical lines
/// and NaN when the points coincide.
pub fn line_slope(p: CornerPoint, q: CornerPoint) -> f64 {
    let (dx, dy) = (q.s - p.s, q.t - p.t);
    if dx == 0.0 {
        if dy == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        dy / dx
    }
}

pub fn slope_range(p: CornerPoint) -> Result<SlopeSet> {
    p.require_interior()?;
    let (chart, c) = Chart::canonical(p);
    let mapped = canonical_excluded(c).map(|(lo, hi)| {
        let (a, b) = (chart.slope_back(lo), chart.slope_back(hi));
        (a.min(b), a.max(b))
    });
    Ok(SlopeSet::from_excluded(mapped))
}

/// Whether the configuration `{σ(p), σ(q)}` has an interior minimizer.
/// Coinciding points count as interior.
pub fn has_interior_minimum(p: CornerPoint, q: CornerPoint) -> Result<bool> {
    p.require_interior()?;
    q.require_interior()?;
    if p == q {
        return Ok(true);
    }
    let (chart, cp) = Chart::canonical(p);
    let m = line_slope(cp, chart.apply(q));
    if m.is_infinite() {
        return Ok(true);
    }
    Ok(!canonical_excluded(cp).iter().any(|&(lo, hi)| m >= lo && m <= hi))
}

/// The set `{q : has_interior_minimum(p, q)}`: the square minus four
/// triangles with apex `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    pub area: f64,
    /// Where the extremal lines leave the square on the side away from the
    /// square's corner they pass through.
    pub boundary_points: [CornerPoint; 4],
    pub excluded_triangles: [[CornerPoint; 3]; 4],
}

pub fn region(p: CornerPoint) -> Result<Region> {
    p.require_interior()?;
    let (chart, c) = Chart::canonical(p);
    let (s, t) = (c.s, c.t);
    let area = 0.5 + 0.5 * s * (t / (1.0 - t) + s / (1.0 - s) + (1.0 - t) / t - 1.0);
    let pt = |s, t| chart.invert(CornerPoint { s, t });
    let boundary_points = [pt(0.0, t / (1.0 - s)), pt(s / t, 1.0), pt(s / (1.0 - t), 0.0), pt(0.0, (t - s) / (1.0 - s))];
    let apex = pt(s, t);
    let excluded_triangles = [
        [apex, pt(0.0, 1.0), boundary_points[0]],
        [apex, pt(1.0, 1.0), boundary_points[1]],
        [apex, pt(1.0, 0.0), boundary_points[2]],
        [apex, pt(0.0, 0.0), boundary_points[3]],
    ];
    Ok(Region { area: area.clamp(0.0, 1.0), boundary_points, excluded_triangles })
}

pub fn region_area(p: CornerPoint) -> Result<f64> {
    region(p).map(|r| r.area)
}
