//! Exact minimizer for binary `X` and `Y`.
//!
//! Write each slice as `[[a, b], [c, d]]` with `a`, `d` the cells that grow
//! with `t_s` and `b`, `c` the ones that shrink. For a level `C` the point
//! with `log(ad/bc) = C` is computed through the smallest moving cell `u`,
//! which keeps full relative precision right up to the boundary.

use ndarray::Array3;

use super::{finish, information, marginal_xy, Location, Method, MinimizeOptions, MinimizerReport};
use crate::domain::{CorrelationDomain, KernelBasisVector};
use crate::Result;

/// Levels beyond `±LEVEL_LIMIT` put the minimizer within `e^{-LEVEL_LIMIT}`
/// of the boundary, far inside the classification margin.
const LEVEL_LIMIT: f64 = 200.0;

#[derive(Clone, Copy, Debug)]
struct Slice {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Slice {
    fn of(q: &Array3<f64>, k: &KernelBasisVector) -> Self {
        Slice {
            a: q[[k.s, k.x, k.y]],
            b: q[[k.s, k.x, k.y2]],
            c: q[[k.s, k.x2, k.y]],
            d: q[[k.s, k.x2, k.y2]],
        }
    }

    fn width(&self) -> f64 {
        self.a.min(self.d) + self.b.min(self.c)
    }

    /// Cells of the unique point of the slice's segment with `log(ad/bc) = level`.
    fn at_level(&self, level: f64) -> Slice {
        if level < 0.0 {
            // Mirror: exchange the roles of (a, d) and (b, c).
            let m = Slice { a: self.b, b: self.a, c: self.d, d: self.c }.at_level(-level);
            return Slice { a: m.b, b: m.a, c: m.d, d: m.c };
        }
        let swap = self.b > self.c;
        let (b, c) = if swap { (self.c, self.b) } else { (self.b, self.c) };
        let rho = (-level).exp();
        let (big_a, big_d) = (self.a + b, self.d + b);
        let lin = (c - b) + rho * (big_a + big_d);
        let prod = rho * big_a * big_d;
        let u = 2.0 * prod / (lin + (lin * lin + 4.0 * (1.0 - rho) * prod).sqrt());
        let (a, d, small, other) = (big_a - u, big_d - u, u, c - b + u);
        if swap {
            Slice { a, b: other, c: small, d }
        } else {
            Slice { a, b: small, c: other, d }
        }
    }
}

struct Problem<'a> {
    domain: &'a CorrelationDomain,
    base: Array3<f64>,
    slices: Vec<(usize, Slice)>,
}

impl Problem<'_> {
    /// The full tensor with every movable slice placed at `level`.
    fn tensor(&self, level: f64) -> Array3<f64> {
        let mut q = self.base.clone();
        for &(k, sl) in &self.slices {
            let b = self.domain.basis()[k];
            let m = sl.at_level(level);
            q[[b.s, b.x, b.y]] = m.a;
            q[[b.s, b.x, b.y2]] = m.b;
            q[[b.s, b.x2, b.y]] = m.c;
            q[[b.s, b.x2, b.y2]] = m.d;
        }
        q
    }

    /// `α(level) − level`, decreasing through its root when one exists.
    fn phi(&self, level: f64) -> f64 {
        let q = self.tensor(level);
        let xy = marginal_xy(q.view());
        let b = self.domain.basis()[0];
        let al = (xy[[b.x, b.y]] * xy[[b.x2, b.y2]]).ln() - (xy[[b.x, b.y2]] * xy[[b.x2, b.y]]).ln();
        al - level
    }

    fn corner(&self, max: bool) -> Array3<f64> {
        let mut q = self.base.clone();
        let bounds = self.domain.bounds().expect("binary domain");
        for &(k, _) in &self.slices {
            let (lo, hi) = bounds[k];
            let t = if max { hi } else { lo };
            let b = self.domain.basis()[k];
            for ((s, x, y), sign) in b.entries() {
                q[[s, x, y]] = (q[[s, x, y]] + sign * t).max(0.0);
            }
            // Pin the vanishing cell to an exact zero.
            let sl = Slice::of(&q, &b);
            let zero = if max {
                if sl.b <= sl.c { (b.x, b.y2) } else { (b.x2, b.y) }
            } else if sl.a <= sl.d {
                (b.x, b.y)
            } else {
                (b.x2, b.y2)
            };
            q[[b.s, zero.0, zero.1]] = 0.0;
        }
        q
    }
}

pub(super) fn solve(d: &CorrelationDomain, _opts: &MinimizeOptions) -> Result<MinimizerReport> {
    let base = d.q0_view().to_owned();
    let slices: Vec<(usize, Slice)> = d
        .basis()
        .iter()
        .enumerate()
        .map(|(k, b)| (k, Slice::of(&base, b)))
        .filter(|(_, s)| s.width() > 0.0 && s.a.min(s.b).min(s.c).min(s.d) > 0.0)
        .collect();
    let i0 = information(base.view());
    if slices.is_empty() {
        // Every slice is pinned; the domain is the single point Q⁰.
        return finish(d, base, Method::LevelCurve, 0, 0.0, vec![i0], true, Location::Interior);
    }
    let problem = Problem { domain: d, base, slices };

    let (lo_val, hi_val) = (problem.phi(-LEVEL_LIMIT), problem.phi(LEVEL_LIMIT));
    if lo_val > 0.0 && hi_val < 0.0 {
        let (mut lo, mut hi) = (-LEVEL_LIMIT, LEVEL_LIMIT);
        let mut iters = 0;
        while hi - lo > 1e-14 * (1.0 + lo.abs().max(hi.abs())) && iters < 200 {
            let mid = 0.5 * (lo + hi);
            let v = problem.phi(mid);
            if v == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if v > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
        }
        let level = 0.5 * (lo + hi);
        let q = problem.tensor(level);
        let gap = problem.phi(level).abs();
        let i = information(q.view());
        return finish(d, q, Method::LevelCurve, iters, gap, vec![i0, i.min(i0)], true, Location::Interior);
    }

    let (qmin, qmax) = (problem.corner(false), problem.corner(true));
    let (imin, imax) = (information(qmin.view()), information(qmax.view()));
    let q = if imin <= imax { qmin } else { qmax };
    let i = imin.min(imax);
    finish(d, q, Method::LevelCurve, 0, 0.0, vec![i0, i.min(i0)], false, Location::Boundary)
}
