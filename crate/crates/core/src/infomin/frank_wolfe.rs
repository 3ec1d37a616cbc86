//! Pairwise Frank–Wolfe over the product of per-slice transportation
//! polytopes, finished by a log-barrier Newton polish.
//!
//! Each iteration picks the slice with the largest pairwise gap, moves mass
//! from its worst active atom to the oracle vertex and performs an exact line
//! search. The Frank–Wolfe gap `⟨∇I(q), q − v⟩` bounds `I(q) − I*` only where
//! `I` is differentiable, i.e. while every free cell is positive. Minimizers
//! on the boundary of `Δ_P` break that, so the iterate is periodically handed
//! to a barrier method whose centers stay strictly positive: the exact gap at
//! a center is a valid certificate, and it tends to zero with the barrier
//! weight even when the minimizer has vanishing cells.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Array3, ArrayView3};

use super::{finish, information, marginal_xy, Location, Method, MinimizeOptions, MinimizerReport};
use crate::domain::CorrelationDomain;
use crate::transport;
use crate::{Error, Result};

/// Stand-in for `log 0` in the gradient. A zero cell whose `(x,y)` marginal
/// is positive then looks maximally attractive to the oracle.
const LOG_ZERO: f64 = -700.0;

/// Iterations between barrier polishes.
const POLISH_EVERY: usize = 50;

/// Barrier weights tried by the polish, from `MU_START` down to `MU_END` in
/// steps of `MU_FACTOR`.
const MU_START: f64 = 1e-5;
const MU_END: f64 = 1e-17;
const MU_FACTOR: f64 = 0.1;

/// Newton iterations allowed per barrier weight.
const CENTERING_ITERS: usize = 60;

/// Newton decrements below this are taken as full steps without a line search.
const NEWTON_TRUST: f64 = 1e-10;

/// Weight of `Q⁰` mixed into the iterate to enter the interior.
const INTERIOR_MIX: f64 = 1e-6;

struct Slices {
    ns: usize,
    nx: usize,
    ny: usize,
    rows: Vec<Vec<f64>>,
    cols: Vec<Vec<f64>>,
}

struct ActiveSet {
    atoms: Vec<(Vec<f64>, f64)>,
}

impl ActiveSet {
    fn single(slice: Vec<f64>) -> Self {
        Self { atoms: vec![(slice, 1.0)] }
    }

    fn add(&mut self, v: Vec<f64>, w: f64) {
        if let Some(a) = self.atoms.iter_mut().find(|(u, _)| u.iter().zip(&v).all(|(p, q)| (p - q).abs() <= 1e-15)) {
            a.1 += w;
        } else {
            self.atoms.push((v, w));
        }
    }
}

fn reset(q: &Array3<f64>) -> Vec<ActiveSet> {
    (0..q.dim().0).map(|s| ActiveSet::single(slice_of(q, s))).collect()
}

/// `∂I/∂q` up to a per-slice constant, which the transportation constraints
/// make irrelevant.
fn gradient(q: &Array3<f64>) -> Array3<f64> {
    let xy = marginal_xy(q.view());
    let mut g = Array3::zeros(q.raw_dim());
    for ((s, x, y), v) in g.indexed_iter_mut() {
        let (j, m) = (q[[s, x, y]], xy[[x, y]]);
        *v = match (j > 0.0, m > 0.0) {
            (true, _) => j.ln() - m.ln(),
            (false, true) => LOG_ZERO - m.ln(),
            (false, false) => 0.0,
        };
    }
    g
}

fn slice_of(q: &Array3<f64>, s: usize) -> Vec<f64> {
    q.index_axis(ndarray::Axis(0), s).iter().copied().collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Frank–Wolfe gap `Σ_s ⟨g_s, q_s − v_s⟩` and the oracle vertices.
fn fw_gap(q: &Array3<f64>, g: &Array3<f64>, sl: &Slices) -> (f64, Vec<Vec<f64>>) {
    let mut gap = 0.0;
    let mut verts = Vec::with_capacity(sl.ns);
    for s in 0..sl.ns {
        let gs = slice_of(g, s);
        let v = transport::solve(&gs, &sl.rows[s], &sl.cols[s]);
        gap += dot(&gs, &slice_of(q, s)) - dot(&gs, &v);
        verts.push(v);
    }
    (gap.max(0.0), verts)
}

/// Derivative of `γ ↦ I(q + γ·dir)` where `dir` lives on slice `s`.
fn line_derivative(q: &Array3<f64>, xy: &Array2<f64>, s: usize, dir: &[f64], gamma: f64, ny: usize) -> f64 {
    let mut acc = 0.0;
    for (i, &d) in dir.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let (x, y) = (i / ny, i % ny);
        let j = q[[s, x, y]] + gamma * d;
        let m = xy[[x, y]] + gamma * d;
        let term = match (j > 0.0, m > 0.0) {
            (true, true) => j.ln() - m.ln(),
            (false, true) => f64::NEG_INFINITY,
            _ => 0.0,
        };
        acc += d * term;
    }
    acc
}

fn line_search(q: &Array3<f64>, s: usize, dir: &[f64], gmax: f64, ny: usize) -> f64 {
    let xy = marginal_xy(q.view());
    if line_derivative(q, &xy, s, dir, gmax, ny) <= 0.0 {
        return gmax;
    }
    let (mut lo, mut hi) = (0.0, gmax);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if line_derivative(q, &xy, s, dir, mid, ny) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Barrier subproblem `I(q) − μ Σ log q` restricted to the affine hull of
/// `Δ_P`, parametrized by an orthonormal basis of the tangent space.
struct Barrier<'a> {
    sl: &'a Slices,
    /// Cells not forced to zero by a vanishing row or column.
    free: Vec<(usize, usize, usize)>,
    basis: DMatrix<f64>,
}

impl<'a> Barrier<'a> {
    fn new(sl: &'a Slices) -> Self {
        let mut free = Vec::new();
        for s in 0..sl.ns {
            for x in 0..sl.nx {
                for y in 0..sl.ny {
                    if sl.rows[s][x] > 0.0 && sl.cols[s][y] > 0.0 {
                        free.push((s, x, y));
                    }
                }
            }
        }
        let n = free.len();
        let stride = sl.nx + sl.ny;
        let mut a = DMatrix::<f64>::zeros(sl.ns * stride, n);
        for (k, &(s, x, y)) in free.iter().enumerate() {
            a[(s * stride + x, k)] = 1.0;
            a[(s * stride + sl.nx + y, k)] = 1.0;
        }
        let eig = (a.transpose() * &a).symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let null: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * scale).collect();
        let basis = DMatrix::from_fn(n, null.len(), |r, c| eig.eigenvectors[(r, null[c])]);
        Self { sl, free, basis }
    }

    fn value(&self, q: ArrayView3<f64>, mu: f64) -> f64 {
        let log_sum: f64 = self.free.iter().map(|&(s, x, y)| q[[s, x, y]].ln()).sum();
        information(q) - mu * log_sum
    }

    /// Newton's method for a fixed `μ`, started from a strictly positive point.
    fn center(&self, mut q: Array3<f64>, mu: f64) -> Array3<f64> {
        let n = self.free.len();
        let mut phi = self.value(q.view(), mu);
        for _ in 0..CENTERING_ITERS {
            let xy = marginal_xy(q.view());
            let grad = DVector::from_iterator(
                n,
                self.free.iter().map(|&(s, x, y)| q[[s, x, y]].ln() - xy[[x, y]].ln() - mu / q[[s, x, y]]),
            );
            let mut hess = DMatrix::<f64>::zeros(n, n);
            for (i, &(si, xi, yi)) in self.free.iter().enumerate() {
                for (j, &(sj, xj, yj)) in self.free.iter().enumerate() {
                    if (xi, yi) == (xj, yj) {
                        hess[(i, j)] = -1.0 / xy[[xi, yi]];
                        if si == sj {
                            let v = q[[si, xi, yi]];
                            hess[(i, j)] += 1.0 / v + mu / (v * v);
                        }
                    }
                }
            }
            let g = self.basis.transpose() * &grad;
            let h = self.basis.transpose() * hess * &self.basis;
            let Some(dz) = solve_spd(h, -&g) else { break };
            let step = &self.basis * &dz;
            let decrement = -g.dot(&dz);
            if decrement.is_nan() || decrement <= 1e-30 {
                break;
            }
            // Fraction-to-boundary rule keeps every free cell positive.
            let mut lam: f64 = 1.0;
            for (k, &(s, x, y)) in self.free.iter().enumerate() {
                if step[k] < 0.0 {
                    lam = lam.min(-0.99 * q[[s, x, y]] / step[k]);
                }
            }
            // Inside the quadratic region the objective's rounding noise
            // exceeds the predicted decrease, so a full step is taken on trust.
            if decrement < NEWTON_TRUST && lam == 1.0 {
                for (k, &(s, x, y)) in self.free.iter().enumerate() {
                    q[[s, x, y]] += step[k];
                }
                phi = self.value(q.view(), mu);
                continue;
            }
            let mut accepted = false;
            for _ in 0..50 {
                let mut next = q.clone();
                for (k, &(s, x, y)) in self.free.iter().enumerate() {
                    next[[s, x, y]] += lam * step[k];
                }
                if self.free.iter().all(|&(s, x, y)| next[[s, x, y]] > 0.0) {
                    let pn = self.value(next.view(), mu);
                    if pn <= phi - 0.25 * lam * decrement {
                        q = next;
                        phi = pn;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            if !accepted || decrement < 1e-24 {
                break;
            }
        }
        q
    }

    /// Follows the central path from `start` until the Frank–Wolfe gap at a
    /// center drops to `tol`. Returns the last center and its gap.
    fn polish(&self, start: &Array3<f64>, q0: ArrayView3<f64>, tol: f64) -> (Array3<f64>, f64) {
        let mut q = start.clone();
        for &(s, x, y) in &self.free {
            q[[s, x, y]] = (1.0 - INTERIOR_MIX) * q[[s, x, y]] + INTERIOR_MIX * q0[[s, x, y]];
        }
        if self.basis.ncols() == 0 {
            return (q, 0.0);
        }
        let mut mu = MU_START;
        let mut gap = f64::INFINITY;
        while mu >= MU_END {
            q = self.center(q, mu);
            gap = fw_gap(&q, &gradient(&q), self.sl).0;
            if gap <= tol {
                break;
            }
            mu *= MU_FACTOR;
        }
        (q, gap)
    }
}

/// Solves `h x = b` for symmetric positive definite `h`, falling back to a
/// clipped eigen-decomposition when Cholesky loses definiteness to rounding.
fn solve_spd(h: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    if let Some(c) = h.clone().cholesky() {
        return Some(c.solve(&b));
    }
    let eig = h.symmetric_eigen();
    let top = eig.eigenvalues.amax();
    if top.is_nan() || top <= 0.0 {
        return None;
    }
    let floor = top * 1e-15;
    let coef = eig.eigenvectors.transpose() * b;
    let scaled = DVector::from_iterator(coef.len(), coef.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c / l.max(floor)));
    Some(&eig.eigenvectors * scaled)
}

/// The gradient is exact, so the gap is a certificate, only if every free
/// cell is positive.
fn strictly_positive(q: &Array3<f64>, b: &Barrier) -> bool {
    b.free.iter().all(|&(s, x, y)| q[[s, x, y]] > 0.0)
}

pub(super) fn solve(d: &CorrelationDomain, opts: &MinimizeOptions) -> Result<MinimizerReport> {
    let (ns, nx, ny) = d.shape();
    let q0 = d.q0_view();
    let rows = (0..ns).map(|s| (0..nx).map(|x| (0..ny).map(|y| q0[[s, x, y]]).sum()).collect()).collect();
    let cols = (0..ns).map(|s| (0..ny).map(|y| (0..nx).map(|x| q0[[s, x, y]]).sum()).collect()).collect();
    let sl = Slices { ns, nx, ny, rows, cols };
    let barrier = Barrier::new(&sl);

    let mut q = q0.to_owned();
    let mut active = reset(&q);
    let mut f = information(q.view());
    let mut trace = vec![f];
    let mut gap = f64::INFINITY;

    for iter in 0..opts.max_iters {
        let g = gradient(&q);
        let (cur_gap, verts) = fw_gap(&q, &g, &sl);
        if strictly_positive(&q, &barrier) {
            gap = cur_gap;
            if gap <= opts.tol {
                return finish(d, q, Method::FrankWolfe, iter, gap, trace, false, Location::Interior);
            }
        }
        if iter > 0 && iter % POLISH_EVERY == 0 {
            let (center, center_gap) = barrier.polish(&q, q0, opts.tol);
            let fc = information(center.view());
            log::debug!("polish at iteration {iter}: gap {center_gap:.3e}, objective {f:.15e} -> {fc:.15e}");
            if fc <= f {
                q = center;
                f = fc;
                trace.push(f);
                active = reset(&q);
            }
            if center_gap <= opts.tol {
                // The kept point is no worse than the center, so the bound carries over.
                return finish(d, q, Method::FrankWolfe, iter, center_gap, trace, false, Location::Interior);
            }
            gap = gap.min(center_gap);
        }

        // Pairwise direction on the slice with the largest gain.
        let mut best: Option<(usize, usize, f64)> = None;
        for s in 0..ns {
            let gs = slice_of(&g, s);
            let gv = dot(&gs, &verts[s]);
            let (ai, ga) = active[s]
                .atoms
                .iter()
                .enumerate()
                .map(|(i, (a, _))| (i, dot(&gs, a)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            let gain = ga - gv;
            if best.is_none_or(|b| gain > b.2) {
                best = Some((s, ai, gain));
            }
        }
        let (s, ai, gain) = best.expect("at least one slice");
        if gain <= 0.0 {
            active = reset(&q);
            continue;
        }
        let (atom, weight) = active[s].atoms[ai].clone();
        let dir: Vec<f64> = verts[s].iter().zip(&atom).map(|(v, a)| v - a).collect();
        let gamma = line_search(&q, s, &dir, weight, ny);
        let mut next = q.clone();
        for (i, &dv) in dir.iter().enumerate() {
            let cell = &mut next[[s, i / ny, i % ny]];
            *cell = (*cell + gamma * dv).max(0.0);
        }
        let fn_ = information(next.view());
        if gamma <= 0.0 || fn_ > f {
            // No progress along this pair at the precision of the objective.
            active[s].atoms.remove(ai);
            if active[s].atoms.is_empty() {
                active[s] = ActiveSet::single(slice_of(&q, s));
            }
            continue;
        }
        q = next;
        f = fn_;
        trace.push(f);
        active[s].atoms[ai].1 -= gamma;
        if active[s].atoms[ai].1 <= 1e-15 {
            active[s].atoms.remove(ai);
        }
        active[s].add(verts[s].clone(), gamma);
    }

    let best = finish(d, q, Method::FrankWolfe, opts.max_iters, gap, trace, false, Location::Interior)?;
    Err(Error::NonConvergence { iterations: opts.max_iters, gap, best: Box::new(best) })
}
