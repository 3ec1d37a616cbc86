//! The correlation domain: all joint distributions on `S × X × Y` whose
//! `(S,X)` and `(S,Y)` marginals equal a given [`MarginalPair`].
//!
//! The domain is the affine set `Q⁰ + span(basis)` intersected with the
//! simplex, where `Q⁰(s,x,y) = P(s)P(x|s)P(y|s)` is the shuffle distribution
//! and the basis consists of the vectors `V_{(s,x₀,y₀);(s,x,y)}` for
//! `x ≠ x₀`, `y ≠ y₀`. It splits into one transportation polytope per state
//! of `S`.
//!
//! Coordinates are joint-scale: `Q = Q⁰ + Σ t_k V_k`. The conditional-scale
//! chart `g = t / P(s)` is available through [`CorrelationDomain::to_conditional`]
//! and [`CorrelationDomain::embed_conditional`].

use ndarray::{Array3, ArrayD, ArrayView3, Ix3, IxDyn};
use rand::Rng;
use serde::Serialize;

use crate::dist::{JointDistribution, StateSpace, TangentVector};
use crate::{Error, Result};

/// Tolerance on the agreement of the two `S`-marginals of a pair.
pub const MARGINAL_TOL: f64 = 1e-10;

/// Tolerance for accepting a distribution as a point of the domain.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Negative entries above `-EMBED_SLACK` are rounding and get clamped to 0.
const EMBED_SLACK: f64 = 1e-15;

/// The fixed pairwise marginals `(P_{S,X}, P_{S,Y})`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalPair {
    p_sx: JointDistribution,
    p_sy: JointDistribution,
}

impl MarginalPair {
    pub fn new(p_sx: JointDistribution, p_sy: JointDistribution) -> Result<Self> {
        if p_sx.space().ndim() != 2 || p_sy.space().ndim() != 2 {
            return Err(Error::InconsistentMarginals("both marginals must have exactly two axes".into()));
        }
        let (a, b) = (p_sx.space().shape(), p_sy.space().shape());
        if a[0] != b[0] {
            return Err(Error::InconsistentMarginals(format!(
                "S has {} states in the first table and {} in the second",
                a[0], b[0]
            )));
        }
        if p_sx.space().axes()[1].name == p_sy.space().axes()[1].name {
            return Err(Error::InconsistentMarginals("X and Y axes share a name".into()));
        }
        let sa = row_sums(&p_sx);
        let sb = row_sums(&p_sy);
        for (s, (u, v)) in sa.iter().zip(&sb).enumerate() {
            if (u - v).abs() > MARGINAL_TOL {
                return Err(Error::InconsistentMarginals(format!(
                    "P(S={s}) is {u} in the first table and {v} in the second"
                )));
            }
        }
        Ok(Self { p_sx, p_sy })
    }

    /// The pair of marginals of a distribution over `S × X × Y`.
    pub fn from_joint(q: &JointDistribution) -> Result<Self> {
        let axes = q.space().axes();
        if axes.len() != 3 {
            return Err(Error::Precondition("expected a distribution over exactly three axes".into()));
        }
        let p_sx = q.marginalize_positions(&[0, 1]);
        let p_sy = q.marginalize_positions(&[0, 2]);
        Self::new(p_sx, p_sy)
    }

    pub fn p_sx(&self) -> &JointDistribution {
        &self.p_sx
    }

    pub fn p_sy(&self) -> &JointDistribution {
        &self.p_sy
    }

    pub fn ns(&self) -> usize {
        self.p_sx.space().shape()[0]
    }

    pub fn nx(&self) -> usize {
        self.p_sx.space().shape()[1]
    }

    pub fn ny(&self) -> usize {
        self.p_sy.space().shape()[1]
    }

    pub fn p_s(&self) -> Vec<f64> {
        row_sums(&self.p_sx)
    }

    /// `P(x | s)`; `None` when `P(s) = 0`.
    pub fn x_given_s(&self, s: usize) -> Option<Vec<f64>> {
        conditional_row(&self.p_sx, s)
    }

    pub fn y_given_s(&self, s: usize) -> Option<Vec<f64>> {
        conditional_row(&self.p_sy, s)
    }

    /// True when `P(x|s)` is the same for every `s` with `P(s) > 0`.
    pub fn x_independent_of_s(&self, tol: f64) -> bool {
        rows_identical(&self.p_sx, tol)
    }

    pub fn y_independent_of_s(&self, tol: f64) -> bool {
        rows_identical(&self.p_sy, tol)
    }

    /// The `S × X × Y` space the pair lives on.
    pub fn joint_space(&self) -> Result<StateSpace> {
        let (a, b) = (self.p_sx.space().axes(), self.p_sy.space().axes());
        StateSpace::new([
            (a[0].name.clone(), a[0].card),
            (a[1].name.clone(), a[1].card),
            (b[1].name.clone(), b[1].card),
        ])
    }

    /// Drops states with `P(s) = 0`, returning the reduced pair and the kept
    /// original indices.
    fn reduced(&self) -> Result<(MarginalPair, Vec<usize>)> {
        let ps = self.p_s();
        let kept: Vec<usize> = (0..ps.len()).filter(|&s| ps[s] > 0.0).collect();
        if kept.len() == ps.len() {
            return Ok((self.clone(), kept));
        }
        log::warn!("dropping {} state(s) of S with zero probability", ps.len() - kept.len());
        if kept.len() < 2 {
            return Err(Error::Precondition("S needs at least two states with positive probability".into()));
        }
        let pick = |d: &JointDistribution| -> Result<JointDistribution> {
            let ax = d.space().axes();
            let space = StateSpace::new([(ax[0].name.clone(), kept.len()), (ax[1].name.clone(), ax[1].card)])?;
            let mut data = Vec::new();
            for &s in &kept {
                data.extend((0..ax[1].card).map(|j| d.prob(&[s, j])));
            }
            JointDistribution::renormalized(space, data)
        };
        Ok((MarginalPair::new(pick(&self.p_sx)?, pick(&self.p_sy)?)?, kept))
    }
}

/// `V_{(s,x,y);(s,x2,y2)}`: `+1` at `(s,x,y)` and `(s,x2,y2)`, `−1` at
/// `(s,x,y2)` and `(s,x2,y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KernelBasisVector {
    pub s: usize,
    pub x: usize,
    pub y: usize,
    pub x2: usize,
    pub y2: usize,
}

impl KernelBasisVector {
    pub fn new(s: usize, x: usize, y: usize, x2: usize, y2: usize) -> Result<Self> {
        if x == x2 || y == y2 {
            return Err(Error::Precondition("a kernel basis vector needs x ≠ x' and y ≠ y'".into()));
        }
        Ok(Self { s, x, y, x2, y2 })
    }

    /// The four touched cells with their signs.
    pub fn entries(&self) -> [((usize, usize, usize), f64); 4] {
        let Self { s, x, y, x2, y2 } = *self;
        [((s, x, y), 1.0), ((s, x2, y2), 1.0), ((s, x, y2), -1.0), ((s, x2, y), -1.0)]
    }

    pub fn to_tangent(&self, space: &StateSpace) -> Result<TangentVector> {
        let mut delta = ArrayD::zeros(IxDyn(&space.shape()));
        for ((s, x, y), v) in self.entries() {
            delta[IxDyn(&[s, x, y])] = v;
        }
        TangentVector::new(space.clone(), delta)
    }
}

/// Joint-scale coordinates of a point of a [`CorrelationDomain`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainCoords {
    pub t: Vec<f64>,
}

impl DomainCoords {
    pub fn new(t: Vec<f64>) -> Self {
        Self { t }
    }

    pub fn zeros(dims: usize) -> Self {
        Self { t: vec![0.0; dims] }
    }
}

/// `Δ_P` together with its base point, basis and (binary case) box bounds.
#[derive(Clone, Debug)]
pub struct CorrelationDomain {
    pair: MarginalPair,
    q0: JointDistribution,
    x0: usize,
    y0: usize,
    basis: Vec<KernelBasisVector>,
    bounds: Option<Vec<(f64, f64)>>,
    kept: Vec<usize>,
}

/// The shuffle distribution `Q⁰(s,x,y) = P(s)P(x|s)P(y|s)`. States of `S` with
/// zero probability are dropped.
pub fn shuffle_distribution(p: &MarginalPair) -> Result<JointDistribution> {
    let (pair, _) = p.reduced()?;
    shuffle_of(&pair)
}

fn shuffle_of(p: &MarginalPair) -> Result<JointDistribution> {
    let (ns, nx, ny) = (p.ns(), p.nx(), p.ny());
    let ps = p.p_s();
    let mut q = Array3::<f64>::zeros((ns, nx, ny));
    for s in 0..ns {
        for x in 0..nx {
            for y in 0..ny {
                q[[s, x, y]] = p.p_sx.prob(&[s, x]) * p.p_sy.prob(&[s, y]) / ps[s];
            }
        }
    }
    JointDistribution::new(p.joint_space()?, q.into_dyn())
}

/// The domain with the default base states `x₀ = y₀ = 0`.
pub fn build_domain(p: &MarginalPair) -> Result<CorrelationDomain> {
    CorrelationDomain::new(p, 0, 0)
}

impl CorrelationDomain {
    pub fn new(p: &MarginalPair, x0: usize, y0: usize) -> Result<Self> {
        if x0 >= p.nx() || y0 >= p.ny() {
            return Err(Error::Precondition("base states out of range".into()));
        }
        let (pair, kept) = p.reduced()?;
        let q0 = shuffle_of(&pair)?;
        let (ns, nx, ny) = (pair.ns(), pair.nx(), pair.ny());
        let mut basis = Vec::with_capacity(ns * (nx - 1) * (ny - 1));
        for s in 0..ns {
            for x in (0..nx).filter(|&x| x != x0) {
                for y in (0..ny).filter(|&y| y != y0) {
                    basis.push(KernelBasisVector { s, x: x0, y: y0, x2: x, y2: y });
                }
            }
        }
        let bounds = (nx == 2 && ny == 2).then(|| {
            basis
                .iter()
                .map(|b| {
                    let q = |x: usize, y: usize| q0.prob(&[b.s, x, y]);
                    (-q(b.x, b.y).min(q(b.x2, b.y2)), q(b.x, b.y2).min(q(b.x2, b.y)))
                })
                .collect()
        });
        Ok(Self { pair, q0, x0, y0, basis, bounds, kept })
    }

    /// The pair after removal of zero-probability states of `S`.
    pub fn pair(&self) -> &MarginalPair {
        &self.pair
    }

    pub fn q0(&self) -> &JointDistribution {
        &self.q0
    }

    pub fn basis(&self) -> &[KernelBasisVector] {
        &self.basis
    }

    pub fn dims(&self) -> usize {
        self.basis.len()
    }

    pub fn base_states(&self) -> (usize, usize) {
        (self.x0, self.y0)
    }

    /// Per-coordinate `[t_min, t_max]`, present when `X` and `Y` are binary.
    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    pub fn is_binary(&self) -> bool {
        self.bounds.is_some()
    }

    /// Original indices of the states of `S` kept in the domain.
    pub fn kept_states(&self) -> &[usize] {
        &self.kept
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.pair.ns(), self.pair.nx(), self.pair.ny())
    }

    pub(crate) fn q0_view(&self) -> ArrayView3<'_, f64> {
        view3(&self.q0)
    }

    /// `Q⁰ + Σ t_k V_k`, checked against the bounds (binary) or nonnegativity.
    pub fn embed(&self, t: &DomainCoords) -> Result<JointDistribution> {
        if t.t.len() != self.dims() {
            return Err(Error::ShapeMismatch { expected: vec![self.dims()], found: vec![t.t.len()] });
        }
        if let Some(bounds) = &self.bounds {
            for (k, (&v, &(lo, hi))) in t.t.iter().zip(bounds).enumerate() {
                if !v.is_finite() || v < lo - EMBED_SLACK || v > hi + EMBED_SLACK {
                    let b = self.basis[k];
                    let cell = if v < lo {
                        if self.q0.prob(&[b.s, b.x, b.y]) <= self.q0.prob(&[b.s, b.x2, b.y2]) { [b.s, b.x, b.y] } else { [b.s, b.x2, b.y2] }
                    } else if self.q0.prob(&[b.s, b.x, b.y2]) <= self.q0.prob(&[b.s, b.x2, b.y]) {
                        [b.s, b.x, b.y2]
                    } else {
                        [b.s, b.x2, b.y]
                    };
                    return Err(Error::OutOfDomain { coord: k, state: cell.to_vec(), value: v });
                }
            }
        }
        let mut q = self.q0.mass().clone().into_dimensionality::<Ix3>().expect("three axes");
        for (b, &v) in self.basis.iter().zip(&t.t) {
            for ((s, x, y), sign) in b.entries() {
                q[[s, x, y]] += sign * v;
            }
        }
        for ((s, x, y), v) in q.indexed_iter_mut() {
            if *v < 0.0 {
                if *v < -EMBED_SLACK || !v.is_finite() {
                    let coord = self.basis.iter().position(|b| b.s == s).unwrap_or(0);
                    return Err(Error::OutOfDomain { coord, state: vec![s, x, y], value: *v });
                }
                *v = 0.0;
            }
        }
        Ok(JointDistribution::from_parts(self.q0.space().clone(), q.into_dyn()))
    }

    /// Embedding in the conditional-scale chart `t = P(s)·g`.
    pub fn embed_conditional(&self, g: &[f64]) -> Result<JointDistribution> {
        self.embed(&self.from_conditional(g))
    }

    /// `g_k = t_k / P(s_k)`.
    pub fn to_conditional(&self, t: &DomainCoords) -> Vec<f64> {
        let ps = self.pair.p_s();
        t.t.iter().zip(&self.basis).map(|(v, b)| v / ps[b.s]).collect()
    }

    pub fn from_conditional(&self, g: &[f64]) -> DomainCoords {
        let ps = self.pair.p_s();
        DomainCoords { t: g.iter().zip(&self.basis).map(|(v, b)| v * ps[b.s]).collect() }
    }

    /// Inverse of [`embed`](Self::embed) on `Δ_P`.
    pub fn coords(&self, q: &JointDistribution) -> Result<DomainCoords> {
        if q.space().shape() != self.q0.space().shape() {
            return Err(Error::ShapeMismatch { expected: self.q0.space().shape(), found: q.space().shape() });
        }
        let qv = view3(q);
        let q0 = self.q0_view();
        let mut dev: f64 = 0.0;
        let (ns, nx, ny) = self.shape();
        for s in 0..ns {
            for x in 0..nx {
                let a: f64 = (0..ny).map(|y| qv[[s, x, y]] - q0[[s, x, y]]).sum();
                dev = dev.max(a.abs());
            }
            for y in 0..ny {
                let a: f64 = (0..nx).map(|x| qv[[s, x, y]] - q0[[s, x, y]]).sum();
                dev = dev.max(a.abs());
            }
        }
        if dev > MEMBERSHIP_TOL {
            return Err(Error::NotInDomain(dev));
        }
        let t: Vec<f64> = self.basis.iter().map(|b| qv[[b.s, b.x2, b.y2]] - q0[[b.s, b.x2, b.y2]]).collect();
        let coords = DomainCoords { t };
        let back = self.embed_unchecked(&coords);
        let err = back.iter().zip(qv.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if err > MEMBERSHIP_TOL {
            return Err(Error::NotInDomain(err));
        }
        Ok(coords)
    }

    /// `Q⁰ + Σ t_k V_k` without any feasibility check.
    pub(crate) fn embed_unchecked(&self, t: &DomainCoords) -> Array3<f64> {
        let mut q = self.q0_view().to_owned();
        for (b, &v) in self.basis.iter().zip(&t.t) {
            for ((s, x, y), sign) in b.entries() {
                q[[s, x, y]] += sign * v;
            }
        }
        q
    }

    /// A random point of `Δ_P`: uniform on the box in the binary case,
    /// otherwise the end of a short hit-and-run walk started at `Q⁰`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> JointDistribution {
        if let Some(bounds) = &self.bounds {
            let t = bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                .collect();
            return self.embed(&DomainCoords { t }).expect("box point is feasible");
        }
        let mut q = self.q0_view().to_owned();
        for _ in 0..(4 * self.dims()).max(8) {
            let coef: Vec<f64> = (0..self.dims()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut dir = Array3::<f64>::zeros(q.raw_dim());
            for (b, c) in self.basis.iter().zip(&coef) {
                for ((s, x, y), sign) in b.entries() {
                    dir[[s, x, y]] += sign * c;
                }
            }
            let (lo, hi) = feasible_interval(q.view(), dir.view());
            if hi > lo {
                let h = rng.random_range(lo..=hi);
                q.zip_mut_with(&dir, |a, d| *a = (*a + h * d).max(0.0));
            }
        }
        JointDistribution::from_parts(self.q0.space().clone(), q.into_dyn())
    }
}

/// Largest interval `[lo, hi]` with `q + h·dir ≥ 0`.
pub(crate) fn feasible_interval(q: ArrayView3<f64>, dir: ArrayView3<f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (&a, &d) in q.iter().zip(dir.iter()) {
        if d > 0.0 {
            lo = lo.max(-a / d);
        } else if d < 0.0 {
            hi = hi.min(-a / d);
        }
    }
    (lo, hi)
}

/// Derivative of `I(S : X,Y)` along a kernel basis vector:
/// `log[Q(s,x,y)Q(s,x',y') / (Q(s,x,y')Q(s,x',y))] + log[Q(x,y')Q(x',y) / (Q(x,y)Q(x',y'))]`.
pub fn derivative_along_basis(q: &JointDistribution, b: &KernelBasisVector) -> Result<f64> {
    let v = view3(q);
    let mut acc = 0.0;
    for ((s, x, y), sign) in b.entries() {
        let joint = v[[s, x, y]];
        let xy: f64 = v.slice(ndarray::s![.., x, y]).sum();
        if joint <= 0.0 {
            return Err(Error::ZeroProbabilityOnDirection(vec![s, x, y]));
        }
        if xy <= 0.0 {
            return Err(Error::ZeroProbabilityOnDirection(vec![x, y]));
        }
        acc += sign * (joint.ln() - xy.ln());
    }
    Ok(acc)
}

/// Second derivative of `I(S : X,Y)` along a kernel basis vector:
/// the sum of `1/Q(s,·,·)` over the four touched cells minus the sum of
/// `1/Q(·,·)` over the four touched `(X,Y)` cells.
pub fn second_derivative_along_basis(q: &JointDistribution, b: &KernelBasisVector) -> Result<f64> {
    let v = view3(q);
    let mut acc = 0.0;
    for ((s, x, y), _) in b.entries() {
        let joint = v[[s, x, y]];
        let xy: f64 = v.slice(ndarray::s![.., x, y]).sum();
        if joint <= 0.0 || xy <= 0.0 {
            return Err(Error::ZeroProbabilityOnDirection(vec![s, x, y]));
        }
        acc += 1.0 / joint - 1.0 / xy;
    }
    Ok(acc)
}

pub(crate) fn view3(q: &JointDistribution) -> ArrayView3<'_, f64> {
    q.mass().view().into_dimensionality::<Ix3>().expect("distribution over S × X × Y")
}

fn row_sums(d: &JointDistribution) -> Vec<f64> {
    let sh = d.space().shape();
    (0..sh[0]).map(|i| (0..sh[1]).map(|j| d.prob(&[i, j])).sum()).collect()
}

fn conditional_row(d: &JointDistribution, s: usize) -> Option<Vec<f64>> {
    let n = d.space().shape()[1];
    let row: Vec<f64> = (0..n).map(|j| d.prob(&[s, j])).collect();
    let total: f64 = row.iter().sum();
    (total > 0.0).then(|| row.into_iter().map(|v| v / total).collect())
}

fn rows_identical(d: &JointDistribution, tol: f64) -> bool {
    let rows: Vec<Vec<f64>> = (0..d.space().shape()[0]).filter_map(|s| conditional_row(d, s)).collect();
    rows.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| (a - b).abs() <= tol))
}
