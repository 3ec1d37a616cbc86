//! Finite joint distributions and the Shannon functionals on them.
//!
//! Distributions are dense tensors over a product of named axes. Every
//! functional works in nats and uses `0·log 0 = 0`. The derivative routines
//! refuse zero-probability states instead of extending by limits, because on
//! the boundary of the simplex those derivatives need not exist.

use std::collections::HashSet;
use std::f64::consts::LN_2;
use std::fmt;

use ndarray::{ArrayD, Axis as NdAxis, IxDyn};
use serde::{Serialize, Serializer};

use crate::{Error, Result};

/// Tolerance on `Σ p = 1` when a distribution is constructed.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tolerance on `Σ v = 0` for tangent vectors, relative to `max(1, Σ|v|)`.
pub const TANGENT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Axis {
    pub name: String,
    pub card: usize,
}

/// Ordered list of named axes, each with at least two states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateSpace {
    axes: Vec<Axis>,
}

impl StateSpace {
    pub fn new<I, N>(axes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (N, usize)>,
        N: Into<String>,
    {
        let axes: Vec<Axis> = axes
            .into_iter()
            .map(|(name, card)| Axis { name: name.into(), card })
            .collect();
        if axes.is_empty() {
            return Err(Error::InvalidPartition("a state space needs at least one axis".into()));
        }
        let mut seen = HashSet::new();
        for a in &axes {
            if a.card < 2 {
                return Err(Error::Cardinality { name: a.name.clone(), card: a.card });
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::DuplicateAxis(a.name.clone()));
            }
        }
        Ok(Self { axes })
    }

    /// The three-axis space `S × X × Y` used throughout the crate.
    pub fn sxy(ns: usize, nx: usize, ny: usize) -> Result<Self> {
        Self::new([("S", ns), ("X", nx), ("Y", ny)])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.card).collect()
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    /// Number of joint states.
    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.card).product()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let p = self.position(n)?;
            if out.contains(&p) {
                return Err(Error::DuplicateAxis(n.to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    fn select(&self, positions: &[usize]) -> StateSpace {
        StateSpace { axes: positions.iter().map(|&p| self.axes[p].clone()).collect() }
    }
}

/// Information quantity stored in nats.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct InfoValue(f64);

impl InfoValue {
    pub fn from_nats(nats: f64) -> Self {
        Self(nats)
    }

    pub fn nats(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / LN_2
    }
}

impl fmt::Display for InfoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nats ({} bits)", self.0, self.bits())
    }
}

impl Serialize for InfoValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("InfoValue", 2)?;
        st.serialize_field("nats", &self.0)?;
        st.serialize_field("bits", &self.bits())?;
        st.end()
    }
}

/// Dense probability tensor over a [`StateSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    space: StateSpace,
    mass: ArrayD<f64>,
}

impl JointDistribution {
    /// Validates nonnegativity, finiteness and normalization (tolerance
    /// [`NORMALIZATION_TOL`]).
    pub fn new(space: StateSpace, mass: ArrayD<f64>) -> Result<Self> {
        check_shape(&space, mass.shape())?;
        let mut total = 0.0;
        for (i, &v) in mass.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMass { index: i, value: v });
            }
            total += v;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { space, mass })
    }

    /// Row-major entries, last axis fastest.
    pub fn from_vec(space: StateSpace, data: Vec<f64>) -> Result<Self> {
        let mass = to_array(&space, data)?;
        Self::new(space, mass)
    }

    /// Divides by the total mass. Only for callers that explicitly opt in.
    pub fn renormalized(space: StateSpace, data: Vec<f64>) -> Result<Self> {
        let mut mass = to_array(&space, data)?;
        for (i, &v) in mass.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMass { index: i, value: v });
            }
        }
        let total = mass.sum();
        if total <= 0.0 {
            return Err(Error::NotNormalized(total));
        }
        mass.mapv_inplace(|v| v / total);
        Self::new(space, mass)
    }

    pub fn uniform(space: StateSpace) -> Self {
        let n = space.size() as f64;
        let mass = ArrayD::from_elem(IxDyn(&space.shape()), 1.0 / n);
        Self { space, mass }
    }

    /// Builds from an array that is known to be a distribution up to rounding.
    pub(crate) fn from_parts(space: StateSpace, mass: ArrayD<f64>) -> Self {
        debug_assert_eq!(space.shape(), mass.shape());
        Self { space, mass }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn mass(&self) -> &ArrayD<f64> {
        &self.mass
    }

    pub fn prob(&self, index: &[usize]) -> f64 {
        self.mass[IxDyn(index)]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.mass.iter().copied().collect()
    }

    /// Sums out every axis not listed in `keep`. The result keeps the axis
    /// order of `self`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidPartition("keep-axes must be non-empty".into()));
        }
        let mut pos = self.space.positions(keep)?;
        pos.sort_unstable();
        Ok(self.marginalize_positions(&pos))
    }

    /// `keep` must be sorted and non-empty.
    pub(crate) fn marginalize_positions(&self, keep: &[usize]) -> Self {
        Self { space: self.space.select(keep), mass: sum_out(&self.mass, keep) }
    }

    /// Renormalized slice at `axis = state`.
    pub fn condition(&self, axis: &str, state: usize) -> Result<Self> {
        let p = self.space.position(axis)?;
        let card = self.space.axes[p].card;
        if state >= card {
            return Err(Error::ShapeMismatch { expected: vec![card], found: vec![state + 1] });
        }
        if self.space.ndim() == 1 {
            return Err(Error::InvalidPartition("cannot condition on the only axis".into()));
        }
        let slice = self.mass.index_axis(NdAxis(p), state);
        let total = slice.sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityEvent { axis: axis.to_string(), state });
        }
        let rest: Vec<usize> = (0..self.space.ndim()).filter(|&i| i != p).collect();
        Ok(Self { space: self.space.select(&rest), mass: slice.mapv(|v| v / total) })
    }

    /// Product of the marginals on the axis groups `a` and `b`, laid out in
    /// the axis order of `self`.
    pub fn product_of_marginals(&self, a: &[&str], b: &[&str]) -> Result<Self> {
        let (pa, pb) = partition(&self.space, a, b)?;
        let ma = sum_out(&self.mass, &pa);
        let mb = sum_out(&self.mass, &pb);
        let mut out = ArrayD::zeros(self.mass.raw_dim());
        for (idx, v) in out.indexed_iter_mut() {
            let ia: Vec<usize> = pa.iter().map(|&p| idx[p]).collect();
            let ib: Vec<usize> = pb.iter().map(|&p| idx[p]).collect();
            *v = ma[IxDyn(&ia)] * mb[IxDyn(&ib)];
        }
        Ok(Self { space: self.space.clone(), mass: out })
    }
}

/// Signed direction tangent to the simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    space: StateSpace,
    delta: ArrayD<f64>,
}

impl TangentVector {
    pub fn new(space: StateSpace, delta: ArrayD<f64>) -> Result<Self> {
        check_shape(&space, delta.shape())?;
        let sum: f64 = delta.sum();
        let scale: f64 = delta.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if !sum.is_finite() || sum.abs() > TANGENT_TOL * scale {
            return Err(Error::NotTangent(sum));
        }
        Ok(Self { space, delta })
    }

    pub fn from_vec(space: StateSpace, data: Vec<f64>) -> Result<Self> {
        let delta = to_array(&space, data)?;
        Self::new(space, delta)
    }

    pub fn zeros(space: StateSpace) -> Self {
        let delta = ArrayD::zeros(IxDyn(&space.shape()));
        Self { space, delta }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn delta(&self) -> &ArrayD<f64> {
        &self.delta
    }

    fn marginalize_positions(&self, keep: &[usize]) -> Self {
        Self { space: self.space.select(keep), delta: sum_out(&self.delta, keep) }
    }

    /// `q + h·v` without validation; used by finite-difference checks.
    pub fn step(&self, q: &JointDistribution, h: f64) -> Result<JointDistribution> {
        if q.space != self.space {
            return Err(Error::ShapeMismatch { expected: q.space.shape(), found: self.space.shape() });
        }
        JointDistribution::new(q.space.clone(), &q.mass + &(&self.delta * h))
    }
}

pub fn marginalize(q: &JointDistribution, keep: &[&str]) -> Result<JointDistribution> {
    q.marginalize(keep)
}

pub fn condition(q: &JointDistribution, axis: &str, state: usize) -> Result<JointDistribution> {
    q.condition(axis, state)
}

/// Shannon entropy `−Σ q log q`.
pub fn entropy(q: &JointDistribution) -> InfoValue {
    InfoValue(entropy_of(q.mass.iter().copied()))
}

pub(crate) fn entropy_of(values: impl Iterator<Item = f64>) -> f64 {
    let h: f64 = values.filter(|&v| v > 0.0).map(|v| -v * v.ln()).sum();
    h.max(0.0)
}

/// `I(A:B) = H(A) + H(B) − H(A,B)` for a partition of the axes of `q`.
pub fn mutual_information(q: &JointDistribution, a: &[&str], b: &[&str]) -> Result<InfoValue> {
    let (pa, pb) = partition(&q.space, a, b)?;
    let ha = entropy_of(sum_out(&q.mass, &pa).iter().copied());
    let hb = entropy_of(sum_out(&q.mass, &pb).iter().copied());
    let hab = entropy_of(q.mass.iter().copied());
    Ok(InfoValue((ha + hb - hab).max(0.0)))
}

/// `D(p‖q) = Σ p log(p/q)`.
pub fn kl_divergence(p: &JointDistribution, q: &JointDistribution) -> Result<InfoValue> {
    if p.space.shape() != q.space.shape() {
        return Err(Error::ShapeMismatch { expected: p.space.shape(), found: q.space.shape() });
    }
    let mut d = 0.0;
    for ((idx, &pv), &qv) in p.mass.indexed_iter().zip(q.mass.iter()) {
        if pv > 0.0 {
            if qv <= 0.0 {
                return Err(Error::SupportMismatch(ndarray::Dimension::slice(&idx).to_vec()));
            }
            d += pv * (pv / qv).ln();
        }
    }
    Ok(InfoValue(d.max(0.0)))
}

/// `D_v H(q) = −Σ v_i log q_i`.
pub fn entropy_directional_derivative(q: &JointDistribution, v: &TangentVector) -> Result<f64> {
    if q.space.shape() != v.space.shape() {
        return Err(Error::ShapeMismatch { expected: q.space.shape(), found: v.space.shape() });
    }
    directional(&q.mass, &v.delta)
}

fn directional(q: &ArrayD<f64>, v: &ArrayD<f64>) -> Result<f64> {
    let mut d = 0.0;
    for ((idx, &qv), &vv) in q.indexed_iter().zip(v.iter()) {
        if vv != 0.0 {
            if qv <= 0.0 {
                return Err(Error::ZeroProbabilityOnDirection(ndarray::Dimension::slice(&idx).to_vec()));
            }
            d -= vv * qv.ln();
        }
    }
    Ok(d)
}

/// `D_v I(A:B) = D_v H(A) + D_v H(B) − D_v H(A,B)`, each term evaluated on the
/// induced marginal direction.
pub fn mi_directional_derivative(
    q: &JointDistribution,
    v: &TangentVector,
    a: &[&str],
    b: &[&str],
) -> Result<f64> {
    if q.space.shape() != v.space.shape() {
        return Err(Error::ShapeMismatch { expected: q.space.shape(), found: v.space.shape() });
    }
    let (pa, pb) = partition(&q.space, a, b)?;
    let qa = q.marginalize_positions(&pa);
    let qb = q.marginalize_positions(&pb);
    let va = v.marginalize_positions(&pa);
    let vb = v.marginalize_positions(&pb);
    Ok(directional(&qa.mass, &va.delta)? + directional(&qb.mass, &vb.delta)?
        - directional(&q.mass, &v.delta)?)
}

/// Positions of the two axis groups, each sorted; errors unless they
/// partition the space.
fn partition(space: &StateSpace, a: &[&str], b: &[&str]) -> Result<(Vec<usize>, Vec<usize>)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidPartition("both axis groups must be non-empty".into()));
    }
    let mut pa = space.positions(a)?;
    let mut pb = space.positions(b)?;
    if pa.iter().any(|p| pb.contains(p)) {
        return Err(Error::InvalidPartition("axis groups overlap".into()));
    }
    if pa.len() + pb.len() != space.ndim() {
        return Err(Error::InvalidPartition("axis groups do not cover every axis".into()));
    }
    pa.sort_unstable();
    pb.sort_unstable();
    Ok((pa, pb))
}

fn sum_out(mass: &ArrayD<f64>, keep: &[usize]) -> ArrayD<f64> {
    let mut out = mass.clone();
    for ax in (0..mass.ndim()).rev() {
        if !keep.contains(&ax) {
            out = out.sum_axis(NdAxis(ax));
        }
    }
    out
}

fn check_shape(space: &StateSpace, shape: &[usize]) -> Result<()> {
    if space.shape() != shape {
        return Err(Error::ShapeMismatch { expected: space.shape(), found: shape.to_vec() });
    }
    Ok(())
}

fn to_array(space: &StateSpace, data: Vec<f64>) -> Result<ArrayD<f64>> {
    let n = data.len();
    ArrayD::from_shape_vec(IxDyn(&space.shape()), data)
        .map_err(|_| Error::ShapeMismatch { expected: space.shape(), found: vec![n] })
}
