//! Log-binomial correlations.
//!
//! A formal binomial `r₁⋯r_k − r_{k+1}⋯r_l` over `(X,Y)` states induces the
//! noise correlation `β_s = Σ_plus log Q(r|s) − Σ_minus log Q(r|s)` and the
//! signal correlation `α`, the same expression on the `(X,Y)` marginal. The
//! determinant binomial `(x,y)(x',y') − (x,y')(x',y)` vanishes exactly on
//! independence, so `β_s(Q⁰) = 0` for every `s`.

use serde::{Serialize, Serializer};

use crate::domain::{shuffle_distribution, view3, KernelBasisVector, MarginalPair};
use crate::dist::JointDistribution;
use crate::{Error, Result};

/// Values within this distance of zero have [`Sign::Zero`].
pub const SIGN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64, tol: f64) -> Self {
        if v > tol {
            Sign::Positive
        } else if v < -tol {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binomial {
    plus: Vec<(usize, usize)>,
    minus: Vec<(usize, usize)>,
}

impl Binomial {
    pub fn new(plus: Vec<(usize, usize)>, minus: Vec<(usize, usize)>) -> Result<Self> {
        if plus.is_empty() || minus.is_empty() {
            return Err(Error::Precondition("both monomials of a binomial must be non-empty".into()));
        }
        Ok(Self { plus, minus })
    }

    /// `(x,y)(x2,y2) − (x,y2)(x2,y)`.
    pub fn determinant(x: usize, y: usize, x2: usize, y2: usize) -> Self {
        Self { plus: vec![(x, y), (x2, y2)], minus: vec![(x, y2), (x2, y)] }
    }

    /// The binomial associated with the direction of a kernel basis vector.
    pub fn from_basis(b: &KernelBasisVector) -> Self {
        Self::determinant(b.x, b.y, b.x2, b.y2)
    }

    pub fn plus(&self) -> &[(usize, usize)] {
        &self.plus
    }

    pub fn minus(&self) -> &[(usize, usize)] {
        &self.minus
    }

    pub fn is_homogeneous(&self) -> bool {
        self.plus.len() == self.minus.len()
    }

    fn evaluate(&self, p: impl Fn(usize, usize) -> f64) -> CorrelationValue {
        let mut acc = 0.0;
        for &(x, y) in &self.plus {
            let v = p(x, y);
            if v <= 0.0 {
                return CorrelationValue::UNDEFINED;
            }
            acc += v.ln();
        }
        for &(x, y) in &self.minus {
            let v = p(x, y);
            if v <= 0.0 {
                return CorrelationValue::UNDEFINED;
            }
            acc -= v.ln();
        }
        CorrelationValue { value: acc, defined: true }
    }
}

/// A log-scale correlation; `defined` is false when a zero probability
/// entered the expression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationValue {
    pub value: f64,
    pub defined: bool,
}

impl CorrelationValue {
    pub const UNDEFINED: CorrelationValue = CorrelationValue { value: f64::NAN, defined: false };

    pub fn get(self) -> Option<f64> {
        self.defined.then_some(self.value)
    }

    pub fn sign(self) -> Option<Sign> {
        self.get().map(|v| Sign::of(v, SIGN_TOL))
    }
}

impl Serialize for CorrelationValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.get().serialize(serializer)
    }
}

/// Noise correlation `β_s` computed from the conditional `Q(·,·|s)`.
pub fn beta(q: &JointDistribution, b: &Binomial, s: usize) -> Result<CorrelationValue> {
    let v = sxy(q)?;
    if s >= v.shape()[0] {
        return Err(Error::Precondition(format!("state {s} of S out of range")));
    }
    let ps: f64 = v.slice(ndarray::s![s, .., ..]).sum();
    if ps <= 0.0 {
        return Ok(CorrelationValue::UNDEFINED);
    }
    Ok(b.evaluate(|x, y| v[[s, x, y]] / ps))
}

/// Noise correlation computed from the joint slice `Q(s,·,·)`. Equal to
/// [`beta`] for homogeneous binomials.
pub fn beta_joint(q: &JointDistribution, b: &Binomial, s: usize) -> Result<CorrelationValue> {
    let v = sxy(q)?;
    if s >= v.shape()[0] {
        return Err(Error::Precondition(format!("state {s} of S out of range")));
    }
    Ok(b.evaluate(|x, y| v[[s, x, y]]))
}

/// Signal correlation on the `(X,Y)` marginal. Accepts a distribution over
/// `S × X × Y` or directly over `X × Y`.
pub fn alpha(q: &JointDistribution, b: &Binomial) -> Result<CorrelationValue> {
    match q.space().ndim() {
        2 => Ok(b.evaluate(|x, y| q.prob(&[x, y]))),
        3 => {
            let v = view3(q);
            Ok(b.evaluate(|x, y| v.slice(ndarray::s![.., x, y]).sum()))
        }
        _ => Err(Error::Precondition("expected two or three axes".into())),
    }
}

/// `α(Q⁰)`, the shuffled signal correlation.
pub fn shuffled_signal_correlation(p: &MarginalPair, b: &Binomial) -> Result<CorrelationValue> {
    alpha(&shuffle_distribution(p)?, b)
}

/// Sign of `α(Q⁰)` for the determinant binomial when `S` has two states,
/// from the product `(P(x₁|s₁) − P(x₁|s₂))(P(y₁|s₁) − P(y₁|s₂))`.
pub fn signal_sign_n2(p: &MarginalPair) -> Result<Sign> {
    if p.ns() != 2 || p.nx() != 2 || p.ny() != 2 {
        return Err(Error::Precondition("requires binary S, X and Y".into()));
    }
    let (Some(x1), Some(x2), Some(y1), Some(y2)) = (p.x_given_s(0), p.x_given_s(1), p.y_given_s(0), p.y_given_s(1))
    else {
        return Err(Error::Precondition("requires P(s) > 0 for both states".into()));
    };
    Ok(Sign::of((x1[0] - x2[0]) * (y1[0] - y2[0]), SIGN_TOL))
}

fn sxy(q: &JointDistribution) -> Result<ndarray::ArrayView3<'_, f64>> {
    if q.space().ndim() != 3 {
        return Err(Error::Precondition("expected a distribution over S × X × Y".into()));
    }
    Ok(view3(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::StateSpace;
    use crate::domain::{build_domain, derivative_along_basis};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_joint(rng: &mut ChaCha8Rng, ns: usize, nx: usize, ny: usize) -> JointDistribution {
        let raw: Vec<f64> = (0..ns * nx * ny).map(|_| rng.random_range(0.05..1.0)).collect();
        JointDistribution::renormalized(StateSpace::sxy(ns, nx, ny).unwrap(), raw).unwrap()
    }

    #[test]
    fn beta_vanishes_at_shuffle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_joint(&mut rng, 3, 2, 3);
        let q0 = shuffle_distribution(&MarginalPair::from_joint(&q).unwrap()).unwrap();
        let b = Binomial::determinant(0, 0, 1, 2);
        for s in 0..3 {
            assert_abs_diff_eq!(beta(&q0, &b, s).unwrap().value, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_cells_are_undefined() {
        let q = JointDistribution::from_vec(StateSpace::sxy(2, 2, 2).unwrap(), vec![0.0, 0.25, 0.25, 0.0, 0.125, 0.125, 0.125, 0.125]).unwrap();
        let b = Binomial::determinant(0, 0, 1, 1);
        assert!(!beta(&q, &b, 0).unwrap().defined);
        assert!(beta(&q, &b, 1).unwrap().defined);
        let xy = JointDistribution::from_vec(StateSpace::new([("X", 2), ("Y", 2)]).unwrap(), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(alpha(&xy, &b).unwrap().get(), None);
    }

    #[test]
    fn alpha_of_worked_matrix_is_log_24() {
        let xy = [0.75, 1.0 / 16.0, 1.0 / 16.0, 0.125];
        let data: Vec<f64> = xy.iter().chain(xy.iter()).map(|v| v / 2.0).collect();
        let q = JointDistribution::from_vec(StateSpace::sxy(2, 2, 2).unwrap(), data).unwrap();
        let a = alpha(&q, &Binomial::determinant(0, 0, 1, 1)).unwrap();
        assert_abs_diff_eq!(a.value, 24f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn homogeneous_joint_and_conditional_beta_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_joint(&mut rng, 2, 3, 3);
        let b = Binomial::new(vec![(0, 0), (1, 2), (2, 1)], vec![(0, 1), (1, 1), (2, 2)]).unwrap();
        assert!(b.is_homogeneous());
        for s in 0..2 {
            assert_abs_diff_eq!(beta(&q, &b, s).unwrap().value, beta_joint(&q, &b, s).unwrap().value, epsilon = 1e-12);
        }
        let inhom = Binomial::new(vec![(0, 0)], vec![(0, 1), (1, 1)]).unwrap();
        assert!(!inhom.is_homogeneous());
    }

    #[test]
    fn derivative_equals_beta_minus_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let q = random_joint(&mut rng, 2, 3, 2);
            let d = build_domain(&MarginalPair::from_joint(&q).unwrap()).unwrap();
            for bv in d.basis() {
                let b = Binomial::from_basis(bv);
                let expect = beta(&q, &b, bv.s).unwrap().value - alpha(&q, &b).unwrap().value;
                assert_abs_diff_eq!(derivative_along_basis(&q, bv).unwrap(), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn signal_sign_fixtures() {
        let mk = |x1: f64, x2: f64, y1: f64, y2: f64| {
            let a = JointDistribution::from_vec(StateSpace::new([("S", 2), ("X", 2)]).unwrap(), vec![x1 / 2.0, (1.0 - x1) / 2.0, x2 / 2.0, (1.0 - x2) / 2.0]).unwrap();
            let b = JointDistribution::from_vec(StateSpace::new([("S", 2), ("Y", 2)]).unwrap(), vec![y1 / 2.0, (1.0 - y1) / 2.0, y2 / 2.0, (1.0 - y2) / 2.0]).unwrap();
            MarginalPair::new(a, b).unwrap()
        };
        assert_eq!(signal_sign_n2(&mk(0.3, 0.3, 0.2, 0.7)).unwrap(), Sign::Zero);
        assert_eq!(signal_sign_n2(&mk(0.25, 0.75, 0.125, 0.5)).unwrap(), Sign::Positive);
        assert_eq!(signal_sign_n2(&mk(0.25, 0.75, 0.5, 0.125)).unwrap(), Sign::Negative);
        let uni = mk(0.5, 0.5, 0.5, 0.5);
        assert_eq!(shuffled_signal_correlation(&uni, &Binomial::determinant(0, 0, 1, 1)).unwrap().value, 0.0);
    }
}
