//! Minimization of `I(S : X,Y)` over the correlation domain.
//!
//! Since `P(s)` is fixed on `Δ_P`, the objective is convex. Two solvers are
//! provided:
//!
//! * **Level curve** (binary `X`, `Y`, any `|S|`). An interior minimizer
//!   satisfies `β_s = α` for every `s`. For a common level `C`, each slice has
//!   a unique point with `β_s = C`, found by a stable quadratic formula. The
//!   scalar equation `α(C) = C` is solved by bisection. Without a root the
//!   minimizer is one of the two uniform corners.
//! * **Frank–Wolfe** (general). Pairwise steps on one slice at a time, with an
//!   exact transportation oracle and an exact line search, followed by a
//!   Newton polish on the face identified by the support.
//!
//! [`classify_minimizer`] checks the structural statements about binary
//! minimizers (sign pattern, boundary pattern, uniqueness).

mod classification;
mod frank_wolfe;
mod level_curve;

use ndarray::{Array2, Array3, ArrayView3};
use serde::Serialize;

use crate::binomial::{alpha, beta, Binomial, CorrelationValue, Sign, SIGN_TOL};
use crate::dist::{InfoValue, JointDistribution};
use crate::domain::{view3, CorrelationDomain, DomainCoords};
use crate::{Error, Result};

pub use classification::{
    classification_error, classification_error_grid, minimize_classification_error, ErrorReport, ErrorSearch,
};

/// Default first-order tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default iteration budget of the general solver.
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// A minimizer closer than this to the boundary (in probability units) is
/// labeled [`Location::Boundary`].
pub const CLASS_MARGIN: f64 = 1e-7;

/// Tolerance of the `X ⊥ S` and `Y ⊥ S` tests deciding non-uniqueness.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Interior,
    Boundary,
    NonUniqueSegment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Level curve for binary `X`, `Y`; Frank–Wolfe otherwise.
    #[default]
    Auto,
    LevelCurve,
    FrankWolfe,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub method: Method,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS, method: Method::Auto }
    }
}

/// Which uniform corner of the box a binary boundary minimizer sits at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerPattern {
    AllMin,
    AllMax,
    Mixed,
}

/// Raw evidence about a minimizer.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    /// Sign of each coordinate of `t*`.
    pub t_signs: Vec<Sign>,
    /// `α(Q⁰)` of the determinant binomial of each basis direction.
    pub alpha_q0: Vec<CorrelationValue>,
    /// `β_s(Q*) − α(Q*)` per basis direction; empty when undefined.
    pub residuals: Vec<f64>,
    /// Corner pattern of `t*` in the binary case.
    pub corner_pattern: Option<CornerPattern>,
    pub x_independent_of_s: bool,
    pub y_independent_of_s: bool,
    /// Smallest entry of `Q*` over the cells that are not forced to zero.
    pub min_margin: f64,
    /// Set when the solver found a critical point lying within the margin.
    pub near_interior: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizerReport {
    #[serde(serialize_with = "serialize_dist")]
    pub q_star: JointDistribution,
    pub t_star: DomainCoords,
    pub i_star: InfoValue,
    pub location: Location,
    pub certificate: Certificate,
    pub method: Method,
    pub iterations: usize,
    /// First-order gap at `q_star` (Frank–Wolfe gap or level-curve residual).
    pub gap: f64,
    /// Objective values in the order the solver visited them.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Finds a minimizer of `I(S : X,Y)` over `d`.
pub fn minimize_information(d: &CorrelationDomain, opts: &MinimizeOptions) -> Result<MinimizerReport> {
    let method = match opts.method {
        Method::Auto if d.is_binary() => Method::LevelCurve,
        Method::Auto => Method::FrankWolfe,
        m => m,
    };
    let x_ind = d.pair().x_independent_of_s(INDEPENDENCE_TOL);
    let y_ind = d.pair().y_independent_of_s(INDEPENDENCE_TOL);
    if x_ind && y_ind {
        // I(Q⁰) = 0 and every point of the zero locus is a minimizer.
        let q0 = d.q0_view().to_owned();
        let i0 = information(q0.view());
        return finish(d, q0, method, 0, 0.0, vec![i0], true, Location::NonUniqueSegment);
    }
    match method {
        Method::LevelCurve => level_curve::solve(d, opts),
        _ => frank_wolfe::solve(d, opts),
    }
}

/// `I(S : X,Y)` in nats for a tensor indexed `(s, x, y)`.
pub(crate) fn information(q: ArrayView3<f64>) -> f64 {
    let ps: Vec<f64> = q.outer_iter().map(|m| m.sum()).collect();
    let qxy = marginal_xy(q);
    let mut acc = 0.0;
    for ((s, x, y), &v) in q.indexed_iter() {
        if v > 0.0 {
            // Rounding can leave the (x,y) marginal a hair below one of its cells.
            acc += v * (v / (ps[s] * qxy[[x, y]].max(v))).ln();
        }
    }
    acc.max(0.0)
}

pub(crate) fn marginal_xy(q: ArrayView3<f64>) -> Array2<f64> {
    q.sum_axis(ndarray::Axis(0))
}

/// Builds the report, decides the location and fills the certificate.
#[allow(clippy::too_many_arguments)]
fn finish(
    d: &CorrelationDomain,
    q: Array3<f64>,
    method: Method,
    iterations: usize,
    gap: f64,
    trace: Vec<f64>,
    critical: bool,
    forced: Location,
) -> Result<MinimizerReport> {
    let q0 = d.q0_view();
    let space = d.q0().space().clone();
    let i_star = InfoValue::from_nats(information(q.view()));
    let q_star = JointDistribution::from_parts(space, q.into_dyn());
    let t_star = DomainCoords::new(d.basis().iter().map(|b| q_star.prob(&[b.s, b.x2, b.y2]) - q0[[b.s, b.x2, b.y2]]).collect());
    let margin = view3(&q_star)
        .iter()
        .zip(q0.iter())
        .filter(|(_, &b)| b > 0.0)
        .map(|(&a, _)| a)
        .fold(f64::INFINITY, f64::min);
    let location = match forced {
        Location::NonUniqueSegment => Location::NonUniqueSegment,
        _ if margin > CLASS_MARGIN => Location::Interior,
        _ => Location::Boundary,
    };
    let near_interior = location == Location::Boundary && critical;
    let certificate = certificate(d, &q_star, &t_star, margin, near_interior)?;
    Ok(MinimizerReport { q_star, t_star, i_star, location, certificate, method, iterations, gap, trace })
}

fn certificate(
    d: &CorrelationDomain,
    q_star: &JointDistribution,
    t_star: &DomainCoords,
    min_margin: f64,
    near_interior: bool,
) -> Result<Certificate> {
    let t_signs = t_star.t.iter().map(|&t| Sign::of(t, SIGN_TOL)).collect();
    let mut alpha_q0 = Vec::with_capacity(d.dims());
    for b in d.basis() {
        alpha_q0.push(alpha(d.q0(), &Binomial::from_basis(b))?);
    }
    let residuals = critical_condition_residual(q_star, d).unwrap_or_default();
    let corner_pattern = d.bounds().map(|bounds| {
        let active: Vec<&(f64, f64)> = bounds.iter().filter(|(lo, hi)| hi > lo).collect();
        let at = |f: &dyn Fn(usize, &(f64, f64)) -> bool| {
            bounds.iter().enumerate().filter(|(_, (lo, hi))| hi > lo).all(|(k, bd)| f(k, bd))
        };
        let near = |v: f64, target: f64| (v - target).abs() <= CLASS_MARGIN;
        if !active.is_empty() && at(&|k, &(lo, _)| near(t_star.t[k], lo)) {
            CornerPattern::AllMin
        } else if !active.is_empty() && at(&|k, &(_, hi)| near(t_star.t[k], hi)) {
            CornerPattern::AllMax
        } else {
            CornerPattern::Mixed
        }
    });
    Ok(Certificate {
        t_signs,
        alpha_q0,
        residuals,
        corner_pattern,
        x_independent_of_s: d.pair().x_independent_of_s(INDEPENDENCE_TOL),
        y_independent_of_s: d.pair().y_independent_of_s(INDEPENDENCE_TOL),
        min_margin,
        near_interior,
    })
}

/// `β_s(q) − α(q)` for the binomial of each basis direction of `d`.
pub fn critical_condition_residual(q: &JointDistribution, d: &CorrelationDomain) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(d.dims());
    for bv in d.basis() {
        let b = Binomial::from_basis(bv);
        match (beta(q, &b, bv.s)?.get(), alpha(q, &b)?.get()) {
            (Some(be), Some(al)) => out.push(be - al),
            _ => {
                return Err(Error::ZeroProbabilityOnDirection(vec![bv.s, bv.x, bv.y]));
            }
        }
    }
    Ok(out)
}

/// Outcome of checking a binary minimizer against the structure theorem.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TheoremCheck {
    /// Every `t*_s` has the sign of `α(Q⁰)`.
    pub sign_pattern: bool,
    /// A boundary minimizer sits at a uniform corner whose vanishing cell is
    /// the smaller product `P(x|s)P(y|s)` in every slice.
    pub boundary_pattern: bool,
    /// The minimizer is non-unique exactly when `X ⊥ S` and `Y ⊥ S`.
    pub uniqueness: bool,
    /// Human-readable descriptions of violated statements.
    pub violations: Vec<String>,
}

impl TheoremCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sign tolerance used when comparing `t*` with `α(Q⁰)`. Coordinates and
/// correlations below it count as zero.
const PATTERN_TOL: f64 = 1e-9;

/// Checks a binary minimizer: sign pattern, boundary corner pattern and the
/// independence characterization of non-uniqueness. Violations are returned
/// as counterexample candidates, not as errors.
pub fn classify_minimizer(d: &CorrelationDomain, report: &MinimizerReport) -> Result<TheoremCheck> {
    let Some(bounds) = d.bounds() else {
        return Err(Error::Precondition("the structure theorem concerns binary X and Y".into()));
    };
    if bounds.iter().any(|(lo, hi)| hi <= lo) {
        return Err(Error::Precondition("Q⁰ must have full support in every slice".into()));
    }
    let mut violations = Vec::new();
    let cert = &report.certificate;

    let mut sign_pattern = true;
    if report.location != Location::NonUniqueSegment {
        let Some(a0) = cert.alpha_q0[0].get() else {
            return Err(Error::Precondition("α(Q⁰) undefined".into()));
        };
        for (k, &t) in report.t_star.t.iter().enumerate() {
            let bad = (t * a0 < 0.0 && t.abs() > PATTERN_TOL && a0.abs() > PATTERN_TOL)
                || (a0.abs() <= SIGN_TOL && t.abs() > PATTERN_TOL)
                || (t.abs() <= SIGN_TOL && a0.abs() > PATTERN_TOL);
            if bad {
                sign_pattern = false;
                violations.push(format!("t*_{k} = {t:e} disagrees in sign with α(Q⁰) = {a0:e}"));
            }
        }
    }

    let mut boundary_pattern = true;
    if report.location == Location::Boundary && !cert.near_interior {
        let q0 = d.q0_view();
        match cert.corner_pattern {
            Some(CornerPattern::AllMin) | Some(CornerPattern::AllMax) => {
                let max = cert.corner_pattern == Some(CornerPattern::AllMax);
                // The vanishing cell must be the same (x,y) in every slice.
                let cells: Vec<[(usize, usize); 2]> = d
                    .basis()
                    .iter()
                    .map(|b| if max { [(b.x, b.y2), (b.x2, b.y)] } else { [(b.x, b.y), (b.x2, b.y2)] })
                    .collect();
                let labeled = |which: usize| {
                    d.basis().iter().zip(&cells).all(|(b, c)| {
                        let (small, big) = (c[which], c[1 - which]);
                        q0[[b.s, small.0, small.1]] <= q0[[b.s, big.0, big.1]] + 1e-15
                    })
                };
                if !(labeled(0) || labeled(1)) {
                    boundary_pattern = false;
                    violations.push("boundary corner without a consistent labeling of the vanishing cell".into());
                }
            }
            _ => {
                boundary_pattern = false;
                violations.push("boundary minimizer is not at a uniform corner".into());
            }
        }
    }

    let independent = cert.x_independent_of_s && cert.y_independent_of_s;
    let non_unique = report.location == Location::NonUniqueSegment;
    let mut uniqueness = independent == non_unique;
    if !uniqueness {
        violations.push(format!("non-unique = {non_unique} but X⊥S ∧ Y⊥S = {independent}"));
    } else if non_unique {
        // The diagonal from the all-min to the all-max corner is a zero line.
        let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let hi: Vec<f64> = bounds.iter().map(|b| b.1).collect();
        for i in 0..=10 {
            let lam = i as f64 / 10.0;
            let t = DomainCoords::new(lo.iter().zip(&hi).map(|(a, b)| a + lam * (b - a)).collect());
            let v = information(d.embed_unchecked(&t).view());
            if v > 1e-12 {
                uniqueness = false;
                violations.push(format!("I = {v:e} on the diagonal at λ = {lam}"));
            }
        }
    } else if report.location == Location::Interior {
        // Strict convexity at the minimizer: the Hessian D − κ·11ᵀ is positive definite.
        if !hessian_positive_definite(d, &report.q_star) {
            uniqueness = false;
            violations.push("Hessian at the interior minimizer is not positive definite".into());
        }
    }

    Ok(TheoremCheck { sign_pattern, boundary_pattern, uniqueness, violations })
}

/// Hessian of `I` in the box coordinates at an interior binary point.
fn hessian_positive_definite(d: &CorrelationDomain, q: &JointDistribution) -> bool {
    let v = view3(q);
    let qxy = marginal_xy(v);
    let n = d.dims();
    let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (i, bi) in d.basis().iter().enumerate() {
        for (j, bj) in d.basis().iter().enumerate() {
            let mut acc = 0.0;
            for ((si, xi, yi), ei) in bi.entries() {
                for ((sj, xj, yj), ej) in bj.entries() {
                    if (xi, yi) == (xj, yj) {
                        acc -= ei * ej / qxy[[xi, yi]];
                        if si == sj {
                            acc += ei * ej / v[[si, xi, yi]];
                        }
                    }
                }
            }
            h[(i, j)] = acc;
        }
    }
    h.cholesky().is_some()
}

fn serialize_dist<S: serde::Serializer>(q: &JointDistribution, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("JointDistribution", 2)?;
    st.serialize_field("shape", &q.space().shape())?;
    st.serialize_field("mass", &q.to_vec())?;
    st.end()
}
