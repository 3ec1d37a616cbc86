//! Decompositions of `I(S : X,Y)`.
//!
//! Two decompositions are provided. The BROJA partial information
//! decomposition uses the minimizer `Q*` of `I` over `Δ_P` as its
//! nonsynergistic baseline. The series-expansion decomposition
//! `I = I_lin + I_ss + I_ci + I_cd` uses the shuffle distribution `Q⁰` instead.
//!
//! Two product distributions appear below and must not be confused:
//! [`conditional_product`] is `Q⁰(s,x,y) = P(s)P(x|s)P(y|s)` while
//! [`response_product`] is `P⁰(x,y) = P(x)P(y)`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Array3, ArrayView, ArrayView2, ArrayView3, Axis, Dimension, IntoDimension};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::{mi_directional_derivative, InfoValue, JointDistribution, StateSpace};
use crate::domain::{build_domain, view3, CorrelationDomain, DomainCoords, MarginalPair};
use crate::infomin::{information, minimize_information, MinimizeOptions, MinimizerReport};
use crate::{Error, Result};

/// Relative singular-value threshold for the rank condition.
pub const RANK_TOL: f64 = 1e-10;

/// Number of random points used by [`ici_linearity_check`].
pub const LINEARITY_SAMPLES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BrojaPid {
    pub si: InfoValue,
    pub ui_x: InfoValue,
    pub ui_y: InfoValue,
    pub ci: InfoValue,
}

impl BrojaPid {
    pub fn total(&self) -> f64 {
        self.si.nats() + self.ui_x.nats() + self.ui_y.nats() + self.ci.nats()
    }
}

/// Terms of the series expansion, in nats. `i_ss` is nonpositive and the other
/// terms need not be nonnegative except `i_cd`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesDecomposition {
    pub i_lin: InfoValue,
    pub i_ss: InfoValue,
    pub i_ci: InfoValue,
    pub i_cd: InfoValue,
    /// `I_cd` evaluated as `D(P_{S,R}‖Q⁰_{S,R}) − D(P_R‖Q⁰_R)`.
    pub i_cd_difference: f64,
}

impl SeriesDecomposition {
    pub fn total(&self) -> f64 {
        self.i_lin.nats() + self.i_ss.nats() + self.i_ci.nats() + self.i_cd.nats()
    }
}

/// Noise coefficients `γ(r|s)` indexed `[s, x, y]` and signal coefficients
/// `μ(r)` indexed `[x, y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrCoefficients {
    pub gamma: Array3<f64>,
    pub mu: Array2<f64>,
}

impl CorrCoefficients {
    /// `Q⁰(s,r)(1 + γ(r|s))`, which equals `q` wherever `Q⁰` is positive.
    pub fn reconstruct(&self, q0: &JointDistribution) -> Array3<f64> {
        let mut out = view3(q0).to_owned();
        out.zip_mut_with(&self.gamma, |a, g| *a *= 1.0 + g);
        out
    }

    /// Largest spread of `γ(r|s)` over the states `s` with positive mass.
    pub fn stimulus_spread(&self, p_s: &[f64]) -> f64 {
        let (_, nx, ny) = self.gamma.dim();
        let mut worst: f64 = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                let vals = p_s.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(s, _)| self.gamma[[s, x, y]]);
                let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
                if hi >= lo {
                    worst = worst.max(hi - lo);
                }
            }
        }
        worst
    }
}

/// The translation between the two decompositions together with the residual
/// of each identity relating them.
#[derive(Clone, Debug, Serialize)]
pub struct Translation {
    pub pid: BrojaPid,
    pub series: SeriesDecomposition,
    pub i_q0: InfoValue,
    pub i_star: InfoValue,
    /// `CI₀ = I(Q⁰) − I(Q*)`.
    pub ci0: InfoValue,
    /// `max(−CI₀, 0)`.
    pub ci0_negativity: f64,
    /// `SI + CI₀ + I_ss`.
    pub si_plus_ci0_residual: f64,
    /// `SI − CI₀ + I_ss`, which vanishes identically.
    pub si_minus_ci0_residual: f64,
    /// `CI − (I_ci + I_cd + CI₀)`.
    pub ci_residual: f64,
}

/// The stimulus-dependent-correlation zero locus through `Q⁰`.
#[derive(Clone, Debug, Serialize)]
pub struct IcdZeroSpace {
    pub exists: bool,
    pub dimension: usize,
    pub rank_x: usize,
    pub rank_y: usize,
    /// A basis of the admissible `γ(x,y)`, each indexed `[x][y]`.
    pub directions: Vec<Vec<Vec<f64>>>,
}

impl IcdZeroSpace {
    /// `Q⁰(s,x,y)(1 + Σ_k c_k γ_k(x,y))`. It has the marginals of `p` and
    /// `I_cd = 0`.
    pub fn point(&self, p: &MarginalPair, coeffs: &[f64]) -> Result<JointDistribution> {
        if coeffs.len() != self.dimension {
            return Err(Error::ShapeMismatch { expected: vec![self.dimension], found: vec![coeffs.len()] });
        }
        let mut q = shuffle_tensor(p);
        let (ns, nx, ny) = q.dim();
        for x in 0..nx {
            for y in 0..ny {
                let g: f64 = self.directions.iter().zip(coeffs).map(|(d, c)| c * d[x][y]).sum();
                for s in 0..ns {
                    let v = q[[s, x, y]] * (1.0 + g);
                    if v < -1e-15 {
                        return Err(Error::OutOfDomain { coord: 0, state: vec![s, x, y], value: v });
                    }
                    q[[s, x, y]] = v.max(0.0);
                }
            }
        }
        JointDistribution::new(p.joint_space()?, q.into_dyn())
    }
}

/// Outcome of fitting an affine function of the domain coordinates to `I_ci`.
#[derive(Clone, Debug, Serialize)]
pub struct LinearityCheck {
    pub samples: usize,
    /// Largest absolute residual of the least-squares affine fit.
    pub max_residual: f64,
    pub intercept: f64,
    /// Fitted slope per basis direction (joint-scale coordinates).
    pub coefficients: Vec<f64>,
    /// `C = log[Q⁰(x,y₀)Q⁰(x₀,y)/(Q⁰(x₀,y₀)Q⁰(x,y))]` per basis direction.
    pub log_coefficients: Vec<f64>,
    pub max_coefficient_error: f64,
    /// `∂I/∂t_k` at `Q⁰`.
    pub gradient_i: Vec<f64>,
    /// `∂I_cd/∂t_k` at `Q⁰` by central differences.
    pub gradient_icd: Vec<f64>,
    /// `max_k |∂(I_cd + I_{Q⁰})/∂t_k − ∂I/∂t_k|` at `Q⁰`.
    pub icd_tangency_gap: f64,
    /// `max_k |C_k − ∂I/∂t_k|` at `Q⁰`, i.e. tangency of `I_ci + I_{Q⁰}`.
    pub ici_tangency_gap: f64,
}

/// `Q⁰` on the same space as `q`. States of `S` with zero mass stay zero.
pub fn conditional_product(q: &JointDistribution) -> Result<JointDistribution> {
    let p = MarginalPair::from_joint(q)?;
    JointDistribution::new(q.space().clone(), shuffle_tensor(&p).into_dyn())
}

/// `P⁰(x,y) = P(x)P(y)` over the response axes of `q`.
pub fn response_product(q: &JointDistribution) -> Result<JointDistribution> {
    let v = checked_view(q)?;
    let (px, py) = (v.sum_axis(Axis(2)).sum_axis(Axis(0)), v.sum_axis(Axis(1)).sum_axis(Axis(0)));
    let axes = q.space().axes();
    let space = StateSpace::new([(axes[1].name.clone(), axes[1].card), (axes[2].name.clone(), axes[2].card)])?;
    let mass: Vec<f64> = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
    JointDistribution::new(space, Array2::from_shape_vec((px.len(), py.len()), mass).expect("shape").into_dyn())
}

fn checked_view(q: &JointDistribution) -> Result<ArrayView3<'_, f64>> {
    if q.space().ndim() != 3 {
        return Err(Error::Precondition("expected a distribution over exactly three axes".into()));
    }
    Ok(view3(q))
}

fn shuffle_tensor(p: &MarginalPair) -> Array3<f64> {
    let (ns, nx, ny) = (p.ns(), p.nx(), p.ny());
    let ps = p.p_s();
    Array3::from_shape_fn((ns, nx, ny), |(s, x, y)| {
        if ps[s] > 0.0 {
            p.p_sx().prob(&[s, x]) * p.p_sy().prob(&[s, y]) / ps[s]
        } else {
            0.0
        }
    })
}

/// `I(A:B)` of a two-way table.
fn table_information(m: ArrayView2<f64>) -> f64 {
    let (ra, cb) = (m.sum_axis(Axis(1)), m.sum_axis(Axis(0)));
    let mut acc = 0.0;
    for ((a, b), &v) in m.indexed_iter() {
        if v > 0.0 {
            acc += v * (v / (ra[a] * cb[b])).ln();
        }
    }
    acc.max(0.0)
}

fn pairwise_information(q: ArrayView3<f64>) -> (f64, f64) {
    (table_information(q.sum_axis(Axis(2)).view()), table_information(q.sum_axis(Axis(1)).view()))
}

/// `Σ p log(p/q)`, failing where `p > 0 = q`.
fn divergence<D: Dimension>(p: ArrayView<'_, f64, D>, q: ArrayView<'_, f64, D>) -> Result<f64> {
    let mut acc = 0.0;
    for ((idx, &a), &b) in p.indexed_iter().zip(q.iter()) {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::SupportMismatch(idx.into_dimension().slice().to_vec()));
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc)
}

/// BROJA PID with default optimizer settings.
pub fn broja_pid(q: &JointDistribution) -> Result<BrojaPid> {
    broja_pid_with(q, &MinimizeOptions::default())
}

pub fn broja_pid_with(q: &JointDistribution, opts: &MinimizeOptions) -> Result<BrojaPid> {
    let report = minimize_for(q, opts)?;
    Ok(pid_from(q, &report))
}

fn minimize_for(q: &JointDistribution, opts: &MinimizeOptions) -> Result<MinimizerReport> {
    checked_view(q)?;
    let d = build_domain(&MarginalPair::from_joint(q)?)?;
    minimize_information(&d, opts)
}

/// The PID given a minimizer over `Δ_P`. Unique informations use
/// `I_{Q*}(S:X|Y) = I_{Q*}(S:X,Y) − I(S:Y)`, since `Q*` shares the pairwise
/// marginals of `q`.
pub fn pid_from(q: &JointDistribution, report: &MinimizerReport) -> BrojaPid {
    let v = view3(q);
    let i = information(v);
    let (i_sx, i_sy) = pairwise_information(v);
    let i_star = information(view3(&report.q_star));
    BrojaPid {
        si: InfoValue::from_nats(i_sx + i_sy - i_star),
        ui_x: InfoValue::from_nats(i_star - i_sy),
        ui_y: InfoValue::from_nats(i_star - i_sx),
        ci: InfoValue::from_nats(i - i_star),
    }
}

pub fn series_decomposition(q: &JointDistribution) -> Result<SeriesDecomposition> {
    let p = checked_view(q)?;
    let q0 = shuffle_tensor(&MarginalPair::from_joint(q)?);
    let (i_sx, i_sy) = pairwise_information(p);
    let i_lin = i_sx + i_sy;
    let i_q0 = information(q0.view());
    let (pr, q0r) = (p.sum_axis(Axis(0)), q0.sum_axis(Axis(0)));

    // Σ_r P(r) D(P_{S|R=r} ‖ Q⁰_{S|R=r}).
    let mut i_cd = 0.0;
    for ((s, x, y), &v) in p.indexed_iter() {
        if v > 0.0 {
            let w = q0[[s, x, y]];
            if w <= 0.0 {
                return Err(Error::SupportMismatch(vec![s, x, y]));
            }
            i_cd += v * ((v / pr[[x, y]]) / (w / q0r[[x, y]])).ln();
        }
    }
    let i_cd_difference = divergence(p, q0.view())? - divergence(pr.view(), q0r.view())?;
    let i = information(p);
    Ok(SeriesDecomposition {
        i_lin: InfoValue::from_nats(i_lin),
        i_ss: InfoValue::from_nats(i_q0 - i_lin),
        i_ci: InfoValue::from_nats(i - i_q0 - i_cd),
        i_cd: InfoValue::from_nats(i_cd),
        i_cd_difference,
    })
}

pub fn correlation_coefficients(q: &JointDistribution) -> Result<CorrCoefficients> {
    let v = checked_view(q)?;
    let q0 = shuffle_tensor(&MarginalPair::from_joint(q)?);
    let ps: Vec<f64> = v.outer_iter().map(|m| m.sum()).collect();
    let gamma = Array3::from_shape_fn(v.dim(), |(s, x, y)| {
        // Q(r|s)/Q⁰(r|s) = Q(s,r)/Q⁰(s,r) because both share P(s).
        let base = q0[[s, x, y]];
        if ps[s] > 0.0 && base > 0.0 {
            v[[s, x, y]] / base - 1.0
        } else {
            -1.0
        }
    });
    let p0 = response_product(q)?;
    let q0r = q0.sum_axis(Axis(0));
    let mu = Array2::from_shape_fn(q0r.dim(), |(x, y)| {
        let base = p0.prob(&[x, y]);
        if base > 0.0 {
            q0r[[x, y]] / base - 1.0
        } else {
            -1.0
        }
    });
    Ok(CorrCoefficients { gamma, mu })
}

pub fn translation(q: &JointDistribution) -> Result<Translation> {
    translation_with(q, &MinimizeOptions::default())
}

pub fn translation_with(q: &JointDistribution, opts: &MinimizeOptions) -> Result<Translation> {
    let report = minimize_for(q, opts)?;
    translation_from(q, &report)
}

/// The translation given a minimizer over `Δ_P`.
pub fn translation_from(q: &JointDistribution, report: &MinimizerReport) -> Result<Translation> {
    let series = series_decomposition(q)?;
    let pid = pid_from(q, report);
    let i_q0 = information(shuffle_tensor(&MarginalPair::from_joint(q)?).view());
    let i_star = information(view3(&report.q_star));
    let ci0 = i_q0 - i_star;
    let (si, ss) = (pid.si.nats(), series.i_ss.nats());
    Ok(Translation {
        pid,
        series,
        i_q0: InfoValue::from_nats(i_q0),
        i_star: InfoValue::from_nats(i_star),
        ci0: InfoValue::from_nats(ci0),
        ci0_negativity: (-ci0).max(0.0),
        si_plus_ci0_residual: si + ci0 + ss,
        si_minus_ci0_residual: si - ci0 + ss,
        ci_residual: pid.ci.nats() - (series.i_ci.nats() + series.i_cd.nats() + ci0),
    })
}

/// The `|𝔛| × k` matrix of `P(x|s)` over the states with positive mass.
fn conditional_matrix(table: &JointDistribution, ps: &[f64]) -> DMatrix<f64> {
    let n = table.space().shape()[1];
    let kept: Vec<usize> = (0..ps.len()).filter(|&s| ps[s] > 0.0).collect();
    DMatrix::from_fn(n, kept.len(), |x, j| table.prob(&[kept[j], x]) / ps[kept[j]])
}

/// Numerical rank and an orthonormal basis of the left null space.
fn rank_and_left_null(m: &DMatrix<f64>) -> (usize, Vec<Vec<f64>>) {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&v| v > RANK_TOL * top).count();
    let n = m.nrows();
    let eig = SymmetricEigen::new(m * m.transpose());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let null = order[..n - rank].iter().map(|&k| eig.eigenvectors.column(k).iter().cloned().collect()).collect();
    (rank, null)
}

/// Dimension of the set of `γ(x,y)` independent of `s` that keep the
/// marginals, which is where `I_cd` vanishes.
pub fn icd_zero_space(p: &MarginalPair) -> Result<IcdZeroSpace> {
    let ps = p.p_s();
    let (rank_x, nx_null) = rank_and_left_null(&conditional_matrix(p.p_sx(), &ps));
    let (rank_y, ny_null) = rank_and_left_null(&conditional_matrix(p.p_sy(), &ps));
    let directions: Vec<Vec<Vec<f64>>> = nx_null
        .iter()
        .flat_map(|u| ny_null.iter().map(move |w| u.iter().map(|a| w.iter().map(|b| a * b).collect()).collect()))
        .collect();
    let dimension = (p.nx() - rank_x) * (p.ny() - rank_y);
    debug_assert_eq!(dimension, directions.len());
    Ok(IcdZeroSpace { exists: dimension > 0, dimension, rank_x, rank_y, directions })
}

fn icd_of(q: &JointDistribution) -> Result<f64> {
    series_decomposition(q).map(|d| d.i_cd.nats())
}

/// Fits `I_ci` by an affine function of the domain coordinates on
/// [`LINEARITY_SAMPLES`] random points (seeded by `seed`), and compares the
/// slopes and the gradients at `Q⁰` with their closed forms.
pub fn ici_linearity_check(d: &CorrelationDomain, seed: u64) -> Result<LinearityCheck> {
    let q0 = d.q0();
    if q0.mass().iter().any(|&v| v <= 0.0) {
        return Err(Error::Precondition("the linearity check needs a fully supported shuffle distribution".into()));
    }
    let k = d.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = LINEARITY_SAMPLES.max(k + 2);
    let mut design = DMatrix::<f64>::zeros(n, k + 1);
    let mut values = nalgebra::DVector::<f64>::zeros(n);
    for i in 0..n {
        let q = d.random_point(&mut rng);
        let t = d.coords(&q)?;
        design[(i, 0)] = 1.0;
        for (j, v) in t.t.iter().enumerate() {
            design[(i, j + 1)] = *v;
        }
        values[i] = series_decomposition(&q)?.i_ci.nats();
    }
    // Least squares through a thin QR factorization.
    let qr = design.clone().qr();
    let fit = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * &values))
        .ok_or_else(|| Error::Precondition("degenerate sample design".into()))?;
    let max_residual = (&design * &fit - &values).amax();

    let q0v = view3(q0);
    let q0xy = q0v.sum_axis(Axis(0));
    let log_coefficients: Vec<f64> = d
        .basis()
        .iter()
        .map(|b| {
            let m = |x: usize, y: usize| q0xy[[x, y]].ln();
            m(b.x, b.y2) + m(b.x2, b.y) - m(b.x, b.y) - m(b.x2, b.y2)
        })
        .collect();
    let coefficients: Vec<f64> = fit.iter().skip(1).cloned().collect();
    let max_coefficient_error =
        coefficients.iter().zip(&log_coefficients).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let names: Vec<String> = q0.space().axes().iter().map(|a| a.name.clone()).collect();
    let scale = q0.mass().iter().cloned().fold(f64::INFINITY, f64::min);
    let h = 1e-4 * scale;
    let mut gradient_i = Vec::with_capacity(k);
    let mut gradient_icd = Vec::with_capacity(k);
    for (j, b) in d.basis().iter().enumerate() {
        let v = b.to_tangent(q0.space())?;
        gradient_i.push(mi_directional_derivative(q0, &v, &[&names[0]], &[&names[1], &names[2]])?);
        let at = |step: f64| -> Result<f64> {
            let mut t = DomainCoords::zeros(k);
            t.t[j] = step;
            icd_of(&d.embed(&t)?)
        };
        gradient_icd.push((at(h)? - at(-h)?) / (2.0 * h));
    }
    let icd_tangency_gap = gradient_icd.iter().zip(&gradient_i).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ici_tangency_gap = log_coefficients.iter().zip(&gradient_i).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(LinearityCheck {
        samples: n,
        max_residual,
        intercept: fit[0],
        coefficients,
        log_coefficients,
        max_coefficient_error,
        gradient_i,
        gradient_icd,
        icd_tangency_gap,
        ici_tangency_gap,
    })
}

#[cfg(test)]
mod tests;
