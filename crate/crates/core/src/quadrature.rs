//! Adaptive Gauss–Kronrod (7/15) quadrature in one dimension and its nested
//! use over regions `{(x, y) : a ≤ x ≤ b, lo(x) ≤ y ≤ hi(x)}`.

/// Kronrod abscissae on `[-1, 1]`; odd indices are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Hard cap on the number of subintervals of one adaptive run.
const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the per-interval `|K15 − G7|` estimates.
    pub error: f64,
    pub evaluations: usize,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let sum = f(c - dx) + f(c + dx);
        k += WGK[i] * sum;
        if i % 2 == 1 {
            g += WG[i / 2] * sum;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the total estimate is below
/// `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, evaluations: 0 };
    }
    let (v, e) = kronrod(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let value: f64 = parts.iter().map(|p| p.2).sum();
        let error: f64 = parts.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || parts.len() >= MAX_INTERVALS {
            return Quadrature { value, error, evaluations };
        }
        let worst = (0..parts.len()).max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3)).expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval exhausted at double precision.
            return Quadrature { value, error, evaluations };
        }
        let (v1, e1) = kronrod(&mut f, lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, hi);
        evaluations += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// `∫_a^b ∫_{lo(x)}^{hi(x)} f(x, y) dy dx` by nesting [`integrate`]. The
/// inner integrals run at a tenth of the outer tolerance.
pub fn integrate_2d<F, L, H>(f: F, a: f64, b: f64, lo: L, hi: H, abs_tol: f64, rel_tol: f64) -> Quadrature
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let mut inner_evals = 0;
    let mut inner_err = 0.0;
    let outer = integrate(
        |x| {
            let q = integrate(|y| f(x, y), lo(x), hi(x), 0.1 * abs_tol, 0.1 * rel_tol);
            inner_evals += q.evaluations;
            inner_err = f64::max(inner_err, q.error);
            q.value
        },
        a,
        b,
        abs_tol,
        rel_tol,
    );
    Quadrature { value: outer.value, error: outer.error + inner_err * (b - a).abs(), evaluations: inner_evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // K15 integrates degree 22 exactly.
        let q = integrate(|x| x.powi(22) - 3.0 * x.powi(5) + 1.0, -1.0, 2.0, 1e-13, 0.0);
        let exact = (2f64.powi(23) + 1.0) / 23.0 - 3.0 * (64.0 - 1.0) / 6.0 + 3.0;
        assert!((q.value - exact).abs() < 1e-9 * exact.abs());
        // G7 is exact to degree 13, so no refinement is needed there.
        let q = integrate(|x| x.powi(13) + x.powi(2), 0.0, 1.0, 1e-13, 0.0);
        assert!((q.value - (1.0 / 14.0 + 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(q.evaluations, 15);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let q = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 1e-12);
        assert!((q.value - 2.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn oscillatory() {
        let q = integrate(|x: f64| (50.0 * x).cos(), 0.0, std::f64::consts::PI, 1e-12, 1e-12);
        assert!(q.value.abs() < 1e-11);
    }

    #[test]
    fn triangle_region() {
        // ∫_0^1 ∫_0^x x·y dy dx = 1/8.
        let q = integrate_2d(|x, y| x * y, 0.0, 1.0, |_| 0.0, |x| x, 1e-12, 1e-12);
        assert!((q.value - 0.125).abs() < 1e-13);
        // Area of the unit disk.
        let q = integrate_2d(|_, _| 1.0, -1.0, 1.0, |x| -(1.0 - x * x).sqrt(), |x| (1.0 - x * x).sqrt(), 1e-10, 1e-10);
        assert!((q.value - std::f64::consts::PI).abs() < 1e-8);
    }
}
