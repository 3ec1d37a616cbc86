//! One function per subcommand. Each returns the report as a JSON value, or
//! for `landscape` in CSV mode, the grid text.

use std::path::{Path, PathBuf};

use infoscape::decomp::{correlation_coefficients, CorrCoefficients, icd_zero_space, ici_linearity_check, pid_from, translation_from};
use infoscape::domain::build_domain;
use infoscape::gaussian::{scan_covariance, ScalarCovariance};
use infoscape::geometry::{
    has_interior_minimum, interior_fraction, line_slope, region, signal_sign_corner, slope_range, CornerPoint,
    FractionMethod, SamplingMeasure,
};
use infoscape::{minimize_information, JointDistribution, Location, MarginalPair, MinimizeOptions};
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{read_joint, read_marginal};
use crate::output::{info, render, Format, Report};
use crate::CliError;

/// Slopes closer than this (as an angle) to an interval endpoint are flagged.
pub const ENDPOINT_BAND: f64 = 1e-6;

/// Largest landscape grid, in points.
pub const MAX_LANDSCAPE_POINTS: u64 = 4_000_000;

/// `γ` as `[s][x][y]` and `μ` as `[x][y]` nested arrays.
fn coefficients_json(c: &CorrCoefficients) -> Value {
    let gamma: Vec<Vec<Vec<f64>>> =
        c.gamma.outer_iter().map(|m| m.outer_iter().map(|r| r.to_vec()).collect()).collect();
    let mu: Vec<Vec<f64>> = c.mu.outer_iter().map(|r| r.to_vec()).collect();
    json!({ "gamma": gamma, "mu": mu })
}

/// `P(r = 0 | s)` from a binary marginal table.
fn corner(p: &JointDistribution, s: usize) -> f64 {
    p.prob(&[s, 0]) / (p.prob(&[s, 0]) + p.prob(&[s, 1]))
}

/// `I(S : X,Y)` of a distribution over the axes `S`, `X`, `Y`.
fn information_of(q: &JointDistribution) -> Result<f64, CliError> {
    Ok(infoscape::dist::mutual_information(q, &["S"], &["X", "Y"])?.nats())
}

/// Two-state binary inputs: the discriminant verdict for the pair of
/// conditional tables, next to what the optimizer found.
fn binary_discriminant(pair: &MarginalPair, location: Location) -> Result<Value, CliError> {
    let ps = pair.p_s();
    if pair.nx() != 2 || pair.ny() != 2 || ps.iter().filter(|&&w| w > 0.0).count() != 2 {
        return Ok(Value::Null);
    }
    let states: Vec<usize> = (0..ps.len()).filter(|&s| ps[s] > 0.0).collect();
    let pt = |s: usize| CornerPoint { s: corner(pair.p_sx(), s), t: corner(pair.p_sy(), s) };
    let (p, q) = (pt(states[0]), pt(states[1]));
    if !p.is_interior() || !q.is_interior() {
        return Ok(json!({ "p": p, "q": q, "applicable": false }));
    }
    let set = slope_range(p)?;
    let slope = line_slope(p, q);
    let distance = if slope.is_nan() { Value::Null } else { json!(set.endpoint_distance(slope)) };
    Ok(json!({
        "p": p,
        "q": q,
        "applicable": true,
        "slope": if slope.is_finite() { json!(slope) } else { json!(if slope.is_nan() { "undefined" } else { "inf" }) },
        "interior": has_interior_minimum(p, q)?,
        "endpoint_distance": distance,
        "optimizer_location": location,
        "signal_sign": signal_sign_corner(p, q),
    }))
}

pub fn analyze(path: &Path, renormalize: bool, opts: &MinimizeOptions, seed: u64) -> Result<Value, CliError> {
    let q = read_joint(path, renormalize)?;
    let pair = MarginalPair::from_joint(&q)?;
    let d = build_domain(&pair)?;
    let report = minimize_information(&d, opts)?;
    let t = translation_from(&q, &report)?;
    let pid = pid_from(&q, &report);
    let coeffs = correlation_coefficients(&q)?;
    let zero = icd_zero_space(&pair)?;
    let full_support = d.q0().mass().iter().all(|&v| v > 0.0);
    let linearity = if full_support { serde_json::to_value(ici_linearity_check(&d, seed)?).map_err(out)? } else { Value::Null };
    let sx = q.marginalize(&["S", "X"])?;
    let sy = q.marginalize(&["S", "Y"])?;

    let mut r = Report::new("analyze", Some(seed));
    r.put(
        "input",
        &json!({
            "path": path.display().to_string(),
            "shape": q.space().shape(),
            "renormalize": renormalize,
            "mass": q.to_vec(),
        }),
    )?;
    r.put(
        "information",
        &json!({
            "i_s_xy": info(information_of(&q)?),
            "i_s_x": info(information_of_pair(&sx)?),
            "i_s_y": info(information_of_pair(&sy)?),
        }),
    )?;
    r.put("minimizer", &report)?;
    r.put("pid", &pid)?;
    r.put("series", &t.series)?;
    r.put(
        "translation",
        &json!({
            "i_q0": t.i_q0,
            "i_star": t.i_star,
            "ci0": t.ci0,
            "ci0_negativity": t.ci0_negativity,
            "si_plus_ci0_residual": t.si_plus_ci0_residual,
            "si_minus_ci0_residual": t.si_minus_ci0_residual,
            "ci_residual": t.ci_residual,
            "icd_form_gap": t.series.i_cd.nats() - t.series.i_cd_difference,
        }),
    )?;
    r.put("coefficients", &coefficients_json(&coeffs))?;
    r.put("icd_zero_space", &zero)?;
    r.put("ici_linearity", &linearity)?;
    r.put("discriminant", &binary_discriminant(&pair, report.location)?)?;
    Ok(r.into_value())
}

fn information_of_pair(m: &JointDistribution) -> Result<f64, CliError> {
    let names: Vec<String> = m.space().axes().iter().map(|a| a.name.clone()).collect();
    Ok(infoscape::dist::mutual_information(m, &[&names[0]], &[&names[1]])?.nats())
}

fn out(e: serde_json::Error) -> CliError {
    CliError::Output(e.to_string())
}

/// Where the fixed marginals of a landscape come from.
pub enum MarginalSource {
    Joint(PathBuf),
    Pair { sx: PathBuf, sy: PathBuf },
}

fn load_pair(src: &MarginalSource, renormalize: bool) -> Result<MarginalPair, CliError> {
    match src {
        MarginalSource::Joint(p) => Ok(MarginalPair::from_joint(&read_joint(p, renormalize)?)?),
        MarginalSource::Pair { sx, sy } => {
            Ok(MarginalPair::new(read_marginal(sx, "X", renormalize)?, read_marginal(sy, "Y", renormalize)?)?)
        }
    }
}

#[derive(Serialize)]
struct LandscapeRow {
    index: Vec<usize>,
    t: Vec<f64>,
    i: f64,
}

/// `I` on the regular grid with `n` points per coordinate over the box of a
/// binary domain, endpoints included.
pub fn landscape(src: &MarginalSource, n: usize, renormalize: bool, opts: &MinimizeOptions, format: Format) -> Result<String, CliError> {
    let pair = load_pair(src, renormalize)?;
    let d = build_domain(&pair)?;
    let bounds = d
        .bounds()
        .ok_or_else(|| CliError::Invalid("the landscape needs binary X and Y".into()))?
        .to_vec();
    let k = bounds.len();
    let total = (n as u64).checked_pow(k as u32).filter(|&v| v <= MAX_LANDSCAPE_POINTS);
    let Some(total) = total else {
        return Err(CliError::Invalid(format!("a grid of {n}^{k} points exceeds {MAX_LANDSCAPE_POINTS}")));
    };
    let axis = |c: usize, i: usize| {
        let (lo, hi) = bounds[c];
        if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }
    };
    let mut rows = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; k];
    for _ in 0..total {
        let t: Vec<f64> = idx.iter().enumerate().map(|(c, &i)| axis(c, i)).collect();
        let q = d.embed(&infoscape::DomainCoords::new(t.clone()))?;
        rows.push(LandscapeRow { index: idx.clone(), t, i: information_of(&q)? });
        for c in (0..k).rev() {
            idx[c] += 1;
            if idx[c] < n {
                break;
            }
            idx[c] = 0;
        }
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header: Vec<String> = (1..=k).map(|c| format!("i{c}")).collect();
            header.extend((1..=k).map(|c| format!("t{c}")));
            header.extend(["i_nats".into(), "i_bits".into()]);
            w.write_record(&header).map_err(|e| CliError::Output(e.to_string()))?;
            for r in &rows {
                let mut rec: Vec<String> = r.index.iter().map(|v| v.to_string()).collect();
                rec.extend(r.t.iter().map(|v| format!("{v:e}")));
                rec.push(format!("{:e}", r.i));
                rec.push(format!("{:e}", r.i / std::f64::consts::LN_2));
                w.write_record(&rec).map_err(|e| CliError::Output(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Output(e.to_string()))?)
                .map_err(|e| CliError::Output(e.to_string()))
        }
        Format::Json => {
            let report = minimize_information(&d, opts)?;
            let mut r = Report::new("landscape", None);
            r.put("grid", &n)?;
            r.put("bounds", &bounds)?;
            r.put("i_star", &report.i_star)?;
            r.put("t_star", &report.t_star.t)?;
            r.put("rows", &rows)?;
            render(&r.into_value(), Format::Json)
        }
    }
}

/// The polygon left after removing the four triangles, walking the square's
/// perimeter and detouring through the apex at each triangle.
fn region_polygon(reg: &infoscape::geometry::Region) -> Vec<CornerPoint> {
    let perimeter = |p: &CornerPoint| -> f64 {
        // Counter-clockwise from (0,0).
        if p.t == 0.0 {
            p.s
        } else if p.s == 1.0 {
            1.0 + p.t
        } else if p.t == 1.0 {
            3.0 - p.s
        } else {
            4.0 - p.t
        }
    };
    let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(s, t)| CornerPoint { s, t });
    let mut points: Vec<CornerPoint> = corners.iter().chain(reg.boundary_points.iter()).copied().collect();
    points.sort_by(|a, b| perimeter(a).total_cmp(&perimeter(b)));
    points.dedup();
    let apex = reg.excluded_triangles[0][0];
    let cut = |a: &CornerPoint, b: &CornerPoint| {
        reg.excluded_triangles.iter().any(|tri| (tri[1] == *a && tri[2] == *b) || (tri[1] == *b && tri[2] == *a))
    };
    let mut out = Vec::with_capacity(12);
    for i in 0..points.len() {
        let (a, b) = (points[i], points[(i + 1) % points.len()]);
        out.push(a);
        if cut(&a, &b) {
            out.push(apex);
        }
    }
    out
}

pub fn discriminant(p: (f64, f64), q: Option<(f64, f64)>) -> Result<Value, CliError> {
    let p = CornerPoint::new(p.0, p.1)?;
    let set = slope_range(p)?;
    let reg = region(p)?;
    let mut r = Report::new("discriminant", None);
    r.put("p", &p)?;
    r.put("slope_set", &set)?;
    r.put(
        "region",
        &json!({
            "area": reg.area,
            "boundary_points": reg.boundary_points,
            "excluded_triangles": reg.excluded_triangles,
            "polygon": region_polygon(&reg),
        }),
    )?;
    if let Some(q) = q {
        let q = CornerPoint::new(q.0, q.1)?;
        q.is_interior().then_some(()).ok_or(infoscape::Error::VertexDegenerate { s: q.s, t: q.t })?;
        let slope = line_slope(p, q);
        let distance = if slope.is_nan() { None } else { Some(set.endpoint_distance(slope)) };
        r.put(
            "verdict",
            &json!({
                "q": q,
                "slope": if slope.is_finite() { json!(slope) } else { json!(if slope.is_nan() { "undefined" } else { "inf" }) },
                "interior": has_interior_minimum(p, q)?,
                "endpoint_distance": distance,
                "near_endpoint": distance.is_some_and(|v| v < ENDPOINT_BAND),
                "signal_sign": signal_sign_corner(p, q),
            }),
        )?;
    }
    Ok(r.into_value())
}

pub struct VolumeArgs {
    pub seed: u64,
    pub samples: u64,
    pub workers: usize,
    pub measure: SamplingMeasure,
    pub exact: bool,
}

pub fn volume(a: &VolumeArgs) -> Result<Value, CliError> {
    let mut r = Report::new("volume", Some(a.seed));
    r.put("measure", &a.measure)?;
    r.put("reference", &(2.0 / 3.0))?;
    let exact = if a.exact && a.measure == SamplingMeasure::Corner {
        let e = interior_fraction(FractionMethod::ExactQuadrature)?;
        json!({ "value": e.value, "error": e.error, "evaluations": e.evaluations })
    } else {
        Value::Null
    };
    r.put("exact", &exact)?;
    let mc = interior_fraction(FractionMethod::MonteCarlo {
        seed: a.seed,
        samples: a.samples,
        workers: a.workers,
        measure: a.measure,
    })?;
    let half = 1.96 * mc.error;
    r.put(
        "monte_carlo",
        &json!({
            "value": mc.value,
            "std_error": mc.error,
            "ci95": [mc.value - half, mc.value + half],
            "samples": a.samples,
            "workers": a.workers,
        }),
    )?;
    Ok(r.into_value())
}

pub fn gaussian(c: ScalarCovariance) -> Result<Value, CliError> {
    let scan = scan_covariance(&c)?;
    let mut r = Report::new("gaussian", None);
    r.put("covariance", &c)?;
    r.put("scan", &scan)?;
    Ok(r.into_value())
}
