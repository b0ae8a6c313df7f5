//! One runner per experiment. Each consumes validated parameters and
//! produces check rows plus CSV artifacts; the caller owns file writing,
//! printing, and exit codes.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use weylq::evolution::kg_residual;
use weylq::field::{Boundary, Grid, WaveField};
use weylq::gauge_kg::plane_wave_residual;
use weylq::geometry::{metric_jet, ChartMetric};
use weylq::interference::{
    density_pattern, flux_shift_rate, fringe_positions, fringe_positions_small_angle,
    ab_flux_sweep, mc_density, measurement_impact, McSampler, ScatterProbe, TwoPathSetup,
};
use weylq::kernel::{consistency_sweep, fitted_order};
use weylq::oracle::{geodesic_between, ricci_scalar_contraction};
use weylq::paths_action::{find_extremal, LagrangianKind, LagrangianSpec};
use weylq::propagator::{
    extrapolate_eta, hj_residual, moments_closed_form, moments_quadrature, HJExpansion,
};

use crate::config::{
    AbSweepParams, DoubleSlitParams, ExtremalParams, GeometryCheckParams, HjOrderParams,
    KernelConsistencyParams, KgVerifyParams, MomentsParams, ScreenParams,
};

/// A run either hits a configuration problem (exit 1) or a numerical one
/// (exit 2); failed tolerance checks are not errors and exit 3 instead.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Compute(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Compute(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Compute(m) => m,
        }
    }
}

/// Library errors split the same way: anything a config edit can fix is a
/// configuration failure, anything that emerged mid-computation is numerical.
fn core_failure(e: weylq::Error) -> Failure {
    use weylq::Error as E;
    match e {
        E::InvalidConfig(_)
        | E::InvalidMetric(_)
        | E::InvalidPath(_)
        | E::InvalidRegion(_)
        | E::InsufficientDomain { .. }
        | E::UnsupportedSignature(_)
        | E::Json(_)
        | E::Io(_) => Failure::Config(e.to_string()),
        _ => Failure::Compute(e.to_string()),
    }
}

/// One verified quantity: the measured value, the bound it was held to, and
/// the verdict. `pass` carries the comparison direction, so a reader never
/// has to guess whether small or large is good.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// JSON has no encoding for non-finite numbers; map them to huge-and-failing
/// rather than emitting nulls.
fn finite(value: f64) -> (f64, bool) {
    if value.is_finite() {
        (value, true)
    } else {
        (f64::MAX, false)
    }
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
        let (value, ok) = finite(value);
        Check { name: name.into(), value, tolerance, pass: ok && value <= tolerance }
    }

    fn at_least(name: impl Into<String>, value: f64, floor: f64) -> Check {
        let (value, ok) = finite(value);
        Check { name: name.into(), value, tolerance: floor, pass: ok && value >= floor }
    }

    fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Check {
        let (value, ok) = finite(value);
        Check { name: name.into(), value, tolerance, pass: ok && (value - target).abs() <= tolerance }
    }

    fn count(name: impl Into<String>, found: usize, expected: usize) -> Check {
        Check {
            name: name.into(),
            value: found as f64,
            tolerance: expected as f64,
            pass: found == expected,
        }
    }
}

pub struct RunOutput {
    pub checks: Vec<Check>,
    /// `(file name, contents)` pairs, written when CSV output is enabled.
    pub artifacts: Vec<(String, String)>,
}

fn csv_row(cells: &[String]) -> String {
    cells.join(",")
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

// --- geometry-check ---------------------------------------------------

/// Chart regions stay clear of coordinate singularities: the sphere chart
/// away from the poles, the half-plane away from its boundary.
fn sample_point(metric_id: &str, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if metric_id.starts_with("sphere:") {
        vec![rng.random_range(0.4..PI - 0.4), rng.random_range(0.0..TAU)]
    } else if metric_id == "hyperbolic2" {
        vec![rng.random_range(-2.0..2.0), rng.random_range(0.5..3.0)]
    } else if metric_id.starts_with("sine-ring:") {
        vec![rng.random_range(0.0..TAU)]
    } else {
        (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
    }
}

/// Closed-form scalar curvature where the family has one.
fn known_curvature(metric_id: &str) -> Option<f64> {
    if let Some(rest) = metric_id.strip_prefix("sphere:") {
        return rest.parse::<f64>().ok().map(|a| 2.0 / (a * a));
    }
    if metric_id == "hyperbolic2" {
        return Some(-2.0);
    }
    if metric_id.starts_with("flat-")
        || metric_id.starts_with("minkowski-")
        || metric_id.starts_with("diag:")
        || metric_id.starts_with("sine-ring:")
    {
        return Some(0.0);
    }
    None
}

pub fn run_geometry_check(params: &GeometryCheckParams) -> Result<RunOutput, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut checks = Vec::new();
    let mut rows = vec!["metric,x0,x1,r_formula,r_oracle,abs_err".to_string()];

    for id in &params.metrics {
        let metric = ChartMetric::named(id)
            .map_err(|e| Failure::Config(format!("parameters.metrics entry {id:?}: {e}")))?;
        let reference = known_curvature(id);
        let mut worst = 0.0f64;
        let mut worst_ref = 0.0f64;
        for _ in 0..params.points {
            let x = sample_point(id, metric.dim(), &mut rng);
            let jet = metric_jet(&metric, &x).map_err(core_failure)?;
            let oracle = ricci_scalar_contraction(&metric, &x).map_err(core_failure)?;
            let err = (jet.ricci_scalar - oracle).abs();
            worst = worst.max(err);
            if let Some(r) = reference {
                worst_ref = worst_ref.max((jet.ricci_scalar - r).abs());
            }
            let x1 = if x.len() > 1 { fmt(x[1]) } else { String::new() };
            rows.push(csv_row(&[
                id.clone(),
                fmt(x[0]),
                x1,
                fmt(jet.ricci_scalar),
                fmt(oracle),
                fmt(err),
            ]));
        }
        checks.push(Check::below(format!("ricci_match_{id}"), worst, params.tolerance));
        if reference.is_some() {
            checks.push(Check::below(format!("ricci_reference_{id}"), worst_ref, params.tolerance));
        }
    }

    let csv = rows.join("\n") + "\n";
    Ok(RunOutput { checks, artifacts: vec![("points.csv".into(), csv)] })
}

// --- extremal ----------------------------------------------------------

pub fn run_extremal(params: &ExtremalParams) -> Result<RunOutput, Failure> {
    let metric = ChartMetric::named(&params.metric)
        .map_err(|e| Failure::Config(format!("parameters.metric: {e}")))?;
    if metric.dim() != params.x.len() {
        return Err(Failure::Config(format!(
            "parameters.x has {} coordinates but metric {:?} has dimension {}",
            params.x.len(),
            params.metric,
            metric.dim()
        )));
    }
    let arc = Arc::new(metric);
    let lag = LagrangianSpec::new(LagrangianKind::InhomogeneousMassive { m: params.m }, arc.clone())
        .map_err(core_failure)?;
    let path = find_extremal(&lag, &params.x, &params.y, params.tau_span, params.segments, None)
        .map_err(core_failure)?;

    let mut checks = Vec::new();
    if params.metric.starts_with("flat") {
        // On a flat chart the extremal is the chord; measure the worst
        // off-chord deviation relative to the chord length.
        let chord: Vec<f64> = params.y.iter().zip(&params.x).map(|(b, a)| b - a).collect();
        let len = chord.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len == 0.0 {
            return Err(Failure::Config("parameters.x and parameters.y must differ".into()));
        }
        let unit: Vec<f64> = chord.iter().map(|c| c / len).collect();
        let mut worst = 0.0f64;
        for node in &path.nodes {
            let v: Vec<f64> = node.iter().zip(&params.x).map(|(b, a)| b - a).collect();
            let along: f64 = v.iter().zip(&unit).map(|(a, b)| a * b).sum();
            let off2: f64 = v
                .iter()
                .zip(&unit)
                .map(|(a, b)| a - along * b)
                .map(|c| c * c)
                .sum();
            worst = worst.max(off2.sqrt() / len);
        }
        checks.push(Check::below("collinear_deviation", worst, params.collinear_tolerance));
    } else {
        let geo = geodesic_between(&arc, &params.x, &params.y, params.segments)
            .map_err(core_failure)?;
        if geo.nodes.len() != path.nodes.len() {
            return Err(Failure::Compute(format!(
                "oracle returned {} nodes for a {}-node path",
                geo.nodes.len(),
                path.nodes.len()
            )));
        }
        let mut worst = 0.0f64;
        for (a, b) in path.nodes.iter().zip(&geo.nodes) {
            let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
            worst = worst.max(d2.sqrt());
        }
        checks.push(Check::below("oracle_node_deviation", worst, params.oracle_tolerance));
    }

    Ok(RunOutput { checks, artifacts: vec![("path.csv".into(), path.to_csv())] })
}

// --- double-slit -------------------------------------------------------

fn build_setup(
    d_s: f64,
    d_o: f64,
    p: f64,
    sigma_i: f64,
    sigma_f: f64,
    flux: f64,
    screen: &ScreenParams,
) -> Result<TwoPathSetup, Failure> {
    let mut setup = TwoPathSetup::new(d_s, d_o, p).map_err(core_failure)?;
    setup.sigma_i = sigma_i;
    setup.sigma_f = sigma_f;
    setup.flux_term = flux;
    setup.screen.samples = screen.samples;
    if let Some(w) = screen.half_width {
        setup.screen.half_width = w;
    }
    setup.validate().map_err(core_failure)?;
    Ok(setup)
}

pub fn run_double_slit(params: &DoubleSlitParams) -> Result<RunOutput, Failure> {
    let setup = build_setup(
        params.d_s,
        params.d_o,
        params.p,
        params.sigma_i,
        params.sigma_f,
        params.flux_ef,
        &params.screen,
    )?;
    let probe = if params.p_ph > 0.0 {
        ScatterProbe::new(params.p_ph).map_err(core_failure)?
    } else {
        ScatterProbe::none()
    };
    let pattern = density_pattern(&setup, &probe).map_err(core_failure)?;
    let d = pattern.fringe_spacing;

    let mut checks = Vec::new();

    // The small-angle fringe spacing ties screen and slit geometry together:
    // d_s/d_o must equal Δr/d with Δr the transport-length quantum 2π/p.
    let delta_r = TAU / params.p;
    let ratio = params.d_s / params.d_o;
    let rel = ((ratio - delta_r / d) / ratio).abs();
    checks.push(Check::below("fringe_ratio_identity", rel, params.ratio_identity_tolerance));

    let n_max = params.n_max;
    let expected = (2 * n_max + 1) as usize;
    let small = fringe_positions_small_angle(&setup, -n_max..=n_max);
    checks.push(Check::count("small_angle_maxima_found", small.len(), expected));
    let mut worst_gap = 0.0f64;
    for w in small.windows(2) {
        let orders = (w[1].0 - w[0].0) as f64;
        let gap = (w[1].1 - w[0].1) / orders;
        worst_gap = worst_gap.max(((gap - d) / d).abs());
    }
    checks.push(Check::below("small_angle_spacing_uniformity", worst_gap, params.spacing_tolerance));

    let exact = fringe_positions(&setup, -n_max..=n_max).map_err(core_failure)?;
    checks.push(Check::count("exact_maxima_found", exact.len(), expected));
    for (n, xe) in &exact {
        if let Some((_, xs)) = small.iter().find(|(k, _)| k == n) {
            let scale = xs.abs().max(d);
            let dev = (xe - xs).abs() / scale;
            checks.push(Check::below(
                format!("exact_vs_small_angle_n{n:+}"),
                dev,
                params.exact_match_tolerance,
            ));
        }
    }

    if params.p_ph > 0.0 {
        let impact = measurement_impact(&setup, &probe).map_err(core_failure)?;
        // Three statements of the same threshold must flip together:
        // s ≥ d/2, d_s·p_ph ≥ 2π, and the which-path verdict.
        let geometric = impact.s >= 0.5 * d;
        let momentum = params.d_s * params.p_ph >= TAU;
        let agree = geometric == impact.which_path && momentum == impact.which_path;
        checks.push(Check {
            name: "which_path_identity".into(),
            value: if agree { 0.0 } else { 1.0 },
            tolerance: 0.0,
            pass: agree,
        });
        checks.push(Check {
            name: "visibility_within_bounds".into(),
            value: impact.visibility,
            tolerance: 1.0,
            pass: (0.0..=1.0).contains(&impact.visibility),
        });
    }

    let mut artifacts = vec![("density.csv".to_string(), pattern.density_csv())];

    if let Some(mc) = &params.mc {
        let sampler = McSampler {
            jitter_scale: mc.jitter_scale,
            samples: mc.samples,
            tol_phase: mc.tol_phase,
            seed: mc.seed,
        };
        let hist = mc_density(&setup, &sampler).map_err(core_failure)?;
        let modes = hist.modes();
        checks.push(Check::count("mc_mode_count", modes.len(), pattern.maxima.len()));
        let mut worst = 0.0f64;
        for mode in &modes {
            let nearest = pattern
                .maxima
                .iter()
                .map(|x| (x - mode).abs())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
        checks.push(Check::below(
            "mc_mode_deviation",
            worst,
            mc.mode_bin_tolerance * hist.bin_width,
        ));
        artifacts.push(("mc_histogram.csv".to_string(), hist.to_csv()));
    }

    Ok(RunOutput { checks, artifacts })
}

// --- ab-sweep ----------------------------------------------------------

/// Maximum nearest the screen center, the position a shift detector reads.
fn central_maximum(positions: &[f64]) -> Option<f64> {
    positions
        .iter()
        .copied()
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("positions are finite"))
}

pub fn run_ab_sweep(params: &AbSweepParams) -> Result<RunOutput, Failure> {
    let setup = build_setup(
        params.d_s,
        params.d_o,
        params.p,
        params.sigma_i,
        params.sigma_f,
        0.0,
        &params.screen,
    )?;
    let d = setup.fringe_spacing();
    let step = params.flux_max / params.samples as f64;
    let flux: Vec<f64> = (0..params.samples).map(|i| i as f64 * step).collect();
    let patterns = ab_flux_sweep(&setup, &flux).map_err(core_failure)?;

    let center = (setup.screen.samples - 1) / 2;
    let mut shift_exact = Vec::with_capacity(patterns.len());
    let mut shift_small = Vec::with_capacity(patterns.len());
    let mut central = Vec::with_capacity(patterns.len());
    for (i, pat) in patterns.iter().enumerate() {
        let se = central_maximum(&pat.maxima).ok_or_else(|| {
            Failure::Compute(format!("no on-screen maximum at flux sample {i}"))
        })?;
        let ss = central_maximum(&pat.maxima_small_angle).ok_or_else(|| {
            Failure::Compute(format!("no on-screen small-angle maximum at flux sample {i}"))
        })?;
        shift_exact.push(se);
        shift_small.push(ss);
        central.push(pat.density[center]);
    }

    let mut checks = Vec::new();
    let k = params.period_steps();

    // One full 2π period later the pattern must repeat: pointwise in the
    // density and in the root-found central maximum.
    let mut worst_density = 0.0f64;
    let mut worst_shift = 0.0f64;
    for i in 0..params.samples - k {
        let a = &patterns[i].density;
        let b = &patterns[i + k].density;
        for (x, y) in a.iter().zip(b) {
            worst_density = worst_density.max((x - y).abs());
        }
        worst_shift = worst_shift.max((shift_exact[i] - shift_exact[i + k]).abs());
    }
    checks.push(Check::below("density_periodicity", worst_density, params.periodicity_tolerance));
    checks.push(Check::below(
        "shift_periodicity",
        worst_shift,
        params.shift_periodicity_tolerance,
    ));

    // Fit the shift rate over the first wrap-free run of samples.
    let expected = flux_shift_rate(&setup);
    let mut run_end = 1;
    while run_end < params.samples {
        let delta = shift_small[run_end] - shift_small[run_end - 1];
        if (delta - expected * step).abs() > 0.25 * d {
            break;
        }
        run_end += 1;
    }
    if run_end < 3 {
        return Err(Failure::Compute(
            "flux sweep too coarse to fit a shift rate; increase parameters.samples".into(),
        ));
    }
    let xs = &flux[..run_end];
    let ys = &shift_small[..run_end];
    let xm = xs.iter().sum::<f64>() / run_end as f64;
    let ym = ys.iter().sum::<f64>() / run_end as f64;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let slope = num / den;
    checks.push(Check::below(
        "shift_rate_relative_error",
        ((slope - expected) / expected).abs(),
        params.rate_tolerance,
    ));

    // With equal assigned gauge values the center is a maximum at zero flux
    // and a zero at half period; both only land on sample points when the
    // sweep grid contains π.
    if params.sigma_i == params.sigma_f {
        checks.push(Check::near(
            "central_density_max_at_zero_flux",
            central[0],
            2.0,
            params.extrema_tolerance,
        ));
        let i_pi = PI / step;
        if (i_pi - i_pi.round()).abs() < 1e-9 && (i_pi.round() as usize) < params.samples {
            checks.push(Check::below(
                "central_density_min_at_pi_flux",
                central[i_pi.round() as usize].abs(),
                params.extrema_tolerance,
            ));
        }
    }

    let mut rows = vec!["ef,shift_exact,shift_small_angle,central_density".to_string()];
    for i in 0..params.samples {
        rows.push(csv_row(&[
            fmt(flux[i]),
            fmt(shift_exact[i]),
            fmt(shift_small[i]),
            fmt(central[i]),
        ]));
    }
    let csv = rows.join("\n") + "\n";

    Ok(RunOutput { checks, artifacts: vec![("sweep.csv".into(), csv)] })
}

// --- moments -----------------------------------------------------------

pub fn run_moments(params: &MomentsParams) -> Result<RunOutput, Failure> {
    let n = params.g.len();
    let g = DMatrix::from_fn(n, n, |i, j| params.g[i][j]);
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Failure::Config("parameters.g must be invertible".into()))?;

    let mut checks = Vec::new();

    let mut worst_q = 0.0f64;
    let mut worst_first = 0.0f64;
    for &eta in &params.etas {
        let cf = moments_closed_form(&g, params.m, eta).map_err(core_failure)?;
        worst_q = worst_q.max((cf.q - Complex64::new(1.0, 0.0)).norm());
        worst_first = worst_first.max(cf.q_vec.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    checks.push(Check::below("closed_form_zeroth_moment", worst_q, params.closed_form_tolerance));
    checks.push(Check::below("closed_form_first_moment", worst_first, params.closed_form_tolerance));

    let mut sets = Vec::with_capacity(params.etas.len());
    for &eta in &params.etas {
        sets.push(moments_quadrature(&g, params.m, eta, params.radius, params.points)
            .map_err(core_failure)?);
    }
    let worst_quad_q = sets
        .iter()
        .map(|s| (s.q - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    checks.push(Check::below(
        "quadrature_zeroth_moment",
        worst_quad_q,
        params.extrapolation_tolerance,
    ));

    for la in 0..n {
        for et in la..n {
            let samples: Vec<(f64, Complex64)> =
                sets.iter().map(|s| (s.eta, s.q_mat[(la, et)])).collect();
            let q0 = extrapolate_eta(&samples).map_err(core_failure)?;
            let target = Complex64::new(0.0, 1.0 / (2.0 * params.m)) * g_inv[(la, et)];
            checks.push(Check::below(
                format!("extrapolated_q{}{}", la + 1, et + 1),
                (q0 - target).norm(),
                params.extrapolation_tolerance,
            ));
        }
    }

    let mut header = vec!["eta".to_string(), "q_re".to_string(), "q_im".to_string()];
    for la in 0..n {
        for et in la..n {
            header.push(format!("q{}{}_re", la + 1, et + 1));
            header.push(format!("q{}{}_im", la + 1, et + 1));
        }
    }
    let mut rows = vec![csv_row(&header)];
    for s in &sets {
        let mut cells = vec![fmt(s.eta), fmt(s.q.re), fmt(s.q.im)];
        for la in 0..n {
            for et in la..n {
                cells.push(fmt(s.q_mat[(la, et)].re));
                cells.push(fmt(s.q_mat[(la, et)].im));
            }
        }
        rows.push(csv_row(&cells));
    }
    let csv = rows.join("\n") + "\n";

    Ok(RunOutput { checks, artifacts: vec![("moments.csv".into(), csv)] })
}

// --- hj-order ----------------------------------------------------------

pub fn run_hj_order(params: &HjOrderParams) -> Result<RunOutput, Failure> {
    let mut checks = Vec::new();

    // Flat baseline: the truncated action is exact, so the residual sits at
    // rounding level regardless of step or separation.
    let flat = Arc::new(ChartMetric::named("flat-2").map_err(core_failure)?);
    let exp_flat = HJExpansion::at(flat, &[0.2, -0.4], params.m).map_err(core_failure)?;
    let res_flat = hj_residual(&exp_flat, &[0.3, -0.2], params.eps).map_err(core_failure)?;
    checks.push(Check::below("flat_residual", res_flat, params.flat_tolerance));

    let metric = Arc::new(
        ChartMetric::named(&params.metric)
            .map_err(|e| Failure::Config(format!("parameters.metric: {e}")))?,
    );
    if metric.dim() != params.point.len() {
        return Err(Failure::Config(format!(
            "parameters.point has {} coordinates but metric {:?} has dimension {}",
            params.point.len(),
            params.metric,
            metric.dim()
        )));
    }
    let exp = HJExpansion::at(metric, &params.point, params.m).map_err(core_failure)?;
    let norm = params.direction.iter().map(|c| c * c).sum::<f64>().sqrt();
    let unit: Vec<f64> = params.direction.iter().map(|c| c / norm).collect();

    let mut rows = vec!["radius,residual".to_string()];
    let mut logs = Vec::with_capacity(params.radii.len());
    for &r in &params.radii {
        let xi: Vec<f64> = unit.iter().map(|c| c * r).collect();
        let res = hj_residual(&exp, &xi, params.eps).map_err(core_failure)?;
        rows.push(csv_row(&[fmt(r), fmt(res)]));
        logs.push((r.ln(), res.max(1e-300).ln()));
    }

    let xm = logs.iter().map(|(x, _)| x).sum::<f64>() / logs.len() as f64;
    let ym = logs.iter().map(|(_, y)| y).sum::<f64>() / logs.len() as f64;
    let num: f64 = logs.iter().map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = logs.iter().map(|(x, _)| (x - xm) * (x - xm)).sum();
    checks.push(Check::at_least("curved_order_slope", num / den, params.slope_minimum));

    let csv = rows.join("\n") + "\n";
    Ok(RunOutput { checks, artifacts: vec![("residuals.csv".into(), csv)] })
}

// --- kg-verify ---------------------------------------------------------

pub fn run_kg_verify(params: &KgVerifyParams) -> Result<RunOutput, Failure> {
    let dim = params.k.len() + 1;
    let omega = params.resolved_omega();

    let grid_at = |h: f64, shape: &[usize]| {
        Grid::new(vec![0.0; dim], vec![h; dim], shape.to_vec(), Boundary::Dirichlet)
            .map_err(core_failure)
    };
    let coarse = grid_at(params.spacing, &params.shape)?;
    // Same physical extent, twice the resolution.
    let fine_shape: Vec<usize> = params.shape.iter().map(|&s| 2 * (s - 1) + 1).collect();
    let fine = grid_at(params.spacing / 2.0, &fine_shape)?;

    let r_coarse = plane_wave_residual(&params.k, omega, params.m, &coarse).map_err(core_failure)?;
    let r_fine = plane_wave_residual(&params.k, omega, params.m, &fine).map_err(core_failure)?;

    let mut checks = Vec::new();
    match params.omega {
        None => {
            // On shell the residual is pure discretization error, second
            // order in the spacing: halving must quarter it.
            checks.push(Check::near(
                "halving_ratio",
                r_coarse / r_fine,
                4.0,
                params.ratio_tolerance,
            ));
        }
        Some(_) => {
            // Off shell the residual converges to the dispersion gap.
            let k2: f64 = params.k.iter().map(|c| c * c).sum();
            let gap = (omega * omega - k2 - params.m * params.m).abs();
            checks.push(Check::below(
                "off_shell_gap_deviation",
                (r_fine - gap).abs(),
                params.gap_tolerance * gap.max(1.0),
            ));
        }
    }

    // Independent route: sample the same mode into a field on the matching
    // Lorentzian chart and ask the wave operator for its residual.
    let metric = Arc::new(ChartMetric::named(&format!("minkowski-{dim}")).map_err(core_failure)?);
    let k = params.k.clone();
    let field = WaveField::from_fn(coarse, metric, move |x| {
        let mut phase = -omega * x[0];
        for (i, ki) in k.iter().enumerate() {
            phase += ki * x[i + 1];
        }
        Complex64::from_polar(1.0, phase)
    })
    .map_err(core_failure)?;
    let via_operator = kg_residual(&field, params.m).map_err(core_failure)?;
    checks.push(Check::below(
        "dual_route_gap",
        (r_coarse - via_operator).abs(),
        params.dual_tolerance * r_coarse.max(1.0),
    ));

    let csv = format!(
        "spacing,residual\n{},{}\n{},{}\n",
        fmt(params.spacing),
        fmt(r_coarse),
        fmt(params.spacing / 2.0),
        fmt(r_fine),
    );
    Ok(RunOutput { checks, artifacts: vec![("residuals.csv".into(), csv)] })
}

// --- kernel-consistency ------------------------------------------------

pub fn run_kernel_consistency(params: &KernelConsistencyParams) -> Result<RunOutput, Failure> {
    let metric = Arc::new(
        ChartMetric::named(&params.metric)
            .map_err(|e| Failure::Config(format!("parameters.metric: {e}")))?,
    );
    if metric.dim() != 1 {
        return Err(Failure::Config(format!(
            "parameters.metric must be one-dimensional, {:?} has dimension {}",
            params.metric,
            metric.dim()
        )));
    }
    let grid = Grid::ring(0.0, TAU / params.nodes as f64, params.nodes).map_err(core_failure)?;
    let modes = params.modes.clone();
    let psi = WaveField::from_fn(grid, metric, move |x| {
        modes
            .iter()
            .map(|&(k, a)| Complex64::from_polar(a, k as f64 * x[0]))
            .sum()
    })
    .map_err(core_failure)?;

    let records = consistency_sweep(&psi, params.m, &params.eps, params.eta_ratio)
        .map_err(core_failure)?;
    let order = fitted_order(&records);

    let mut checks = Vec::new();
    let last = records.last().expect("sweep returns one record per step");
    checks.push(Check::below(
        "smallest_step_relative_error",
        last.rel_l2_error,
        params.error_tolerance,
    ));
    checks.push(Check::at_least("fitted_order", order, params.order_minimum));

    let mut rows = vec!["eps,eta,rel_l2_error".to_string()];
    for r in &records {
        rows.push(csv_row(&[fmt(r.eps), fmt(r.eta), fmt(r.rel_l2_error)]));
    }
    let csv = rows.join("\n") + "\n";
    Ok(RunOutput { checks, artifacts: vec![("consistency.csv".into(), csv)] })
}
