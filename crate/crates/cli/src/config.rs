//! Experiment configuration: one JSON document per run.
//!
//! The envelope is fixed (`schema_version`, `experiment`, `parameters`,
//! `output`); the `parameters` object is experiment-specific. Every field has
//! a documented default, unknown fields are rejected, and validation errors
//! name the offending field so a broken config points at its own fix.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level envelope. `parameters` stays untyped here; the subcommand
/// deserializes it against its own parameter struct.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: String,
    #[serde(default)]
    pub parameters: serde_json::Value,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Where artifacts go and which formats to emit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Target directory; `--out` overrides, `.` when neither is given.
    pub directory: Option<String>,
    /// Subset of `csv` and `json`. Default: both.
    pub formats: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: None, formats: vec!["csv".into(), "json".into()] }
    }
}

impl OutputSpec {
    pub fn validate(&self) -> Result<(), String> {
        for entry in &self.formats {
            if entry != "csv" && entry != "json" {
                return Err(format!(
                    "output.formats entry {entry:?} is not supported; expected \"csv\" or \"json\""
                ));
            }
        }
        Ok(())
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

fn positive(name: &str, value: f64) -> Result<(), String> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(format!("parameters.{name} must be a positive finite number, got {value}"))
    }
}

fn non_negative(name: &str, value: f64) -> Result<(), String> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(format!("parameters.{name} must be a non-negative finite number, got {value}"))
    }
}

/// Compare curvature from the metric jet against the independent
/// Riemann-contraction route at random chart points.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryCheckParams {
    /// Named metrics to sweep. Default: flat plane, radius-2 sphere,
    /// hyperbolic half-plane.
    pub metrics: Vec<String>,
    /// Random chart points per metric. Default 100.
    pub points: usize,
    /// RNG seed for the sample points. Default 7.
    pub seed: u64,
    /// Absolute tolerance on the curvature mismatch. Default 1e-5.
    pub tolerance: f64,
}

impl Default for GeometryCheckParams {
    fn default() -> Self {
        GeometryCheckParams {
            metrics: vec!["flat-2".into(), "sphere:2".into(), "hyperbolic2".into()],
            points: 100,
            seed: 7,
            tolerance: 1e-5,
        }
    }
}

impl GeometryCheckParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.metrics.is_empty() {
            return Err("parameters.metrics must list at least one metric".into());
        }
        if self.points == 0 {
            return Err("parameters.points must be at least 1".into());
        }
        positive("tolerance", self.tolerance)
    }
}

/// Relax a path to the action extremum and compare against an independent
/// geodesic oracle (or against the straight chord on a flat chart).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtremalParams {
    /// Chart metric. Default `sphere:2`.
    pub metric: String,
    /// Endpoints in chart coordinates.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Particle mass. Default 1.
    pub m: f64,
    /// Path segments. Default 64.
    pub segments: usize,
    /// Parameter span of the path. Default 1.
    pub tau_span: f64,
    /// Max node deviation against the shooting oracle (curved charts).
    /// Default 1e-4.
    pub oracle_tolerance: f64,
    /// Max relative off-chord deviation (flat charts). Default 1e-8.
    pub collinear_tolerance: f64,
}

impl Default for ExtremalParams {
    fn default() -> Self {
        ExtremalParams {
            metric: "sphere:2".into(),
            x: vec![1.2, 0.4],
            y: vec![1.9, 1.1],
            m: 1.0,
            segments: 64,
            tau_span: 1.0,
            oracle_tolerance: 1e-4,
            collinear_tolerance: 1e-8,
        }
    }
}

impl ExtremalParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.x.is_empty() || self.x.len() != self.y.len() {
            return Err(format!(
                "parameters.x and parameters.y must be non-empty and the same length, got {} and {}",
                self.x.len(),
                self.y.len()
            ));
        }
        if self.segments < 3 {
            return Err(format!("parameters.segments must be at least 3, got {}", self.segments));
        }
        positive("m", self.m)?;
        positive("tau_span", self.tau_span)?;
        positive("oracle_tolerance", self.oracle_tolerance)?;
        positive("collinear_tolerance", self.collinear_tolerance)
    }
}

/// Screen discretization shared by the interference experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreenParams {
    /// Half-width of the screen window. Default: four fringe spacings.
    pub half_width: Option<f64>,
    /// Sample count across the window. Default 2048 (double-slit),
    /// 2001 (flux sweep, odd so the screen includes the center).
    pub samples: usize,
}

impl Default for ScreenParams {
    fn default() -> Self {
        ScreenParams { half_width: None, samples: 2048 }
    }
}

/// Monte Carlo block of the double-slit run; omit it to skip sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McParams {
    /// Trajectory count. Default 50000.
    pub samples: u64,
    /// Endpoint jitter scale in slit units. Default 1.
    pub jitter_scale: f64,
    /// Wrapped-phase acceptance tolerance. Default 0.15.
    pub tol_phase: f64,
    /// RNG seed; `--seed` overrides. Default 7.
    pub seed: u64,
    /// Allowed mode-to-maximum distance in histogram bins. Default 1.
    pub mode_bin_tolerance: f64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            samples: 50_000,
            jitter_scale: 1.0,
            tol_phase: 0.15,
            seed: 7,
            mode_bin_tolerance: 1.0,
        }
    }
}

/// Two-path interference pattern with optional scattering probe and
/// optional Monte Carlo cross-check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoubleSlitParams {
    /// Slit separation. Default 1.
    pub d_s: f64,
    /// Slit-to-screen distance. Default 200.
    pub d_o: f64,
    /// Particle momentum. Default 10.
    pub p: f64,
    /// Assigned gauge values at the slits. Default 0.
    pub sigma_i: f64,
    pub sigma_f: f64,
    /// Enclosed-flux phase. Default 0.
    pub flux_ef: f64,
    /// Probe momentum; 0 disables the probe. Default 0.
    pub p_ph: f64,
    pub screen: ScreenParams,
    /// Monte Carlo block; `null` skips the sampler.
    pub mc: Option<McParams>,
    /// Check fringe orders |n| up to this bound. Default 3.
    pub n_max: i64,
    /// Relative tolerance on (d_s/d_o) = (Δr/d). Default 1e-9.
    pub ratio_identity_tolerance: f64,
    /// Relative tolerance on small-angle fringe spacing uniformity.
    /// Default 1e-9.
    pub spacing_tolerance: f64,
    /// Relative tolerance between exact and small-angle maxima.
    /// Default 0.005.
    pub exact_match_tolerance: f64,
}

impl Default for DoubleSlitParams {
    fn default() -> Self {
        DoubleSlitParams {
            d_s: 1.0,
            d_o: 200.0,
            p: 10.0,
            sigma_i: 0.0,
            sigma_f: 0.0,
            flux_ef: 0.0,
            p_ph: 0.0,
            screen: ScreenParams::default(),
            mc: None,
            n_max: 3,
            ratio_identity_tolerance: 1e-9,
            spacing_tolerance: 1e-9,
            exact_match_tolerance: 0.005,
        }
    }
}

impl DoubleSlitParams {
    pub fn validate(&self) -> Result<(), String> {
        positive("d_s", self.d_s)?;
        positive("d_o", self.d_o)?;
        positive("p", self.p)?;
        non_negative("p_ph", self.p_ph)?;
        if !self.sigma_i.is_finite() || !self.sigma_f.is_finite() || !self.flux_ef.is_finite() {
            return Err("parameters.sigma_i, parameters.sigma_f and parameters.flux_ef must be finite".into());
        }
        if self.screen.samples < 2 {
            return Err(format!(
                "parameters.screen.samples must be at least 2, got {}",
                self.screen.samples
            ));
        }
        if let Some(w) = self.screen.half_width {
            positive("screen.half_width", w)?;
        }
        if self.n_max < 0 {
            return Err(format!("parameters.n_max must be non-negative, got {}", self.n_max));
        }
        if let Some(mc) = &self.mc {
            if mc.samples == 0 {
                return Err("parameters.mc.samples must be at least 1".into());
            }
            positive("mc.jitter_scale", mc.jitter_scale)?;
            positive("mc.tol_phase", mc.tol_phase)?;
            non_negative("mc.mode_bin_tolerance", mc.mode_bin_tolerance)?;
        }
        positive("ratio_identity_tolerance", self.ratio_identity_tolerance)?;
        positive("spacing_tolerance", self.spacing_tolerance)?;
        positive("exact_match_tolerance", self.exact_match_tolerance)
    }
}

fn default_flux_max() -> f64 {
    2.0 * std::f64::consts::TAU
}

/// Sweep the enclosed-flux phase and track the pattern shift.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbSweepParams {
    pub d_s: f64,
    pub d_o: f64,
    pub p: f64,
    pub sigma_i: f64,
    pub sigma_f: f64,
    pub screen: ScreenParams,
    /// Flux samples over `[0, flux_max)`, half-open so one period later
    /// lands back on the grid. Default 64.
    pub samples: usize,
    /// Sweep extent. Default 4π (two periods).
    pub flux_max: f64,
    /// Pointwise density agreement one period apart. Default 1e-12.
    pub periodicity_tolerance: f64,
    /// Shift agreement one period apart (root-found positions).
    /// Default 1e-9.
    pub shift_periodicity_tolerance: f64,
    /// Relative tolerance on the measured shift rate vs −d_o/(p d_s).
    /// Default 1e-9.
    pub rate_tolerance: f64,
    /// Tolerance on the central-density extrema. Default 1e-12.
    pub extrema_tolerance: f64,
}

impl Default for AbSweepParams {
    fn default() -> Self {
        AbSweepParams {
            d_s: 1.0,
            d_o: 200.0,
            p: 10.0,
            sigma_i: 0.0,
            sigma_f: 0.0,
            screen: ScreenParams { half_width: None, samples: 2001 },
            samples: 64,
            flux_max: default_flux_max(),
            periodicity_tolerance: 1e-12,
            shift_periodicity_tolerance: 1e-9,
            rate_tolerance: 1e-9,
            extrema_tolerance: 1e-12,
        }
    }
}

impl AbSweepParams {
    pub fn validate(&self) -> Result<(), String> {
        positive("d_s", self.d_s)?;
        positive("d_o", self.d_o)?;
        positive("p", self.p)?;
        if !self.sigma_i.is_finite() || !self.sigma_f.is_finite() {
            return Err("parameters.sigma_i and parameters.sigma_f must be finite".into());
        }
        positive("flux_max", self.flux_max)?;
        if self.samples < 2 {
            return Err(format!("parameters.samples must be at least 2, got {}", self.samples));
        }
        if self.screen.samples < 3 || self.screen.samples.is_multiple_of(2) {
            return Err(format!(
                "parameters.screen.samples must be odd and at least 3 so the screen includes the center, got {}",
                self.screen.samples
            ));
        }
        if let Some(w) = self.screen.half_width {
            positive("screen.half_width", w)?;
        }
        // The periodicity checks compare sample i against sample i + k where
        // k steps cover exactly one 2π period; that k must be an integer.
        let k = self.samples as f64 * std::f64::consts::TAU / self.flux_max;
        if (k - k.round()).abs() > 1e-9 || k.round() < 1.0 || k.round() >= self.samples as f64 {
            return Err(format!(
                "parameters.samples and parameters.flux_max must place one 2π period on the sample grid; \
                 samples*2π/flux_max = {k} is not an integer in [1, samples)"
            ));
        }
        positive("periodicity_tolerance", self.periodicity_tolerance)?;
        positive("shift_periodicity_tolerance", self.shift_periodicity_tolerance)?;
        positive("rate_tolerance", self.rate_tolerance)?;
        positive("extrema_tolerance", self.extrema_tolerance)
    }

    /// Samples per 2π period (validated integral).
    pub fn period_steps(&self) -> usize {
        (self.samples as f64 * std::f64::consts::TAU / self.flux_max).round() as usize
    }
}

/// Verify short-time moments: closed form, direct quadrature, and the
/// damping-free extrapolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsParams {
    /// Metric value at the expansion point, row-major. Default diag(1,4).
    pub g: Vec<Vec<f64>>,
    /// Particle mass. Default 1.
    pub m: f64,
    /// Damping schedule for the extrapolation. Default [0.1, 0.01, 0.001].
    pub etas: Vec<f64>,
    /// Quadrature half-width. Default 152 (covers the smallest eta).
    pub radius: f64,
    /// Simpson points per axis. Default 1200001.
    pub points: usize,
    /// Tolerance on the exact closed-form identities. Default 1e-12.
    pub closed_form_tolerance: f64,
    /// Tolerance on the extrapolated second moments. Default 1e-3.
    pub extrapolation_tolerance: f64,
}

impl Default for MomentsParams {
    fn default() -> Self {
        MomentsParams {
            g: vec![vec![1.0, 0.0], vec![0.0, 4.0]],
            m: 1.0,
            etas: vec![1e-1, 1e-2, 1e-3],
            radius: 152.0,
            points: 1_200_001,
            closed_form_tolerance: 1e-12,
            extrapolation_tolerance: 1e-3,
        }
    }
}

impl MomentsParams {
    pub fn validate(&self) -> Result<(), String> {
        let n = self.g.len();
        if n == 0 || self.g.iter().any(|row| row.len() != n) {
            return Err("parameters.g must be a non-empty square matrix".into());
        }
        positive("m", self.m)?;
        if self.etas.len() < 2 {
            return Err(format!(
                "parameters.etas needs at least 2 entries to extrapolate, got {}",
                self.etas.len()
            ));
        }
        for (i, eta) in self.etas.iter().enumerate() {
            positive(&format!("etas[{i}]"), *eta)?;
        }
        for i in 1..self.etas.len() {
            if self.etas[i] >= self.etas[i - 1] {
                return Err("parameters.etas must be strictly decreasing".into());
            }
        }
        positive("radius", self.radius)?;
        if self.points < 3 {
            return Err(format!("parameters.points must be at least 3, got {}", self.points));
        }
        positive("closed_form_tolerance", self.closed_form_tolerance)?;
        positive("extrapolation_tolerance", self.extrapolation_tolerance)
    }
}

/// Measure the convergence order of the short-time action expansion
/// against the exact geodesic action.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HjOrderParams {
    /// Curved chart for the order fit. Default `sphere:2`.
    pub metric: String,
    /// Expansion point.
    pub point: Vec<f64>,
    /// Separation direction (normalized internally).
    pub direction: Vec<f64>,
    /// Particle mass. Default 1.3.
    pub m: f64,
    /// Time step entering the residual. Default 0.01.
    pub eps: f64,
    /// Separation radii for the log-log fit. Default [0.02, 0.04, 0.08].
    pub radii: Vec<f64>,
    /// Minimum fitted slope. Default 2.8 (true order is 5; the floor
    /// leaves room for cancellation noise at the smallest radius).
    pub slope_minimum: f64,
    /// Absolute residual bound on the flat chart. Default 1e-10.
    pub flat_tolerance: f64,
}

impl Default for HjOrderParams {
    fn default() -> Self {
        HjOrderParams {
            metric: "sphere:2".into(),
            point: vec![1.1, 0.7],
            direction: vec![0.6, 0.8],
            m: 1.3,
            eps: 0.01,
            radii: vec![0.02, 0.04, 0.08],
            slope_minimum: 2.8,
            flat_tolerance: 1e-10,
        }
    }
}

impl HjOrderParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.point.is_empty() || self.point.len() != self.direction.len() {
            return Err(format!(
                "parameters.point and parameters.direction must be non-empty and the same length, got {} and {}",
                self.point.len(),
                self.direction.len()
            ));
        }
        if self.direction.iter().map(|c| c * c).sum::<f64>() <= 0.0 {
            return Err("parameters.direction must be a nonzero vector".into());
        }
        positive("m", self.m)?;
        positive("eps", self.eps)?;
        if self.radii.len() < 2 {
            return Err(format!(
                "parameters.radii needs at least 2 entries for a slope fit, got {}",
                self.radii.len()
            ));
        }
        for (i, r) in self.radii.iter().enumerate() {
            positive(&format!("radii[{i}]"), *r)?;
        }
        for i in 1..self.radii.len() {
            if self.radii[i] <= self.radii[i - 1] {
                return Err("parameters.radii must be strictly increasing".into());
            }
        }
        positive("slope_minimum", self.slope_minimum)?;
        positive("flat_tolerance", self.flat_tolerance)
    }
}

/// Verify the wave-operator residual of a plane mode: second-order decay
/// on shell, the mass-shell gap off shell, and agreement between the
/// stencil route and the field-operator route.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KgVerifyParams {
    /// Spatial wave numbers; the grid has one extra (time) axis.
    pub k: Vec<f64>,
    /// Frequency; omit for the on-shell value √(|k|² + m²).
    pub omega: Option<f64>,
    /// Mass. Default 1.
    pub m: f64,
    /// Coarse grid spacing; the run also evaluates spacing/2. Default 0.02.
    pub spacing: f64,
    /// Grid shape, one entry per axis (time first). Default [41, 41].
    pub shape: Vec<usize>,
    /// Allowed deviation of the residual ratio from 4. Default 0.4.
    pub ratio_tolerance: f64,
    /// Agreement between the two residual routes. Default 1e-11.
    pub dual_tolerance: f64,
    /// Tolerance on the off-shell gap at the fine spacing. Default 1e-4.
    pub gap_tolerance: f64,
}

impl Default for KgVerifyParams {
    fn default() -> Self {
        KgVerifyParams {
            k: vec![1.0],
            omega: None,
            m: 1.0,
            spacing: 0.02,
            shape: vec![41, 41],
            ratio_tolerance: 0.4,
            dual_tolerance: 1e-11,
            gap_tolerance: 1e-4,
        }
    }
}

impl KgVerifyParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.k.is_empty() {
            return Err("parameters.k must list at least one spatial wave number".into());
        }
        if self.k.iter().any(|c| !c.is_finite()) {
            return Err("parameters.k entries must be finite".into());
        }
        if let Some(w) = self.omega {
            if !w.is_finite() {
                return Err(format!("parameters.omega must be finite, got {w}"));
            }
        }
        positive("m", self.m)?;
        positive("spacing", self.spacing)?;
        if self.shape.len() != self.k.len() + 1 {
            return Err(format!(
                "parameters.shape must have {} entries (time axis plus one per wave number), got {}",
                self.k.len() + 1,
                self.shape.len()
            ));
        }
        if self.shape.iter().any(|&n| n < 5) {
            return Err("parameters.shape entries must be at least 5 for an interior stencil".into());
        }
        positive("ratio_tolerance", self.ratio_tolerance)?;
        positive("dual_tolerance", self.dual_tolerance)?;
        positive("gap_tolerance", self.gap_tolerance)
    }

    pub fn resolved_omega(&self) -> f64 {
        self.omega.unwrap_or_else(|| {
            let k2: f64 = self.k.iter().map(|c| c * c).sum();
            (k2 + self.m * self.m).sqrt()
        })
    }
}

/// One Fourier mode of the initial field: `[wave_number, amplitude]`.
pub type ModeSpec = (i64, f64);

/// Drive one short-time step on a curved ring and compare the response
/// against the evolution equation it should generate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConsistencyParams {
    /// One-dimensional periodic metric. Default `sine-ring:0.15`.
    pub metric: String,
    /// Ring nodes. Default 256.
    pub nodes: usize,
    /// Mass. Default 1.
    pub m: f64,
    /// Initial field as Fourier modes. Default e^{i2x} + 0.3 e^{ix}.
    pub modes: Vec<ModeSpec>,
    /// Step sizes, strictly decreasing. Default [0.02, 0.01, 0.005].
    pub eps: Vec<f64>,
    /// Damping as a fraction of the step. Default 0.1.
    pub eta_ratio: f64,
    /// Relative error bound at the smallest step. Default 0.05.
    pub error_tolerance: f64,
    /// Minimum fitted convergence order. Default 1.
    pub order_minimum: f64,
}

impl Default for KernelConsistencyParams {
    fn default() -> Self {
        KernelConsistencyParams {
            metric: "sine-ring:0.15".into(),
            nodes: 256,
            m: 1.0,
            modes: vec![(2, 1.0), (1, 0.3)],
            eps: vec![0.02, 0.01, 0.005],
            eta_ratio: 0.1,
            error_tolerance: 0.05,
            order_minimum: 1.0,
        }
    }
}

impl KernelConsistencyParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes < 8 {
            return Err(format!("parameters.nodes must be at least 8, got {}", self.nodes));
        }
        positive("m", self.m)?;
        if self.modes.is_empty() {
            return Err("parameters.modes must list at least one Fourier mode".into());
        }
        if self.modes.iter().any(|(_, a)| !a.is_finite()) {
            return Err("parameters.modes amplitudes must be finite".into());
        }
        if self.eps.len() < 2 {
            return Err(format!(
                "parameters.eps needs at least 2 entries for an order fit, got {}",
                self.eps.len()
            ));
        }
        for (i, e) in self.eps.iter().enumerate() {
            positive(&format!("eps[{i}]"), *e)?;
        }
        for i in 1..self.eps.len() {
            if self.eps[i] >= self.eps[i - 1] {
                return Err("parameters.eps must be strictly decreasing".into());
            }
        }
        positive("eta_ratio", self.eta_ratio)?;
        positive("error_tolerance", self.error_tolerance)?;
        positive("order_minimum", self.order_minimum)
    }
}
