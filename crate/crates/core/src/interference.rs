//! Two-slit interference on a flat chart: fringe geometry, a scattering
//! probe's effect on visibility, enclosed-flux phase shifts, and a
//! trajectory-counting Monte Carlo estimator that cross-checks the analytic
//! pattern.
//!
//! Geometry convention: the slit plane is at distance 0, the screen at
//! distance `d_o` along the first axis, and the screen coordinate `x̂` runs
//! along the second axis. Slit `x_i` sits at `−d_s/2`, slit `x_f` at
//! `+d_s/2`, so the exact path-length difference
//! `Δr′(x̂) = r(x_i → x̂) − r(x_f → x̂)` is positive for positive `x̂`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::weyl_gauge::wrap_phase;

/// Screen discretization: symmetric interval `[−half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenSpec {
    pub half_width: f64,
    pub samples: usize,
}

/// Slit geometry, particle momentum, assigned gauge values at the slits, and
/// any enclosed-flux phase.
#[derive(Debug, Clone)]
pub struct TwoPathSetup {
    pub d_s: f64,
    pub d_o: f64,
    pub p: f64,
    pub sigma_i: f64,
    pub sigma_f: f64,
    pub flux_term: f64,
    pub screen: ScreenSpec,
}

impl TwoPathSetup {
    /// Setup with zero gauge values and flux, and the default screen:
    /// 2048 samples over ±4 fringe spacings.
    pub fn new(d_s: f64, d_o: f64, p: f64) -> Result<Self> {
        let mut setup = TwoPathSetup {
            d_s,
            d_o,
            p,
            sigma_i: 0.0,
            sigma_f: 0.0,
            flux_term: 0.0,
            screen: ScreenSpec { half_width: 0.0, samples: 2048 },
        };
        setup.validate_geometry()?;
        setup.screen.half_width = 4.0 * setup.fringe_spacing();
        Ok(setup)
    }

    fn validate_geometry(&self) -> Result<()> {
        for (name, value) in [("d_s", self.d_s), ("d_o", self.d_o), ("p", self.p)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_geometry()?;
        if !(self.screen.half_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "screen.half_width must be positive, got {}",
                self.screen.half_width
            )));
        }
        if self.screen.samples < 2 {
            return Err(Error::InvalidConfig(format!(
                "screen.samples must be at least 2, got {}",
                self.screen.samples
            )));
        }
        Ok(())
    }

    /// Non-fatal conditions: the small-angle formulas assume d_o ≫ d_s.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.d_s / self.d_o > 0.1 {
            out.push(format!(
                "d_s/d_o = {:.3} exceeds 0.1; small-angle formulas degrade",
                self.d_s / self.d_o
            ));
        }
        out
    }

    /// Small-angle fringe spacing d = 2π·d_o/(p·d_s).
    pub fn fringe_spacing(&self) -> f64 {
        TAU * self.d_o / (self.p * self.d_s)
    }

    /// Default histogram bin width, one fiftieth of the fringe spacing.
    pub fn default_bin_width(&self) -> f64 {
        self.fringe_spacing() / 50.0
    }

    fn delta_sigma(&self) -> f64 {
        self.sigma_i - self.sigma_f
    }
}

/// Which form of the path-length difference to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthMode {
    Exact,
    SmallAngle,
}

/// Δr′(x̂): exact two-point geometry, or its small-angle limit d_s·x̂/d_o.
pub fn path_length_difference(setup: &TwoPathSetup, x_hat: f64, mode: LengthMode) -> f64 {
    match mode {
        LengthMode::Exact => {
            let lower = (setup.d_o.powi(2) + (x_hat + 0.5 * setup.d_s).powi(2)).sqrt();
            let upper = (setup.d_o.powi(2) + (x_hat - 0.5 * setup.d_s).powi(2)).sqrt();
            lower - upper
        }
        LengthMode::SmallAngle => setup.d_s * x_hat / setup.d_o,
    }
}

/// Screen positions where the transported phase closes, i.e. where
/// `Δr′(x̂) = (2nπ − (σ_i − σ_f) − flux_term)/p`, for each n in the range.
///
/// Exact roots are bracketed and bisected, seeded by the small-angle closed
/// form. The exact Δr′ is bounded by ±d_s, so target values outside that
/// band have no root; roots landing outside the screen are omitted, as are
/// the indices with no root at all.
pub fn fringe_positions(
    setup: &TwoPathSetup,
    n_range: std::ops::RangeInclusive<i64>,
) -> Result<Vec<(i64, f64)>> {
    setup.validate()?;
    let mut out = Vec::new();
    for n in n_range {
        let target = (TAU * n as f64 - setup.delta_sigma() - setup.flux_term) / setup.p;
        if let Some(x) = invert_exact_length_difference(setup, target) {
            if x.abs() <= setup.screen.half_width {
                out.push((n, x));
            }
        }
    }
    Ok(out)
}

/// Small-angle fringe positions for the same phase condition, with the same
/// on-screen filter, keyed by fringe index.
pub fn fringe_positions_small_angle(
    setup: &TwoPathSetup,
    n_range: std::ops::RangeInclusive<i64>,
) -> Vec<(i64, f64)> {
    n_range
        .map(|n| {
            (
                n,
                setup.d_o * (TAU * n as f64 - setup.delta_sigma() - setup.flux_term)
                    / (setup.p * setup.d_s),
            )
        })
        .filter(|(_, x)| x.abs() <= setup.screen.half_width)
        .collect()
}

/// Bisection for Δr′(x̂) = target. Δr′ is strictly increasing with range
/// (−d_s, d_s), so a root exists iff |target| < d_s.
fn invert_exact_length_difference(setup: &TwoPathSetup, target: f64) -> Option<f64> {
    if target.abs() >= setup.d_s {
        return None;
    }
    if target == 0.0 {
        return Some(0.0);
    }
    let delta = |x: f64| path_length_difference(setup, x, LengthMode::Exact) - target;
    // Seed from the small-angle inverse, then grow the bracket geometrically.
    let seed = target * setup.d_o / setup.d_s;
    let mut half = 2.0 * seed.abs().max(setup.fringe_spacing());
    let (mut lo, mut hi) = loop {
        if delta(-half) < 0.0 && delta(half) > 0.0 {
            break (-half, half);
        }
        half *= 2.0;
        if !half.is_finite() {
            return None;
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if delta(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * mid.abs().max(1.0) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// A scattering probe at the slits: photon momentum and the statistically
/// averaged momentum transfer (half the photon momentum by default).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterProbe {
    pub p_ph: f64,
    pub delta_p: f64,
}

impl ScatterProbe {
    pub fn new(p_ph: f64) -> Result<Self> {
        Self::with_delta_p(p_ph, 0.5 * p_ph)
    }

    pub fn with_delta_p(p_ph: f64, delta_p: f64) -> Result<Self> {
        if !(p_ph >= 0.0) {
            return Err(Error::InvalidConfig(format!("p_ph must be ≥ 0, got {p_ph}")));
        }
        if !(delta_p >= 0.0) {
            return Err(Error::InvalidConfig(format!("delta_p must be ≥ 0, got {delta_p}")));
        }
        Ok(ScatterProbe { p_ph, delta_p })
    }

    /// Probe absent: no momentum transfer, full visibility.
    pub fn none() -> Self {
        ScatterProbe { p_ph: 0.0, delta_p: 0.0 }
    }

    pub fn warnings(&self, setup: &TwoPathSetup) -> Vec<String> {
        let mut out = Vec::new();
        if self.delta_p > 0.1 * setup.p {
            out.push(format!(
                "delta_p/p = {:.3} is not small; the displacement estimates assume δp ≪ p",
                self.delta_p / setup.p
            ));
        }
        out
    }
}

/// Probe-induced beam displacement, action perturbation, visibility, and the
/// which-path threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementImpact {
    pub s: f64,
    pub delta_s: f64,
    pub visibility: f64,
    pub which_path: bool,
}

/// Displacement s = d_o·δp/p, action perturbation δS = s·δp/2, linear-ramp
/// visibility V = max(0, 1 − 2s/d), and the which-path flag d_s·p_ph ≥ 2π.
///
/// With δp = p_ph/2 the three statements `s ≥ d/2`, `d_s·p_ph ≥ 2π`, and
/// `which_path` are one algebraic identity, flipping together at equality.
pub fn measurement_impact(setup: &TwoPathSetup, probe: &ScatterProbe) -> Result<MeasurementImpact> {
    setup.validate()?;
    if probe.p_ph == 0.0 {
        return Ok(MeasurementImpact { s: 0.0, delta_s: 0.0, visibility: 1.0, which_path: false });
    }
    let s = setup.d_o * probe.delta_p / setup.p;
    let delta_s = 0.5 * s * probe.delta_p;
    let d = setup.fringe_spacing();
    let visibility = (1.0 - 2.0 * s / d).max(0.0);
    let which_path = setup.d_s * probe.p_ph >= TAU;
    Ok(MeasurementImpact { s, delta_s, visibility, which_path })
}

/// Analytic screen pattern plus the fringe/measurement bookkeeping.
#[derive(Debug, Clone)]
pub struct PatternResult {
    pub screen_x: Vec<f64>,
    pub density: Vec<f64>,
    /// Exact-geometry maxima (root-found), the positions a detector shows.
    pub maxima: Vec<f64>,
    /// Small-angle maxima; uniformly spaced by `fringe_spacing`.
    pub maxima_small_angle: Vec<f64>,
    pub fringe_spacing: f64,
    pub shift: f64,
    pub delta_s: f64,
    pub visibility: f64,
    pub which_path: bool,
}

impl PatternResult {
    /// Rows of `x_hat,density` with a header, locale-independent formatting.
    pub fn density_csv(&self) -> String {
        let mut out = String::from("x_hat,density\n");
        for (x, d) in self.screen_x.iter().zip(&self.density) {
            out.push_str(&format!("{x},{d}\n"));
        }
        out
    }
}

/// Two-beam density D(x̂) = 1 + V·cos(p·Δr′(x̂) + Δσ + flux), with the
/// probe's action perturbation folded into σ_i (κ′ = κ·exp(iδS)) before
/// evaluation. Maxima are reported only when V > 0; a fully decohered
/// pattern is flat and has none.
pub fn density_pattern(setup: &TwoPathSetup, probe: &ScatterProbe) -> Result<PatternResult> {
    setup.validate()?;
    let impact = measurement_impact(setup, probe)?;
    let mut effective = setup.clone();
    effective.sigma_i -= impact.delta_s;

    let n = setup.screen.samples;
    let w = setup.screen.half_width;
    let mut screen_x = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    for i in 0..n {
        let x = -w + 2.0 * w * i as f64 / (n - 1) as f64;
        let phase = effective.p * path_length_difference(&effective, x, LengthMode::Exact)
            + effective.delta_sigma()
            + effective.flux_term;
        screen_x.push(x);
        density.push(1.0 + impact.visibility * phase.cos());
    }

    let (maxima, maxima_small_angle) = if impact.visibility > 0.0 {
        let bound = fringe_index_bound(&effective);
        let exact = fringe_positions(&effective, -bound..=bound)?
            .into_iter()
            .map(|(_, x)| x)
            .collect();
        let small = fringe_positions_small_angle(&effective, -bound..=bound)
            .into_iter()
            .map(|(_, x)| x)
            .collect();
        (exact, small)
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(PatternResult {
        screen_x,
        density,
        maxima,
        maxima_small_angle,
        fringe_spacing: setup.fringe_spacing(),
        shift: impact.s,
        delta_s: impact.delta_s,
        visibility: impact.visibility,
        which_path: impact.which_path,
    })
}

/// Smallest index range that covers every on-screen root in both modes.
fn fringe_index_bound(setup: &TwoPathSetup) -> i64 {
    let span = setup.screen.half_width * setup.p * setup.d_s / setup.d_o
        + setup.delta_sigma().abs()
        + setup.flux_term.abs()
        + setup.p * setup.d_s;
    (span / TAU).ceil() as i64 + 1
}

/// Density patterns over a list of flux values; the pattern is exactly
/// 2π-periodic in the flux term and its small-angle maxima drift at rate
/// dx̂/d(ef) = −d_o/(p·d_s), see [`flux_shift_rate`].
pub fn ab_flux_sweep(setup: &TwoPathSetup, flux_values: &[f64]) -> Result<Vec<PatternResult>> {
    flux_values
        .iter()
        .map(|ef| {
            let mut s = setup.clone();
            s.flux_term = *ef;
            density_pattern(&s, &ScatterProbe::none())
        })
        .collect()
}

/// Small-angle drift rate of every fringe position per unit flux phase.
pub fn flux_shift_rate(setup: &TwoPathSetup) -> f64 {
    -setup.d_o / (setup.p * setup.d_s)
}

/// Monte Carlo sampler parameters. `seed` is mandatory; runs are
/// reproducible bit for bit for a fixed seed, independent of thread count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSampler {
    pub jitter_scale: f64,
    pub samples: u64,
    pub tol_phase: f64,
    pub seed: u64,
}

/// Accepted-trajectory histogram over screen bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenHistogram {
    pub half_width: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    /// Counts rescaled to unit mean over the bins.
    pub normalized: Vec<f64>,
    pub accepted: u64,
    pub samples: u64,
}

impl ScreenHistogram {
    pub fn bin_center(&self, index: usize) -> f64 {
        -self.half_width + (index as f64 + 0.5) * self.bin_width
    }

    /// One mode per cluster of populated bins: the count-weighted centroid
    /// of the cluster's bin centers. Clusters are runs of bins at or above a
    /// quarter of the global maximum count, with gaps of up to two
    /// sub-threshold bins bridged. The centroid, not the argmax bin, is the
    /// mode estimator: a fringe's acceptance band spans several bins, and
    /// the per-bin Poisson noise makes the argmax hop between them, while
    /// the centroid pools the whole cluster and localizes to a fraction of
    /// a bin. Deterministic for fixed counts.
    pub fn modes(&self) -> Vec<f64> {
        let max = match self.counts.iter().max() {
            Some(&m) if m > 0 => m,
            _ => return Vec::new(),
        };
        let threshold = (max / 4).max(1);
        let mut clusters: Vec<(usize, usize)> = Vec::new();
        let mut gap = usize::MAX;
        for (i, &c) in self.counts.iter().enumerate() {
            if c >= threshold {
                match clusters.last_mut() {
                    Some(last) if gap <= 2 => last.1 = i,
                    _ => clusters.push((i, i)),
                }
                gap = 0;
            } else if gap != usize::MAX {
                gap += 1;
            }
        }
        clusters
            .into_iter()
            .map(|(lo, hi)| {
                let mut weight = 0.0;
                let mut moment = 0.0;
                for i in lo..=hi {
                    weight += self.counts[i] as f64;
                    moment += self.counts[i] as f64 * self.bin_center(i);
                }
                moment / weight
            })
            .collect()
    }

    /// Rows of `x_hat,normalized` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_hat,density\n");
        for (i, v) in self.normalized.iter().enumerate() {
            out.push_str(&format!("{},{v}\n", self.bin_center(i)));
        }
        out
    }
}

const MC_CHUNK: u64 = 4096;

/// Counts two-segment trajectory unions whose transported phase closes.
///
/// Per sample: a screen point x̂ is drawn uniformly, one jittered interior
/// node is drawn per slit leg (isotropic normal, scale `jitter_scale`), and
/// the non-monotonic union x_i → x̂ → x_f gets the phase
/// Φ = p·(len₁ − len₂) + (σ_i − σ_f) + flux. The screen bin is incremented
/// when Φ wraps to within `tol_phase` of zero. Each sample consumes exactly
/// five uniforms from its chunk's dedicated ChaCha substream, so the
/// histogram is reproducible regardless of how chunks are scheduled.
pub fn mc_density(setup: &TwoPathSetup, sampler: &McSampler) -> Result<ScreenHistogram> {
    setup.validate()?;
    if sampler.samples == 0 {
        return Err(Error::InvalidConfig("samples must be positive".into()));
    }
    if !(sampler.tol_phase > 0.0 && sampler.tol_phase < PI) {
        return Err(Error::InvalidConfig(format!(
            "tol_phase must lie in (0, π), got {}",
            sampler.tol_phase
        )));
    }
    if !(sampler.jitter_scale >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "jitter_scale must be ≥ 0, got {}",
            sampler.jitter_scale
        )));
    }

    let w = setup.screen.half_width;
    let bin_width = setup.default_bin_width();
    // Nudge below the ceiling so an exact integer width ratio (up to float
    // round-off) does not gain a spurious extra bin.
    let n_bins = ((2.0 * w / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let phase_offset = setup.delta_sigma() + setup.flux_term;
    let slit_i = [0.0, -0.5 * setup.d_s];
    let slit_f = [0.0, 0.5 * setup.d_s];

    let n_chunks = sampler.samples.div_ceil(MC_CHUNK);
    let counts = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
            rng.set_stream(chunk + 1);
            let mut local = vec![0u64; n_bins];
            let in_chunk = MC_CHUNK.min(sampler.samples - chunk * MC_CHUNK);
            for _ in 0..in_chunk {
                let x_hat = -w + 2.0 * w * rng.random::<f64>();
                let (j1, j2) = sample_jitter_pair(&mut rng, sampler.jitter_scale);
                let screen_pt = [setup.d_o, x_hat];
                let len1 = jittered_leg_length(slit_i, screen_pt, j1);
                let len2 = jittered_leg_length(slit_f, screen_pt, j2);
                let phi = setup.p * (len1 - len2) + phase_offset;
                if wrap_phase(phi).abs() < sampler.tol_phase {
                    let idx = (((x_hat + w) / bin_width) as usize).min(n_bins - 1);
                    local[idx] += 1;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; n_bins],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let accepted: u64 = counts.iter().sum();
    if accepted == 0 {
        return Err(Error::DegenerateStatistics);
    }
    let mean = accepted as f64 / n_bins as f64;
    let normalized = counts.iter().map(|&c| c as f64 / mean).collect();
    Ok(ScreenHistogram {
        half_width: w,
        bin_width,
        counts,
        normalized,
        accepted,
        samples: sampler.samples,
    })
}

/// Four uniforms → two isotropic 2D normal displacements via Box–Muller.
/// Draw order is fixed; `1 − u` keeps the logarithm away from zero.
fn sample_jitter_pair(rng: &mut ChaCha8Rng, scale: f64) -> ([f64; 2], [f64; 2]) {
    let mut draw = || {
        let u1 = 1.0 - rng.random::<f64>();
        let u2 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        [scale * r * c, scale * r * s]
    };
    (draw(), draw())
}

/// Length of the two-segment polyline from `a` to `b` through the jittered
/// midpoint.
fn jittered_leg_length(a: [f64; 2], b: [f64; 2], jitter: [f64; 2]) -> f64 {
    let node = [0.5 * (a[0] + b[0]) + jitter[0], 0.5 * (a[1] + b[1]) + jitter[1]];
    let d1 = ((node[0] - a[0]).powi(2) + (node[1] - a[1]).powi(2)).sqrt();
    let d2 = ((b[0] - node[0]).powi(2) + (b[1] - node[1]).powi(2)).sqrt();
    d1 + d2
}
