//! Discrete trajectories, action evaluation, and extremal-path solving.
//!
//! A [`Path`] is an ordered node list with strictly increasing parameter
//! values. Actions are evaluated with the midpoint rule, which is
//! second-order accurate and symmetric under path inversion. Extremals are
//! found by damped Newton iteration on the discrete Euler-Lagrange system
//! rather than by minimization: charged and indefinite-signature actions are
//! stationary saddle points, and stationarity is all that is required.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::ChartMetric;

/// Segments passing closer than this to a flux puncture are rejected.
pub const PUNCTURE_TOL: f64 = 1e-9;

/// Ordered chart points `x_0..x_M` with parameters `τ_0 < … < τ_M`.
///
/// Directly constructed paths have strictly increasing parameters.
/// [`Path::inverted`] reverses both lists, so an inverted path runs with
/// decreasing parameters, and a continuing union of the two is
/// "non-monotonic". Segment increments Δτ carry that traversal sign through
/// the action: traversing a segment backwards contributes the negated term,
/// which is what makes a path followed by its own inversion close up with
/// zero total action.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub nodes: Vec<Vec<f64>>,
    pub params: Vec<f64>,
}

impl Path {
    /// Validates the path invariants: at least one segment, matching node and
    /// parameter counts, uniform node dimension, strictly increasing params.
    pub fn new(nodes: Vec<Vec<f64>>, params: Vec<f64>) -> Result<Path> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if params.len() != nodes.len() {
            return Err(Error::InvalidPath(format!(
                "{} nodes but {} parameter values",
                nodes.len(),
                params.len()
            )));
        }
        let dim = nodes[0].len();
        if dim == 0 {
            return Err(Error::InvalidPath("zero-dimensional nodes".into()));
        }
        if let Some(bad) = nodes.iter().position(|p| p.len() != dim) {
            return Err(Error::InvalidPath(format!(
                "node {bad} has dimension {}, expected {dim}",
                nodes[bad].len()
            )));
        }
        if let Some(i) = params.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath(format!(
                "params not strictly increasing at index {i}: {} then {}",
                params[i],
                params[i + 1]
            )));
        }
        Ok(Path { nodes, params })
    }

    /// Straight chart-line path with uniform parameters on `[0, tau_span]`.
    pub fn straight(x: &[f64], y: &[f64], segments: usize, tau_span: f64) -> Path {
        assert!(segments >= 1, "need at least one segment");
        assert_eq!(x.len(), y.len(), "endpoint dimension mismatch");
        assert!(tau_span > 0.0, "tau_span must be positive");
        let nodes = (0..=segments)
            .map(|i| {
                let t = i as f64 / segments as f64;
                x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect()
            })
            .collect();
        let params = (0..=segments)
            .map(|i| tau_span * i as f64 / segments as f64)
            .collect();
        Path { nodes, params }
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    /// Reversed traversal: both the node list and the parameter list are
    /// reversed, so every parameter increment changes sign. The action of the
    /// result is the exact negation of the original, segment by segment.
    pub fn inverted(&self) -> Path {
        let nodes: Vec<Vec<f64>> = self.nodes.iter().rev().cloned().collect();
        let params: Vec<f64> = self.params.iter().rev().copied().collect();
        Path { nodes, params }
    }

    /// One node per row: `tau,x1,..,xN`, with a header row.
    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let mut out = String::from("tau");
        for k in 1..=dim {
            out.push_str(&format!(",x{k}"));
        }
        out.push('\n');
        for (tau, node) in self.params.iter().zip(&self.nodes) {
            out.push_str(&format!("{tau}"));
            for c in node {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`Path::to_csv`].
    pub fn from_csv(text: &str) -> Result<Path> {
        let mut nodes = Vec::new();
        let mut params = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if ln == 0 && line.starts_with("tau") {
                continue;
            }
            let mut fields = line.split(',');
            let tau: f64 = fields
                .next()
                .unwrap()
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad CSV number on line {}", ln + 1)))?;
            let node: std::result::Result<Vec<f64>, _> =
                fields.map(|f| f.trim().parse::<f64>()).collect();
            let node =
                node.map_err(|_| Error::InvalidConfig(format!("bad CSV number on line {}", ln + 1)))?;
            params.push(tau);
            nodes.push(node);
        }
        Path::new(nodes, params)
    }
}

type PotentialFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

enum PotentialKind {
    Zero,
    /// φ = (f/2π)(−y, x)/r² on the punctured plane; line integrals count
    /// winding around the origin times `f`.
    Solenoid { f: f64 },
    Custom(Box<PotentialFn>),
}

/// A covector field `φ_μ(x)` entering line integrals along paths.
pub struct GaugePotential {
    kind: PotentialKind,
}

impl GaugePotential {
    pub fn zero() -> Self {
        GaugePotential { kind: PotentialKind::Zero }
    }

    pub fn solenoid(f: f64) -> Self {
        GaugePotential { kind: PotentialKind::Solenoid { f } }
    }

    pub fn from_fn<F>(components: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        GaugePotential { kind: PotentialKind::Custom(Box::new(components)) }
    }

    /// `"zero"` or `"solenoid:<f>"`.
    pub fn named(id: &str) -> Result<Self> {
        if id == "zero" {
            return Ok(GaugePotential::zero());
        }
        if let Some(f) = id.strip_prefix("solenoid:") {
            let f: f64 = f
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad potential id {id:?}")))?;
            return Ok(GaugePotential::solenoid(f));
        }
        Err(Error::InvalidConfig(format!("unknown potential id {id:?}")))
    }

    /// Enclosed flux per winding, when the potential is a solenoid preset.
    pub fn flux(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Solenoid { f } => Some(f),
            _ => None,
        }
    }

    /// Raw component evaluation. The solenoid form diverges at the puncture;
    /// segment-level validity is enforced by the line-integral routines, so
    /// callers evaluating points directly must stay away from the origin.
    pub fn components(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Zero => vec![0.0; x.len()],
            PotentialKind::Solenoid { f } => {
                assert_eq!(x.len(), 2, "solenoid potential lives on a 2d chart");
                let r2 = x[0] * x[0] + x[1] * x[1];
                let c = f / (2.0 * std::f64::consts::PI * r2);
                vec![-c * x[1], c * x[0]]
            }
            PotentialKind::Custom(f) => {
                let v = f(x);
                assert_eq!(v.len(), x.len(), "potential component count mismatch");
                v
            }
        }
    }

    /// Rejects segments that pass through the potential's singular set.
    pub fn check_segment(&self, a: &[f64], b: &[f64]) -> Result<()> {
        if let PotentialKind::Solenoid { .. } = self.kind {
            // Distance from the origin to the segment [a, b] in the plane.
            let (ax, ay, bx, by) = (a[0], a[1], b[0], b[1]);
            let (dx, dy) = (bx - ax, by - ay);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 {
                0.0
            } else {
                (-(ax * dx + ay * dy) / len2).clamp(0.0, 1.0)
            };
            let (cx, cy) = (ax + t * dx, ay + t * dy);
            let dist = (cx * cx + cy * cy).sqrt();
            if dist < PUNCTURE_TOL {
                return Err(Error::InvalidPath(format!(
                    "segment passes within {dist:.3e} of the flux puncture"
                )));
            }
        }
        Ok(())
    }
}

/// Midpoint-rule line integral `Σ_i φ_μ(x_{i+½}) Δx_i^μ` along the path.
pub fn discrete_line_integral(potential: &GaugePotential, path: &Path) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..path.segments() {
        let a = &path.nodes[i];
        let b = &path.nodes[i + 1];
        potential.check_segment(a, b)?;
        let mid: Vec<f64> = a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect();
        let phi = potential.components(&mid);
        total += phi.iter().zip(a.iter().zip(b)).map(|(c, (p, q))| c * (q - p)).sum::<f64>();
    }
    Ok(total)
}

/// Which Lagrangian the action integrates.
pub enum LagrangianKind {
    /// `L = (m/2)(g_{μν} ẋ^μ ẋ^ν + 1)`: the quadratic form whose extremals
    /// coincide with those of the homogeneous length Lagrangian, which cannot
    /// be discretized directly (it is parametrization-invariant and hence
    /// rank-deficient).
    InhomogeneousMassive { m: f64 },
    /// Same mass term plus the minimal-coupling term `e φ_μ ẋ^μ`.
    Charged { m: f64, e: f64, potential: GaugePotential },
}

/// A Lagrangian kind bound to the chart metric it contracts against.
pub struct LagrangianSpec {
    pub kind: LagrangianKind,
    pub metric: Arc<ChartMetric>,
}

impl LagrangianSpec {
    pub fn new(kind: LagrangianKind, metric: impl Into<Arc<ChartMetric>>) -> Result<LagrangianSpec> {
        let spec = LagrangianSpec { kind, metric: metric.into() };
        if !(spec.mass() > 0.0) {
            return Err(Error::InvalidConfig(format!("mass must be > 0, got {}", spec.mass())));
        }
        Ok(spec)
    }

    pub fn mass(&self) -> f64 {
        match self.kind {
            LagrangianKind::InhomogeneousMassive { m } => m,
            LagrangianKind::Charged { m, .. } => m,
        }
    }
}

/// Action contribution of one segment under the midpoint rule.
fn segment_action(lag: &LagrangianSpec, a: &[f64], b: &[f64], dtau: f64) -> Result<f64> {
    let mid: Vec<f64> = a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect();
    let dx: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
    let g = lag.metric.components(&mid);
    let n = dx.len();
    let mut quad = 0.0;
    for mu in 0..n {
        for nu in 0..n {
            quad += g[(mu, nu)] * dx[mu] * dx[nu];
        }
    }
    let m = lag.mass();
    let mut s = 0.5 * m * (quad / dtau + dtau);
    if let LagrangianKind::Charged { e, ref potential, .. } = lag.kind {
        potential.check_segment(a, b)?;
        let phi = potential.components(&mid);
        s += e * phi.iter().zip(&dx).map(|(c, d)| c * d).sum::<f64>();
    }
    Ok(s)
}

/// Per-segment contributions to [`action`], in traversal order.
///
/// Δτ is signed: segments traversed with decreasing parameter (inverted or
/// non-monotonic paths) contribute negated terms. A zero increment has no
/// traversal direction and is rejected.
pub fn segment_actions(path: &Path, lag: &LagrangianSpec) -> Result<Vec<f64>> {
    if path.nodes.len() < 2 {
        return Err(Error::InvalidPath("action needs at least 2 nodes".into()));
    }
    if path.dim() != lag.metric.dim() {
        return Err(Error::InvalidPath(format!(
            "path dimension {} does not match chart dimension {}",
            path.dim(),
            lag.metric.dim()
        )));
    }
    let mut terms = Vec::with_capacity(path.segments());
    for i in 0..path.segments() {
        let dtau = path.params[i + 1] - path.params[i];
        if dtau == 0.0 || !dtau.is_finite() {
            return Err(Error::InvalidPath(format!(
                "degenerate parameter increment at segment {i}: Δτ = {dtau}"
            )));
        }
        terms.push(segment_action(lag, &path.nodes[i], &path.nodes[i + 1], dtau)?);
    }
    Ok(terms)
}

/// Midpoint-rule discrete action `Σ_i L(x_{i+½}, Δx_i/Δτ_i) Δτ_i`.
pub fn action(path: &Path, lag: &LagrangianSpec) -> Result<f64> {
    Ok(segment_actions(path, lag)?.iter().sum())
}

const EL_TARGET: f64 = 1e-12;
const EL_ACCEPT: f64 = 1e-10;
const EL_MAX_ITERS: usize = 100;

struct ElSolver<'a> {
    lag: &'a LagrangianSpec,
    params: Vec<f64>,
    dim: usize,
}

impl ElSolver<'_> {
    /// `∂(action)/∂ nodes[k][alpha]` by a central difference over the two
    /// segments that touch node `k`. Segment terms are O(Δτ), so the
    /// difference stays far above rounding noise at this step size.
    fn grad_component(&self, nodes: &mut [Vec<f64>], k: usize, alpha: usize) -> Result<f64> {
        let h = 1e-6 * nodes[k][alpha].abs().max(1.0);
        let local = |nodes: &[Vec<f64>]| -> Result<f64> {
            let mut s = 0.0;
            for i in [k - 1, k] {
                let dtau = self.params[i + 1] - self.params[i];
                s += segment_action(self.lag, &nodes[i], &nodes[i + 1], dtau)?;
            }
            Ok(s)
        };
        let saved = nodes[k][alpha];
        nodes[k][alpha] = saved + h;
        let plus = local(nodes)?;
        nodes[k][alpha] = saved - h;
        let minus = local(nodes)?;
        nodes[k][alpha] = saved;
        Ok((plus - minus) / (2.0 * h))
    }

    fn gradient(&self, nodes: &mut [Vec<f64>]) -> Result<DVector<f64>> {
        let m = nodes.len() - 1;
        let mut g = DVector::zeros((m - 1) * self.dim);
        for k in 1..m {
            for alpha in 0..self.dim {
                g[(k - 1) * self.dim + alpha] = self.grad_component(nodes, k, alpha)?;
            }
        }
        Ok(g)
    }

    /// Dense Hessian filled only on its block-tridiagonal support: moving
    /// node `j` changes gradient rows `j − 1`, `j`, `j + 1` alone.
    fn hessian(&self, nodes: &mut [Vec<f64>]) -> Result<DMatrix<f64>> {
        let m = nodes.len() - 1;
        let size = (m - 1) * self.dim;
        let mut hess = DMatrix::zeros(size, size);
        for j in 1..m {
            for beta in 0..self.dim {
                let h = 1e-5 * nodes[j][beta].abs().max(1.0);
                let col = (j - 1) * self.dim + beta;
                let saved = nodes[j][beta];
                for (sign, factor) in [(1.0, 0.5 / h), (-1.0, -0.5 / h)] {
                    nodes[j][beta] = saved + sign * h;
                    for k in [j.wrapping_sub(1), j, j + 1] {
                        if k < 1 || k > m - 1 {
                            continue;
                        }
                        for alpha in 0..self.dim {
                            let gc = self.grad_component(nodes, k, alpha)?;
                            hess[((k - 1) * self.dim + alpha, col)] += factor * gc;
                        }
                    }
                }
                nodes[j][beta] = saved;
            }
        }
        Ok(hess)
    }
}

fn write_interior(nodes: &mut [Vec<f64>], z: &DVector<f64>, dim: usize) {
    let m = nodes.len() - 1;
    for k in 1..m {
        for alpha in 0..dim {
            nodes[k][alpha] = z[(k - 1) * dim + alpha];
        }
    }
}

fn read_interior(nodes: &[Vec<f64>], dim: usize) -> DVector<f64> {
    let m = nodes.len() - 1;
    let mut z = DVector::zeros((m - 1) * dim);
    for k in 1..m {
        for alpha in 0..dim {
            z[(k - 1) * dim + alpha] = nodes[k][alpha];
        }
    }
    z
}

/// Finds a path with fixed endpoints whose interior nodes zero the gradient
/// of the discrete action: max-norm of the discrete Euler-Lagrange residual
/// below 1e−10 (stationarity, not necessarily a minimum).
///
/// `segments` is the segment count M (nodes `x_0..x_M`), at least 3.
/// `init` supplies interior node positions (it must have `M + 1` nodes);
/// parameters are always uniform on `[0, tau_span]`. Without `init` the
/// straight chart line seeds the iteration.
pub fn find_extremal(
    lag: &LagrangianSpec,
    x: &[f64],
    y: &[f64],
    tau_span: f64,
    segments: usize,
    init: Option<&Path>,
) -> Result<Path> {
    let dim = lag.metric.dim();
    if x.len() != dim || y.len() != dim {
        return Err(Error::InvalidPath("endpoint dimension does not match chart".into()));
    }
    if segments < 3 {
        return Err(Error::InvalidConfig(format!("need at least 3 segments, got {segments}")));
    }
    if !(tau_span > 0.0) {
        return Err(Error::InvalidConfig(format!("tau_span must be > 0, got {tau_span}")));
    }

    let mut path = match init {
        Some(p) => {
            if p.nodes.len() != segments + 1 {
                return Err(Error::InvalidConfig(format!(
                    "init path has {} nodes, expected {}",
                    p.nodes.len(),
                    segments + 1
                )));
            }
            let mut q = Path::straight(x, y, segments, tau_span);
            for k in 1..segments {
                q.nodes[k] = p.nodes[k].clone();
            }
            q
        }
        None => Path::straight(x, y, segments, tau_span),
    };

    let solver = ElSolver { lag, params: path.params.clone(), dim };
    let mut grad = solver.gradient(&mut path.nodes)?;
    let mut res = grad.amax();
    let mut iters = 0;

    while res >= EL_TARGET && iters < EL_MAX_ITERS {
        iters += 1;
        let hess = solver.hessian(&mut path.nodes)?;
        let z = read_interior(&path.nodes, dim);

        // Newton direction; fall back to the residual-norm descent direction
        // H·g when the factorization fails or no step length helps.
        let mut directions: Vec<DVector<f64>> = Vec::new();
        if let Some(step) = hess.clone().lu().solve(&grad) {
            directions.push(step);
        }
        directions.push(&hess * &grad * (1.0 / hess.amax().max(1.0)));

        let mut improved = false;
        'dirs: for dir in &directions {
            let mut lambda = 1.0;
            for _ in 0..14 {
                let trial = &z - dir * lambda;
                write_interior(&mut path.nodes, &trial, dim);
                let trial_grad = solver.gradient(&mut path.nodes)?;
                let trial_res = trial_grad.amax();
                if trial_res < res {
                    grad = trial_grad;
                    res = trial_res;
                    improved = true;
                    break 'dirs;
                }
                lambda *= 0.5;
            }
        }
        if !improved {
            // No direction reduced the residual; restore the last accepted
            // iterate and stop.
            write_interior(&mut path.nodes, &z, dim);
            break;
        }
    }

    if res < EL_ACCEPT {
        Ok(path)
    } else {
        Err(Error::ConvergenceFailure { residual: res, iterations: iters })
    }
}

/// Number of segments used by [`hamilton_principal_function`]. Midpoint
/// quadrature error at this resolution sits far below the O(|ξ|⁴/ε) scale the
/// principal function is compared at.
pub const PRINCIPAL_SEGMENTS: usize = 200;

/// Action of the extremal from `x` to `y` over parameter span `eps`, the
/// variational route to the two-point function. Serves as the reference the
/// jet-expansion route is checked against.
pub fn hamilton_principal_function(
    lag: &LagrangianSpec,
    x: &[f64],
    y: &[f64],
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("eps must be > 0, got {eps}")));
    }
    let extremal = find_extremal(lag, x, y, eps, PRINCIPAL_SEGMENTS, None)?;
    action(&extremal, lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn massive(metric: &str, m: f64) -> LagrangianSpec {
        LagrangianSpec::new(
            LagrangianKind::InhomogeneousMassive { m },
            ChartMetric::named(metric).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn straight_flat_action_closed_form() {
        // Constant speed v over duration T: S = (m/2)(v² + 1) T.
        let lag = massive("flat-2", 1.0);
        let path = Path::straight(&[0.0, 0.0], &[3.0, 0.0], 24, 1.5); // v = 2
        let s = action(&path, &lag).unwrap();
        assert_abs_diff_eq!(s, 0.5 * (4.0 + 1.0) * 1.5, epsilon = 1e-12);
    }

    #[test]
    fn action_vanishes_with_span_at_bounded_velocity() {
        let lag = massive("flat-2", 1.0);
        for t in [1e-3, 1e-6] {
            // Unit velocity, shrinking both span and displacement.
            let path = Path::straight(&[0.0, 0.0], &[t, 0.0], 8, t);
            let s = action(&path, &lag).unwrap();
            assert!(s <= 1.1 * t, "span {t}: action {s} did not shrink");
        }
    }

    #[test]
    fn solenoid_polygon_integral_gives_flux() {
        // Regular polygon winding once: midpoint quadrature error is
        // f·π²/(3M²), well under 1e−4 at M = 400.
        let f = 2.0;
        let pot = GaugePotential::solenoid(f);
        let m = 400;
        let nodes: Vec<Vec<f64>> = (0..=m)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                vec![1.3 * t.cos(), 1.3 * t.sin()]
            })
            .collect();
        let params = (0..=m).map(|k| k as f64).collect();
        let path = Path::new(nodes, params).unwrap();
        let integral = discrete_line_integral(&pot, &path).unwrap();
        assert_abs_diff_eq!(integral, f, epsilon = 1e-4);
        let e = 0.7;
        assert_abs_diff_eq!(e * integral, e * f, epsilon = 1e-4);
    }

    #[test]
    fn solenoid_puncture_rejected() {
        let pot = GaugePotential::solenoid(1.0);
        let path = Path::new(
            vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            vec![0.0, 1.0],
        )
        .unwrap();
        match discrete_line_integral(&pot, &path) {
            Err(Error::InvalidPath(_)) => {}
            other => panic!("expected invalid-path error, got {other:?}"),
        }
    }

    #[test]
    fn path_invariants_enforced() {
        assert!(Path::new(vec![vec![0.0]], vec![0.0]).is_err());
        assert!(Path::new(vec![vec![0.0], vec![1.0]], vec![0.0, 0.0]).is_err());
        assert!(Path::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.0, 1.0]).is_err());
        assert!(Path::new(vec![vec![0.0], vec![1.0]], vec![1.0, 0.0]).is_err());
        let lag = massive("flat-2", 1.0);
        let path_1d = Path::straight(&[0.0], &[1.0], 4, 1.0);
        assert!(matches!(action(&path_1d, &lag), Err(Error::InvalidPath(_))));
    }

    #[test]
    fn inversion_negates_action_segment_by_segment() {
        let lag = massive("sphere:2", 1.3);
        let nodes: Vec<Vec<f64>> = (0..=20)
            .map(|k| {
                let t = k as f64 / 20.0;
                vec![1.0 + 0.4 * t + 0.05 * (3.0 * t).sin(), 0.2 + 0.9 * t]
            })
            .collect();
        let params: Vec<f64> = (0..=20).map(|k| (k as f64 / 20.0f64).powi(2) + k as f64 * 0.01).collect();
        let path = Path::new(nodes, params).unwrap();
        let inv = path.inverted();
        assert!(inv.params.windows(2).all(|w| w[1] < w[0]));
        let s = action(&path, &lag).unwrap();
        let s_inv = action(&inv, &lag).unwrap();
        assert_abs_diff_eq!(s, -s_inv, epsilon = 1e-12 * s.abs());

        let pot = GaugePotential::from_fn(|x| vec![x[1], -x[0]]);
        let li = discrete_line_integral(&pot, &path).unwrap();
        let pot = GaugePotential::from_fn(|x| vec![x[1], -x[0]]);
        let li_inv = discrete_line_integral(&pot, &inv).unwrap();
        assert_abs_diff_eq!(li, -li_inv, epsilon = 1e-12 * li.abs().max(1.0));

        let back = inv.inverted();
        assert_eq!(back, path);
    }

    #[test]
    fn flat_extremal_is_collinear() {
        let lag = massive("flat-2", 1.0);
        let path = find_extremal(&lag, &[0.0, 0.0], &[3.0, 4.0], 2.0, 16, None).unwrap();
        for node in &path.nodes {
            // Distance from the line through (0,0) direction (3,4)/5.
            let cross = (node[0] * 4.0 - node[1] * 3.0) / 5.0;
            assert!(cross.abs() < 1e-8, "node {node:?} off the straight line");
        }
    }

    #[test]
    fn equatorial_extremal_stays_on_great_circle() {
        let lag = massive("sphere:1", 1.0);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let path = find_extremal(&lag, &[half_pi, 0.0], &[half_pi, 1.0], 1.0, 16, None).unwrap();
        let worst = path
            .nodes
            .iter()
            .map(|n| (n[0] - half_pi).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-4, "max deviation from the equator {worst}");
    }

    #[test]
    fn sphere_extremal_matches_shooting_oracle() {
        let lag = massive("sphere:1", 1.0);
        let x = [0.9, 0.2];
        let y = [1.3, 1.1];
        let m = 96;
        let path = find_extremal(&lag, &x, &y, 1.0, m, None).unwrap();
        let oracle = crate::oracle::geodesic_between(&lag.metric, &x, &y, m).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in path.nodes.iter().zip(&oracle.nodes) {
            for (p, q) in a.iter().zip(b) {
                worst = worst.max((p - q).abs());
            }
        }
        assert!(worst < 1e-4, "node deviation from shooting solution {worst}");
    }

    #[test]
    fn total_derivative_potential_leaves_extremal_unchanged() {
        // φ = ∇Λ with quadratic Λ: the midpoint-rule potential term
        // telescopes exactly, so the discrete stationarity system is
        // identical to the uncharged one.
        let metric = std::sync::Arc::new(ChartMetric::named("flat-2").unwrap());
        let uncharged = LagrangianSpec::new(
            LagrangianKind::InhomogeneousMassive { m: 1.0 },
            metric.clone(),
        )
        .unwrap();
        let charged = LagrangianSpec::new(
            LagrangianKind::Charged {
                m: 1.0,
                e: 0.7,
                potential: GaugePotential::from_fn(|x| {
                    // Λ = 0.3 x² + 0.2 x y + 0.1 y²
                    vec![0.6 * x[0] + 0.2 * x[1], 0.2 * x[0] + 0.2 * x[1]]
                }),
            },
            metric,
        )
        .unwrap();
        let x = [0.0, 0.0];
        let y = [1.0, 2.0];
        let p0 = find_extremal(&uncharged, &x, &y, 1.0, 12, None).unwrap();
        let p1 = find_extremal(&charged, &x, &y, 1.0, 12, None).unwrap();
        for (a, b) in p0.nodes.iter().zip(&p1.nodes) {
            for (u, v) in a.iter().zip(b) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn extremal_action_refines_at_second_order() {
        let lag = massive("sphere:1", 1.0);
        let x = [0.9, 0.2];
        let y = [1.3, 1.1];
        let s = |m: usize| {
            let p = find_extremal(&lag, &x, &y, 1.0, m, None).unwrap();
            action(&p, &lag).unwrap()
        };
        let s_ref = s(192);
        let e12 = (s(12) - s_ref).abs();
        let e24 = (s(24) - s_ref).abs();
        let order = (e12 / e24).log2();
        assert!(order >= 1.8, "refinement order {order} (errors {e12:.3e}, {e24:.3e})");
    }

    #[test]
    fn extremal_action_is_stationary_to_second_order() {
        let lag = massive("sphere:1", 1.0);
        let x = [0.9, 0.2];
        let y = [1.3, 1.1];
        let m = 32;
        let base = find_extremal(&lag, &x, &y, 1.0, m, None).unwrap();
        let s0 = action(&base, &lag).unwrap();
        let ds = |delta: f64| {
            let mut p = base.clone();
            for k in 1..m {
                let bump = (std::f64::consts::PI * k as f64 / m as f64).sin() * delta;
                p.nodes[k][0] += 0.7 * bump;
                p.nodes[k][1] += 0.4 * bump;
            }
            (action(&p, &lag).unwrap() - s0).abs()
        };
        let slope = (ds(1e-2) / ds(1e-3)).log10();
        assert!(slope >= 1.9, "perturbation response slope {slope}");
    }

    #[test]
    fn principal_function_flat_closed_form() {
        let lag = massive("flat-2", 1.0);
        let eps = 0.02;
        let xi = 0.25;
        let s = hamilton_principal_function(&lag, &[0.0, 0.0], &[xi, 0.0], eps).unwrap();
        assert_abs_diff_eq!(s, xi * xi / (2.0 * eps) + eps / 2.0, epsilon = 1e-10);
        let s0 = hamilton_principal_function(&lag, &[0.3, 0.4], &[0.3, 0.4], eps).unwrap();
        assert_abs_diff_eq!(s0, eps / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_solver_parameters() {
        let lag = massive("flat-2", 1.0);
        assert!(matches!(
            find_extremal(&lag, &[0.0, 0.0], &[1.0, 0.0], 1.0, 2, None),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            find_extremal(&lag, &[0.0, 0.0], &[1.0, 0.0], 0.0, 8, None),
            Err(Error::InvalidConfig(_))
        ));
        assert!(LagrangianSpec::new(
            LagrangianKind::InhomogeneousMassive { m: 0.0 },
            ChartMetric::named("flat-2").unwrap()
        )
        .is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let path = Path::straight(&[0.125, -3.5], &[1.0, 2.0], 5, 1.0);
        let text = path.to_csv();
        assert!(text.starts_with("tau,x1,x2\n"));
        let back = Path::from_csv(&text).unwrap();
        assert_eq!(back, path);
        assert!(Path::from_csv("tau,x1\nnot,a,number\n").is_err());
    }
}
