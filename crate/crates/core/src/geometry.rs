//! Coordinate charts with a metric, and pointwise metric jets.
//!
//! A [`ChartMetric`] is a single coordinate chart of dimension `N` carrying a
//! symmetric metric-component function. [`metric_jet`] evaluates everything
//! downstream code needs at one point: the inverse and determinant, both kinds
//! of connection coefficients, the trace vector `Θ_μ`, the quartic expansion
//! tensor `A_{μνλη}` used by the short-time action, and the curvature scalar.

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::tensor::{Tensor3, Tensor4};

/// Default step for first-order central differences of metric components.
pub const H_METRIC: f64 = 1e-5;
/// Step for the nested (second-order) central differences.
pub const H_METRIC_SECOND: f64 = 1e-4;
/// Determinants below this are treated as singular.
pub const DET_SINGULAR: f64 = 1e-14;

type ComponentsFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type Partial1Fn = dyn Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync;
type Partial2Fn = dyn Fn(&[f64], usize, usize) -> DMatrix<f64> + Send + Sync;

/// Expected eigenvalue sign pattern of the metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signature {
    PositiveDefinite,
    /// Exactly one positive eigenvalue, the rest negative (mostly-minus).
    Lorentzian,
}

/// How metric derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    AnalyticPartials,
    CentralDifference { h: f64 },
}

enum DerivStrategy {
    Analytic { d1: Box<Partial1Fn>, d2: Box<Partial2Fn> },
    Central { h: f64 },
}

/// A coordinate chart of dimension `N` with symmetric metric components and a
/// derivative strategy. All geometric quantities in the crate trace back to an
/// instance of this type.
pub struct ChartMetric {
    dim: usize,
    components: Box<ComponentsFn>,
    strategy: DerivStrategy,
    signature: Signature,
}

impl ChartMetric {
    /// Chart from a component function alone; derivatives fall back to
    /// central differences with step [`H_METRIC`].
    pub fn from_fn<F>(dim: usize, signature: Signature, components: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        ChartMetric {
            dim,
            components: Box::new(components),
            strategy: DerivStrategy::Central { h: H_METRIC },
            signature,
        }
    }

    /// Attaches analytic first and second partial-derivative functions.
    /// `d1(x, k) = ∂_k g(x)`, `d2(x, k, l) = ∂_k ∂_l g(x)`.
    pub fn with_analytic_partials<F1, F2>(mut self, d1: F1, d2: F2) -> Self
    where
        F1: Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync + 'static,
        F2: Fn(&[f64], usize, usize) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.strategy = DerivStrategy::Analytic { d1: Box::new(d1), d2: Box::new(d2) };
        self
    }

    /// Forces central differences with the given step, discarding any
    /// analytic partials. Used to compare the two derivative routes.
    pub fn with_central_differences(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidConfig(format!("central-difference step must be > 0, got {h}")));
        }
        self.strategy = DerivStrategy::Central { h };
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        match self.strategy {
            DerivStrategy::Analytic { .. } => DerivativeMode::AnalyticPartials,
            DerivStrategy::Central { h } => DerivativeMode::CentralDifference { h },
        }
    }

    /// Metric components at `x`.
    pub fn components(&self, x: &[f64]) -> DMatrix<f64> {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        (self.components)(x)
    }

    /// `∂_k g` at `x`.
    pub fn first_partial(&self, x: &[f64], k: usize) -> DMatrix<f64> {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        match &self.strategy {
            DerivStrategy::Analytic { d1, .. } => d1(x, k),
            DerivStrategy::Central { h } => {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += *h;
                xm[k] -= *h;
                ((self.components)(&xp) - (self.components)(&xm)) / (2.0 * h)
            }
        }
    }

    /// `∂_k ∂_l g` at `x`. The finite-difference route nests a central
    /// difference of step [`H_METRIC_SECOND`] over [`Self::first_partial`].
    pub fn second_partial(&self, x: &[f64], k: usize, l: usize) -> DMatrix<f64> {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        match &self.strategy {
            DerivStrategy::Analytic { d2, .. } => d2(x, k, l),
            DerivStrategy::Central { .. } => {
                let h2 = H_METRIC_SECOND;
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[l] += h2;
                xm[l] -= h2;
                (self.first_partial(&xp, k) - self.first_partial(&xm, k)) / (2.0 * h2)
            }
        }
    }

    /// Built-in metrics addressable by string id:
    /// `"flat-<N>"`, `"sphere:<a>"`, `"hyperbolic2"`, `"diag:<c1,...,cN>"`,
    /// `"minkowski-<N>"`, `"sine-ring:<amp>"`.
    pub fn named(id: &str) -> Result<ChartMetric> {
        let bad = |msg: String| Error::InvalidConfig(msg);
        if let Some(n) = id.strip_prefix("flat-") {
            let n: usize = n.parse().map_err(|_| bad(format!("bad metric id {id:?}")))?;
            if n == 0 {
                return Err(bad("flat metric needs dimension >= 1".into()));
            }
            return Ok(constant_metric(DMatrix::identity(n, n), Signature::PositiveDefinite));
        }
        if let Some(n) = id.strip_prefix("minkowski-") {
            let n: usize = n.parse().map_err(|_| bad(format!("bad metric id {id:?}")))?;
            if n < 2 {
                return Err(bad("minkowski metric needs dimension >= 2".into()));
            }
            let mut g = DMatrix::identity(n, n) * -1.0;
            g[(0, 0)] = 1.0;
            return Ok(constant_metric(g, Signature::Lorentzian));
        }
        if let Some(list) = id.strip_prefix("diag:") {
            let cs: std::result::Result<Vec<f64>, _> = list.split(',').map(|s| s.trim().parse()).collect();
            let cs = cs.map_err(|_| bad(format!("bad metric id {id:?}")))?;
            if cs.is_empty() {
                return Err(bad("diag metric needs at least one entry".into()));
            }
            let pos = cs.iter().filter(|&&c| c > 0.0).count();
            let neg = cs.iter().filter(|&&c| c < 0.0).count();
            let signature = if pos == cs.len() {
                Signature::PositiveDefinite
            } else if pos == 1 && neg == cs.len() - 1 {
                Signature::Lorentzian
            } else {
                return Err(bad(format!("diag entries {cs:?} fit neither supported signature")));
            };
            return Ok(constant_metric(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(cs)), signature));
        }
        if let Some(a) = id.strip_prefix("sphere:") {
            let a: f64 = a.parse().map_err(|_| bad(format!("bad metric id {id:?}")))?;
            if !(a > 0.0) {
                return Err(bad("sphere radius must be > 0".into()));
            }
            let a2 = a * a;
            return Ok(ChartMetric::from_fn(2, Signature::PositiveDefinite, move |x| {
                DMatrix::from_diagonal(&nalgebra::dvector![a2, a2 * x[0].sin().powi(2)])
            })
            .with_analytic_partials(
                move |x, k| {
                    let mut d = DMatrix::zeros(2, 2);
                    if k == 0 {
                        d[(1, 1)] = a2 * (2.0 * x[0]).sin();
                    }
                    d
                },
                move |x, k, l| {
                    let mut d = DMatrix::zeros(2, 2);
                    if k == 0 && l == 0 {
                        d[(1, 1)] = 2.0 * a2 * (2.0 * x[0]).cos();
                    }
                    d
                },
            ));
        }
        if id == "hyperbolic2" {
            return Ok(ChartMetric::from_fn(2, Signature::PositiveDefinite, |x| {
                let c = 1.0 / (x[1] * x[1]);
                DMatrix::from_diagonal(&nalgebra::dvector![c, c])
            })
            .with_analytic_partials(
                |x, k| {
                    let mut d = DMatrix::zeros(2, 2);
                    if k == 1 {
                        let c = -2.0 / x[1].powi(3);
                        d[(0, 0)] = c;
                        d[(1, 1)] = c;
                    }
                    d
                },
                |x, k, l| {
                    let mut d = DMatrix::zeros(2, 2);
                    if k == 1 && l == 1 {
                        let c = 6.0 / x[1].powi(4);
                        d[(0, 0)] = c;
                        d[(1, 1)] = c;
                    }
                    d
                },
            ));
        }
        if let Some(amp) = id.strip_prefix("sine-ring:") {
            let amp: f64 = amp.parse().map_err(|_| bad(format!("bad metric id {id:?}")))?;
            if amp.abs() >= 1.0 {
                return Err(bad("sine-ring amplitude must satisfy |amp| < 1".into()));
            }
            return Ok(ChartMetric::from_fn(1, Signature::PositiveDefinite, move |x| {
                let w = 1.0 + amp * x[0].sin();
                DMatrix::from_element(1, 1, w * w)
            })
            .with_analytic_partials(
                move |x, _| {
                    let w = 1.0 + amp * x[0].sin();
                    DMatrix::from_element(1, 1, 2.0 * w * amp * x[0].cos())
                },
                move |x, _, _| {
                    let (s, c) = x[0].sin_cos();
                    let w = 1.0 + amp * s;
                    DMatrix::from_element(1, 1, 2.0 * amp * amp * c * c - 2.0 * w * amp * s)
                },
            ));
        }
        Err(bad(format!("unknown metric id {id:?}")))
    }

    /// Chart from a JSON description, see [`MetricSpec`].
    pub fn from_json(text: &str) -> Result<ChartMetric> {
        let spec: MetricSpec = serde_json::from_str(text)?;
        ChartMetric::from_spec(&spec)
    }

    /// Chart from a parsed user description.
    pub fn from_spec(spec: &MetricSpec) -> Result<ChartMetric> {
        spec.validate()?;
        let dim = spec.dim;
        let e0 = spec.entries.clone();
        let e1 = spec.entries.clone();
        let e2 = spec.entries.clone();
        Ok(ChartMetric::from_fn(dim, Signature::PositiveDefinite, move |x| {
            DMatrix::from_fn(dim, dim, |i, j| if i == j { poly_eval(&e0[i], x) } else { 0.0 })
        })
        .with_analytic_partials(
            move |x, k| {
                DMatrix::from_fn(dim, dim, |i, j| if i == j { poly_eval_d(&e1[i], x, k) } else { 0.0 })
            },
            move |x, k, l| {
                DMatrix::from_fn(dim, dim, |i, j| if i == j { poly_eval_d2(&e2[i], x, k, l) } else { 0.0 })
            },
        ))
    }
}

fn constant_metric(g: DMatrix<f64>, signature: Signature) -> ChartMetric {
    let n = g.nrows();
    let g1 = g.clone();
    ChartMetric::from_fn(n, signature, move |_| g1.clone()).with_analytic_partials(
        move |_, _| DMatrix::zeros(n, n),
        move |_, _, _| DMatrix::zeros(n, n),
    )
}

/// JSON description of a user metric: a diagonal metric whose entries are
/// multivariate polynomials, `g_ii(x) = Σ_t coef_t · Π_j x_j^powers\[t\]\[j\]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub dim: usize,
    pub kind: String,
    /// One term list per diagonal component.
    pub entries: Vec<Vec<MonomialTerm>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialTerm {
    pub coef: f64,
    pub powers: Vec<u32>,
}

impl MetricSpec {
    fn validate(&self) -> Result<()> {
        if self.kind != "diagonal-polynomial" {
            return Err(Error::InvalidConfig(format!(
                "unsupported metric kind {:?} (expected \"diagonal-polynomial\")",
                self.kind
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("metric dim must be >= 1".into()));
        }
        if self.entries.len() != self.dim {
            return Err(Error::InvalidConfig(format!(
                "entries has {} component(s), expected dim = {}",
                self.entries.len(),
                self.dim
            )));
        }
        for (i, terms) in self.entries.iter().enumerate() {
            for t in terms {
                if t.powers.len() != self.dim {
                    return Err(Error::InvalidConfig(format!(
                        "entries[{i}] term has {} power(s), expected dim = {}",
                        t.powers.len(),
                        self.dim
                    )));
                }
            }
        }
        Ok(())
    }
}

fn poly_eval(terms: &[MonomialTerm], x: &[f64]) -> f64 {
    terms
        .iter()
        .map(|t| t.coef * t.powers.iter().zip(x).map(|(&p, &v)| v.powi(p as i32)).product::<f64>())
        .sum()
}

fn poly_eval_d(terms: &[MonomialTerm], x: &[f64], k: usize) -> f64 {
    terms
        .iter()
        .map(|t| {
            let pk = t.powers[k];
            if pk == 0 {
                return 0.0;
            }
            let mono: f64 = t
                .powers
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let p = if j == k { p - 1 } else { p };
                    x[j].powi(p as i32)
                })
                .product();
            t.coef * pk as f64 * mono
        })
        .sum()
}

fn poly_eval_d2(terms: &[MonomialTerm], x: &[f64], k: usize, l: usize) -> f64 {
    terms
        .iter()
        .map(|t| {
            let mut pow = t.powers.clone();
            let mut factor = 1.0;
            for idx in [k, l] {
                if pow[idx] == 0 {
                    return 0.0;
                }
                factor *= pow[idx] as f64;
                pow[idx] -= 1;
            }
            let mono: f64 = pow.iter().zip(x).map(|(&p, &v)| v.powi(p as i32)).product();
            t.coef * factor * mono
        })
        .sum()
}

/// All pointwise metric data used by the rest of the crate.
///
/// Index conventions: `gamma_first[(μ, ν, α)] = Γ_{μνα}`, symmetric in the
/// first two slots, with the derivative index last;
/// `gamma_second[(λ, μ, ν)] = Γ^λ_{μν}`; `theta[μ] = g^{νλ} Γ_{μνλ}`;
/// `a_tensor` is fully symmetric (see [`Tensor4::symmetrize`]).
#[derive(Debug, Clone)]
pub struct GeometryJet {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub det_g: f64,
    pub gamma_first: Tensor3,
    pub gamma_second: Tensor3,
    pub theta: Vec<f64>,
    pub a_tensor: Tensor4,
    pub ricci_scalar: f64,
}

impl GeometryJet {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// `√|det g|` at the jet's point.
    pub fn measure(&self) -> f64 {
        self.det_g.abs().sqrt()
    }
}

fn check_symmetry(g: &DMatrix<f64>) -> Result<()> {
    let scale = g.amax().max(1.0);
    for i in 0..g.nrows() {
        for j in (i + 1)..g.ncols() {
            if (g[(i, j)] - g[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidMetric(format!(
                    "components not symmetric: g[{i}][{j}] = {} vs g[{j}][{i}] = {}",
                    g[(i, j)],
                    g[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

fn check_signature(g: &DMatrix<f64>, signature: Signature) -> Result<()> {
    let sym = (g + g.transpose()) * 0.5;
    let eigs = nalgebra::SymmetricEigen::new(sym).eigenvalues;
    let pos = eigs.iter().filter(|&&e| e > 0.0).count();
    let neg = eigs.iter().filter(|&&e| e < 0.0).count();
    match signature {
        Signature::PositiveDefinite if pos == eigs.len() => Ok(()),
        Signature::Lorentzian if pos == 1 && neg == eigs.len() - 1 => Ok(()),
        Signature::PositiveDefinite => Err(Error::InvalidMetric(format!(
            "declared positive-definite but eigenvalue signs are ({pos}+, {neg}-)"
        ))),
        Signature::Lorentzian => Err(Error::InvalidMetric(format!(
            "declared lorentzian but eigenvalue signs are ({pos}+, {neg}-)"
        ))),
    }
}

/// Evaluates the full metric jet at `x`.
pub fn metric_jet(metric: &ChartMetric, x: &[f64]) -> Result<GeometryJet> {
    let n = metric.dim();
    let g = metric.components(x);
    check_symmetry(&g)?;
    let det_g = g.clone().lu().determinant();
    if det_g.abs() < DET_SINGULAR {
        return Err(Error::DegenerateMetric { det: det_g });
    }
    check_signature(&g, metric.signature())?;
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateMetric { det: det_g })?;

    let dg: Vec<DMatrix<f64>> = (0..n).map(|k| metric.first_partial(x, k)).collect();

    // Γ_{μνα} = (g_{αμ,ν} + g_{αν,μ} − g_{μν,α}) / 2
    let mut gamma_first = Tensor3::zeros(n);
    for mu in 0..n {
        for nu in 0..n {
            for al in 0..n {
                gamma_first[(mu, nu, al)] =
                    0.5 * (dg[nu][(al, mu)] + dg[mu][(al, nu)] - dg[al][(mu, nu)]);
            }
        }
    }

    // Γ^λ_{μν} = g^{λα} Γ_{μνα}
    let mut gamma_second = Tensor3::zeros(n);
    for la in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                let mut s = 0.0;
                for al in 0..n {
                    s += g_inv[(la, al)] * gamma_first[(mu, nu, al)];
                }
                gamma_second[(la, mu, nu)] = s;
            }
        }
    }

    // Θ_μ = g^{νλ} Γ_{μνλ}
    let mut theta = vec![0.0; n];
    for mu in 0..n {
        let mut s = 0.0;
        for nu in 0..n {
            for la in 0..n {
                s += g_inv[(nu, la)] * gamma_first[(mu, nu, la)];
            }
        }
        theta[mu] = s;
    }

    // Second partials, symmetric in the direction pair.
    let mut d2g: Vec<Vec<DMatrix<f64>>> = vec![vec![DMatrix::zeros(n, n); n]; n];
    for k in 0..n {
        for l in k..n {
            let m = metric.second_partial(x, k, l);
            d2g[k][l] = m.clone();
            if l != k {
                d2g[l][k] = m;
            }
        }
    }

    // A_{μνλη}: quartic coefficient of the short-time action expansion,
    // (1/12)(2 g_{μν,λη} − g^{αβ} Γ_{μνα} Γ_{ληβ}), fully symmetrized. Only
    // the symmetric part enters the contraction with ξ^μ ξ^ν ξ^λ ξ^η.
    let mut a_tensor = Tensor4::zeros(n);
    for mu in 0..n {
        for nu in 0..n {
            for la in 0..n {
                for et in 0..n {
                    let mut gg = 0.0;
                    for al in 0..n {
                        for be in 0..n {
                            gg += g_inv[(al, be)]
                                * gamma_first[(mu, nu, al)]
                                * gamma_first[(la, et, be)];
                        }
                    }
                    a_tensor[(mu, nu, la, et)] = (2.0 * d2g[la][et][(mu, nu)] - gg) / 12.0;
                }
            }
        }
    }
    a_tensor.symmetrize();

    // Curvature scalar. The brace below is evaluated literally, then negated:
    // with this Γ convention the brace equals minus the Ricci scalar of the
    // standard Riemann-contraction convention, and the crate fixes the sign so
    // a 2-sphere comes out positive.
    let mut brace = 0.0;
    for al in 0..n {
        for ga in 0..n {
            for nu in 0..n {
                for la in 0..n {
                    let w = g_inv[(al, ga)] * g_inv[(nu, la)];
                    if w == 0.0 {
                        continue;
                    }
                    let second = d2g[al][ga][(nu, la)] - d2g[ga][la][(al, nu)];
                    let mut gg = 0.0;
                    for mu in 0..n {
                        for be in 0..n {
                            gg += g_inv[(mu, be)]
                                * (gamma_first[(al, ga, be)] * gamma_first[(nu, la, mu)]
                                    - gamma_first[(al, nu, mu)] * gamma_first[(ga, la, be)]);
                        }
                    }
                    brace += w * (second + gg);
                }
            }
        }
    }
    let ricci_scalar = -brace;

    Ok(GeometryJet {
        point: x.to_vec(),
        g,
        g_inv,
        det_g,
        gamma_first,
        gamma_second,
        theta,
        a_tensor,
        ricci_scalar,
    })
}

/// `√|det g(x)|`, the density of the invariant volume element.
pub fn invariant_measure(metric: &ChartMetric, x: &[f64]) -> Result<f64> {
    let g = metric.components(x);
    let det = g.lu().determinant();
    if det.abs() < DET_SINGULAR {
        return Err(Error::DegenerateMetric { det });
    }
    Ok(det.abs().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_jet_vanishes() {
        let m = ChartMetric::named("flat-2").unwrap();
        let jet = metric_jet(&m, &[0.3, -1.2]).unwrap();
        for i in 0..2 {
            assert_eq!(jet.theta[i], 0.0);
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(jet.gamma_first[(i, j, k)], 0.0);
                    assert_eq!(jet.gamma_second[(i, j, k)], 0.0);
                    for l in 0..2 {
                        assert_eq!(jet.a_tensor[(i, j, k, l)], 0.0);
                    }
                }
            }
        }
        assert_eq!(jet.ricci_scalar, 0.0);
        assert_eq!(jet.det_g, 1.0);
    }

    #[test]
    fn diag_constant_arithmetic() {
        let m = ChartMetric::named("diag:1,4").unwrap();
        let jet = metric_jet(&m, &[0.0, 0.0]).unwrap();
        assert_eq!(jet.det_g, 4.0);
        assert_eq!(jet.measure(), 2.0);
        assert_eq!(jet.g_inv[(0, 0)], 1.0);
        assert_eq!(jet.g_inv[(1, 1)], 0.25);
        assert_eq!(invariant_measure(&m, &[7.0, -3.0]).unwrap(), 2.0);
    }

    #[test]
    fn sphere_curvature_scalar() {
        // Radius-2 sphere: R = 2/a² = 0.5, positive by convention.
        let m = ChartMetric::named("sphere:2").unwrap();
        let jet = metric_jet(&m, &[std::f64::consts::FRAC_PI_3, 0.7]).unwrap();
        assert_abs_diff_eq!(jet.ricci_scalar, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(jet.ricci_scalar.abs(), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn sphere_theta_is_log_measure_gradient() {
        // Θ_θ = ∂_θ ln √g = cot θ on the sphere chart.
        let m = ChartMetric::named("sphere:2").unwrap();
        let theta = std::f64::consts::FRAC_PI_3;
        let jet = metric_jet(&m, &[theta, -0.4]).unwrap();
        assert_abs_diff_eq!(jet.theta[0], 1.0 / 3.0f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(jet.theta[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hyperbolic_curvature_scalar() {
        let m = ChartMetric::named("hyperbolic2").unwrap();
        let jet = metric_jet(&m, &[0.3, 1.7]).unwrap();
        assert_abs_diff_eq!(jet.ricci_scalar, -2.0, epsilon = 1e-6);
    }

    #[test]
    fn sphere_measure() {
        let m = ChartMetric::named("sphere:2").unwrap();
        let v = invariant_measure(&m, &[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_measure_is_one() {
        let m = ChartMetric::named("flat-3").unwrap();
        assert_eq!(invariant_measure(&m, &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_pole_rejected() {
        let m = ChartMetric::named("sphere:2").unwrap();
        match metric_jet(&m, &[0.0, 0.0]) {
            Err(Error::DegenerateMetric { .. }) => {}
            other => panic!("expected degenerate-metric error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_components_rejected() {
        let m = ChartMetric::from_fn(2, Signature::PositiveDefinite, |_| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, -0.1, 1.0])
        });
        match metric_jet(&m, &[0.0, 0.0]) {
            Err(Error::InvalidMetric(_)) => {}
            other => panic!("expected invalid-metric error, got {other:?}"),
        }
    }

    #[test]
    fn lorentzian_signature_accepted_and_enforced() {
        let m = ChartMetric::named("minkowski-2").unwrap();
        let jet = metric_jet(&m, &[0.0, 0.0]).unwrap();
        assert_eq!(jet.det_g, -1.0);
        assert_eq!(jet.measure(), 1.0);
        assert_eq!(jet.ricci_scalar, 0.0);

        // Declared lorentzian but positive-definite components.
        let wrong = ChartMetric::from_fn(2, Signature::Lorentzian, |_| DMatrix::identity(2, 2));
        assert!(matches!(metric_jet(&wrong, &[0.0, 0.0]), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn gamma_central_difference_converges_to_analytic() {
        // Halving the step must shrink the finite-difference error by >= 3.5x.
        let x = [1.1, 0.4];
        let analytic = ChartMetric::named("sphere:2").unwrap();
        let jet_a = metric_jet(&analytic, &x).unwrap();
        let mut gaps = Vec::new();
        for h in [2e-3, 1e-3] {
            let fd = ChartMetric::named("sphere:2")
                .unwrap()
                .with_central_differences(h)
                .unwrap();
            let jet_f = metric_jet(&fd, &x).unwrap();
            let mut gap: f64 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        gap = gap.max((jet_a.gamma_first[(i, j, k)] - jet_f.gamma_first[(i, j, k)]).abs());
                    }
                }
            }
            gaps.push(gap);
        }
        assert!(gaps[0] > 0.0, "finite-difference gap unexpectedly exact");
        assert!(
            gaps[0] / gaps[1] >= 3.5,
            "expected O(h^2) convergence, got gaps {gaps:?}"
        );
    }

    #[test]
    fn curvature_invariant_under_affine_chart_change() {
        // Pull the sphere metric back through a constant linear map; R at
        // corresponding points must match.
        let a = [[1.3, 0.4], [-0.2, 0.9]];
        let m = ChartMetric::named("sphere:2").unwrap();
        let pulled = ChartMetric::from_fn(2, Signature::PositiveDefinite, move |u| {
            let x = [
                a[0][0] * u[0] + a[0][1] * u[1],
                a[1][0] * u[0] + a[1][1] * u[1],
            ];
            let base = ChartMetric::named("sphere:2").unwrap();
            let g = base.components(&x);
            let aa = DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]]);
            aa.transpose() * g * aa
        });
        let x = [0.9, 0.3];
        // Solve u for x under the linear map.
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let u = [
            (a[1][1] * x[0] - a[0][1] * x[1]) / det,
            (-a[1][0] * x[0] + a[0][0] * x[1]) / det,
        ];
        let r_direct = metric_jet(&m, &x).unwrap().ricci_scalar;
        let r_pulled = metric_jet(&pulled, &u).unwrap().ricci_scalar;
        assert_abs_diff_eq!(r_direct, r_pulled, epsilon = 1e-6);
    }

    #[test]
    fn json_metric_roundtrip() {
        let text = r#"{
            "dim": 2,
            "kind": "diagonal-polynomial",
            "entries": [
                [{"coef": 1.0, "powers": [0, 0]}],
                [{"coef": 1.0, "powers": [0, 0]}, {"coef": 0.5, "powers": [2, 0]}]
            ]
        }"#;
        let m = ChartMetric::from_json(text).unwrap();
        let g = m.components(&[2.0, -1.0]);
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(1, 1)], 3.0);
        // Analytic partials follow the polynomial: ∂_0 g_11 = 1.0 * x0.
        let d = m.first_partial(&[2.0, -1.0], 0);
        assert_eq!(d[(1, 1)], 2.0);
        let d2 = m.second_partial(&[2.0, -1.0], 0, 0);
        assert_eq!(d2[(1, 1)], 1.0);
    }

    #[test]
    fn json_metric_rejects_unknown_fields_and_bad_shape() {
        assert!(ChartMetric::from_json(r#"{"dim": 1, "kind": "diagonal-polynomial", "entries": [[]], "extra": 1}"#).is_err());
        assert!(ChartMetric::from_json(r#"{"dim": 2, "kind": "diagonal-polynomial", "entries": [[]]}"#).is_err());
        assert!(ChartMetric::from_json(r#"{"dim": 1, "kind": "other", "entries": [[]]}"#).is_err());
        assert!(ChartMetric::from_json(
            r#"{"dim": 2, "kind": "diagonal-polynomial", "entries": [[{"coef": 1.0, "powers": [0]}], []]}"#
        )
        .is_err());
    }

    #[test]
    fn named_metric_errors() {
        assert!(ChartMetric::named("flat-0").is_err());
        assert!(ChartMetric::named("nope").is_err());
        assert!(ChartMetric::named("sphere:-1").is_err());
        assert!(ChartMetric::named("diag:1,-1,1").is_err());
        assert!(ChartMetric::named("sine-ring:1.5").is_err());
    }
}
