//! Short-time expansion of Hamilton's principal function and the damped
//! Gaussian moments it induces.
//!
//! For a short parameter lapse ε and endpoint separation ξ = x − y, the
//! principal function of the inhomogeneous massive Lagrangian expands as
//!
//! ```text
//! Ŝ(ξ, ε) = (m/2ε)[g_{μν} − Γ_{μνλ} ξ^λ + A_{μνλη} ξ^λ ξ^η] ξ^μ ξ^ν + mε/2
//! ```
//!
//! with every coefficient evaluated at the fixed endpoint x: the metric, the
//! first-kind connection symbols, and the fully symmetrized quartic tensor A
//! from the geometry module. Truncating after the quartic term leaves a
//! Hamilton–Jacobi residual of order |ξ|⁵ at fixed ε; [`hj_residual`]
//! measures it directly and the sign of the cubic term is pinned by that
//! order check (a `+` there drops the order to 3, which the residual tests
//! reject).
//!
//! The moment integrals weight monomials in the separation with
//! `exp[(im − η) ζ_μ ζ^μ]`, a quadratic phase damped by η > 0. The
//! normalization v is fixed by demanding the zeroth moment equal one, after
//! which the first moment vanishes and the second is `g^{λη}/(2(η − im))`,
//! approaching `(i/2m) g^{λη}` as η → 0⁺. [`moments_closed_form`] returns
//! those values exactly; [`moments_quadrature`] recomputes them by dense
//! quadrature as an independent oracle, and [`extrapolate_eta`] removes the
//! damping by polynomial extrapolation in η.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{metric_jet, ChartMetric, GeometryJet};

/// Jet data for the short-time expansion about a fixed endpoint.
#[derive(Clone)]
pub struct HJExpansion {
    pub jet: GeometryJet,
    pub m: f64,
    metric: Arc<ChartMetric>,
}

impl HJExpansion {
    /// Builds the expansion data at chart point `x` for mass `m`.
    pub fn at(metric: Arc<ChartMetric>, x: &[f64], m: f64) -> Result<HJExpansion> {
        if !(m > 0.0) {
            return Err(Error::InvalidConfig(format!("mass must be > 0, got {m}")));
        }
        let jet = metric_jet(&metric, x)?;
        Ok(HJExpansion { jet, m, metric })
    }

    pub fn metric(&self) -> &Arc<ChartMetric> {
        &self.metric
    }

    /// The quadratic form `[g_{μν} − Γ_{μνλ}ξ^λ + A_{μνλη}ξ^λξ^η] ξ^μ ξ^ν`.
    ///
    /// Full contraction with ξ picks out the totally symmetric parts, so the
    /// connection symbols can be used with their native index layout.
    fn bracket(&self, xi: &[f64]) -> f64 {
        let n = self.jet.dim();
        let mut quad = 0.0;
        let mut cubic = 0.0;
        let mut quartic = 0.0;
        for mu in 0..n {
            for nu in 0..n {
                let pair = xi[mu] * xi[nu];
                quad += self.jet.g[(mu, nu)] * pair;
                for la in 0..n {
                    let triple = pair * xi[la];
                    cubic += self.jet.gamma_first[(mu, nu, la)] * triple;
                    for et in 0..n {
                        quartic += self.jet.a_tensor[(mu, nu, la, et)] * triple * xi[et];
                    }
                }
            }
        }
        quad - cubic + quartic
    }
}

/// Short-time principal function `Ŝ(ξ, ε)` truncated at the quartic term.
pub fn hj_action(exp: &HJExpansion, xi: &[f64], eps: f64) -> Result<f64> {
    check_offset(exp, xi, eps)?;
    Ok(exp.m / (2.0 * eps) * exp.bracket(xi) + exp.m * eps / 2.0)
}

/// Absolute Hamilton–Jacobi residual of the truncated principal function:
///
/// ```text
/// | ∂Ŝ/∂ε + (1/2m) g^{μν}(x − ξ) ∂Ŝ/∂ξ^μ ∂Ŝ/∂ξ^ν − m/2 |
/// ```
///
/// The ε-derivative is analytic; the ξ-gradient uses central differences,
/// which are exact on the flat (purely quadratic) form, so the flat residual
/// is zero to rounding. The inverse metric is evaluated at the moving
/// endpoint x − ξ, where the transported length actually lives.
pub fn hj_residual(exp: &HJExpansion, xi: &[f64], eps: f64) -> Result<f64> {
    check_offset(exp, xi, eps)?;
    let n = exp.jet.dim();
    let m = exp.m;
    let deps = -m / (2.0 * eps * eps) * exp.bracket(xi) + m / 2.0;

    // Five-point central differences: the formula's truncation term carries
    // the fifth derivative, which vanishes identically for the quartic Ŝ, so
    // the gradient is exact up to rounding for every metric jet.
    let h = 2e-3;
    let mut grad = vec![0.0; n];
    let mut probe = xi.to_vec();
    for mu in 0..n {
        let mut sample = |offset: f64| -> Result<f64> {
            probe[mu] = xi[mu] + offset;
            let v = hj_action(exp, &probe, eps);
            probe[mu] = xi[mu];
            v
        };
        let p2 = sample(2.0 * h)?;
        let p1 = sample(h)?;
        let m1 = sample(-h)?;
        let m2 = sample(-2.0 * h)?;
        grad[mu] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
    }

    let y: Vec<f64> = exp.jet.point.iter().zip(xi).map(|(p, d)| p - d).collect();
    let g_inv_y = metric_jet(&exp.metric, &y)?.g_inv;
    let mut kinetic = 0.0;
    for mu in 0..n {
        for nu in 0..n {
            kinetic += g_inv_y[(mu, nu)] * grad[mu] * grad[nu];
        }
    }
    Ok((deps + kinetic / (2.0 * m) - m / 2.0).abs())
}

fn check_offset(exp: &HJExpansion, xi: &[f64], eps: f64) -> Result<()> {
    if xi.len() != exp.jet.dim() {
        return Err(Error::InvalidConfig(format!(
            "offset has dimension {}, chart has {}",
            xi.len(),
            exp.jet.dim()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("eps must be > 0, got {eps}")));
    }
    Ok(())
}

/// Damped Gaussian moments of the separation variable.
#[derive(Clone, Debug)]
pub struct MomentSet {
    /// Zeroth moment; exactly one in the closed form by choice of `v`.
    pub q: Complex64,
    /// First moments `Q^λ`.
    pub q_vec: DVector<Complex64>,
    /// Second moments `Q^{λη}`; symmetric.
    pub q_mat: DMatrix<Complex64>,
    /// Damping parameter the set was computed at.
    pub eta: f64,
    /// Normalization constant fixed by the zeroth moment.
    pub v: Complex64,
}

/// Exact moments of the weight `exp[(im − η) ζᵀ G ζ]` over all of ℝⁿ.
///
/// With `c = η − im` and `v = c^{n/2} √det G / π^{n/2}`:
/// the zeroth moment is one, the first vanishes by parity, and the second is
/// `G^{-1}/(2c)`, which tends to `(i/2m) G^{-1}` as η → 0⁺.
pub fn moments_closed_form(g_at_x: &DMatrix<f64>, m: f64, eta: f64) -> Result<MomentSet> {
    let (eigs, _) = checked_eigen(g_at_x, m, eta, false)?;
    let n = g_at_x.nrows();
    let c = Complex64::new(eta, -m);
    let det: f64 = eigs.iter().product();
    let v = c.powf(n as f64 / 2.0) * det.sqrt() / std::f64::consts::PI.powf(n as f64 / 2.0);
    let g_inv = g_at_x
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateMetric { det })?;
    let q_mat = g_inv.map(|x| Complex64::new(x, 0.0) / (2.0 * c));
    Ok(MomentSet {
        q: Complex64::new(1.0, 0.0),
        q_vec: DVector::from_element(n, Complex64::new(0.0, 0.0)),
        q_mat,
        eta,
        v,
    })
}

/// The same moments by dense quadrature: the numeric oracle for the closed
/// form.
///
/// The weight is a Gaussian in the principal-axis frame of `G`, so the
/// n-dimensional integral factorizes exactly into per-axis one-dimensional
/// integrals (an eigendecomposition, not an approximation). Each axis is
/// integrated by composite Simpson over `[-R_k, R_k]` with
/// `R_k = radius √(d_min / d_k)`, which equalizes the damped tail across
/// axes; the tail must satisfy `exp(-η d_min radius²) < 1e-10` or the call
/// fails with the radius actually required.
pub fn moments_quadrature(
    g_at_x: &DMatrix<f64>,
    m: f64,
    eta: f64,
    radius: f64,
    points: usize,
) -> Result<MomentSet> {
    let n = g_at_x.nrows();
    if n > 2 {
        return Err(Error::InvalidConfig(format!("quadrature supports 1 or 2 axes, got {n}")));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidConfig(format!("quadrature needs eta > 0, got {eta}")));
    }
    if points < 3 {
        return Err(Error::InvalidConfig(format!("quadrature needs at least 3 points per axis, got {points}")));
    }
    let (eigs, basis) = checked_eigen(g_at_x, m, eta, true)?;
    let d_min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let required = (10.0 * std::f64::consts::LN_10 / (eta * d_min)).sqrt();
    if !(radius >= required) {
        return Err(Error::InsufficientDomain { radius, required });
    }

    // One Simpson pass per axis accumulates the zeroth, first and second
    // one-dimensional moments of exp[(im - η) d s²] simultaneously.
    let points = points | 1;
    let mut i0 = Vec::with_capacity(n);
    let mut i1 = Vec::with_capacity(n);
    let mut i2 = Vec::with_capacity(n);
    for a in 0..n {
        let r = radius * (d_min / eigs[a]).sqrt();
        let h = 2.0 * r / (points - 1) as f64;
        let coeff = Complex64::new(-eta, m) * eigs[a];
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        for j in 0..points {
            let s = -r + j as f64 * h;
            let w = if j == 0 || j == points - 1 {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let f = (coeff * s * s).exp() * w;
            acc[0] += f;
            acc[1] += f * s;
            acc[2] += f * (s * s);
        }
        i0.push(acc[0] * (h / 3.0));
        i1.push(acc[1] * (h / 3.0));
        i2.push(acc[2] * (h / 3.0));
    }

    let c = Complex64::new(eta, -m);
    let det: f64 = eigs.iter().product();
    let v = c.powf(n as f64 / 2.0) * det.sqrt() / std::f64::consts::PI.powf(n as f64 / 2.0);

    let q = v * i0.iter().product::<Complex64>();
    let mut q_vec = DVector::from_element(n, Complex64::new(0.0, 0.0));
    let mut q_mat = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let others = |skip: usize| -> Complex64 {
        (0..n).filter(|&k| k != skip).map(|k| i0[k]).product()
    };
    for la in 0..n {
        for a in 0..n {
            q_vec[la] += v * Complex64::new(basis[(la, a)], 0.0) * i1[a] * others(a);
        }
        for et in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let u = Complex64::new(basis[(la, a)] * basis[(et, b)], 0.0);
                    q_mat[(la, et)] += if a == b {
                        v * u * i2[a] * others(a)
                    } else {
                        v * u * i1[a] * i1[b]
                    };
                }
            }
        }
    }
    Ok(MomentSet { q, q_vec, q_mat, eta, v })
}

/// Polynomial (Neville) extrapolation of damped values to η = 0.
///
/// Pass the same moment computed at two or more distinct η values; the
/// result is the value of the interpolating polynomial at zero. With the
/// schedule {1e-1, 1e-2, 1e-3} the extrapolation error for the second
/// moments is far below the damping bias of any single sample.
pub fn extrapolate_eta(samples: &[(f64, Complex64)]) -> Result<Complex64> {
    if samples.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "extrapolation needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    for (i, (ei, _)) in samples.iter().enumerate() {
        for (ej, _) in samples.iter().skip(i + 1) {
            if (ei - ej).abs() < 1e-15 {
                return Err(Error::InvalidConfig(format!("duplicate eta value {ei} in extrapolation samples")));
            }
        }
    }
    let mut vals: Vec<Complex64> = samples.iter().map(|&(_, v)| v).collect();
    let etas: Vec<f64> = samples.iter().map(|&(e, _)| e).collect();
    let k = vals.len();
    for level in 1..k {
        for i in 0..k - level {
            let num = vals[i + 1] * (-etas[i]) - vals[i] * (-etas[i + level]);
            vals[i] = num / (etas[i + level] - etas[i]);
        }
    }
    Ok(vals[0])
}

/// Symmetric eigendecomposition with the positive-definiteness check shared
/// by both moment routines. Returns eigenvalues and, when requested, the
/// orthonormal basis.
fn checked_eigen(
    g: &DMatrix<f64>,
    m: f64,
    eta: f64,
    want_basis: bool,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !(m > 0.0) {
        return Err(Error::InvalidConfig(format!("mass must be > 0, got {m}")));
    }
    if eta < 0.0 {
        return Err(Error::InvalidConfig(format!("damping must be >= 0, got {eta}")));
    }
    if g.nrows() != g.ncols() || g.nrows() == 0 {
        return Err(Error::InvalidConfig(format!("metric block must be square and nonempty, got {}x{}", g.nrows(), g.ncols())));
    }
    let sym = (g + g.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let eigs: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    if eigs.iter().any(|&e| e <= 0.0) {
        return Err(Error::UnsupportedSignature(format!(
            "moment weight needs a positive-definite metric block, eigenvalues {eigs:?}"
        )));
    }
    let basis = if want_basis { eig.eigenvectors } else { DMatrix::identity(g.nrows(), g.nrows()) };
    Ok((eigs, basis))
}
