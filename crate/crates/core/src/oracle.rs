//! Independent reference implementations used only to cross-check results.
//!
//! Everything here deliberately avoids the production code paths: curvature
//! comes from the textbook Riemann-tensor contraction instead of the direct
//! scalar formula in [`crate::geometry`], and geodesics come from shooting on
//! the geodesic equation instead of discrete action minimization. Production
//! code must never call into this module; tests compare against it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ChartMetric, H_METRIC_SECOND};
use crate::tensor::Tensor3;

/// Connection coefficients of the second kind at `x`, from the metric's own
/// first partials.
fn christoffel_second(metric: &ChartMetric, x: &[f64]) -> Result<Tensor3> {
    let n = metric.dim();
    let g = metric.components(x);
    let det = g.clone().lu().determinant();
    let g_inv = g
        .try_inverse()
        .ok_or(Error::DegenerateMetric { det })?;
    let dg: Vec<DMatrix<f64>> = (0..n).map(|k| metric.first_partial(x, k)).collect();
    let mut gamma = Tensor3::zeros(n);
    for la in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                let mut s = 0.0;
                for al in 0..n {
                    s += 0.5
                        * g_inv[(la, al)]
                        * (dg[nu][(al, mu)] + dg[mu][(al, nu)] - dg[al][(mu, nu)]);
                }
                gamma[(la, mu, nu)] = s;
            }
        }
    }
    Ok(gamma)
}

/// Curvature scalar by contracting the Riemann tensor,
/// `R^μ_{νρλ} = ∂_ρ Γ^μ_{νλ} − ∂_λ Γ^μ_{νρ} + Γ^μ_{ρσ} Γ^σ_{νλ} − Γ^μ_{λσ} Γ^σ_{νρ}`,
/// then `R = g^{νλ} R^μ_{νμλ}`. Connection derivatives use a central
/// difference of step [`H_METRIC_SECOND`] over [`christoffel_second`], so the
/// two curvature routes share their innermost difference steps.
pub fn ricci_scalar_contraction(metric: &ChartMetric, x: &[f64]) -> Result<f64> {
    let n = metric.dim();
    let gamma = christoffel_second(metric, x)?;

    // dgamma[rho] = ∂_rho Γ at x.
    let mut dgamma = Vec::with_capacity(n);
    for rho in 0..n {
        let h = H_METRIC_SECOND;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[rho] += h;
        xm[rho] -= h;
        let gp = christoffel_second(metric, &xp)?;
        let gm = christoffel_second(metric, &xm)?;
        let mut d = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    d[(a, b, c)] = (gp[(a, b, c)] - gm[(a, b, c)]) / (2.0 * h);
                }
            }
        }
        dgamma.push(d);
    }

    let g = metric.components(x);
    let det = g.clone().lu().determinant();
    let g_inv = g
        .try_inverse()
        .ok_or(Error::DegenerateMetric { det })?;

    // Ricci tensor R_{νλ} = R^μ_{νμλ}, then scalar.
    let mut r_scalar = 0.0;
    for nu in 0..n {
        for la in 0..n {
            let mut ric = 0.0;
            for mu in 0..n {
                let mut term = dgamma[mu][(mu, nu, la)] - dgamma[la][(mu, nu, mu)];
                for si in 0..n {
                    term += gamma[(mu, mu, si)] * gamma[(si, nu, la)]
                        - gamma[(mu, la, si)] * gamma[(si, nu, mu)];
                }
                ric += term;
            }
            r_scalar += g_inv[(nu, la)] * ric;
        }
    }
    Ok(r_scalar)
}

/// A geodesic found by shooting, affinely parametrized on `[0, 1]`.
pub struct Geodesic {
    /// Chart velocity at the start point.
    pub initial_velocity: Vec<f64>,
    /// Metric length of the curve.
    pub length: f64,
    /// Uniformly spaced sample points, including both endpoints.
    pub nodes: Vec<Vec<f64>>,
}

const SHOOT_STEPS: usize = 2000;
const SHOOT_TOL: f64 = 1e-10;
const SHOOT_MAX_ITERS: usize = 60;

/// State layout: first `n` entries position, last `n` velocity.
fn geodesic_rhs(metric: &ChartMetric, state: &[f64], out: &mut [f64]) -> Result<()> {
    let n = metric.dim();
    let (x, v) = state.split_at(n);
    let gamma = christoffel_second(metric, x)?;
    out[..n].copy_from_slice(v);
    for la in 0..n {
        let mut a = 0.0;
        for mu in 0..n {
            for nu in 0..n {
                a -= gamma[(la, mu, nu)] * v[mu] * v[nu];
            }
        }
        out[n + la] = a;
    }
    Ok(())
}

/// Classic fourth-order Runge-Kutta over `t ∈ [0, 1]`, recording `samples + 1`
/// uniformly spaced positions when requested. The step count is rounded up to
/// a multiple of `samples` so recorded nodes land exactly on grid times.
fn integrate(
    metric: &ChartMetric,
    x0: &[f64],
    v0: &[f64],
    samples: Option<usize>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = metric.dim();
    let mut state: Vec<f64> = x0.iter().chain(v0.iter()).copied().collect();
    let steps = match samples {
        Some(s) => {
            assert!(s > 0, "need at least one sample");
            SHOOT_STEPS.div_ceil(s) * s
        }
        None => SHOOT_STEPS,
    };
    let h = 1.0 / steps as f64;
    let mut nodes = Vec::new();
    let record_every = samples.map(|s| steps / s);
    if record_every.is_some() {
        nodes.push(state[..n].to_vec());
    }
    let mut k1 = vec![0.0; 2 * n];
    let mut k2 = vec![0.0; 2 * n];
    let mut k3 = vec![0.0; 2 * n];
    let mut k4 = vec![0.0; 2 * n];
    let mut tmp = vec![0.0; 2 * n];
    for step in 0..steps {
        geodesic_rhs(metric, &state, &mut k1)?;
        for i in 0..2 * n {
            tmp[i] = state[i] + 0.5 * h * k1[i];
        }
        geodesic_rhs(metric, &tmp, &mut k2)?;
        for i in 0..2 * n {
            tmp[i] = state[i] + 0.5 * h * k2[i];
        }
        geodesic_rhs(metric, &tmp, &mut k3)?;
        for i in 0..2 * n {
            tmp[i] = state[i] + h * k3[i];
        }
        geodesic_rhs(metric, &tmp, &mut k4)?;
        for i in 0..2 * n {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some(every) = record_every {
            if (step + 1) % every == 0 {
                nodes.push(state[..n].to_vec());
            }
        }
    }
    Ok((state, nodes))
}

/// Endpoint reached from `x0` with initial velocity `v0`.
fn shoot(metric: &ChartMetric, x0: &[f64], v0: &[f64]) -> Result<Vec<f64>> {
    let n = metric.dim();
    let (state, _) = integrate(metric, x0, v0, None)?;
    Ok(state[..n].to_vec())
}

/// Solves the geodesic boundary-value problem from `x` to `y` by Newton
/// iteration on the initial velocity, sampling the resulting curve at
/// `samples + 1` points. The chart difference `y − x` seeds the iteration, so
/// the method finds the geodesic homotopic to the chart-line segment;
/// endpoints must be far from chart singularities.
pub fn geodesic_between(
    metric: &ChartMetric,
    x: &[f64],
    y: &[f64],
    samples: usize,
) -> Result<Geodesic> {
    let n = metric.dim();
    assert_eq!(x.len(), n, "point dimension mismatch");
    assert_eq!(y.len(), n, "point dimension mismatch");
    let mut v: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let target = DVector::from_column_slice(y);

    let mut miss = DVector::from_column_slice(&shoot(metric, x, &v)?) - &target;
    for iter in 0..SHOOT_MAX_ITERS {
        if miss.amax() <= SHOOT_TOL {
            let (state, nodes) = integrate(metric, x, &v, Some(samples.max(1)))?;
            let g = metric.components(x);
            let vv = DVector::from_column_slice(&v);
            let speed2 = (vv.transpose() * g * &vv)[(0, 0)];
            // Affine parametrization keeps g(v, v) constant; verify at the far
            // end before trusting the length.
            let gy = metric.components(&state[..n]);
            let vy = DVector::from_column_slice(&state[n..]);
            let speed2_end = (vy.transpose() * gy * &vy)[(0, 0)];
            let drift = (speed2 - speed2_end).abs() / speed2.abs().max(1e-30);
            if drift > 1e-6 {
                return Err(Error::ConvergenceFailure { residual: drift, iterations: iter });
            }
            return Ok(Geodesic {
                initial_velocity: v,
                length: speed2.abs().sqrt(),
                nodes,
            });
        }
        // Finite-difference Jacobian of the endpoint map.
        let mut jac = DMatrix::zeros(n, n);
        let scale = v.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let delta = 1e-6 * scale;
        for k in 0..n {
            let mut vp = v.clone();
            vp[k] += delta;
            let fp = DVector::from_column_slice(&shoot(metric, x, &vp)?) - &target;
            jac.set_column(k, &((fp - &miss) / delta));
        }
        let step = jac
            .lu()
            .solve(&miss)
            .ok_or(Error::ConvergenceFailure { residual: miss.amax(), iterations: iter })?;
        // Backtracking keeps the iteration inside the basin.
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(c, s)| c - lambda * s).collect();
            let trial_miss = DVector::from_column_slice(&shoot(metric, x, &trial)?) - &target;
            if trial_miss.amax() < miss.amax() {
                v = trial;
                miss = trial_miss;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            return Err(Error::ConvergenceFailure {
                residual: miss.amax(),
                iterations: iter,
            });
        }
    }
    Err(Error::ConvergenceFailure { residual: miss.amax(), iterations: SHOOT_MAX_ITERS })
}

/// Geodesic distance from `x` to `y` along the shooting solution.
pub fn geodesic_distance(metric: &ChartMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(geodesic_between(metric, x, y, 1)?.length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_curvature_vanishes() {
        let m = ChartMetric::named("flat-2").unwrap();
        assert_abs_diff_eq!(ricci_scalar_contraction(&m, &[0.4, -0.9]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_curvature_matches_closed_form() {
        let m = ChartMetric::named("sphere:2").unwrap();
        let r = ricci_scalar_contraction(&m, &[1.1, 0.3]).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn hyperbolic_curvature_matches_closed_form() {
        let m = ChartMetric::named("hyperbolic2").unwrap();
        let r = ricci_scalar_contraction(&m, &[-0.7, 2.3]).unwrap();
        assert_abs_diff_eq!(r, -2.0, epsilon = 1e-6);
    }

    #[test]
    fn flat_geodesic_is_straight() {
        let m = ChartMetric::named("flat-2").unwrap();
        let geo = geodesic_between(&m, &[0.0, 0.0], &[3.0, 4.0], 4).unwrap();
        assert_abs_diff_eq!(geo.length, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(geo.nodes[2][0], 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(geo.nodes[2][1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn sphere_distance_matches_central_angle() {
        // Unit sphere, chart (θ, φ): cos Δ = cos θ₁ cos θ₂ + sin θ₁ sin θ₂ cos(φ₁ − φ₂).
        let m = ChartMetric::named("sphere:1").unwrap();
        let p = [1.0f64, 0.2];
        let q = [1.4f64, 0.9];
        let cos_d = p[0].cos() * q[0].cos() + p[0].sin() * q[0].sin() * (p[1] - q[1]).cos();
        let exact = cos_d.acos();
        let d = geodesic_distance(&m, &p, &q).unwrap();
        assert_abs_diff_eq!(d, exact, epsilon = 1e-8);
    }

    #[test]
    fn scaled_sphere_distance_scales() {
        let m1 = ChartMetric::named("sphere:1").unwrap();
        let m3 = ChartMetric::named("sphere:3").unwrap();
        let p = [0.9, -0.4];
        let q = [1.3, 0.5];
        let d1 = geodesic_distance(&m1, &p, &q).unwrap();
        let d3 = geodesic_distance(&m3, &p, &q).unwrap();
        assert_abs_diff_eq!(d3, 3.0 * d1, epsilon = 1e-8);
    }
}
