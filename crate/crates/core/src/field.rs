//! Complex fields sampled on regular one- and two-dimensional lattices.
//!
//! A [`Grid`] fixes the sampling geometry (origin, spacing, extent, boundary
//! treatment) and a [`WaveField`] attaches complex node values plus the chart
//! metric whose invariant measure weights every norm and density. Operators
//! over these fields live in the evolution and kernel modules; this module
//! owns the containers and the measure-weighted bookkeeping.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{invariant_measure, ChartMetric};

/// Boundary treatment for finite-difference stencils.
///
/// `Periodic` wraps indices on each axis (ring or torus); `Dirichlet` treats
/// the outermost layer of nodes as fixed data and restricts operators to the
/// interior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// Regular lattice over a chart box or periodic ring/torus.
///
/// Row-major layout: in two dimensions the flat index is `i * shape[1] + j`
/// with axis 0 slowest. Spacing is uniform per axis. For a periodic axis of
/// `n` nodes the represented circumference is `n * spacing`; the node at
/// `origin + n * spacing` is identified with the origin node and not stored.
#[derive(Clone, Debug)]
pub struct Grid {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    boundary: Boundary,
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, shape: Vec<usize>, boundary: Boundary) -> Result<Grid> {
        let dim = shape.len();
        if dim == 0 || dim > 2 {
            return Err(Error::InvalidConfig(format!("grid shape must have 1 or 2 axes, got {dim}")));
        }
        if origin.len() != dim || spacing.len() != dim {
            return Err(Error::InvalidConfig(format!(
                "grid origin/spacing/shape lengths disagree: {}/{}/{dim}",
                origin.len(),
                spacing.len()
            )));
        }
        for (k, &h) in spacing.iter().enumerate() {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidConfig(format!("grid spacing[{k}] must be positive and finite, got {h}")));
            }
        }
        // Three nodes per axis is the minimum that leaves any interior for a
        // Dirichlet stencil and any distinct neighbors for a periodic one.
        for (k, &n) in shape.iter().enumerate() {
            if n < 3 {
                return Err(Error::InvalidConfig(format!("grid shape[{k}] must be at least 3, got {n}")));
            }
        }
        Ok(Grid { origin, spacing, shape, boundary })
    }

    /// One-dimensional periodic grid covering `[origin, origin + n*h)`.
    pub fn ring(origin: f64, spacing: f64, n: usize) -> Result<Grid> {
        Grid::new(vec![origin], vec![spacing], vec![n], Boundary::Periodic)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Multi-index of a flat index, row-major.
    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        match self.shape.len() {
            1 => vec![flat],
            _ => vec![flat / self.shape[1], flat % self.shape[1]],
        }
    }

    /// Flat index of a multi-index, row-major.
    pub fn flat(&self, idx: &[usize]) -> usize {
        match self.shape.len() {
            1 => idx[0],
            _ => idx[0] * self.shape[1] + idx[1],
        }
    }

    /// Chart coordinates of a node.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let idx = self.unravel(flat);
        idx.iter().enumerate().map(|(k, &i)| self.origin[k] + i as f64 * self.spacing[k]).collect()
    }

    /// Flat index of the neighbor `steps` nodes away along `axis`, or `None`
    /// when a Dirichlet grid runs off the edge.
    pub fn neighbor(&self, flat: usize, axis: usize, steps: isize) -> Option<usize> {
        let mut idx = self.unravel(flat);
        let n = self.shape[axis] as isize;
        let moved = idx[axis] as isize + steps;
        let wrapped = match self.boundary {
            Boundary::Periodic => moved.rem_euclid(n),
            Boundary::Dirichlet => {
                if moved < 0 || moved >= n {
                    return None;
                }
                moved
            }
        };
        idx[axis] = wrapped as usize;
        Some(self.flat(&idx))
    }

    /// Whether every stencil neighbor of the node exists. True everywhere on
    /// periodic grids; excludes the outermost layer on Dirichlet grids.
    pub fn is_interior(&self, flat: usize) -> bool {
        match self.boundary {
            Boundary::Periodic => true,
            Boundary::Dirichlet => {
                let idx = self.unravel(flat);
                idx.iter().zip(&self.shape).all(|(&i, &n)| i > 0 && i + 1 < n)
            }
        }
    }

    /// Volume of one lattice cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
}

/// Complex field on a [`Grid`] with the chart metric attached.
///
/// The metric supplies the invariant measure `√|det g|`, so norms, densities
/// and inner products computed here are chart-invariant quantities.
#[derive(Clone)]
pub struct WaveField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub metric: Arc<ChartMetric>,
}

impl WaveField {
    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: Grid, metric: Arc<ChartMetric>, f: F) -> Result<WaveField>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        if metric.dim() != grid.dim() {
            return Err(Error::InvalidConfig(format!(
                "metric dimension {} does not match grid dimension {}",
                metric.dim(),
                grid.dim()
            )));
        }
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Ok(WaveField { grid, values, metric })
    }

    pub fn zeros(grid: Grid, metric: Arc<ChartMetric>) -> Result<WaveField> {
        WaveField::from_fn(grid, metric, |_| Complex64::new(0.0, 0.0))
    }

    /// `√|det g|` at every node.
    pub fn measure_weights(&self) -> Result<Vec<f64>> {
        (0..self.grid.len()).map(|i| invariant_measure(&self.metric, &self.grid.point(i))).collect()
    }

    /// Chart-invariant probability density `√|det g| |ψ|²` per node.
    pub fn born_density(&self) -> Result<Vec<f64>> {
        let w = self.measure_weights()?;
        Ok(w.iter().zip(&self.values).map(|(&m, v)| m * v.norm_sqr()).collect())
    }

    /// Discrete invariant norm squared `Σ √|det g| |ψ|² · cell volume`.
    pub fn norm_sq(&self) -> Result<f64> {
        Ok(self.born_density()?.iter().sum::<f64>() * self.grid.cell_volume())
    }

    /// Measure-weighted inner product `Σ √|det g| conj(φ)ψ · cell volume`.
    pub fn inner(&self, other: &WaveField) -> Result<Complex64> {
        if self.grid.len() != other.grid.len() {
            return Err(Error::InvalidConfig("inner product of fields on different grids".into()));
        }
        let w = self.measure_weights()?;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.values.len() {
            acc += w[i] * self.values[i].conj() * other.values[i];
        }
        Ok(acc * self.grid.cell_volume())
    }

    /// Multiplies the field pointwise by the unimodular factor `exp(-i σ(x))`.
    /// Leaves the Born density untouched node by node.
    pub fn apply_gauge<F>(&mut self, sigma: F)
    where
        F: Fn(&[f64]) -> f64,
    {
        for i in 0..self.values.len() {
            let s = sigma(&self.grid.point(i));
            self.values[i] *= Complex64::new(0.0, -s).exp();
        }
    }

    /// Flags nodes where the metric components change by more than 5%
    /// relative between stencil neighbors: differential operators assume the
    /// metric varies slowly per cell.
    pub fn warnings(&self) -> Vec<String> {
        let mut worst: Option<(f64, usize, usize)> = None;
        for i in 0..self.grid.len() {
            let here = self.metric.components(&self.grid.point(i));
            let scale = here.amax().max(1e-300);
            for axis in 0..self.grid.dim() {
                let Some(j) = self.grid.neighbor(i, axis, 1) else { continue };
                let there = self.metric.components(&self.grid.point(j));
                let change = (&there - &here).amax() / scale;
                if change > worst.map_or(0.0, |w| w.0) {
                    worst = Some((change, i, axis));
                }
            }
        }
        match worst {
            Some((change, node, axis)) if change > 0.05 => vec![format!(
                "metric changes by {:.1}% across one cell at node {node}, axis {axis}; \
                 differential operators assume slow variation per cell",
                change * 100.0
            )],
            _ => Vec::new(),
        }
    }

    /// CSV rows `x0[,x1],re,im`, one per node, with a header row.
    pub fn to_csv(&self) -> String {
        let dim = self.grid.dim();
        let mut out = String::new();
        for k in 0..dim {
            out.push_str(&format!("x{k},"));
        }
        out.push_str("re,im\n");
        for i in 0..self.grid.len() {
            for c in self.grid.point(i) {
                out.push_str(&format!("{c},"));
            }
            let v = self.values[i];
            out.push_str(&format!("{},{}\n", v.re, v.im));
        }
        out
    }
}
