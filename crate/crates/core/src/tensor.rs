//! Dense rank-3 and rank-4 arrays over a single small dimension.
//!
//! `nalgebra` covers matrices; connection coefficients and the quartic
//! expansion tensor need one and two more slots. Dimensions here are tiny
//! (chart dimension, typically 1..4), so a flat `Vec` with row-major
//! indexing is all that is required.

/// Rank-3 array indexed as `t[(i, j, k)]`, all axes of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

impl std::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

/// Rank-4 array indexed as `t[(i, j, k, l)]`, all axes of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Tensor4 { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Replaces the tensor with its average over all 24 permutations of the
    /// four slots. Only the fully symmetric part of a rank-4 tensor
    /// contributes when contracted with `v v v v`, so this is the canonical
    /// representative for quartic-form coefficients.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        let src = self.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let perms = [
                            (i, j, k, l), (i, j, l, k), (i, k, j, l), (i, k, l, j),
                            (i, l, j, k), (i, l, k, j), (j, i, k, l), (j, i, l, k),
                            (j, k, i, l), (j, k, l, i), (j, l, i, k), (j, l, k, i),
                            (k, i, j, l), (k, i, l, j), (k, j, i, l), (k, j, l, i),
                            (k, l, i, j), (k, l, j, i), (l, i, j, k), (l, i, k, j),
                            (l, j, i, k), (l, j, k, i), (l, k, i, j), (l, k, j, i),
                        ];
                        let sum: f64 = perms.iter().map(|&p| src[p]).sum();
                        self[(i, j, k, l)] = sum / 24.0;
                    }
                }
            }
        }
    }
}

impl std::ops::Index<(usize, usize, usize, usize)> for Tensor4 {
    type Output = f64;
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &f64 {
        &self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

impl std::ops::IndexMut<(usize, usize, usize, usize)> for Tensor4 {
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut f64 {
        &mut self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_averages_permutations() {
        let mut t = Tensor4::zeros(2);
        t[(0, 0, 0, 1)] = 24.0;
        t.symmetrize();
        // 24 / 24 lands once in each of the four slots that permute (0,0,0,1).
        assert_eq!(t[(0, 0, 0, 1)], 6.0);
        assert_eq!(t[(0, 0, 1, 0)], 6.0);
        assert_eq!(t[(0, 1, 0, 0)], 6.0);
        assert_eq!(t[(1, 0, 0, 0)], 6.0);
        assert_eq!(t[(0, 0, 0, 0)], 0.0);
        assert_eq!(t[(1, 1, 0, 0)], 0.0);
    }

    #[test]
    fn index_roundtrip() {
        let mut t = Tensor3::zeros(3);
        t[(2, 1, 0)] = 5.0;
        assert_eq!(t[(2, 1, 0)], 5.0);
        assert_eq!(t[(0, 1, 2)], 0.0);
        assert_eq!(t.dim(), 3);
    }
}
