// SPDX-License-Identifier: Apache-2.0

use crate::error::{input, Result};

/// One affine map `x ↦ W x + b` from `R^cols` to `R^rows`, with `W` held in
/// compressed sparse row form. Exact zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Layer {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
            bias: vec![0.0; rows],
        }
    }

    /// Build from dense rows: `w[i][j]` is the weight from input `j` to output `i`.
    pub fn from_dense(cols: usize, w: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        if w.len() != bias.len() {
            return input(format!("layer has {} weight rows but {} biases", w.len(), bias.len()));
        }
        let mut rows = Vec::with_capacity(w.len());
        for (i, row) in w.iter().enumerate() {
            if row.len() != cols {
                return input(format!("weight row {i} has length {} (expected {cols})", row.len()));
            }
            rows.push(row.iter().copied().enumerate().collect::<Vec<_>>());
        }
        Self::from_sparse_rows(cols, rows, bias)
    }

    /// Build from per-row `(column, value)` lists. Entries in a row are
    /// summed if a column repeats; zeros are dropped.
    pub fn from_sparse_rows(
        cols: usize,
        rows: Vec<Vec<(usize, f64)>>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if rows.len() != bias.len() {
            return input(format!("layer has {} rows but {} biases", rows.len(), bias.len()));
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                if c >= cols {
                    return input(format!("column index {c} out of range for {cols} inputs"));
                }
                let mut v = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if !v.is_finite() {
                    return input("non-finite weight");
                }
                if v != 0.0 {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return input("non-finite bias");
        }
        Ok(Layer { rows: bias.len(), cols, row_ptr, col_idx, vals, bias })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Nonzero weights (biases excluded).
    pub fn weight_nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn bias_nnz(&self) -> usize {
        self.bias.iter().filter(|b| **b != 0.0).count()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    /// All stored weights as `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut w = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.entries() {
            w[i][j] = v;
        }
        w
    }

    pub fn max_abs(&self) -> f64 {
        self.vals
            .iter()
            .chain(&self.bias)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = self.bias[i];
            for k in s..e {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    /// `self ∘ inner`: the affine map `x ↦ W_self (W_inner x + b_inner) + b_self`.
    pub fn compose(&self, inner: &Layer) -> Result<Layer> {
        if self.cols != inner.rows {
            return input(format!(
                "cannot compose a layer reading {} inputs after one producing {}",
                self.cols, inner.rows
            ));
        }
        let mut acc = vec![0.0; inner.cols];
        let mut touched = vec![false; inner.cols];
        let mut rows = Vec::with_capacity(self.rows);
        let mut bias = self.bias.clone();
        for (i, b) in bias.iter_mut().enumerate() {
            let mut cols_hit = Vec::new();
            for (k, w) in self.row(i) {
                *b += w * inner.bias[k];
                for (j, v) in inner.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols_hit.push(j);
                    }
                    acc[j] += w * v;
                }
            }
            let mut row = Vec::with_capacity(cols_hit.len());
            for j in cols_hit {
                row.push((j, acc[j]));
                acc[j] = 0.0;
                touched[j] = false;
            }
            rows.push(row);
        }
        Layer::from_sparse_rows(inner.cols, rows, bias)
    }

    /// Re-index the input columns: column `j` is moved to `map[j]` in an input
    /// space of dimension `cols`.
    pub fn remap_columns(&self, cols: usize, map: &[usize]) -> Result<Layer> {
        if map.len() != self.cols {
            return input("column map length must equal the layer's input dimension");
        }
        let rows = (0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| (map[j], v)).collect())
            .collect();
        Layer::from_sparse_rows(cols, rows, self.bias.clone())
    }

    /// Apply `f` to every stored weight and bias.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Result<Layer> {
        let rows = (0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| (j, f(v))).collect())
            .collect();
        let bias = self.bias.iter().map(|b| f(*b)).collect();
        Layer::from_sparse_rows(self.cols, rows, bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_matches_sequential_application() {
        let inner = Layer::from_dense(2, &[vec![1.0, 2.0], vec![0.0, -1.0], vec![3.0, 0.5]], vec![0.1, 0.0, -0.2]).unwrap();
        let outer = Layer::from_dense(3, &[vec![1.0, 0.0, 2.0]], vec![0.5]).unwrap();
        let both = outer.compose(&inner).unwrap();
        let x = [0.3, -1.7];
        let mut mid = [0.0; 3];
        inner.apply(&x, &mut mid);
        let mut a = [0.0];
        outer.apply(&mid, &mut a);
        let mut b = [0.0];
        both.apply(&x, &mut b);
        assert!((a[0] - b[0]).abs() < 1e-14);
    }

    #[test]
    fn zeros_are_not_stored() {
        let l = Layer::from_dense(3, &[vec![0.0, 1.0, 0.0]], vec![0.0]).unwrap();
        assert_eq!(l.weight_nnz(), 1);
        assert_eq!(l.bias_nnz(), 0);
        assert_eq!(l.dense(), vec![vec![0.0, 1.0, 0.0]]);
    }
}
