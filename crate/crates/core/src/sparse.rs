//! Minimal row-major sparse matrix for row-vector products `x · A`.

use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix row by row. Duplicate columns within a row are summed and
    /// explicit zeros dropped.
    pub fn from_rows<I, R>(n_cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = (usize, f64)>,
    {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for row in rows {
            scratch.clear();
            scratch.extend(row);
            scratch.sort_by_key(|&(c, _)| c);
            let start = cols.len();
            for &(c, v) in &scratch {
                assert!(c < n_cols, "column {c} out of range");
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            // Drop zeros after merging.
            let mut w = start;
            for r in start..cols.len() {
                if vals[r] != 0.0 {
                    cols[w] = cols[r];
                    vals[w] = vals[r];
                    w += 1;
                }
            }
            cols.truncate(w);
            vals.truncate(w);
            row_ptr.push(cols.len());
        }
        CsrMatrix { n_cols, row_ptr, cols, vals }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).map(|(_, v)| v).sum()
    }

    /// `out += x · A`.
    pub fn left_mul_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows());
        debug_assert_eq!(out.len(), self.n_cols);
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.cols[k]] += xr * self.vals[k];
            }
        }
    }

    /// `out += (scale * x) · A`.
    pub fn left_mul_scaled_add(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        if scale == 0.0 {
            return;
        }
        for (r, &xr) in x.iter().enumerate() {
            let xr = xr * scale;
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.cols[k]] += xr * self.vals[k];
            }
        }
    }

    /// `out += (x ∘ d) · A` for a per-row diagonal `d`.
    pub fn left_mul_diag_add(&self, x: &[f64], d: &[f64], out: &mut [f64]) {
        for (r, (&xr, &dr)) in x.iter().zip(d).enumerate() {
            let xr = xr * dr;
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.cols[k]] += xr * self.vals[k];
            }
        }
    }

    /// Writes `row col value` triplets, one per line, after a `rows cols nnz` header.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.n_rows(), self.n_cols, self.nnz())?;
        for r in 0..self.n_rows() {
            for (c, v) in self.row(r) {
                writeln!(w, "{r} {c} {v:?}")?;
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows()];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }
}
