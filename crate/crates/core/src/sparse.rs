//! Compressed sparse row storage for complex Hermitian operators and the
//! vector kernels used by the propagator.
//!
//! Matrix-vector products parallelize over rows, each row summed in column
//! order, so results do not depend on the worker count. Inner products reduce
//! fixed-size chunks in parallel and add the chunk partials in index order.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::io::Write;

/// Chunk length for deterministic parallel reductions.
const REDUCE_CHUNK: usize = 1 << 13;
/// Rows handled per parallel task in matvec.
const ROW_CHUNK: usize = 1 << 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets. Duplicates are summed and exact
    /// zeros dropped; columns end up sorted within each row.
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.par_sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<C64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            if last == Some((r, c)) {
                *vals.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c as u32);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self {
            dim,
            row_ptr,
            cols,
            vals,
        };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        if self.vals.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return;
        }
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[i] != C64::new(0.0, 0.0) {
                    cols.push(self.cols[i]);
                    vals.push(self.vals[i]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries of row `r` as (column, value).
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// All stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&(c as u32)) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_chunks_mut(ROW_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let base = chunk * ROW_CHUNK;
                for (i, yi) in out.iter_mut().enumerate() {
                    let r = base + i;
                    let mut acc = C64::new(0.0, 0.0);
                    for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                        acc += self.vals[k] * x[self.cols[k] as usize];
                    }
                    *yi = acc;
                }
            });
    }

    /// Largest |A_rc − conj(A_cr)| over stored entries.
    pub fn hermiticity_error(&self) -> f64 {
        (0..self.dim)
            .into_par_iter()
            .map(|r| {
                self.row(r)
                    .map(|(c, v)| (v - self.get(c, r).conj()).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Largest absolute entry, used to scale Hermiticity tolerances.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Upper bound on the spectral radius (maximum absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Coordinate dump: one `row col re im` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (r, c, v) in self.entries() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// ⟨a|b⟩ with a fixed reduction order.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    let partials: Vec<C64> = a
        .par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum())
        .collect();
    partials.into_iter().sum()
}

pub fn norm(a: &[C64]) -> f64 {
    let partials: Vec<f64> = a
        .par_chunks(REDUCE_CHUNK)
        .map(|x| x.iter().map(|p| p.norm_sqr()).sum())
        .collect();
    partials.into_iter().sum::<f64>().sqrt()
}

/// y ← y + α x.
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn scale(alpha: C64, x: &mut [C64]) {
    x.par_iter_mut().for_each(|xi| *xi *= alpha);
}
