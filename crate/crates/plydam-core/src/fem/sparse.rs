//! Symmetric sparse solver for the static stages: CSR storage, IC(0)
//! preconditioning with diagonal-shift retry, and conjugate gradients.
//!
//! Reductions are fixed-order so results are bit-identical regardless of
//! worker count: the matrix-vector product parallelises over rows (each row
//! sums serially into its own slot) and dot products run serially.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Compressed sparse row symmetric matrix (full pattern stored).
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds the pattern from per-row sorted unique column lists.
    pub fn from_pattern(columns: Vec<Vec<u32>>) -> Csr {
        let n = columns.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for cols in &columns {
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Csr {
            n,
            row_ptr,
            col_idx,
            vals: vec![0.0; nnz],
        }
    }

    pub fn zero_values(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds into (row, col); the entry must exist in the pattern.
    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        let cols = &self.col_idx[lo..hi];
        match cols.binary_search(&(col as u32)) {
            Ok(k) => self.vals[lo + k] += v,
            Err(_) => panic!("entry ({row}, {col}) outside assembled pattern"),
        }
    }

    /// y = A x, deterministic row-parallel product.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        let row_ptr = &self.row_ptr;
        let col_idx = &self.col_idx;
        let vals = &self.vals;
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = 0.0;
            for k in row_ptr[i]..row_ptr[i + 1] {
                acc += vals[k] * x[col_idx[k] as usize];
            }
            *yi = acc;
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] as usize == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }
}

/// Incomplete Cholesky factor on the lower-triangular pattern of A, plus
/// its transpose for the backward sweep.
pub struct Ic0 {
    n: usize,
    l_row_ptr: Vec<usize>,
    l_col: Vec<u32>,
    l_val: Vec<f64>,
    lt_row_ptr: Vec<usize>,
    lt_col: Vec<u32>,
    lt_val: Vec<f64>,
}

impl Ic0 {
    /// Factorizes with a diagonal shift; returns None on breakdown.
    fn try_factor(a: &Csr, shift: f64) -> Option<Ic0> {
        let n = a.n;
        let mut l_row_ptr = Vec::with_capacity(n + 1);
        l_row_ptr.push(0usize);
        let mut l_col: Vec<u32> = Vec::new();
        let mut l_val: Vec<f64> = Vec::new();
        let diag = a.diagonal();
        let mut diag_pos = vec![0usize; n];
        for i in 0..n {
            let lo = a.row_ptr[i];
            let hi = a.row_ptr[i + 1];
            for k in lo..hi {
                let j = a.col_idx[k] as usize;
                if j > i {
                    break;
                }
                l_col.push(j as u32);
                let mut v = a.vals[k];
                if j == i {
                    v += shift * diag[i];
                    diag_pos[i] = l_val.len();
                }
                l_val.push(v);
            }
            l_row_ptr.push(l_col.len());
        }
        // In-place IC(0): for each row i, eliminate with previous rows.
        for i in 0..n {
            let (lo, hi) = (l_row_ptr[i], l_row_ptr[i + 1]);
            for kk in lo..hi {
                let k = l_col[kk] as usize;
                if k == i {
                    break;
                }
                // dot of rows i and k over columns < k
                let (klo, khi) = (l_row_ptr[k], l_row_ptr[k + 1]);
                let mut s = 0.0;
                let mut p = lo;
                let mut q = klo;
                while p < kk && q < khi {
                    let cp = l_col[p];
                    let cq = l_col[q];
                    if cq as usize >= k {
                        break;
                    }
                    match cp.cmp(&cq) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            s += l_val[p] * l_val[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                let dk = l_val[diag_pos[k]];
                l_val[kk] = (l_val[kk] - s) / dk;
            }
            // diagonal
            let dpos = diag_pos[i];
            let mut s = 0.0;
            for p in lo..dpos {
                s += l_val[p] * l_val[p];
            }
            let v = l_val[dpos] - s;
            if v <= 0.0 || !v.is_finite() {
                return None;
            }
            l_val[dpos] = v.sqrt();
        }
        // Transpose for the backward sweep.
        let nnz = l_col.len();
        let mut counts = vec![0usize; n + 1];
        for &c in &l_col {
            counts[c as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let lt_row_ptr = counts.clone();
        let mut cursor = counts;
        let mut lt_col = vec![0u32; nnz];
        let mut lt_val = vec![0.0; nnz];
        for i in 0..n {
            for k in l_row_ptr[i]..l_row_ptr[i + 1] {
                let j = l_col[k] as usize;
                let slot = cursor[j];
                lt_col[slot] = i as u32;
                lt_val[slot] = l_val[k];
                cursor[j] += 1;
            }
        }
        Some(Ic0 {
            n,
            l_row_ptr,
            l_col,
            l_val,
            lt_row_ptr,
            lt_col,
            lt_val,
        })
    }

    pub fn factor(a: &Csr) -> Option<Ic0> {
        for shift in [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1e-1] {
            if let Some(f) = Self::try_factor(a, shift) {
                return Some(f);
            }
        }
        None
    }

    /// z = (L L^T)^-1 r.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        // Forward: L y = r (y stored in z).
        for i in 0..n {
            let mut s = r[i];
            let (lo, hi) = (self.l_row_ptr[i], self.l_row_ptr[i + 1]);
            for k in lo..hi - 1 {
                s -= self.l_val[k] * z[self.l_col[k] as usize];
            }
            z[i] = s / self.l_val[hi - 1];
        }
        // Backward: L^T z = y. Row i of L^T holds column i of L; the
        // diagonal is its first entry.
        for i in (0..n).rev() {
            let (lo, hi) = (self.lt_row_ptr[i], self.lt_row_ptr[i + 1]);
            let mut s = z[i];
            for k in lo + 1..hi {
                s -= self.lt_val[k] * z[self.lt_col[k] as usize];
            }
            z[i] = s / self.lt_val[lo];
        }
    }
}

/// Preconditioner: IC(0) when it factors, Jacobi otherwise.
pub enum Preconditioner {
    Ic0(Ic0),
    Jacobi(Vec<f64>),
}

impl Preconditioner {
    pub fn build(a: &Csr) -> Preconditioner {
        match Ic0::factor(a) {
            Some(f) => Preconditioner::Ic0(f),
            None => Preconditioner::Jacobi(
                a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect(),
            ),
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Ic0(f) => f.apply(r, z),
            Preconditioner::Jacobi(dinv) => {
                for i in 0..r.len() {
                    z[i] = dinv[i] * r[i];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned conjugate gradients on A x = b; `x` carries the warm
/// start in and the solution out. Converges on ||b - Ax|| <= tol ||b||.
pub fn pcg(
    a: &Csr,
    m: &Preconditioner,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = a.n;
    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    a.mul(x, &mut q);
    for i in 0..n {
        r[i] = b[i] - q[i];
    }
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let target = tol * norm_b;
    let mut res = dot(&r, &r).sqrt();
    let mut it = 0;
    while res > target {
        if it >= max_iter {
            return Err(Error::NoConvergence {
                residual: res / norm_b,
                iterations: it,
            });
        }
        a.mul(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(Error::Singular(format!(
                "indefinite or singular system (p'Ap = {pq})"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt();
        it += 1;
    }
    Ok(CgOutcome {
        iterations: it,
        residual: res / norm_b,
    })
}
