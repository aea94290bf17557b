//! Sparse/dense kernels used by the modal solver: reverse Cuthill-McKee
//! ordering, an envelope Cholesky factorization, dense and subspace-iteration
//! generalized symmetric eigensolvers, and CSR helpers.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Rows/columns `idx` of `a`, in the given order.
pub fn csr_submatrix(a: &CsrMatrix<f64>, rows: &[usize], cols: &[usize]) -> CsrMatrix<f64> {
    let mut col_map = vec![usize::MAX; a.ncols()];
    for (new, &old) in cols.iter().enumerate() {
        col_map[old] = new;
    }
    let mut coo = CooMatrix::new(rows.len(), cols.len());
    for (new_r, &r) in rows.iter().enumerate() {
        let row = a.row(r);
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            let nc = col_map[c];
            if nc != usize::MAX {
                coo.push(new_r, nc, v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn csr_to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        d[(i, j)] += *v;
    }
    d
}

pub fn csr_mul_vec(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for i in 0..a.nrows() {
        let row = a.row(i);
        y[i] = row.col_indices().iter().zip(row.values()).map(|(&j, v)| v * x[j]).sum();
    }
    y
}

pub fn csr_mul_dense(a: &CsrMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(a.nrows(), x.ncols());
    for c in 0..x.ncols() {
        let xc = x.column(c);
        for i in 0..a.nrows() {
            let row = a.row(i);
            y[(i, c)] = row.col_indices().iter().zip(row.values()).map(|(&j, v)| v * xc[j]).sum();
        }
    }
    y
}

/// Largest absolute entry of `a - aᵀ`.
pub fn csr_asymmetry(a: &CsrMatrix<f64>) -> f64 {
    let d = csr_to_dense(a);
    (&d - d.transpose()).amax()
}

/// Reverse Cuthill-McKee permutation of the symmetric sparsity graph of `a`:
/// `perm[new] = old`.
pub fn rcm_order(a: &CsrMatrix<f64>) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).col_indices().iter().copied().filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> Vec<usize> {
        let mut level = vec![usize::MAX; n];
        let mut q = VecDeque::from([start]);
        level[start] = 0;
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if !visited[v] && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        level
    };

    while order.len() < n {
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        // pseudo-peripheral start: hop to the lowest-degree node of the last level
        let mut start = seed;
        let mut ecc = 0;
        for _ in 0..4 {
            let level = bfs_levels(start, &visited);
            let depth = level.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
            if depth <= ecc && start != seed {
                break;
            }
            ecc = depth;
            start = (0..n).filter(|&i| level[i] == depth).min_by_key(|&i| (degree[i], i)).unwrap();
        }
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nb.sort_by_key(|&v| (degree[v], v));
            nb.dedup();
            for v in nb {
                visited[v] = true;
                q.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (variable band) Cholesky factor `P A Pᵀ = L Lᵀ` of a symmetric
/// positive definite sparse matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix<f64>) -> Result<Self> {
        Self::factor_with_order(a, rcm_order(a))
    }

    pub fn factor_with_order(a: &CsrMatrix<f64>, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.ncols(), what: "square matrix" });
        }
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        for i in 0..n {
            let row = a.row(perm[i]);
            first[i] = row.col_indices().iter().map(|&c| inv[c]).filter(|&c| c <= i).min().unwrap_or(i);
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for i in 0..n {
            let row = a.row(perm[i]);
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                let j = inv[c];
                if j <= i {
                    values[start[i] + j - first[i]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = values[start[i] + j - fi];
                let ri = &values[start[i] + k0 - fi..start[i] + j - fi];
                let rj = &values[start[j] + k0 - fj..start[j] + j - fj];
                s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                if j < i {
                    let d = values[start[j + 1] - 1];
                    values[start[i] + j - fi] = s / d;
                } else {
                    if !(s > 0.0) {
                        return Err(Error::numerical(format!(
                            "matrix is not positive definite (pivot {s:.3e} at row {})",
                            perm[i]
                        )));
                    }
                    values[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { perm, first, start, values })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (yj, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yj -= l * xi;
            }
        }
        let mut x = DVector::zeros(n);
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn solve_columns(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            x.set_column(c, &self.solve(&b.column(c).into_owned()));
        }
        x
    }
}

/// All eigenpairs of `k0 x = λ k2 x` with `k2` SPD, ascending, vectors
/// `k2`-orthonormal.
pub fn dense_generalized_eigen(k0: &DMatrix<f64>, k2: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k0.nrows();
    let chol = k2
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("mass matrix is not positive definite"))?;
    let l = chol.l();
    let linv_k0 = l
        .solve_lower_triangular(k0)
        .ok_or_else(|| Error::numerical("singular mass factor"))?;
    let mut c = l
        .solve_lower_triangular(&linv_k0.transpose())
        .ok_or_else(|| Error::numerical("singular mass factor"))?;
    c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut y = DMatrix::zeros(n, n);
    for (new, &old) in idx.iter().enumerate() {
        y.set_column(new, &eig.eigenvectors.column(old));
    }
    let x = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::numerical("singular mass factor"))?;
    Ok((vals, x))
}

#[derive(Debug, Clone, Copy)]
pub struct SubspaceOptions {
    pub max_iter: usize,
    /// Stop when every wanted pair has `‖K0 x − λ K2 x‖ ≤ tol ‖K0 x‖`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        SubspaceOptions { max_iter: 400, tol: 1e-9, seed: 0x5eed }
    }
}

/// `nev` smallest eigenpairs of `k0 x = λ k2 x` by block subspace iteration
/// with Rayleigh-Ritz projection. `k0` must be positive definite.
pub fn subspace_eigen(
    k0: &CsrMatrix<f64>,
    k2: &CsrMatrix<f64>,
    nev: usize,
    opts: &SubspaceOptions,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k0.nrows();
    if nev == 0 || nev > n {
        return Err(Error::invalid(format!("requested {nev} eigenpairs of a {n}-dimensional problem")));
    }
    let p = (2 * nev + 8).min(n);
    let fac = EnvelopeCholesky::factor(k0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0));
    let mut vals = vec![0.0; p];
    for iter in 0..opts.max_iter {
        let y = csr_mul_dense(k2, &x);
        let xb = fac.solve_columns(&y);
        let kt = xb.transpose() * &y;
        let mt = xb.transpose() * csr_mul_dense(k2, &xb);
        let kt = (&kt + kt.transpose()) * 0.5;
        let mt = (&mt + mt.transpose()) * 0.5;
        let (lam, q) = dense_generalized_eigen(&kt, &mt)?;
        x = xb * q;
        vals = lam;
        if iter % 2 == 1 || iter + 1 == opts.max_iter {
            let xs = x.columns(0, nev).into_owned();
            let k0x = csr_mul_dense(k0, &xs);
            let k2x = csr_mul_dense(k2, &xs);
            let worst = (0..nev)
                .map(|j| {
                    let r = k0x.column(j) - k2x.column(j) * vals[j];
                    r.norm() / k0x.column(j).norm()
                })
                .fold(0.0, f64::max);
            log::debug!("subspace iteration {iter}: worst residual {worst:.3e}");
            if worst <= opts.tol {
                return Ok((vals[..nev].to_vec(), x.columns(0, nev).into_owned()));
            }
        }
    }
    Err(Error::numerical(format!(
        "subspace iteration did not converge in {} iterations (lowest estimate {:.6e})",
        opts.max_iter, vals[0]
    )))
}
