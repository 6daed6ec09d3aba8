//! Symmetric sparse storage and the Dirichlet-reduced linear solver.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full (both triangles) CSR matrix with a fixed pattern.
#[derive(Debug, Clone)]
pub struct SymCsr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SymCsr {
    /// Pattern of a two-component field on P2 elements: dofs `2i`, `2i+1`
    /// couple with every dof of every node sharing an element with node `i`.
    pub fn p2_pattern(num_nodes: usize, elements: &[[usize; 6]]) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for el in elements {
            for &a in el {
                adj[a].extend_from_slice(el);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let n = 2 * num_nodes;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let total: usize = adj.iter().map(|l| 4 * l.len()).sum();
        let mut cols = Vec::with_capacity(total);
        for list in &adj {
            for _ in 0..2 {
                for &b in list {
                    cols.push(2 * b);
                    cols.push(2 * b + 1);
                }
                row_ptr.push(cols.len());
            }
        }
        let nnz = cols.len();
        SymCsr {
            n,
            row_ptr,
            cols,
            vals: vec![0.0; nnz],
        }
    }

    #[inline]
    fn position(&self, r: usize, c: usize) -> usize {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        self.row_ptr[r] + row.binary_search(&c).expect("entry outside sparsity pattern")
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let p = self.position(r, c);
        self.vals[p] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        row.binary_search(&c).map_or(0.0, |k| self.vals[self.row_ptr[r] + k])
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    /// `xᵀ K x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `max |K_rc - K_cr| / max |K_rc|`.
    pub fn relative_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                scale = scale.max(self.vals[k].abs());
                worst = worst.max((self.vals[k] - self.get(c, r)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

/// Choice of linear solver for the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Sparse Cholesky below [`DIRECT_LIMIT`] unknowns, conjugate gradients above.
    #[default]
    Auto,
    Direct,
    Iterative,
}

/// Unknown count above which `Auto` switches to conjugate gradients.
pub const DIRECT_LIMIT: usize = 1_500_000;

enum Factor {
    Cholesky(Llt<usize, f64>),
    Cg { diag_inv: Vec<f64> },
}

/// `K_ff x = b` on the free dofs, factorized once.
pub struct ReducedSolver {
    /// Free dofs in increasing order.
    pub free: Vec<usize>,
    /// Dof -> position among the free dofs, or `usize::MAX` if constrained.
    pub free_index: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    lower: Vec<f64>,
    factor: Factor,
}

impl std::fmt::Debug for ReducedSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedSolver")
            .field("free", &self.free.len())
            .field("nnz_lower", &self.row_idx.len())
            .field(
                "kind",
                &match self.factor {
                    Factor::Cholesky(_) => "cholesky",
                    Factor::Cg { .. } => "cg",
                },
            )
            .finish()
    }
}

impl ReducedSolver {
    pub fn new(k: &SymCsr, constrained: &[bool], kind: SolverKind) -> Result<Self> {
        let mut free_index = vec![usize::MAX; k.n];
        let mut free = Vec::new();
        for d in 0..k.n {
            if !constrained[d] {
                free_index[d] = free.len();
                free.push(d);
            }
        }
        if free.is_empty() {
            return Err(Error::SingularSystem("every dof is constrained".into()));
        }
        // lower triangle in CSC: column j holds rows >= j (= CSR row j, cols >= j, by symmetry)
        let mut col_ptr = Vec::with_capacity(free.len() + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        let mut lower = Vec::new();
        for &d in &free {
            for p in k.row_ptr[d]..k.row_ptr[d + 1] {
                let c = k.cols[p];
                if c >= d && free_index[c] != usize::MAX {
                    row_idx.push(free_index[c]);
                    lower.push(k.vals[p]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        let n = free.len();
        let use_direct = match kind {
            SolverKind::Direct => true,
            SolverKind::Iterative => false,
            SolverKind::Auto => n <= DIRECT_LIMIT,
        };
        let factor = if use_direct {
            // sequential factorization keeps results independent of the thread count
            faer::set_global_parallelism(faer::Par::Seq);
            let sym = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
            let mat = SparseColMatRef::new(sym, &lower);
            let symbolic = SymbolicLlt::try_new(sym, faer::Side::Lower)
                .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
            let llt = Llt::try_new_with_symbolic(symbolic, mat, faer::Side::Lower).map_err(|e| {
                Error::SingularSystem(format!("stiffness matrix is not positive definite: {e:?}"))
            })?;
            Factor::Cholesky(llt)
        } else {
            let mut diag_inv = vec![0.0; n];
            for j in 0..n {
                let d = lower[col_ptr[j]];
                if !(d > 0.0) {
                    return Err(Error::SingularSystem(format!("non-positive diagonal {d} at unknown {j}")));
                }
                diag_inv[j] = 1.0 / d;
            }
            Factor::Cg { diag_inv }
        };
        Ok(ReducedSolver {
            free,
            free_index,
            col_ptr,
            row_idx,
            lower,
            factor,
        })
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    /// `y = K_ff x` from the stored lower triangle.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for j in 0..x.len() {
            let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
            y[j] += self.lower[s] * x[j];
            for p in s + 1..e {
                let i = self.row_idx[p];
                let v = self.lower[p];
                y[i] += v * x[j];
                y[j] += v * x[i];
            }
        }
        y
    }

    /// Solve `K_ff x = b`, with up to two steps of iterative refinement to
    /// bring the relative residual below 1e-10.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        match &self.factor {
            Factor::Cholesky(llt) => {
                let mut x = b.to_vec();
                llt.solve_in_place(faer::ColMut::from_slice_mut(&mut x));
                for _ in 0..2 {
                    let ax = self.mul(&x);
                    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
                    if norm(&r) <= 1e-12 * bnorm {
                        break;
                    }
                    llt.solve_in_place(faer::ColMut::from_slice_mut(&mut r));
                    for (xi, ri) in x.iter_mut().zip(&r) {
                        *xi += ri;
                    }
                }
                let res = self.residual(&x, b);
                if !(res <= 1e-10 * bnorm) {
                    return Err(Error::Solver(format!(
                        "direct solve residual {:.3e} exceeds tolerance",
                        res / bnorm
                    )));
                }
                Ok(x)
            }
            Factor::Cg { diag_inv } => self.cg(b, diag_inv, bnorm),
        }
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.mul(x);
        norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>())
    }

    fn cg(&self, b: &[f64], diag_inv: &[f64], bnorm: f64) -> Result<Vec<f64>> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(diag_inv).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let max_iter = 20 * n.max(100);
        for it in 0..max_iter {
            let ap = self.mul(&p);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) <= 1e-11 * bnorm {
                log::debug!("cg converged in {} iterations", it + 1);
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * diag_inv[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Solver(format!(
            "conjugate gradients did not converge in {max_iter} iterations"
        )))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Laplacian on two interleaved components, as a symmetric CSR.
    fn laplacian(n_nodes: usize) -> SymCsr {
        let elements: Vec<[usize; 6]> = (0..n_nodes - 1).map(|i| [i, i + 1, i, i + 1, i, i + 1]).collect();
        let mut k = SymCsr::p2_pattern(n_nodes, &elements);
        for i in 0..n_nodes - 1 {
            for c in 0..2 {
                let (a, b) = (2 * i + c, 2 * (i + 1) + c);
                k.add(a, a, 1.0);
                k.add(b, b, 1.0);
                k.add(a, b, -1.0);
                k.add(b, a, -1.0);
            }
        }
        k
    }

    #[test]
    fn direct_and_iterative_agree() {
        let k = laplacian(30);
        let mut constrained = vec![false; k.n];
        constrained[0] = true;
        constrained[1] = true;
        let b: Vec<f64> = (0..k.n - 2).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let x1 = ReducedSolver::new(&k, &constrained, SolverKind::Direct).unwrap().solve(&b).unwrap();
        let x2 = ReducedSolver::new(&k, &constrained, SolverKind::Iterative)
            .unwrap()
            .solve(&b)
            .unwrap();
        for (a, c) in x1.iter().zip(&x2) {
            assert!((a - c).abs() < 1e-8 * (1.0 + a.abs()));
        }
        assert!(k.relative_asymmetry() == 0.0);
    }

    #[test]
    fn floating_system_is_singular() {
        let k = laplacian(5);
        let constrained = vec![false; k.n];
        let err = ReducedSolver::new(&k, &constrained, SolverKind::Direct).unwrap_err();
        assert!(matches!(err, Error::SingularSystem(_)));
    }
}
