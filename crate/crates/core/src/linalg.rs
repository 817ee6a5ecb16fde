//! Small dense helpers shared by the subspace and operator code.

use nalgebra::{DMatrix, DVector};

use crate::spaces::Scalar;

/// Null space of `rows` (an `m × d` matrix) by reduced row echelon form with
/// complete pivoting. Returns `(basis, rank)`; basis columns are not
/// orthonormal. For coordinate-aligned rows the basis is coordinate-aligned.
pub(crate) fn rref_null_space(rows: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let (m, d) = rows.shape();
    let mut a = rows.clone();
    let scale = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut is_pivot = vec![false; d];
    if scale > 0.0 {
        for r in 0..m {
            // column-major scan with strict comparison: ties go to the lowest column
            let mut best = (0.0, 0, 0);
            for j in (0..d).filter(|&j| !is_pivot[j]) {
                for i in r..m {
                    if a[(i, j)].abs() > best.0 {
                        best = (a[(i, j)].abs(), i, j);
                    }
                }
            }
            let (val, pi, pj) = best;
            if val <= rel_tol * scale {
                break;
            }
            a.swap_rows(r, pi);
            let piv = a[(r, pj)];
            for j in 0..d {
                a[(r, j)] /= piv;
            }
            a[(r, pj)] = 1.0;
            for i in (0..m).filter(|&i| i != r) {
                let factor = a[(i, pj)];
                if factor != 0.0 {
                    for j in 0..d {
                        a[(i, j)] -= factor * a[(r, j)];
                    }
                    a[(i, pj)] = 0.0;
                }
            }
            pivot_cols.push(pj);
            is_pivot[pj] = true;
        }
    }
    let rank = pivot_cols.len();
    let free: Vec<usize> = (0..d).filter(|&j| !is_pivot[j]).collect();
    let mut basis = DMatrix::zeros(d, free.len());
    for (c, &j) in free.iter().enumerate() {
        basis[(j, c)] = 1.0;
        for (r, &p) in pivot_cols.iter().enumerate() {
            basis[(p, c)] = -a[(r, j)];
        }
    }
    (basis, rank)
}

/// Modified Gram–Schmidt with one reorthogonalization pass. `None` when a
/// column is (numerically) dependent on its predecessors.
pub(crate) fn orthonormalize(cols: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (d, n) = cols.shape();
    let mut q = DMatrix::<f64>::zeros(d, n);
    for j in 0..n {
        let mut v = cols.column(j).into_owned();
        let original = v.norm();
        if original == 0.0 {
            return None;
        }
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let c = qi.dot(&v);
                v.axpy(-c, &qi, 1.0);
            }
        }
        let nv = v.norm();
        if nv <= 1e-10 * original {
            return None;
        }
        q.set_column(j, &(v / nv));
    }
    Some(q)
}

/// Flip column signs so the first entry of significant size is positive.
pub(crate) fn normalize_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let amax = col.amax();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12 * amax).copied() {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q`. Candidates `e₁,…,e_d` are added greedily by
/// largest residual.
pub(crate) fn orthonormal_complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, n) = q.shape();
    let need = d.saturating_sub(n);
    let mut basis: Vec<DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(need);
    let mut used = vec![false; d];
    for _ in 0..need {
        let mut best: Option<(f64, usize, DVector<f64>)> = None;
        for i in (0..d).filter(|&i| !used[i]) {
            let mut v = DVector::<f64>::zeros(d);
            v[i] = 1.0;
            for _ in 0..2 {
                for b in basis.iter().chain(out.iter()) {
                    let c = b.dot(&v);
                    v.axpy(-c, b, 1.0);
                }
            }
            let nv = v.norm();
            if best.as_ref().map_or(true, |(bn, _, _)| nv > *bn) {
                best = Some((nv, i, v));
            }
        }
        let (nv, i, v) = best.expect("complement candidate");
        used[i] = true;
        out.push(v / nv);
    }
    basis.truncate(n);
    if out.is_empty() {
        return DMatrix::zeros(d, 0);
    }
    DMatrix::from_columns(&out)
}

/// Minimum-norm least-squares solution of `a·x = b`.
pub(crate) fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return DVector::zeros(c);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-13 * (r.max(c) as f64);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(c))
}

/// Largest singular value.
pub(crate) fn spectral_norm<S: Scalar>(a: &DMatrix<S>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    // Smaller Gram matrix of the two.
    let gram = if a.nrows() >= a.ncols() {
        a.adjoint() * a
    } else {
        a * a.adjoint()
    };
    let eig = gram.symmetric_eigenvalues();
    eig.iter().fold(0.0_f64, |acc, v| acc.max(*v)).max(0.0).sqrt()
}

/// Smallest singular value of a real matrix with at least as many rows as columns.
pub(crate) fn min_singular_value(a: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return f64::INFINITY;
    }
    let sv = a.clone().svd(false, false).singular_values;
    sv.iter().fold(f64::INFINITY, |acc, v| acc.min(*v))
}
