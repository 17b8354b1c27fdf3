//! Dense helpers shared by the domain modules: Hermitian eigensolves with
//! sorted output, descending SVD with empty-shape guards, orthonormal
//! complements and minimal-norm least-squares solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::tol;

pub type C64 = Complex<f64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitianize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
pub fn hermitian_eigen_asc(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let se = nalgebra::SymmetricEigen::new(hermitianize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Thin SVD with singular values sorted descending.
/// Returns `(u, sigma, v_t)` so that `m = u * diag(sigma) * v_t`.
/// Handles matrices with a zero dimension.
///
/// Built on the Hermitian eigendecomposition of the Gram matrix of the
/// smaller side rather than a bidiagonalization: the latter (as shipped)
/// intermittently returns inconsistent factors on rank-deficient complex
/// input. Small singular values are refined by direct products `|M v|`,
/// which keeps rank decisions sharp at the cutoff; left vectors attached to
/// numerically vanishing singular values are not meaningful (callers only
/// consume columns above the rank cutoff) and are left zero.
pub fn svd_desc(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(0, cols));
    }
    if cols > rows {
        let (u, sigma, v_t) = svd_desc(&m.adjoint());
        return (v_t.adjoint(), sigma, u.adjoint());
    }
    let gram = m.adjoint() * m;
    let (vals_asc, vecs) = hermitian_eigen_asc(&gram);
    let k = cols;
    let mut order: Vec<usize> = (0..k).rev().collect(); // descending eigenvalues
    let mut sigma: Vec<f64> = order.iter().map(|&i| vals_asc[i].max(0.0).sqrt()).collect();
    let scale = sigma.first().copied().unwrap_or(0.0).max(1.0);
    let mut v = DMatrix::zeros(cols, k);
    for (j, &i) in order.iter().enumerate() {
        v.set_column(j, &vecs.column(i));
    }
    // refine everything that the squared spectrum resolves poorly
    let refine_below = 1e-4 * scale;
    let mut products: Vec<Option<DVector<C64>>> = vec![None; k];
    for j in 0..k {
        let p = m * v.column(j);
        if sigma[j] <= refine_below {
            sigma[j] = p.norm();
        }
        products[j] = Some(p);
    }
    // refinement may reorder within the small cluster
    order = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let sigma_sorted: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    let mut v_sorted = DMatrix::zeros(cols, k);
    let mut u = DMatrix::zeros(rows, k);
    let floor = 1e-13 * scale;
    for (dst, &src) in order.iter().enumerate() {
        v_sorted.set_column(dst, &v.column(src));
        if sigma[src] > floor {
            let p = products[src].take().expect("computed above");
            u.set_column(dst, &(p / c(sigma[src])));
        }
    }
    (u, sigma_sorted, v_sorted.adjoint())
}

/// Rank cutoff: singular values below `RANK_FACTOR * max(sigma_max, 1)`
/// are treated as zero.
pub fn rank_cutoff(sigma: &[f64]) -> f64 {
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    tol::RANK_FACTOR * smax.max(1.0)
}

pub fn numerical_rank(sigma: &[f64]) -> usize {
    let cut = rank_cutoff(sigma);
    sigma.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal basis (Euclidean) of the complement of the span of the
/// orthonormal columns of `q` in `K^n`: Householder completion of `q` to a
/// full unitary. The trailing columns of the Q factor of `[q | I]` are
/// exactly orthonormal to the leading ones, which reproduce `q`.
pub fn orthonormal_complement(q: &DMatrix<C64>) -> DMatrix<C64> {
    let n = q.nrows();
    let k = q.ncols();
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    if k >= n {
        return DMatrix::zeros(n, 0);
    }
    let mut stacked = DMatrix::zeros(n, k + n);
    stacked.columns_mut(0, k).copy_from(q);
    stacked
        .columns_mut(k, n)
        .copy_from(&DMatrix::identity(n, n));
    let full_q = stacked.qr().q();
    full_q.columns(k, n - k).into_owned()
}

/// Minimal-norm least-squares solution of `m x = rhs` via rank-truncated SVD.
/// Returns the solution together with the smallest singular value of `m`
/// (0 when rank-deficient by the cutoff).
pub fn pinv_solve(m: &DMatrix<C64>, rhs: &DVector<C64>) -> (DVector<C64>, f64) {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        return (DVector::zeros(cols), 0.0);
    }
    let (u, sigma, v_t) = svd_desc(m);
    let cut = rank_cutoff(&sigma);
    let mut coeffs = u.adjoint() * rhs;
    let mut smin = 0.0;
    for (i, &s) in sigma.iter().enumerate() {
        if s > cut {
            coeffs[i] /= c(s);
            smin = s;
        } else {
            coeffs[i] = c(0.0);
        }
    }
    let rank = numerical_rank(&sigma);
    let full_rank_min = if rank == sigma.len() && rank == cols {
        smin
    } else {
        0.0
    };
    (v_t.adjoint() * coeffs, full_rank_min)
}

/// Moore-Penrose pseudoinverse with the shared rank cutoff.
pub fn pinv(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let (u, sigma, v_t) = svd_desc(m);
    let cut = rank_cutoff(&sigma);
    let inv_sigma = DVector::from_iterator(
        sigma.len(),
        sigma
            .iter()
            .map(|&s| if s > cut { c(1.0 / s) } else { c(0.0) }),
    );
    v_t.adjoint() * DMatrix::from_diagonal(&inv_sigma) * u.adjoint()
}

/// `true` when every entry has imaginary part at most `tol` relative to the
/// overall magnitude.
pub fn is_real_valued(m: &DMatrix<C64>, tol: f64) -> bool {
    let scale = max_abs(m).max(1.0);
    m.iter().all(|z| z.im.abs() <= tol * scale)
}

pub fn complex_from_real(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}
