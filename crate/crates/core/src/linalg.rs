//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative singular-value cutoff for numerical rank.
pub const RANK_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values with `sigma_k / sigma_1 > tol`.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    rank_from_singular_values(&singular_values(m), tol)
}

pub fn rank_from_singular_values(s: &[f64], tol: f64) -> usize {
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x / top > tol).count(),
        _ => 0,
    }
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| random_complex(rng)).collect()
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

/// Haar-distributed unitary via QR of a Gaussian matrix with the phase fix on R's diagonal.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random matrix of determinant one (well conditioned with high probability).
pub fn random_sl<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    loop {
        let g = random_matrix(rng, n, n);
        let d = g.determinant();
        if d.norm() > 1e-3 {
            let root = d.powf(1.0 / n as f64);
            return g / root;
        }
    }
}

/// Modified Gram-Schmidt on the columns of `u`.
///
/// Returns `(q, diag_product)` with `u = q r`, `r` upper triangular with
/// positive diagonal, and `diag_product` the product of that diagonal.
/// Near-orthonormal input comes back almost unchanged, which keeps
/// continuation paths smooth. Returns `None` for dependent columns.
pub fn gram_schmidt(u: &[Vec<C64>]) -> Option<(Vec<Vec<C64>>, f64)> {
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(u.len());
    let mut prod = 1.0;
    let scale = u.iter().map(|c| norm(c)).fold(0.0, f64::max);
    for col in u {
        let mut v = col.clone();
        for _ in 0..2 {
            for b in &q {
                let c = dot(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let nv = norm(&v);
        if nv.is_nan() || nv <= 1e-13 * scale.max(1e-300) {
            return None;
        }
        prod *= nv;
        v.iter_mut().for_each(|x| *x /= nv);
        q.push(v);
    }
    Some((q, prod))
}

/// Conjugate-linear in the first argument.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Determinant of a small square matrix given column-wise, by partial pivoting.
pub fn det_columns(cols: &[&[C64]], rows: &[usize]) -> C64 {
    let k = cols.len();
    if k > 8 {
        return CMatrix::from_fn(k, k, |i, j| cols[j][rows[i]]).determinant();
    }
    let mut a = [[ZERO; 8]; 8];
    for (j, c) in cols.iter().enumerate() {
        for (i, &r) in rows.iter().enumerate() {
            a[i][j] = c[r];
        }
    }
    let mut det = ONE;
    for p in 0..k {
        let mut piv = p;
        for i in p + 1..k {
            if a[i][p].norm_sqr() > a[piv][p].norm_sqr() {
                piv = i;
            }
        }
        if a[piv][p].norm_sqr() == 0.0 {
            return ZERO;
        }
        if piv != p {
            a.swap(piv, p);
            det = -det;
        }
        det *= a[p][p];
        let inv = ONE / a[p][p];
        let pivot = a[p];
        for row in &mut a[p + 1..k] {
            let f = row[p] * inv;
            if f != ZERO {
                for (x, &t) in row[p + 1..k].iter_mut().zip(&pivot[p + 1..k]) {
                    *x -= f * t;
                }
            }
        }
    }
    det
}

/// Orthonormal basis of the orthogonal complement of `span(cols)` in C^n.
pub fn orthogonal_complement(cols: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for b in &basis {
            let d = dot(b, &v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let nv = norm(&v);
        if nv > 1e-12 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    let start = basis.len();
    // Candidates are processed in order of how much of them survives projection,
    // which keeps the completion well conditioned.
    let mut remaining: Vec<usize> = (0..n).collect();
    while basis.len() < n && !remaining.is_empty() {
        let mut best = None;
        let mut best_norm = -1.0;
        for (pos, &i) in remaining.iter().enumerate() {
            let mut v = vec![ZERO; n];
            v[i] = ONE;
            for b in &basis {
                let d = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
            let nv = norm(&v);
            if nv > best_norm {
                best_norm = nv;
                best = Some((pos, v));
            }
        }
        let (pos, mut v) = best.expect("nonempty");
        remaining.remove(pos);
        if best_norm < 1e-10 {
            continue;
        }
        for b in &basis {
            let d = dot(b, &v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v);
    }
    basis.split_off(start)
}

/// Solve the Hermitian positive (semi)definite system `a x = b`, falling back
/// to LU when Cholesky fails.
pub fn solve_hpd(a: CMatrix, b: &CVector) -> Option<CVector> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    a.lu().solve(b)
}
