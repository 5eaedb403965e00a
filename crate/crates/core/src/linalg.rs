//! Dense linear-algebra helpers: a rank-revealing Householder QR with
//! column pivoting, SVD rank queries, and small 3-D utilities.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

/// Householder QR with Businger–Golub column pivoting (largest remaining
/// column norm first), so that `|R[k,k]|` is non-increasing and the
/// numerical rank can be read off the diagonal.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    r: DMatrix<f64>,
    reflectors: Vec<(DVector<f64>, f64)>,
    perm: Vec<usize>,
    rank: usize,
    rel_tol: f64,
}

impl PivotedQr {
    /// Factorizes `a`; columns whose pivot falls below `rel_tol * |R[0,0]|`
    /// are classified as linearly dependent.
    pub fn new(mut a: DMatrix<f64>, rel_tol: f64) -> Self {
        let (m, n) = a.shape();
        let steps = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(steps);

        for k in 0..steps {
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let norm = a.view((k, j), (m - k, 1)).norm_squared();
                if norm > best_norm {
                    best_norm = norm;
                    best = j;
                }
            }
            if best != k {
                a.swap_columns(k, best);
                perm.swap(k, best);
            }

            let norm = best_norm.sqrt();
            if norm == 0.0 {
                reflectors.push((DVector::zeros(m - k), 0.0));
                continue;
            }
            let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
            let mut v = a.view((k, k), (m - k, 1)).clone_owned().column(0).into_owned();
            v[0] -= alpha;
            let vv = v.norm_squared();
            let tau = if vv > 0.0 { 2.0 / vv } else { 0.0 };
            for j in k..n {
                let mut col = a.view_mut((k, j), (m - k, 1));
                let s = tau * v.dot(&col.column(0));
                col.column_mut(0).axpy(-s, &v, 1.0);
            }
            a[(k, k)] = alpha;
            for i in (k + 1)..m {
                a[(i, k)] = 0.0;
            }
            reflectors.push((v, tau));
        }

        let r = a.rows(0, steps).upper_triangle();
        let lead = if steps > 0 { r[(0, 0)].abs() } else { 0.0 };
        let mut rank = 0;
        while rank < steps && lead > 0.0 && r[(rank, rank)].abs() > rel_tol * lead {
            rank += 1;
        }

        Self {
            r,
            reflectors,
            perm,
            rank,
            rel_tol,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Overrides the pivot-threshold rank, e.g. with an SVD decision.
    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank.min(self.r.nrows()).min(self.ncols());
        self
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    /// `perm[k]` is the original index of the column placed at position `k`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Original indices of the columns judged independent, in pivot order.
    pub fn independent(&self) -> &[usize] {
        &self.perm[..self.rank]
    }

    /// Original indices of the columns judged dependent, in pivot order.
    pub fn dependent(&self) -> &[usize] {
        &self.perm[self.rank..]
    }

    /// Upper-trapezoidal factor in pivoted column order.
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn ncols(&self) -> usize {
        self.perm.len()
    }

    /// Overwrites `b` with `Qᵀ b`.
    pub fn apply_qt(&self, b: &mut DVector<f64>) {
        for (k, (v, tau)) in self.reflectors.iter().enumerate() {
            if *tau == 0.0 {
                continue;
            }
            let mut tail = b.rows_mut(k, v.len());
            let s = tau * v.dot(&tail);
            tail.axpy(-s, v, 1.0);
        }
    }

    /// Basic least-squares solution: independent unknowns from the leading
    /// triangular block, dependent unknowns fixed at zero. Returned in the
    /// original column order.
    pub fn solve_basic(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut qtb = b.clone();
        self.apply_qt(&mut qtb);
        let r = self.rank;
        let mut y = qtb.rows(0, r).clone_owned();
        back_substitute(&self.r.view((0, 0), (r, r)).into_owned(), &mut y);
        let mut x = DVector::zeros(self.ncols());
        for (k, &col) in self.independent().iter().enumerate() {
            x[col] = y[k];
        }
        x
    }

    /// Coefficients `B` with `A_dep = A_indep · B`, i.e. `R11⁻¹ R12`.
    /// Rows follow `independent()`, columns follow `dependent()`.
    pub fn regrouping(&self) -> DMatrix<f64> {
        let r = self.rank;
        let n = self.ncols();
        let r11 = self.r.view((0, 0), (r, r)).into_owned();
        let mut out = DMatrix::zeros(r, n - r);
        for (d, col) in (r..n).enumerate() {
            let mut rhs = self.r.view((0, col), (r, 1)).column(0).into_owned();
            back_substitute(&r11, &mut rhs);
            out.set_column(d, &rhs);
        }
        out
    }

    /// Diagonal of `(R11ᵀR11)⁻¹` in original column order (zeros for
    /// dependent columns); scaled by a residual variance this gives
    /// coefficient variances.
    pub fn unscaled_covariance_diag(&self) -> DVector<f64> {
        let r = self.rank;
        let r11 = self.r.view((0, 0), (r, r)).into_owned();
        let mut out = DVector::zeros(self.ncols());
        // rows of R11⁻¹ give the diagonal of R⁻¹R⁻ᵀ
        let mut inv = DMatrix::identity(r, r);
        for c in 0..r {
            let mut col = inv.column(c).into_owned();
            back_substitute(&r11, &mut col);
            inv.set_column(c, &col);
        }
        for (k, &col) in self.independent().iter().enumerate() {
            out[col] = inv.row(k).norm_squared();
        }
        out
    }
}

/// Solves `R x = y` in place for upper-triangular `R`.
pub fn back_substitute(r: &DMatrix<f64>, y: &mut DVector<f64>) {
    let n = y.len();
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= r[(i, j)] * y[j];
        }
        y[i] = s / r[(i, i)];
    }
}

/// Singular values of `a`, sorted descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Numerical rank: count of singular values above `rel_tol * σ_max`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    match sv.first() {
        Some(&max) if max > 0.0 => sv.iter().filter(|&&s| s > rel_tol * max).count(),
        _ => 0,
    }
}

/// 2-norm condition number; infinite when the smallest singular value is zero.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        _ => f64::INFINITY,
    }
}

/// Condition number after scaling every column to unit norm; zero columns
/// make the result infinite.
pub fn scaled_condition_number(a: &DMatrix<f64>) -> f64 {
    let mut scaled = a.clone();
    for mut col in scaled.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 {
            return f64::INFINITY;
        }
        col /= norm;
    }
    condition_number(&scaled)
}

/// `[v]ₓ`, the cross-product matrix.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Symmetric matrix from `[xx, xy, xz, yy, yz, zz]`.
pub fn sym_from6(e: &[f64; 6]) -> Matrix3<f64> {
    Matrix3::new(e[0], e[1], e[2], e[1], e[3], e[4], e[2], e[4], e[5])
}

/// `[xx, xy, xz, yy, yz, zz]` of a (nominally symmetric) matrix.
pub fn sym_to6(m: &Matrix3<f64>) -> [f64; 6] {
    [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)], m[(2, 2)]]
}

pub fn is_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
    (r.transpose() * r - Matrix3::identity()).amax() <= tol && (r.determinant() - 1.0).abs() <= tol
}
