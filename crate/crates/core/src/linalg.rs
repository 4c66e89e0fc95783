//! Small dense kernels: determinants, Gram matrices, leading principal
//! minors, the generalized cross product and Gram-Schmidt QR.
//!
//! Everything here targets `n <= 32` and favors straightforward O(n^3) or
//! O(n^4) loops over blocked algorithms.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("first column has norm {norm}, at or below the tolerance")]
    ZeroFirstColumn { norm: f64 },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatN {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatN {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatN {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = MatN::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        Ok(MatN {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Matrix whose j-th column is `cols[j]`.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(LinalgError::DimensionMismatch(
                "columns have different lengths".into(),
            ));
        }
        let mut m = MatN::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> MatN {
        let mut t = MatN::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &MatN) -> Result<MatN, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = MatN::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> MatN {
        let mut m = MatN::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = self[(i, j)];
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius distance to another matrix of the same shape.
    pub fn frobenius_distance(&self, other: &MatN) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for MatN {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for MatN {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant(m: &MatN) -> Result<f64, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NonSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    Ok(lu_determinant(m.clone()))
}

fn lu_determinant(mut a: MatN) -> f64 {
    let n = a.rows;
    let mut det = 1.0;
    for k in 0..n {
        let pivot_row = (k..n)
            .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
            .unwrap_or(k);
        let pivot = a[(pivot_row, k)];
        if pivot == 0.0 {
            return 0.0;
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
            }
            det = -det;
        }
        det *= pivot;
        for i in k + 1..n {
            let factor = a[(i, k)] / pivot;
            if factor != 0.0 {
                for j in k + 1..n {
                    a[(i, j)] -= factor * a[(k, j)];
                }
            }
        }
    }
    det
}

/// Generalized cross product of `n - 1` vectors in `R^n`.
///
/// Component `k` is the cofactor of the formal last column in
/// `det [v_1 | ... | v_{n-1} | e]`, so `<P(v), w> = det [v_1 | ... | v_{n-1} | w]`.
pub fn generalized_cross(vs: &[Vec<f64>]) -> Result<Vec<f64>, LinalgError> {
    let n = vs.len() + 1;
    if n < 2 {
        return Err(LinalgError::DimensionMismatch(
            "need at least one vector".into(),
        ));
    }
    if let Some(bad) = vs.iter().find(|v| v.len() != n) {
        return Err(LinalgError::DimensionMismatch(format!(
            "{} vectors require length {n}, got {}",
            n - 1,
            bad.len()
        )));
    }
    let m = n - 1;
    Ok((0..n)
        .map(|k| {
            // minor with row k deleted, entries (i, j) = vs[j][i]
            let mut minor = MatN::zeros(m, m);
            for (r, i) in (0..n).filter(|&i| i != k).enumerate() {
                for (j, v) in vs.iter().enumerate() {
                    minor[(r, j)] = v[i];
                }
            }
            // cofactor sign (-1)^{(k+1) + n} in 1-based indexing
            let sign = if (k + 1 + n).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sign * lu_determinant(minor)
        })
        .collect())
}

/// Matrix of pairwise inner products `<v_i, v_j>`.
pub fn gram_matrix(cols: &[Vec<f64>]) -> Result<MatN, LinalgError> {
    let len = cols.first().map_or(0, Vec::len);
    if cols.iter().any(|c| c.len() != len) {
        return Err(LinalgError::DimensionMismatch(
            "vectors have different lengths".into(),
        ));
    }
    let m = cols.len();
    let mut g = MatN::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = dot(&cols[i], &cols[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// `[det M_1, ..., det M_n]` where `M_i` is the leading `i x i` block.
/// One partial-pivoting LU per block; for the sizes supported here that is
/// cheaper to audit than a shared sweep.
pub fn leading_principal_minors(b: &MatN) -> Result<Vec<f64>, LinalgError> {
    if !b.is_square() {
        return Err(LinalgError::NonSquare {
            rows: b.rows,
            cols: b.cols,
        });
    }
    Ok((1..=b.rows)
        .map(|k| lu_determinant(b.leading_block(k)))
        .collect())
}

/// `det(V_jᵀV_j) / prod_{i <= j} |v_i|^2` for `j = 1..=m`, where `V_j` holds
/// the first `j` columns.
///
/// Evaluated by Cauchy-Binet as a sum of squared `j x j` minors of the
/// normalized columns, so no Gram product is formed and values far below
/// `f64::EPSILON` are resolved. Cost grows like `2^n`; fine for `n <= 16`.
pub fn normalized_gram_minors(cols: &[Vec<f64>]) -> Result<Vec<f64>, LinalgError> {
    let n = cols.first().map_or(0, Vec::len);
    if cols.iter().any(|c| c.len() != n) {
        return Err(LinalgError::DimensionMismatch(
            "vectors have different lengths".into(),
        ));
    }
    let unit: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let len = norm(c);
            if len > 0.0 {
                c.iter().map(|x| x / len).collect()
            } else {
                c.clone()
            }
        })
        .collect();
    let mut out = Vec::with_capacity(cols.len());
    for j in 1..=cols.len().min(n) {
        let mut rows: Vec<usize> = (0..j).collect();
        let mut acc = 0.0;
        loop {
            let mut sub = MatN::zeros(j, j);
            for (r, &row) in rows.iter().enumerate() {
                for (c, col) in unit.iter().take(j).enumerate() {
                    sub[(r, c)] = col[row];
                }
            }
            let d = lu_determinant(sub);
            acc += d * d;
            // next j-subset of 0..n in lexicographic order
            let Some(k) = (0..j).rev().find(|&k| rows[k] < n - j + k) else {
                break;
            };
            rows[k] += 1;
            for i in k + 1..j {
                rows[i] = rows[i - 1] + 1;
            }
        }
        out.push(acc);
    }
    out.resize(cols.len(), 0.0);
    Ok(out)
}

/// Default relative dependence tolerance for [`gram_schmidt_qr`].
pub const DEFAULT_QR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    /// `n x rank` matrix with orthonormal columns.
    pub q: MatN,
    /// `rank x rank` upper-triangular factor with positive diagonal.
    pub r_mat: MatN,
    /// One flag per input column. The first flagged column is the one found
    /// dependent; the factorization stops there and later columns are
    /// flagged as excluded.
    pub rank_flags: Vec<bool>,
}

impl QrFactors {
    pub fn rank(&self) -> usize {
        self.q.n_cols()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rank()).map(|i| self.r_mat[(i, i)]).collect()
    }

    /// Index of the first dependent column, if any.
    pub fn dependent_at(&self) -> Option<usize> {
        self.rank_flags.iter().position(|&f| f)
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// A column is dependent when its residual norm is at most `tol` times its
/// original norm; the factorization stops at the first such column.
pub fn gram_schmidt_qr(cols: &[Vec<f64>], tol: f64) -> Result<QrFactors, LinalgError> {
    let n = cols.first().map_or(0, Vec::len);
    if cols.iter().any(|c| c.len() != n) {
        return Err(LinalgError::DimensionMismatch(
            "columns have different lengths".into(),
        ));
    }
    if cols.len() > n {
        return Err(LinalgError::DimensionMismatch(format!(
            "{} columns exceed ambient dimension {n}",
            cols.len()
        )));
    }
    if let Some(first) = cols.first() {
        let first_norm = norm(first);
        if first_norm <= tol || !first_norm.is_finite() {
            return Err(LinalgError::ZeroFirstColumn { norm: first_norm });
        }
    }

    let mut us: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    let mut r_entries: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    let mut rank_flags = vec![false; cols.len()];
    for (j, v) in cols.iter().enumerate() {
        let mut w = v.clone();
        let mut coeffs = vec![0.0; us.len()];
        for _pass in 0..2 {
            for (i, u) in us.iter().enumerate() {
                let c = dot(u, &w);
                coeffs[i] += c;
                for (wk, uk) in w.iter_mut().zip(u) {
                    *wk -= c * uk;
                }
            }
        }
        let residual = norm(&w);
        if residual <= tol * norm(v) {
            rank_flags[j..].iter_mut().for_each(|f| *f = true);
            break;
        }
        us.push(w.iter().map(|x| x / residual).collect());
        coeffs.push(residual);
        r_entries.push(coeffs);
    }

    let rank = us.len();
    let q = MatN::from_columns(&us)?;
    let q = if rank == 0 { MatN::zeros(n, 0) } else { q };
    let mut r_mat = MatN::zeros(rank, rank);
    for (j, col) in r_entries.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            r_mat[(i, j)] = v;
        }
    }
    Ok(QrFactors {
        q,
        r_mat,
        rank_flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example_columns(t: f64) -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 2.0 * t, 3.0 * t * t, 4.0 * t * t * t],
            vec![0.0, 2.0, 6.0 * t, 12.0 * t * t],
            vec![0.0, 0.0, 6.0, 24.0 * t],
            vec![0.0, 0.0, 0.0, 24.0],
        ]
    }

    #[test]
    fn determinant_basics() {
        assert_eq!(determinant(&MatN::identity(4)).unwrap(), 1.0);
        for t in [-1.0, 0.0, 0.3, 2.0] {
            let a = MatN::from_columns(&worked_example_columns(t)).unwrap();
            let d = determinant(&a).unwrap();
            assert!((d - 288.0).abs() <= 1e-10 * 288.0, "t={t}: {d}");
        }
        let m = MatN::from_rows(&[
            vec![0.3, -1.2, 2.5],
            vec![1.1, 0.4, -0.7],
            vec![0.3, -1.2, 2.5],
        ])
        .unwrap();
        let bound: f64 = (0..3).map(|i| norm(m.row(i))).product();
        assert!(determinant(&m).unwrap().abs() <= 1e-12 * bound);
        assert!(matches!(
            determinant(&MatN::zeros(2, 3)),
            Err(LinalgError::NonSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn cross_product_small_cases() {
        let e1 = vec![1.0, 0.0, 0.0];
        let e2 = vec![0.0, 1.0, 0.0];
        assert_eq!(generalized_cross(&[e1, e2]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(
            generalized_cross(&[vec![3.0, 5.0]]).unwrap(),
            vec![-5.0, 3.0]
        );
        assert!(generalized_cross(&[vec![1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn cross_product_matches_ordinary_cross() {
        let a = [0.3, -1.7, 2.2];
        let b = [1.4, 0.5, -0.9];
        let expected = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let p = generalized_cross(&[a.to_vec(), b.to_vec()]).unwrap();
        for k in 0..3 {
            assert!((p[k] - expected[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn gram_matrix_cases() {
        let g = gram_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(g, MatN::identity(2));
        let g = gram_matrix(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(g[(0, 0)], 25.0);
        let minors =
            leading_principal_minors(&gram_matrix(&worked_example_columns(0.0)).unwrap()).unwrap();
        assert_eq!(&minors[..3], &[1.0, 4.0, 144.0]);
    }

    #[test]
    fn normalized_minors_match_gram_route() {
        let cols = worked_example_columns(1.0);
        let v = normalized_gram_minors(&cols).unwrap();
        let scales = [
            30.0,
            30.0 * 184.0,
            30.0 * 184.0 * 612.0,
            30.0 * 184.0 * 612.0 * 576.0,
        ];
        for (i, want) in [30.0, 620.0, 9936.0, 82944.0].iter().enumerate() {
            assert!((v[i] * scales[i] - want).abs() < 1e-9 * want, "{v:?}");
        }
        // dependent third column resolves to (nearly) exact zero
        let c = vec![
            vec![1.0, 2.0, 0.5],
            vec![0.3, -1.0, 2.0],
            vec![1.3, 1.0, 2.5],
        ];
        let v = normalized_gram_minors(&c).unwrap();
        assert!(v[1] > 0.1 && v[2] < 1e-30, "{v:?}");
        // more columns than rows
        let v = normalized_gram_minors(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(v, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn minors_of_simple_matrices() {
        assert_eq!(
            leading_principal_minors(&MatN::identity(5)).unwrap(),
            vec![1.0; 5]
        );
        let d = MatN::from_rows(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 3.0, 0.0],
            vec![0.0, 0.0, 4.0],
        ])
        .unwrap();
        assert_eq!(leading_principal_minors(&d).unwrap(), vec![2.0, 6.0, 24.0]);
    }

    #[test]
    fn minors_of_worked_example_at_one() {
        // polynomial values at t = 1: 1+4+9+16, 4+36+180+256+144, 144+2304+5184+2304, 288^2
        let b = gram_matrix(&worked_example_columns(1.0)).unwrap();
        let minors = leading_principal_minors(&b).unwrap();
        let expected = [30.0, 620.0, 9936.0, 82944.0];
        for (m, e) in minors.iter().zip(expected) {
            assert!((m - e).abs() <= 1e-10 * e, "{m} vs {e}");
        }
    }

    #[test]
    fn qr_of_standard_basis() {
        let cols: Vec<Vec<f64>> = MatN::identity(3).columns();
        let f = gram_schmidt_qr(&cols, DEFAULT_QR_TOL).unwrap();
        assert_eq!(f.q, MatN::identity(3));
        assert_eq!(f.r_mat, MatN::identity(3));
        assert_eq!(f.rank_flags, vec![false; 3]);
    }

    #[test]
    fn qr_hand_example() {
        let cols = vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]];
        let f = gram_schmidt_qr(&cols, DEFAULT_QR_TOL).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected_r = MatN::from_rows(&[vec![2f64.sqrt(), s], vec![0.0, s]]).unwrap();
        assert!(f.r_mat.frobenius_distance(&expected_r) < 1e-12);
        let expected_q = MatN::from_columns(&[vec![s, s, 0.0], vec![-s, s, 0.0]]).unwrap();
        assert!(f.q.frobenius_distance(&expected_q) < 1e-12);
        let qtq = f.q.transpose().matmul(&f.q).unwrap();
        assert!(qtq.frobenius_distance(&MatN::identity(2)) < 1e-12);
        let back = f.q.matmul(&f.r_mat).unwrap();
        assert!(back.frobenius_distance(&MatN::from_columns(&cols).unwrap()) < 1e-12);
        assert_eq!(f.r_mat[(1, 0)], 0.0);
    }

    #[test]
    fn qr_flags_dependent_column() {
        let v = vec![0.5, -1.0, 2.0];
        let f = gram_schmidt_qr(&[v.clone(), v.iter().map(|x| 2.0 * x).collect()], 1e-9).unwrap();
        assert_eq!(f.rank_flags, vec![false, true]);
        assert_eq!(f.rank(), 1);
        assert_eq!(f.dependent_at(), Some(1));
    }

    #[test]
    fn qr_rejects_zero_first_column() {
        assert!(matches!(
            gram_schmidt_qr(&[vec![0.0, 0.0], vec![1.0, 0.0]], 1e-9),
            Err(LinalgError::ZeroFirstColumn { .. })
        ));
    }
}
