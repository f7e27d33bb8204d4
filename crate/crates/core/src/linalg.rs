//! Sparse and dense symmetric linear algebra used by the eigensolver.

use crate::error::{Result, SloshError};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..n_rows {
            let (lo, hi) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&k| cols[k]);
            let start = col_idx.len();
            for &k in &order {
                if col_idx.len() > start && *col_idx.last().unwrap() == cols[k] {
                    *values.last_mut().unwrap() += vals[k];
                } else {
                    col_idx.push(cols[k]);
                    values.push(vals[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n_rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum::<f64>()
            })
            .sum()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let triplets: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, &triplets)
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Submatrix on the given rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut triplets = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            let (cs, vs) = self.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                if col_map[c] != usize::MAX {
                    triplets.push((ri, col_map[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), &triplets)
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n_rows * self.n_cols];
        for (i, j, v) in self.iter() {
            dense[i * self.n_cols + j] = v;
        }
        dense
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Envelope (profile) Cholesky factor `A = L Lᵀ` of a sparse SPD matrix.
///
/// Row `i` of `L` is stored from its first structural nonzero to the
/// diagonal, so fill stays inside the envelope of the natural ordering.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Number of stored entries the factor of `a` would need.
    pub fn envelope_size(a: &CsrMatrix) -> usize {
        (0..a.n_rows())
            .map(|i| {
                let first = a.row(i).0.first().copied().unwrap_or(i).min(i);
                i - first + 1
            })
            .sum()
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(SloshError::Factorization(format!(
                "matrix is {} x {}, not square",
                n,
                a.n_cols()
            )));
        }
        let mut first = Vec::with_capacity(n);
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            let f = a.row(i).0.first().copied().unwrap_or(i).min(i);
            first.push(f);
            start.push(start[i] + i - f + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (head, tail) = data.split_at_mut(row_i);
                let lj = &head[start[j] + k0 - fj..start[j] + j - fj];
                let li = &tail[k0 - fi..j - fi];
                let s = dot(li, lj);
                let diag = head[start[j] + j - fj];
                tail[j - fi] = (tail[j - fi] - s) / diag;
            }
            let li = &data[row_i..row_i + i - fi];
            let pivot = data[row_i + i - fi] - dot(li, li);
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(SloshError::Factorization(format!(
                    "nonpositive pivot {pivot:e} at row {i}"
                )));
            }
            data[row_i + i - fi] = pivot.sqrt();
        }
        Ok(SkylineCholesky {
            n,
            first,
            start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s = dot(&row[..i - fi], &b[fi..i]);
            b[i] = (b[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            b[i] /= row[i - fi];
            let xi = b[i];
            for (bk, &l) in b[fi..i].iter_mut().zip(&row[..i - fi]) {
                *bk -= l * xi;
            }
        }
    }
}

/// Jacobi-preconditioned conjugate gradients; returns the iterate and the
/// final relative residual.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let n = a.n_rows();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0.0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SloshError::Factorization(
                "conjugate gradients met a nonpositive curvature direction".into(),
            ));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let res = norm(&r) / bnorm;
        if res <= tol {
            return Ok((x, res));
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let res = norm(&residual(a, &x, b)) / bnorm;
    if res <= tol {
        Ok((x, res))
    } else {
        Err(SloshError::Factorization(format!(
            "conjugate gradients stalled at relative residual {res:e}"
        )))
    }
}

/// `b − A x`.
pub fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
}

/// Dense square matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], x))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (self.at(i, j) + self.at(j, i));
                *self.at_mut(i, j) = v;
                *self.at_mut(j, i) = v;
            }
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i, j)).collect()
    }
}

/// Lower Cholesky factor of a dense SPD matrix.
pub fn dense_cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.n;
    let mut l = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
            if i == j {
                let pivot = a.at(i, i) - s;
                if !(pivot > 0.0) || !pivot.is_finite() {
                    return Err(SloshError::IllConditioned(format!(
                        "Cholesky pivot {pivot:e} at row {i}"
                    )));
                }
                *l.at_mut(i, i) = pivot.sqrt();
            } else {
                *l.at_mut(i, j) = (a.at(i, j) - s) / l.at(j, j);
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_substitute(l: &DenseMatrix, b: &mut [f64]) {
    let n = l.n;
    for i in 0..n {
        let s = dot(&l.data[i * n..i * n + i], &b[..i]);
        b[i] = (b[i] - s) / l.at(i, i);
    }
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn backward_substitute_transpose(l: &DenseMatrix, b: &mut [f64]) {
    let n = l.n;
    for i in (0..n).rev() {
        b[i] /= l.at(i, i);
        let xi = b[i];
        for k in 0..i {
            b[k] -= l.at(i, k) * xi;
        }
    }
}

/// Householder reduction `A = Q T Qᵀ` of a symmetric matrix to tridiagonal
/// form. Returns the diagonal, the superdiagonal and `Q`.
pub fn tridiagonalize(a: &DenseMatrix) -> (Vec<f64>, Vec<f64>, DenseMatrix) {
    let n = a.n;
    let mut a = a.clone();
    let mut q = DenseMatrix::identity(n);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        let xnorm = (m..n).map(|i| a.at(i, k) * a.at(i, k)).sum::<f64>().sqrt();
        let tail = (m + 1..n).map(|i| a.at(i, k).abs()).fold(0.0, f64::max);
        if xnorm == 0.0 || tail == 0.0 {
            continue;
        }
        let x0 = a.at(m, k);
        let alpha = if x0 >= 0.0 { -xnorm } else { xnorm };
        for i in m..n {
            v[i] = a.at(i, k);
        }
        v[m] -= alpha;
        let vnorm2: f64 = (m..n).map(|i| v[i] * v[i]).sum();
        let beta = 2.0 / vnorm2;
        for i in m..n {
            p[i] = beta * (m..n).map(|j| a.at(i, j) * v[j]).sum::<f64>();
        }
        let kappa = 0.5 * beta * (m..n).map(|i| p[i] * v[i]).sum::<f64>();
        for i in m..n {
            p[i] -= kappa * v[i];
        }
        for i in m..n {
            for j in m..n {
                *a.at_mut(i, j) -= v[i] * p[j] + p[i] * v[j];
            }
        }
        *a.at_mut(m, k) = alpha;
        *a.at_mut(k, m) = alpha;
        for i in m + 1..n {
            *a.at_mut(i, k) = 0.0;
            *a.at_mut(k, i) = 0.0;
        }
        for i in 0..n {
            let t = beta * (m..n).map(|j| q.at(i, j) * v[j]).sum::<f64>();
            for j in m..n {
                *q.at_mut(i, j) -= t * v[j];
            }
        }
    }
    let d = (0..n).map(|i| a.at(i, i)).collect();
    let e = (0..n.saturating_sub(1)).map(|i| a.at(i, i + 1)).collect();
    (d, e, q)
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit-shift QR
/// with Wilkinson shifts. Rotations are accumulated into the columns of `q`.
pub fn tridiagonal_qr(d: &mut [f64], e: &mut [f64], q: &mut DenseMatrix) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let max_sweeps = 60 * n;
    let mut sweeps = 0;
    loop {
        for i in 0..n - 1 {
            if e[i].abs() <= f64::EPSILON * (d[i].abs() + d[i + 1].abs()) {
                e[i] = 0.0;
            }
        }
        let mut h = n - 1;
        while h > 0 && e[h - 1] == 0.0 {
            h -= 1;
        }
        if h == 0 {
            return Ok(());
        }
        let mut l = h - 1;
        while l > 0 && e[l - 1] != 0.0 {
            l -= 1;
        }
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(SloshError::Numeric(
                "tridiagonal QR iteration did not converge".into(),
            ));
        }
        let dd = 0.5 * (d[h - 1] - d[h]);
        let eh = e[h - 1];
        let sign = if dd >= 0.0 { 1.0 } else { -1.0 };
        let mu = d[h] - eh * eh / (dd + sign * dd.hypot(eh));
        let mut x = d[l] - mu;
        let mut z = e[l];
        for k in l..h {
            let r = x.hypot(z);
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (x / r, z / r) };
            if k > l {
                e[k - 1] = r;
            }
            let (a, b, ek) = (d[k], d[k + 1], e[k]);
            d[k] = c * c * a + 2.0 * c * s * ek + s * s * b;
            d[k + 1] = s * s * a - 2.0 * c * s * ek + c * c * b;
            e[k] = c * s * (b - a) + (c * c - s * s) * ek;
            if k + 1 < h {
                z = s * e[k + 1];
                e[k + 1] *= c;
                x = e[k];
            }
            let nq = q.n;
            for i in 0..nq {
                let qk = q.at(i, k);
                let qk1 = q.at(i, k + 1);
                *q.at_mut(i, k) = c * qk + s * qk1;
                *q.at_mut(i, k + 1) = -s * qk + c * qk1;
            }
        }
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a dense
/// symmetric matrix.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.n;
    let (mut d, mut e, mut q) = tridiagonalize(a);
    tridiagonal_qr(&mut d, &mut e, &mut q)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = DenseMatrix::from_fn(n, |i, j| q.at(i, order[j]));
    Ok((values, vectors))
}

/// Symmetric-definite pencil `S x = ν M x`: congruence with the Cholesky
/// factor of `M`, then [`symmetric_eigen`]. Eigenvectors are `M`-orthonormal.
pub fn generalized_symmetric_eigen(
    s: &DenseMatrix,
    m: &DenseMatrix,
) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = s.n;
    let l = dense_cholesky(m)?;
    // x holds (L⁻¹ S)ᵀ = S L⁻ᵀ, so C = L⁻¹ x
    let mut x = DenseMatrix::zeros(n);
    for j in 0..n {
        let mut col = s.column(j);
        forward_substitute(&l, &mut col);
        for i in 0..n {
            *x.at_mut(j, i) = col[i];
        }
    }
    let mut c = DenseMatrix::zeros(n);
    for j in 0..n {
        let mut col = x.column(j);
        forward_substitute(&l, &mut col);
        for i in 0..n {
            *c.at_mut(i, j) = col[i];
        }
    }
    c.symmetrize();
    let (values, y) = symmetric_eigen(&c)?;
    let mut vectors = DenseMatrix::zeros(n);
    for j in 0..n {
        let mut col = y.column(j);
        backward_substitute_transpose(&l, &mut col);
        for i in 0..n {
            *vectors.at_mut(i, j) = col[i];
        }
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    fn laplacian_2d(k: usize) -> CsrMatrix {
        let id = |i: usize, j: usize| i * k + j;
        let mut t = Vec::new();
        for i in 0..k {
            for j in 0..k {
                t.push((id(i, j), id(i, j), 4.0));
                if i + 1 < k {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                    t.push((id(i + 1, j), id(i, j), -1.0));
                }
                if j + 1 < k {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(k * k, k * k, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m =
            CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.matvec(&[1.0, 2.0, 3.0]), vec![6.5, -2.0]);
        let sub = m.submatrix(&[0], &[2, 0]);
        assert_eq!(sub.to_dense(), vec![1.5, 2.0]);
    }

    #[test]
    fn skyline_round_trip() {
        let a = laplacian_2d(9);
        let chol = SkylineCholesky::factor(&a).unwrap();
        let mut seed = 7;
        let w: Vec<f64> = (0..a.n_rows()).map(|_| lcg(&mut seed)).collect();
        let mut b = a.matvec(&w);
        chol.solve_in_place(&mut b);
        let err = b
            .iter()
            .zip(&w)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
        let mut zero = vec![0.0; a.n_rows()];
        chol.solve_in_place(&mut zero);
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn skyline_rejects_singular() {
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(SloshError::Factorization(_))
        ));
    }

    #[test]
    fn pcg_matches_direct() {
        let a = laplacian_2d(12);
        let b: Vec<f64> = (0..a.n_rows()).map(|i| (i as f64).sin()).collect();
        let (x, res) = pcg(&a, &b, 1e-13, 1000).unwrap();
        assert!(res <= 1e-13);
        let mut y = b.clone();
        SkylineCholesky::factor(&a).unwrap().solve_in_place(&mut y);
        let err = x
            .iter()
            .zip(&y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn eigen_of_path_laplacian() {
        let n = 40;
        let a = DenseMatrix {
            n,
            data: laplacian_1d(n).to_dense(),
        };
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        for (k, &v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13, "{k}: {v} vs {exact}");
        }
        for j in 0..n {
            let x = vecs.column(j);
            let ax = a.matvec(&x);
            let r = ax
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - vals[j] * q).abs())
                .fold(0.0, f64::max);
            assert!(r < 1e-12);
        }
        for i in 0..n {
            for j in 0..n {
                let g = dot(&vecs.column(i), &vecs.column(j));
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_of_random_matrix_with_repeats() {
        let n = 30;
        let mut seed = 11;
        let mut a = DenseMatrix::from_fn(n, |_, _| lcg(&mut seed));
        a.symmetrize();
        // repeated eigenvalue 3 on a 2-dimensional block
        let mut b = DenseMatrix::zeros(n + 2);
        for i in 0..n {
            for j in 0..n {
                *b.at_mut(i, j) = a.at(i, j);
            }
        }
        *b.at_mut(n, n) = 3.0;
        *b.at_mut(n + 1, n + 1) = 3.0;
        let (vals, vecs) = symmetric_eigen(&b).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = (0..n + 2).map(|i| b.at(i, i)).sum();
        assert!((vals.iter().sum::<f64>() - trace).abs() < 1e-12);
        for j in 0..n + 2 {
            let x = vecs.column(j);
            let bx = b.matvec(&x);
            let r = bx
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - vals[j] * q).abs())
                .fold(0.0, f64::max);
            assert!(r < 1e-12);
        }
        assert_eq!(vals.iter().filter(|&&v| (v - 3.0).abs() < 1e-12).count(), 2);
    }

    #[test]
    fn generalized_pencil() {
        let n = 12;
        let mut seed = 3;
        let mut s = DenseMatrix::from_fn(n, |_, _| lcg(&mut seed));
        s.symmetrize();
        let mut m = DenseMatrix::from_fn(n, |_, _| 0.1 * lcg(&mut seed));
        m.symmetrize();
        for i in 0..n {
            *m.at_mut(i, i) += 2.0;
        }
        let (vals, vecs) = generalized_symmetric_eigen(&s, &m).unwrap();
        for j in 0..n {
            let x = vecs.column(j);
            let sx = s.matvec(&x);
            let mx = m.matvec(&x);
            let r = sx
                .iter()
                .zip(&mx)
                .map(|(p, q)| (p - vals[j] * q).abs())
                .fold(0.0, f64::max);
            assert!(r < 1e-12);
            assert!((dot(&x, &mx) - 1.0).abs() < 1e-12);
        }
        let not_pd = DenseMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { 1.0 });
        assert!(matches!(
            generalized_symmetric_eigen(&s, &not_pd),
            Err(SloshError::IllConditioned(_))
        ));
    }
}
