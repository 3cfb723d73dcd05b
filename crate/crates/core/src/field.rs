//! Prime-field arithmetic and dense linear algebra over F_p.
//!
//! Vectors are rows; a subspace is the row space of a matrix.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fp {
    pub p: u32,
}

impl Fp {
    pub fn new(p: u32) -> Self {
        Fp { p }
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(self, a: u32, mut e: u64) -> u32 {
        let mut acc = 1u32;
        let mut base = a % self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(self, a: u32) -> u32 {
        assert!(a % self.p != 0, "inverse of zero in F_{}", self.p);
        self.pow(a, (self.p - 2) as u64)
    }

    /// The residue (p+1)/2.
    pub fn half(self) -> u32 {
        (self.p + 1) / 2
    }

    pub fn reduce(self, x: i64) -> u32 {
        x.rem_euclid(self.p as i64) as u32
    }

    pub fn dot(self, u: &[u32], v: &[u32]) -> u32 {
        let s: u64 = u.iter().zip(v).map(|(&a, &b)| a as u64 * b as u64).sum();
        (s % self.p as u64) as u32
    }

    pub fn add_vec(self, u: &[u32], v: &[u32]) -> Vec<u32> {
        u.iter().zip(v).map(|(&a, &b)| self.add(a, b)).collect()
    }

    pub fn sub_vec(self, u: &[u32], v: &[u32]) -> Vec<u32> {
        u.iter().zip(v).map(|(&a, &b)| self.sub(a, b)).collect()
    }

    pub fn scale_vec(self, c: u32, v: &[u32]) -> Vec<u32> {
        v.iter().map(|&a| self.mul(c, a)).collect()
    }

    pub fn neg_vec(self, v: &[u32]) -> Vec<u32> {
        v.iter().map(|&a| self.neg(a)).collect()
    }
}

/// Encodes a vector of residues as a base-p integer, first coordinate least significant.
pub fn encode(p: u32, v: &[u32]) -> usize {
    v.iter().rev().fold(0usize, |acc, &x| acc * p as usize + x as usize)
}

pub fn decode(p: u32, mut idx: usize, len: usize) -> Vec<u32> {
    let mut v = Vec::with_capacity(len);
    for _ in 0..len {
        v.push((idx % p as usize) as u32);
        idx /= p as usize;
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[Vec<u32>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<u32>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, f: Fp, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), f.mul(a, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, f: Fp, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0u32; self.cols];
        for (k, &a) in v.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o = f.add(*o, f.mul(a, self.get(k, j)));
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, f: Fp, v: &[u32]) -> Vec<u32> {
        (0..self.rows).map(|r| f.dot(self.row(r), v)).collect()
    }

    pub fn stack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn select_cols(&self, cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                m.set(r, j, self.get(r, c));
            }
        }
        m
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let v: Vec<Vec<u32>> = rows.iter().map(|&r| self.row(r).to_vec()).collect();
        Matrix::from_rows(self.cols, &v)
    }

    /// Reduced row echelon form with zero rows dropped, and the pivot columns.
    pub fn rref(&self, f: Fp) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| m.get(i, c) != 0) else { continue };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(pr * m.cols + j, r * m.cols + j);
                }
            }
            let inv = f.inv(m.get(r, c));
            for j in 0..m.cols {
                let v = f.mul(m.get(r, j), inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let factor = m.get(i, c);
                if factor == 0 {
                    continue;
                }
                for j in 0..m.cols {
                    let v = f.sub(m.get(i, j), f.mul(factor, m.get(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        m.data.truncate(r * m.cols);
        m.rows = r;
        (m, pivots)
    }

    pub fn rank(&self, f: Fp) -> usize {
        self.rref(f).1.len()
    }

    pub fn det(&self, f: Fp) -> u32 {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = 1u32;
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| m.get(i, c) != 0) else { return 0 };
            if pr != c {
                for j in 0..n {
                    m.data.swap(pr * n + j, c * n + j);
                }
                det = f.neg(det);
            }
            let pivot = m.get(c, c);
            det = f.mul(det, pivot);
            let inv = f.inv(pivot);
            for i in c + 1..n {
                let factor = f.mul(m.get(i, c), inv);
                if factor == 0 {
                    continue;
                }
                for j in c..n {
                    let v = f.sub(m.get(i, j), f.mul(factor, m.get(c, j)));
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn inverse(&self, f: Fp) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return Some(Matrix::zeros(0, 0));
        }
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, 1);
        }
        let (r, piv) = aug.rref(f);
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        Some(r.select_cols(&cols))
    }

    /// Basis of {x : x·self = 0} (left kernel), as rows.
    pub fn left_kernel(&self, f: Fp) -> Matrix {
        self.transpose().right_kernel(f)
    }

    /// Basis of {x : self·xᵀ = 0}, as rows.
    pub fn right_kernel(&self, f: Fp) -> Matrix {
        let (r, piv) = self.rref(f);
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &fc in &free {
            let mut v = vec![0u32; self.cols];
            v[fc] = 1;
            for (i, &pc) in piv.iter().enumerate() {
                v[pc] = f.neg(r.get(i, fc));
            }
            basis.push(v);
        }
        Matrix::from_rows(self.cols, &basis)
    }

    /// Some x with x·self = b, if one exists.
    pub fn solve_left(&self, f: Fp, b: &[u32]) -> Option<Vec<u32>> {
        assert_eq!(b.len(), self.cols);
        // selfᵀ xᵀ = bᵀ
        let t = self.transpose();
        let n = t.cols;
        let mut aug = Matrix::zeros(t.rows, n + 1);
        for i in 0..t.rows {
            for j in 0..n {
                aug.set(i, j, t.get(i, j));
            }
            aug.set(i, n, b[i]);
        }
        let (r, piv) = aug.rref(f);
        if piv.last() == Some(&n) {
            return None;
        }
        let mut x = vec![0u32; n];
        for (i, &pc) in piv.iter().enumerate() {
            x[pc] = r.get(i, n);
        }
        Some(x)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }
}

/// Row-space intersection, as an RREF basis.
pub fn intersect(f: Fp, a: &Matrix, b: &Matrix) -> Matrix {
    if a.rows() == 0 || b.rows() == 0 {
        return Matrix::zeros(0, a.cols());
    }
    let k = a.stack(b).left_kernel(f);
    let mut rows = Vec::new();
    for r in 0..k.rows() {
        let alpha = &k.row(r)[..a.rows()];
        rows.push(a.vec_mul(f, alpha));
    }
    Matrix::from_rows(a.cols(), &rows).rref(f).0
}

/// Row-space sum, as an RREF basis.
pub fn span_sum(f: Fp, a: &Matrix, b: &Matrix) -> Matrix {
    a.stack(b).rref(f).0
}

/// Whether `v` lies in the row space of `a`.
pub fn in_span(f: Fp, a: &Matrix, v: &[u32]) -> bool {
    if v.iter().all(|&x| x == 0) {
        return true;
    }
    a.rows() > 0 && a.solve_left(f, v).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_matrix(p: u32, n: usize, m: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(0..p, n * m).prop_map(move |d| Matrix::from_flat(n, m, d))
    }

    #[test]
    fn encode_decode() {
        for i in 0..81 {
            assert_eq!(encode(3, &decode(3, i, 4)), i);
        }
        assert_eq!(decode(3, 5, 2), vec![2, 1]);
    }

    #[test]
    fn det_small() {
        let f = Fp::new(5);
        let m = Matrix::from_rows(2, &[vec![1, 2], vec![3, 4]]);
        assert_eq!(m.det(f), f.reduce(-2));
        assert_eq!(Matrix::identity(3).det(f), 1);
    }

    proptest! {
        #[test]
        fn inverse_is_two_sided(m in arb_matrix(5, 3, 3)) {
            let f = Fp::new(5);
            match m.inverse(f) {
                Some(inv) => {
                    prop_assert_eq!(m.mul(f, &inv), Matrix::identity(3));
                    prop_assert_eq!(inv.mul(f, &m), Matrix::identity(3));
                    prop_assert!(m.det(f) != 0);
                }
                None => prop_assert_eq!(m.det(f), 0),
            }
        }

        #[test]
        fn det_is_multiplicative(a in arb_matrix(7, 3, 3), b in arb_matrix(7, 3, 3)) {
            let f = Fp::new(7);
            prop_assert_eq!(a.mul(f, &b).det(f), f.mul(a.det(f), b.det(f)));
        }

        #[test]
        fn kernel_and_rank(m in arb_matrix(3, 3, 5)) {
            let f = Fp::new(3);
            let k = m.right_kernel(f);
            prop_assert_eq!(k.rows() + m.rank(f), 5);
            prop_assert!(m.mul(f, &k.transpose()).is_zero());
        }

        #[test]
        fn solve_left_solves(m in arb_matrix(3, 3, 4), x in proptest::collection::vec(0u32..3, 3)) {
            let f = Fp::new(3);
            let b = m.vec_mul(f, &x);
            let y = m.solve_left(f, &b).unwrap();
            prop_assert_eq!(m.vec_mul(f, &y), b);
        }

        #[test]
        fn intersection_dimension(a in arb_matrix(3, 2, 4), b in arb_matrix(3, 2, 4)) {
            let f = Fp::new(3);
            let i = intersect(f, &a, &b);
            let dim = a.rank(f) + b.rank(f) - span_sum(f, &a, &b).rows();
            prop_assert_eq!(i.rows(), dim);
            for r in 0..i.rows() {
                prop_assert!(in_span(f, &a, i.row(r)) && in_span(f, &b, i.row(r)));
            }
        }
    }
}
