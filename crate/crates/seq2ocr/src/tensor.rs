//! Minimal dense float64 kernels.
//!
//! Everything downstream (cells, encoder, decoder, training) is built on
//! these few operations, so their semantics are pinned down hard:
//!
//! * float64 only; no broadcasting, explicit shapes everywhere;
//! * reductions accumulate strictly left-to-right, so repeated runs and
//!   reimplementations produce bit-identical results;
//! * softmax / log_softmax are stabilized by max subtraction.
//!
//! Shape mismatches in the checked entry points ([`matmul`]) surface as
//! [`Error::Shape`]. The infallible method forms (`mul_vec`, ...) assert
//! instead and are used internally after boundary validation.

use crate::error::{Error, Result};

/// Dense row-major matrix of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(Error::Shape("ragged rows in Matrix::from_rows".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row vector extracted as an owned [`Vector`].
    pub fn row_vector(&self, i: usize) -> Vector {
        Vector::from_vec(self.row(i).to_vec())
    }

    /// `self * v`. Each output entry is a left-to-right dot product.
    pub fn mul_vec(&self, v: &Vector) -> Vector {
        assert_eq!(self.cols, v.len(), "mul_vec: {}x{} * len {}", self.rows, self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, x) in row.iter().zip(v.as_slice()) {
                acc += a * x;
            }
            *o = acc;
        }
        Vector::from_vec(out)
    }

    /// `self^T * v`. Output entry j accumulates over rows in ascending
    /// order, which keeps the summation order fixed.
    pub fn tr_mul_vec(&self, v: &Vector) -> Vector {
        assert_eq!(self.rows, v.len(), "tr_mul_vec: {}x{}^T * len {}", self.rows, self.cols, v.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let vi = v.as_slice()[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += vi * a;
            }
        }
        Vector::from_vec(out)
    }

    /// Rank-1 update `self += x * y^T`.
    pub fn add_outer(&mut self, x: &Vector, y: &Vector) {
        assert_eq!(self.rows, x.len(), "add_outer rows");
        assert_eq!(self.cols, y.len(), "add_outer cols");
        for i in 0..self.rows {
            let xi = x.as_slice()[i];
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, yj) in row.iter_mut().zip(y.as_slice()) {
                *r += xi * yj;
            }
        }
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add_assign shape");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Dense f64 vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector { data: vec![0.0; len] }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Vector { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector::from_vec(self.data.iter().map(|&x| f(x)).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len(), "vector add length");
        Vector::from_vec(self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect())
    }

    pub fn add_assign(&mut self, other: &Vector) {
        assert_eq!(self.len(), other.len(), "vector add_assign length");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len(), "hadamard length");
        Vector::from_vec(self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect())
    }

    pub fn scale(&self, s: f64) -> Vector {
        self.map(|x| x * s)
    }

    pub fn sum(&self) -> f64 {
        let mut acc = 0.0;
        for &x in &self.data {
            acc += x;
        }
        acc
    }

    pub fn norm_l1(&self) -> f64 {
        let mut acc = 0.0;
        for &x in &self.data {
            acc += x.abs();
        }
        acc
    }

    pub fn norm_l2(&self) -> f64 {
        let mut acc = 0.0;
        for &x in &self.data {
            acc += x * x;
        }
        acc.sqrt()
    }

    /// Index of the largest entry, lowest index on ties. NaN entries are
    /// never selected over finite ones.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, &x) in self.data.iter().enumerate() {
            if x > best_val {
                best_val = x;
                best = i;
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Checked matrix product with left-to-right accumulation per entry.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul: {}x{} * {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    // i-k-j loop order: for a fixed output entry the k contributions
    // still arrive in ascending order, so the sum order is unchanged
    // from a plain dot product.
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn sigmoid(v: &Vector) -> Vector {
    v.map(sigmoid_scalar)
}

pub fn tanh(v: &Vector) -> Vector {
    v.map(f64::tanh)
}

pub fn relu(v: &Vector) -> Vector {
    v.map(|x| if x > 0.0 { x } else { 0.0 })
}

/// Stabilized softmax: exp(x - max) normalized.
pub fn softmax(v: &Vector) -> Vector {
    assert!(!v.is_empty(), "softmax of empty vector");
    let max = v.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps = v.map(|x| (x - max).exp());
    let total = exps.sum();
    exps.scale(1.0 / total)
}

/// log(softmax(v)) computed without forming the softmax.
pub fn log_softmax(v: &Vector) -> Vector {
    assert!(!v.is_empty(), "log_softmax of empty vector");
    let max = v.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for &x in v.as_slice() {
        total += (x - max).exp();
    }
    let log_z = max + total.ln();
    v.map(|x| x - log_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_matrix(rows: usize, cols: usize, rng: &mut crate::rng::Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0))
    }

    /// Naive i-j-k triple loop, kept independent from the shipped kernel.
    fn matmul_oracle(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let mut rng = crate::rng::Rng::new(1);
        let m = random_matrix(3, 3, &mut rng);
        let id = Matrix::identity(3);
        assert_eq!(matmul(&id, &m).unwrap(), m);
        assert_eq!(matmul(&m, &id).unwrap(), m);
    }

    #[test]
    fn matmul_scalar_case() {
        let a = Matrix::from_rows(vec![vec![2.0]]).unwrap();
        let b = Matrix::from_rows(vec![vec![3.0]]).unwrap();
        assert_eq!(matmul(&a, &b).unwrap().get(0, 0), 6.0);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle_exactly() {
        let mut rng = crate::rng::Rng::new(42);
        let a = random_matrix(4, 3, &mut rng);
        let b = random_matrix(3, 2, &mut rng);
        let got = matmul(&a, &b).unwrap();
        let want = matmul_oracle(&a, &b);
        assert_eq!(got, want);
    }

    #[test]
    fn matmul_shape_error() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matmul(&a, &b).is_err());
    }

    #[test]
    fn mul_vec_agrees_with_matmul() {
        let mut rng = crate::rng::Rng::new(5);
        let a = random_matrix(4, 3, &mut rng);
        let v = Vector::from_vec(vec![0.5, -1.25, 2.0]);
        let col = Matrix::from_fn(3, 1, |i, _| v.get(i));
        let want = matmul(&a, &col).unwrap();
        let got = a.mul_vec(&v);
        for i in 0..4 {
            assert_eq!(got.get(i), want.get(i, 0));
        }
    }

    #[test]
    fn tr_mul_vec_matches_explicit_transpose() {
        let mut rng = crate::rng::Rng::new(6);
        let a = random_matrix(4, 3, &mut rng);
        let v = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let t = Matrix::from_fn(3, 4, |i, j| a.get(j, i));
        let want = t.mul_vec(&v);
        let got = a.tr_mul_vec(&v);
        for j in 0..3 {
            assert!((got.get(j) - want.get(j)).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_tanh_relu_anchors() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        let v = Vector::from_vec(vec![0.0, -2.0]);
        assert_eq!(tanh(&v).get(0), 0.0);
        assert_eq!(relu(&v).get(1), 0.0);
        assert_eq!(relu(&Vector::from_vec(vec![3.5])).get(0), 3.5);
    }

    #[test]
    fn sigmoid_symmetry() {
        let mut rng = crate::rng::Rng::new(11);
        for _ in 0..200 {
            let x = rng.uniform(-20.0, 20.0);
            let s = sigmoid_scalar(x) + sigmoid_scalar(-x);
            assert!((s - 1.0).abs() < 1e-15, "x={x} sum={s}");
        }
    }

    #[test]
    fn softmax_uniform_on_constant_input() {
        let v = Vector::from_vec(vec![0.0, 0.0, 0.0]);
        let s = softmax(&v);
        for i in 0..3 {
            assert!((s.get(i) - 1.0 / 3.0).abs() < 1e-15);
        }
        let c = Vector::from_vec(vec![17.25; 5]);
        let s = softmax(&c);
        for i in 0..5 {
            assert!((s.get(i) - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_extreme_logits_do_not_overflow() {
        // Reference values: softmax([1000, 0]) = [1/(1+e^-1000), e^-1000/(1+e^-1000)].
        // e^-1000 is below the smallest subnormal, so in f64 the result
        // rounds to exactly [1, 0].
        let s = softmax(&Vector::from_vec(vec![1000.0, 0.0]));
        assert!(s.is_finite());
        assert_eq!(s.get(0), 1.0);
        assert_eq!(s.get(1), 0.0);
        let ls = log_softmax(&Vector::from_vec(vec![1000.0, 0.0]));
        assert!(ls.is_finite());
        assert_eq!(ls.get(0), 0.0);
        assert_eq!(ls.get(1), -1000.0);
    }

    #[test]
    fn log_softmax_consistent_with_softmax() {
        let mut rng = crate::rng::Rng::new(3);
        for _ in 0..50 {
            let v = Vector::from_vec((0..7).map(|_| rng.uniform(-5.0, 5.0)).collect());
            let s = softmax(&v);
            let ls = log_softmax(&v);
            for i in 0..7 {
                assert!((s.get(i).ln() - ls.get(i)).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(xs in proptest::collection::vec(-50.0f64..50.0, 1..12)) {
            let s = softmax(&Vector::from_vec(xs));
            prop_assert!((s.sum() - 1.0).abs() < 1e-12);
            prop_assert!(s.as_slice().iter().all(|&p| p >= 0.0));
        }

        #[test]
        fn softmax_shift_invariance(
            xs in proptest::collection::vec(-30.0f64..30.0, 2..10),
            c in -100.0f64..100.0,
        ) {
            let v = Vector::from_vec(xs.clone());
            let shifted = Vector::from_vec(xs.iter().map(|x| x + c).collect());
            let a = softmax(&v);
            let b = softmax(&shifted);
            prop_assert_eq!(a.argmax(), b.argmax());
            for i in 0..v.len() {
                prop_assert!((a.get(i) - b.get(i)).abs() < 1e-12);
            }
        }

        #[test]
        fn matmul_associative_within_tolerance(seed in 0u64..500) {
            let mut rng = crate::rng::Rng::new(seed);
            let a = random_matrix(3, 4, &mut rng);
            let b = random_matrix(4, 2, &mut rng);
            let c = random_matrix(2, 5, &mut rng);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for i in 0..3 {
                for j in 0..5 {
                    let x = left.get(i, j);
                    let y = right.get(i, j);
                    let scale = x.abs().max(y.abs()).max(1.0);
                    prop_assert!((x - y).abs() / scale < 1e-10);
                }
            }
        }

        #[test]
        fn finite_in_finite_out(xs in proptest::collection::vec(-700.0f64..700.0, 1..8)) {
            let v = Vector::from_vec(xs);
            prop_assert!(sigmoid(&v).is_finite());
            prop_assert!(tanh(&v).is_finite());
            prop_assert!(relu(&v).is_finite());
            prop_assert!(softmax(&v).is_finite());
            prop_assert!(log_softmax(&v).is_finite());
        }
    }
}
