//! Dense kernels: ridge least squares for the amplitudes, residuals and
//! cosine scoring of candidate columns.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `L × M` matrix whose column `i` is base `i` evaluated on the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn empty(rows: usize) -> Self {
        DesignMatrix { values: DMatrix::zeros(rows, 0) }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::empty(rows);
        for c in columns {
            m.push_column(c);
        }
        m
    }

    pub fn from_matrix(values: DMatrix<f64>) -> Self {
        DesignMatrix { values }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let rows = self.rows();
        &self.values.as_slice()[i * rows..(i + 1) * rows]
    }

    pub fn push_column(&mut self, column: &[f64]) {
        assert_eq!(column.len(), self.rows(), "column length must match row count");
        let m = std::mem::replace(&mut self.values, DMatrix::zeros(0, 0));
        let c = m.ncols();
        let mut m = m.insert_column(c, 0.0);
        m.column_mut(c).copy_from_slice(column);
        self.values = m;
    }

    pub fn set_column(&mut self, i: usize, column: &[f64]) {
        self.values.column_mut(i).copy_from_slice(column);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `F a`
    pub fn apply(&self, a: &[f64]) -> Vec<f64> {
        assert_eq!(a.len(), self.cols());
        let mut out = vec![0.0; self.rows()];
        for (i, &ai) in a.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.column(i)) {
                *o += ai * v;
            }
        }
        out
    }

    /// `Fᵀ v`
    pub fn transpose_apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols()).map(|i| dot(self.column(i), v)).collect()
    }

    /// `FᵀF + λI` and `Fᵀy`.
    pub fn normal_system(&self, y: &[f64], lambda: f64) -> NormalSystem {
        let mut gram = self.values.tr_mul(&self.values);
        for i in 0..gram.nrows() {
            gram[(i, i)] += lambda;
        }
        NormalSystem { gram, rhs: DVector::from_vec(self.transpose_apply(y)), lambda }
    }
}

/// Regularized normal equations `(FᵀF + λI) a = Fᵀy`.
#[derive(Debug, Clone)]
pub struct NormalSystem {
    pub gram: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub lambda: f64,
}

impl NormalSystem {
    /// Replaces row and column `i` of the Gram matrix and entry `i` of the
    /// right-hand side after column `i` of `f` changed.
    pub fn update_column(&mut self, f: &DesignMatrix, y: &[f64], i: usize) {
        self.replace_column(f, y, i, f.column(i));
    }

    /// As [`update_column`](Self::update_column), for a `column` that is not
    /// stored in `f`. Entries against the other columns of `f` are recomputed.
    pub fn replace_column(&mut self, f: &DesignMatrix, y: &[f64], i: usize, column: &[f64]) {
        for j in 0..f.cols() {
            let g = if j == i { dot(column, column) } else { dot(column, f.column(j)) };
            self.gram[(i, j)] = g;
            self.gram[(j, i)] = g;
        }
        self.gram[(i, i)] += self.lambda;
        self.rhs[i] = dot(column, y);
    }

    /// Solves by Cholesky with one step of iterative refinement, falling
    /// back to a least-norm SVD solve.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let m = self.gram.nrows();
        if m == 0 {
            return Ok(Vec::new());
        }
        if self.gram.iter().chain(self.rhs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("normal equations contain non-finite entries".into()));
        }
        if let Some(chol) = self.gram.clone().cholesky() {
            let mut a = chol.solve(&self.rhs);
            let correction = chol.solve(&(&self.rhs - &self.gram * &a));
            a += correction;
            if a.iter().all(|v| v.is_finite()) {
                return Ok(a.as_slice().to_vec());
            }
        }
        let svd = self.gram.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let tol = smax * (m as f64) * f64::EPSILON;
        if self.lambda == 0.0 && svd.rank(tol) < m {
            return Err(Error::Rank { cols: m });
        }
        let a = svd.solve(&self.rhs, tol).map_err(|_| Error::Rank { cols: m })?;
        Ok(a.as_slice().to_vec())
    }
}

/// `argmin_a ‖y − F a‖² + λ‖a‖²`.
///
/// ```
/// use lieibvp::linalg::{ridge_solve, DesignMatrix};
///
/// let f = DesignMatrix::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
/// let a = ridge_solve(&f, &[2.0, -4.0], 1.0).unwrap();
/// assert_eq!(a, vec![1.0, -2.0]);
/// ```
pub fn ridge_solve(f: &DesignMatrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("ridge parameter must be non-negative, got {lambda}")));
    }
    assert_eq!(y.len(), f.rows(), "target length must match row count");
    f.normal_system(y, lambda).solve()
}

/// `y − F a` and the pooled MSE `‖r‖²/L`.
pub fn residual(y: &[f64], f: &DesignMatrix, a: &[f64]) -> (Vec<f64>, f64) {
    let fa = f.apply(a);
    let r: Vec<f64> = y.iter().zip(&fa).map(|(y, p)| y - p).collect();
    let mse = mse(&r);
    (r, mse)
}

pub fn mse(r: &[f64]) -> f64 {
    if r.is_empty() {
        0.0
    } else {
        dot(r, r) / r.len() as f64
    }
}

/// `‖y − F a‖² + λ‖a‖²`
pub fn regularized_objective(y: &[f64], f: &DesignMatrix, a: &[f64], lambda: f64) -> f64 {
    let (r, _) = residual(y, f, a);
    dot(&r, &r) + lambda * dot(a, a)
}

/// Stationarity of the ridge problem: returns `(‖Fᵀ(Fa−y)+λa‖∞, ‖Fᵀy‖∞)`.
pub fn stationarity(f: &DesignMatrix, y: &[f64], a: &[f64], lambda: f64) -> (f64, f64) {
    let fa = f.apply(a);
    let diff: Vec<f64> = fa.iter().zip(y).map(|(p, y)| p - y).collect();
    let g = f.transpose_apply(&diff);
    let lhs = g.iter().zip(a).map(|(g, a)| (g + lambda * a).abs()).fold(0.0, f64::max);
    let fty = f.transpose_apply(y).iter().map(|v| v.abs()).fold(0.0, f64::max);
    (lhs, fty)
}

/// Candidates whose norm falls below `1e-12·sqrt(L)` score zero.
pub fn norm_floor(len: usize) -> f64 {
    1e-12 * (len as f64).sqrt()
}

/// `|⟨r, v⟩| / (‖r‖ ‖v‖)`, in `[0, 1]`.
pub fn cosine_score(r: &[f64], v: &[f64]) -> Result<f64> {
    let rn = norm(r);
    if rn == 0.0 {
        return Err(Error::ZeroResidual);
    }
    Ok(cosine_score_with_norm(r, rn, v))
}

/// [`cosine_score`] with a precomputed, non-zero `‖r‖`.
pub fn cosine_score_with_norm(r: &[f64], r_norm: f64, v: &[f64]) -> f64 {
    let vn = norm(v);
    if !(vn >= norm_floor(v.len())) || !vn.is_finite() {
        return 0.0;
    }
    let s = dot(r, v).abs() / (r_norm * vn);
    if s.is_finite() {
        s.min(1.0)
    } else {
        0.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
