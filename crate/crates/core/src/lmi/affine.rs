use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::LmiError;

/// Matrix-valued function that is affine in the scalar decision
/// coordinates: `constant + sum_k x_k * terms[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrix {
    constant: DMatrix<f64>,
    terms: BTreeMap<usize, DMatrix<f64>>,
}

impl AffineMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        Self {
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    /// Single-coordinate term `x_coord * m`.
    pub fn coordinate(coord: usize, m: DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        out.terms.insert(coord, m);
        out
    }

    pub fn nrows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn constant_part(&self) -> &DMatrix<f64> {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &DMatrix<f64>)> {
        self.terms.iter().map(|(k, m)| (*k, m))
    }

    fn map(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        Self {
            constant: f(&self.constant),
            terms: self.terms.iter().map(|(k, m)| (*k, f(m))).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|m| m * s)
    }

    pub fn transpose(&self) -> Self {
        self.map(|m| m.transpose())
    }

    /// `lhs * self`.
    pub fn left_mul(&self, lhs: &DMatrix<f64>) -> Self {
        self.map(|m| lhs * m)
    }

    /// `self * rhs`.
    pub fn right_mul(&self, rhs: &DMatrix<f64>) -> Self {
        self.map(|m| m * rhs)
    }

    /// `u * self * v^T`.
    pub fn sandwich(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> Self {
        let vt = v.transpose();
        self.map(|m| u * m * &vt)
    }

    /// `u * self * u^T`.
    pub fn congruence(&self, u: &DMatrix<f64>) -> Self {
        self.sandwich(u, u)
    }

    /// `u * self * v^T + v * self^T * u^T`.
    pub fn symmetric_sandwich(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> Self {
        let vt = v.transpose();
        self.map(|m| {
            let half = u * m * &vt;
            let t = half.transpose();
            half + t
        })
    }

    pub fn add_assign(&mut self, other: &AffineMatrix) {
        assert_eq!(
            (self.nrows(), self.ncols()),
            (other.nrows(), other.ncols()),
            "affine matrix shape mismatch"
        );
        self.constant += &other.constant;
        for (k, m) in &other.terms {
            match self.terms.get_mut(k) {
                Some(existing) => *existing += m,
                None => {
                    self.terms.insert(*k, m.clone());
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &AffineMatrix, s: f64) {
        if s != 0.0 {
            self.add_assign(&other.scale(s));
        }
    }

    /// Block matrix `[[a, b], [c, d]]`.
    pub fn block2x2(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let (r0, c0) = (a.nrows(), a.ncols());
        let (r1, c1) = (d.nrows(), d.ncols());
        assert_eq!((b.nrows(), b.ncols()), (r0, c1));
        assert_eq!((c.nrows(), c.ncols()), (r1, c0));
        let glue = |ma: Option<&DMatrix<f64>>,
                    mb: Option<&DMatrix<f64>>,
                    mc: Option<&DMatrix<f64>>,
                    md: Option<&DMatrix<f64>>| {
            let mut out = DMatrix::zeros(r0 + r1, c0 + c1);
            if let Some(m) = ma {
                out.view_mut((0, 0), (r0, c0)).copy_from(m);
            }
            if let Some(m) = mb {
                out.view_mut((0, c0), (r0, c1)).copy_from(m);
            }
            if let Some(m) = mc {
                out.view_mut((r0, 0), (r1, c0)).copy_from(m);
            }
            if let Some(m) = md {
                out.view_mut((r0, c0), (r1, c1)).copy_from(m);
            }
            out
        };
        let mut coords: Vec<usize> = [a, b, c, d]
            .iter()
            .flat_map(|x| x.terms.keys().copied())
            .collect();
        coords.sort_unstable();
        coords.dedup();
        Self {
            constant: glue(Some(&a.constant), Some(&b.constant), Some(&c.constant), Some(&d.constant)),
            terms: coords
                .into_iter()
                .map(|k| {
                    (
                        k,
                        glue(a.terms.get(&k), b.terms.get(&k), c.terms.get(&k), d.terms.get(&k)),
                    )
                })
                .collect(),
        }
    }

    /// `diag(a, b)`.
    pub fn block_diag(a: &Self, b: &Self) -> Self {
        Self::block2x2(
            a,
            &Self::zeros(a.nrows(), b.ncols()),
            &Self::zeros(b.nrows(), a.ncols()),
            b,
        )
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (k, m) in &self.terms {
            out += m * x[*k];
        }
        out
    }
}

/// Symmetric coefficient matrix stored as its nonzero entries (both
/// triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let mut entries = Vec::new();
        for j in 0..dim {
            for i in 0..dim {
                let v = m[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.add_scaled_to(&mut out, 1.0);
        out
    }

    pub fn add_scaled_to(&self, target: &mut DMatrix<f64>, s: f64) {
        for &(i, j, v) in &self.entries {
            target[(i, j)] += s * v;
        }
    }

    /// Frobenius inner product with a dense matrix.
    pub fn dot(&self, dense: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, v)| v * dense[(i, j)]).sum()
    }

    /// `self * dense`.
    pub fn mul_dense(&self, dense: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, dense.ncols());
        for &(i, j, v) in &self.entries {
            for c in 0..dense.ncols() {
                out[(i, c)] += v * dense[(j, c)];
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| acc.max(e.2.abs()))
    }
}

/// Cone an [`AffineLmi`] must lie in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `F(x) >= 0`.
    PositiveSemidefinite,
    /// `F(x) < 0`.
    NegativeDefinite,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::PositiveSemidefinite => write!(f, ">= 0"),
            Sign::NegativeDefinite => write!(f, "< 0"),
        }
    }
}

/// Named symmetric constraint `constant + sum_k x_k * coeff_k` with a sign
/// requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLmi {
    pub name: String,
    pub sign: Sign,
    pub constant: DMatrix<f64>,
    pub coefficients: Vec<(usize, SparseSym)>,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl AffineLmi {
    /// Builds a constraint from a square affine expression. Every matrix is
    /// symmetrized and all-zero coefficients are dropped.
    pub fn from_affine(name: impl Into<String>, sign: Sign, expr: &AffineMatrix) -> Self {
        assert_eq!(expr.nrows(), expr.ncols(), "LMI must be square");
        let coefficients = expr
            .terms()
            .map(|(k, m)| (k, SparseSym::from_dense(&symmetrize(m))))
            .filter(|(_, s)| s.nnz() > 0)
            .collect();
        Self {
            name: name.into(),
            sign,
            constant: symmetrize(expr.constant_part()),
            coefficients,
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    /// Evaluated matrix, without the sign applied.
    pub fn evaluate(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (k, c) in &self.coefficients {
            c.add_scaled_to(&mut out, x[*k]);
        }
        out
    }

    /// Evaluated matrix oriented so the requirement reads `>= 0` (or `> 0`).
    pub fn evaluate_oriented(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = self.evaluate(x);
        match self.sign {
            Sign::PositiveSemidefinite => m,
            Sign::NegativeDefinite => -m,
        }
    }

    /// Smallest eigenvalue of the oriented matrix; positive iff the
    /// constraint holds strictly.
    pub fn margin(&self, x: &DVector<f64>) -> Result<f64, LmiError> {
        let needed = self.coefficients.iter().map(|(k, _)| k + 1).max().unwrap_or(0);
        if x.len() < needed {
            return Err(LmiError::DimensionMismatch { expected: needed, got: x.len() });
        }
        Ok(min_eigenvalue(&self.evaluate_oriented(x)))
    }

    /// Same constraint with the oriented matrix multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            name: self.name.clone(),
            sign: self.sign,
            constant: &self.constant * factor,
            coefficients: self
                .coefficients
                .iter()
                .map(|(k, c)| {
                    let mut c = c.clone();
                    c.entries.iter_mut().for_each(|e| e.2 *= factor);
                    (*k, c)
                })
                .collect(),
        }
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_diag_and_evaluate() {
        let a = AffineMatrix::coordinate(0, DMatrix::identity(2, 2));
        let b = AffineMatrix::coordinate(1, DMatrix::identity(1, 1)).scale(3.0);
        let d = AffineMatrix::block_diag(&a, &b);
        let x = DVector::from_vec(vec![2.0, 5.0]);
        let m = d.evaluate(&x);
        assert_eq!(m, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 15.0])));
    }

    #[test]
    fn symmetric_sandwich_is_exactly_symmetric() {
        let x = AffineMatrix::coordinate(0, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let u = DMatrix::from_row_slice(3, 2, &[0.1, 0.7, 1.3, -0.2, 0.0, 3.3]);
        let v = DMatrix::from_row_slice(3, 2, &[1.1, 0.0, -0.4, 0.9, 2.0, 0.5]);
        let s = x.symmetric_sandwich(&u, &v).evaluate(&DVector::from_element(1, 1.7));
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn sparse_ops_match_dense() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0, 0.0, -1.0]);
        let s = SparseSym::from_dense(&m);
        assert_eq!(s.nnz(), 4);
        assert_eq!(s.to_dense(), m);
        let d = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        assert_eq!(s.mul_dense(&d), &m * &d);
        assert!((s.dot(&d) - m.component_mul(&d).sum()).abs() < 1e-15);
    }

    #[test]
    fn margin_orientation() {
        let expr = AffineMatrix::coordinate(0, DMatrix::identity(2, 2));
        let neg = AffineLmi::from_affine("neg", Sign::NegativeDefinite, &expr);
        let pos = AffineLmi::from_affine("pos", Sign::PositiveSemidefinite, &expr);
        let x = DVector::from_element(1, -2.0);
        assert_eq!(neg.margin(&x).unwrap(), 2.0);
        assert_eq!(pos.margin(&x).unwrap(), -2.0);
        assert!(matches!(
            pos.margin(&DVector::zeros(0)),
            Err(LmiError::DimensionMismatch { .. })
        ));
    }
}
