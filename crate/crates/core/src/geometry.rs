//! Linear algebra of the constraint distribution `D_q = ker A(q)`.
//!
//! Everything here is a pure function of small dense matrices (n <= 16).

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Constraint matrix `A(q)`, `k x n` with full row rank and `k < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix(DMatrix<f64>);

impl ConstraintMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() >= a.ncols() && a.ncols() > 0 {
            return Err(Error::InvalidInput(format!(
                "constraint matrix must have fewer rows than columns, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        ensure_finite(&a)?;
        Ok(Self(a))
    }

    /// No constraints in an `n`-dimensional ambient space.
    pub fn empty(n: usize) -> Self {
        Self(DMatrix::zeros(0, n))
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `A v`, the constraint residual of a velocity.
    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.0 * v
    }
}

/// Symmetric idempotent matrix projecting orthogonally onto `D_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector(DMatrix<f64>);

impl Projector {
    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.0 * v
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.0.singular_values().max()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

/// `n x (n-k)` matrix whose columns span `D_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionBasis(DMatrix<f64>);

impl DistributionBasis {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if b.ncols() > b.nrows() {
            return Err(Error::InvalidInput(format!(
                "basis has more columns than rows: {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        ensure_finite(&b)?;
        Ok(Self(b))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }

    /// Ambient velocity `B nu` from adapted coordinates.
    pub fn lift(&self, nu: &DVector<f64>) -> DVector<f64> {
        &self.0 * nu
    }
}

/// Default relative singular value cutoff for an `rows x cols` matrix.
pub fn default_rcond(rows: usize, cols: usize) -> f64 {
    f64::EPSILON * rows.max(cols).max(1) as f64
}

fn ensure_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has non-finite entries".into()))
    }
}

/// Ratio of the smallest to the largest singular value (0 for a zero matrix).
fn singular_ratio(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Moore-Penrose pseudoinverse through the SVD.
///
/// Singular values below `rcond * sigma_max` are treated as zero; `None`
/// selects [`default_rcond`].
pub fn pseudoinverse(m: &DMatrix<f64>, rcond: Option<f64>) -> Result<DMatrix<f64>> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let rcond = rcond.unwrap_or_else(|| default_rcond(rows, cols));
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let cutoff = rcond * svd.singular_values.max();
    let mut pinv = DMatrix::zeros(cols, rows);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            // pinv += v_i u_i^T / s
            let vi = v_t.row(i).transpose();
            let ui = u.column(i);
            pinv.ger(1.0 / s, &vi, &ui, 1.0);
        }
    }
    Ok(pinv)
}

/// `P = I - A^+ A`, the canonical projector onto `ker A`.
pub fn projector_from_constraints(a: &ConstraintMatrix) -> Result<Projector> {
    let n = a.ambient_dim();
    if a.num_constraints() == 0 {
        return Ok(Projector::identity(n));
    }
    let rcond = default_rcond(a.num_constraints(), n);
    let ratio = singular_ratio(a.matrix());
    if ratio < rcond {
        return Err(Error::DegenerateConstraint { ratio, rcond });
    }
    let pinv = pseudoinverse(a.matrix(), Some(rcond))?;
    let p = DMatrix::identity(n, n) - pinv * a.matrix();
    Ok(Projector(symmetrize(p)))
}

fn basis_gram_cholesky(b: &DistributionBasis) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let rcond = default_rcond(b.ambient_dim(), b.rank());
    let ratio = if b.rank() == 0 { 1.0 } else { singular_ratio(b.matrix()) };
    if ratio < rcond {
        return Err(Error::DegenerateBasis { ratio, rcond });
    }
    let gram = b.matrix().tr_mul(b.matrix());
    gram.cholesky().ok_or(Error::DegenerateBasis { ratio, rcond })
}

/// `P = B (B^T B)^{-1} B^T`, the orthogonal projector onto `Im B`.
pub fn projector_from_basis(b: &DistributionBasis) -> Result<Projector> {
    let pinv = adapted_pseudoinverse(b)?;
    Ok(Projector(symmetrize(b.matrix() * pinv)))
}

/// Left inverse `B^+ = (B^T B)^{-1} B^T` mapping ambient velocities to adapted coordinates.
pub fn adapted_pseudoinverse(b: &DistributionBasis) -> Result<DMatrix<f64>> {
    let chol = basis_gram_cholesky(b)?;
    Ok(chol.solve(&b.matrix().transpose()))
}

/// Largest absolute entry, the `max`-norm used by all tolerance checks.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
