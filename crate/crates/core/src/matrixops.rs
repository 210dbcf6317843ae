//! Matrix algebra for the multivariate estimators: vec/unvec, Kronecker
//! products, the commutation matrix, the symmetrizer-related matrix
//! `𝒵 = E_{d²} + C_{d,d}` and symmetric matrix powers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

/// Stacks the columns of a square matrix.
pub fn vec_matrix<T: Scalar>(a: &DMatrix<T>) -> Result<DVector<T>> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid_argument("vec expects a square matrix"));
    }
    Ok(DVector::from_column_slice(a.as_slice()))
}

/// Inverse of [`vec_matrix`]: reshapes a length-d² vector column-major.
pub fn unvec_matrix<T: Scalar>(v: &DVector<T>) -> Result<DMatrix<T>> {
    let d2 = v.len();
    let d = (d2 as f64).sqrt().round() as usize;
    if d * d != d2 {
        return Err(Error::invalid_argument("unvec expects a length-d² vector"));
    }
    Ok(DMatrix::from_column_slice(d, d, v.as_slice()))
}

/// Kronecker product `(A ⊗ B)_{d(p-1)+q, d(p'-1)+q'} = A_{pp'} B_{qq'}`.
pub fn kronecker<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b)
}

/// Commutation matrix `C_{d,d}` with `C·vec(A) = vec(Aᵀ)`.
pub fn commutation_matrix<T: Scalar>(d: usize) -> DMatrix<T> {
    let mut c = DMatrix::zeros(d * d, d * d);
    for p in 0..d {
        for q in 0..d {
            // vec slot of A_{pq} is q·d + p; it moves to slot p·d + q.
            c[(p * d + q, q * d + p)] = T::one();
        }
    }
    c
}

/// Cached `d`-dimensional context: the commutation matrix and
/// `𝒵 = E_{d²} + C_{d,d} = Cov(vec(ZZᵀ))` for standard Gaussian `Z`.
#[derive(Debug, Clone)]
pub struct MatrixOpsContext<T: Scalar> {
    d: usize,
    commutation: DMatrix<T>,
    z: DMatrix<T>,
}

impl<T: Scalar> MatrixOpsContext<T> {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid_argument("dimension must be >= 1"));
        }
        let commutation = commutation_matrix(d);
        let z = DMatrix::identity(d * d, d * d) + &commutation;
        Ok(MatrixOpsContext { d, commutation, z })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn commutation(&self) -> &DMatrix<T> {
        &self.commutation
    }

    /// `𝒵 = E_{d²} + C_{d,d}`.
    pub fn z_matrix(&self) -> &DMatrix<T> {
        &self.z
    }
}

/// Symmetric matrix power by eigendecomposition. The input must be symmetric
/// to `sym_tol`; eigenvalues in `[-psd_tol, 0)` are clipped to zero, anything
/// below `-psd_tol` is a domain error, and negative powers fail on
/// eigenvalues below `1e-12`.
pub fn symmetric_matrix_power<T: Scalar>(a: &DMatrix<T>, exponent: f64) -> Result<DMatrix<T>> {
    let sym_tol = real::<T>(1e-10);
    let psd_tol = real::<T>(1e-10);
    if a.nrows() != a.ncols() {
        return Err(Error::invalid_argument("matrix power expects a square matrix"));
    }
    let scale = a.amax().max(T::one());
    for r in 0..a.nrows() {
        for c in 0..r {
            if (a[(r, c)] - a[(c, r)]).abs() > sym_tol * scale {
                return Err(Error::invalid_argument("matrix is not symmetric"));
            }
        }
    }
    let sym = (a + a.transpose()) / real::<T>(2.0);
    let eig = SymmetricEigen::new(sym);
    let mut powered = DVector::zeros(a.nrows());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let lambda = if lambda < T::zero() {
            if lambda < -psd_tol * scale {
                let min: f64 = lambda.to_subset().unwrap_or(f64::NAN);
                return Err(Error::numeric_domain(format!(
                    "matrix power of non-PSD matrix (eigenvalue {min:e})"
                )));
            }
            T::zero()
        } else {
            lambda
        };
        if exponent < 0.0 && lambda <= real(1e-12) {
            return Err(Error::SingularMatrix {
                min_eigenvalue: lambda.to_subset().unwrap_or(0.0),
            });
        }
        powered[i] = lambda.powf(real(exponent));
    }
    let q = &eig.eigenvectors;
    let result = q * DMatrix::from_diagonal(&powered) * q.transpose();
    // Symmetrize away the eigendecomposition roundoff.
    Ok((&result + result.transpose()) / real::<T>(2.0))
}

/// `(Σ^ℋ)^{1/2} := ℋ(ℋ⁻¹Σℋ⁻¹)^{1/2}ℋ` for diagonal positive `ℋ`.
pub fn sigma_h_half<T: Scalar>(sigma: &DMatrix<T>, h_diag: &DVector<T>) -> Result<DMatrix<T>> {
    let d = sigma.nrows();
    if h_diag.len() != d {
        return Err(Error::invalid_argument("noise-level diagonal length mismatch"));
    }
    if h_diag.iter().any(|&x| x <= T::zero()) {
        return Err(Error::numeric_domain("noise levels must be positive"));
    }
    let mut inner = DMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            inner[(r, c)] = sigma[(r, c)] / (h_diag[r] * h_diag[c]);
        }
    }
    let root = symmetric_matrix_power(&inner, 0.5)?;
    let mut out = root;
    for r in 0..d {
        for c in 0..d {
            out[(r, c)] *= h_diag[r] * h_diag[c];
        }
    }
    Ok(out)
}

/// `(Σ^ℋ)^{1/4}`, the symmetric square root of [`sigma_h_half`].
pub fn sigma_h_quarter<T: Scalar>(sigma: &DMatrix<T>, h_diag: &DVector<T>) -> Result<DMatrix<T>> {
    symmetric_matrix_power(&sigma_h_half(sigma, h_diag)?, 0.5)
}

/// Projects onto the symmetric PSD cone: symmetrize, then clip eigenvalues
/// below `floor` (relative floors are the caller's business).
pub fn psd_projection<T: Scalar>(a: &DMatrix<T>, floor: T) -> DMatrix<T> {
    let sym = (a + a.transpose()) / real::<T>(2.0);
    let eig = SymmetricEigen::new(sym);
    let clipped: Vec<T> = eig.eigenvalues.iter().map(|&l| l.max(floor)).collect();
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&DVector::from_vec(clipped)) * q.transpose();
    (&out + out.transpose()) / real::<T>(2.0)
}
