//! Scalar abstraction used by every numerical routine in the crate.

use num_traits::{FromPrimitive, ToPrimitive};

/// Dense column-major matrix over a [`Real`] scalar.
pub type Mat<T> = nalgebra::DMatrix<T>;
/// Dense column vector over a [`Real`] scalar.
pub type ColVec<T> = nalgebra::DVector<T>;

/// Real scalar usable in all graph, spectral, and training code.
///
/// Implemented by `f32` and `f64`. The bound combines nalgebra's field
/// operations (eigensolvers, SVD, QR) with num-traits conversions so generic
/// code can mint constants with [`Real::of`].
pub trait Real:
    nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync + 'static
{
    /// Converts an `f64` constant into the scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert")
    }

    /// Converts the scalar to `f64` for reporting and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar must convert to f64")
    }
}

impl<T> Real for T where
    T: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync + 'static
{
}

/// Frobenius norm of the difference between two matrices.
pub fn frob_distance<T: Real>(a: &Mat<T>, b: &Mat<T>) -> T {
    (a - b).norm()
}

/// Largest absolute entry of a matrix (zero for empty matrices).
pub fn max_abs<T: Real>(m: &Mat<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}
