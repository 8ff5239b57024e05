//! Small dense helpers shared by the model operations.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::Scalar;

/// Condition-number ceiling above which a complex solve is treated as singular.
///
/// `1e14` for `f64`, scaled by machine epsilon for narrower types.
pub(crate) fn condition_limit<T: Scalar>() -> f64 {
    1e14 * f64::EPSILON / T::default_epsilon().as_f64()
}

fn norm1<T: Scalar>(m: &DMatrix<Complex<T>>) -> T {
    let mut best = T::zero();
    for col in m.column_iter() {
        let s = col.iter().fold(T::zero(), |acc, z| acc + z.modulus());
        if s > best {
            best = s;
        }
    }
    best
}

/// Inverse of `m` together with its 1-norm condition number, or `None` when
/// the matrix is numerically singular.
pub(crate) fn checked_inverse<T: Scalar>(m: &DMatrix<Complex<T>>) -> Option<DMatrix<Complex<T>>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    let inv = m.clone().try_inverse()?;
    let cond = (norm1(m) * norm1(&inv)).as_f64();
    if !cond.is_finite() || cond > condition_limit::<T>() {
        return None;
    }
    Some(inv)
}

/// `(sI - A)` as a complex matrix.
pub(crate) fn shifted<T: Scalar>(a: &DMatrix<T>, s: Complex<T>) -> DMatrix<Complex<T>> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { s } else { Complex::new(T::zero(), T::zero()) };
        d - Complex::new(a[(i, j)], T::zero())
    })
}

pub(crate) fn complexify<T: Scalar>(v: &DVector<T>) -> DVector<Complex<T>> {
    v.map(|x| Complex::new(x, T::zero()))
}

/// Diagonal similarity `D^-1 A D` with power-of-two scalings that roughly
/// equalises row and column norms. Eigenvalues are unchanged; the rescaling
/// is exact in binary floating point.
pub(crate) fn balance<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let mut m = a.clone();
    let radix = T::lit(2.0);
    let radix2 = radix * radix;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let total = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix2;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix2;
            }
            if (c + r) / f < T::lit(0.95) * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
    m
}

/// Eigenvalues of a real square matrix, sorted by (real, imaginary) part.
pub(crate) fn eigenvalues<T: Scalar>(a: &DMatrix<T>) -> Vec<Complex<T>> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let balanced = balance(a);
    let mut ev: Vec<Complex<T>> = balanced.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    ev
}

/// Zero-order-hold pair `(Phi, Gamma)` for `x' = Ax + Bu` over one step `dt`,
/// read off the exponential of the augmented matrix `[[A, B], [0, 0]] * dt`.
pub(crate) fn zoh_discretize<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, dt: T) -> (DMatrix<T>, DMatrix<T>) {
    let n = a.nrows();
    let p = b.ncols();
    let mut aug = DMatrix::zeros(n + p, n + p);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, p)).copy_from(&(b * dt));
    let e = aug.exp();
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, p)).into_owned())
}
