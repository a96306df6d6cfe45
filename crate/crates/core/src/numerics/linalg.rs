use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QabError, Result};

pub type C64 = Complex64;

/// Relative tolerance for the hermiticity check on construction.
const HERMITIAN_TOL: f64 = 1e-12;

/// A dense complex column vector (quantum state amplitudes).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(DVector<C64>);

impl ComplexVector {
    pub fn from_vec(entries: Vec<C64>) -> Self {
        ComplexVector(DVector::from_vec(entries))
    }

    pub fn from_real(entries: &[f64]) -> Self {
        ComplexVector(DVector::from_iterator(
            entries.len(),
            entries.iter().map(|&v| C64::new(v, 0.0)),
        ))
    }

    pub fn zeros(len: usize) -> Self {
        ComplexVector(DVector::zeros(len))
    }

    /// Computational basis state `|k⟩` in dimension `len`.
    pub fn basis(len: usize, k: usize) -> Self {
        let mut v = DVector::zeros(len);
        v[k] = C64::new(1.0, 0.0);
        ComplexVector(v)
    }

    /// Equal superposition `Σ_k |k⟩ / √len`.
    pub fn uniform(len: usize) -> Self {
        let amp = C64::new(1.0 / (len as f64).sqrt(), 0.0);
        ComplexVector(DVector::from_element(len, amp))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        self.0.as_mut_slice()
    }

    pub fn inner(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<C64> {
        self.0
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn dot(&self, other: &ComplexVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn normalized(&self) -> Result<ComplexVector> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(QabError::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(ComplexVector(self.0.unscale(n)))
    }

    pub fn scale(&self, factor: C64) -> ComplexVector {
        ComplexVector(&self.0 * factor)
    }

    /// Multiplies by a global phase so that the largest-magnitude entry is
    /// real and positive. Ties go to the lowest index.
    pub fn fix_phase(&self) -> ComplexVector {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, z) in self.0.iter().enumerate() {
            // a small slack keeps the choice stable for entries equal in exact arithmetic
            if z.norm() > best_abs * (1.0 + 1e-9) {
                best = i;
                best_abs = z.norm();
            }
        }
        if best_abs <= 0.0 {
            return self.clone();
        }
        let z = self.0[best];
        self.scale(z.conj() / z.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl From<DVector<C64>> for ComplexVector {
    fn from(v: DVector<C64>) -> Self {
        ComplexVector(v)
    }
}

impl Add for &ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: &ComplexVector) -> ComplexVector {
        ComplexVector(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: &ComplexVector) -> ComplexVector {
        ComplexVector(&self.0 - &rhs.0)
    }
}

/// A dense square complex matrix. The `hermitian` flag is only ever set
/// after the matrix passed the hermiticity check.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<C64>,
    hermitian: bool,
}

impl ComplexMatrix {
    /// Wraps a general square matrix.
    pub fn new(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(QabError::invalid(format!(
                "matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(ComplexMatrix { data, hermitian: false })
    }

    /// Wraps a matrix that must be hermitian; the check is relative to the
    /// largest entry magnitude.
    pub fn hermitian(data: DMatrix<C64>) -> Result<Self> {
        let mut m = Self::new(data)?;
        let dev = m.hermiticity_defect();
        if dev >= HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(QabError::invalid(format!(
                "matrix is not hermitian (max |A - A†| = {dev:e})"
            )));
        }
        m.symmetrize();
        m.hermitian = true;
        Ok(m)
    }

    /// Builds a hermitian matrix from data known to be hermitian up to
    /// rounding; the lower triangle is mirrored from the upper one.
    pub(crate) fn hermitian_unchecked(data: DMatrix<C64>) -> Self {
        let mut m = ComplexMatrix { data, hermitian: true };
        m.symmetrize();
        m
    }

    pub fn from_real(rows: usize, entries: &[f64]) -> Result<Self> {
        let data = DMatrix::from_row_iterator(
            rows,
            entries.len() / rows,
            entries.iter().map(|&v| C64::new(v, 0.0)),
        );
        Self::new(data)
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix { data: DMatrix::identity(n, n), hermitian: true }
    }

    pub fn zeros(n: usize) -> Self {
        ComplexMatrix { data: DMatrix::zeros(n, n), hermitian: true }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let data = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        ComplexMatrix { data, hermitian: true }
    }

    /// `|v⟩⟨w|`.
    pub fn outer(v: &ComplexVector, w: &ComplexVector) -> Self {
        let data = v.inner() * w.inner().adjoint();
        ComplexMatrix { data, hermitian: false }
    }

    /// `|v⟩⟨v|`, always hermitian.
    pub fn projector(v: &ComplexVector) -> Self {
        Self::hermitian_unchecked(v.inner() * v.inner().adjoint())
    }

    /// `𝟙 − |v⟩⟨v|` for a unit vector `v`.
    pub fn complement_projector(v: &ComplexVector) -> Self {
        let n = v.len();
        let data = DMatrix::identity(n, n) - v.inner() * v.inner().adjoint();
        Self::hermitian_unchecked(data)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<C64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix { data: self.data.adjoint(), hermitian: self.hermitian }
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix { data: self.data.transpose(), hermitian: self.hermitian }
    }

    /// `Tr[A B]` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[(i, k)] * other.data[(k, i)];
            }
        }
        acc
    }

    /// Hilbert–Schmidt (Frobenius) norm `√Tr[A†A]`.
    pub fn hs_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn scale(&self, factor: f64) -> ComplexMatrix {
        ComplexMatrix { data: &self.data * C64::new(factor, 0.0), hermitian: self.hermitian }
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        ComplexVector::from(&self.data * v.inner())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: self.data.kronecker(&other.data), hermitian: self.hermitian && other.hermitian }
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> ComplexMatrix {
        let data = &u.data * &self.data * u.data.adjoint();
        if self.hermitian {
            Self::hermitian_unchecked(data)
        } else {
            ComplexMatrix { data, hermitian: false }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn symmetrize(&mut self) {
        let n = self.dim();
        for i in 0..n {
            let d = self.data[(i, i)].re;
            self.data[(i, i)] = C64::new(d, 0.0);
            for j in (i + 1)..n {
                let upper = self.data[(i, j)];
                let lower = self.data[(j, i)].conj();
                let avg = (upper + lower) * 0.5;
                self.data[(i, j)] = avg;
                self.data[(j, i)] = avg.conj();
            }
        }
    }

    /// `exp(−i·τ·A)` for hermitian `A`, via its eigendecomposition.
    pub fn unitary_exp(&self, tau: f64) -> Result<ComplexMatrix> {
        if self.dim() == 2 {
            return Ok(unitary_exp_2x2(&self.data, tau));
        }
        let eig = hermitian_eig(self)?;
        let phases: Vec<C64> = eig.values.iter().map(|&l| C64::from_polar(1.0, -l * tau)).collect();
        let v = &eig.vectors;
        let mut scaled = v.clone();
        for (j, ph) in phases.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= ph;
            }
        }
        Ok(ComplexMatrix { data: scaled * v.adjoint(), hermitian: false })
    }
}

/// Closed-form `exp(−iτA)` for a 2×2 hermitian `A = a₀𝟙 + a⃗·σ⃗`.
fn unitary_exp_2x2(a: &DMatrix<C64>, tau: f64) -> ComplexMatrix {
    let a0 = 0.5 * (a[(0, 0)].re + a[(1, 1)].re);
    let az = 0.5 * (a[(0, 0)].re - a[(1, 1)].re);
    let off = a[(0, 1)];
    let (ax, ay) = (off.re, -off.im);
    let r = (ax * ax + ay * ay + az * az).sqrt();
    let global = C64::from_polar(1.0, -a0 * tau);
    let (c, sinc) = if r * tau.abs() < 1e-8 {
        (1.0 - 0.5 * (r * tau).powi(2), tau)
    } else {
        ((r * tau).cos(), (r * tau).sin() / r)
    };
    // exp(−iτ a⃗·σ⃗) = cos(rτ) 𝟙 − i sin(rτ)/r (a⃗·σ⃗)
    let i = C64::new(0.0, 1.0);
    let m00 = C64::new(c, 0.0) - i * sinc * az;
    let m11 = C64::new(c, 0.0) + i * sinc * az;
    let m01 = -i * sinc * C64::new(ax, -ay);
    let m10 = -i * sinc * C64::new(ax, ay);
    let data = DMatrix::from_row_slice(2, 2, &[m00 * global, m01 * global, m10 * global, m11 * global]);
    ComplexMatrix { data, hermitian: false }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: &self.data + &rhs.data, hermitian: self.hermitian && rhs.hermitian }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: &self.data - &rhs.data, hermitian: self.hermitian && rhs.hermitian }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: &self.data * &rhs.data, hermitian: false }
    }
}

/// Spectrum of a hermitian matrix: ascending eigenvalues and the matching
/// orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> ComplexVector {
        ComplexVector::from(self.vectors.column(k).into_owned())
    }
}

pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = a.dim();
    if n == 0 || n > 4096 {
        return Err(QabError::invalid(format!("eigensolver dimension {n} out of range")));
    }
    if !a.is_hermitian() {
        let dev = a.hermiticity_defect();
        if dev >= HERMITIAN_TOL * a.max_abs().max(1.0) {
            return Err(QabError::invalid(format!(
                "eigensolver needs a hermitian matrix (max |A - A†| = {dev:e})"
            )));
        }
    }
    if !a.is_finite() {
        return Err(QabError::invalid("matrix has non-finite entries"));
    }
    let eig = nalgebra::SymmetricEigen::new(a.data.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Dense real solve `A y = b` by partial-pivoting LU.
pub fn solve_linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(QabError::invalid("linear system dimensions do not match"));
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let lu = a.clone().lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
    if min_pivot <= 1e-13 * scale * a.nrows() as f64 {
        return Err(QabError::NumericalFailure(format!(
            "matrix is singular to working precision (min pivot {min_pivot:e})"
        )));
    }
    lu.solve(b)
        .ok_or_else(|| QabError::NumericalFailure("LU solve failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::hermitian(DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0., 0.), C64::new(1., 0.), C64::new(1., 0.), C64::new(0., 0.)],
        ))
        .unwrap()
    }

    #[test]
    fn sigma_z_spectrum() {
        let eig = hermitian_eig(&ComplexMatrix::diagonal(&[1.0, -1.0])).unwrap();
        assert_eq!(eig.values.len(), 2);
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sigma_x_eigenvectors() {
        let eig = hermitian_eig(&sigma_x()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        let minus = ComplexVector::from_real(&[1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()]);
        let plus = ComplexVector::from_real(&[1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]);
        assert!((minus.dot(&eig.vector(0)).norm() - 1.0).abs() < 1e-12);
        assert!((plus.dot(&eig.vector(1)).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(QabError::InvalidInput(_))));
        assert!(ComplexMatrix::hermitian(m.into_data()).is_err());
    }

    #[test]
    fn two_by_two_exponential_matches_eigen_route() {
        let h = ComplexMatrix::hermitian(DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.3, 0.), C64::new(0.2, -0.7), C64::new(0.2, 0.7), C64::new(-1.1, 0.)],
        ))
        .unwrap();
        let closed = h.unitary_exp(1.7).unwrap();
        let eig = hermitian_eig(&h).unwrap();
        let mut d = DMatrix::zeros(2, 2);
        for k in 0..2 {
            d[(k, k)] = C64::from_polar(1.0, -eig.values[k] * 1.7);
        }
        let reference = &eig.vectors * d * eig.vectors.adjoint();
        assert!((closed.data() - reference).norm() < 1e-13);
    }

    #[test]
    fn singular_system_detected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(solve_linear(&a, &b), Err(QabError::NumericalFailure(_))));
    }

    #[test]
    fn fix_phase_makes_largest_entry_positive() {
        let v = ComplexVector::from_vec(vec![C64::new(0.1, 0.0), C64::new(0.0, -0.9)]);
        let f = v.fix_phase();
        assert!(f.as_slice()[1].im.abs() < 1e-15);
        assert!(f.as_slice()[1].re > 0.0);
    }
}
