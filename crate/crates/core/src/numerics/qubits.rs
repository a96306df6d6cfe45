//! Operations on density matrices of qubit registers.
//!
//! Qubit `0` is the most significant bit of the computational-basis index.

use nalgebra::DMatrix;

use super::linalg::{hermitian_eig, ComplexMatrix, C64};
use crate::error::{QabError, Result};

/// Which half of a two-qubit register an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(QabError::invalid(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Reduced density matrix on the qubits in `keep` (ordered as given after
/// sorting, most significant first).
pub fn partial_trace(rho: &ComplexMatrix, keep: &[usize]) -> Result<ComplexMatrix> {
    let n = qubit_count(rho.dim())?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(QabError::invalid("repeated qubit index in keep set"));
    }
    if let Some(&q) = kept.iter().find(|&&q| q >= n) {
        return Err(QabError::invalid(format!("qubit {q} out of range for {n} qubits")));
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    // bit position inside the full index for qubit q
    let bit = |q: usize| n - 1 - q;
    let spread = |pattern: usize, qubits: &[usize]| -> usize {
        let m = qubits.len();
        qubits
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &q)| acc | (((pattern >> (m - 1 - k)) & 1) << bit(q)))
    };
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let full = rho.data();
    let mut out = DMatrix::zeros(dk, dk);
    for i in 0..dk {
        let ii = spread(i, &kept);
        for j in 0..dk {
            let jj = spread(j, &kept);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                let tt = spread(t, &traced);
                acc += full[(ii | tt, jj | tt)];
            }
            out[(i, j)] = acc;
        }
    }
    if rho.is_hermitian() {
        Ok(ComplexMatrix::hermitian_unchecked(out))
    } else {
        ComplexMatrix::new(out)
    }
}

/// Partial transpose of a two-qubit operator on the chosen subsystem.
pub fn partial_transpose(rho: &ComplexMatrix, subsystem: Subsystem) -> Result<ComplexMatrix> {
    if rho.dim() != 4 {
        return Err(QabError::invalid(format!(
            "partial transpose needs a two-qubit (4x4) matrix, got dimension {}",
            rho.dim()
        )));
    }
    let src = rho.data();
    let out = DMatrix::from_fn(4, 4, |r, c| {
        let (ra, rb) = (r >> 1, r & 1);
        let (ca, cb) = (c >> 1, c & 1);
        let (r2, c2) = match subsystem {
            Subsystem::A => ((ca << 1) | rb, (ra << 1) | cb),
            Subsystem::B => ((ra << 1) | cb, (ca << 1) | rb),
        };
        src[(r2, c2)]
    });
    if rho.is_hermitian() {
        Ok(ComplexMatrix::hermitian_unchecked(out))
    } else {
        ComplexMatrix::new(out)
    }
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    if a.is_hermitian() || a.hermiticity_defect() < 1e-12 * a.max_abs().max(1.0) {
        let h = ComplexMatrix::hermitian_unchecked(a.data().clone());
        if let Ok(eig) = hermitian_eig(&h) {
            return eig.values.iter().map(|l| l.abs()).sum();
        }
    }
    let svd = a.data().clone().svd(false, false);
    svd.singular_values.iter().sum()
}

/// Von Neumann entropy `−Tr ρ log₂ ρ` of a density matrix.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig(rho)?;
    Ok(eig
        .values
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ComplexVector;

    fn bell() -> ComplexMatrix {
        let h = 1.0 / 2f64.sqrt();
        ComplexMatrix::projector(&ComplexVector::from_real(&[h, 0.0, 0.0, h]))
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a.data() - b.data()).norm() < tol
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let rho = ComplexMatrix::projector(&ComplexVector::basis(4, 0));
        let red = partial_trace(&rho, &[1]).unwrap();
        assert!(close(&red, &ComplexMatrix::diagonal(&[1.0, 0.0]), 1e-15));
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let red = partial_trace(&bell(), &[1]).unwrap();
        assert!(close(&red, &ComplexMatrix::diagonal(&[0.5, 0.5]), 1e-15));
        let red0 = partial_trace(&bell(), &[0]).unwrap();
        assert!(close(&red0, &ComplexMatrix::diagonal(&[0.5, 0.5]), 1e-15));
    }

    #[test]
    fn msb_convention() {
        // |10⟩ has index 2; qubit 0 is in state |1⟩, qubit 1 in |0⟩.
        let rho = ComplexMatrix::projector(&ComplexVector::basis(4, 2));
        let q0 = partial_trace(&rho, &[0]).unwrap();
        let q1 = partial_trace(&rho, &[1]).unwrap();
        assert!(close(&q0, &ComplexMatrix::diagonal(&[0.0, 1.0]), 1e-15));
        assert!(close(&q1, &ComplexMatrix::diagonal(&[1.0, 0.0]), 1e-15));
    }

    #[test]
    fn keep_out_of_range() {
        assert!(partial_trace(&bell(), &[2]).is_err());
        assert!(partial_trace(&bell(), &[0, 0]).is_err());
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(&bell(), Subsystem::B).unwrap();
        let eig = hermitian_eig(&pt).unwrap();
        assert!((eig.values[0] + 0.5).abs() < 1e-14);
        assert!((trace_norm(&pt) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn partial_transpose_wrong_dim() {
        assert!(partial_transpose(&ComplexMatrix::identity(8), Subsystem::A).is_err());
    }

    #[test]
    fn product_partial_transpose_is_factor_transpose() {
        let a = ComplexMatrix::hermitian(DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.7, 0.), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.)],
        ))
        .unwrap();
        let b = ComplexMatrix::hermitian(DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.4, 0.), C64::new(0.0, 0.3), C64::new(0.0, -0.3), C64::new(0.6, 0.)],
        ))
        .unwrap();
        let pt = partial_transpose(&a.kron(&b), Subsystem::B).unwrap();
        assert!(close(&pt, &a.kron(&b.transpose()), 1e-15));
        let eig = hermitian_eig(&pt).unwrap();
        assert!(eig.values[0] > -1e-14);
    }

    #[test]
    fn trace_norms() {
        assert!((trace_norm(&ComplexMatrix::identity(4)) - 4.0).abs() < 1e-14);
        assert!((trace_norm(&ComplexMatrix::diagonal(&[1.0, -1.0])) - 2.0).abs() < 1e-14);
        let nonherm = ComplexMatrix::from_real(2, &[0.0, 3.0, 0.0, 0.0]).unwrap();
        assert!((trace_norm(&nonherm) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn entropies() {
        let product = ComplexMatrix::projector(&ComplexVector::basis(4, 1));
        let r = partial_trace(&product, &[0]).unwrap();
        assert!(von_neumann_entropy(&r).unwrap().abs() < 1e-10);
        let r = partial_trace(&bell(), &[0]).unwrap();
        assert!((von_neumann_entropy(&r).unwrap() - 1.0).abs() < 1e-10);
    }
}
