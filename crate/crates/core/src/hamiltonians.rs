//! Parametrized Hamiltonian families and the problems built on them.
//!
//! Every family here is linear in its control parameters,
//! `H(x) = Σᵢ xⁱ ∂ᵢH`, so the derivatives are constant and the overlap
//! matrix `Cᵢⱼ = Tr[∂ᵢH ∂ⱼH]` does not depend on `x`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QabError, Result};
use crate::numerics::{solve_linear, ComplexMatrix, ComplexVector, C64};

/// A linear family `H(x) = Σᵢ xⁱ ∂ᵢH` with a closed-form gap.
pub trait ParametrizedHamiltonian: Send + Sync {
    /// Dimension `M` of the control manifold.
    fn param_dim(&self) -> usize;

    fn hilbert_dim(&self) -> usize;

    /// `∂ᵢH` (constant for linear families).
    fn derivative(&self, i: usize) -> ComplexMatrix;

    /// Gap between the ground and first excited level at `x`.
    fn gap(&self, x: &[f64]) -> Result<f64>;

    /// `∂Δ/∂xⁱ` at `x`.
    fn gap_gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Stored overlap matrix `C`.
    fn overlap(&self) -> &DMatrix<f64>;

    fn evaluate(&self, x: &[f64]) -> Result<ComplexMatrix> {
        check_point(x, self.param_dim())?;
        let n = self.hilbert_dim();
        let mut acc = DMatrix::<C64>::zeros(n, n);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                acc += self.derivative(i).data() * C64::new(xi, 0.0);
            }
        }
        Ok(ComplexMatrix::hermitian_unchecked(acc))
    }

    /// `‖ẋⁱ ∂ᵢH‖_HS`, evaluated through `C`.
    fn velocity_norm(&self, xdot: &[f64]) -> f64 {
        let c = self.overlap();
        let m = self.param_dim();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += xdot[i] * c[(i, j)] * xdot[j];
            }
        }
        acc.max(0.0).sqrt()
    }
}

impl<H: ParametrizedHamiltonian + ?Sized> ParametrizedHamiltonian for &H {
    fn param_dim(&self) -> usize {
        (**self).param_dim()
    }
    fn hilbert_dim(&self) -> usize {
        (**self).hilbert_dim()
    }
    fn derivative(&self, i: usize) -> ComplexMatrix {
        (**self).derivative(i)
    }
    fn gap(&self, x: &[f64]) -> Result<f64> {
        (**self).gap(x)
    }
    fn gap_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).gap_gradient(x)
    }
    fn overlap(&self) -> &DMatrix<f64> {
        (**self).overlap()
    }
    fn evaluate(&self, x: &[f64]) -> Result<ComplexMatrix> {
        (**self).evaluate(x)
    }
}

pub(crate) fn check_point(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(QabError::invalid(format!("expected a {dim}-d point, got {} coordinates", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(QabError::invalid(format!("non-finite point {x:?}")));
    }
    Ok(())
}

/// Overlap matrix computed directly as `Tr[∂ᵢH ∂ⱼH]`.
pub fn overlap_by_trace<H: ParametrizedHamiltonian + ?Sized>(h: &H) -> DMatrix<f64> {
    let m = h.param_dim();
    let ders: Vec<ComplexMatrix> = (0..m).map(|i| h.derivative(i)).collect();
    DMatrix::from_fn(m, m, |i, j| ders[i].trace_product(&ders[j]).re)
}

const DEGENERACY_TOL: f64 = 1e-12;

/// Two unit vectors `a`, `b` defining `H = x¹(𝟙 − |a⟩⟨a|) + x²(𝟙 − |b⟩⟨b|)`.
#[derive(Debug, Clone)]
pub struct ProjectorPairProblem {
    a: ComplexVector,
    b: ComplexVector,
    alpha0: f64,
    label: String,
}

impl ProjectorPairProblem {
    /// Validates unit norms and a real positive overlap `0 < ⟨a|b⟩ < 1`.
    pub fn new(a: ComplexVector, b: ComplexVector, label: impl Into<String>) -> Result<Self> {
        if a.len() != b.len() || a.len() < 2 {
            return Err(QabError::invalid("a and b must share a dimension of at least 2"));
        }
        for (name, v) in [("a", &a), ("b", &b)] {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(QabError::invalid(format!("{name} is not normalized (norm {})", v.norm())));
            }
        }
        let overlap = a.dot(&b);
        if overlap.im.abs() > 1e-12 || overlap.re <= 0.0 {
            return Err(QabError::invalid(format!("⟨a|b⟩ = {overlap} must be real and positive")));
        }
        let alpha0 = overlap.re;
        if alpha0 >= 1.0 - DEGENERACY_TOL {
            return Err(QabError::DegenerateProblem { alpha0 });
        }
        Ok(ProjectorPairProblem { a, b, alpha0, label: label.into() })
    }

    pub fn a(&self) -> &ComplexVector {
        &self.a
    }

    pub fn b(&self) -> &ComplexVector {
        &self.b
    }

    /// `α₀ = ⟨a|b⟩`.
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn hilbert_dim(&self) -> usize {
        self.a.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of qubits when the dimension is a power of two.
    pub fn qubits(&self) -> Option<usize> {
        let n = self.hilbert_dim();
        n.is_power_of_two().then(|| n.trailing_zeros() as usize)
    }

    /// `x¹ P_a⊥ + x² P_b⊥` as a dense matrix.
    pub fn hamiltonian(&self, x: &[f64]) -> Result<ComplexMatrix> {
        check_point(x, 2)?;
        let pa = ComplexMatrix::complement_projector(&self.a).scale(x[0]);
        let pb = ComplexMatrix::complement_projector(&self.b).scale(x[1]);
        Ok(&pa + &pb)
    }
}

/// Grover search over `2ⁿ` items: `a` is the uniform superposition and
/// `b = |m⟩`.
pub fn build_grover(n: usize, marked: usize) -> Result<ProjectorPairProblem> {
    if !(1..=12).contains(&n) {
        return Err(QabError::invalid(format!("qubit count {n} outside 1..=12")));
    }
    let dim = 1usize << n;
    if marked >= dim {
        return Err(QabError::invalid(format!("marked index {marked} out of range for N = {dim}")));
    }
    ProjectorPairProblem::new(
        ComplexVector::uniform(dim),
        ComplexVector::basis(dim, marked),
        format!("grover-n{n}"),
    )
}

/// Linear-system state generation for the Toeplitz matrix `Aᵢⱼ = 1 + |i − j|`:
/// `a` is uniform and `b ∝ A⁻¹ a`.
pub fn build_toeplitz(size: usize) -> Result<ProjectorPairProblem> {
    if !(2..=1024).contains(&size) {
        return Err(QabError::invalid(format!("Toeplitz size {size} outside 2..=1024")));
    }
    let a_mat = DMatrix::from_fn(size, size, |i, j| 1.0 + (i as f64 - j as f64).abs());
    let rhs = DVector::from_element(size, 1.0 / (size as f64).sqrt());
    let y = solve_linear(&a_mat, &rhs)?;
    let b = ComplexVector::from_real(y.unscale(y.norm()).as_slice());
    ProjectorPairProblem::new(ComplexVector::from_real(rhs.as_slice()), b, format!("toeplitz-N{size}"))
}

/// A synthetic problem with prescribed overlap: `a = |0⟩`,
/// `b = α₀|0⟩ + √(1 − α₀²)|1⟩` in dimension `dim`.
pub fn build_custom(alpha0: f64, dim: usize) -> Result<ProjectorPairProblem> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        if (1.0 - DEGENERACY_TOL..=1.0).contains(&alpha0) {
            return Err(QabError::DegenerateProblem { alpha0 });
        }
        return Err(QabError::invalid(format!("alpha0 = {alpha0} must lie in (0, 1)")));
    }
    if dim < 2 {
        return Err(QabError::invalid("custom problem needs dimension ≥ 2"));
    }
    let mut b = vec![0.0; dim];
    b[0] = alpha0;
    b[1] = (1.0 - alpha0 * alpha0).sqrt();
    ProjectorPairProblem::new(ComplexVector::basis(dim, 0), ComplexVector::from_real(&b), format!("custom-a{alpha0}"))
}

/// `Δ(x¹, x²) = √((x¹)² + (x²)² + 2(2α₀² − 1) x¹x²)`.
pub fn gap_projector_pair(x: &[f64], alpha0: f64) -> Result<f64> {
    check_point(x, 2)?;
    let (x1, x2) = (x[0], x[1]);
    // (x¹ − x²)² + 4α₀²x¹x², free of cancellation near the critical line
    let sq = (x1 - x2) * (x1 - x2) + 4.0 * alpha0 * alpha0 * x1 * x2;
    if !(sq > 0.0) {
        return Err(QabError::ZeroGap { x: x.to_vec() });
    }
    Ok(sq.sqrt())
}

/// The two-parameter family `x¹ P_a⊥ + x² P_b⊥` of a [`ProjectorPairProblem`].
#[derive(Debug, Clone)]
pub struct ProjectorPairFamily {
    problem: ProjectorPairProblem,
    overlap: DMatrix<f64>,
    gap_offset: f64,
}

impl ProjectorPairFamily {
    pub fn new(problem: ProjectorPairProblem) -> Self {
        let n = problem.hilbert_dim() as f64;
        let a2 = problem.alpha0 * problem.alpha0;
        let off = n - 2.0 + a2;
        let overlap = DMatrix::from_row_slice(2, 2, &[n - 1.0, off, off, n - 1.0]);
        ProjectorPairFamily { problem, overlap, gap_offset: 0.0 }
    }

    /// Fault injection: adds a constant to the closed-form gap so that
    /// consistency checks against the spectrum can be seen to fail.
    pub fn with_gap_offset(mut self, offset: f64) -> Self {
        self.gap_offset = offset;
        self
    }

    pub fn problem(&self) -> &ProjectorPairProblem {
        &self.problem
    }

    pub fn alpha0(&self) -> f64 {
        self.problem.alpha0
    }
}

impl ParametrizedHamiltonian for ProjectorPairFamily {
    fn param_dim(&self) -> usize {
        2
    }

    fn hilbert_dim(&self) -> usize {
        self.problem.hilbert_dim()
    }

    fn derivative(&self, i: usize) -> ComplexMatrix {
        match i {
            0 => ComplexMatrix::complement_projector(&self.problem.a),
            1 => ComplexMatrix::complement_projector(&self.problem.b),
            _ => panic!("projector-pair family has 2 parameters, asked for {i}"),
        }
    }

    fn gap(&self, x: &[f64]) -> Result<f64> {
        Ok(gap_projector_pair(x, self.problem.alpha0)? + self.gap_offset)
    }

    fn gap_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = gap_projector_pair(x, self.problem.alpha0)?;
        let a2 = 2.0 * self.problem.alpha0 * self.problem.alpha0;
        Ok(vec![(x[0] - x[1] + a2 * x[1]) / d, (x[1] - x[0] + a2 * x[0]) / d])
    }

    fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    fn evaluate(&self, x: &[f64]) -> Result<ComplexMatrix> {
        self.problem.hamiltonian(x)
    }
}

/// Orthonormal basis `{|e₀⟩, |e₁⟩}` of `span{a, b}` with `|e₁⟩ = |b⟩`, and
/// the maps between that plane and the full Hilbert space.
#[derive(Debug, Clone)]
pub struct EffectiveTwoLevel {
    e0: ComplexVector,
    e1: ComplexVector,
    reduced: ProjectorPairProblem,
}

impl EffectiveTwoLevel {
    pub fn new(problem: &ProjectorPairProblem) -> Result<Self> {
        let alpha0 = problem.alpha0();
        if alpha0 >= 1.0 - DEGENERACY_TOL {
            return Err(QabError::DegenerateProblem { alpha0 });
        }
        let e1 = problem.b().clone();
        let overlap = e1.dot(problem.a());
        let e0 = (problem.a() - &e1.scale(overlap)).normalized()?;
        let ra = ComplexVector::from_vec(vec![e0.dot(problem.a()), e1.dot(problem.a())]);
        let rb = ComplexVector::from_real(&[0.0, 1.0]);
        let reduced = ProjectorPairProblem::new(ra, rb, format!("{}-eff", problem.label()))?;
        Ok(EffectiveTwoLevel { e0, e1, reduced })
    }

    pub fn basis(&self) -> (&ComplexVector, &ComplexVector) {
        (&self.e0, &self.e1)
    }

    /// The same problem restricted to the plane (dimension 2).
    pub fn reduced(&self) -> &ProjectorPairProblem {
        &self.reduced
    }

    pub fn project(&self, v: &ComplexVector) -> ComplexVector {
        ComplexVector::from_vec(vec![self.e0.dot(v), self.e1.dot(v)])
    }

    pub fn embed(&self, v: &ComplexVector) -> ComplexVector {
        let c = v.as_slice();
        &self.e0.scale(c[0]) + &self.e1.scale(c[1])
    }

    /// 2×2 block of `H(x)` in the plane.
    pub fn block(&self, x: &[f64]) -> Result<ComplexMatrix> {
        self.reduced.hamiltonian(x)
    }
}

/// `x = (Tr h, Tr hσx, Tr hσy, Tr hσz)/√2`, the inverse of [`pauli_assemble`].
pub fn pauli_components(h: &ComplexMatrix) -> Result<[f64; 4]> {
    if h.dim() != 2 {
        return Err(QabError::invalid("Pauli components need a 2x2 matrix"));
    }
    if !h.is_hermitian() && h.hermiticity_defect() > 1e-12 * h.max_abs().max(1.0) {
        return Err(QabError::invalid("Pauli components need a hermitian matrix"));
    }
    let s = std::f64::consts::SQRT_2;
    let (h00, h01, h11) = (h.get(0, 0).re, h.get(0, 1), h.get(1, 1).re);
    Ok([(h00 + h11) / s, 2.0 * h01.re / s, -2.0 * h01.im / s, (h00 - h11) / s])
}

/// `(x¹𝟙 + x²σx + x³σy + x⁴σz)/√2`.
pub fn pauli_assemble(x: &[f64; 4]) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let data = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new((x[0] + x[3]) * s, 0.0),
            C64::new(x[1] * s, -x[2] * s),
            C64::new(x[1] * s, x[2] * s),
            C64::new((x[0] - x[3]) * s, 0.0),
        ],
    );
    ComplexMatrix::hermitian_unchecked(data)
}

/// Eigenvalue splitting of [`pauli_assemble`]`(x)`: `√2·|(x², x³, x⁴)|`.
pub fn gap_pauli(x: &[f64]) -> Result<f64> {
    check_point(x, 4)?;
    let r2 = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    if !(r2 > 0.0) {
        return Err(QabError::ZeroGap { x: x.to_vec() });
    }
    Ok((2.0 * r2).sqrt())
}

/// General one-qubit family over the normalized Pauli basis; `C = 𝟙`.
#[derive(Debug, Clone)]
pub struct PauliFamily {
    overlap: DMatrix<f64>,
}

impl Default for PauliFamily {
    fn default() -> Self {
        PauliFamily { overlap: DMatrix::identity(4, 4) }
    }
}

impl PauliFamily {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ParametrizedHamiltonian for PauliFamily {
    fn param_dim(&self) -> usize {
        4
    }

    fn hilbert_dim(&self) -> usize {
        2
    }

    fn derivative(&self, i: usize) -> ComplexMatrix {
        let mut x = [0.0; 4];
        x[i] = 1.0;
        pauli_assemble(&x)
    }

    fn gap(&self, x: &[f64]) -> Result<f64> {
        gap_pauli(x)
    }

    fn gap_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = gap_pauli(x)?;
        Ok(vec![0.0, 2.0 * x[1] / d, 2.0 * x[2] / d, 2.0 * x[3] / d])
    }

    fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    fn evaluate(&self, x: &[f64]) -> Result<ComplexMatrix> {
        check_point(x, 4)?;
        Ok(pauli_assemble(&[x[0], x[1], x[2], x[3]]))
    }
}

/// Serializable identifier of a built-in problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum ProblemSpec {
    Grover { n: usize, marked: Option<usize> },
    Toeplitz { size: usize },
    CustomAlpha0 { alpha0: f64, dim: usize },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<ProjectorPairProblem> {
        match *self {
            ProblemSpec::Grover { n, marked } => {
                let dim = 1usize.checked_shl(n as u32).unwrap_or(0);
                build_grover(n, marked.unwrap_or(dim.saturating_sub(1)))
            }
            ProblemSpec::Toeplitz { size } => build_toeplitz(size),
            ProblemSpec::CustomAlpha0 { alpha0, dim } => build_custom(alpha0, dim),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eig;

    #[test]
    fn grover_alpha0() {
        let p = build_grover(1, 1).unwrap();
        assert!((p.alpha0() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let p = build_grover(6, 0).unwrap();
        assert!((p.alpha0() - 0.125).abs() < 1e-15);
        let p = build_grover(2, 3).unwrap();
        assert!((p.a().dot(p.b()).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grover_range_checks() {
        assert!(build_grover(0, 0).is_err());
        assert!(build_grover(13, 0).is_err());
        assert!(build_grover(2, 4).is_err());
    }

    #[test]
    fn toeplitz_small_cases() {
        let p = build_toeplitz(3).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let expected = [h, 0.0, h];
        for (z, e) in p.b().as_slice().iter().zip(expected) {
            assert!((z.re - e).abs() < 1e-12 && z.im == 0.0);
        }
        assert!((p.alpha0() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(matches!(build_toeplitz(2), Err(QabError::DegenerateProblem { .. })));
        assert!(build_toeplitz(1).is_err());
    }

    #[test]
    fn hamiltonian_endpoints() {
        let p = build_grover(2, 3).unwrap();
        let h = p.hamiltonian(&[1.0, 0.0]).unwrap();
        let eig = hermitian_eig(&h).unwrap();
        assert!(eig.values[0].abs() < 1e-14);
        assert!((eig.vector(0).dot(p.a()).norm() - 1.0).abs() < 1e-12);
        let h = p.hamiltonian(&[0.0, 1.0]).unwrap();
        let eig = hermitian_eig(&h).unwrap();
        assert!((eig.vector(0).dot(p.b()).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn n1_grover_spectrum_at_ones() {
        let p = build_grover(1, 1).unwrap();
        let eig = hermitian_eig(&p.hamiltonian(&[1.0, 1.0]).unwrap()).unwrap();
        let a0 = p.alpha0();
        // eigenvalues of 2𝟙 − |a⟩⟨a| − |b⟩⟨b| in the plane: 1 ∓ α₀
        assert!((eig.values[0] - (1.0 - a0)).abs() < 1e-12);
        assert!((eig.values[1] - (1.0 + a0)).abs() < 1e-12);
        let gap = gap_projector_pair(&[1.0, 1.0], a0).unwrap();
        assert!((eig.values[1] - eig.values[0] - gap).abs() < 1e-12);
    }

    #[test]
    fn gap_formula_examples() {
        assert!((gap_projector_pair(&[1.0, 0.0], 0.3).unwrap() - 1.0).abs() < 1e-15);
        let g = gap_projector_pair(&[0.5, 0.5], 1.0 / 2f64.sqrt()).unwrap();
        assert!((g - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(gap_projector_pair(&[0.5, 0.5], 1e-9).unwrap() < 1e-8);
        assert!(matches!(gap_projector_pair(&[0.0, 0.0], 0.3), Err(QabError::ZeroGap { .. })));
    }

    #[test]
    fn overlap_matches_traces() {
        for n in 1..=4 {
            let fam = ProjectorPairFamily::new(build_grover(n, 0).unwrap());
            let direct = overlap_by_trace(&fam);
            assert!((direct - fam.overlap()).amax() < 1e-12);
        }
        let pauli = PauliFamily::new();
        assert!((overlap_by_trace(&pauli) - DMatrix::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn effective_basis_grover_n1() {
        let p = build_grover(1, 1).unwrap();
        let eff = EffectiveTwoLevel::new(&p).unwrap();
        let coeffs = eff.project(p.a());
        let h = 0.5f64.sqrt();
        assert!((coeffs.as_slice()[0] - C64::new(h, 0.0)).norm() < 1e-12);
        assert!((coeffs.as_slice()[1] - C64::new(h, 0.0)).norm() < 1e-12);
        let back = eff.embed(&coeffs);
        assert!((&back - p.a()).norm() < 1e-12);
    }

    #[test]
    fn pauli_examples() {
        let h = ComplexMatrix::diagonal(&[0.0, 1.0]);
        let x = pauli_components(&h).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [s, 0.0, 0.0, -s];
        for (a, b) in x.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let x = pauli_components(&ComplexMatrix::identity(2)).unwrap();
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-15 && x[1..].iter().all(|v| *v == 0.0));
        assert!((gap_pauli(&[0.0, 0.0, 0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((gap_pauli(&[5.0, 0.0, 0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(gap_pauli(&[1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn problem_spec_defaults_marked_to_last() {
        let p = ProblemSpec::Grover { n: 2, marked: None }.build().unwrap();
        assert!((p.b().as_slice()[3].re - 1.0).abs() < 1e-15);
    }
}
