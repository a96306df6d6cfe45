use nalgebra::DMatrix;
use proptest::prelude::*;
use qab_core::numerics::{hermitian_eig, partial_trace, trace_norm};
use qab_core::observables::negativity;
use qab_core::{ComplexMatrix, ComplexVector, C64};

fn hermitian_from(n: usize, raw: &[f64]) -> ComplexMatrix {
    let m = DMatrix::from_fn(n, n, |i, j| C64::new(raw[2 * (i * n + j)], raw[2 * (i * n + j) + 1]));
    ComplexMatrix::hermitian((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

fn hermitian(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim).prop_flat_map(|n| prop::collection::vec(-1.0..1.0f64, 2 * n * n).prop_map(move |raw| hermitian_from(n, &raw)))
}

fn unitary(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-1.0..1.0f64, 2 * n * n).prop_map(move |raw| hermitian_from(n, &raw).unitary_exp(3.0).unwrap())
}

fn state(dim: usize) -> impl Strategy<Value = ComplexVector> {
    prop::collection::vec(-1.0..1.0f64, 2 * dim)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(|v| ComplexVector::from_vec(v.chunks(2).map(|c| C64::new(c[0], c[1])).collect()).normalized().unwrap())
}

/// Random mixed state as a weighted sum of three pure states.
fn density(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (prop::collection::vec(state(dim), 3), prop::collection::vec(0.05..1.0f64, 3)).prop_map(move |(psis, w)| {
        let total: f64 = w.iter().sum();
        let mut rho = DMatrix::zeros(dim, dim);
        for (psi, wk) in psis.iter().zip(&w) {
            rho += ComplexMatrix::projector(psi).data() * C64::new(wk / total, 0.0);
        }
        ComplexMatrix::hermitian(rho).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigendecomposition_reconstructs(a in hermitian(64)) {
        let eig = hermitian_eig(&a).unwrap();
        let v = &eig.vectors;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(a.dim(), eig.values.iter().map(|&l| C64::new(l, 0.0))));
        let back = v * d * v.adjoint();
        let err = (back - a.data()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(err <= 1e-10 * a.max_abs().max(1.0), "reconstruction error {err}");
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let ortho = (v.adjoint() * v - DMatrix::identity(a.dim(), a.dim())).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(ortho <= 1e-10);
    }

    #[test]
    fn partial_traces_compose(rho in density(8)) {
        let direct = partial_trace(&rho, &[0]).unwrap();
        let staged = partial_trace(&partial_trace(&rho, &[0, 1]).unwrap(), &[0]).unwrap();
        prop_assert!((direct.data() - staged.data()).iter().all(|z| z.norm() < 1e-12));
        let other = partial_trace(&partial_trace(&rho, &[0, 2]).unwrap(), &[0]).unwrap();
        prop_assert!((direct.data() - other.data()).iter().all(|z| z.norm() < 1e-12));
        prop_assert!((direct.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_is_unitarily_invariant(a in hermitian(8).prop_flat_map(|a| { let n = a.dim(); (Just(a), unitary(n)) })) {
        let (a, u) = a;
        let before = trace_norm(&a);
        let after = trace_norm(&a.conjugate_by(&u));
        prop_assert!((before - after).abs() <= 1e-10 * before.max(1.0), "{before} vs {after}");
    }

    #[test]
    fn negativity_ignores_local_unitaries(psi in state(4), ua in unitary(2), ub in unitary(2)) {
        let u = ua.kron(&ub);
        let rho = ComplexMatrix::projector(&psi);
        let moved = ComplexMatrix::projector(&u.apply(&psi));
        let (n0, n1) = (negativity(&rho).unwrap(), negativity(&moved).unwrap());
        prop_assert!((n0 - n1).abs() <= 1e-10, "{n0} vs {n1}");
        prop_assert!(n0 <= 0.5 + 1e-12);
    }
}

#[test]
fn bell_and_product_states() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = ComplexVector::from_real(&[h, 0.0, 0.0, h]);
    assert!((negativity(&ComplexMatrix::projector(&bell)).unwrap() - 0.5).abs() < 1e-12);
    let product = ComplexVector::from_real(&[0.5, 0.5, 0.5, 0.5]);
    assert!(negativity(&ComplexMatrix::projector(&product)).unwrap() < 1e-12);
}
