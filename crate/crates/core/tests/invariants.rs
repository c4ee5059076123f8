//! Property tests for the algebraic identities the numerics rely on.

use portclone::measurements::{complete, pgm};
use portclone::states::Ensemble;
use portclone::symmetry::{conjugate_by, permutation_unitary_on, Permutation};
use portclone::tensor::{
    hermitian_eig, kron_compose, partial_trace, psd_inv_sqrt, support_projector, trace_against, LabeledOperator,
    SubsystemLayout, C64,
};
use proptest::prelude::*;

const EPS: f64 = 1e-9;

fn qubits(labels: &[&str]) -> SubsystemLayout {
    SubsystemLayout::uniform(labels.iter().copied(), 2).unwrap()
}

fn matrix(layout: SubsystemLayout) -> impl Strategy<Value = LabeledOperator> {
    let n = layout.dim();
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
        LabeledOperator::new(layout.clone(), v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap()
    })
}

fn hermitian(layout: SubsystemLayout) -> impl Strategy<Value = LabeledOperator> {
    matrix(layout).prop_map(|a| a.add(&a.adjoint()).unwrap().scale(0.5))
}

/// `A A^dagger / Tr`, full rank with probability one.
fn density(layout: SubsystemLayout) -> impl Strategy<Value = LabeledOperator> {
    matrix(layout).prop_map(|a| {
        let p = a.matmul(&a.adjoint()).unwrap();
        let t = p.trace().re;
        p.scale(1.0 / t)
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((1..=n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

fn close(a: &LabeledOperator, b: &LabeledOperator) -> bool {
    a.max_abs_diff(b).unwrap() < EPS
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_is_linear(
        x in matrix(qubits(&["a", "b", "c"])),
        y in matrix(qubits(&["a", "b", "c"])),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let lhs = partial_trace(&x.scale(alpha).add(&y.scale(beta)).unwrap(), &["b"]).unwrap();
        let rhs = partial_trace(&x, &["b"]).unwrap().scale(alpha)
            .add(&partial_trace(&y, &["b"]).unwrap().scale(beta)).unwrap();
        prop_assert!(close(&lhs, &rhs));
    }

    #[test]
    fn partial_trace_preserves_trace(x in matrix(qubits(&["a", "b", "c"]))) {
        for drop in [&["a"][..], &["c"], &["a", "c"], &["a", "b", "c"]] {
            let t = partial_trace(&x, drop).unwrap().trace();
            prop_assert!((t - x.trace()).norm() < EPS);
        }
    }

    #[test]
    fn kron_trace_factorizes(a in matrix(qubits(&["a"])), b in matrix(qubits(&["b", "c"]))) {
        let ab = kron_compose(&[&a, &b]).unwrap();
        prop_assert!((ab.trace() - a.trace() * b.trace()).norm() < EPS);
        let reduced = partial_trace(&ab, &["b", "c"]).unwrap();
        prop_assert!(close(&reduced, &a.scale_complex(b.trace())));
    }

    #[test]
    fn reorder_round_trips(x in matrix(qubits(&["a", "b", "c"]))) {
        let y = x.reorder(&["c", "a", "b"]).unwrap();
        prop_assert_eq!(y.layout().labels(), &["c", "a", "b"]);
        prop_assert!(close(&y.reorder(&["a", "b", "c"]).unwrap(), &x));
        prop_assert!((y.trace() - x.trace()).norm() < EPS);
    }

    #[test]
    fn trace_against_matches_partial_trace(
        e in matrix(qubits(&["b"])),
        g in matrix(qubits(&["a", "b", "c"])),
    ) {
        let full = kron_compose(&[&e, &LabeledOperator::identity(qubits(&["a", "c"]))]).unwrap()
            .reorder(&["a", "b", "c"]).unwrap();
        let direct = partial_trace(&full.matmul(&g).unwrap(), &["b"]).unwrap();
        prop_assert!(close(&trace_against(&e, &g).unwrap(), &direct));
    }

    #[test]
    fn eigendecomposition_is_consistent(h in hermitian(qubits(&["a", "b", "c"]))) {
        let spec = hermitian_eig(&h).unwrap();
        let sum: f64 = spec.eigenvalues().iter().sum();
        prop_assert!((sum - h.trace().re).abs() < EPS);
        prop_assert!(spec.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(close(&spec.reconstruct(), &h));
        prop_assert!(spec.unitarity_deviation() < EPS);
    }

    #[test]
    fn inverse_sqrt_commutes_and_inverts(rho in density(qubits(&["a", "b"]))) {
        let r = psd_inv_sqrt(&rho, 1e-10).unwrap();
        prop_assert!(close(&r.matmul(&rho).unwrap(), &rho.matmul(&r).unwrap()));
        let sandwiched = LabeledOperator::sandwich(&r, &rho, &r).unwrap();
        prop_assert!(close(&sandwiched, &support_projector(&rho, 1e-10).unwrap()));
    }

    #[test]
    fn conjugation_matches_dense_product(
        x in matrix(qubits(&["a", "b", "c"])),
        p in permutation(3),
    ) {
        let slots = ["a", "b", "c"];
        let v = permutation_unitary_on(&p, &slots, x.layout()).unwrap();
        let dense = LabeledOperator::sandwich(&v, &x, &v.adjoint()).unwrap();
        prop_assert!(close(&conjugate_by(&p, &slots, &x).unwrap(), &dense));
    }

    #[test]
    fn conjugation_is_a_representation(
        x in matrix(qubits(&["a", "b", "c"])),
        p in permutation(3),
        q in permutation(3),
    ) {
        let slots = ["a", "b", "c"];
        let pq = p.compose(&q).unwrap();
        let twice = conjugate_by(&p, &slots, &conjugate_by(&q, &slots, &x).unwrap()).unwrap();
        prop_assert!(close(&conjugate_by(&pq, &slots, &x).unwrap(), &twice));
        prop_assert_eq!(p.compose(&p.inverse()).unwrap(), Permutation::identity(3));
    }

    #[test]
    fn completed_pgm_is_a_povm(
        r1 in density(qubits(&["a", "b"])),
        r2 in density(qubits(&["a", "b"])),
        r3 in density(qubits(&["a", "b"])),
    ) {
        let ensemble = Ensemble::uniform(vec![(1usize, r1), (2, r2), (3, r3)]).unwrap();
        let povm = complete(pgm(&ensemble).unwrap()).unwrap();
        prop_assert!(povm.completeness_deviation() < EPS);
        prop_assert!(povm.min_relative_eigenvalue().unwrap() > -EPS);
    }
}
